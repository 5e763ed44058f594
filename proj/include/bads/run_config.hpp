#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bads/engine.hpp"
#include "bads/nn.hpp"
#include "bads/scenario.hpp"

namespace bads {

enum class Method { BadsScalar, BadsWeightNet, Mixing, MetaOnly, RandomSelect, DuplicateMeta };
enum class CheckpointPolicy { Last, BestOnValidation };

Method parse_method(const std::string& name);
std::string to_string(Method m);
bool is_bads(Method m);

struct ScenarioConfig {
  std::string generator = "imbalanced";  // imbalanced | label_noise | domain_mixture | file
  std::filesystem::path path;            // for generator = file
  std::optional<std::uint64_t> seed;     // defaults to the run seed
  ImbalanceSpec imbalanced;
  LabelNoiseSpec label_noise;
  DomainSpec domain;
};

struct RunConfig {
  ScenarioConfig scenario;
  Method method = Method::BadsWeightNet;
  SgldConfig sgld;
  std::optional<double> sigma_per_nt;  // when set, sigma = sigma_per_nt * N_t
  std::vector<std::size_t> hidden = {32};
  Activation activation = Activation::Tanh;
  double init_weight = 0.5;
  bool weight_net_labels = false;
  double baseline_lr = 0.1;
  std::size_t eval_every = 100;
  std::size_t log_every = 1;
  CheckpointPolicy checkpoint = CheckpointPolicy::Last;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;

  std::uint64_t scenario_seed() const { return scenario.seed.value_or(seed); }
};

/// Table-4 style preset rows (mnist, cifar, webnlg) mapped onto the synthetic
/// scenarios at desk scale.
RunConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

/// Dotted keys ("sgld.beta", "scenario.noise_rate", ...) accepted by config
/// files, --set overrides and sweep axes.
std::vector<std::string> config_keys();
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_setting(const RunConfig& cfg, const std::string& key);

/// Parses a `key = value` file with [scenario], [model], [sgld] and [run]
/// sections on top of `base`. Without a preset every [sgld] hyperparameter must
/// be given explicitly.
RunConfig parse_config_file(const std::filesystem::path& file, const RunConfig& base,
                            bool require_all_sgld);

// Every key with its resolved value, in the same format parse_config_file reads.
std::string echo_config(const RunConfig& cfg);

}  // namespace bads
