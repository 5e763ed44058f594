#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "bads/engine.hpp"
#include "bads/matrix.hpp"

namespace bads {

/// Features, labels and ground-truth group tags for one split.
struct Split {
  Matrix features;
  std::vector<int> labels;
  std::vector<int> tags;

  std::size_t size() const { return features.rows(); }
  Batch batch(std::span<const std::size_t> ids) const;
  Batch all() const;
  friend bool operator==(const Split&, const Split&) = default;
};

struct Scenario {
  std::string kind;
  Split train;
  Split meta;
  Split test;
  std::size_t num_classes = 2;
  bool binary = false;  // single logistic output instead of a softmax
  std::map<int, std::string> tag_legend;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// Per-tag counts for a split; keys cover every tag that appears.
std::map<int, std::size_t> tag_counts(const Split& split);

struct ImbalanceSpec {
  std::uint64_t seed = 0;
  std::size_t n_major = 995;
  std::size_t n_minor = 5;
  std::size_t n_meta_per_class = 5;
  double separation = 4.0;  // distance between class means, in units of the within-class std
  std::size_t dim = 8;
  std::size_t n_test = 2000;
};

/// Two isotropic Gaussian classes. Label 0 (tag "majority") dominates the
/// train split; meta and test are balanced.
Scenario gen_imbalanced(const ImbalanceSpec& spec);

enum class NoiseMode { Symmetric, Asymmetric };
NoiseMode parse_noise_mode(const std::string& name);

struct LabelNoiseSpec {
  std::uint64_t seed = 0;
  std::size_t n_train = 4000;
  std::size_t num_classes = 10;
  double noise_rate = 0.5;
  NoiseMode mode = NoiseMode::Symmetric;
  std::size_t dim = 8;
  double separation = 4.0;
  std::size_t n_meta_per_class = 10;
  std::size_t n_test = 2000;
};

/// Class-conditional Gaussians with floor(noise_rate * n_train) corrupted train
/// labels. Symmetric noise moves a label uniformly to one of the other
/// classes; asymmetric noise moves class c to (c + 1) mod K. Meta and test
/// are clean.
Scenario gen_label_noise(const LabelNoiseSpec& spec);

struct DomainSpec {
  std::uint64_t seed = 0;
  std::size_t domains_train = 2;
  std::size_t domains_meta = 1;
  std::size_t n_per_domain = 500;
  std::size_t num_classes = 3;
  std::size_t dim = 8;
  double separation = 4.0;
  double rotation = 1.5707963267948966;  // angle between target and off-domain class planes
  double domain_shift = 1.0;             // offset of each domain along nuisance axes
  std::size_t n_meta_per_domain = 30;
  std::size_t n_test = 2000;
};

/// Train domain 0 ("aligned") places its classes in the same plane as the
/// meta/test domains, shifted along a nuisance axis. Every other train domain
/// ("off-k") rotates the class plane by `rotation` into its own orthogonal
/// plane, so its labels carry no signal along the target directions.
Scenario gen_domain_mixture(const DomainSpec& spec);

// CSV bundle: train.csv, meta.csv, test.csv (id,tag,label,f0..f{d-1}) plus
// scenario.json (kind, num_classes, binary, tag legend).
void write_scenario(const Scenario& scenario, const std::filesystem::path& dir);
Scenario read_scenario(const std::filesystem::path& dir);

void write_split_csv(const Split& split, const std::filesystem::path& file);
Split read_split_csv(const std::filesystem::path& file);

}  // namespace bads
