// Command-line front end: data generation, training, evaluation, sweeps,
// plotting and the posterior check.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "bads/errors.hpp"
#include "bads/harness.hpp"
#include "bads/posterior_lab.hpp"

namespace fs = std::filesystem;
using namespace bads;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitValidation = 2;
constexpr int kExitDivergence = 3;

struct CommonOptions {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_out = true) {
  cmd->add_option("--config", o.config, "key = value config file");
  cmd->add_option("--preset", o.preset, "hyperparameter preset")
      ->check(CLI::IsMember(preset_names()));
  cmd->add_option("--seed", o.seed, "run seed");
  if (with_out) cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--set", o.sets, "override, key=value (repeatable)");
}

RunConfig load_config(const CommonOptions& o) {
  if (o.config.empty() && o.preset.empty()) {
    throw ValidationError("give --config, --preset, or both");
  }
  RunConfig cfg = o.preset.empty() ? RunConfig{} : preset_config(o.preset);
  if (!o.config.empty()) cfg = parse_config_file(o.config, cfg, o.preset.empty());
  for (const std::string& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError(fmt::format("--set expects key=value, got '{}'", kv));
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (!is_bads(cfg.method) && o.preset.empty()) {
    std::cerr << "note: sigma, beta and the rho constants are unused by baseline methods\n";
  }
  return cfg;
}

void print_final(const RunResult& r) {
  const LogRow& last = r.log.rows.back();
  nlohmann::ordered_json j;
  j["steps"] = last.step;
  if (last.test_acc) j["test_acc"] = *last.test_acc;
  if (last.test_loss) j["test_loss"] = *last.test_loss;
  if (last.meta_loss) j["meta_loss"] = *last.meta_loss;
  for (const auto& [tag, w] : final_tag_means(r)) j["w_" + r.scenario.tag_legend.at(tag)] = w;
  std::cout << j.dump() << '\n';
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const std::string item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian data point selection experiments"};
  app.require_subcommand(1);

  CommonOptions gen_o, train_o, sweep_o;
  auto* gen = app.add_subcommand("gen-data", "write a synthetic scenario to --out");
  add_common(gen, gen_o);

  auto* train = app.add_subcommand("train", "train one configuration");
  add_common(train, train_o);

  std::string model_path, data_dir, split_name = "test";
  auto* eval = app.add_subcommand("evaluate", "accuracy and loss of a saved model");
  eval->add_option("--model", model_path, "model_final.json")->required();
  eval->add_option("--data", data_dir, "scenario directory written by gen-data")->required();
  eval->add_option("--split", split_name, "train, meta or test")
      ->check(CLI::IsMember({"train", "meta", "test"}));

  std::string axis, values;
  auto* sw = app.add_subcommand("sweep", "one run per value of a config key");
  add_common(sw, sweep_o);
  sw->add_option("--axis", axis, "config key to vary")->required();
  sw->add_option("--values", values, "comma-separated values")->required();

  std::string log_path, plot_out;
  auto* plot = app.add_subcommand("plot", "render SVG charts from a log.csv");
  plot->add_option("--log", log_path, "log.csv")->required();
  plot->add_option("--out", plot_out, "output directory");

  VerifyConfig vcfg;
  std::string verify_out = ".";
  std::string etas;
  auto* verify = app.add_subcommand("verify-posterior", "compare SGLD chains to a grid posterior");
  verify->add_option("--seed", vcfg.seed, "chain seed");
  verify->add_option("--out", verify_out, "directory for posterior_report.json");
  verify->add_option("--steps", vcfg.steps, "chain length");
  verify->add_option("--resolution", vcfg.resolution, "grid cells per axis");
  verify->add_option("--etas", etas, "comma-separated step sizes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*gen) {
      const RunConfig cfg = load_config(gen_o);
      if (cfg.out_dir.empty()) throw ValidationError("gen-data needs --out");
      const Scenario sc = build_scenario(cfg);
      write_scenario(sc, cfg.out_dir);
      std::cout << fmt::format("train {} meta {} test {}\n", sc.train.size(), sc.meta.size(), sc.test.size());
    } else if (*train) {
      const RunConfig cfg = load_config(train_o);
      print_final(run_experiment(cfg));
    } else if (*eval) {
      const ModelParams params = read_model_json(model_path);
      const Scenario sc = read_scenario(data_dir);
      const Split& split = split_name == "train" ? sc.train : split_name == "meta" ? sc.meta : sc.test;
      if (split.features.cols() != params.input_width()) {
        throw ValidationError(fmt::format("model expects {} features, data has {}",
                                          params.input_width(), split.features.cols()));
      }
      const EvalResult r = evaluate(params, split);
      std::cout << nlohmann::ordered_json{{"split", split_name}, {"accuracy", r.accuracy}, {"mean_loss", r.mean_loss}}.dump()
                << '\n';
    } else if (*sw) {
      const RunConfig cfg = load_config(sweep_o);
      for (const SweepRow& row : sweep(cfg, axis, split_list(values))) {
        std::cout << fmt::format("{}={} test_acc={}\n", axis, row.value,
                                 row.test_acc ? fmt::format("{:.4f}", *row.test_acc) : "");
      }
    } else if (*plot) {
      const TrainLog log = read_log_csv(log_path);
      if (log.rows.empty()) throw ValidationError("log has no rows");
      const fs::path out = plot_out.empty() ? fs::path(log_path).parent_path() : fs::path(plot_out);
      for (const auto& f : export_plots(log, out)) std::cout << f.string() << '\n';
    } else if (*verify) {
      if (!etas.empty()) {
        vcfg.etas.clear();
        for (const auto& e : split_list(etas)) vcfg.etas.push_back(std::stod(e));
      }
      const VerifyReport report = verify_posterior(MicroModel{}, vcfg);
      const fs::path file = fs::path(verify_out) / "posterior_report.json";
      write_report_json(report, file);
      for (std::size_t k = 0; k < report.tv.size(); ++k) {
        std::cout << fmt::format("eta {:g}: max marginal TV {:.4f}\n", vcfg.etas[k], report.tv[k].max);
      }
      std::cout << (report.passed() ? "posterior check passed\n" : "posterior check FAILED\n");
      return report.passed() ? kExitOk : kExitCheckFailed;
    }
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const ValidationError& e) {
    std::cerr << "invalid: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::out_of_range& e) {
    std::cerr << "invalid: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}
