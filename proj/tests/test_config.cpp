#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "bads/errors.hpp"
#include "bads/run_config.hpp"

using namespace bads;

namespace {

std::filesystem::path write_file(const std::string& name, const std::string& text) {
  const auto file = std::filesystem::temp_directory_path() / ("bads_cfg_" + name);
  std::ofstream(file) << text;
  return file;
}

const char* kFullSgld =
    "[sgld]\n"
    "eta = 0.01\neta_w = 0.001\nbeta = 0.2\nsigma = 3\nrho_theta_t = 1\nrho_theta_m = 1\n"
    "rho_w_t = 1\nweight_decay = 0\nbatch_t = 20\nbatch_m = 5\ns_avg = 10\n"
    "noise_scale = 1\nsteps = 100\n";

}  // namespace

TEST_CASE("methods round trip") {
  for (Method m : {Method::BadsScalar, Method::BadsWeightNet, Method::Mixing, Method::MetaOnly,
                   Method::RandomSelect, Method::DuplicateMeta}) {
    CHECK(parse_method(to_string(m)) == m);
  }
  CHECK(is_bads(Method::BadsScalar));
  CHECK(!is_bads(Method::Mixing));
  CHECK_THROWS_AS(parse_method("blo"), ValidationError);
}

TEST_CASE("presets") {
  for (const std::string& name : preset_names()) {
    const RunConfig c = preset_config(name);
    CHECK(c.sgld.rho_theta_m == 1.0);
    CHECK(c.sgld.rho_w_t == 1.0);
    CHECK(c.sgld.s_avg == 10);
    CHECK(c.sigma_per_nt.has_value());
  }
  CHECK(preset_config("mnist").sgld.beta == 0.005);
  CHECK(*preset_config("mnist").sigma_per_nt == 5e-5);
  CHECK(preset_config("cifar").sgld.beta == 0.8);
  CHECK(preset_config("cifar").sgld.rho_theta_t == 0.1);
  CHECK(preset_config("webnlg").sgld.beta == 0.05);
  CHECK(*preset_config("webnlg").sigma_per_nt == 1e-5);
  CHECK_THROWS_AS(preset_config("imagenet"), ValidationError);
}

TEST_CASE("settings by key") {
  RunConfig c;
  apply_setting(c, "sgld.beta", "0.25");
  CHECK(c.sgld.beta == 0.25);
  CHECK(get_setting(c, "sgld.beta") == "0.25");
  apply_setting(c, "model.hidden", "16,8");
  CHECK(c.hidden == std::vector<std::size_t>{16, 8});
  apply_setting(c, "run.method", "meta_only");
  CHECK(c.method == Method::MetaOnly);
  apply_setting(c, "sgld.sigma_per_nt", "5e-5");
  CHECK(c.sigma_per_nt.has_value());
  apply_setting(c, "sgld.sigma", "2");
  CHECK(!c.sigma_per_nt.has_value());
  CHECK(c.sgld.sigma == 2.0);

  CHECK_THROWS_AS(apply_setting(c, "sgld.gamma", "1"), ValidationError);
  CHECK_THROWS_AS(apply_setting(c, "sgld.beta", "lots"), ValidationError);
  CHECK_THROWS_AS(apply_setting(c, "sgld.steps", "-3"), ValidationError);
  CHECK_THROWS_AS(apply_setting(c, "model.hidden", "1,2,3"), ValidationError);
  CHECK_THROWS_AS(apply_setting(c, "run.checkpoint", "first"), ValidationError);
  try {
    apply_setting(c, "nope", "1");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("sgld.beta") != std::string::npos);
  }
}

TEST_CASE("config file parsing") {
  const auto file = write_file("full.ini",
                               std::string("[scenario]\ngenerator = label_noise\nnoise_rate = 0.3\n") +
                                   kFullSgld + "[run]\nmethod = bads-scalar\n");
  const RunConfig c = parse_config_file(file, RunConfig{}, true);
  CHECK(c.scenario.generator == "label_noise");
  CHECK(c.scenario.label_noise.noise_rate == 0.3);
  CHECK(c.sgld.steps == 100);
  CHECK(c.sgld.sigma == 3.0);
  CHECK(c.method == Method::BadsScalar);

  // Without a preset every sgld field must be present.
  const auto partial = write_file("partial.ini", "[sgld]\neta = 0.1\n");
  CHECK_THROWS_AS(parse_config_file(partial, RunConfig{}, true), ValidationError);
  CHECK_NOTHROW(parse_config_file(partial, preset_config("mnist"), false));

  const auto unknown = write_file("unknown.ini", "[sgld]\nfoo = 1\n");
  CHECK_THROWS_AS(parse_config_file(unknown, RunConfig{}, false), ValidationError);
  CHECK_THROWS_AS(parse_config_file("/nonexistent/cfg.ini", RunConfig{}, false), ValidationError);
}

TEST_CASE("echo round trip") {
  RunConfig c = preset_config("cifar");
  c.seed = 17;
  apply_setting(c, "sgld.steps", "123");
  const auto file = write_file("echo.ini", echo_config(c));
  const RunConfig back = parse_config_file(file, RunConfig{}, true);
  CHECK(echo_config(back) == echo_config(c));
}
