#include "bads/run_config.hpp"

#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

namespace bads {
namespace {

struct Setting {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::logic_error&) {
    throw ValidationError(fmt::format("{}: '{}' is not a number", key, v));
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const unsigned long long u = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::logic_error&) {
    throw ValidationError(fmt::format("{}: '{}' is not a non-negative integer", key, v));
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError(fmt::format("{}: '{}' is not a boolean", key, v));
}

std::string fmt_double(double d) { return fmt::format("{}", d); }

template <class F>
Setting real(std::string key, F field) {
  return {key,
          [key, field](RunConfig& c, const std::string& v) { field(c) = to_double(key, v); },
          [field](const RunConfig& c) { return fmt_double(field(const_cast<RunConfig&>(c))); }};
}

template <class F>
Setting count(std::string key, F field) {
  return {key,
          [key, field](RunConfig& c, const std::string& v) {
            field(c) = static_cast<std::remove_reference_t<decltype(field(c))>>(to_uint(key, v));
          },
          [field](const RunConfig& c) { return fmt::format("{}", field(const_cast<RunConfig&>(c))); }};
}

// Keys shared by several generators set the field on each of them.
Setting shared_count(std::string key, std::size_t ImbalanceSpec::*a, std::size_t LabelNoiseSpec::*b,
                     std::size_t DomainSpec::*d) {
  return {key,
          [=](RunConfig& c, const std::string& v) {
            const auto n = static_cast<std::size_t>(to_uint(key, v));
            if (a) c.scenario.imbalanced.*a = n;
            if (b) c.scenario.label_noise.*b = n;
            if (d) c.scenario.domain.*d = n;
          },
          [=](const RunConfig& c) {
            const auto& g = c.scenario.generator;
            if (g == "label_noise" && b) return fmt::format("{}", c.scenario.label_noise.*b);
            if (g == "domain_mixture" && d) return fmt::format("{}", c.scenario.domain.*d);
            if (a) return fmt::format("{}", c.scenario.imbalanced.*a);
            if (b) return fmt::format("{}", c.scenario.label_noise.*b);
            return fmt::format("{}", c.scenario.domain.*d);
          }};
}

const std::vector<Setting>& registry() {
  static const std::vector<Setting> settings = [] {
    std::vector<Setting> s;
    // [scenario]
    s.push_back({"scenario.generator",
                 [](RunConfig& c, const std::string& v) {
                   static const std::set<std::string> ok = {"imbalanced", "label_noise",
                                                            "domain_mixture", "file"};
                   if (!ok.contains(v)) {
                     throw ValidationError(fmt::format(
                         "scenario.generator: '{}' (imbalanced, label_noise, domain_mixture, file)", v));
                   }
                   c.scenario.generator = v;
                 },
                 [](const RunConfig& c) { return c.scenario.generator; }});
    s.push_back({"scenario.path",
                 [](RunConfig& c, const std::string& v) { c.scenario.path = v; },
                 [](const RunConfig& c) { return c.scenario.path.string(); }});
    s.push_back({"scenario.seed",
                 [](RunConfig& c, const std::string& v) { c.scenario.seed = to_uint("scenario.seed", v); },
                 [](const RunConfig& c) { return fmt::format("{}", c.scenario_seed()); }});
    s.push_back(shared_count("scenario.dim", &ImbalanceSpec::dim, &LabelNoiseSpec::dim, &DomainSpec::dim));
    s.push_back(shared_count("scenario.n_test", &ImbalanceSpec::n_test, &LabelNoiseSpec::n_test,
                             &DomainSpec::n_test));
    s.push_back(shared_count("scenario.n_meta_per_class", &ImbalanceSpec::n_meta_per_class,
                             &LabelNoiseSpec::n_meta_per_class, nullptr));
    s.push_back(shared_count("scenario.num_classes", nullptr, &LabelNoiseSpec::num_classes,
                             &DomainSpec::num_classes));
    s.push_back({"scenario.separation",
                 [](RunConfig& c, const std::string& v) {
                   const double d = to_double("scenario.separation", v);
                   c.scenario.imbalanced.separation = d;
                   c.scenario.label_noise.separation = d;
                   c.scenario.domain.separation = d;
                 },
                 [](const RunConfig& c) {
                   const auto& g = c.scenario.generator;
                   if (g == "label_noise") return fmt_double(c.scenario.label_noise.separation);
                   if (g == "domain_mixture") return fmt_double(c.scenario.domain.separation);
                   return fmt_double(c.scenario.imbalanced.separation);
                 }});
    s.push_back(count("scenario.n_major", [](RunConfig& c) -> auto& { return c.scenario.imbalanced.n_major; }));
    s.push_back(count("scenario.n_minor", [](RunConfig& c) -> auto& { return c.scenario.imbalanced.n_minor; }));
    s.push_back(count("scenario.n_train", [](RunConfig& c) -> auto& { return c.scenario.label_noise.n_train; }));
    s.push_back(real("scenario.noise_rate", [](RunConfig& c) -> auto& { return c.scenario.label_noise.noise_rate; }));
    s.push_back({"scenario.noise_mode",
                 [](RunConfig& c, const std::string& v) { c.scenario.label_noise.mode = parse_noise_mode(v); },
                 [](const RunConfig& c) {
                   return std::string(c.scenario.label_noise.mode == NoiseMode::Symmetric ? "symmetric"
                                                                                           : "asymmetric");
                 }});
    s.push_back(count("scenario.domains_train", [](RunConfig& c) -> auto& { return c.scenario.domain.domains_train; }));
    s.push_back(count("scenario.domains_meta", [](RunConfig& c) -> auto& { return c.scenario.domain.domains_meta; }));
    s.push_back(count("scenario.n_per_domain", [](RunConfig& c) -> auto& { return c.scenario.domain.n_per_domain; }));
    s.push_back(count("scenario.n_meta_per_domain", [](RunConfig& c) -> auto& { return c.scenario.domain.n_meta_per_domain; }));
    s.push_back(real("scenario.rotation", [](RunConfig& c) -> auto& { return c.scenario.domain.rotation; }));
    s.push_back(real("scenario.domain_shift", [](RunConfig& c) -> auto& { return c.scenario.domain.domain_shift; }));
    // [model]
    s.push_back({"model.hidden",
                 [](RunConfig& c, const std::string& v) {
                   std::vector<std::size_t> widths;
                   std::stringstream ss(v);
                   std::string item;
                   while (std::getline(ss, item, ',')) {
                     if (!item.empty()) widths.push_back(static_cast<std::size_t>(to_uint("model.hidden", item)));
                   }
                   if (widths.empty() || widths.size() > 2) {
                     throw ValidationError("model.hidden: give 1 or 2 comma-separated widths");
                   }
                   c.hidden = widths;
                 },
                 [](const RunConfig& c) { return fmt::format("{}", fmt::join(c.hidden, ",")); }});
    s.push_back({"model.activation",
                 [](RunConfig& c, const std::string& v) { c.activation = parse_activation(v); },
                 [](const RunConfig& c) { return to_string(c.activation); }});
    // [sgld]
    s.push_back(real("sgld.eta", [](RunConfig& c) -> auto& { return c.sgld.eta; }));
    s.push_back(real("sgld.eta_w", [](RunConfig& c) -> auto& { return c.sgld.eta_w; }));
    s.push_back({"sgld.sigma",
                 [](RunConfig& c, const std::string& v) {
                   c.sgld.sigma = to_double("sgld.sigma", v);
                   c.sigma_per_nt.reset();
                 },
                 [](const RunConfig& c) { return fmt_double(c.sgld.sigma); }});
    s.push_back({"sgld.sigma_per_nt",
                 [](RunConfig& c, const std::string& v) {
                   if (v.empty() || v == "none") {
                     c.sigma_per_nt.reset();
                   } else {
                     c.sigma_per_nt = to_double("sgld.sigma_per_nt", v);
                   }
                 },
                 [](const RunConfig& c) {
                   return c.sigma_per_nt ? fmt_double(*c.sigma_per_nt) : std::string("none");
                 }});
    s.push_back(real("sgld.beta", [](RunConfig& c) -> auto& { return c.sgld.beta; }));
    s.push_back(real("sgld.rho_theta_t", [](RunConfig& c) -> auto& { return c.sgld.rho_theta_t; }));
    s.push_back(real("sgld.rho_theta_m", [](RunConfig& c) -> auto& { return c.sgld.rho_theta_m; }));
    s.push_back(real("sgld.rho_w_t", [](RunConfig& c) -> auto& { return c.sgld.rho_w_t; }));
    s.push_back(real("sgld.weight_decay", [](RunConfig& c) -> auto& { return c.sgld.weight_decay; }));
    s.push_back(count("sgld.batch_t", [](RunConfig& c) -> auto& { return c.sgld.batch_t; }));
    s.push_back(count("sgld.batch_m", [](RunConfig& c) -> auto& { return c.sgld.batch_m; }));
    s.push_back(count("sgld.s_avg", [](RunConfig& c) -> auto& { return c.sgld.s_avg; }));
    s.push_back(real("sgld.noise_scale", [](RunConfig& c) -> auto& { return c.sgld.noise_scale; }));
    s.push_back(count("sgld.steps", [](RunConfig& c) -> auto& { return c.sgld.steps; }));
    // [run]
    s.push_back({"run.method",
                 [](RunConfig& c, const std::string& v) { c.method = parse_method(v); },
                 [](const RunConfig& c) { return to_string(c.method); }});
    s.push_back(count("run.seed", [](RunConfig& c) -> auto& { return c.seed; }));
    s.push_back(count("run.eval_every", [](RunConfig& c) -> auto& { return c.eval_every; }));
    s.push_back(count("run.log_every", [](RunConfig& c) -> auto& { return c.log_every; }));
    s.push_back({"run.checkpoint",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "last") {
                     c.checkpoint = CheckpointPolicy::Last;
                   } else if (v == "best-on-validation") {
                     c.checkpoint = CheckpointPolicy::BestOnValidation;
                   } else {
                     throw ValidationError("run.checkpoint: 'last' or 'best-on-validation'");
                   }
                 },
                 [](const RunConfig& c) {
                   return std::string(c.checkpoint == CheckpointPolicy::Last ? "last" : "best-on-validation");
                 }});
    s.push_back(real("run.init_weight", [](RunConfig& c) -> auto& { return c.init_weight; }));
    s.push_back({"run.weight_net_labels",
                 [](RunConfig& c, const std::string& v) { c.weight_net_labels = to_bool("run.weight_net_labels", v); },
                 [](const RunConfig& c) { return std::string(c.weight_net_labels ? "true" : "false"); }});
    s.push_back(real("run.baseline_lr", [](RunConfig& c) -> auto& { return c.baseline_lr; }));
    s.push_back({"run.out",
                 [](RunConfig& c, const std::string& v) { c.out_dir = v; },
                 [](const RunConfig& c) { return c.out_dir.string(); }});
    return s;
  }();
  return settings;
}

const Setting& find_setting(const std::string& key) {
  for (const Setting& s : registry()) {
    if (s.key == key) return s;
  }
  throw ValidationError(
      fmt::format("unknown config key '{}'; valid keys: {}", key, fmt::join(config_keys(), ", ")));
}

const std::vector<std::string> kRequiredSgld = {
    "eta", "eta_w", "beta", "rho_theta_t", "rho_theta_m", "rho_w_t", "weight_decay",
    "batch_t", "batch_m", "s_avg", "noise_scale", "steps"};

}  // namespace

Method parse_method(const std::string& name) {
  if (name == "bads-scalar") return Method::BadsScalar;
  if (name == "bads-weightnet") return Method::BadsWeightNet;
  if (name == "mixing") return Method::Mixing;
  if (name == "meta_only") return Method::MetaOnly;
  if (name == "random_select") return Method::RandomSelect;
  if (name == "duplicate_meta") return Method::DuplicateMeta;
  throw ValidationError(fmt::format(
      "unknown method '{}' (bads-scalar, bads-weightnet, mixing, meta_only, random_select, "
      "duplicate_meta)",
      name));
}

std::string to_string(Method m) {
  switch (m) {
    case Method::BadsScalar: return "bads-scalar";
    case Method::BadsWeightNet: return "bads-weightnet";
    case Method::Mixing: return "mixing";
    case Method::MetaOnly: return "meta_only";
    case Method::RandomSelect: return "random_select";
    case Method::DuplicateMeta: return "duplicate_meta";
  }
  return "?";
}

bool is_bads(Method m) { return m == Method::BadsScalar || m == Method::BadsWeightNet; }

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Setting& s : registry()) keys.push_back(s.key);
  return keys;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  find_setting(key).set(cfg, value);
}

std::string get_setting(const RunConfig& cfg, const std::string& key) {
  return find_setting(key).get(cfg);
}

RunConfig parse_config_file(const std::filesystem::path& file, const RunConfig& base,
                            bool require_all_sgld) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(file.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError(fmt::format("config {}: {}", file.string(), e.what()));
  }
  RunConfig cfg = base;
  std::set<std::string> seen;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ValidationError(fmt::format("config {}: key '{}' outside a section", file.string(), section));
    }
    for (const auto& [key, value] : body) {
      const std::string dotted = section + "." + key;
      apply_setting(cfg, dotted, value.get_value<std::string>());
      seen.insert(dotted);
    }
  }
  if (require_all_sgld) {
    std::vector<std::string> missing;
    for (const auto& k : kRequiredSgld) {
      if (!seen.contains("sgld." + k)) missing.push_back("sgld." + k);
    }
    if (!seen.contains("sgld.sigma") && !seen.contains("sgld.sigma_per_nt")) {
      missing.push_back("sgld.sigma (or sgld.sigma_per_nt)");
    }
    if (!missing.empty()) {
      throw ValidationError(fmt::format("config {}: missing {} (or use --preset)", file.string(),
                                        fmt::join(missing, ", ")));
    }
  }
  return cfg;
}

std::string echo_config(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const Setting& s : registry()) {
    const std::string sec = s.key.substr(0, s.key.find('.'));
    if (sec != section) {
      out += (section.empty() ? "" : "\n") + fmt::format("[{}]\n", sec);
      section = sec;
    }
    out += fmt::format("{} = {}\n", s.key.substr(sec.size() + 1), s.get(cfg));
  }
  return out;
}

std::vector<std::string> preset_names() { return {"mnist", "cifar", "webnlg"}; }

RunConfig preset_config(const std::string& name) {
  RunConfig c;
  // Shared rows: rho_theta_m = rho_w_t = 1, s_avg = 10.
  c.sgld.rho_theta_m = 1.0;
  c.sgld.rho_w_t = 1.0;
  c.sgld.s_avg = 10;
  c.sgld.weight_decay = 0.0;
  c.method = Method::BadsWeightNet;
  c.hidden = {32};
  c.activation = Activation::Tanh;
  c.eval_every = 100;
  c.log_every = 1;
  c.sgld.noise_scale = 1e-5;
  c.sgld.batch_t = 100;
  c.sgld.batch_m = 10;
  c.sgld.steps = 3000;
  if (name == "mnist") {
    c.scenario.generator = "imbalanced";
    c.scenario.imbalanced = ImbalanceSpec{};
    c.scenario.imbalanced.dim = 2;
    c.scenario.imbalanced.separation = 3.5;
    c.hidden = {8};
    c.sgld.rho_theta_t = 1.0;
    c.sigma_per_nt = 5e-5;
    c.sgld.beta = 0.005;
    c.sgld.eta = 5e-3;
    c.sgld.eta_w = 1e-5;
    c.sgld.weight_decay = 3.0;
  } else if (name == "cifar") {
    c.scenario.generator = "label_noise";
    c.scenario.label_noise = LabelNoiseSpec{};
    c.scenario.label_noise.n_train = 2000;
    c.hidden = {96};
    c.sgld.rho_theta_t = 0.1;
    c.sigma_per_nt = 5e-5;
    c.sgld.beta = 0.8;
    c.sgld.eta = 2.5e-4;
    c.sgld.eta_w = 5e-5;
    c.weight_net_labels = true;
  } else if (name == "webnlg") {
    c.scenario.generator = "domain_mixture";
    c.scenario.domain = DomainSpec{};
    c.sgld.rho_theta_t = 1.0;
    c.sigma_per_nt = 1e-5;
    c.hidden = {4};
    c.sgld.beta = 0.05;
    c.sgld.eta = 1e-3;
    c.sgld.eta_w = 1e-7;
  } else {
    throw ValidationError(fmt::format("unknown preset '{}' (mnist, cifar, webnlg)", name));
  }
  c.baseline_lr = 0.1;
  return c;
}

}  // namespace bads
