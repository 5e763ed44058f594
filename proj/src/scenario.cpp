#include "bads/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace bads {
namespace {

// Accumulates rows drawn around class means with unit within-class noise.
struct SplitBuilder {
  std::size_t dim;
  Rng rng;
  std::vector<double> values = {};
  std::vector<int> labels = {};
  std::vector<int> tags = {};

  void add(const std::vector<double>& mean, int label, int tag) {
    for (std::size_t k = 0; k < dim; ++k) values.push_back(mean[k] + rng.normal());
    labels.push_back(label);
    tags.push_back(tag);
  }

  Split finish() {
    const std::size_t n = labels.size();
    return Split{Matrix(n, dim, std::move(values)), std::move(labels), std::move(tags)};
  }
};

// Fisher-Yates permutation of rows, keeping label and tag aligned.
void shuffle_split(Split& split, Rng& rng) {
  const std::size_t n = split.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  Split out;
  out.features = gather_rows(split.features, order);
  for (std::size_t i : order) {
    out.labels.push_back(split.labels[i]);
    out.tags.push_back(split.tags[i]);
  }
  split = std::move(out);
}

std::vector<double> unit(std::size_t dim, std::size_t axis, double scale) {
  std::vector<double> v(dim, 0.0);
  v[axis] = scale;
  return v;
}

}  // namespace

Batch Split::batch(std::span<const std::size_t> ids) const {
  Batch b;
  b.features = gather_rows(features, ids);
  b.ids.assign(ids.begin(), ids.end());
  b.labels.reserve(ids.size());
  for (std::size_t i : ids) b.labels.push_back(labels[i]);
  return b;
}

Batch Split::all() const {
  std::vector<std::size_t> ids(size());
  std::iota(ids.begin(), ids.end(), 0);
  return batch(ids);
}

std::map<int, std::size_t> tag_counts(const Split& split) {
  std::map<int, std::size_t> counts;
  for (int t : split.tags) ++counts[t];
  return counts;
}

Scenario gen_imbalanced(const ImbalanceSpec& spec) {
  if (spec.n_major == 0 || spec.n_minor == 0) {
    throw ValidationError("imbalanced scenario needs n_major >= 1 and n_minor >= 1");
  }
  if (spec.n_meta_per_class == 0) throw ValidationError("n_meta_per_class must be >= 1");
  if (spec.dim < 2 || spec.dim > 16) throw ValidationError("dim must lie in [2, 16]");
  if (!(spec.separation > 0.0)) throw ValidationError("separation must be > 0");
  if (spec.n_test == 0) throw ValidationError("n_test must be >= 1");

  const Rng root = Rng(spec.seed).substream(streams::kData);
  const std::vector<std::vector<double>> means = {unit(spec.dim, 0, -spec.separation / 2),
                                                  unit(spec.dim, 0, spec.separation / 2)};
  Scenario s;
  s.kind = "imbalanced";
  s.num_classes = 2;
  s.binary = true;
  s.tag_legend = {{0, "majority"}, {1, "minority"}};

  SplitBuilder train{spec.dim, root.substream(1)};
  for (std::size_t i = 0; i < spec.n_major; ++i) train.add(means[0], 0, 0);
  for (std::size_t i = 0; i < spec.n_minor; ++i) train.add(means[1], 1, 1);
  s.train = train.finish();

  SplitBuilder meta{spec.dim, root.substream(2)};
  for (std::size_t i = 0; i < 2 * spec.n_meta_per_class; ++i) {
    const int c = static_cast<int>(i % 2);
    meta.add(means[c], c, c);
  }
  s.meta = meta.finish();

  SplitBuilder test{spec.dim, root.substream(3)};
  for (std::size_t i = 0; i < spec.n_test; ++i) {
    const int c = static_cast<int>(i % 2);
    test.add(means[c], c, c);
  }
  s.test = test.finish();

  Rng order = root.substream(4);
  shuffle_split(s.train, order);
  return s;
}

NoiseMode parse_noise_mode(const std::string& name) {
  if (name == "symmetric") return NoiseMode::Symmetric;
  if (name == "asymmetric") return NoiseMode::Asymmetric;
  throw ValidationError(fmt::format("unknown noise mode '{}' (symmetric, asymmetric)", name));
}

Scenario gen_label_noise(const LabelNoiseSpec& spec) {
  if (!(spec.noise_rate >= 0.0 && spec.noise_rate < 1.0)) {
    throw ValidationError("noise_rate must lie in [0, 1)");
  }
  if (spec.num_classes < 2) throw ValidationError("label-noise scenario needs >= 2 classes");
  if (spec.num_classes > 2 * spec.dim) {
    throw ValidationError(fmt::format("{} classes need dim >= {}", spec.num_classes,
                                      (spec.num_classes + 1) / 2));
  }
  if (spec.n_train == 0 || spec.n_meta_per_class == 0 || spec.n_test == 0) {
    throw ValidationError("label-noise scenario needs positive split sizes");
  }

  // Class k sits at +-r on axis k/2; distinct means are at least `separation` apart.
  const double r = spec.separation / std::numbers::sqrt2;
  std::vector<std::vector<double>> means;
  for (std::size_t k = 0; k < spec.num_classes; ++k) {
    means.push_back(unit(spec.dim, k / 2, k % 2 == 0 ? r : -r));
  }
  const int classes = static_cast<int>(spec.num_classes);
  const Rng root = Rng(spec.seed).substream(streams::kData);

  Scenario s;
  s.kind = "label_noise";
  s.num_classes = spec.num_classes;
  s.tag_legend = {{0, "clean"}, {1, "noisy"}};

  SplitBuilder train{spec.dim, root.substream(1)};
  for (std::size_t i = 0; i < spec.n_train; ++i) {
    const int c = static_cast<int>(i % spec.num_classes);
    train.add(means[c], c, 0);
  }
  s.train = train.finish();
  Rng order = root.substream(4);
  shuffle_split(s.train, order);

  // Corrupt exactly floor(rate * n) labels at positions chosen by a partial shuffle.
  const auto n_noisy = static_cast<std::size_t>(std::floor(spec.noise_rate * static_cast<double>(spec.n_train) + 1e-9));
  Rng flip = root.substream(5);
  std::vector<std::size_t> pos(spec.n_train);
  std::iota(pos.begin(), pos.end(), 0);
  for (std::size_t i = 0; i < n_noisy; ++i) {
    std::swap(pos[i], pos[i + flip.below(spec.n_train - i)]);
    const std::size_t row = pos[i];
    const int c = s.train.labels[row];
    if (spec.mode == NoiseMode::Symmetric) {
      s.train.labels[row] = (c + 1 + static_cast<int>(flip.below(spec.num_classes - 1))) % classes;
    } else {
      s.train.labels[row] = (c + 1) % classes;
    }
    s.train.tags[row] = 1;
  }

  SplitBuilder meta{spec.dim, root.substream(2)};
  for (std::size_t i = 0; i < spec.n_meta_per_class * spec.num_classes; ++i) {
    const int c = static_cast<int>(i % spec.num_classes);
    meta.add(means[c], c, 0);
  }
  s.meta = meta.finish();
  SplitBuilder test{spec.dim, root.substream(3)};
  for (std::size_t i = 0; i < spec.n_test; ++i) {
    const int c = static_cast<int>(i % spec.num_classes);
    test.add(means[c], c, 0);
  }
  s.test = test.finish();
  return s;
}

Scenario gen_domain_mixture(const DomainSpec& spec) {
  if (spec.domains_train < 2) throw ValidationError("domain mixture needs >= 2 train domains");
  if (spec.domains_meta < 1) throw ValidationError("domain mixture needs >= 1 meta domain");
  if (spec.num_classes < 2) throw ValidationError("domain mixture needs >= 2 classes");
  if (spec.n_per_domain == 0 || spec.n_meta_per_domain == 0 || spec.n_test == 0) {
    throw ValidationError("domain mixture needs positive split sizes");
  }
  // Axes 0-1 hold the target class plane, off domain k uses axes 2k..2k+1, and
  // two trailing nuisance axes carry the domain offsets.
  const std::size_t needed = 2 * spec.domains_train + 2;
  if (spec.dim < needed) {
    throw ValidationError(
        fmt::format("{} train domains need dim >= {}", spec.domains_train, needed));
  }
  const std::size_t train_axis = spec.dim - 2;
  const std::size_t meta_axis = spec.dim - 1;
  const double radius =
      spec.separation / (2.0 * std::sin(std::numbers::pi / static_cast<double>(spec.num_classes)));

  auto class_mean = [&](std::size_t domain_plane, double angle, int c) {
    std::vector<double> m(spec.dim, 0.0);
    const double phase = 2.0 * std::numbers::pi * c / static_cast<double>(spec.num_classes);
    const double x = radius * std::cos(phase);
    const double y = radius * std::sin(phase);
    // Rotate the target plane (axes 0,1) toward the domain's plane by `angle`.
    const double ca = std::cos(angle), sa = std::sin(angle);
    m[0] += ca * x;
    m[1] += ca * y;
    if (domain_plane > 0) {
      m[2 * domain_plane] += sa * x;
      m[2 * domain_plane + 1] += sa * y;
    }
    return m;
  };

  const Rng root = Rng(spec.seed).substream(streams::kData);
  Scenario s;
  s.kind = "domain_mixture";
  s.num_classes = spec.num_classes;
  s.tag_legend[0] = "aligned";
  for (std::size_t d = 1; d < spec.domains_train; ++d) {
    s.tag_legend[static_cast<int>(d)] = spec.domains_train == 2 ? "off" : fmt::format("off{}", d);
  }

  SplitBuilder train{spec.dim, root.substream(1)};
  for (std::size_t d = 0; d < spec.domains_train; ++d) {
    const double angle = d == 0 ? 0.0 : spec.rotation;
    for (std::size_t i = 0; i < spec.n_per_domain; ++i) {
      const int c = static_cast<int>(i % spec.num_classes);
      std::vector<double> m = class_mean(d, angle, c);
      m[train_axis] += spec.domain_shift;
      train.add(m, c, static_cast<int>(d));
    }
  }
  s.train = train.finish();
  Rng order = root.substream(4);
  shuffle_split(s.train, order);

  // Meta domain j is offset by j * domain_shift on its own nuisance axis.
  auto target_mean = [&](std::size_t j, int c) {
    std::vector<double> m = class_mean(0, 0.0, c);
    m[meta_axis] += spec.domain_shift * static_cast<double>(j);
    return m;
  };
  SplitBuilder meta{spec.dim, root.substream(2)};
  for (std::size_t j = 0; j < spec.domains_meta; ++j) {
    for (std::size_t i = 0; i < spec.n_meta_per_domain; ++i) {
      const int c = static_cast<int>(i % spec.num_classes);
      meta.add(target_mean(j, c), c, 0);
    }
  }
  s.meta = meta.finish();
  SplitBuilder test{spec.dim, root.substream(3)};
  for (std::size_t i = 0; i < spec.n_test; ++i) {
    const std::size_t j = i % spec.domains_meta;
    const int c = static_cast<int>((i / spec.domains_meta) % spec.num_classes);
    test.add(target_mean(j, c), c, 0);
  }
  s.test = test.finish();
  return s;
}

void write_split_csv(const Split& split, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ValidationError(fmt::format("cannot write {}", file.string()));
  out << "id,tag,label";
  for (std::size_t k = 0; k < split.features.cols(); ++k) out << ",f" << k;
  out << '\n';
  for (std::size_t i = 0; i < split.size(); ++i) {
    out << i << ',' << split.tags[i] << ',' << split.labels[i];
    for (double v : split.features.row(i)) out << ',' << fmt::format("{:.17g}", v);
    out << '\n';
  }
}

Split read_split_csv(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot read {}", file.string()));
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(fmt::format("{} is empty", file.string()));
  const auto dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) - 2;
  if (line.rfind("id,tag,label", 0) != 0) {
    throw ValidationError(fmt::format("{}: header must start with id,tag,label", file.string()));
  }
  Split split;
  std::vector<double> values;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != dim + 3) {
      throw ValidationError(fmt::format("{}: row {} has {} fields, expected {}", file.string(),
                                        row, cells.size(), dim + 3));
    }
    try {
      if (std::stoul(cells[0]) != row) {
        throw ValidationError(fmt::format("{}: ids must be 0..n-1 in order", file.string()));
      }
      split.tags.push_back(std::stoi(cells[1]));
      split.labels.push_back(std::stoi(cells[2]));
      for (std::size_t k = 0; k < dim; ++k) values.push_back(std::stod(cells[3 + k]));
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const ValidationError*>(&e) != nullptr) throw;
      throw ValidationError(fmt::format("{}: unparsable field in row {}", file.string(), row));
    }
    ++row;
  }
  split.features = Matrix(row, dim, std::move(values));
  return split;
}

void write_scenario(const Scenario& scenario, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_split_csv(scenario.train, dir / "train.csv");
  write_split_csv(scenario.meta, dir / "meta.csv");
  write_split_csv(scenario.test, dir / "test.csv");
  nlohmann::ordered_json j;
  j["kind"] = scenario.kind;
  j["num_classes"] = scenario.num_classes;
  j["binary"] = scenario.binary;
  nlohmann::ordered_json legend = nlohmann::ordered_json::object();
  for (const auto& [tag, name] : scenario.tag_legend) legend[std::to_string(tag)] = name;
  j["tag_legend"] = legend;
  std::ofstream out(dir / "scenario.json", std::ios::binary);
  out << j.dump(2) << '\n';
}

Scenario read_scenario(const std::filesystem::path& dir) {
  std::ifstream in(dir / "scenario.json");
  if (!in) throw ValidationError(fmt::format("no scenario.json in {}", dir.string()));
  Scenario s;
  try {
    const auto j = nlohmann::json::parse(in);
    s.kind = j.at("kind").get<std::string>();
    s.num_classes = j.at("num_classes").get<std::size_t>();
    s.binary = j.at("binary").get<bool>();
    for (const auto& [tag, name] : j.at("tag_legend").items()) {
      s.tag_legend[std::stoi(tag)] = name.get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("bad scenario.json: {}", e.what()));
  }
  s.train = read_split_csv(dir / "train.csv");
  s.meta = read_split_csv(dir / "meta.csv");
  s.test = read_split_csv(dir / "test.csv");
  return s;
}

}  // namespace bads
