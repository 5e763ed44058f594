#include "bads/train_log.hpp"

#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "bads/engine.hpp"

namespace bads {
namespace {

const std::vector<std::string> kFixedColumns = {
    "step", "train_loss_weighted", "train_loss", "meta_loss", "test_acc",
    "test_loss", "w_bar", "w_sum_est"};

std::string cell(const std::optional<double>& v) {
  return v ? fmt::format("{:.10g}", *v) : std::string();
}

std::optional<double> parse_cell(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    return std::stod(s);
  } catch (const std::logic_error&) {
    throw ValidationError(fmt::format("log.csv: unparsable value '{}'", s));
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

EvalResult evaluate(const ModelParams& params, const Split& split) {
  if (split.size() == 0) throw ValidationError("cannot evaluate on an empty split");
  const ForwardTrace trace = forward(params, split.features);
  const std::vector<double> losses = per_example_losses(trace, split.labels);
  const std::vector<int> predicted = predict(trace);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == split.labels[i];
  const double n = static_cast<double>(split.size());
  return {static_cast<double>(correct) / n, std::accumulate(losses.begin(), losses.end(), 0.0) / n};
}

std::map<int, std::optional<double>> tag_means(const std::map<int, std::string>& legend,
                                               std::span<const int> tags,
                                               std::span<const std::size_t> ids,
                                               std::span<const double> values) {
  std::map<int, std::pair<double, std::size_t>> acc;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto& [sum, count] = acc[tags[ids[i]]];
    sum += values[i];
    ++count;
  }
  std::map<int, std::optional<double>> out;
  for (const auto& [tag, name] : legend) {
    auto it = acc.find(tag);
    if (it != acc.end() && it->second.second > 0) {
      out[tag] = it->second.first / static_cast<double>(it->second.second);
    } else {
      out[tag] = std::nullopt;
    }
  }
  return out;
}

void write_log_csv(const TrainLog& log, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ValidationError(fmt::format("cannot write {}", file.string()));
  std::string header;
  for (const auto& c : kFixedColumns) header += (header.empty() ? "" : ",") + c;
  for (const auto& [tag, name] : log.tag_legend) header += ",w_batch_" + name;
  for (const auto& [tag, name] : log.tag_legend) header += ",w_all_" + name;
  out << header << '\n';
  for (const LogRow& r : log.rows) {
    out << r.step << ',' << cell(r.train_loss_weighted) << ',' << cell(r.train_loss) << ','
        << cell(r.meta_loss) << ',' << cell(r.test_acc) << ',' << cell(r.test_loss) << ','
        << cell(r.w_bar) << ',' << cell(r.w_sum_est);
    for (const auto& [tag, name] : log.tag_legend) {
      auto it = r.batch_weight.find(tag);
      out << ',' << (it == r.batch_weight.end() ? std::string() : cell(it->second));
    }
    for (const auto& [tag, name] : log.tag_legend) {
      auto it = r.all_weight.find(tag);
      out << ',' << (it == r.all_weight.end() ? std::string() : cell(it->second));
    }
    out << '\n';
  }
}

void write_timing_csv(const TrainLog& log, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  out << "step,wall_ms\n";
  for (const LogRow& r : log.rows) out << r.step << ',' << fmt::format("{:.3f}", r.wall_ms) << '\n';
}

TrainLog read_log_csv(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot read {}", file.string()));
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("log.csv is empty");
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < kFixedColumns.size() ||
      !std::equal(kFixedColumns.begin(), kFixedColumns.end(), header.begin())) {
    throw ValidationError("log.csv: unexpected header");
  }
  TrainLog log;
  std::vector<int> batch_cols, all_cols;  // tag per column
  int next_tag = 0;
  std::map<std::string, int> by_name;
  for (std::size_t c = kFixedColumns.size(); c < header.size(); ++c) {
    const std::string& h = header[c];
    if (h.rfind("w_batch_", 0) == 0) {
      const std::string name = h.substr(8);
      by_name[name] = next_tag;
      log.tag_legend[next_tag++] = name;
      batch_cols.push_back(by_name[name]);
    } else if (h.rfind("w_all_", 0) == 0) {
      auto it = by_name.find(h.substr(6));
      if (it == by_name.end()) throw ValidationError("log.csv: w_all column without w_batch");
      all_cols.push_back(it->second);
    } else {
      throw ValidationError(fmt::format("log.csv: unknown column '{}'", h));
    }
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != header.size()) throw ValidationError("log.csv: ragged row");
    LogRow r;
    r.step = std::stoul(f[0]);
    r.train_loss_weighted = parse_cell(f[1]);
    r.train_loss = parse_cell(f[2]);
    r.meta_loss = parse_cell(f[3]);
    r.test_acc = parse_cell(f[4]);
    r.test_loss = parse_cell(f[5]);
    r.w_bar = parse_cell(f[6]);
    r.w_sum_est = parse_cell(f[7]);
    std::size_t c = kFixedColumns.size();
    for (int tag : batch_cols) r.batch_weight[tag] = parse_cell(f[c++]);
    for (int tag : all_cols) r.all_weight[tag] = parse_cell(f[c++]);
    log.rows.push_back(std::move(r));
  }
  return log;
}

}  // namespace bads

namespace bads {

void fill_eval(LogRow& row, const ModelParams& params, const Scenario& scenario) {
  const EvalResult test = evaluate(params, scenario.test);
  row.test_acc = test.accuracy;
  row.test_loss = test.mean_loss;
  row.meta_loss = evaluate(params, scenario.meta).mean_loss;
}

}  // namespace bads
