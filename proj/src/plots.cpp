#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "bads/harness.hpp"

namespace bads {
namespace {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string line_chart(const std::string& title, const std::string& xlabel,
                       const std::string& ylabel, const std::vector<Series>& series) {
  constexpr double kW = 640, kH = 400, kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x1 = x0 + 1;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::string svg = fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
      kW, kH, kW, kH, kLeft + pw / 2, escape_xml(title));
  svg += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", kLeft,
      kTop, pw, ph);
  for (int t = 0; t <= 4; ++t) {
    const double fx = x0 + (x1 - x0) * t / 4.0, fy = y0 + (y1 - y0) * t / 4.0;
    svg += fmt::format(
        "<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\" "
        "text-anchor=\"middle\">{:.4g}</text>\n",
        sx(fx), kTop + ph + 16, fx);
    svg += fmt::format(
        "<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\" "
        "text-anchor=\"end\">{:.4g}</text>\n",
        kLeft - 6, sy(fy) + 4, fy);
    svg += fmt::format(
        "<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"#ddd\"/>\n", kLeft,
        sy(fy), kLeft + pw, sy(fy));
  }
  svg += fmt::format(
      "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
      kLeft + pw / 2, kH - 10, escape_xml(xlabel));
  svg += fmt::format(
      "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 16 {})\">{}</text>\n",
      kTop + ph / 2, kTop + ph / 2, escape_xml(ylabel));

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    svg += fmt::format("<g class=\"series\" data-name=\"{}\">\n", escape_xml(s.name));
    if (s.points.size() == 1) {
      svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n",
                         sx(s.points[0].first), sy(s.points[0].second), color);
    } else {
      svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"", color);
      for (const auto& [x, y] : s.points) svg += fmt::format("{:.2f},{:.2f} ", sx(x), sy(y));
      svg += "\"/>\n";
    }
    const double ly = kTop + 14 + 18.0 * static_cast<double>(i);
    svg += fmt::format(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n"
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n</g>\n",
        kLeft + pw + 10, ly, kLeft + pw + 30, ly, color, kLeft + pw + 36, ly + 4,
        escape_xml(s.name));
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace

std::vector<std::filesystem::path> export_plots(const TrainLog& log,
                                                const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;

  Series acc{"test accuracy", {}};
  for (const LogRow& row : log.rows) {
    if (row.test_acc) acc.points.emplace_back(static_cast<double>(row.step), *row.test_acc);
  }
  const auto acc_file = out_dir / "accuracy.svg";
  std::ofstream(acc_file, std::ios::binary) << line_chart("Test accuracy", "step", "accuracy", {acc});
  written.push_back(acc_file);

  // Minibatch means are sparse for rare tags; fall back to full-split means there.
  std::vector<Series> weights;
  bool any_weight = false;
  for (const auto& [tag, name] : log.tag_legend) {
    Series s{name, {}};
    for (const LogRow& row : log.rows) {
      auto it = row.batch_weight.find(tag);
      if (it != row.batch_weight.end() && it->second) {
        s.points.emplace_back(static_cast<double>(row.step), *it->second);
      }
    }
    if (s.points.size() < 2) {
      s.points.clear();
      for (const LogRow& row : log.rows) {
        auto it = row.all_weight.find(tag);
        if (it != row.all_weight.end() && it->second) {
          s.points.emplace_back(static_cast<double>(row.step), *it->second);
        }
      }
    }
    any_weight = any_weight || !s.points.empty();
    weights.push_back(std::move(s));
  }
  if (any_weight) {
    const auto w_file = out_dir / "weights.svg";
    std::ofstream(w_file, std::ios::binary)
        << line_chart("Mean data point weight by group", "step", "weight", weights);
    written.push_back(w_file);
  }
  return written;
}

}  // namespace bads
