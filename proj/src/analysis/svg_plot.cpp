#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "navscale/analysis.hpp"

namespace navscale::analysis {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;
constexpr std::array<const char*, 6> kColors{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  double lo;
  double hi;
  double px0;
  double px1;
  [[nodiscard]] double map(double v) const {
    return px0 + (std::log10(v) - lo) / (hi - lo) * (px1 - px0);
  }
};

std::pair<double, double> log_range(double mn, double mx) {
  double lo = std::log10(mn);
  double hi = std::log10(mx);
  if (hi - lo < 1e-9) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.08 * (hi - lo);
  return {lo - pad, hi + pad};
}

std::vector<double> ticks(double lo, double hi) {
  std::vector<double> out;
  for (int e = static_cast<int>(std::floor(lo)); e <= static_cast<int>(std::ceil(hi)); ++e) {
    for (double m : {1.0, 2.0, 5.0}) {
      const double v = m * std::pow(10.0, e);
      const double l = std::log10(v);
      if (l >= lo && l <= hi) out.push_back(v);
    }
  }
  return out;
}

}  // namespace

std::string svg_loglog(std::span<const PlotSeries> series, const std::string& title, const std::string& x_label,
                       const std::string& y_label) {
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = 0.0;
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = 0.0;
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      if (p.x <= 0.0 || p.y <= 0.0) continue;
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  }
  if (xmax == 0.0) {
    xmin = ymin = 0.1;
    xmax = ymax = 1.0;
  }
  const auto [xl, xh] = log_range(xmin, xmax);
  const auto [yl, yh] = log_range(ymin, ymax);
  const Axis ax{xl, xh, kLeft, kWidth - kRight};
  const Axis ay{yl, yh, kHeight - kBottom, kTop};

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      kWidth, kHeight);
  svg += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                     (ax.px0 + ax.px1) / 2.0, escape(title));
  for (double v : ticks(xl, xh)) {
    const double x = ax.map(v);
    svg += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"#ddd\"/>\n", x, ay.px1, ay.px0);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{:g}</text>\n", x, ay.px0 + 16, v);
  }
  for (double v : ticks(yl, yh)) {
    const double y = ay.map(v);
    svg += fmt::format("<line x1=\"{1}\" y1=\"{0:.2f}\" x2=\"{2}\" y2=\"{0:.2f}\" stroke=\"#ddd\"/>\n", y, ax.px0, ax.px1);
    svg += fmt::format("<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">{:g}</text>\n", ax.px0 - 6, y + 4, v);
  }
  svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", ax.px0,
                     ay.px1, ax.px1 - ax.px0, ay.px0 - ay.px1);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (ax.px0 + ax.px1) / 2.0,
                     kHeight - 15, escape(x_label));
  svg += fmt::format("<text transform=\"translate(18,{}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
                     (ay.px0 + ay.px1) / 2.0, escape(y_label));

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kColors[i % kColors.size()];
    if (s.fit) {
      const double x0 = std::pow(10.0, xl);
      const double x1 = std::pow(10.0, xh);
      const auto fy = [&](double x) { return s.fit->beta * std::pow(x, s.fit->alpha); };
      svg += fmt::format(
          "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" stroke-dasharray=\"5,3\"/>\n",
          ax.map(x0), ay.map(fy(x0)), ax.map(x1), ay.map(fy(x1)), color);
    }
    for (const auto& p : s.points) {
      if (p.x <= 0.0 || p.y <= 0.0) continue;
      svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"{}\"><title>{}</title></circle>\n",
                         ax.map(p.x), ay.map(p.y), color, escape(p.label));
    }
    std::string legend = s.name;
    if (s.fit) {
      legend += fmt::format(" a={:.3f}", s.fit->alpha);
      if (s.fit->r) legend += fmt::format(" r={:.2f}", *s.fit->r);
    }
    const double ly = kTop + 10.0 + 18.0 * static_cast<double>(i);
    svg += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{}\"/>\n", ax.px1 + 14, ly, color);
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"11\">{}</text>\n", ax.px1 + 22, ly + 4, escape(legend));
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace navscale::analysis
