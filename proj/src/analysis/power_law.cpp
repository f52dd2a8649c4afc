#include <cmath>
#include <stdexcept>
#include <vector>

#include <fmt/format.h>

#include "navscale/analysis.hpp"

namespace navscale::analysis {

PowerLawFit fit_power_law(std::span<const ScalingPoint> points) {
  std::vector<double> lx;
  std::vector<double> ly;
  PowerLawFit fit;
  for (const auto& p : points) {
    if (p.x > 0.0 && p.y > 0.0 && std::isfinite(p.x) && std::isfinite(p.y)) {
      lx.push_back(std::log(p.x));
      ly.push_back(std::log(p.y));
    } else {
      ++fit.excluded;
    }
  }
  const std::size_t n = lx.size();
  if (n < 3) throw std::invalid_argument(fmt::format("power-law fit needs at least 3 positive points, got {}", n));

  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  double scale_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = lx[i] - mx;
    const double dy = ly[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
    scale_y += ly[i] * ly[i];
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("power-law fit needs at least two distinct x values");

  fit.n_points = n;
  fit.alpha = sxy / sxx;
  fit.beta = std::exp(my - fit.alpha * mx);
  // Rounding in the mean leaves ~eps^2 residue for constant data.
  if (syy > 1e-24 * (scale_y + 1.0)) fit.r = sxy / std::sqrt(sxx * syy);
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ly[i] - (my + fit.alpha * (lx[i] - mx));
    sse += e * e;
  }
  fit.alpha_stderr = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
  return fit;
}

double doubling_reduction(double alpha) { return 1.0 - std::exp2(alpha); }

}  // namespace navscale::analysis
