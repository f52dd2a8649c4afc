#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "navscale/evalharness.hpp"

namespace navscale::evalharness {

Interval wilson_cc(std::size_t k, std::size_t n, double z) {
  if (n == 0) throw std::invalid_argument("wilson_cc: n must be positive");
  if (k > n) throw std::invalid_argument(fmt::format("wilson_cc: k = {} exceeds n = {}", k, n));
  const double nd = static_cast<double>(n);
  const double p = static_cast<double>(k) / nd;
  const double z2 = z * z;
  const double denom = 2.0 * (nd + z2);
  Interval ci{0.0, 1.0};
  if (k > 0) {
    const double root = std::sqrt(std::max(0.0, z2 - 2.0 - 1.0 / nd + 4.0 * p * (nd * (1.0 - p) + 1.0)));
    ci.lower = std::max(0.0, (2.0 * nd * p + z2 - 1.0 - z * root) / denom);
  }
  if (k < n) {
    const double root = std::sqrt(std::max(0.0, z2 + 2.0 - 1.0 / nd + 4.0 * p * (nd * (1.0 - p) - 1.0)));
    ci.upper = std::min(1.0, (2.0 * nd * p + z2 + 1.0 + z * root) / denom);
  }
  return ci;
}

SuccessRate success_rate(std::size_t successes, std::size_t trials) {
  const Interval ci = wilson_cc(successes, trials);
  return {successes, trials, static_cast<double>(successes) / static_cast<double>(trials), ci};
}

SuccessRate success_rate(std::span<const SegmentOutcome> outcomes) {
  const auto k = static_cast<std::size_t>(
      std::count_if(outcomes.begin(), outcomes.end(), [](const SegmentOutcome& o) { return o.success; }));
  return success_rate(k, outcomes.size());
}

std::optional<double> nir(std::span<const SegmentOutcome> outcomes) {
  double progress = 0.0;
  std::size_t failures = 0;
  for (const auto& o : outcomes) {
    progress += o.progress_m;
    if (!o.success) ++failures;
  }
  if (!(progress > 0.0)) return std::nullopt;
  return 100.0 * static_cast<double>(failures) / progress;
}

std::optional<double> nps(std::span<const SegmentOutcome> outcomes) {
  double elapsed = 0.0;
  double progress = 0.0;
  for (const auto& o : outcomes) {
    if (!o.success) continue;
    elapsed += o.elapsed_s;
    progress += o.progress_m;
  }
  if (!(progress > 0.0)) return std::nullopt;
  return 100.0 * elapsed / progress;
}

double dist_to_first_failure(const RouteOutcome& route) {
  double total = 0.0;
  for (const auto& o : route.segments) {
    total += o.progress_m;
    if (!o.success) break;
  }
  return total;
}

}  // namespace navscale::evalharness
