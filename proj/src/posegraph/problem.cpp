#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "navscale/curation.hpp"
#include "navscale/posegraph.hpp"

namespace navscale::posegraph {

FusionProblem build_problem(const RawEpisode& e, const FusionConfig& config) {
  return build_problem(e, curation::resample_4hz(e), config);
}

FusionProblem build_problem(const RawEpisode& e, const AlignedSeries& aligned, const FusionConfig& config) {
  const std::size_t n = aligned.size();
  if (n < 2) throw std::invalid_argument(fmt::format("episode '{}': fusion needs at least 2 nodes, got {}", e.id, n));

  FusionProblem p;
  p.origin = aligned.gps.front();
  p.timestamps = aligned.t;
  p.initial.reserve(n);
  const bool use_heading = config.heading_weight > 0.0;
  const double heading_sigma = use_heading ? config.sigma_heading_rad / std::sqrt(config.heading_weight) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 xy = local_frame(p.origin, aligned.gps[i]);
    p.gps.push_back({i, xy, config.sigma_gps_m});
    if (use_heading) p.heading.push_back({i, aligned.heading[i], heading_sigma});
    p.initial.push_back({xy.x, xy.y, aligned.heading[i]});
  }

  // Wheel RPMs are held over [t_k, t_k+1); integrate them across each node interval.
  const auto& s = e.samples;
  std::size_t k = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = aligned.t[i];
    const double b = aligned.t[i + 1];
    while (k + 1 < s.size() && s[k + 1].t <= a) ++k;
    PoseSE2 delta;
    for (std::size_t j = k; j + 1 < s.size() && s[j].t < b; ++j) {
      const double lo = std::max(a, s[j].t);
      const double hi = std::min(b, s[j + 1].t);
      if (hi <= lo || !s[j].wheel_rpm) continue;
      delta = compose(delta, wheel_odometry(s[j].wheel_rpm->left, s[j].wheel_rpm->right, config.robot, hi - lo));
    }
    p.odometry.push_back({i, delta, config.sigma_odom_m, config.sigma_odom_rad});
  }
  return p;
}

}  // namespace navscale::posegraph
