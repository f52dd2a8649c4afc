#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "navscale/curation.hpp"

namespace navscale::curation {

std::vector<double> centered_moving_average(std::span<const double> t, std::span<const double> values,
                                            double window_s) {
  const std::size_t n = t.size();
  std::vector<double> out(n, 0.0);
  const double half = window_s / 2.0;
  std::size_t lo = 0;
  std::size_t hi = 0;  // exclusive
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    while (hi < n && t[hi] <= t[i] + half) sum += values[hi++];
    while (t[lo] < t[i] - half) sum -= values[lo++];
    out[i] = sum / static_cast<double>(hi - lo);
  }
  return out;
}

std::vector<double> ground_speed(const RawEpisode& e, const posegraph::RobotGeometry& robot) {
  std::vector<double> speed(e.samples.size(), 0.0);
  for (std::size_t i = 0; i < e.samples.size(); ++i) {
    if (const auto& rpm = e.samples[i].wheel_rpm) {
      speed[i] = std::abs(posegraph::wheel_velocity(rpm->left, rpm->right, robot).v);
    }
  }
  return speed;
}

std::vector<RawEpisode> filter_episode(const RawEpisode& e, const FilterConfig& config) {
  const std::size_t n = e.samples.size();
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = e.samples[i].t;
  const auto speed = centered_moving_average(t, ground_speed(e, config.robot), config.speed_window_s);

  std::vector<RawEpisode> out;
  RawEpisode current;
  auto flush = [&] {
    if (current.samples.size() >= 2 && current.duration_s() >= config.min_duration_s) {
      current.id = fmt::format("{}/{}", e.id, out.size());
      current.native_rate_hz = e.native_rate_hz;
      out.push_back(std::move(current));
    }
    current = RawEpisode{};
  };

  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = e.samples[i];
    const bool keep = s.complete() && speed[i] >= config.min_speed_mps;
    if (!keep) {
      flush();
      continue;
    }
    if (!current.samples.empty() && s.t - current.samples.back().t > config.max_gap_s) flush();
    current.samples.push_back(s);
  }
  flush();
  if (out.size() == 1 && out.front().samples.size() == n) out.front().id = e.id;
  return out;
}

}  // namespace navscale::curation
