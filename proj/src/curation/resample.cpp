#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "navscale/curation.hpp"

namespace navscale::curation {
namespace {

constexpr double kTimeEps = 1e-9;
constexpr double kLookupEps = 1e-6;

// Last index with t <= query (+eps), or npos when query precedes all samples.
template <typename GetT>
std::size_t last_at_or_before(std::size_t n, double query, double eps, GetT get_t) {
  std::size_t lo = 0, hi = n;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (get_t(mid) <= query + eps) lo = mid + 1;
    else hi = mid;
  }
  return lo == 0 ? static_cast<std::size_t>(-1) : lo - 1;
}

}  // namespace

Command normalize(const Command& c, const ActionLimits& limits) {
  return {std::clamp(c.v / limits.v_max, -1.0, 1.0), std::clamp(c.omega / limits.omega_max, -1.0, 1.0)};
}

Command denormalize(const Command& c, const ActionLimits& limits) {
  return {std::clamp(c.v, -1.0, 1.0) * limits.v_max, std::clamp(c.omega, -1.0, 1.0) * limits.omega_max};
}

AlignedSeries resample_4hz(const RawEpisode& e) {
  if (e.native_rate_hz < 4.0) {
    throw std::invalid_argument(
        fmt::format("episode '{}': native rate {} Hz is below the 4 Hz grid", e.id, e.native_rate_hz));
  }
  const auto& s = e.samples;
  for (const auto& sample : s) {
    if (!sample.complete()) throw std::invalid_argument(fmt::format("episode '{}': incomplete sample", e.id));
  }
  AlignedSeries out;
  out.dt = kGridDtS;
  if (s.empty()) return out;

  const double t0 = s.front().t;
  const auto steps = static_cast<std::size_t>(std::floor((s.back().t - t0) / kGridDtS + kTimeEps));
  const auto get_t = [&](std::size_t i) { return s[i].t; };
  for (std::size_t k = 0; k <= steps; ++k) {
    const double tg = t0 + static_cast<double>(k) * kGridDtS;
    const std::size_t j = last_at_or_before(s.size(), tg, kTimeEps, get_t);
    const auto& a = s[j];
    out.t.push_back(tg);
    out.command.push_back(*a.command);
    out.obs_ref.push_back(a.obs_ref.value_or(std::string{}));
    if (std::abs(a.t - tg) <= kTimeEps || j + 1 >= s.size()) {
      out.gps.push_back(*a.gps);
      out.heading.push_back(*a.heading);
      out.wheel_rpm.push_back(*a.wheel_rpm);
      continue;
    }
    const auto& b = s[j + 1];
    const double alpha = (tg - a.t) / (b.t - a.t);
    const auto lerp = [alpha](double x, double y) { return x + alpha * (y - x); };
    out.gps.emplace_back(lerp(a.gps->lat_deg(), b.gps->lat_deg()), lerp(a.gps->lon_deg(), b.gps->lon_deg()));
    out.heading.push_back(wrap_angle(*a.heading + alpha * wrap_angle(*b.heading - *a.heading)));
    out.wheel_rpm.push_back({lerp(a.wheel_rpm->left, b.wheel_rpm->left), lerp(a.wheel_rpm->right, b.wheel_rpm->right)});
  }
  return out;
}

ChunkedActions build_action_chunks(std::span<const TimedCommand> commands, std::span<const double> grid) {
  ChunkedActions out;
  if (commands.empty()) return out;
  const double t_first = commands.front().t;
  const double t_last = commands.back().t;
  const auto get_t = [&](std::size_t i) { return commands[i].t; };
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    const double horizon_end = t + static_cast<double>(kChunkLength - 1) * kChunkDtS;
    if (t < t_first - kLookupEps || horizon_end > t_last + kLookupEps) continue;
    ActionChunk chunk;
    for (std::size_t k = 0; k < kChunkLength; ++k) {
      const double q = t + static_cast<double>(k) * kChunkDtS;
      chunk[k] = commands[last_at_or_before(commands.size(), q, kLookupEps, get_t)].command;
    }
    out.grid_index.push_back(i);
    out.chunks.push_back(chunk);
  }
  return out;
}

}  // namespace navscale::curation
