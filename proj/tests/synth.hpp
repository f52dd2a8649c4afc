#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "navscale/curation.hpp"
#include "navscale/posegraph.hpp"

namespace synth {

using navscale::Command;
using navscale::PoseSE2;

// Poses at a fixed rate from body velocity segments (v, omega, duration).
struct Leg {
  double v;
  double omega;
  double seconds;
};

inline std::vector<PoseSE2> integrate(PoseSE2 start, const std::vector<Leg>& legs, double rate_hz,
                                      std::vector<Command>* commands = nullptr) {
  const double dt = 1.0 / rate_hz;
  std::vector<PoseSE2> out{start};
  PoseSE2 p = start;
  for (const Leg& leg : legs) {
    const auto steps = static_cast<long>(std::llround(leg.seconds * rate_hz));
    for (long k = 0; k < steps; ++k) {
      if (commands) commands->push_back({leg.v, leg.omega});
      // Exact unicycle arc.
      if (std::abs(leg.omega) < 1e-12) {
        p.x += leg.v * dt * std::cos(p.theta);
        p.y += leg.v * dt * std::sin(p.theta);
      } else {
        const double th2 = p.theta + leg.omega * dt;
        p.x += leg.v / leg.omega * (std::sin(th2) - std::sin(p.theta));
        p.y -= leg.v / leg.omega * (std::cos(th2) - std::cos(p.theta));
        p.theta = th2;
      }
      p.theta = navscale::wrap_angle(p.theta);
      out.push_back(p);
    }
  }
  if (commands) commands->push_back(commands->empty() ? Command{} : commands->back());
  return out;
}

// Noise-free raw episode whose sensors agree exactly with the given poses.
// RPMs describe the arc to the next pose; the last sample repeats the
// previous RPM so the filter sees a moving robot up to the end.
inline navscale::RawEpisode episode_from_poses(const std::string& id, const std::vector<PoseSE2>& poses,
                                               const std::vector<Command>& commands, double rate_hz,
                                               const navscale::geokit::GeoPoint& anchor,
                                               const navscale::posegraph::RobotGeometry& robot = {}) {
  navscale::RawEpisode e;
  e.id = id;
  e.native_rate_hz = rate_hz;
  const double dt = 1.0 / rate_hz;
  navscale::WheelRpm last{};
  for (std::size_t i = 0; i < poses.size(); ++i) {
    navscale::EpisodeSample s;
    s.t = static_cast<double>(i) * dt;
    s.gps = navscale::posegraph::from_local_frame(anchor, poses[i].position());
    s.heading = poses[i].theta;
    if (i + 1 < poses.size()) {
      const PoseSE2 d = navscale::posegraph::between(poses[i], poses[i + 1]);
      const double chord = std::hypot(d.x, d.y);
      double arc = chord;
      if (std::abs(d.theta) > 1e-12) arc = chord * (0.5 * d.theta) / std::sin(0.5 * d.theta);
      if (d.x < 0.0) arc = -arc;
      last = navscale::posegraph::wheel_rpm_for({arc / dt, d.theta / dt}, robot);
    }
    s.wheel_rpm = last;
    s.command = i < commands.size() ? commands[i] : Command{};
    s.obs_ref = "frame-" + std::to_string(i);
    e.samples.push_back(std::move(s));
  }
  return e;
}

struct FusionTrial {
  double raw_rmse{0.0};
  double fused_rmse{0.0};
};

// One seeded random drive with 3 m GPS noise, 0.05 rad compass noise and 2 %
// wheel-speed noise; RMSE of raw GPS and fused positions against the truth at
// the 4 Hz nodes.
inline FusionTrial fusion_trial(std::uint64_t seed) {
  using namespace navscale;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> v(0.4, 1.0), w(-0.4, 0.4), dur(5.0, 20.0);
  std::vector<Leg> legs;
  for (int k = 0; k < 8; ++k) legs.push_back({v(rng), w(rng), dur(rng)});
  constexpr double kRate = 20.0;  // 4 Hz grid points fall on samples
  std::vector<Command> cmds;
  const auto truth = integrate({0, 0, 0.3}, legs, kRate, &cmds);
  const geokit::GeoPoint anchor(-20.16, 57.50);
  RawEpisode e = episode_from_poses("mc", truth, cmds, kRate, anchor);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < e.samples.size(); ++i) {
    auto& s = e.samples[i];
    s.gps = posegraph::from_local_frame(anchor, {truth[i].x + 3.0 * unit(rng), truth[i].y + 3.0 * unit(rng)});
    s.heading = wrap_angle(truth[i].theta + 0.05 * unit(rng));
    s.wheel_rpm = WheelRpm{s.wheel_rpm->left * (1.0 + 0.02 * unit(rng)), s.wheel_rpm->right * (1.0 + 0.02 * unit(rng))};
  }
  const auto aligned = curation::resample_4hz(e);
  const auto problem = posegraph::build_problem(e, aligned, posegraph::FusionConfig{});
  const auto fused = posegraph::optimize(problem);
  double raw = 0.0, opt = 0.0;
  const std::size_t n = problem.node_count();
  for (std::size_t k = 0; k < n; ++k) {
    const Point2 t = posegraph::local_frame(problem.origin, posegraph::from_local_frame(anchor, truth[5 * k].position()));
    raw += std::pow(distance(problem.gps[k].observed, t), 2);
    opt += std::pow(distance(fused.poses[k].position(), t), 2);
  }
  return {std::sqrt(raw / n), std::sqrt(opt / n)};
}

}  // namespace synth
