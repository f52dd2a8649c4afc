#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "navscale/expert.hpp"

namespace navscale::expert {
namespace {

constexpr double kNoiseCorrelation = 0.9;
constexpr double kPauseMinS = 1.0;
constexpr double kPauseMaxS = 5.0;
constexpr double kTurnInPlaceAngle = std::numbers::pi / 3.0;
// An operator pinned against an obstacle backs off briefly and tries again.
constexpr double kStuckTriggerS = 1.0;
constexpr double kRecoverS = 1.5;
constexpr double kRecoverSpeed = 0.3;

// Body-frame velocities of the constant-curvature arc joining two poses.
Command arc_velocity(const PoseSE2& from, const PoseSE2& to, double dt) {
  const PoseSE2 d = posegraph::between(from, to);
  const double chord = std::hypot(d.x, d.y);
  const double dtheta = d.theta;
  double arc = chord;
  if (std::abs(dtheta) > 1e-9) arc = chord * (0.5 * dtheta) / std::sin(0.5 * dtheta);
  if (d.x < 0.0) arc = -arc;
  return {arc / dt, dtheta / dt};
}

}  // namespace

PurePursuit::PurePursuit(std::vector<Point2> path, double lookahead_m, const simworld::RobotLimits& limits)
    : path_(std::move(path)), lookahead_(lookahead_m), limits_(limits) {
  if (path_.empty()) throw std::invalid_argument("pure pursuit needs at least one waypoint");
  if (lookahead_m <= 0.0) throw std::invalid_argument("lookahead must be positive");
  cumulative_.assign(path_.size(), 0.0);
  for (std::size_t i = 1; i < path_.size(); ++i) cumulative_[i] = cumulative_[i - 1] + distance(path_[i - 1], path_[i]);
}

Point2 PurePursuit::point_at(double s) const {
  if (path_.size() == 1 || s <= 0.0) return path_.front();
  if (s >= cumulative_.back()) return path_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
  const double seg = cumulative_[i] - cumulative_[i - 1];
  const double f = seg > 0.0 ? (s - cumulative_[i - 1]) / seg : 0.0;
  return path_[i - 1] + f * (path_[i] - path_[i - 1]);
}

void PurePursuit::update_progress(Point2 p) {
  // Project onto the part of the path just ahead of the current progress.
  const double lo = progress_;
  const double hi = progress_ + lookahead_ + 3.0;
  double best_s = progress_;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < path_.size(); ++i) {
    if (cumulative_[i] < lo || cumulative_[i - 1] > hi) continue;
    const Point2 a = path_[i - 1];
    const Point2 ab = path_[i] - a;
    const double len2 = dot(ab, ab);
    double f = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
    const double seg = cumulative_[i] - cumulative_[i - 1];
    const double f_lo = seg > 0.0 ? std::max(0.0, (lo - cumulative_[i - 1]) / seg) : 0.0;
    const double f_hi = seg > 0.0 ? std::min(1.0, (hi - cumulative_[i - 1]) / seg) : 0.0;
    f = std::clamp(f, f_lo, f_hi);
    const double d = distance(p, a + f * ab);
    if (d < best_d) {
      best_d = d;
      best_s = cumulative_[i - 1] + f * seg;
    }
  }
  progress_ = std::max(progress_, best_s);
}

Command PurePursuit::command(const PoseSE2& pose, double v_cap) {
  const Point2 p = pose.position();
  update_progress(p);
  const Point2 target = point_at(progress_ + lookahead_);
  const Point2 to = target - p;
  const double dist = norm(to);
  const double remaining = distance(p, path_.back());
  if (dist < 1e-6) return {};
  const double alpha = wrap_angle(std::atan2(to.y, to.x) - pose.theta);
  if (std::abs(alpha) > kTurnInPlaceAngle) {
    return {0.1 * v_cap, std::copysign(0.8 * limits_.omega_max, alpha)};
  }
  double v = v_cap * (1.0 - 0.5 * std::abs(alpha) / kTurnInPlaceAngle);
  if (cumulative_.back() - progress_ < lookahead_) v *= std::clamp(remaining / lookahead_, 0.3, 1.0);
  const double curvature = 2.0 * std::sin(alpha) / std::max(dist, 0.5);
  double omega = v * curvature;
  if (std::abs(omega) > limits_.omega_max) {
    v *= limits_.omega_max / std::abs(omega);
    omega = std::copysign(limits_.omega_max, omega);
  }
  return {v, omega};
}

bool PurePursuit::finished(const PoseSE2& pose, double tolerance_m) const {
  return progress_ >= cumulative_.back() - tolerance_m - lookahead_ &&
         distance(pose.position(), path_.back()) <= tolerance_m;
}

DriveResult drive(const simworld::World& world, std::span<const Point2> waypoints, const OperatorProfile& profile,
                  std::mt19937_64& rng, const DriveConfig& config) {
  profile.validate();
  if (waypoints.empty()) throw std::invalid_argument("drive needs at least one waypoint");
  if (config.control_rate_hz <= 0.0) throw std::invalid_argument("control rate must be positive");
  for (const Point2& w : waypoints) {
    if (!world.inside_extent(w)) throw std::invalid_argument("waypoint outside the world extent");
  }

  const double dt = 1.0 / config.control_rate_hz;
  const double v_cap = profile.speed_factor * config.limits.v_max;
  const double length = polyline_length(waypoints);
  const double max_duration =
      config.max_duration_s > 0.0 ? config.max_duration_s : 2.0 * length / v_cap + 60.0;
  const auto& anchor = world.spec().anchor;
  const std::uint64_t seed = world.spec().seed;

  PurePursuit tracker(std::vector<Point2>(waypoints.begin(), waypoints.end()), config.lookahead_m, config.limits);

  simworld::RobotState state;
  state.pose = {waypoints.front().x, waypoints.front().y, 0.0};
  if (waypoints.size() > 1) {
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
      const Point2 d = waypoints[i] - waypoints.front();
      if (norm(d) > 1e-9) {
        state.pose.theta = std::atan2(d.y, d.x);
        break;
      }
    }
  }

  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_real_distribution<double> pause_len(kPauseMinS, kPauseMaxS);
  const double innovation = std::sqrt(1.0 - kNoiseCorrelation * kNoiseCorrelation);
  double noise_v = 0.0;
  double noise_w = 0.0;
  double pause_left = 0.0;
  double pinned_s = 0.0;
  double recover_left = 0.0;

  DriveResult out;
  out.episode.id = config.episode_id;
  out.episode.native_rate_hz = config.control_rate_hz;

  const auto log_sample = [&](double t, const PoseSE2& pose, const Command& cmd, const WheelRpm& rpm) {
    EpisodeSample s;
    s.t = t;
    const Point2 noisy{pose.x + config.sigma_gps_m * unit(rng), pose.y + config.sigma_gps_m * unit(rng)};
    s.gps = posegraph::from_local_frame(anchor, noisy);
    s.heading = wrap_angle(pose.theta + profile.heading_bias + config.sigma_compass_rad * unit(rng));
    s.wheel_rpm = rpm;
    s.command = cmd;
    if (config.log_obs_refs) s.obs_ref = simworld::make_obs_ref(seed, pose);
    out.episode.samples.push_back(std::move(s));
  };

  double t = 0.0;
  for (std::size_t k = 0;; ++k) {
    t = static_cast<double>(k) * dt;
    out.trace.push_back({t, state, false});
    if (tracker.finished(state.pose, config.goal_tolerance_m)) {
      out.reached_goal = true;
      break;
    }
    if (t >= max_duration) {
      out.timed_out = true;
      break;
    }

    Command cmd;
    const bool recovering = recover_left > 0.0;
    if (recovering) {
      recover_left -= dt;
      cmd = {-kRecoverSpeed, 0.0};
    } else if (pause_left > 0.0) {
      pause_left -= dt;
    } else if (profile.pause_prob > 0.0 && coin(rng) < profile.pause_prob) {
      pause_left = pause_len(rng) - dt;
    }
    if (!recovering && pause_left <= 0.0) {
      cmd = tracker.command(state.pose, v_cap);
      noise_v = kNoiseCorrelation * noise_v + innovation * profile.sigma_v * unit(rng);
      noise_w = kNoiseCorrelation * noise_w + innovation * profile.sigma_omega * unit(rng);
      cmd.v = std::clamp(cmd.v + noise_v, -config.limits.v_max, config.limits.v_max);
      cmd.omega = std::clamp(cmd.omega + noise_w, -config.limits.omega_max, config.limits.omega_max);
    }

    const PoseSE2 before = state.pose;
    const simworld::StepResult r = simworld::step(state, cmd, dt, world, config.limits);
    if (r.collided) {
      ++out.collisions;
      out.trace.back().collided = true;
      pinned_s += dt;
      if (pinned_s >= kStuckTriggerS - 1e-9) {
        recover_left = kRecoverS;
        pinned_s = 0.0;
      }
    } else {
      pinned_s = 0.0;
    }
    state = r.state;
    log_sample(t, before, cmd, posegraph::wheel_rpm_for(arc_velocity(before, state.pose, dt), config.robot));
  }
  log_sample(t, state.pose, Command{}, WheelRpm{});
  return out;
}

}  // namespace navscale::expert
