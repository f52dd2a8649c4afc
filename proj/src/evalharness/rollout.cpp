#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "navscale/evalharness.hpp"

namespace navscale::evalharness {

PolicyController::PolicyController(std::shared_ptr<const policy::MlpPolicy> policy, curation::ActionLimits limits)
    : policy_(std::move(policy)), limits_(limits) {
  if (!policy_) throw std::invalid_argument("PolicyController needs a policy");
}

void PolicyController::reset(const RouteSegment&) { history_.clear(); }

Command PolicyController::act(const simworld::Observation& obs, const simworld::RobotState&) {
  const std::size_t p = policy_->shape().history;
  history_.push_back(obs);
  while (history_.size() > p) history_.pop_front();
  std::vector<std::vector<double>> ranges;
  std::vector<curation::GoalVector> goals;
  // Before P observations exist the oldest one is repeated.
  for (std::size_t i = history_.size(); i < p; ++i) {
    ranges.push_back(history_.front().ranges);
    goals.push_back(history_.front().goal);
  }
  for (const auto& o : history_) {
    ranges.push_back(o.ranges);
    goals.push_back(o.goal);
  }
  const std::vector<double> x = policy::encode_inputs(ranges, goals, policy_->shape());
  const curation::ActionChunk chunk = policy_->forward(x);
  const Command first{std::clamp(chunk[0].v, -1.0, 1.0), std::clamp(chunk[0].omega, -1.0, 1.0)};
  return curation::denormalize(first, limits_);
}

ScriptedExpertController::ScriptedExpertController(double speed_factor, double lookahead_m,
                                                   simworld::RobotLimits limits)
    : speed_factor_(speed_factor), lookahead_(lookahead_m), limits_(limits) {}

void ScriptedExpertController::reset(const RouteSegment& segment) {
  tracker_.emplace(segment.path, lookahead_, limits_);
}

Command ScriptedExpertController::act(const simworld::Observation&, const simworld::RobotState& truth) {
  if (!tracker_) throw std::logic_error("ScriptedExpertController used before reset");
  return tracker_->command(truth.pose, speed_factor_ * limits_.v_max);
}

std::string to_string(FailureCause c) {
  switch (c) {
    case FailureCause::kNone: return "";
    case FailureCause::kCollisionStuck: return "collision-stuck";
    case FailureCause::kOffRoute: return "off-route";
    case FailureCause::kTimeout: return "timeout";
  }
  return "";
}

FailureCause failure_cause_from_string(const std::string& s) {
  if (s.empty() || s == "none") return FailureCause::kNone;
  if (s == "collision-stuck") return FailureCause::kCollisionStuck;
  if (s == "off-route") return FailureCause::kOffRoute;
  if (s == "timeout") return FailureCause::kTimeout;
  throw std::invalid_argument(fmt::format("unknown failure cause '{}'", s));
}

SegmentOutcome run_segment(Controller& controller, const simworld::World& world, const RouteSpec& route,
                           std::size_t segment, const EvalConfig& config, std::uint64_t seed,
                           std::optional<simworld::RobotState> start, std::vector<simworld::TraceRow>* trace) {
  if (segment >= route.segments.size()) {
    throw std::out_of_range(fmt::format("segment {} of a {}-segment route", segment, route.segments.size()));
  }
  if (!(config.control_dt_s > 0.0)) throw std::invalid_argument("control_dt_s must be positive");
  const RouteSegment& seg = route.segments[segment];
  const double seg_len = seg.length();

  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(segment)};
  std::mt19937_64 rng(seq);
  simworld::LatencyQueue queue(config.latency_steps);
  controller.reset(seg);

  simworld::RobotState state = start.value_or(simworld::RobotState{seg.start, 0.0, 0.0});
  const auto window_steps = static_cast<std::size_t>(std::llround(config.stuck_window_s / config.control_dt_s));
  std::deque<Point2> recent{state.pose.position()};
  double last_collision = -std::numeric_limits<double>::infinity();
  bool collided = false;

  SegmentOutcome out;
  out.segment = segment;
  double t = 0.0;
  for (std::size_t k = 0;; ++k) {
    t = static_cast<double>(k) * config.control_dt_s;
    const Point2 pos = state.pose.position();
    if (trace != nullptr) trace->push_back({t, state, collided});

    if (distance(pos, seg.checkpoint) <= route.success_radius_m) {
      out.success = true;
      break;
    }
    if (t >= seg.time_limit_s) {
      out.cause = FailureCause::kTimeout;
      break;
    }
    if (distance_to_polyline(seg.path, pos) > config.off_route_m) {
      out.cause = FailureCause::kOffRoute;
      break;
    }
    if (recent.size() > window_steps && last_collision >= t - config.stuck_window_s) {
      double moved = 0.0;
      for (const Point2& q : recent) moved = std::max(moved, distance(q, recent.front()));
      if (moved <= config.stuck_progress_m) {
        out.cause = FailureCause::kCollisionStuck;
        break;
      }
    }

    const simworld::Observation obs = simworld::sense(state, world, seg.checkpoint, config.noise, rng, config.sensor);
    const Command applied = queue.push(controller.act(obs, state));
    const simworld::StepResult r = simworld::step(state, applied, config.control_dt_s, world, config.limits);
    state = r.state;
    collided = r.collided;
    if (collided) last_collision = static_cast<double>(k + 1) * config.control_dt_s;
    recent.push_back(state.pose.position());
    while (recent.size() > window_steps + 1) recent.pop_front();
  }

  out.elapsed_s = t;
  out.final_state = state;
  out.progress_m = out.success ? seg_len : std::min(seg_len, project_onto_polyline(seg.path, state.pose.position()));
  return out;
}

RouteOutcome run_route(Controller& controller, const simworld::World& world, const RouteSpec& route,
                       const EvalConfig& config, std::uint64_t seed, int rep) {
  RouteOutcome out{route.id, rep, {}, {}};
  std::optional<simworld::RobotState> carry;
  for (std::size_t i = 0; i < route.segments.size(); ++i) {
    SegmentOutcome o = run_segment(controller, world, route, i, config, seed, carry);
    carry = o.success ? std::optional(o.final_state) : std::nullopt;
    out.segments.push_back(std::move(o));
    out.segment_lengths.push_back(route.segments[i].length());
  }
  return out;
}

}  // namespace navscale::evalharness
