#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "navscale/simworld.hpp"

namespace navscale::simworld {

StepResult step(const RobotState& state, const Command& cmd, double dt, const World& world,
                const RobotLimits& limits) {
  const Command target{std::clamp(cmd.v, -limits.v_max, limits.v_max),
                       std::clamp(cmd.omega, -limits.omega_max, limits.omega_max)};
  const int substeps = std::max(limits.substeps, 1);
  const double h = dt / substeps;
  const double decay = std::exp(-h / limits.time_constant_s);
  const double lag_integral = limits.time_constant_s * (1.0 - decay);

  StepResult out{state, false};
  RobotState& s = out.state;
  for (int k = 0; k < substeps; ++k) {
    // Exact integrals of the first-order response over the substep.
    const double travel = target.v * h + (s.v - target.v) * lag_integral;
    const double turn = target.omega * h + (s.omega - target.omega) * lag_integral;
    const double mid_heading = s.pose.theta + turn / 2.0;
    const Point2 next{s.pose.x + travel * std::cos(mid_heading), s.pose.y + travel * std::sin(mid_heading)};
    s.v = target.v + (s.v - target.v) * decay;
    s.omega = target.omega + (s.omega - target.omega) * decay;
    s.pose.theta = wrap_angle(s.pose.theta + turn);
    if (world.collides(next, limits.radius_m)) {
      out.collided = true;
      s.v = 0.0;
      break;
    }
    s.pose.x = next.x;
    s.pose.y = next.y;
  }
  return out;
}

LatencyQueue::LatencyQueue(int delay_steps) : delay_(delay_steps) {
  if (delay_steps < 0 || delay_steps > 4) throw std::invalid_argument("LatencyQueue: delay must be in [0, 4] steps");
  pending_.assign(static_cast<std::size_t>(delay_steps), Command{});
}

Command LatencyQueue::push(const Command& issued) {
  pending_.push_back(issued);
  const Command applied = pending_.front();
  pending_.pop_front();
  return applied;
}

std::vector<Command> latency_queue(std::span<const Command> commands, int delay_steps) {
  LatencyQueue q(delay_steps);
  std::vector<Command> out;
  out.reserve(commands.size());
  for (const auto& c : commands) out.push_back(q.push(c));
  return out;
}

}  // namespace navscale::simworld
