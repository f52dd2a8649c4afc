#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "navscale/curation.hpp"

namespace navscale::curation {

GoalVector goal_vector(const PoseSE2& robot, Point2 goal) {
  const Point2 delta = goal - robot.position();
  const double d_km = norm(delta) / 1000.0;
  const double bearing = wrap_angle(std::atan2(delta.y, delta.x) - robot.theta);
  return {std::clamp(d_km, 0.0, 1.0), bearing / std::numbers::pi};
}

GoalSample sample_goal(const Demonstration& demo, std::size_t t_index, std::size_t history,
                       std::mt19937_64& rng, double max_travel_m) {
  if (t_index + 1 >= demo.size()) throw std::invalid_argument("sample_goal: no future pose after t_index");
  std::size_t last = t_index + 1;
  double travel = distance(demo.poses[t_index].position(), demo.poses[last].position());
  while (last + 1 < demo.size()) {
    const double next = travel + distance(demo.poses[last].position(), demo.poses[last + 1].position());
    if (next > max_travel_m) break;
    travel = next;
    ++last;
  }
  // The first future pose is always eligible, even after a single long step.
  std::uniform_int_distribution<std::size_t> pick(t_index + 1, last);
  GoalSample out;
  out.goal_index = pick(rng);
  out.goal = demo.poses[out.goal_index].position();
  history = std::max<std::size_t>(history, 1);
  for (std::size_t h = 0; h < history; ++h) {
    const std::size_t back = history - 1 - h;
    const std::size_t idx = t_index >= back ? t_index - back : 0;
    out.history.push_back(goal_vector(demo.poses[idx], out.goal));
  }
  return out;
}

TrainingSample mirror(const TrainingSample& s) {
  TrainingSample m = s;
  for (auto& g : m.goal_history) g.theta = -g.theta;
  for (auto& a : m.target_chunk) a.omega = -a.omega;
  m.mirror_flag = !s.mirror_flag;
  return m;
}

std::vector<TrainingSample> build_training_samples(std::span<const Demonstration> demos, std::size_t history,
                                                   const ActionLimits& limits, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<TrainingSample> out;
  history = std::max<std::size_t>(history, 1);
  for (const auto& demo : demos) {
    for (std::size_t t = 0; t + 1 < demo.size(); ++t) {
      const GoalSample goal = sample_goal(demo, t, history, rng);
      TrainingSample sample;
      sample.goal_history = goal.history;
      for (std::size_t h = 0; h < history; ++h) {
        const std::size_t back = history - 1 - h;
        sample.obs_history.push_back(demo.obs_refs[t >= back ? t - back : 0]);
      }
      for (std::size_t k = 0; k < kChunkLength; ++k) sample.target_chunk[k] = normalize(demo.actions_gt[t][k], limits);
      out.push_back(std::move(sample));
    }
  }
  return out;
}

}  // namespace navscale::curation
