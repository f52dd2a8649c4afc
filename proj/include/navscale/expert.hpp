#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "navscale/episode.hpp"
#include "navscale/posegraph.hpp"
#include "navscale/simworld.hpp"

namespace navscale::expert {

/// Behavior of one simulated teleoperator.
struct OperatorProfile {
  double sigma_v{0.05};      // m/s
  double sigma_omega{0.1};   // rad/s
  double pause_prob{0.0};    // per control step
  double detour_prob{0.0};   // per intermediate waypoint
  double speed_factor{0.8};  // fraction of v_max
  double heading_bias{0.0};  // rad, added to the logged compass heading

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// Uniform-cost shortest path between graph nodes, optionally with random
/// out-and-back detours to neighbors of intermediate nodes. Throws
/// std::invalid_argument if the goal is unreachable or a node is invalid.
std::vector<int> plan_route(const simworld::LocationSpec& world, int start, int goal, std::mt19937_64& rng,
                            double detour_prob);

/// Length of the shortest path by Dijkstra.
double shortest_path_length(const simworld::LocationSpec& world, int start, int goal);

std::vector<Point2> route_polyline(const simworld::LocationSpec& world, std::span<const int> nodes);

double polyline_length(std::span<const Point2> polyline);

/// Pure-pursuit tracker of a polyline. Progress along the path is tracked
/// monotonically so out-and-back sections are followed in order.
class PurePursuit {
 public:
  PurePursuit(std::vector<Point2> path, double lookahead_m, const simworld::RobotLimits& limits = {});

  Command command(const PoseSE2& pose, double v_cap);
  [[nodiscard]] double progress() const { return progress_; }
  [[nodiscard]] double length() const { return cumulative_.back(); }
  [[nodiscard]] bool finished(const PoseSE2& pose, double tolerance_m) const;
  [[nodiscard]] Point2 point_at(double s) const;

 private:
  void update_progress(Point2 p);

  std::vector<Point2> path_;
  std::vector<double> cumulative_;
  double lookahead_;
  simworld::RobotLimits limits_;
  double progress_{0.0};
};

struct DriveConfig {
  std::string episode_id{"episode"};
  double control_rate_hz{10.0};
  double lookahead_m{2.0};
  double goal_tolerance_m{2.0};
  double sigma_gps_m{3.0};
  double sigma_compass_rad{0.05};
  /// 0 selects 2 * length / (speed_factor * v_max) + 60 s.
  double max_duration_s{0.0};
  bool log_obs_refs{true};
  posegraph::RobotGeometry robot;
  simworld::RobotLimits limits;
};

struct DriveResult {
  RawEpisode episode;
  bool timed_out{false};
  bool reached_goal{false};
  std::size_t collisions{0};
  std::vector<simworld::TraceRow> trace;  // true states at the control rate
};

/// Drives the polyline with pure pursuit plus the operator's noise and
/// pauses, logging GPS, compass heading, wheel RPMs and commands.
DriveResult drive(const simworld::World& world, std::span<const Point2> waypoints, const OperatorProfile& profile,
                  std::mt19937_64& rng, const DriveConfig& config = {});

}  // namespace navscale::expert
