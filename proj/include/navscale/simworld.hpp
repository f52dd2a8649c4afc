#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "navscale/curation.hpp"
#include "navscale/geokit.hpp"
#include "navscale/pose.hpp"

namespace navscale::simworld {

struct Rect {
  Point2 min;
  Point2 max;
};

struct Circle {
  Point2 center;
  double radius{0.0};
};

enum class ObstacleKind { kBoundary, kBlock, kClutter };

struct Obstacle {
  std::variant<Rect, Circle> shape;
  ObstacleKind kind{ObstacleKind::kBlock};
};

struct RouteGraph {
  std::vector<Point2> nodes;
  std::vector<std::pair<int, int>> edges;

  [[nodiscard]] std::vector<std::vector<int>> adjacency() const;
  [[nodiscard]] bool connected() const;
  [[nodiscard]] double edge_length(std::size_t edge) const;
};

/// Appearance and layout parameters of a location, drawn from its seed.
struct LocationStyle {
  double block_size_m{20.0};
  double corridor_width_m{6.0};
  double clutter_density{1.0};  // clutter items per 10 m of corridor
  double clutter_scale_m{0.5};
  double edge_drop_prob{0.15};
};

struct LocationSpec {
  std::uint64_t seed{0};
  double width_m{0.0};
  double height_m{0.0};
  std::vector<Obstacle> obstacles;
  RouteGraph route_graph;
  std::vector<PoseSE2> spawn_poses;
  LocationStyle style;
  geokit::GeoPoint anchor;
};

struct GenerationOptions {
  int grid_nodes{5};  // intersections per side
  std::optional<double> clutter_density;
  std::optional<geokit::GeoPoint> anchor;
  double lane_half_width_m{0.9};
  int max_rerolls{10};
};

class GenerationError : public std::runtime_error {
 public:
  GenerationError(const std::string& what, std::uint64_t seed) : std::runtime_error(what), seed_(seed) {}
  [[nodiscard]] std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

/// Street-block grid with a connected route graph along the corridors and
/// clutter kept off the route lanes. Bit-identical for equal (seed, options).
LocationSpec generate_location(std::uint64_t seed, const GenerationOptions& options = {});

/// A location plus a uniform-grid index for collision and ray queries.
/// Immutable after construction; safe to share between threads.
class World {
 public:
  explicit World(LocationSpec spec, double cell_size_m = 4.0);

  [[nodiscard]] const LocationSpec& spec() const { return spec_; }

  /// Distance from p to the nearest obstacle surface (0 inside an obstacle),
  /// searched up to `search_radius`; returns search_radius if nothing is closer.
  [[nodiscard]] double clearance(Point2 p, double search_radius) const;
  [[nodiscard]] bool collides(Point2 p, double radius) const { return clearance(p, radius) < radius; }

  /// Distance along each ray to the first obstacle, capped at max_range.
  [[nodiscard]] std::vector<double> raycast(Point2 origin, std::span<const double> angles, double max_range) const;

  [[nodiscard]] bool inside_extent(Point2 p) const;

 private:
  void candidates(double min_x, double min_y, double max_x, double max_y, std::vector<std::size_t>& out) const;

  LocationSpec spec_;
  double cell_{4.0};
  int nx_{0};
  int ny_{0};
  double origin_x_{0.0};
  double origin_y_{0.0};
  std::vector<std::vector<std::size_t>> cells_;
};

// ------------------------------------------------------------------ dynamics

struct RobotLimits {
  double v_max{1.0};
  double omega_max{1.5};
  double time_constant_s{0.3};
  double radius_m{0.25};
  int substeps{10};
};

struct RobotState {
  PoseSE2 pose;
  double v{0.0};
  double omega{0.0};
};

struct StepResult {
  RobotState state;
  bool collided{false};
};

/// First-order velocity tracking toward the clipped command, integrated
/// exactly per substep; a substep that would penetrate an obstacle is undone
/// and the remainder of the step is skipped.
StepResult step(const RobotState& state, const Command& cmd, double dt, const World& world,
                const RobotLimits& limits = {});

// ------------------------------------------------------------------- sensing

struct SensorConfig {
  std::size_t rays{64};
  double fov_deg{110.0};
  double max_range_m{10.0};
};

struct NoiseConfig {
  double sigma_distance_rel{0.0};
  double sigma_bearing_rad{0.0};
  /// Constant per-episode bearing offset (a miscalibrated compass).
  double heading_bias_rad{0.0};
};

struct Observation {
  std::vector<double> ranges;  // normalized to [0, 1], leftmost ray first
  curation::GoalVector goal;
};

/// Ray angles relative to the heading, leftmost first.
std::vector<double> fan_angles(const SensorConfig& sensor);

std::vector<double> sense_ranges(const PoseSE2& pose, const World& world, const SensorConfig& sensor = {});

/// Throws std::invalid_argument if the goal lies outside the world extent.
Observation sense(const RobotState& state, const World& world, Point2 goal, const NoiseConfig& noise,
                  std::mt19937_64& rng, const SensorConfig& sensor = {});

/// Applies each command `delay_steps` control steps after it was issued.
class LatencyQueue {
 public:
  explicit LatencyQueue(int delay_steps);
  Command push(const Command& issued);
  [[nodiscard]] int delay() const { return delay_; }

 private:
  int delay_;
  std::deque<Command> pending_;
};

/// Stream form of LatencyQueue.
std::vector<Command> latency_queue(std::span<const Command> commands, int delay_steps);

// ---------------------------------------------------------------- interfaces

struct TraceRow {
  double t{0.0};
  RobotState state;
  bool collided{false};
};

void write_trace_csv(std::ostream& out, std::span<const TraceRow> trace);

std::string location_to_json(const LocationSpec& spec, int indent = 2);
LocationSpec location_from_json(const std::string& text);

/// Observation references produced by the simulated camera:
/// "sim:<seed>:<x>:<y>:<theta>".
std::string make_obs_ref(std::uint64_t world_seed, const PoseSE2& true_pose);

/// Renders range fans for observation references, regenerating and caching
/// worlds by seed. Thread-safe.
class ObservationRenderer {
 public:
  explicit ObservationRenderer(GenerationOptions generation = {}, SensorConfig sensor = {});

  /// Normalized ranges; reversed when `mirrored`.
  std::vector<double> render(const std::string& obs_ref, bool mirrored = false);
  std::shared_ptr<const World> world(std::uint64_t seed);

 private:
  GenerationOptions generation_;
  SensorConfig sensor_;
  std::mutex mutex_;
  std::map<std::uint64_t, std::shared_ptr<const World>> cache_;
};

}  // namespace navscale::simworld
