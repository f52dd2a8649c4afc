#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "navscale/curation.hpp"
#include "navscale/expert.hpp"
#include "navscale/policy.hpp"
#include "navscale/simworld.hpp"

namespace navscale::evalharness {

struct RouteSegment {
  PoseSE2 start;
  Point2 checkpoint;
  std::vector<Point2> path;  // along the route graph, start to checkpoint
  double time_limit_s{0.0};

  [[nodiscard]] double length() const;
};

struct RouteSpec {
  std::string id;
  std::uint64_t world_seed{0};
  std::vector<RouteSegment> segments;
  double success_radius_m{10.0};

  [[nodiscard]] double length() const;
};

struct RouteGenOptions {
  std::size_t segments{8};
  double min_straight_m{30.0};
  double max_straight_m{90.0};
  double reference_speed_mps{0.5};
  double time_limit_factor{4.0};
  double max_distance_rise_m{1.0};
};

/// Chain of shortest graph paths between route-graph nodes. Each segment's
/// straight-line length lies in [min_straight_m, max_straight_m] and its
/// path never takes the robot more than max_distance_rise_m further from the
/// checkpoint, so a map-free goal-seeking policy can in principle follow it.
RouteSpec generate_route(const simworld::LocationSpec& world, const std::string& id, std::uint64_t seed,
                         const RouteGenOptions& options = {});

/// Arc length of the point of `path` closest to p.
double project_onto_polyline(std::span<const Point2> path, Point2 p);
double distance_to_polyline(std::span<const Point2> path, Point2 p);

// --------------------------------------------------------------- controllers

/// Closed-loop decision maker called at the control rate.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual void reset(const RouteSegment& segment) = 0;
  /// Returns a physical command. `truth` is only for privileged oracles.
  virtual Command act(const simworld::Observation& obs, const simworld::RobotState& truth) = 0;
};

/// Runs an MLP policy: keeps the last P observations, takes the first action
/// of the predicted chunk, clips it to [-1, 1] and maps it to physical units.
class PolicyController : public Controller {
 public:
  PolicyController(std::shared_ptr<const policy::MlpPolicy> policy, curation::ActionLimits limits = {});
  void reset(const RouteSegment& segment) override;
  Command act(const simworld::Observation& obs, const simworld::RobotState& truth) override;

 private:
  std::shared_ptr<const policy::MlpPolicy> policy_;
  curation::ActionLimits limits_;
  std::deque<simworld::Observation> history_;
};

/// Noise-free pure pursuit along the segment path using the true pose.
class ScriptedExpertController : public Controller {
 public:
  explicit ScriptedExpertController(double speed_factor = 0.8, double lookahead_m = 2.0,
                                    simworld::RobotLimits limits = {});
  void reset(const RouteSegment& segment) override;
  Command act(const simworld::Observation& obs, const simworld::RobotState& truth) override;

 private:
  double speed_factor_;
  double lookahead_;
  simworld::RobotLimits limits_;
  std::optional<expert::PurePursuit> tracker_;
};

class ConstantController : public Controller {
 public:
  explicit ConstantController(Command c) : command_(c) {}
  void reset(const RouteSegment&) override {}
  Command act(const simworld::Observation&, const simworld::RobotState&) override { return command_; }

 private:
  Command command_;
};

// ------------------------------------------------------------------ rollouts

enum class FailureCause { kNone, kCollisionStuck, kOffRoute, kTimeout };

std::string to_string(FailureCause c);
FailureCause failure_cause_from_string(const std::string& s);

struct EvalConfig {
  double control_dt_s{0.25};
  int latency_steps{1};
  double stuck_window_s{15.0};
  double stuck_progress_m{0.5};
  double off_route_m{25.0};
  simworld::NoiseConfig noise;
  simworld::SensorConfig sensor;
  simworld::RobotLimits limits;
  curation::ActionLimits action_limits;
};

struct SegmentOutcome {
  std::size_t segment{0};
  bool success{false};
  FailureCause cause{FailureCause::kNone};
  double elapsed_s{0.0};
  double progress_m{0.0};
  simworld::RobotState final_state;
};

/// One segment in closed loop from `start`. Deterministic in (controller
/// state, route, seed). Appends the true trajectory to `trace` when given.
SegmentOutcome run_segment(Controller& controller, const simworld::World& world, const RouteSpec& route,
                           std::size_t segment, const EvalConfig& config, std::uint64_t seed,
                           std::optional<simworld::RobotState> start = std::nullopt,
                           std::vector<simworld::TraceRow>* trace = nullptr);

struct RouteOutcome {
  std::string route_id;
  int rep{0};
  std::vector<SegmentOutcome> segments;
  std::vector<double> segment_lengths;
};

/// Segments in order; success continues from the reached state, failure
/// resets the robot to the next segment start.
RouteOutcome run_route(Controller& controller, const simworld::World& world, const RouteSpec& route,
                       const EvalConfig& config, std::uint64_t seed, int rep);

// ------------------------------------------------------------------- metrics

struct Interval {
  double lower{0.0};
  double upper{0.0};
};

/// Continuity-corrected Wilson score interval. Throws if n == 0 or k > n.
Interval wilson_cc(std::size_t k, std::size_t n, double z = 1.959964);

struct SuccessRate {
  std::size_t successes{0};
  std::size_t trials{0};
  double rate{0.0};
  Interval ci;
};

SuccessRate success_rate(std::size_t successes, std::size_t trials);
SuccessRate success_rate(std::span<const SegmentOutcome> outcomes);

/// Failures per 100 m of progress; absent when there is no progress.
std::optional<double> nir(std::span<const SegmentOutcome> outcomes);
/// Seconds per 100 m over successful segments; absent without successes.
std::optional<double> nps(std::span<const SegmentOutcome> outcomes);
double dist_to_first_failure(const RouteOutcome& route);

// ----------------------------------------------------------------- records

struct OutcomeRow {
  std::string policy_id;
  std::string route_id;
  int rep{0};
  std::size_t segment{0};
  bool success{false};
  FailureCause cause{FailureCause::kNone};
  double elapsed_s{0.0};
  double progress_m{0.0};

  friend bool operator==(const OutcomeRow&, const OutcomeRow&) = default;
};

std::vector<OutcomeRow> to_rows(const std::string& policy_id, const RouteOutcome& route);
/// Rows back to per-segment outcomes (final states are not recorded).
std::vector<SegmentOutcome> to_outcomes(std::span<const OutcomeRow> rows);

/// `header_lines` are written first, each prefixed with "# ".
void write_outcomes_csv(std::ostream& out, std::span<const OutcomeRow> rows,
                        std::span<const std::string> header_lines = {});
/// Skips "#" comment lines. Throws std::invalid_argument on malformed rows.
std::vector<OutcomeRow> read_outcomes_csv(std::istream& in);

}  // namespace navscale::evalharness
