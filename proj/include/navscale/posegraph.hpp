#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "navscale/episode.hpp"
#include "navscale/geokit.hpp"
#include "navscale/pose.hpp"

namespace navscale::posegraph {

struct RobotGeometry {
  double wheel_radius_m{0.1};
  double track_width_m{0.35};
};

inline constexpr double kMaxLocalFrameRangeM = 10'000.0;

/// Equirectangular projection around `origin` (x east, y north).
/// Throws std::out_of_range if `p` is farther than 10 km from the origin.
Point2 local_frame(const geokit::GeoPoint& origin, const geokit::GeoPoint& p);
/// Inverse of local_frame.
geokit::GeoPoint from_local_frame(const geokit::GeoPoint& origin, Point2 xy);

/// Body velocities of a differential drive from wheel RPMs.
Command wheel_velocity(double rpm_left, double rpm_right, const RobotGeometry& robot);
/// Wheel RPMs that realize a body velocity.
WheelRpm wheel_rpm_for(const Command& body, const RobotGeometry& robot);

/// Relative motion over `dt` with constant wheel speeds (exact arc).
PoseSE2 wheel_odometry(double rpm_left, double rpm_right, const RobotGeometry& robot, double dt);

/// a ⊕ delta, with delta expressed in a's frame.
PoseSE2 compose(const PoseSE2& a, const PoseSE2& delta);
/// The delta d with a ⊕ d = b.
PoseSE2 between(const PoseSE2& a, const PoseSE2& b);

struct FusionConfig {
  double sigma_gps_m{3.0};
  double sigma_heading_rad{0.3};
  double sigma_odom_m{0.05};
  double sigma_odom_rad{0.02};
  /// Heading factors get sigma / sqrt(weight); weight 0 drops them.
  double heading_weight{1.0};
  RobotGeometry robot;
};

struct GpsFactor {
  std::size_t node{0};
  Point2 observed;
  double sigma{1.0};
};

struct HeadingFactor {
  std::size_t node{0};
  double observed{0.0};
  double sigma{1.0};
};

/// Connects node `from` to node `from + 1`.
struct OdometryFactor {
  std::size_t from{0};
  PoseSE2 delta;
  double sigma_xy{1.0};
  double sigma_theta{1.0};
};

struct FusionProblem {
  geokit::GeoPoint origin;
  std::vector<double> timestamps;
  std::vector<GpsFactor> gps;
  std::vector<HeadingFactor> heading;
  std::vector<OdometryFactor> odometry;
  /// GPS positions and raw headings.
  std::vector<PoseSE2> initial;

  [[nodiscard]] std::size_t node_count() const { return initial.size(); }
};

/// One node per 4 Hz step of the episode. Odometry factors integrate the
/// native-rate wheel RPMs between consecutive nodes. Throws
/// std::invalid_argument for fewer than two nodes.
FusionProblem build_problem(const RawEpisode& e, const FusionConfig& config);
/// Same, reusing an already resampled series of `e`.
FusionProblem build_problem(const RawEpisode& e, const AlignedSeries& aligned, const FusionConfig& config);

struct OptimizeOptions {
  int max_iters{50};
  double tol{1e-9};
  std::size_t window{512};
  std::size_t overlap{64};
};

struct FusionResult {
  std::vector<PoseSE2> poses;
  bool converged{false};
  int iterations{0};
  double final_cost{0.0};
  /// Cost after every accepted iteration (all windows, in order).
  std::vector<double> cost_log;
};

/// Damped Gauss-Newton over the chain. Long problems are solved in
/// overlapping windows; each later window holds its first node fixed at the
/// previous window's estimate.
FusionResult optimize(const FusionProblem& problem, const OptimizeOptions& options = {});

/// Sum of squared whitened residuals.
double total_cost(const FusionProblem& problem, const std::vector<PoseSE2>& poses);

/// Whitened residuals and their Jacobians for each factor type.
struct GpsLinearization {
  Eigen::Vector2d residual;
  Eigen::Matrix<double, 2, 3> jacobian;
};
struct HeadingLinearization {
  double residual{0.0};
  Eigen::Matrix<double, 1, 3> jacobian;
};
struct OdometryLinearization {
  Eigen::Vector3d residual;
  Eigen::Matrix3d jacobian_from;
  Eigen::Matrix3d jacobian_to;
};

GpsLinearization linearize(const GpsFactor& f, const PoseSE2& pose);
HeadingLinearization linearize(const HeadingFactor& f, const PoseSE2& pose);
OdometryLinearization linearize(const OdometryFactor& f, const PoseSE2& from, const PoseSE2& to);

/// Per-iteration cost dump as CSV (iteration,cost).
void write_cost_log_csv(std::ostream& out, const FusionResult& result);

}  // namespace navscale::posegraph
