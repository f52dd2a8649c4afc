#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "navscale/posegraph.hpp"

namespace navscale::posegraph {
namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

Point2 local_frame(const geokit::GeoPoint& origin, const geokit::GeoPoint& p) {
  const double sep = geokit::haversine_m(origin, p);
  if (sep > kMaxLocalFrameRangeM) {
    throw std::out_of_range(fmt::format("local_frame: point is {:.0f} m from the origin (limit {:.0f} m)", sep,
                                        kMaxLocalFrameRangeM));
  }
  const double dlat = (p.lat_deg() - origin.lat_deg()) * kDegToRad;
  const double dlon = wrap_angle((p.lon_deg() - origin.lon_deg()) * kDegToRad);
  return {geokit::kEarthRadiusM * dlon * std::cos(origin.lat_deg() * kDegToRad), geokit::kEarthRadiusM * dlat};
}

geokit::GeoPoint from_local_frame(const geokit::GeoPoint& origin, Point2 xy) {
  const double lat = origin.lat_deg() + xy.y / geokit::kEarthRadiusM / kDegToRad;
  double lon = origin.lon_deg() + xy.x / (geokit::kEarthRadiusM * std::cos(origin.lat_deg() * kDegToRad)) / kDegToRad;
  if (lon > 180.0) lon -= 360.0;
  if (lon < -180.0) lon += 360.0;
  return {lat, lon};
}

Command wheel_velocity(double rpm_left, double rpm_right, const RobotGeometry& robot) {
  const double r = robot.wheel_radius_m;
  return {r * std::numbers::pi * (rpm_left + rpm_right) / 60.0,
          r * std::numbers::pi * (rpm_right - rpm_left) / (30.0 * robot.track_width_m)};
}

WheelRpm wheel_rpm_for(const Command& body, const RobotGeometry& robot) {
  const double r = robot.wheel_radius_m;
  const double sum = body.v * 60.0 / (r * std::numbers::pi);
  const double diff = body.omega * 30.0 * robot.track_width_m / (r * std::numbers::pi);
  return {(sum - diff) / 2.0, (sum + diff) / 2.0};
}

PoseSE2 wheel_odometry(double rpm_left, double rpm_right, const RobotGeometry& robot, double dt) {
  const Command vel = wheel_velocity(rpm_left, rpm_right, robot);
  const double dtheta = vel.omega * dt;
  if (std::abs(dtheta) < 1e-9) {
    // Second-order expansion of the arc for tiny rotations.
    const double d = vel.v * dt;
    return {d * (1.0 - dtheta * dtheta / 6.0), d * dtheta / 2.0, dtheta};
  }
  const double radius = vel.v / vel.omega;
  return {radius * std::sin(dtheta), radius * (1.0 - std::cos(dtheta)), wrap_angle(dtheta)};
}

PoseSE2 compose(const PoseSE2& a, const PoseSE2& delta) {
  const double c = std::cos(a.theta), s = std::sin(a.theta);
  return {a.x + c * delta.x - s * delta.y, a.y + s * delta.x + c * delta.y, wrap_angle(a.theta + delta.theta)};
}

PoseSE2 between(const PoseSE2& a, const PoseSE2& b) {
  const double c = std::cos(a.theta), s = std::sin(a.theta);
  const double dx = b.x - a.x, dy = b.y - a.y;
  return {c * dx + s * dy, -s * dx + c * dy, wrap_angle(b.theta - a.theta)};
}

}  // namespace navscale::posegraph
