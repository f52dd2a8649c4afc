#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "navscale/simworld.hpp"

namespace navscale::simworld {
namespace {

struct Bounds {
  double min_x, min_y, max_x, max_y;
};

Bounds bounds_of(const Obstacle& o) {
  if (const auto* r = std::get_if<Rect>(&o.shape)) return {r->min.x, r->min.y, r->max.x, r->max.y};
  const auto& c = std::get<Circle>(o.shape);
  return {c.center.x - c.radius, c.center.y - c.radius, c.center.x + c.radius, c.center.y + c.radius};
}

double distance_to(const Obstacle& o, Point2 p) {
  if (const auto* r = std::get_if<Rect>(&o.shape)) {
    const double dx = std::max({r->min.x - p.x, 0.0, p.x - r->max.x});
    const double dy = std::max({r->min.y - p.y, 0.0, p.y - r->max.y});
    return std::hypot(dx, dy);
  }
  const auto& c = std::get<Circle>(o.shape);
  return std::max(0.0, distance(p, c.center) - c.radius);
}

// Entry distance of the ray into the obstacle; 0 if the origin is inside,
// infinity on a miss.
double ray_hit(const Obstacle& o, Point2 origin, Point2 dir) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (const auto* r = std::get_if<Rect>(&o.shape)) {
    double t_enter = -kInf, t_exit = kInf;
    const double org[2] = {origin.x, origin.y};
    const double d[2] = {dir.x, dir.y};
    const double lo[2] = {r->min.x, r->min.y};
    const double hi[2] = {r->max.x, r->max.y};
    for (int k = 0; k < 2; ++k) {
      if (std::abs(d[k]) < 1e-15) {
        if (org[k] < lo[k] || org[k] > hi[k]) return kInf;
        continue;
      }
      double t1 = (lo[k] - org[k]) / d[k];
      double t2 = (hi[k] - org[k]) / d[k];
      if (t1 > t2) std::swap(t1, t2);
      t_enter = std::max(t_enter, t1);
      t_exit = std::min(t_exit, t2);
    }
    if (t_enter > t_exit || t_exit < 0.0) return kInf;
    return std::max(t_enter, 0.0);
  }
  const auto& c = std::get<Circle>(o.shape);
  const Point2 m = origin - c.center;
  const double b = dot(m, dir);
  const double cc = dot(m, m) - c.radius * c.radius;
  if (cc <= 0.0) return 0.0;
  if (b > 0.0) return kInf;
  const double disc = b * b - cc;
  if (disc < 0.0) return kInf;
  return -b - std::sqrt(disc);
}

}  // namespace

World::World(LocationSpec spec, double cell_size_m) : spec_(std::move(spec)), cell_(cell_size_m) {
  double min_x = 0.0, min_y = 0.0, max_x = spec_.width_m, max_y = spec_.height_m;
  for (const auto& o : spec_.obstacles) {
    const Bounds b = bounds_of(o);
    min_x = std::min(min_x, b.min_x);
    min_y = std::min(min_y, b.min_y);
    max_x = std::max(max_x, b.max_x);
    max_y = std::max(max_y, b.max_y);
  }
  origin_x_ = min_x;
  origin_y_ = min_y;
  nx_ = static_cast<int>(std::ceil((max_x - min_x) / cell_)) + 1;
  ny_ = static_cast<int>(std::ceil((max_y - min_y) / cell_)) + 1;
  cells_.resize(static_cast<std::size_t>(nx_ * ny_));
  for (std::size_t i = 0; i < spec_.obstacles.size(); ++i) {
    const Bounds b = bounds_of(spec_.obstacles[i]);
    const int x0 = std::clamp(static_cast<int>(std::floor((b.min_x - origin_x_) / cell_)), 0, nx_ - 1);
    const int x1 = std::clamp(static_cast<int>(std::floor((b.max_x - origin_x_) / cell_)), 0, nx_ - 1);
    const int y0 = std::clamp(static_cast<int>(std::floor((b.min_y - origin_y_) / cell_)), 0, ny_ - 1);
    const int y1 = std::clamp(static_cast<int>(std::floor((b.max_y - origin_y_) / cell_)), 0, ny_ - 1);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) cells_[static_cast<std::size_t>(y * nx_ + x)].push_back(i);
    }
  }
}

void World::candidates(double min_x, double min_y, double max_x, double max_y, std::vector<std::size_t>& out) const {
  out.clear();
  const int x0 = std::clamp(static_cast<int>(std::floor((min_x - origin_x_) / cell_)), 0, nx_ - 1);
  const int x1 = std::clamp(static_cast<int>(std::floor((max_x - origin_x_) / cell_)), 0, nx_ - 1);
  const int y0 = std::clamp(static_cast<int>(std::floor((min_y - origin_y_) / cell_)), 0, ny_ - 1);
  const int y1 = std::clamp(static_cast<int>(std::floor((max_y - origin_y_) / cell_)), 0, ny_ - 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const auto& cell = cells_[static_cast<std::size_t>(y * nx_ + x)];
      out.insert(out.end(), cell.begin(), cell.end());
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

double World::clearance(Point2 p, double search_radius) const {
  thread_local std::vector<std::size_t> ids;
  candidates(p.x - search_radius, p.y - search_radius, p.x + search_radius, p.y + search_radius, ids);
  double best = search_radius;
  for (std::size_t i : ids) best = std::min(best, distance_to(spec_.obstacles[i], p));
  return best;
}

std::vector<double> World::raycast(Point2 origin, std::span<const double> angles, double max_range) const {
  thread_local std::vector<std::size_t> ids;
  candidates(origin.x - max_range, origin.y - max_range, origin.x + max_range, origin.y + max_range, ids);
  std::vector<double> out(angles.size(), max_range);
  for (std::size_t k = 0; k < angles.size(); ++k) {
    const Point2 dir{std::cos(angles[k]), std::sin(angles[k])};
    double best = max_range;
    for (std::size_t i : ids) best = std::min(best, ray_hit(spec_.obstacles[i], origin, dir));
    out[k] = best;
  }
  return out;
}

bool World::inside_extent(Point2 p) const {
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= spec_.width_m && p.y <= spec_.height_m;
}

std::vector<double> fan_angles(const SensorConfig& sensor) {
  const double half = sensor.fov_deg * std::numbers::pi / 360.0;
  std::vector<double> out(sensor.rays);
  if (sensor.rays == 1) {
    out[0] = 0.0;
    return out;
  }
  for (std::size_t i = 0; i < sensor.rays; ++i) {
    out[i] = half - 2.0 * half * static_cast<double>(i) / static_cast<double>(sensor.rays - 1);
  }
  return out;
}

std::vector<double> sense_ranges(const PoseSE2& pose, const World& world, const SensorConfig& sensor) {
  std::vector<double> angles = fan_angles(sensor);
  for (auto& a : angles) a += pose.theta;
  auto ranges = world.raycast(pose.position(), angles, sensor.max_range_m);
  for (auto& r : ranges) r = std::clamp(r / sensor.max_range_m, 0.0, 1.0);
  return ranges;
}

Observation sense(const RobotState& state, const World& world, Point2 goal, const NoiseConfig& noise,
                  std::mt19937_64& rng, const SensorConfig& sensor) {
  if (!world.inside_extent(goal)) {
    throw std::invalid_argument(fmt::format("sense: goal ({}, {}) outside the world extent", goal.x, goal.y));
  }
  Observation obs;
  obs.ranges = sense_ranges(state.pose, world, sensor);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Point2 delta = goal - state.pose.position();
  const double d = norm(delta) * std::max(0.0, 1.0 + noise.sigma_distance_rel * gauss(rng));
  const double bearing = wrap_angle(std::atan2(delta.y, delta.x) - state.pose.theta + noise.heading_bias_rad +
                                    noise.sigma_bearing_rad * gauss(rng));
  obs.goal = {std::clamp(d / 1000.0, 0.0, 1.0), bearing / std::numbers::pi};
  return obs;
}

}  // namespace navscale::simworld
