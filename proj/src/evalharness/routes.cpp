#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "navscale/evalharness.hpp"

namespace navscale::evalharness {
namespace {

constexpr int kMaxAttempts = 50;
constexpr double kScanStepM = 0.5;

struct Polyline {
  std::vector<Point2> points;
  std::vector<double> cumulative;

  void push(Point2 p) {
    cumulative.push_back(points.empty() ? 0.0 : cumulative.back() + distance(points.back(), p));
    points.push_back(p);
  }

  [[nodiscard]] std::size_t segment_at(double s) const {
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
    const auto i = static_cast<std::size_t>(it - cumulative.begin());
    return std::clamp<std::size_t>(i, 1, points.size() - 1);
  }

  [[nodiscard]] Point2 at(double s) const {
    const std::size_t i = segment_at(s);
    const double len = cumulative[i] - cumulative[i - 1];
    const double f = len > 0.0 ? std::clamp((s - cumulative[i - 1]) / len, 0.0, 1.0) : 0.0;
    return points[i - 1] + f * (points[i] - points[i - 1]);
  }

  [[nodiscard]] double heading_at(double s) const {
    const std::size_t i = segment_at(s);
    const Point2 d = points[i] - points[i - 1];
    return std::atan2(d.y, d.x);
  }
};

// Largest rise of the distance to `goal` while walking the path. Zero for a
// path that only ever closes in on the goal.
double max_distance_rise(const Polyline& path, Point2 goal) {
  double best = distance(path.points.front(), goal);
  double rise = 0.0;
  for (double s = 0.0; s <= path.cumulative.back(); s += kScanStepM) {
    const double d = distance(path.at(s), goal);
    rise = std::max(rise, d - best);
    best = std::min(best, d);
  }
  return rise;
}

}  // namespace

double RouteSegment::length() const { return expert::polyline_length(path); }

double RouteSpec::length() const {
  double total = 0.0;
  for (const auto& s : segments) total += s.length();
  return total;
}

RouteSpec generate_route(const simworld::LocationSpec& world, const std::string& id, std::uint64_t seed,
                         const RouteGenOptions& options) {
  if (options.segments == 0) throw std::invalid_argument("route needs at least one segment");
  if (!(options.min_straight_m > 0.0 && options.max_straight_m >= options.min_straight_m)) {
    throw std::invalid_argument("invalid segment length bounds");
  }
  if (world.route_graph.nodes.size() < 2) throw std::invalid_argument("route graph too small");
  std::mt19937_64 rng(seed);
  const auto& nodes = world.route_graph.nodes;
  std::uniform_int_distribution<std::size_t> pick_node(0, nodes.size() - 1);

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    RouteSpec route{id, world.seed, {}, 10.0};
    std::size_t node = pick_node(rng);
    while (route.segments.size() < options.segments) {
      std::vector<std::size_t> candidates;
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        const double d = distance(nodes[node], nodes[j]);
        if (d >= options.min_straight_m && d <= options.max_straight_m) candidates.push_back(j);
      }
      std::shuffle(candidates.begin(), candidates.end(), rng);
      bool placed = false;
      for (std::size_t goal : candidates) {
        std::vector<int> hops;
        try {
          hops = expert::plan_route(world, static_cast<int>(node), static_cast<int>(goal), rng, 0.0);
        } catch (const std::invalid_argument&) {
          continue;
        }
        Polyline path;
        for (int h : hops) path.push(nodes[static_cast<std::size_t>(h)]);
        if (max_distance_rise(path, nodes[goal]) > options.max_distance_rise_m) continue;
        RouteSegment seg;
        seg.start = {nodes[node].x, nodes[node].y, path.heading_at(1e-6)};
        seg.checkpoint = nodes[goal];
        seg.path = path.points;
        seg.time_limit_s = options.time_limit_factor * seg.length() / options.reference_speed_mps;
        route.segments.push_back(std::move(seg));
        node = goal;
        placed = true;
        break;
      }
      if (!placed) break;
    }
    if (route.segments.size() == options.segments) return route;
  }
  throw std::runtime_error(fmt::format("could not generate route '{}' on world {}", id, world.seed));
}

double project_onto_polyline(std::span<const Point2> path, Point2 p) {
  if (path.empty()) throw std::invalid_argument("empty polyline");
  double best = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  double s0 = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Point2 ab = path[i] - path[i - 1];
    const double len2 = dot(ab, ab);
    const double f = len2 > 0.0 ? std::clamp(dot(p - path[i - 1], ab) / len2, 0.0, 1.0) : 0.0;
    const double d = distance(p, path[i - 1] + f * ab);
    const double len = std::sqrt(len2);
    if (d < best) {
      best = d;
      best_s = s0 + f * len;
    }
    s0 += len;
  }
  return best_s;
}

double distance_to_polyline(std::span<const Point2> path, Point2 p) {
  if (path.empty()) throw std::invalid_argument("empty polyline");
  double best = distance(p, path.front());
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Point2 ab = path[i] - path[i - 1];
    const double len2 = dot(ab, ab);
    const double f = len2 > 0.0 ? std::clamp(dot(p - path[i - 1], ab) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, distance(p, path[i - 1] + f * ab));
  }
  return best;
}

}  // namespace navscale::evalharness
