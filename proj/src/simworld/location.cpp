#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

#include <fmt/format.h>

#include "navscale/simworld.hpp"

namespace navscale::simworld {
namespace {

constexpr double kWallThickness = 1.0;
constexpr double kIntersectionMargin = 1.5;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool graph_connected(std::size_t n, const std::vector<std::pair<int, int>>& edges) {
  if (n == 0) return true;
  std::vector<std::vector<int>> adj(n);
  for (const auto& [a, b] : edges) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  std::vector<bool> seen(n, false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        ++count;
        q.push(v);
      }
    }
  }
  return count == n;
}

// Every point of every route edge keeps the lane free for the robot.
bool lanes_clear(const World& world, double lane_half_width) {
  const auto& g = world.spec().route_graph;
  for (const auto& [a, b] : g.edges) {
    const Point2 p = g.nodes[static_cast<std::size_t>(a)];
    const Point2 q = g.nodes[static_cast<std::size_t>(b)];
    const double len = distance(p, q);
    const int samples = static_cast<int>(std::ceil(len / 0.5));
    for (int k = 0; k <= samples; ++k) {
      const double t = static_cast<double>(k) / samples;
      if (world.collides(p + t * (q - p), lane_half_width)) return false;
    }
  }
  return true;
}

}  // namespace

std::vector<std::vector<int>> RouteGraph::adjacency() const {
  std::vector<std::vector<int>> adj(nodes.size());
  for (const auto& [a, b] : edges) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());
  return adj;
}

bool RouteGraph::connected() const { return graph_connected(nodes.size(), edges); }

double RouteGraph::edge_length(std::size_t edge) const {
  return distance(nodes[static_cast<std::size_t>(edges[edge].first)],
                  nodes[static_cast<std::size_t>(edges[edge].second)]);
}

LocationSpec generate_location(std::uint64_t seed, const GenerationOptions& options) {
  std::mt19937_64 rng(seed);
  LocationSpec spec;
  spec.seed = seed;

  LocationStyle& style = spec.style;
  style.block_size_m = uniform(rng, 14.0, 32.0);
  style.corridor_width_m = uniform(rng, 3.5, 9.0);
  style.clutter_density = uniform(rng, 0.0, 2.5);
  style.clutter_scale_m = uniform(rng, 0.25, 0.9);
  style.edge_drop_prob = uniform(rng, 0.0, 0.3);
  if (options.clutter_density) style.clutter_density = *options.clutter_density;

  const int n = std::max(options.grid_nodes, 2);
  const double c = style.corridor_width_m;
  const double spacing = style.block_size_m + c;
  const double extent = (n - 1) * spacing + c;
  spec.width_m = extent;
  spec.height_m = extent;

  auto node_index = [n](int i, int j) { return j * n + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) spec.route_graph.nodes.push_back({c / 2 + i * spacing, c / 2 + j * spacing});
  }
  std::vector<std::pair<int, int>> candidates;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (i + 1 < n) candidates.emplace_back(node_index(i, j), node_index(i + 1, j));
      if (j + 1 < n) candidates.emplace_back(node_index(i, j), node_index(i, j + 1));
    }
  }

  // Drop corridors at random while the graph stays connected.
  std::vector<bool> dropped(candidates.size(), false);
  for (std::size_t e = 0; e < candidates.size(); ++e) {
    if (uniform(rng, 0.0, 1.0) >= style.edge_drop_prob) continue;
    dropped[e] = true;
    std::vector<std::pair<int, int>> kept;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      if (!dropped[k]) kept.push_back(candidates[k]);
    }
    if (!graph_connected(spec.route_graph.nodes.size(), kept)) dropped[e] = false;
  }
  for (std::size_t e = 0; e < candidates.size(); ++e) {
    if (!dropped[e]) spec.route_graph.edges.push_back(candidates[e]);
  }

  // Boundary walls just outside the extent.
  const double w = kWallThickness;
  spec.obstacles.push_back({Rect{{-w, -w}, {extent + w, 0.0}}, ObstacleKind::kBoundary});
  spec.obstacles.push_back({Rect{{-w, extent}, {extent + w, extent + w}}, ObstacleKind::kBoundary});
  spec.obstacles.push_back({Rect{{-w, 0.0}, {0.0, extent}}, ObstacleKind::kBoundary});
  spec.obstacles.push_back({Rect{{extent, 0.0}, {extent + w, extent}}, ObstacleKind::kBoundary});

  // Building blocks between corridors.
  for (int j = 0; j + 1 < n; ++j) {
    for (int i = 0; i + 1 < n; ++i) {
      const Point2 lo{c + i * spacing, c + j * spacing};
      spec.obstacles.push_back({Rect{lo, {lo.x + style.block_size_m, lo.y + style.block_size_m}}, ObstacleKind::kBlock});
    }
  }
  // Dropped corridors are walled off across their full width.
  for (std::size_t e = 0; e < candidates.size(); ++e) {
    if (!dropped[e]) continue;
    const Point2 a = spec.route_graph.nodes[static_cast<std::size_t>(candidates[e].first)];
    const Point2 b = spec.route_graph.nodes[static_cast<std::size_t>(candidates[e].second)];
    Rect r;
    if (a.y == b.y) {
      r = Rect{{a.x + c / 2, a.y - c / 2}, {b.x - c / 2, a.y + c / 2}};
    } else {
      r = Rect{{a.x - c / 2, a.y + c / 2}, {a.x + c / 2, b.y - c / 2}};
    }
    spec.obstacles.push_back({r, ObstacleKind::kBlock});
  }
  const std::size_t fixed_obstacles = spec.obstacles.size();

  std::seed_seq anchor_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0xa9c7u};
  std::mt19937_64 anchor_rng(anchor_seq);
  const double lat = uniform(anchor_rng, -55.0, 60.0);
  const double lon = uniform(anchor_rng, -180.0, 180.0);
  spec.anchor = options.anchor.value_or(geokit::GeoPoint(lat, lon));

  const RobotLimits robot;
  const double lane = options.lane_half_width_m;
  for (int attempt = 0; attempt <= options.max_rerolls; ++attempt) {
    spec.obstacles.resize(fixed_obstacles);
    spec.spawn_poses.clear();
    const double free_half = c / 2 - lane;
    for (const auto& [a_idx, b_idx] : spec.route_graph.edges) {
      const Point2 a = spec.route_graph.nodes[static_cast<std::size_t>(a_idx)];
      const Point2 b = spec.route_graph.nodes[static_cast<std::size_t>(b_idx)];
      const double len = distance(a, b);
      const Point2 dir = (1.0 / len) * (b - a);
      const Point2 normal{-dir.y, dir.x};
      std::poisson_distribution<int> count_dist(style.clutter_density * len / 10.0);
      const int count = style.clutter_density > 0.0 ? count_dist(rng) : 0;
      for (int k = 0; k < count; ++k) {
        double size = style.clutter_scale_m * uniform(rng, 0.5, 1.0);
        const double side = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
        const bool round = uniform(rng, 0.0, 1.0) < 0.6;
        const double along_lo = c / 2 + kIntersectionMargin + size;
        const double along_hi = len - c / 2 - kIntersectionMargin - size;
        const double offset_u = uniform(rng, 0.0, 1.0);
        const double along_u = uniform(rng, 0.0, 1.0);
        if (free_half < 0.2 || along_hi <= along_lo) continue;
        size = std::min(size, free_half / 2);
        const double offset = lane + size + offset_u * (free_half - 2 * size);
        const Point2 center = a + (along_lo + along_u * (along_hi - along_lo)) * dir + (side * offset) * normal;
        if (round) {
          spec.obstacles.push_back({Circle{center, size}, ObstacleKind::kClutter});
        } else {
          spec.obstacles.push_back({Rect{{center.x - size, center.y - size}, {center.x + size, center.y + size}},
                                    ObstacleKind::kClutter});
        }
      }
    }
    const auto adj = spec.route_graph.adjacency();
    for (std::size_t i = 0; i < spec.route_graph.nodes.size(); ++i) {
      const Point2 p = spec.route_graph.nodes[i];
      double heading = 0.0;
      if (!adj[i].empty()) {
        const Point2 q = spec.route_graph.nodes[static_cast<std::size_t>(adj[i][0])];
        heading = std::atan2(q.y - p.y, q.x - p.x);
      }
      spec.spawn_poses.push_back({p.x, p.y, heading});
    }

    const World world(spec);
    bool ok = spec.route_graph.connected() && lanes_clear(world, std::min(lane, c / 2) - 0.05);
    for (const auto& pose : spec.spawn_poses) ok = ok && !world.collides(pose.position(), robot.radius_m);
    if (ok) return spec;
  }
  throw GenerationError(fmt::format("location generation failed after {} re-rolls (seed {})", options.max_rerolls,
                                    seed),
                        seed);
}

}  // namespace navscale::simworld
