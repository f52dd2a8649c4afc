#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>

#include <fmt/format.h>

#include "navscale/expert.hpp"

namespace navscale::expert {
namespace {

struct Dijkstra {
  std::vector<double> dist;
  std::vector<int> prev;
};

Dijkstra run_dijkstra(const simworld::LocationSpec& world, int start) {
  const auto& g = world.route_graph;
  const auto adj = g.adjacency();
  const std::size_t n = g.nodes.size();
  Dijkstra d{std::vector<double>(n, std::numeric_limits<double>::infinity()), std::vector<int>(n, -1)};
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  d.dist[static_cast<std::size_t>(start)] = 0.0;
  open.emplace(0.0, start);
  while (!open.empty()) {
    const auto [cost, u] = open.top();
    open.pop();
    if (cost > d.dist[static_cast<std::size_t>(u)]) continue;
    for (int v : adj[static_cast<std::size_t>(u)]) {
      const double next = cost + distance(g.nodes[static_cast<std::size_t>(u)], g.nodes[static_cast<std::size_t>(v)]);
      if (next < d.dist[static_cast<std::size_t>(v)]) {
        d.dist[static_cast<std::size_t>(v)] = next;
        d.prev[static_cast<std::size_t>(v)] = u;
        open.emplace(next, v);
      }
    }
  }
  return d;
}

void check_node(const simworld::LocationSpec& world, int node) {
  if (node < 0 || static_cast<std::size_t>(node) >= world.route_graph.nodes.size()) {
    throw std::invalid_argument(fmt::format("node {} is not in the route graph", node));
  }
}

}  // namespace

void OperatorProfile::validate() const {
  const auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(pause_prob) || !prob(detour_prob)) throw std::invalid_argument("operator probabilities must lie in [0, 1]");
  if (sigma_v < 0.0 || sigma_omega < 0.0) throw std::invalid_argument("operator noise must be non-negative");
  if (speed_factor < 0.5 || speed_factor > 1.0) throw std::invalid_argument("speed_factor must lie in [0.5, 1]");
}

double shortest_path_length(const simworld::LocationSpec& world, int start, int goal) {
  check_node(world, start);
  check_node(world, goal);
  return run_dijkstra(world, start).dist[static_cast<std::size_t>(goal)];
}

std::vector<int> plan_route(const simworld::LocationSpec& world, int start, int goal, std::mt19937_64& rng,
                            double detour_prob) {
  check_node(world, start);
  check_node(world, goal);
  const Dijkstra d = run_dijkstra(world, start);
  if (d.dist[static_cast<std::size_t>(goal)] == std::numeric_limits<double>::infinity()) {
    throw std::invalid_argument(fmt::format("node {} is unreachable from node {}", goal, start));
  }
  std::vector<int> path;
  for (int v = goal; v != -1; v = d.prev[static_cast<std::size_t>(v)]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  if (detour_prob <= 0.0 || path.size() < 3) return path;

  const auto adj = world.route_graph.adjacency();
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<int> walk{path.front()};
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    const int node = path[i];
    walk.push_back(node);
    if (coin(rng) < detour_prob) {
      const auto& nbrs = adj[static_cast<std::size_t>(node)];
      std::uniform_int_distribution<std::size_t> pick(0, nbrs.size() - 1);
      walk.push_back(nbrs[pick(rng)]);
      walk.push_back(node);
    }
  }
  walk.push_back(path.back());
  return walk;
}

std::vector<Point2> route_polyline(const simworld::LocationSpec& world, std::span<const int> nodes) {
  std::vector<Point2> out;
  for (int n : nodes) {
    check_node(world, n);
    out.push_back(world.route_graph.nodes[static_cast<std::size_t>(n)]);
  }
  return out;
}

double polyline_length(std::span<const Point2> polyline) {
  double len = 0.0;
  for (std::size_t i = 1; i < polyline.size(); ++i) len += distance(polyline[i - 1], polyline[i]);
  return len;
}

}  // namespace navscale::expert
