#include <algorithm>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "navscale/simworld.hpp"

namespace navscale::simworld {
namespace {

using nlohmann::json;

const char* kind_name(ObstacleKind k) {
  switch (k) {
    case ObstacleKind::kBoundary: return "boundary";
    case ObstacleKind::kBlock: return "block";
    case ObstacleKind::kClutter: return "clutter";
  }
  return "block";
}

ObstacleKind parse_kind(const std::string& s) {
  if (s == "boundary") return ObstacleKind::kBoundary;
  if (s == "clutter") return ObstacleKind::kClutter;
  if (s == "block") return ObstacleKind::kBlock;
  throw std::invalid_argument(fmt::format("unknown obstacle kind '{}'", s));
}

}  // namespace

void write_trace_csv(std::ostream& out, std::span<const TraceRow> trace) {
  out << "t,x,y,theta,v,omega,collided\n";
  for (const auto& r : trace) {
    out << fmt::format("{:.3f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{}\n", r.t, r.state.pose.x, r.state.pose.y,
                       r.state.pose.theta, r.state.v, r.state.omega, r.collided ? 1 : 0);
  }
}

std::string location_to_json(const LocationSpec& spec, int indent) {
  json obstacles = json::array();
  for (const auto& o : spec.obstacles) {
    if (const auto* r = std::get_if<Rect>(&o.shape)) {
      obstacles.push_back({{"type", "rect"}, {"kind", kind_name(o.kind)}, {"min", {r->min.x, r->min.y}},
                           {"max", {r->max.x, r->max.y}}});
    } else {
      const auto& c = std::get<Circle>(o.shape);
      obstacles.push_back({{"type", "circle"}, {"kind", kind_name(o.kind)}, {"center", {c.center.x, c.center.y}},
                           {"radius", c.radius}});
    }
  }
  json nodes = json::array();
  for (const auto& p : spec.route_graph.nodes) nodes.push_back({p.x, p.y});
  json edges = json::array();
  for (const auto& [a, b] : spec.route_graph.edges) edges.push_back({a, b});
  json spawns = json::array();
  for (const auto& p : spec.spawn_poses) spawns.push_back({p.x, p.y, p.theta});
  json doc = {{"seed", spec.seed},
              {"extent", {spec.width_m, spec.height_m}},
              {"anchor", {{"lat_deg", spec.anchor.lat_deg()}, {"lon_deg", spec.anchor.lon_deg()}}},
              {"style",
               {{"block_size_m", spec.style.block_size_m},
                {"corridor_width_m", spec.style.corridor_width_m},
                {"clutter_density", spec.style.clutter_density},
                {"clutter_scale_m", spec.style.clutter_scale_m},
                {"edge_drop_prob", spec.style.edge_drop_prob}}},
              {"obstacles", std::move(obstacles)},
              {"route_graph", {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}}},
              {"spawn_poses", std::move(spawns)}};
  return doc.dump(indent);
}

LocationSpec location_from_json(const std::string& text) {
  const json doc = json::parse(text);
  LocationSpec spec;
  spec.seed = doc.at("seed").get<std::uint64_t>();
  spec.width_m = doc.at("extent").at(0).get<double>();
  spec.height_m = doc.at("extent").at(1).get<double>();
  spec.anchor = geokit::GeoPoint(doc.at("anchor").at("lat_deg").get<double>(), doc.at("anchor").at("lon_deg").get<double>());
  const auto& st = doc.at("style");
  spec.style = {st.at("block_size_m").get<double>(), st.at("corridor_width_m").get<double>(),
                st.at("clutter_density").get<double>(), st.at("clutter_scale_m").get<double>(),
                st.at("edge_drop_prob").get<double>()};
  for (const auto& o : doc.at("obstacles")) {
    const ObstacleKind kind = parse_kind(o.at("kind").get<std::string>());
    if (o.at("type").get<std::string>() == "rect") {
      spec.obstacles.push_back({Rect{{o.at("min").at(0).get<double>(), o.at("min").at(1).get<double>()},
                                     {o.at("max").at(0).get<double>(), o.at("max").at(1).get<double>()}},
                                kind});
    } else {
      spec.obstacles.push_back(
          {Circle{{o.at("center").at(0).get<double>(), o.at("center").at(1).get<double>()}, o.at("radius").get<double>()},
           kind});
    }
  }
  for (const auto& n : doc.at("route_graph").at("nodes")) spec.route_graph.nodes.push_back({n.at(0).get<double>(), n.at(1).get<double>()});
  for (const auto& e : doc.at("route_graph").at("edges")) spec.route_graph.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  for (const auto& p : doc.at("spawn_poses")) {
    spec.spawn_poses.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
  }
  return spec;
}

std::string make_obs_ref(std::uint64_t world_seed, const PoseSE2& true_pose) {
  return fmt::format("sim:{}:{:.4f}:{:.4f}:{:.5f}", world_seed, true_pose.x, true_pose.y, true_pose.theta);
}

ObservationRenderer::ObservationRenderer(GenerationOptions generation, SensorConfig sensor)
    : generation_(std::move(generation)), sensor_(sensor) {}

std::shared_ptr<const World> ObservationRenderer::world(std::uint64_t seed) {
  std::lock_guard lock(mutex_);
  auto it = cache_.find(seed);
  if (it == cache_.end()) {
    it = cache_.emplace(seed, std::make_shared<const World>(generate_location(seed, generation_))).first;
  }
  return it->second;
}

std::vector<double> ObservationRenderer::render(const std::string& obs_ref, bool mirrored) {
  std::istringstream in(obs_ref);
  std::string prefix, seed_s, x_s, y_s, th_s;
  if (!std::getline(in, prefix, ':') || prefix != "sim" || !std::getline(in, seed_s, ':') ||
      !std::getline(in, x_s, ':') || !std::getline(in, y_s, ':') || !std::getline(in, th_s)) {
    throw std::invalid_argument(fmt::format("not a simulator observation reference: '{}'", obs_ref));
  }
  const auto w = world(std::stoull(seed_s));
  auto ranges = sense_ranges({std::stod(x_s), std::stod(y_s), std::stod(th_s)}, *w, sensor_);
  if (mirrored) std::reverse(ranges.begin(), ranges.end());
  return ranges;
}

}  // namespace navscale::simworld
