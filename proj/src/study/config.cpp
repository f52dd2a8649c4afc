#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "navscale/study.hpp"

namespace navscale::study {
namespace {

using nlohmann::json;

// Reads optional keys of one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("{}: expected an object", path_));
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("{}.{}: {}", path_, key, e.what()));
    }
  }

  template <typename Fn>
  void child(const char* key, Fn&& fn) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    Section s(j_.at(key), path_ + "." + key);
    fn(s);
    s.finish();
  }

  [[nodiscard]] const json* raw(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  [[nodiscard]] const std::string& path() const { return path_; }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.contains(item.key())) throw ConfigError(fmt::format("{}: unknown key '{}'", path_, item.key()));
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void validate(const ExperimentConfig& c) {
  const DataConfig& d = c.data;
  require(d.train_locations >= 1, "data.train_locations must be at least 1");
  require(d.hours_per_location > 0.0, "data.hours_per_location must be positive");
  require(d.in_domain_hours >= 0.0, "data.in_domain_hours must be non-negative");
  require(d.grid_nodes >= 2, "data.grid_nodes must be at least 2");
  require(d.sigma_gps_m >= 0.0 && d.sigma_compass_rad >= 0.0, "data sensor noise must be non-negative");
  const OperatorVariation& o = d.operators;
  require(o.speed_factor_min >= 0.5 && o.speed_factor_max <= 1.0 && o.speed_factor_min <= o.speed_factor_max,
          "data.operators speed factors must satisfy 0.5 <= min <= max <= 1");
  require(o.sigma_v_max >= 0.0 && o.sigma_omega_max >= 0.0 && o.heading_bias_sigma >= 0.0,
          "data.operators noise must be non-negative");
  require(o.pause_prob_max >= 0.0 && o.pause_prob_max <= 1.0 && o.detour_prob_max >= 0.0 && o.detour_prob_max <= 1.0,
          "data.operators probabilities must lie in [0, 1]");
  for (const auto& k : c.grid.cells()) {
    require(k.n_locations >= 1 && k.hours_per_location > 0.0, fmt::format("grid cell {} is invalid", analysis::to_string(k)));
    require(static_cast<std::size_t>(k.n_locations) <= d.train_locations,
            fmt::format("grid cell {} needs more than the {} training locations", analysis::to_string(k),
                        d.train_locations));
  }
  require(!c.seeds.empty(), "seeds must not be empty");
  require(!c.hidden.empty(), "policy.hidden must not be empty");
  for (auto h : c.hidden) require(h > 0, "policy.hidden widths must be positive");
  try {
    c.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
  require(c.eval.segments >= 1 && c.eval.routes_per_site >= 1 && c.eval.reps >= 1, "eval counts must be positive");
  require(c.eval.sim.latency_steps >= 0 && c.eval.sim.latency_steps <= 4, "eval.latency_steps must lie in [0, 4]");
  require(c.compare.zero_shot_locations >= 1 && static_cast<std::size_t>(c.compare.zero_shot_locations) <= d.train_locations,
          "compare.zero_shot_locations must lie in [1, data.train_locations]");
  require(c.compare.zero_shot_hours_per_location > 0.0 && c.compare.in_domain_hours_per_site > 0.0,
          "compare hours must be positive");
}

}  // namespace

std::vector<TestSite> default_test_sites() {
  return {{"wuhan", geokit::GeoPoint(30.48244, 114.30264)},
          {"kisumu", geokit::GeoPoint(-0.11052, 34.75131)},
          {"port-louis", geokit::GeoPoint(-20.17148, 57.49782)},
          {"selebi-phikwe", geokit::GeoPoint(-21.98324, 27.83091)}};
}

std::vector<analysis::CellKey> GridConfig::cells() const {
  std::vector<analysis::CellKey> out;
  for (int n : location_counts) {
    for (double h : hours_per_location) out.push_back({n, h});
    if (fixed_total_hours) out.push_back({n, *fixed_total_hours / n});
  }
  out.insert(out.end(), extra_cells.begin(), extra_cells.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

policy::PolicyShape ExperimentConfig::shape() const {
  policy::PolicyShape s;
  s.history = policy::history_length(variant);
  s.rays = eval.sim.sensor.rays;
  s.hidden = hidden;
  return s;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  ExperimentConfig c;
  Section top(root, "config");

  top.child("data", [&](Section& s) {
    DataConfig& d = c.data;
    s.get("seed", d.seed);
    s.get("train_locations", d.train_locations);
    s.get("hours_per_location", d.hours_per_location);
    s.get("in_domain_hours", d.in_domain_hours);
    s.get("grid_nodes", d.grid_nodes);
    s.get("sigma_gps_m", d.sigma_gps_m);
    s.get("sigma_compass_rad", d.sigma_compass_rad);
    if (const json* sites = s.raw("test_sites")) {
      if (!sites->is_array()) throw ConfigError("data.test_sites: expected an array");
      d.test_sites.clear();
      for (const auto& site : *sites) {
        Section ss(site, "data.test_sites[]");
        std::string name;
        double lat = 0.0;
        double lon = 0.0;
        ss.get("name", name);
        ss.get("lat_deg", lat);
        ss.get("lon_deg", lon);
        ss.finish();
        require(!name.empty(), "data.test_sites[]: name is required");
        try {
          d.test_sites.push_back({name, geokit::GeoPoint(lat, lon)});
        } catch (const std::invalid_argument& e) {
          throw ConfigError(fmt::format("data.test_sites[{}]: {}", name, e.what()));
        }
      }
    }
    s.child("operators", [&](Section& o) {
      OperatorVariation& v = d.operators;
      o.get("speed_factor_min", v.speed_factor_min);
      o.get("speed_factor_max", v.speed_factor_max);
      o.get("sigma_v_max", v.sigma_v_max);
      o.get("sigma_omega_max", v.sigma_omega_max);
      o.get("pause_prob_max", v.pause_prob_max);
      o.get("detour_prob_max", v.detour_prob_max);
      o.get("heading_bias_sigma", v.heading_bias_sigma);
    });
    s.child("curation", [&](Section& cs) {
      curation::CurationConfig& cc = d.curation;
      cs.get("min_speed_mps", cc.filter.min_speed_mps);
      cs.get("speed_window_s", cc.filter.speed_window_s);
      cs.get("max_gap_s", cc.filter.max_gap_s);
      cs.get("min_duration_s", cc.filter.min_duration_s);
      cs.get("min_prominence_m", cc.segment.min_prominence_m);
      cs.get("min_length_m", cc.segment.min_length_m);
      cs.get("sigma_gps_m", cc.fusion.sigma_gps_m);
      cs.get("sigma_heading_rad", cc.fusion.sigma_heading_rad);
      cs.get("sigma_odom_m", cc.fusion.sigma_odom_m);
      cs.get("sigma_odom_rad", cc.fusion.sigma_odom_rad);
      cs.get("heading_weight", cc.fusion.heading_weight);
      cs.get("max_iters", cc.optimize.max_iters);
      cs.get("window", cc.optimize.window);
      cs.get("overlap", cc.optimize.overlap);
    });
  });

  top.child("grid", [&](Section& s) {
    s.get("location_counts", c.grid.location_counts);
    s.get("hours_per_location", c.grid.hours_per_location);
    double total = 0.0;
    s.get("fixed_total_hours", total);
    if (total > 0.0) c.grid.fixed_total_hours = total;
    std::vector<std::pair<int, double>> extra;
    s.get("extra_cells", extra);
    for (const auto& [n, h] : extra) c.grid.extra_cells.push_back({n, h});
  });

  top.get("seeds", c.seeds);

  top.child("policy", [&](Section& s) {
    std::string variant = policy::to_string(c.variant);
    s.get("variant", variant);
    try {
      c.variant = policy::variant_from_string(variant);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("policy.variant: ") + e.what());
    }
    s.get("hidden", c.hidden);
  });

  top.child("train", [&](Section& s) {
    policy::TrainConfig& t = c.train;
    s.get("batch_size", t.batch_size);
    s.get("lr", t.lr);
    s.get("weight_decay", t.weight_decay);
    s.get("beta1", t.beta1);
    s.get("beta2", t.beta2);
    s.get("epochs", t.epochs);
    s.get("mirror_prob", t.mirror_prob);
    s.get("s_min", t.s_min);
    s.get("s_max", t.s_max);
  });

  top.child("eval", [&](Section& s) {
    EvalSettings& e = c.eval;
    s.get("routes_per_site", e.routes_per_site);
    s.get("segments", e.segments);
    s.get("reps", e.reps);
    s.get("route_seed", e.route_seed);
    s.get("latency_steps", e.sim.latency_steps);
    s.get("stuck_window_s", e.sim.stuck_window_s);
    s.get("stuck_progress_m", e.sim.stuck_progress_m);
    s.get("off_route_m", e.sim.off_route_m);
    s.get("sigma_distance_rel", e.sim.noise.sigma_distance_rel);
    s.get("sigma_bearing_rad", e.sim.noise.sigma_bearing_rad);
    s.get("heading_bias_rad", e.sim.noise.heading_bias_rad);
  });

  top.child("compare", [&](Section& s) {
    s.get("zero_shot_locations", c.compare.zero_shot_locations);
    s.get("zero_shot_hours_per_location", c.compare.zero_shot_hours_per_location);
    s.get("in_domain_hours_per_site", c.compare.in_domain_hours_per_site);
  });

  top.finish();
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  const DataConfig& d = c.data;
  json sites = json::array();
  for (const auto& s : d.test_sites) sites.push_back({{"name", s.name}, {"lat_deg", s.anchor.lat_deg()}, {"lon_deg", s.anchor.lon_deg()}});
  const auto& o = d.operators;
  const auto& cc = d.curation;
  json extra = json::array();
  for (const auto& k : c.grid.extra_cells) extra.push_back({k.n_locations, k.hours_per_location});
  json root = {
      {"data",
       {{"seed", d.seed},
        {"train_locations", d.train_locations},
        {"hours_per_location", d.hours_per_location},
        {"in_domain_hours", d.in_domain_hours},
        {"grid_nodes", d.grid_nodes},
        {"sigma_gps_m", d.sigma_gps_m},
        {"sigma_compass_rad", d.sigma_compass_rad},
        {"test_sites", sites},
        {"operators",
         {{"speed_factor_min", o.speed_factor_min},
          {"speed_factor_max", o.speed_factor_max},
          {"sigma_v_max", o.sigma_v_max},
          {"sigma_omega_max", o.sigma_omega_max},
          {"pause_prob_max", o.pause_prob_max},
          {"detour_prob_max", o.detour_prob_max},
          {"heading_bias_sigma", o.heading_bias_sigma}}},
        {"curation",
         {{"min_speed_mps", cc.filter.min_speed_mps},
          {"speed_window_s", cc.filter.speed_window_s},
          {"max_gap_s", cc.filter.max_gap_s},
          {"min_duration_s", cc.filter.min_duration_s},
          {"min_prominence_m", cc.segment.min_prominence_m},
          {"min_length_m", cc.segment.min_length_m},
          {"sigma_gps_m", cc.fusion.sigma_gps_m},
          {"sigma_heading_rad", cc.fusion.sigma_heading_rad},
          {"sigma_odom_m", cc.fusion.sigma_odom_m},
          {"sigma_odom_rad", cc.fusion.sigma_odom_rad},
          {"heading_weight", cc.fusion.heading_weight},
          {"max_iters", cc.optimize.max_iters},
          {"window", cc.optimize.window},
          {"overlap", cc.optimize.overlap}}}}},
      {"grid",
       {{"location_counts", c.grid.location_counts},
        {"hours_per_location", c.grid.hours_per_location},
        {"fixed_total_hours", c.grid.fixed_total_hours.value_or(0.0)},
        {"extra_cells", extra}}},
      {"seeds", c.seeds},
      {"policy", {{"variant", policy::to_string(c.variant)}, {"hidden", c.hidden}}},
      {"train",
       {{"batch_size", c.train.batch_size},
        {"lr", c.train.lr},
        {"weight_decay", c.train.weight_decay},
        {"beta1", c.train.beta1},
        {"beta2", c.train.beta2},
        {"epochs", c.train.epochs},
        {"mirror_prob", c.train.mirror_prob},
        {"s_min", c.train.s_min},
        {"s_max", c.train.s_max}}},
      {"eval",
       {{"routes_per_site", c.eval.routes_per_site},
        {"segments", c.eval.segments},
        {"reps", c.eval.reps},
        {"route_seed", c.eval.route_seed},
        {"latency_steps", c.eval.sim.latency_steps},
        {"stuck_window_s", c.eval.sim.stuck_window_s},
        {"stuck_progress_m", c.eval.sim.stuck_progress_m},
        {"off_route_m", c.eval.sim.off_route_m},
        {"sigma_distance_rel", c.eval.sim.noise.sigma_distance_rel},
        {"sigma_bearing_rad", c.eval.sim.noise.sigma_bearing_rad},
        {"heading_bias_rad", c.eval.sim.noise.heading_bias_rad}}},
      {"compare",
       {{"zero_shot_locations", c.compare.zero_shot_locations},
        {"zero_shot_hours_per_location", c.compare.zero_shot_hours_per_location},
        {"in_domain_hours_per_site", c.compare.in_domain_hours_per_site}}}};
  return root.dump(2);
}

}  // namespace navscale::study
