#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "navscale/study.hpp"

namespace navscale::study {
namespace {

using nlohmann::json;

constexpr double kMinAnchorSeparationM = 500'000.0;
constexpr double kMinLegLengthM = 20.0;
constexpr double kMaxRawFactor = 10.0;

std::string kind_name(LocationKind k) { return k == LocationKind::kTrain ? "train" : "test"; }

LocationKind kind_from(const std::string& s) {
  if (s == "train") return LocationKind::kTrain;
  if (s == "test") return LocationKind::kTest;
  throw std::invalid_argument(fmt::format("unknown location kind '{}'", s));
}

json location_json(const LocationRecord& l) {
  return {{"name", l.name},
          {"kind", kind_name(l.kind)},
          {"world_seed", l.world_seed},
          {"lat_deg", l.anchor.lat_deg()},
          {"lon_deg", l.anchor.lon_deg()},
          {"episodes", l.episodes},
          {"raw_hours", l.raw_hours},
          {"curated_hours", l.curated_hours},
          {"operator",
           {{"sigma_v", l.profile.sigma_v},
            {"sigma_omega", l.profile.sigma_omega},
            {"pause_prob", l.profile.pause_prob},
            {"detour_prob", l.profile.detour_prob},
            {"speed_factor", l.profile.speed_factor},
            {"heading_bias", l.profile.heading_bias}}}};
}

LocationRecord location_from(const json& j) {
  LocationRecord l;
  l.name = j.at("name").get<std::string>();
  l.kind = kind_from(j.at("kind").get<std::string>());
  l.world_seed = j.at("world_seed").get<std::uint64_t>();
  l.anchor = geokit::GeoPoint(j.at("lat_deg").get<double>(), j.at("lon_deg").get<double>());
  l.episodes = j.at("episodes").get<std::size_t>();
  l.raw_hours = j.at("raw_hours").get<double>();
  l.curated_hours = j.at("curated_hours").get<double>();
  const json& o = j.at("operator");
  l.profile.sigma_v = o.at("sigma_v").get<double>();
  l.profile.sigma_omega = o.at("sigma_omega").get<double>();
  l.profile.pause_prob = o.at("pause_prob").get<double>();
  l.profile.detour_prob = o.at("detour_prob").get<double>();
  l.profile.speed_factor = o.at("speed_factor").get<double>();
  l.profile.heading_bias = o.at("heading_bias").get<double>();
  return l;
}

expert::OperatorProfile draw_profile(const OperatorVariation& v, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  expert::OperatorProfile p;
  p.speed_factor = v.speed_factor_min + (v.speed_factor_max - v.speed_factor_min) * u(rng);
  p.sigma_v = v.sigma_v_max * u(rng);
  p.sigma_omega = v.sigma_omega_max * u(rng);
  p.pause_prob = v.pause_prob_max * u(rng);
  p.detour_prob = v.detour_prob_max * u(rng);
  p.heading_bias = v.heading_bias_sigma * n(rng);
  return p;
}

}  // namespace

std::vector<LocationRecord> plan_locations(const DataConfig& config) {
  std::vector<LocationRecord> out;
  std::vector<geokit::GeoPoint> taken;
  for (const auto& s : config.test_sites) taken.push_back(s.anchor);

  std::mt19937_64 anchor_rng(derive_seed(config.seed, "anchors", 0));
  std::uniform_real_distribution<double> lat(-55.0, 60.0);
  std::uniform_real_distribution<double> lon(-180.0, 180.0);
  for (std::size_t i = 0; i < config.train_locations; ++i) {
    LocationRecord l;
    l.name = fmt::format("train-{:02}", i);
    l.kind = LocationKind::kTrain;
    l.world_seed = derive_seed(config.seed, "train-world", i);
    // Keep training anchors far from the test sites and from each other.
    for (;;) {
      const geokit::GeoPoint p(lat(anchor_rng), lon(anchor_rng));
      const bool clear = std::all_of(taken.begin(), taken.end(), [&](const geokit::GeoPoint& q) {
        return geokit::haversine_m(p, q) >= kMinAnchorSeparationM;
      });
      if (clear) {
        l.anchor = p;
        taken.push_back(p);
        break;
      }
    }
    std::mt19937_64 op_rng(derive_seed(config.seed, "operator", i));
    l.profile = draw_profile(config.operators, op_rng);
    out.push_back(std::move(l));
  }
  for (std::size_t j = 0; j < config.test_sites.size(); ++j) {
    LocationRecord l;
    l.name = config.test_sites[j].name;
    l.kind = LocationKind::kTest;
    l.world_seed = derive_seed(config.seed, "test-world", j);
    l.anchor = config.test_sites[j].anchor;
    std::mt19937_64 op_rng(derive_seed(config.seed, "test-operator", j));
    l.profile = draw_profile(config.operators, op_rng);
    out.push_back(std::move(l));
  }
  return out;
}

simworld::GenerationOptions generation_options(const DataConfig& config, const LocationRecord& location) {
  simworld::GenerationOptions o;
  o.grid_nodes = config.grid_nodes;
  o.anchor = location.anchor;
  return o;
}

LocationDrive drive_location(const DataConfig& config, const LocationRecord& location, double curated_hours) {
  const simworld::World world(simworld::generate_location(location.world_seed, generation_options(config, location)));
  const auto& spec = world.spec();
  const int n_nodes = static_cast<int>(spec.route_graph.nodes.size());
  std::mt19937_64 rng(derive_seed(location.world_seed, "episodes", 0));
  std::uniform_int_distribution<int> pick_node(0, n_nodes - 1);
  std::uniform_int_distribution<int> pick_legs(2, 4);

  expert::DriveConfig dc;
  dc.sigma_gps_m = config.sigma_gps_m;
  dc.sigma_compass_rad = config.sigma_compass_rad;
  dc.robot = config.curation.fusion.robot;

  LocationDrive out;
  double curated_s = 0.0;
  double raw_s = 0.0;
  const double target_s = curated_hours * 3600.0;
  for (std::size_t k = 0; curated_s < target_s && raw_s < kMaxRawFactor * target_s; ++k) {
    int current = pick_node(rng);
    std::vector<int> nodes{current};
    const int legs = pick_legs(rng);
    for (int leg = 0; leg < legs; ++leg) {
      int goal = pick_node(rng);
      for (int tries = 0; tries < 32 && expert::shortest_path_length(spec, current, goal) < kMinLegLengthM; ++tries) {
        goal = pick_node(rng);
      }
      const std::vector<int> route = expert::plan_route(spec, current, goal, rng, location.profile.detour_prob);
      nodes.insert(nodes.end(), route.begin() + 1, route.end());
      current = goal;
    }
    if (nodes.size() < 2) continue;
    dc.episode_id = fmt::format("{}-e{:04}", location.name, k);
    const auto waypoints = expert::route_polyline(spec, nodes);
    expert::DriveResult r = expert::drive(world, waypoints, location.profile, rng, dc);
    raw_s += r.episode.duration_s();
    for (auto& d : curation::curate_episode(r.episode, config.curation)) {
      curated_s += d.duration_s();
      out.demos.push_back(std::move(d));
    }
    out.episodes.push_back(std::move(r.episode));
  }
  return out;
}

std::string demo_to_json(const curation::Demonstration& d) {
  json poses = json::array();
  for (const auto& p : d.poses) poses.push_back({p.x, p.y, p.theta});
  json actions = json::array();
  for (const auto& chunk : d.actions_gt) {
    json row = json::array();
    for (const auto& c : chunk) {
      row.push_back(c.v);
      row.push_back(c.omega);
    }
    actions.push_back(std::move(row));
  }
  json fixes = json::array();
  for (const auto& f : d.fixes) fixes.push_back({f.lat_deg(), f.lon_deg()});
  const json j = {{"id", d.id},           {"episode_id", d.episode_id}, {"start_index", d.start_index},
                  {"end_index", d.end_index}, {"poses", poses},             {"actions", actions},
                  {"obs_refs", d.obs_refs},   {"fixes", fixes}};
  return j.dump();
}

curation::Demonstration demo_from_json(const std::string& line) {
  try {
    const json j = json::parse(line);
    curation::Demonstration d;
    d.id = j.at("id").get<std::string>();
    d.episode_id = j.at("episode_id").get<std::string>();
    d.start_index = j.at("start_index").get<std::size_t>();
    d.end_index = j.at("end_index").get<std::size_t>();
    for (const auto& p : j.at("poses")) d.poses.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
    for (const auto& row : j.at("actions")) {
      if (row.size() != 2 * curation::kChunkLength) throw std::invalid_argument("action chunk has the wrong length");
      curation::ActionChunk chunk{};
      for (std::size_t k = 0; k < curation::kChunkLength; ++k) {
        chunk[k] = {row.at(2 * k).get<double>(), row.at(2 * k + 1).get<double>()};
      }
      d.actions_gt.push_back(chunk);
    }
    d.obs_refs = j.at("obs_refs").get<std::vector<std::string>>();
    for (const auto& f : j.at("fixes")) d.fixes.emplace_back(f.at(0).get<double>(), f.at(1).get<double>());
    if (d.actions_gt.size() != d.poses.size() || d.obs_refs.size() != d.poses.size()) {
      throw std::invalid_argument("demonstration arrays differ in length");
    }
    return d;
  } catch (const json::exception& e) {
    throw std::invalid_argument(fmt::format("malformed demonstration: {}", e.what()));
  }
}

Dataset generate_dataset(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::size_t workers,
                         std::ostream* log) {
  const DataConfig& dc = config.data;
  Dataset ds;
  ds.locations = plan_locations(dc);
  const std::string digest = data_digest(config);
  std::filesystem::create_directories(out_dir / "episodes");
  std::filesystem::create_directories(out_dir / "demos");
  std::filesystem::create_directories(out_dir / "worlds");

  std::vector<std::vector<curation::Demonstration>> light(ds.locations.size());
  std::mutex log_mutex;
  const auto errors = parallel_for(ds.locations.size(), workers, [&](std::size_t i) {
    LocationRecord& loc = ds.locations[i];
    const double hours = loc.kind == LocationKind::kTrain ? dc.hours_per_location : dc.in_domain_hours;
    const auto spec = simworld::generate_location(loc.world_seed, generation_options(dc, loc));
    write_file_once(out_dir / "worlds" / (loc.name + ".json"), simworld::location_to_json(spec));
    LocationDrive drove;
    if (hours > 0.0) drove = drive_location(dc, loc, hours);
    const auto& episodes = drove.episodes;

    std::ostringstream ep_out;
    write_episodes_jsonl(ep_out, episodes);
    write_file_once(out_dir / "episodes" / (loc.name + ".jsonl"), ep_out.str());

    std::string demo_lines;
    double curated_s = 0.0;
    double raw_s = 0.0;
    for (const auto& e : episodes) raw_s += e.duration_s();
    for (auto& d : drove.demos) {
      demo_lines += demo_to_json(d);
      demo_lines += '\n';
      curated_s += d.duration_s();
      d.actions_gt.clear();
      d.obs_refs.clear();
      light[i].push_back(std::move(d));
    }
    write_file_once(out_dir / "demos" / (loc.name + ".jsonl"), demo_lines);
    loc.episodes = episodes.size();
    loc.raw_hours = raw_s / 3600.0;
    loc.curated_hours = curated_s / 3600.0;
    if (log != nullptr) {
      const std::lock_guard lock(log_mutex);
      *log << fmt::format("{:<16} {:>4} episodes  raw {:.3f} h  curated {:.3f} h\n", loc.name, loc.episodes,
                          loc.raw_hours, loc.curated_hours);
    }
  });
  if (!errors.empty()) {
    std::string msg;
    for (const auto& [i, e] : errors) msg += fmt::format("{}: {}; ", ds.locations[i].name, e);
    throw std::runtime_error("data generation failed: " + msg);
  }

  std::vector<curation::Demonstration> all;
  for (auto& v : light) {
    for (auto& d : v) all.push_back(std::move(d));
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::vector<geokit::GeoPoint> sites;
  for (const auto& s : dc.test_sites) sites.push_back(s.anchor);
  ds.manifest = curation::geo_exclusion_split(curation::build_manifest(all), sites);
  ds.digest = digest;

  json locs = json::array();
  for (const auto& l : ds.locations) locs.push_back(location_json(l));
  const json loc_file = {{"data_digest", digest}, {"seed", dc.seed}, {"locations", locs}};
  write_file_once(out_dir / "locations.json", loc_file.dump(2) + "\n");
  const json man_file = {{"data_digest", digest},
                         {"seed", dc.seed},
                         {"manifest", json::parse(curation::manifest_to_json(ds.manifest))}};
  write_file_once(out_dir / "manifest.json", man_file.dump(2) + "\n");
  return ds;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  try {
    const json locs = json::parse(read_file(dir / "locations.json"));
    for (const auto& l : locs.at("locations")) ds.locations.push_back(location_from(l));
    const json man = json::parse(read_file(dir / "manifest.json"));
    ds.digest = man.at("data_digest").get<std::string>();
    if (locs.at("data_digest").get<std::string>() != ds.digest) {
      throw std::runtime_error("locations.json and manifest.json come from different runs");
    }
    ds.manifest = curation::manifest_from_json(man.at("manifest").dump());
  } catch (const json::exception& e) {
    throw std::runtime_error(fmt::format("malformed dataset in {}: {}", dir.string(), e.what()));
  }
  return ds;
}

DemoStore::DemoStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

void DemoStore::load_all() {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir_ / "demos")) {
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto d = demo_from_json(line);
      std::string id = d.id;
      demos_.emplace(std::move(id), std::move(d));
    }
  }
  loaded_ = true;
}

std::vector<curation::Demonstration> DemoStore::get(const std::vector<std::string>& ids) {
  const std::lock_guard lock(mutex_);
  if (!loaded_) load_all();
  std::vector<curation::Demonstration> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto it = demos_.find(id);
    if (it == demos_.end()) throw std::runtime_error(fmt::format("demonstration '{}' not found", id));
    out.push_back(it->second);
  }
  return out;
}

std::vector<policy::PolicySample> render_samples(std::span<const curation::TrainingSample> samples,
                                                 simworld::ObservationRenderer& renderer) {
  std::vector<policy::PolicySample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    policy::PolicySample p;
    for (const auto& ref : s.obs_history) p.ranges.push_back(renderer.render(ref, s.mirror_flag));
    p.goals = s.goal_history;
    p.target = s.target_chunk;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace navscale::study
