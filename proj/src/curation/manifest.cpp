#include <algorithm>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "navscale/curation.hpp"

namespace navscale::curation {
namespace {

using nlohmann::json;

constexpr double kSecondsPerHour = 3600.0;
constexpr double kHourEps = 1e-9;

const char* split_name(Split s) { return s == Split::kTrain ? "train" : "excluded"; }

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "excluded") return Split::kExcluded;
  throw std::invalid_argument(fmt::format("unknown split tag '{}'", s));
}

std::vector<std::size_t> demo_order(const ManifestCluster& c, std::uint64_t seed) {
  std::vector<std::size_t> order(c.demos.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(c.cluster.id), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace

double ManifestCluster::hours() const {
  double s = 0.0;
  for (const auto& d : demos) s += d.duration_s;
  return s / kSecondsPerHour;
}

double DatasetManifest::total_hours() const {
  double h = 0.0;
  for (const auto& c : clusters) h += c.hours();
  return h;
}

const ManifestCluster& DatasetManifest::cluster(int id) const {
  for (const auto& c : clusters) {
    if (c.cluster.id == id) return c;
  }
  throw std::out_of_range(fmt::format("no cluster with id {}", id));
}

DatasetManifest build_manifest(std::span<const Demonstration> demos, const geokit::ClusterOptions& options) {
  std::map<std::string, std::vector<const Demonstration*>> by_episode;
  for (const auto& d : demos) by_episode[d.episode_id].push_back(&d);

  std::vector<geokit::EpisodeFixes> episodes;
  for (const auto& [id, list] : by_episode) {
    geokit::EpisodeFixes ef{id, {}};
    for (const auto* d : list) ef.fixes.insert(ef.fixes.end(), d->fixes.begin(), d->fixes.end());
    if (!ef.fixes.empty()) episodes.push_back(std::move(ef));
  }

  DatasetManifest manifest;
  for (auto& cluster : geokit::cluster_by_proximity(episodes, options)) {
    ManifestCluster mc;
    std::vector<geokit::GeoPoint> all;
    for (const auto& ep : cluster.episode_ids) {
      for (const auto* d : by_episode.at(ep)) {
        mc.demos.push_back({d->id, d->episode_id, d->duration_s()});
        all.insert(all.end(), d->fixes.begin(), d->fixes.end());
      }
    }
    std::sort(mc.demos.begin(), mc.demos.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    mc.fixes = geokit::subsample_fixes(all, options.fix_stride);
    mc.cluster = std::move(cluster);
    manifest.clusters.push_back(std::move(mc));
  }
  return manifest;
}

DatasetManifest geo_exclusion_split(const DatasetManifest& manifest, std::span<const geokit::GeoPoint> sites,
                                    double radius_m) {
  DatasetManifest out = manifest;
  for (auto& c : out.clusters) {
    c.min_site_distance_m = geokit::min_distance_to_sites(c.fixes, sites);
    c.split = c.min_site_distance_m < radius_m ? Split::kExcluded : Split::kTrain;
  }
  return out;
}

std::string manifest_to_json(const DatasetManifest& manifest, int indent) {
  json clusters = json::array();
  for (const auto& c : manifest.clusters) {
    json demos = json::array();
    for (const auto& d : c.demos) demos.push_back({{"id", d.id}, {"episode_id", d.episode_id}, {"duration_s", d.duration_s}});
    json fixes = json::array();
    for (const auto& f : c.fixes) fixes.push_back({f.lat_deg(), f.lon_deg()});
    clusters.push_back({{"id", c.cluster.id},
                        {"episode_ids", c.cluster.episode_ids},
                        {"centroid", {{"lat_deg", c.cluster.centroid.lat_deg()}, {"lon_deg", c.cluster.centroid.lon_deg()}}},
                        {"split", split_name(c.split)},
                        {"min_site_distance_m", c.min_site_distance_m},
                        {"hours", c.hours()},
                        {"demos", std::move(demos)},
                        {"fixes", std::move(fixes)}});
  }
  json doc = {{"clusters", std::move(clusters)}, {"total_hours", manifest.total_hours()}};
  return doc.dump(indent);
}

DatasetManifest manifest_from_json(const std::string& text) {
  const json doc = json::parse(text);
  DatasetManifest m;
  for (const auto& jc : doc.at("clusters")) {
    ManifestCluster c;
    c.cluster.id = jc.at("id").get<int>();
    c.cluster.episode_ids = jc.at("episode_ids").get<std::vector<std::string>>();
    c.cluster.centroid = geokit::GeoPoint(jc.at("centroid").at("lat_deg").get<double>(),
                                          jc.at("centroid").at("lon_deg").get<double>());
    c.split = parse_split(jc.at("split").get<std::string>());
    c.min_site_distance_m = jc.value("min_site_distance_m", -1.0);
    for (const auto& jd : jc.at("demos")) {
      c.demos.push_back({jd.at("id").get<std::string>(), jd.at("episode_id").get<std::string>(),
                         jd.at("duration_s").get<double>()});
    }
    for (const auto& jf : jc.value("fixes", json::array())) c.fixes.emplace_back(jf.at(0).get<double>(), jf.at(1).get<double>());
    m.clusters.push_back(std::move(c));
  }
  return m;
}

std::vector<int> location_order(const DatasetManifest& manifest, std::uint64_t seed) {
  std::vector<int> ids;
  for (const auto& c : manifest.clusters) {
    if (c.split == Split::kTrain) ids.push_back(c.cluster.id);
  }
  std::sort(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  return ids;
}

namespace {

SubsetCell try_subset_cell(const DatasetManifest& manifest, int n_locations, double hours_per_location,
                           std::uint64_t seed, std::vector<std::string>& shortfalls) {
  SubsetCell cell;
  cell.n_locations = n_locations;
  cell.hours_per_location = hours_per_location;
  const auto order = location_order(manifest, seed);
  if (n_locations < 1 || hours_per_location <= 0.0) {
    shortfalls.push_back(fmt::format("cell ({} locations, {} h): counts and hours must be positive", n_locations,
                                     hours_per_location));
    return cell;
  }
  if (static_cast<std::size_t>(n_locations) > order.size()) {
    shortfalls.push_back(fmt::format("cell ({} locations, {} h): only {} train locations available", n_locations,
                                     hours_per_location, order.size()));
    return cell;
  }
  const double target_s = hours_per_location * kSecondsPerHour;
  for (int k = 0; k < n_locations; ++k) {
    const ManifestCluster& c = manifest.cluster(order[k]);
    std::vector<std::string> picked;
    double acc = 0.0;
    for (std::size_t i : demo_order(c, seed)) {
      if (acc >= target_s - kHourEps) break;
      picked.push_back(c.demos[i].id);
      acc += c.demos[i].duration_s;
    }
    if (acc < target_s - kHourEps) {
      shortfalls.push_back(fmt::format("cell ({} locations, {} h): location {} has {:.4f} h, short by {:.4f} h",
                                       n_locations, hours_per_location, c.cluster.id, acc / kSecondsPerHour,
                                       (target_s - acc) / kSecondsPerHour));
    }
    cell.cluster_ids.push_back(c.cluster.id);
    cell.demo_ids[c.cluster.id] = std::move(picked);
    cell.total_hours += acc / kSecondsPerHour;
  }
  return cell;
}

}  // namespace

SubsetCell subset_cell(const DatasetManifest& manifest, int n_locations, double hours_per_location,
                       std::uint64_t seed) {
  std::vector<std::string> shortfalls;
  SubsetCell cell = try_subset_cell(manifest, n_locations, hours_per_location, seed, shortfalls);
  if (!shortfalls.empty()) {
    throw InfeasibleSubsetError(fmt::format("infeasible subset request: {}", fmt::join(shortfalls, "; ")),
                                shortfalls);
  }
  return cell;
}

std::vector<std::string> subset_shortfalls(const DatasetManifest& manifest,
                                           std::span<const std::pair<int, double>> cells, std::uint64_t seed) {
  std::vector<std::string> shortfalls;
  for (const auto& [n, h] : cells) try_subset_cell(manifest, n, h, seed, shortfalls);
  return shortfalls;
}

std::vector<std::vector<SubsetCell>> nested_subsets(const DatasetManifest& manifest,
                                                    std::span<const int> location_counts,
                                                    std::span<const double> hours_per_location,
                                                    std::uint64_t seed) {
  std::vector<std::string> shortfalls;
  std::vector<std::vector<SubsetCell>> grid;
  for (int n : location_counts) {
    auto& row = grid.emplace_back();
    for (double h : hours_per_location) row.push_back(try_subset_cell(manifest, n, h, seed, shortfalls));
  }
  if (!shortfalls.empty()) {
    throw InfeasibleSubsetError(fmt::format("infeasible subset grid: {}", fmt::join(shortfalls, "; ")), shortfalls);
  }
  return grid;
}

}  // namespace navscale::curation
