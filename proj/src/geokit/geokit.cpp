#include "navscale/geokit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace navscale::geokit {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<int> rank_;
};

struct LatBounds {
  double lo{0.0};
  double hi{0.0};
};

LatBounds lat_bounds(std::span<const GeoPoint> pts) {
  LatBounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& p : pts) {
    b.lo = std::min(b.lo, p.lat_deg());
    b.hi = std::max(b.hi, p.lat_deg());
  }
  return b;
}

}  // namespace

GeoPoint::GeoPoint(double lat_deg, double lon_deg) : lat_(lat_deg), lon_(lon_deg) {
  if (!(lat_deg >= -90.0 && lat_deg <= 90.0) || !(lon_deg >= -180.0 && lon_deg <= 180.0)) {
    throw std::invalid_argument(fmt::format("invalid GeoPoint ({}, {})", lat_deg, lon_deg));
  }
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = a.lat_deg() * kDegToRad;
  const double phi2 = b.lat_deg() * kDegToRad;
  const double dphi = phi2 - phi1;
  const double dlambda = (b.lon_deg() - a.lon_deg()) * kDegToRad;
  const double s = std::sin(dphi / 2.0);
  const double t = std::sin(dlambda / 2.0);
  const double h = std::clamp(s * s + std::cos(phi1) * std::cos(phi2) * t * t, 0.0, 1.0);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

std::vector<GeoPoint> subsample_fixes(std::span<const GeoPoint> fixes, std::size_t stride) {
  stride = std::max<std::size_t>(stride, 1);
  std::vector<GeoPoint> out;
  out.reserve(fixes.size() / stride + 2);
  for (std::size_t i = 0; i < fixes.size(); i += stride) out.push_back(fixes[i]);
  if (!fixes.empty() && (fixes.size() - 1) % stride != 0) out.push_back(fixes.back());
  return out;
}

double episode_distance_m(std::span<const GeoPoint> a, std::span<const GeoPoint> b) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : a) {
    for (const auto& q : b) best = std::min(best, haversine_m(p, q));
  }
  return best;
}

std::vector<LocationCluster> cluster_by_proximity(std::span<const EpisodeFixes> episodes,
                                                  const ClusterOptions& options) {
  const std::size_t n = episodes.size();
  std::vector<std::vector<GeoPoint>> sampled(n);
  std::vector<LatBounds> bounds(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (episodes[i].fixes.empty()) {
      throw std::invalid_argument(fmt::format("episode '{}' has no GPS fixes", episodes[i].id));
    }
    sampled[i] = subsample_fixes(episodes[i].fixes, options.fix_stride);
    bounds[i] = lat_bounds(sampled[i]);
  }

  // Latitude separation alone lower-bounds the great-circle distance.
  const double lat_slack_deg = options.threshold_m / (kEarthRadiusM * kDegToRad);
  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (bounds[j].lo > bounds[i].hi + lat_slack_deg || bounds[i].lo > bounds[j].hi + lat_slack_deg) {
        continue;
      }
      if (sets.find(i) == sets.find(j)) continue;
      if (episode_distance_m(sampled[i], sampled[j]) < options.threshold_m) sets.unite(i, j);
    }
  }

  std::vector<std::vector<std::size_t>> members_by_root(n);
  for (std::size_t i = 0; i < n; ++i) members_by_root[sets.find(i)].push_back(i);

  std::vector<LocationCluster> clusters;
  for (auto& members : members_by_root) {
    if (members.empty()) continue;
    LocationCluster c;
    std::vector<GeoPoint> pts;
    for (std::size_t m : members) {
      c.episode_ids.push_back(episodes[m].id);
      pts.insert(pts.end(), sampled[m].begin(), sampled[m].end());
    }
    std::sort(c.episode_ids.begin(), c.episode_ids.end());
    c.centroid = spherical_centroid(pts);
    clusters.push_back(std::move(c));
  }
  std::sort(clusters.begin(), clusters.end(), [](const LocationCluster& a, const LocationCluster& b) {
    return a.episode_ids.front() < b.episode_ids.front();
  });
  for (std::size_t i = 0; i < clusters.size(); ++i) clusters[i].id = static_cast<int>(i);
  return clusters;
}

double min_distance_to_sites(std::span<const GeoPoint> episode, std::span<const GeoPoint> sites) {
  if (sites.empty()) throw std::invalid_argument("min_distance_to_sites: no test sites configured");
  return episode_distance_m(episode, sites);
}

GeoPoint spherical_centroid(std::span<const GeoPoint> points) {
  if (points.empty()) throw std::invalid_argument("spherical_centroid: no points");
  double x = 0.0, y = 0.0, z = 0.0;
  for (const auto& p : points) {
    const double phi = p.lat_deg() * kDegToRad;
    const double lam = p.lon_deg() * kDegToRad;
    x += std::cos(phi) * std::cos(lam);
    y += std::cos(phi) * std::sin(lam);
    z += std::sin(phi);
  }
  const double r = std::sqrt(x * x + y * y + z * z);
  if (r < 1e-12) return points.front();
  const double lat = std::asin(std::clamp(z / r, -1.0, 1.0)) / kDegToRad;
  const double lon = std::atan2(y, x) / kDegToRad;
  return {std::clamp(lat, -90.0, 90.0), std::clamp(lon, -180.0, 180.0)};
}

}  // namespace navscale::geokit
