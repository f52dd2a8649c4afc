#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace navscale::geokit {

inline constexpr double kEarthRadiusM = 6'371'000.0;

/// WGS84 latitude/longitude in degrees. Construction validates the ranges.
class GeoPoint {
 public:
  GeoPoint() = default;
  GeoPoint(double lat_deg, double lon_deg);

  [[nodiscard]] double lat_deg() const { return lat_; }
  [[nodiscard]] double lon_deg() const { return lon_; }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

 private:
  double lat_{0.0};
  double lon_{0.0};
};

/// Great-circle distance on a sphere of radius kEarthRadiusM.
double haversine_m(const GeoPoint& a, const GeoPoint& b);

struct EpisodeFixes {
  std::string id;
  std::vector<GeoPoint> fixes;
};

struct LocationCluster {
  int id{0};
  std::vector<std::string> episode_ids;  // sorted ascending
  GeoPoint centroid;
};

struct ClusterOptions {
  double threshold_m{100.0};
  /// Only every n-th fix (plus the last one) takes part in pair distances.
  std::size_t fix_stride{10};
};

/// Fixes that participate in inter-episode distances under `stride`.
std::vector<GeoPoint> subsample_fixes(std::span<const GeoPoint> fixes, std::size_t stride);

/// Minimum distance between any pair of (subsampled) fixes of two episodes.
double episode_distance_m(std::span<const GeoPoint> a, std::span<const GeoPoint> b);

/// Single-linkage grouping of episodes: two episodes end up in the same
/// cluster iff a chain of episode pairs closer than the threshold connects
/// them. Clusters are ordered by their smallest member id and numbered 0..n-1.
std::vector<LocationCluster> cluster_by_proximity(std::span<const EpisodeFixes> episodes,
                                                  const ClusterOptions& options = {});

/// Minimum distance between any fix of the episode and any site.
/// Throws std::invalid_argument if `sites` is empty.
double min_distance_to_sites(std::span<const GeoPoint> episode, std::span<const GeoPoint> sites);

/// Spherical mean of a set of points.
GeoPoint spherical_centroid(std::span<const GeoPoint> points);

}  // namespace navscale::geokit
