#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "navscale/episode.hpp"
#include "navscale/geokit.hpp"
#include "navscale/pose.hpp"
#include "navscale/posegraph.hpp"

namespace navscale::curation {

inline constexpr std::size_t kChunkLength = 10;
inline constexpr double kChunkDtS = 0.1;
inline constexpr double kGridDtS = 0.25;
inline constexpr double kMaxGoalTravelM = 150.0;
inline constexpr double kExclusionRadiusM = 95'000.0;

using ActionChunk = std::array<Command, kChunkLength>;

/// Physical limits used to map actions onto [-1, 1].
struct ActionLimits {
  double v_max{1.0};
  double omega_max{1.5};
};

Command normalize(const Command& c, const ActionLimits& limits);
Command denormalize(const Command& c, const ActionLimits& limits);

// ---------------------------------------------------------------- filtering

struct FilterConfig {
  double min_speed_mps{0.05};
  double speed_window_s{2.0};
  /// A time gap longer than this splits the episode.
  double max_gap_s{0.5};
  double min_duration_s{5.0};
  posegraph::RobotGeometry robot;
};

/// Mean of `values` over samples within +-window/2 of each timestamp.
std::vector<double> centered_moving_average(std::span<const double> t, std::span<const double> values,
                                            double window_s);

/// Wheel-derived ground speed of every sample (0 where RPMs are missing).
std::vector<double> ground_speed(const RawEpisode& e, const posegraph::RobotGeometry& robot);

/// Maximal runs of complete, moving samples. Runs shorter than
/// min_duration_s are dropped. Sub-episode ids are "<id>/<k>" unless the
/// episode survives whole.
std::vector<RawEpisode> filter_episode(const RawEpisode& e, const FilterConfig& config);

// ------------------------------------------------------------- segmentation

struct SegmentConfig {
  double min_prominence_m{10.0};
  double min_length_m{20.0};
};

/// Inclusive pose index range. Consecutive segments share their boundary pose.
struct IndexRange {
  std::size_t start{0};
  std::size_t end{0};

  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

double path_length(std::span<const PoseSE2> poses, std::size_t start, std::size_t end);

/// Topographic prominence of f at index i within f[lo..hi].
double peak_prominence(std::span<const double> f, std::size_t i);

/// Splits a trajectory into goal-reaching segments at the first sufficiently
/// prominent maximum of the distance-from-segment-start profile. The trailing
/// segment is kept only if its path length reaches min_length_m.
std::vector<IndexRange> segment_goals(std::span<const PoseSE2> poses, const SegmentConfig& config);

// --------------------------------------------------------------- resampling

/// Uniform 4 Hz grid. Positions and headings are interpolated (headings along
/// the shorter arc), commands and observation refs are held. Every sample
/// must be complete. Throws std::invalid_argument if native_rate_hz < 4.
AlignedSeries resample_4hz(const RawEpisode& e);

struct TimedCommand {
  double t{0.0};
  Command command;
};

struct ChunkedActions {
  std::vector<std::size_t> grid_index;  // retained grid points
  std::vector<ActionChunk> chunks;
};

/// Attaches the 10 commands at t + {0.0, ..., 0.9} s to each grid point;
/// grid points whose horizon runs past the last command are dropped.
ChunkedActions build_action_chunks(std::span<const TimedCommand> commands, std::span<const double> grid);

// ----------------------------------------------------------- demonstrations

struct Demonstration {
  std::string id;
  std::string episode_id;
  std::vector<PoseSE2> poses;             // fused, 4 Hz
  std::vector<ActionChunk> actions_gt;    // physical units
  std::vector<std::string> obs_refs;
  std::size_t start_index{0};
  std::size_t end_index{0};
  std::vector<geokit::GeoPoint> fixes;  // raw GPS at 4 Hz

  [[nodiscard]] std::size_t size() const { return poses.size(); }
  /// Sample count times the 4 Hz step.
  [[nodiscard]] double duration_s() const { return static_cast<double>(poses.size()) * kGridDtS; }
};

/// Goal input: distance in km clipped to [0, 1], bearing relative to the
/// heading divided by pi.
struct GoalVector {
  double d{0.0};
  double theta{0.0};

  friend bool operator==(const GoalVector&, const GoalVector&) = default;
};

GoalVector goal_vector(const PoseSE2& robot, Point2 goal);

struct GoalSample {
  Point2 goal;
  std::size_t goal_index{0};
  std::vector<GoalVector> history;  // oldest first, length P
};

/// Draws the goal uniformly among future poses within max_travel_m of path
/// length from t_index and evaluates the goal vector for the P history steps
/// (indices before the demonstration start repeat the first pose).
GoalSample sample_goal(const Demonstration& demo, std::size_t t_index, std::size_t history,
                       std::mt19937_64& rng, double max_travel_m = kMaxGoalTravelM);

struct TrainingSample {
  std::vector<std::string> obs_history;  // oldest first
  std::vector<GoalVector> goal_history;  // oldest first
  ActionChunk target_chunk;              // normalized
  bool mirror_flag{false};

  friend bool operator==(const TrainingSample&, const TrainingSample&) = default;
};

/// Horizontal mirror: negates bearings and angular velocities and toggles the
/// flag that tells the observation renderer to reverse the range fan.
TrainingSample mirror(const TrainingSample& s);

/// One sample per demonstration step that has at least one future pose.
std::vector<TrainingSample> build_training_samples(std::span<const Demonstration> demos, std::size_t history,
                                                   const ActionLimits& limits, std::uint64_t seed);

// ----------------------------------------------------------------- pipeline

struct CurationConfig {
  FilterConfig filter;
  SegmentConfig segment;
  posegraph::FusionConfig fusion;
  posegraph::OptimizeOptions optimize;
};

/// filter -> resample -> fuse -> chunk -> segment for one raw episode.
std::vector<Demonstration> curate_episode(const RawEpisode& e, const CurationConfig& config);

// ----------------------------------------------------------------- manifest

enum class Split { kTrain, kExcluded };

struct ManifestDemo {
  std::string id;
  std::string episode_id;
  double duration_s{0.0};

  friend bool operator==(const ManifestDemo&, const ManifestDemo&) = default;
};

struct ManifestCluster {
  geokit::LocationCluster cluster;
  std::vector<ManifestDemo> demos;
  std::vector<geokit::GeoPoint> fixes;  // subsampled member fixes
  Split split{Split::kTrain};
  double min_site_distance_m{-1.0};  // negative until a split was computed

  [[nodiscard]] double hours() const;
};

struct DatasetManifest {
  std::vector<ManifestCluster> clusters;

  [[nodiscard]] double total_hours() const;
  [[nodiscard]] const ManifestCluster& cluster(int id) const;
};

/// Groups demonstrations into location clusters using the GPS fixes of their
/// source episodes.
DatasetManifest build_manifest(std::span<const Demonstration> demos,
                               const geokit::ClusterOptions& options = {});

/// Tags clusters closer than radius_m to any site as excluded.
DatasetManifest geo_exclusion_split(const DatasetManifest& manifest, std::span<const geokit::GeoPoint> sites,
                                    double radius_m = kExclusionRadiusM);

std::string manifest_to_json(const DatasetManifest& manifest, int indent = 2);
DatasetManifest manifest_from_json(const std::string& text);

// ---------------------------------------------------------- scaling subsets

class InfeasibleSubsetError : public std::runtime_error {
 public:
  InfeasibleSubsetError(const std::string& what, std::vector<std::string> shortfalls)
      : std::runtime_error(what), shortfalls_(std::move(shortfalls)) {}
  [[nodiscard]] const std::vector<std::string>& shortfalls() const { return shortfalls_; }

 private:
  std::vector<std::string> shortfalls_;
};

struct SubsetCell {
  int n_locations{0};
  double hours_per_location{0.0};
  std::vector<int> cluster_ids;                         // in location order
  std::map<int, std::vector<std::string>> demo_ids;     // per cluster, in hour order
  double total_hours{0.0};
};

/// Seeded location order over the train clusters.
std::vector<int> location_order(const DatasetManifest& manifest, std::uint64_t seed);

/// First n_locations clusters of the location order; within each, the
/// shortest prefix of a seeded demo permutation reaching the hour target.
SubsetCell subset_cell(const DatasetManifest& manifest, int n_locations, double hours_per_location,
                       std::uint64_t seed);

/// grid[i][j] = subset_cell(location_counts[i], hours_per_location[j]).
/// Throws InfeasibleSubsetError listing every shortfall.
std::vector<std::vector<SubsetCell>> nested_subsets(const DatasetManifest& manifest,
                                                    std::span<const int> location_counts,
                                                    std::span<const double> hours_per_location,
                                                    std::uint64_t seed);

/// Shortfalls for a list of (locations, hours) cells; empty when feasible.
std::vector<std::string> subset_shortfalls(const DatasetManifest& manifest,
                                           std::span<const std::pair<int, double>> cells, std::uint64_t seed);

}  // namespace navscale::curation
