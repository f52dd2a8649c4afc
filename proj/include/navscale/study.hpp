#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "navscale/analysis.hpp"
#include "navscale/curation.hpp"
#include "navscale/evalharness.hpp"
#include "navscale/expert.hpp"
#include "navscale/policy.hpp"
#include "navscale/simworld.hpp"

namespace navscale::study {

inline constexpr std::string_view kCodeVersion = "navscale-0.1.0";

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TestSite {
  std::string name;
  geokit::GeoPoint anchor;
};

/// The four held-out evaluation sites.
std::vector<TestSite> default_test_sites();

/// Ranges from which each location's operator is drawn.
struct OperatorVariation {
  double speed_factor_min{0.6};
  double speed_factor_max{1.0};
  double sigma_v_max{0.08};
  double sigma_omega_max{0.25};
  double pause_prob_max{0.004};
  double detour_prob_max{0.3};
  double heading_bias_sigma{0.0};
};

struct DataConfig {
  std::uint64_t seed{1};
  std::size_t train_locations{16};
  double hours_per_location{1.0};  // curated demonstration time per training location
  double in_domain_hours{0.0};     // curated demonstration time per test site
  std::vector<TestSite> test_sites = default_test_sites();
  int grid_nodes{5};
  OperatorVariation operators;
  double sigma_gps_m{3.0};
  double sigma_compass_rad{0.05};
  curation::CurationConfig curation;
};

struct GridConfig {
  std::vector<int> location_counts;
  std::vector<double> hours_per_location;  // crossed with location_counts
  std::optional<double> fixed_total_hours;  // adds (n, total / n) per location count
  std::vector<analysis::CellKey> extra_cells;

  /// Sorted, de-duplicated cell list.
  [[nodiscard]] std::vector<analysis::CellKey> cells() const;
};

struct EvalSettings {
  std::size_t routes_per_site{1};
  std::size_t segments{8};
  int reps{3};
  std::uint64_t route_seed{2024};
  // Sensor noise makes repetitions independent draws.
  evalharness::EvalConfig sim{.noise = {.sigma_distance_rel = 0.05, .sigma_bearing_rad = 0.1}};
};

struct CompareConfig {
  int zero_shot_locations{16};
  double zero_shot_hours_per_location{0.25};
  double in_domain_hours_per_site{0.25};
};

struct ExperimentConfig {
  DataConfig data;
  GridConfig grid;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  policy::Variant variant{policy::Variant::kMlpBc};
  std::vector<std::size_t> hidden{256, 256, 128};
  policy::TrainConfig train;
  EvalSettings eval;
  CompareConfig compare;

  [[nodiscard]] policy::PolicyShape shape() const;
};

/// Parses a JSON config; every key is optional and unknown keys are errors.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON (sorted keys, all defaults resolved).
std::string config_to_json(const ExperimentConfig& config);

std::string sha256_hex(std::string_view data);
std::string file_sha256(const std::filesystem::path& path);
/// Digest of the full config plus the code version.
std::string config_digest(const ExperimentConfig& config);
/// Digest of the sections that determine the dataset.
std::string data_digest(const ExperimentConfig& config);
/// Resume key of one trained-and-evaluated policy.
std::string job_digest(const ExperimentConfig& config, const std::string& job_name, std::uint64_t seed);

/// "config_digest=<hex> seed=<n>" style provenance line.
std::string provenance(const std::string& digest, std::uint64_t seed);

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index);

// ------------------------------------------------------------------ dataset

enum class LocationKind { kTrain, kTest };

struct LocationRecord {
  std::string name;
  LocationKind kind{LocationKind::kTrain};
  std::uint64_t world_seed{0};
  geokit::GeoPoint anchor;
  expert::OperatorProfile profile;
  std::size_t episodes{0};
  double raw_hours{0.0};
  double curated_hours{0.0};
};

/// Seeds, anchors and operators of every location, before any driving.
std::vector<LocationRecord> plan_locations(const DataConfig& config);
simworld::GenerationOptions generation_options(const DataConfig& config, const LocationRecord& location);

struct LocationDrive {
  std::vector<RawEpisode> episodes;
  std::vector<curation::Demonstration> demos;
};

/// Expert episodes on one location, curated as they come in, until the
/// demonstrations reach curated_hours. Gives up after 10x that much raw
/// driving; the grid feasibility check then reports the shortfall.
LocationDrive drive_location(const DataConfig& config, const LocationRecord& location, double curated_hours);

std::string demo_to_json(const curation::Demonstration& d);
curation::Demonstration demo_from_json(const std::string& line);

struct Dataset {
  std::vector<LocationRecord> locations;
  curation::DatasetManifest manifest;
  std::string digest;
};

/// Drives, curates, clusters and splits; writes locations.json,
/// manifest.json, episodes/<loc>.jsonl, demos/<loc>.jsonl and worlds/<loc>.json.
Dataset generate_dataset(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::size_t workers,
                         std::ostream* log = nullptr);
Dataset load_dataset(const std::filesystem::path& dir);

/// Demonstrations by id, loaded lazily per location file.
class DemoStore {
 public:
  explicit DemoStore(std::filesystem::path dir);
  std::vector<curation::Demonstration> get(const std::vector<std::string>& ids);

 private:
  void load_all();
  std::filesystem::path dir_;
  std::mutex mutex_;
  bool loaded_{false};
  std::map<std::string, curation::Demonstration> demos_;
};

/// Renders training samples into policy inputs.
std::vector<policy::PolicySample> render_samples(std::span<const curation::TrainingSample> samples,
                                                 simworld::ObservationRenderer& renderer);

// -------------------------------------------------------------- experiments

/// Demo ids for a subset: train clusters from the cell, in-domain clusters
/// near test sites, or both.
struct DemoSelection {
  std::string name;
  std::vector<std::string> demo_ids;
  std::vector<int> cluster_ids;
  double hours{0.0};
};

DemoSelection select_cell(const curation::DatasetManifest& manifest, const analysis::CellKey& cell,
                          std::uint64_t seed);
/// Clusters within the exclusion radius of the test sites, hours each.
DemoSelection select_in_domain(const curation::DatasetManifest& manifest, double hours_per_site, std::uint64_t seed);

struct TrainedPolicy {
  policy::MlpPolicy policy;
  std::vector<policy::LossRecord> curve;
  std::size_t samples{0};
};

TrainedPolicy train_on(const ExperimentConfig& config, DemoStore& store, const DemoSelection& selection,
                       std::uint64_t seed);

struct TestRoute {
  std::string site;
  std::uint64_t world_seed{0};
  evalharness::RouteSpec route;
};

std::vector<TestRoute> test_routes(const ExperimentConfig& config, const Dataset& dataset);

std::vector<evalharness::OutcomeRow> evaluate_policy(const ExperimentConfig& config, const Dataset& dataset,
                                                     std::shared_ptr<const policy::MlpPolicy> policy,
                                                     const std::string& policy_id);
std::vector<evalharness::OutcomeRow> evaluate_controller(const ExperimentConfig& config, const Dataset& dataset,
                                                         const std::function<std::unique_ptr<evalharness::Controller>()>& make,
                                                         const std::string& policy_id);

struct JobFailure {
  std::string job;
  std::string error;
};

struct StudyResult {
  std::vector<analysis::CellOutcomes> outcomes;
  std::vector<JobFailure> failures;
  std::size_t trained{0};
  std::size_t reused{0};
};

/// Trains and evaluates every (cell, seed); completed jobs are reused when
/// their outcome file carries a matching digest. Writes analysis tables.
StudyResult run_scaling_study(const ExperimentConfig& config, const std::filesystem::path& data_dir,
                              const std::filesystem::path& out_dir, std::size_t workers, bool resume,
                              std::ostream* log = nullptr);

struct VariantResult {
  std::string variant;
  evalharness::SuccessRate success;
  std::optional<double> nir;
  std::optional<double> nps;
  double mean_dist_to_first_failure{0.0};
  std::vector<int> cluster_ids;
};

/// Zero-shot, scale + in-domain and in-domain-only policies on the test routes.
std::vector<VariantResult> run_compare_policies(const ExperimentConfig& config, const std::filesystem::path& data_dir,
                                                const std::filesystem::path& out_dir, std::size_t workers, bool resume,
                                                std::vector<JobFailure>* failures, std::ostream* log = nullptr);

struct AnalysisOutput {
  analysis::AggregateTables tables;
  std::filesystem::path dir;  // <results>/analysis/<key>
  std::optional<double> fixed_total_hours;
  std::vector<analysis::NamedFit> fits;
};

/// Reads every scaling job under <results>/jobs and writes cells.csv,
/// views.csv, routes.csv, fits.csv and summary.json into a directory keyed
/// by the set of jobs. The fixed-total view uses the total shared by the
/// most location counts.
AnalysisOutput analyze_results(const std::filesystem::path& results_dir, std::ostream* log = nullptr);
/// Writes fixed_total.svg and fixed_locations.svg next to the tables.
std::filesystem::path plot_results(const std::filesystem::path& results_dir);

// ------------------------------------------------------------------ workers

/// NAVSCALE_WORKERS, or 1 when unset or invalid.
std::size_t workers_from_env();

/// Runs fn(i) for i in [0, n) on `workers` threads. Returns the error
/// message of every job that threw, indexed by job.
std::map<std::size_t, std::string> parallel_for(std::size_t n, std::size_t workers,
                                                const std::function<void(std::size_t)>& fn);

/// Writes `content` to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
/// Like write_file_atomic, but an existing file must already hold exactly
/// `content`; throws std::runtime_error otherwise.
void write_file_once(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace navscale::study
