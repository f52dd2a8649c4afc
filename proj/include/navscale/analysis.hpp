#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "navscale/evalharness.hpp"

namespace navscale::analysis {

struct ScalingPoint {
  double x{0.0};
  double y{0.0};
  std::string label;
};

/// y = beta * x^alpha fitted by least squares on (ln x, ln y).
struct PowerLawFit {
  double alpha{0.0};
  double beta{0.0};
  std::optional<double> r;  // absent when ln y has zero variance
  double alpha_stderr{0.0};
  std::size_t n_points{0};
  std::size_t excluded{0};  // points with y <= 0 or x <= 0
};

/// Throws std::invalid_argument with fewer than 3 valid points or when all
/// valid x coincide.
PowerLawFit fit_power_law(std::span<const ScalingPoint> points);

/// Fractional reduction of y when x doubles: 1 - 2^alpha.
double doubling_reduction(double alpha);

// ---------------------------------------------------------------- aggregate

struct CellKey {
  int n_locations{0};
  double hours_per_location{0.0};

  [[nodiscard]] double total_hours() const { return n_locations * hours_per_location; }
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

std::string to_string(const CellKey& key);

/// Evaluation rows of one policy (cell, seed).
struct CellOutcomes {
  CellKey key;
  std::uint64_t seed{0};
  std::vector<evalharness::OutcomeRow> rows;
};

struct CellSummary {
  CellKey key;
  evalharness::SuccessRate pooled;
  double failure_rate{0.0};
  std::vector<std::uint64_t> seeds;
  std::vector<double> seed_success_rates;  // same order as seeds
  double median_success_rate{0.0};
  std::optional<double> nir;
  std::optional<double> nps;
};

/// Breakdown of one cell by route (environment).
struct RouteSummary {
  CellKey key;
  std::string route_id;
  evalharness::SuccessRate pooled;
  double failure_rate{0.0};
};

struct AggregateTables {
  std::vector<CellSummary> cells;  // sorted by key
  std::vector<RouteSummary> per_route;
};

class MissingCellsError : public std::runtime_error {
 public:
  MissingCellsError(const std::string& what, std::vector<CellKey> missing)
      : std::runtime_error(what), missing_(std::move(missing)) {}
  [[nodiscard]] const std::vector<CellKey>& missing() const { return missing_; }

 private:
  std::vector<CellKey> missing_;
};

/// Pools segment outcomes over routes, repetitions and seeds for each cell.
/// Throws MissingCellsError naming every expected cell without results.
AggregateTables aggregate(std::span<const CellKey> expected, std::span<const CellOutcomes> results);

double median(std::vector<double> values);

/// Failure-rate points against location count for cells with the given
/// total hours (relative tolerance 1e-6); cells without failures are excluded.
std::vector<ScalingPoint> fixed_total_points(std::span<const CellSummary> cells, double total_hours);

/// Same for one route.
std::vector<ScalingPoint> fixed_total_points(std::span<const RouteSummary> routes, const std::string& route_id,
                                             double total_hours);

/// Tidy table of the three views: fixed total data (x = locations),
/// fixed per-location data (x = locations) and fixed location count
/// (x = hours per location).
void write_views_csv(std::ostream& out, std::span<const CellSummary> cells,
                     std::span<const std::string> header_lines = {});
void write_cells_csv(std::ostream& out, std::span<const CellSummary> cells,
                     std::span<const std::string> header_lines = {});
void write_routes_csv(std::ostream& out, std::span<const RouteSummary> routes,
                      std::span<const std::string> header_lines = {});

struct NamedFit {
  std::string name;
  PowerLawFit fit;
};

void write_fits_csv(std::ostream& out, std::span<const NamedFit> fits, std::span<const std::string> header_lines = {});

// --------------------------------------------------------------------- plots

struct PlotSeries {
  std::string name;
  std::vector<ScalingPoint> points;
  std::optional<PowerLawFit> fit;
};

/// Standalone SVG scatter plot with log-scaled axes and optional fit lines.
std::string svg_loglog(std::span<const PlotSeries> series, const std::string& title, const std::string& x_label,
                       const std::string& y_label);

}  // namespace navscale::analysis
