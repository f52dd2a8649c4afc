#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "navscale/analysis.hpp"

namespace navscale::analysis {
namespace {

void write_headers(std::ostream& out, std::span<const std::string> header_lines) {
  for (const auto& h : header_lines) out << "# " << h << '\n';
}

std::string opt(const std::optional<double>& v) { return v ? fmt::format("{:.17g}", *v) : ""; }

bool same_total(double a, double b) { return std::abs(a - b) <= 1e-6 * std::max(std::abs(a), std::abs(b)); }

}  // namespace

std::string to_string(const CellKey& key) { return fmt::format("L{}_H{:g}", key.n_locations, key.hours_per_location); }

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

AggregateTables aggregate(std::span<const CellKey> expected, std::span<const CellOutcomes> results) {
  std::map<CellKey, std::vector<const CellOutcomes*>> by_cell;
  for (const auto& r : results) by_cell[r.key].push_back(&r);

  std::vector<CellKey> missing;
  for (const auto& k : expected) {
    const auto it = by_cell.find(k);
    if (it == by_cell.end() || std::all_of(it->second.begin(), it->second.end(),
                                           [](const CellOutcomes* c) { return c->rows.empty(); })) {
      missing.push_back(k);
    }
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto& k : missing) names += (names.empty() ? "" : ", ") + to_string(k);
    throw MissingCellsError("cells without results: " + names, missing);
  }

  AggregateTables tables;
  for (const auto& [key, members] : by_cell) {
    CellSummary cell;
    cell.key = key;
    std::vector<evalharness::OutcomeRow> pooled;
    std::map<std::string, std::vector<evalharness::OutcomeRow>> per_route;
    for (const CellOutcomes* c : members) {
      if (c->rows.empty()) continue;
      std::size_t k = 0;
      for (const auto& row : c->rows) {
        pooled.push_back(row);
        per_route[row.route_id].push_back(row);
        if (row.success) ++k;
      }
      cell.seeds.push_back(c->seed);
      cell.seed_success_rates.push_back(static_cast<double>(k) / static_cast<double>(c->rows.size()));
    }
    if (pooled.empty()) continue;
    const auto outcomes = evalharness::to_outcomes(pooled);
    cell.pooled = evalharness::success_rate(outcomes);
    cell.failure_rate = 1.0 - cell.pooled.rate;
    cell.median_success_rate = median(cell.seed_success_rates);
    cell.nir = evalharness::nir(outcomes);
    cell.nps = evalharness::nps(outcomes);
    tables.cells.push_back(std::move(cell));

    for (const auto& [route, rows] : per_route) {
      RouteSummary rs;
      rs.key = key;
      rs.route_id = route;
      rs.pooled = evalharness::success_rate(evalharness::to_outcomes(rows));
      rs.failure_rate = 1.0 - rs.pooled.rate;
      tables.per_route.push_back(std::move(rs));
    }
  }
  return tables;
}

std::vector<ScalingPoint> fixed_total_points(std::span<const CellSummary> cells, double total_hours) {
  std::vector<ScalingPoint> out;
  for (const auto& c : cells) {
    if (!same_total(c.key.total_hours(), total_hours)) continue;
    out.push_back({static_cast<double>(c.key.n_locations), c.failure_rate, to_string(c.key)});
  }
  return out;
}

std::vector<ScalingPoint> fixed_total_points(std::span<const RouteSummary> routes, const std::string& route_id,
                                             double total_hours) {
  std::vector<ScalingPoint> out;
  for (const auto& r : routes) {
    if (r.route_id != route_id || !same_total(r.key.total_hours(), total_hours)) continue;
    out.push_back({static_cast<double>(r.key.n_locations), r.failure_rate, to_string(r.key)});
  }
  return out;
}

void write_views_csv(std::ostream& out, std::span<const CellSummary> cells, std::span<const std::string> header_lines) {
  write_headers(out, header_lines);
  out << "view,group,x,n_locations,hours_per_location,total_hours,successes,trials,success_rate,ci_lower,ci_upper,"
         "failure_rate,median_seed_success_rate\n";
  const auto row = [&](const char* view, double group, double x, const CellSummary& c) {
    out << fmt::format("{},{:g},{:g},{},{:g},{:g},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", view, group, x,
                       c.key.n_locations, c.key.hours_per_location, c.key.total_hours(), c.pooled.successes,
                       c.pooled.trials, c.pooled.rate, c.pooled.ci.lower, c.pooled.ci.upper, c.failure_rate,
                       c.median_success_rate);
  };
  for (const auto& c : cells) row("fixed_total", c.key.total_hours(), c.key.n_locations, c);
  for (const auto& c : cells) row("fixed_per_location", c.key.hours_per_location, c.key.n_locations, c);
  for (const auto& c : cells) row("fixed_locations", c.key.n_locations, c.key.hours_per_location, c);
}

void write_cells_csv(std::ostream& out, std::span<const CellSummary> cells, std::span<const std::string> header_lines) {
  write_headers(out, header_lines);
  out << "n_locations,hours_per_location,seeds,successes,trials,success_rate,ci_lower,ci_upper,failure_rate,"
         "median_seed_success_rate,nir,nps\n";
  for (const auto& c : cells) {
    out << fmt::format("{},{:g},{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{}\n", c.key.n_locations,
                       c.key.hours_per_location, c.seeds.size(), c.pooled.successes, c.pooled.trials, c.pooled.rate,
                       c.pooled.ci.lower, c.pooled.ci.upper, c.failure_rate, c.median_success_rate, opt(c.nir),
                       opt(c.nps));
  }
}

void write_routes_csv(std::ostream& out, std::span<const RouteSummary> routes,
                      std::span<const std::string> header_lines) {
  write_headers(out, header_lines);
  out << "n_locations,hours_per_location,route_id,successes,trials,success_rate,ci_lower,ci_upper,failure_rate\n";
  for (const auto& r : routes) {
    out << fmt::format("{},{:g},{},{},{},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.key.n_locations,
                       r.key.hours_per_location, r.route_id, r.pooled.successes, r.pooled.trials, r.pooled.rate,
                       r.pooled.ci.lower, r.pooled.ci.upper, r.failure_rate);
  }
}

void write_fits_csv(std::ostream& out, std::span<const NamedFit> fits, std::span<const std::string> header_lines) {
  write_headers(out, header_lines);
  out << "name,alpha,beta,r,alpha_stderr,doubling_reduction,n_points,excluded\n";
  for (const auto& f : fits) {
    out << fmt::format("{},{:.17g},{:.17g},{},{:.17g},{:.17g},{},{}\n", f.name, f.fit.alpha, f.fit.beta, opt(f.fit.r),
                       f.fit.alpha_stderr, doubling_reduction(f.fit.alpha), f.fit.n_points, f.fit.excluded);
  }
}

}  // namespace navscale::analysis
