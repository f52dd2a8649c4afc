#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "navscale/analysis.hpp"

namespace an = navscale::analysis;
namespace ev = navscale::evalharness;

namespace {

// Least squares of ln y on [1, ln x] by Householder QR, with r recovered
// from the coefficient of determination.
struct OlsRef {
  double alpha, beta, r;
};

OlsRef ols_reference(const std::vector<an::ScalingPoint>& pts) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = std::log(pts[static_cast<std::size_t>(i)].x);
    b(i) = std::log(pts[static_cast<std::size_t>(i)].y);
  }
  const Eigen::VectorXd coef = a.householderQr().solve(b);
  const double sse = (a * coef - b).squaredNorm();
  const double sst = (b.array() - b.mean()).square().sum();
  const double r = std::copysign(std::sqrt(std::max(0.0, 1.0 - sse / sst)), coef(1));
  return {coef(1), std::exp(coef(0)), r};
}

std::vector<ev::OutcomeRow> rows(const std::string& route, std::size_t successes, std::size_t trials) {
  std::vector<ev::OutcomeRow> out;
  for (std::size_t i = 0; i < trials; ++i) {
    const bool ok = i < successes;
    out.push_back({"p", route, 0, i, ok, ok ? ev::FailureCause::kNone : ev::FailureCause::kTimeout, 10.0, 20.0});
  }
  return out;
}

}  // namespace

TEST_CASE("exact power laws are recovered") {
  for (const auto& [alpha, beta] : {std::pair{-0.229, 0.8}, {0.5, 2.0}, {-1.3, 0.05}, {0.0123, 17.0}}) {
    std::vector<an::ScalingPoint> pts;
    for (double x : {1.0, 2.0, 4.0, 8.0, 16.0}) pts.push_back({x, beta * std::pow(x, alpha), ""});
    const auto fit = an::fit_power_law(pts);
    CHECK(std::abs(fit.alpha - alpha) < 1e-9);
    CHECK(std::abs(fit.beta - beta) < 1e-9 * beta);
    REQUIRE(fit.r.has_value());
    CHECK(std::abs(*fit.r - (alpha < 0 ? -1.0 : 1.0)) < 1e-9);
    CHECK(fit.alpha_stderr < 1e-9);
    CHECK(fit.n_points == 5);
  }
}

TEST_CASE("noisy fits agree with a QR least-squares reference") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> noise(0.0, 0.2);
  std::uniform_real_distribution<double> u(0.5, 50.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<an::ScalingPoint> pts;
    for (int i = 0; i < 6; ++i) {
      const double x = u(rng);
      pts.push_back({x, 0.7 * std::pow(x, -0.3) * std::exp(noise(rng)), ""});
    }
    const auto fit = an::fit_power_law(pts);
    const auto ref = ols_reference(pts);
    CHECK(fit.alpha == doctest::Approx(ref.alpha).epsilon(1e-9));
    CHECK(fit.beta == doctest::Approx(ref.beta).epsilon(1e-9));
    CHECK(*fit.r == doctest::Approx(ref.r).epsilon(1e-9));
  }
}

TEST_CASE("fits exclude non-positive points and reject degenerate input") {
  std::vector<an::ScalingPoint> pts = {{1, 0.5, ""}, {2, 0.0, ""}, {4, 0.3, ""}, {8, 0.2, ""}, {-1, 1, ""}};
  const auto fit = an::fit_power_law(pts);
  CHECK(fit.n_points == 3);
  CHECK(fit.excluded == 2);
  const std::vector<an::ScalingPoint> two = {{1, 0.5, ""}, {2, 0.4, ""}};
  CHECK_THROWS_AS(an::fit_power_law(two), std::invalid_argument);
  const std::vector<an::ScalingPoint> same_x = {{3, 0.5, ""}, {3, 0.4, ""}, {3, 0.3, ""}};
  CHECK_THROWS_AS(an::fit_power_law(same_x), std::invalid_argument);
  const std::vector<an::ScalingPoint> flat = {{1, 0.5, ""}, {2, 0.5, ""}, {4, 0.5, ""}};
  const auto f = an::fit_power_law(flat);
  CHECK_FALSE(f.r.has_value());
  CHECK(f.alpha == doctest::Approx(0.0));
}

TEST_CASE("doubling reduction") {
  CHECK(std::abs(an::doubling_reduction(-0.229) - 0.1468) < 1e-4);
  CHECK(an::doubling_reduction(0.0) == 0.0);
  CHECK(an::doubling_reduction(-1.0) == doctest::Approx(0.5));
}

TEST_CASE("median") {
  CHECK(an::median({3.0}) == 3.0);
  CHECK(an::median({4.0, 1.0, 3.0}) == 3.0);
  CHECK(an::median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK_THROWS_AS(an::median({}), std::invalid_argument);
}

TEST_CASE("aggregation pools seeds and routes per cell") {
  const an::CellKey a{1, 4.0};
  const an::CellKey b{4, 1.0};
  std::vector<an::CellOutcomes> results;
  auto add = [&](an::CellKey key, std::uint64_t seed, std::size_t k1, std::size_t k2) {
    auto r = rows("route-a", k1, 8);
    auto r2 = rows("route-b", k2, 8);
    r.insert(r.end(), r2.begin(), r2.end());
    results.push_back({key, seed, r});
  };
  add(a, 1, 2, 2);
  add(a, 2, 4, 4);
  add(a, 3, 8, 0);
  add(b, 1, 6, 6);
  add(b, 2, 6, 4);
  add(b, 3, 8, 8);
  const std::vector<an::CellKey> expected = {a, b};
  const auto t = an::aggregate(expected, results);
  REQUIRE(t.cells.size() == 2);
  const auto& ca = t.cells[0];
  CHECK(ca.key == a);
  CHECK(ca.pooled.successes == 20);
  CHECK(ca.pooled.trials == 48);
  CHECK(ca.failure_rate == doctest::Approx(28.0 / 48.0));
  CHECK(ca.seed_success_rates == std::vector<double>{0.25, 0.5, 0.5});
  CHECK(ca.median_success_rate == 0.5);
  CHECK(*ca.nir == doctest::Approx(100.0 * 28.0 / (48.0 * 20.0)));
  const auto& cb = t.cells[1];
  CHECK(cb.pooled.successes == 38);
  CHECK(cb.median_success_rate == doctest::Approx(12.0 / 16.0));
  REQUIRE(t.per_route.size() == 4);
  CHECK(t.per_route[0].route_id == "route-a");
  CHECK(t.per_route[0].pooled.successes == 14);
  CHECK(t.per_route[1].pooled.successes == 6);

  const auto pts = an::fixed_total_points(t.cells, 4.0);
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].x == 1.0);
  CHECK(pts[1].x == 4.0);
  CHECK(pts[1].y == doctest::Approx(10.0 / 48.0));
  CHECK(pts[0].label == "L1_H4");
  CHECK(an::fixed_total_points(t.per_route, "route-b", 4.0).size() == 2);
  CHECK(an::fixed_total_points(t.cells, 2.0).empty());

  const std::vector<an::CellKey> more = {a, b, {16, 0.25}};
  try {
    (void)an::aggregate(more, results);
    FAIL("expected MissingCellsError");
  } catch (const an::MissingCellsError& e) {
    REQUIRE(e.missing().size() == 1);
    CHECK(e.missing()[0] == an::CellKey{16, 0.25});
  }
}

TEST_CASE("view table lists every cell under each view") {
  an::CellSummary c;
  c.key = {2, 0.5};
  c.pooled = ev::success_rate(3, 4);
  c.failure_rate = 0.25;
  c.median_success_rate = 0.75;
  std::ostringstream out;
  const std::vector<an::CellSummary> cells = {c};
  an::write_views_csv(out, cells);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("view,group,x,", 0) == 0);
  std::vector<std::string> views;
  while (std::getline(in, line)) views.push_back(line.substr(0, line.find(',')));
  CHECK(views == std::vector<std::string>{"fixed_total", "fixed_per_location", "fixed_locations"});
  CHECK(out.str().find("fixed_total,1,2,2,0.5,1,3,4,") != std::string::npos);
}

TEST_CASE("SVG plots are well-formed and escape text") {
  an::PlotSeries s;
  s.name = "fixed <total>";
  s.points = {{1, 0.5, "a"}, {2, 0.45, "b"}, {16, 0.3, "c"}};
  s.fit = an::fit_power_law(s.points);
  const std::vector<an::PlotSeries> series = {s};
  const auto svg = an::svg_loglog(series, "Failure & locations", "locations", "failure rate");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("Failure &amp; locations") != std::string::npos);
  CHECK(svg.find("fixed &lt;total&gt;") != std::string::npos);
  CHECK(svg.find("<circle") != std::string::npos);
  const std::vector<an::PlotSeries> none;
  CHECK(an::svg_loglog(none, "empty", "x", "y").find("</svg>") != std::string::npos);
}
