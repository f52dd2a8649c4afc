#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "navscale/curation.hpp"
#include "oracles.hpp"
#include "synth.hpp"

using namespace navscale;
using namespace navscale::curation;
using oracle::brute_force_first_peak;

namespace {

const geokit::GeoPoint kAnchor(30.48244, 114.30264);

RawEpisode moving_episode(const std::string& id, const std::vector<synth::Leg>& legs, double rate = 10.0) {
  std::vector<Command> cmds;
  const auto poses = synth::integrate({0, 0, 0}, legs, rate, &cmds);
  return synth::episode_from_poses(id, poses, cmds, rate, kAnchor);
}

// Naive reference: average over |t_j - t_i| <= w/2, then one pass collecting
// runs of kept samples.
std::vector<std::pair<double, double>> reference_runs(const RawEpisode& e, const FilterConfig& cfg) {
  const auto speed = ground_speed(e, cfg.robot);
  std::vector<bool> keep(e.samples.size());
  for (std::size_t i = 0; i < e.samples.size(); ++i) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t j = 0; j < e.samples.size(); ++j) {
      if (std::abs(e.samples[j].t - e.samples[i].t) <= cfg.speed_window_s / 2.0 + 1e-12) {
        sum += speed[j];
        ++n;
      }
    }
    keep[i] = e.samples[i].complete() && sum / n >= cfg.min_speed_mps;
  }
  std::vector<std::pair<double, double>> runs;
  std::size_t i = 0;
  while (i < keep.size()) {
    if (!keep[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < keep.size() && keep[j + 1]) ++j;
    if (e.samples[j].t - e.samples[i].t >= cfg.min_duration_s) runs.emplace_back(e.samples[i].t, e.samples[j].t);
    i = j + 1;
  }
  return runs;
}

std::vector<PoseSE2> line_poses(std::size_t n, double step) {
  std::vector<PoseSE2> p;
  for (std::size_t i = 0; i < n; ++i) p.push_back({step * static_cast<double>(i), 0.0, 0.0});
  return p;
}

Demonstration demo_from(const std::vector<PoseSE2>& poses, const std::string& episode, const std::string& id,
                        const geokit::GeoPoint& anchor = kAnchor) {
  Demonstration d;
  d.id = id;
  d.episode_id = episode;
  d.poses = poses;
  for (const auto& p : poses) {
    ActionChunk c;
    c.fill({0.5, 0.1});
    d.actions_gt.push_back(c);
    d.obs_refs.push_back("o");
    d.fixes.push_back(posegraph::from_local_frame(anchor, p.position()));
  }
  d.end_index = poses.size() - 1;
  return d;
}

}  // namespace

TEST_CASE("filter: stationary episodes vanish") {
  const RawEpisode e = moving_episode("still", {{0.0, 0.0, 30.0}});
  CHECK(filter_episode(e, FilterConfig{}).empty());
}

TEST_CASE("filter: a clean moving episode survives unchanged") {
  const RawEpisode e = moving_episode("go", {{0.6, 0.05, 30.0}});
  const auto out = filter_episode(e, FilterConfig{});
  REQUIRE(out.size() == 1);
  CHECK(out[0] == e);
}

TEST_CASE("filter: a stationary gap splits the episode where a reference scan says") {
  const RawEpisode e = moving_episode("gap", {{0.5, 0.0, 30.0}, {0.0, 0.0, 10.0}, {0.5, 0.0, 30.0}});
  const FilterConfig cfg;
  const auto out = filter_episode(e, cfg);
  const auto ref = reference_runs(e, cfg);
  REQUIRE(ref.size() == 2);
  REQUIRE(out.size() == ref.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    CHECK(out[k].samples.front().t == doctest::Approx(ref[k].first));
    CHECK(out[k].samples.back().t == doctest::Approx(ref[k].second));
    CHECK(out[k].id == "gap/" + std::to_string(k));
  }
}

TEST_CASE("filter: missing sensors and time gaps split, short pieces drop") {
  RawEpisode e = moving_episode("holes", {{0.5, 0.0, 40.0}});
  e.samples[200].heading.reset();
  auto out = filter_episode(e, FilterConfig{});
  REQUIRE(out.size() == 2);
  CHECK(out[0].samples.back().t < e.samples[200].t);
  CHECK(out[1].samples.front().t > e.samples[200].t);

  RawEpisode gap = moving_episode("jump", {{0.5, 0.0, 40.0}});
  for (std::size_t i = 100; i < gap.samples.size(); ++i) gap.samples[i].t += 3.0;
  out = filter_episode(gap, FilterConfig{});
  CHECK(out.size() == 2);

  RawEpisode short_piece = moving_episode("tail", {{0.5, 0.0, 20.0}});
  short_piece.samples[170].gps.reset();
  out = filter_episode(short_piece, FilterConfig{});
  REQUIRE(out.size() == 1);
  CHECK(out[0].samples.back().t < 17.0);
}

TEST_CASE("segmentation spec examples") {
  const SegmentConfig cfg;
  SUBCASE("a straight line is one segment") {
    const auto poses = line_poses(801, 0.25);  // 200 m
    const auto seg = segment_goals(poses, cfg);
    REQUIRE(seg.size() == 1);
    CHECK(seg[0] == IndexRange{0, 800});
  }
  SUBCASE("out and back splits at the turnaround") {
    std::vector<PoseSE2> poses;
    for (int i = 0; i <= 400; ++i) poses.push_back({0.25 * i, 0.0, 0.0});
    for (int i = 1; i <= 400; ++i) poses.push_back({100.0 - 0.25 * i, 0.0, std::numbers::pi});
    std::vector<double> f;
    for (const auto& p : poses) f.push_back(std::hypot(p.x, p.y));
    const std::size_t peak = brute_force_first_peak(f, cfg.min_prominence_m);
    REQUIRE(peak == 400);
    const auto seg = segment_goals(poses, cfg);
    REQUIRE(seg.size() == 2);
    CHECK(seg[0] == IndexRange{0, peak});
    CHECK(seg[1] == IndexRange{peak, poses.size() - 1});
  }
  SUBCASE("a loop driven 2.5 times gives several segments") {
    std::vector<PoseSE2> poses;
    const double r = 20.0;
    for (int i = 0; i <= 1000; ++i) {
      const double a = 2.5 * 2.0 * std::numbers::pi * i / 1000.0;
      poses.push_back({r * std::sin(a), r - r * std::cos(a), a});
    }
    CHECK(segment_goals(poses, cfg).size() >= 2);
  }
  SUBCASE("identical poses are rejected") {
    const std::vector<PoseSE2> poses(50, PoseSE2{3.0, 4.0, 0.0});
    CHECK(segment_goals(poses, cfg).empty());
  }
}

TEST_CASE("segmentation partitions random walks and matches the brute-force peak scan") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> turn(-0.35, 0.35);
  const SegmentConfig cfg;
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<PoseSE2> poses{{0, 0, 0}};
    for (int i = 0; i < 600; ++i) {
      PoseSE2 p = poses.back();
      p.theta = wrap_angle(p.theta + turn(rng));
      p.x += 0.4 * std::cos(p.theta);
      p.y += 0.4 * std::sin(p.theta);
      poses.push_back(p);
    }
    const auto seg = segment_goals(poses, cfg);
    for (std::size_t k = 0; k < seg.size(); ++k) {
      CHECK(seg[k].start < seg[k].end);
      if (k == 0) CHECK(seg[k].start == 0);
      if (k > 0) CHECK(seg[k].start == seg[k - 1].end);
    }
    // Every closed segment ends at the oracle's first prominent peak.
    for (std::size_t k = 0; k < seg.size(); ++k) {
      std::vector<double> f;
      for (std::size_t i = seg[k].start; i < poses.size(); ++i) f.push_back(distance(poses[seg[k].start].position(), poses[i].position()));
      const std::size_t peak = brute_force_first_peak(f, cfg.min_prominence_m);
      if (peak != 0) CHECK(seg[k].end == seg[k].start + peak);
      else CHECK(seg[k].end == poses.size() - 1);
    }
  }
}

TEST_CASE("resampling to 4 Hz") {
  SUBCASE("8 Hz keeps every other sample") {
    const RawEpisode e = moving_episode("eight", {{0.5, 0.2, 10.0}}, 8.0);
    const AlignedSeries a = resample_4hz(e);
    REQUIRE(a.size() == 41);
    for (std::size_t k = 0; k < a.size(); ++k) {
      const auto& s = e.samples[2 * k];
      CHECK(a.t[k] == doctest::Approx(s.t));
      CHECK(a.gps[k] == *s.gps);
      CHECK(a.heading[k] == *s.heading);
      CHECK(a.command[k] == *s.command);
      CHECK(a.obs_ref[k] == *s.obs_ref);
    }
  }
  SUBCASE("a constant signal stays constant") {
    RawEpisode e = moving_episode("const", {{0.0, 0.0, 5.0}}, 10.0);
    for (auto& s : e.samples) s.heading = 1.25;
    const AlignedSeries a = resample_4hz(e);
    for (double h : a.heading) CHECK(h == doctest::Approx(1.25).epsilon(1e-15));
  }
  SUBCASE("a linear ramp at 10 Hz interpolates exactly") {
    RawEpisode e = moving_episode("ramp", {{0.0, 0.0, 6.0}}, 10.0);
    for (auto& s : e.samples) {
      s.gps = geokit::GeoPoint(10.0 + 1e-5 * s.t, 20.0 - 2e-5 * s.t);
      s.wheel_rpm = WheelRpm{3.0 * s.t, -s.t};
      s.heading = 0.1 * s.t;
    }
    const AlignedSeries a = resample_4hz(e);
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double t = 0.25 * static_cast<double>(k);
      CHECK(a.gps[k].lat_deg() == doctest::Approx(10.0 + 1e-5 * t).epsilon(1e-13));
      CHECK(a.gps[k].lon_deg() == doctest::Approx(20.0 - 2e-5 * t).epsilon(1e-13));
      CHECK(a.wheel_rpm[k].left == doctest::Approx(3.0 * t));
      CHECK(a.heading[k] == doctest::Approx(0.1 * t));
    }
  }
  SUBCASE("headings interpolate along the short arc") {
    RawEpisode e = moving_episode("wrap", {{0.0, 0.0, 1.0}}, 10.0);
    for (std::size_t i = 0; i < e.samples.size(); ++i) e.samples[i].heading = wrap_angle(3.1 + 0.1 * static_cast<double>(i));
    const AlignedSeries a = resample_4hz(e);
    CHECK(std::abs(wrap_angle(a.heading[1] - wrap_angle(3.1 + 0.25))) < 1e-9);
  }
  SUBCASE("rates below 4 Hz are rejected") {
    RawEpisode e = moving_episode("slow", {{0.5, 0.0, 10.0}}, 10.0);
    e.native_rate_hz = 3.0;
    CHECK_THROWS_AS(resample_4hz(e), std::invalid_argument);
  }
}

TEST_CASE("action chunks") {
  std::vector<TimedCommand> cmds;
  for (int i = 0; i <= 50; ++i) cmds.push_back({0.1 * i, {0.5, 0.0}});
  const std::vector<double> grid{0.0, 0.25, 0.5, 3.5, 4.0, 4.25, 4.5};

  SUBCASE("constant command") {
    const auto ch = build_action_chunks(cmds, grid);
    REQUIRE(ch.chunks.size() == 5);
    for (const auto& c : ch.chunks)
      for (const auto& a : c) CHECK(a == Command{0.5, 0.0});
  }
  SUBCASE("a step inside the horizon") {
    // Grid point at 1.05 s, step at 1.5 s: commands before 1.5 are old.
    for (auto& c : cmds)
      if (c.t > 1.45) c.command = {0.2, 0.7};
    const std::vector<double> g{1.05};
    const auto ch = build_action_chunks(cmds, g);
    REQUIRE(ch.chunks.size() == 1);
    for (int k = 0; k < 5; ++k) CHECK(ch.chunks[0][k] == Command{0.5, 0.0});
    for (int k = 5; k < 10; ++k) CHECK(ch.chunks[0][k] == Command{0.2, 0.7});
  }
  SUBCASE("grid points without a full second of future are dropped") {
    const auto ch = build_action_chunks(cmds, grid);
    CHECK(ch.grid_index == std::vector<std::size_t>{0, 1, 2, 3, 4});
  }
}

TEST_CASE("goal vectors and goal sampling") {
  CHECK(goal_vector({0, 0, 0}, {0, 10}) == GoalVector{0.01, 0.5});
  const GoalVector self = goal_vector({4, 5, 1.0}, {4, 5});
  CHECK(self.d == 0.0);
  CHECK(std::isfinite(self.theta));
  CHECK(goal_vector({0, 0, 0}, {5000, 0}).d == 1.0);

  Demonstration up = demo_from({{0, 0, 0}, {0, 10, 0}}, "e", "d");
  std::mt19937_64 rng(1);
  const GoalSample g = sample_goal(up, 0, 1, rng);
  CHECK(g.goal_index == 1);
  REQUIRE(g.history.size() == 1);
  CHECK(g.history[0] == GoalVector{0.01, 0.5});
  CHECK_THROWS(sample_goal(up, 1, 1, rng));

  // 500 m straight demo: goals never lie more than 150 m of travel ahead.
  const Demonstration line = demo_from(line_poses(2001, 0.25), "e", "line");
  std::vector<double> cum{0.0};
  for (std::size_t i = 1; i < line.size(); ++i) cum.push_back(cum.back() + distance(line.poses[i - 1].position(), line.poses[i].position()));
  std::size_t max_ahead = 0;
  for (std::size_t t = 0; t + 1 < line.size(); t += 7) {
    for (int rep = 0; rep < 5; ++rep) {
      const GoalSample s = sample_goal(line, t, 6, rng);
      CHECK(s.goal_index > t);
      CHECK(cum[s.goal_index] - cum[t] <= 150.0 + 1e-9);
      CHECK(s.history.size() == 6);
      max_ahead = std::max(max_ahead, s.goal_index - t);
    }
  }
  CHECK(max_ahead > 500);  // the window is actually used
}

TEST_CASE("training samples stay in their normalized ranges") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> v(-0.2, 1.2), w(-2.0, 2.0), dur(6.0, 25.0);
  CurationConfig cfg;
  std::size_t n_samples = 0;
  for (int ep = 0; ep < 1000; ++ep) {
    std::vector<synth::Leg> legs;
    for (int k = 0; k < 3; ++k) legs.push_back({std::abs(v(rng)) + 0.3, w(rng) * 0.3, dur(rng)});
    std::vector<Command> cmds;
    const auto poses = synth::integrate({0, 0, 0}, legs, 10.0, &cmds);
    for (auto& c : cmds) c = {v(rng), w(rng)};  // logged commands may exceed the limits
    const RawEpisode e = synth::episode_from_poses("fz" + std::to_string(ep), poses, cmds, 10.0, kAnchor);
    const auto demos = curate_episode(e, cfg);
    for (std::size_t history : {1u, 6u}) {
      for (const auto& s : build_training_samples(demos, history, ActionLimits{}, static_cast<std::uint64_t>(ep))) {
        ++n_samples;
        REQUIRE(s.goal_history.size() == history);
        REQUIRE(s.obs_history.size() == history);
        for (const auto& g : s.goal_history) {
          CHECK(g.d >= 0.0);
          CHECK(g.d <= 1.0);
          CHECK(g.theta >= -1.0);
          CHECK(g.theta <= 1.0);
        }
        for (const auto& a : s.target_chunk) {
          CHECK(std::abs(a.v) <= 1.0);
          CHECK(std::abs(a.omega) <= 1.0);
        }
        CHECK(mirror(mirror(s)) == s);
      }
    }
  }
  CHECK(n_samples > 10000);
}

TEST_CASE("curated demonstrations are consistent") {
  const RawEpisode e = moving_episode("walk", {{0.8, 0.0, 60.0}, {0.8, 0.5, 6.0}, {0.8, 0.0, 60.0}});
  const auto demos = curate_episode(e, CurationConfig{});
  REQUIRE(!demos.empty());
  for (const auto& d : demos) {
    CHECK(d.poses.size() == d.actions_gt.size());
    CHECK(d.poses.size() == d.obs_refs.size());
    CHECK(d.end_index - d.start_index + 1 == d.size());
    CHECK(path_length(d.poses, 0, d.size() - 1) > 20.0);
    for (const auto& c : d.actions_gt) CHECK(c.size() == kChunkLength);
  }
}

TEST_CASE("geo exclusion split") {
  const geokit::GeoPoint site(-0.11052, 34.75131);
  std::vector<Demonstration> demos;
  demos.push_back(demo_from(line_poses(200, 0.25), "at-site", "a", site));
  // ~96 km north of the site.
  const geokit::GeoPoint far(site.lat_deg() + 96'000.0 / geokit::kEarthRadiusM * 180.0 / std::numbers::pi, site.lon_deg());
  demos.push_back(demo_from(line_poses(200, 0.25), "far", "b", far));
  const geokit::GeoPoint near(site.lat_deg() + 94'000.0 / geokit::kEarthRadiusM * 180.0 / std::numbers::pi, site.lon_deg());
  demos.push_back(demo_from(line_poses(200, 0.25), "near", "c", near));
  const auto manifest = geo_exclusion_split(build_manifest(demos), std::vector<geokit::GeoPoint>{site});
  REQUIRE(manifest.clusters.size() == 3);
  for (const auto& c : manifest.clusters) {
    const std::string ep = c.cluster.episode_ids.front();
    double oracle = 1e300;
    for (const auto& d : demos)
      if (d.episode_id == ep)
        for (const auto& f : d.fixes) oracle = std::min(oracle, geokit::haversine_m(f, site));
    CHECK(c.min_site_distance_m <= oracle + 1e-6);
    CHECK((c.split == Split::kExcluded) == (c.min_site_distance_m < kExclusionRadiusM));
    if (ep == "at-site") CHECK(c.split == Split::kExcluded);
    if (ep == "near") CHECK(c.split == Split::kExcluded);
    if (ep == "far") CHECK(c.split == Split::kTrain);
  }
}

namespace {

DatasetManifest synthetic_manifest(int clusters, int demos_per_cluster, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(80, 600);
  std::vector<Demonstration> demos;
  for (int c = 0; c < clusters; ++c) {
    const geokit::GeoPoint anchor(-40.0 + 5.0 * c, 10.0 + 7.0 * c);
    for (int k = 0; k < demos_per_cluster; ++k) {
      demos.push_back(demo_from(line_poses(static_cast<std::size_t>(len(rng)), 0.2), "loc" + std::to_string(c) + "-ep",
                                "loc" + std::to_string(c) + "-d" + std::to_string(k), anchor));
    }
  }
  return build_manifest(demos);
}

}  // namespace

TEST_CASE("manifest hour accounting and JSON round trip") {
  const auto m = synthetic_manifest(4, 6, 3);
  REQUIRE(m.clusters.size() == 4);
  double total = 0.0;
  for (const auto& c : m.clusters) {
    double s = 0.0;
    for (const auto& d : c.demos) s += d.duration_s;
    CHECK(c.hours() == doctest::Approx(s / 3600.0));
    total += s / 3600.0;
  }
  CHECK(m.total_hours() == doctest::Approx(total));
  const auto back = manifest_from_json(manifest_to_json(m));
  CHECK(manifest_to_json(back) == manifest_to_json(m));
}

TEST_CASE("nested subsets") {
  const auto m = synthetic_manifest(6, 20, 11);
  const std::vector<int> counts{1, 2, 4};
  const std::vector<double> hours{0.05, 0.1};
  const auto grid = nested_subsets(m, counts, hours, 5);
  REQUIRE(grid.size() == 3);

  // Location sets are nested.
  for (std::size_t i = 1; i < counts.size(); ++i) {
    const auto& small = grid[i - 1][0].cluster_ids;
    const auto& large = grid[i][0].cluster_ids;
    CHECK(std::equal(small.begin(), small.end(), large.begin()));
  }
  for (const auto& row : grid) {
    // Demo lists per location are nested in hours.
    for (const auto& [cid, ids] : row[0].demo_ids) {
      const auto& more = row[1].demo_ids.at(cid);
      CHECK(std::equal(ids.begin(), ids.end(), more.begin()));
    }
    // Hours reach the target, overshooting by less than one demonstration.
    for (std::size_t j = 0; j < hours.size(); ++j) {
      for (const auto& [cid, ids] : row[j].demo_ids) {
        const auto& cl = m.cluster(cid);
        double sum = 0.0, longest = 0.0;
        for (const auto& d : cl.demos) {
          longest = std::max(longest, d.duration_s);
          if (std::find(ids.begin(), ids.end(), d.id) != ids.end()) sum += d.duration_s;
        }
        CHECK(sum >= hours[j] * 3600.0 - 1e-9);
        CHECK(sum < hours[j] * 3600.0 + longest);
      }
    }
  }
  // Deterministic and idempotent.
  const auto again = nested_subsets(m, counts, hours, 5);
  CHECK(again[2][1].demo_ids == grid[2][1].demo_ids);
  CHECK(location_order(m, 5) == location_order(m, 5));
  CHECK(location_order(m, 5) != location_order(m, 6));
}

TEST_CASE("infeasible subsets list every shortfall") {
  const auto m = synthetic_manifest(3, 4, 2);
  const std::vector<int> counts{2, 5};
  const std::vector<double> hours{10.0};
  try {
    (void)nested_subsets(m, counts, hours, 1);
    FAIL("expected InfeasibleSubsetError");
  } catch (const InfeasibleSubsetError& e) {
    CHECK(e.shortfalls().size() >= 2);
  }
  const std::vector<std::pair<int, double>> ok{{1, 0.01}, {3, 0.01}};
  CHECK(subset_shortfalls(m, ok, 1).empty());
}
