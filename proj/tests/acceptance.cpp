// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "navscale/analysis.hpp"
#include "navscale/curation.hpp"
#include "navscale/evalharness.hpp"
#include "navscale/expert.hpp"
#include "navscale/geokit.hpp"
#include "navscale/policy.hpp"
#include "navscale/simworld.hpp"
#include "navscale/study.hpp"
#include "oracles.hpp"
#include "synth.hpp"
#include "wilson_oracle.hpp"

namespace fs = std::filesystem;
using namespace navscale;

namespace {

// Tolerances and budgets.
constexpr double kLossScaleTol = 1e-12;
constexpr double kDoublingTarget = 0.1468;
constexpr double kDoublingTol = 1e-4;
constexpr int kGradProbesPerLayer = 100;
constexpr double kGradRelTol = 1e-5;
constexpr double kGradBudgetS = 60.0;
constexpr int kClusterInstances = 200;
constexpr std::size_t kClusterMaxEpisodes = 50;
constexpr int kWilsonPairs = 1000;
constexpr double kWilsonTol = 1e-6;
constexpr double kPowerLawTol = 1e-9;
constexpr int kFusionTrajectories = 20;
constexpr double kFusionMaxRatio = 0.7;
constexpr double kFusionBudgetS = 120.0;
constexpr double kScalingMaxR = -0.8;
constexpr double kMinEpisodeForDemoM = 30.0;
constexpr double kPeakMatchM = 1.0;

struct Verdict {
  bool pass{false};
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ------------------------------------------------------------------ 1 .. 7

Verdict loss_scale_check() {
  auto chunk = [](double w) {
    curation::ActionChunk c{};
    for (auto& a : c) a = {0.6, 0.0};
    c[4].omega = w;
    return c;
  };
  const double s0 = policy::loss_scale(chunk(0.0), 1.0, 10.0);
  const double s1 = policy::loss_scale(chunk(-1.0), 1.0, 10.0);
  const double sh = policy::loss_scale(chunk(0.5), 1.0, 10.0);
  const bool ok = std::abs(s0 - 1.0) < kLossScaleTol && std::abs(s1 - 10.0) < kLossScaleTol &&
                  std::abs(sh - 5.5) < kLossScaleTol;
  return {ok, fmt::format("s(0)={} s(1)={} s(0.5)={}", s0, s1, sh)};
}

Verdict doubling_check() {
  const double d = analysis::doubling_reduction(-0.229);
  return {std::abs(d - kDoublingTarget) <= kDoublingTol, fmt::format("1 - 2^-0.229 = {:.6f}", d)};
}

Verdict gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  const policy::PolicyShape shape;  // production shape
  const auto net = policy::MlpPolicy::xavier(shape, 17);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<policy::PolicySample> samples(4);
  for (auto& s : samples) {
    s.ranges.assign(1, std::vector<double>(shape.rays));
    for (auto& r : s.ranges[0]) r = u(rng);
    s.goals = {{u(rng), 2.0 * u(rng) - 1.0}};
    for (auto& a : s.target) a = {2.0 * u(rng) - 1.0, 2.0 * u(rng) - 1.0};
  }
  const auto batch = policy::make_batch(samples, shape, 1.0, 10.0);
  std::vector<policy::DenseLayer> grads;
  (void)policy::loss_and_gradients(net, batch, &grads);

  constexpr double kH = 1e-6;
  double worst = 0.0;
  auto probe_net = net;
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const auto n_w = net.layers()[l].weight.size();
    const auto n_b = net.layers()[l].bias.size();
    std::uniform_int_distribution<Eigen::Index> pick(0, n_w + n_b - 1);
    for (int p = 0; p < kGradProbesPerLayer; ++p) {
      const Eigen::Index idx = pick(rng);
      double* param = idx < n_w ? probe_net.layers()[l].weight.data() + idx : probe_net.layers()[l].bias.data() + (idx - n_w);
      const double analytic = idx < n_w ? grads[l].weight.data()[idx] : grads[l].bias(idx - n_w);
      const double saved = *param;
      *param = saved + kH;
      const double up = policy::loss_and_gradients(probe_net, batch, nullptr);
      *param = saved - kH;
      const double down = policy::loss_and_gradients(probe_net, batch, nullptr);
      *param = saved;
      const double numeric = (up - down) / (2.0 * kH);
      worst = std::max(worst, std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-4}));
    }
  }
  const double elapsed = seconds_since(t0);
  return {worst < kGradRelTol && elapsed < kGradBudgetS,
          fmt::format("{} layers x {} probes, max rel err {:.2e}, {:.1f} s", net.layers().size(), kGradProbesPerLayer,
                      worst, elapsed)};
}

Verdict clustering_check() {
  std::mt19937_64 rng(2718);
  std::uniform_int_distribution<std::size_t> count(1, kClusterMaxEpisodes);
  int agree = 0;
  for (int i = 0; i < kClusterInstances; ++i) {
    const auto eps = oracle::random_instance(rng, count(rng));
    const geokit::ClusterOptions opt;
    std::vector<std::set<std::string>> got;
    for (const auto& c : geokit::cluster_by_proximity(eps, opt)) got.emplace_back(c.episode_ids.begin(), c.episode_ids.end());
    std::sort(got.begin(), got.end());
    if (got == oracle::closure_components(eps, opt)) ++agree;
  }
  return {agree == kClusterInstances, fmt::format("{}/{} instances equal the closure oracle", agree, kClusterInstances)};
}

Verdict wilson_check() {
  std::mt19937_64 rng(314);
  double worst = 0.0;
  bool degenerate_ok = true;
  for (int i = 0; i < kWilsonPairs; ++i) {
    std::size_t n = 1 + rng() % 1000;
    std::size_t k = rng() % (n + 1);
    if (i % 10 == 0) k = 0;
    if (i % 10 == 1) k = n;
    const auto ci = evalharness::wilson_cc(k, n);
    const auto [lo, hi] = oracle::wilson_cc_bisect(k, n);
    worst = std::max({worst, std::abs(ci.lower - lo), std::abs(ci.upper - hi)});
    if (k == 0 && ci.lower != 0.0) degenerate_ok = false;
    if (k == n && ci.upper != 1.0) degenerate_ok = false;
  }
  return {worst < kWilsonTol && degenerate_ok,
          fmt::format("{} (k,n) pairs, max |diff| {:.2e}, boundary rules {}", kWilsonPairs, worst,
                      degenerate_ok ? "held" : "violated")};
}

Verdict power_law_check() {
  double worst_param = 0.0;
  double worst_r = 0.0;
  for (const auto& [alpha, beta] : {std::pair{-0.229, 0.9}, {0.35, 0.2}, {-1.5, 3.0}}) {
    std::vector<analysis::ScalingPoint> pts;
    for (double x : {1.0, 2.0, 4.0, 8.0, 16.0}) pts.push_back({x, beta * std::pow(x, alpha), ""});
    const auto fit = analysis::fit_power_law(pts);
    worst_param = std::max({worst_param, std::abs(fit.alpha - alpha), std::abs(fit.beta - beta)});
    worst_r = std::max(worst_r, fit.r ? std::abs(*fit.r - std::copysign(1.0, alpha)) : 1.0);
  }
  return {worst_param < kPowerLawTol && worst_r < kPowerLawTol,
          fmt::format("max param err {:.1e}, max |r -+ 1| {:.1e}", worst_param, worst_r)};
}

Verdict fusion_check() {
  const auto t0 = std::chrono::steady_clock::now();
  double raw = 0.0;
  double fused = 0.0;
  for (int seed = 1; seed <= kFusionTrajectories; ++seed) {
    const auto t = synth::fusion_trial(static_cast<std::uint64_t>(seed));
    raw += t.raw_rmse * t.raw_rmse;
    fused += t.fused_rmse * t.fused_rmse;
  }
  const double ratio = std::sqrt(fused / raw);
  const double elapsed = seconds_since(t0);
  return {ratio <= kFusionMaxRatio && elapsed < kFusionBudgetS,
          fmt::format("{} trajectories, fused/raw RMSE {:.4f} (raw {:.2f} m), {:.1f} s", kFusionTrajectories, ratio,
                      std::sqrt(raw / kFusionTrajectories), elapsed)};
}

// ------------------------------------------------------------------ 8 and 9

struct ScalingOutcome {
  Verdict trend;
  Verdict per_location;
};

const analysis::CellSummary* find_cell(const std::vector<analysis::CellSummary>& cells, int n, double hours) {
  for (const auto& c : cells) {
    if (c.key.n_locations == n && std::abs(c.key.hours_per_location - hours) <= 1e-9 * std::max(1.0, hours)) return &c;
  }
  return nullptr;
}

ScalingOutcome scaling_checks(const fs::path& config_path, const fs::path& workdir, std::size_t workers) {
  const auto config = study::load_config(config_path);
  const std::string key = study::config_digest(config).substr(0, 12);
  const fs::path data = workdir / ("data-" + study::data_digest(config).substr(0, 12));
  const fs::path results = workdir / ("study-" + key);
  const auto t0 = std::chrono::steady_clock::now();
  study::generate_dataset(config, data, workers, &std::cerr);
  const auto run = study::run_scaling_study(config, data, results, workers, true, &std::cerr);
  if (!run.failures.empty()) {
    const std::string msg = fmt::format("{} jobs failed, first: {}: {}", run.failures.size(), run.failures[0].job,
                                        run.failures[0].error);
    return {{false, msg}, {false, msg}};
  }
  const auto a = study::analyze_results(results, &std::cerr);
  const double minutes = seconds_since(t0) / 60.0;
  if (!a.fixed_total_hours) return {{false, "no fixed-total view in the grid"}, {false, "no fixed-total view"}};
  const double total = *a.fixed_total_hours;
  const auto& cells = a.tables.cells;

  ScalingOutcome out;
  {
    const auto* one = find_cell(cells, 1, total);
    const auto* sixteen = find_cell(cells, 16, total / 16.0);
    const auto pts = analysis::fixed_total_points(cells, total);
    std::optional<analysis::PowerLawFit> fit;
    try {
      fit = analysis::fit_power_law(pts);
    } catch (const std::invalid_argument&) {
    }
    const bool median_ok = one && sixteen && sixteen->median_success_rate > one->median_success_rate;
    const bool fit_ok = fit && fit->alpha < 0.0 && fit->r && *fit->r <= kScalingMaxR;
    std::string cells_txt;
    for (const auto& p : pts) cells_txt += fmt::format(" {}:{:.3f}", static_cast<int>(p.x), 1.0 - p.y);
    out.trend = {median_ok && fit_ok,
                 fmt::format("T={:g} h, median success L1 {:.3f} vs L16 {:.3f}; failure fit alpha {:+.4f} r {}; "
                             "pooled success{}; {:.1f} min",
                             total, one ? one->median_success_rate : -1.0, sixteen ? sixteen->median_success_rate : -1.0,
                             fit ? fit->alpha : 0.0, fit && fit->r ? fmt::format("{:+.3f}", *fit->r) : "n/a", cells_txt,
                             minutes)};
  }
  {
    // At 4 locations: the smallest per-location amount against four times it.
    std::vector<const analysis::CellSummary*> four;
    for (const auto& c : cells) {
      if (c.key.n_locations == 4) four.push_back(&c);
    }
    const analysis::CellSummary* base = nullptr;
    const analysis::CellSummary* quad = nullptr;
    for (const auto* c : four) {
      if (!base || c->key.hours_per_location < base->key.hours_per_location) base = c;
    }
    if (base) quad = find_cell(cells, 4, 4.0 * base->key.hours_per_location);
    if (!base || !quad) {
      out.per_location = {false, "grid lacks a 4-location pair at 1x and 4x data"};
    } else {
      const auto& p1 = base->pooled;
      const auto& p4 = quad->pooled;
      const double overlap = std::min(p1.ci.upper, p4.ci.upper) - std::max(p1.ci.lower, p4.ci.lower);
      const double diff = std::abs(p4.rate - p1.rate);
      out.per_location = {diff <= overlap,
                          fmt::format("L4 at {:g} h: {}/{} = {:.3f} [{:.3f}, {:.3f}]; at {:g} h: {}/{} = {:.3f} "
                                      "[{:.3f}, {:.3f}]; |diff| {:.3f} vs CI overlap {:.3f}",
                                      base->key.hours_per_location, p1.successes, p1.trials, p1.rate, p1.ci.lower,
                                      p1.ci.upper, quad->key.hours_per_location, p4.successes, p4.trials, p4.rate,
                                      p4.ci.lower, p4.ci.upper, diff, overlap)};
    }
  }
  return out;
}

// ----------------------------------------------------------------------- 10

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = fmt::format("\"{}\" {} >> \"{}\" 2>&1", NAVSCALE_CLI_PATH, args, log.string());
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict determinism_check(const fs::path& config_path, const fs::path& workdir) {
  std::vector<std::string> digests;
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path dir = workdir / fmt::format("determinism-{}", pass);
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path log = dir / "log.txt";
    const std::string cfg = config_path.string();
    const fs::path data = dir / "data";
    const fs::path ckpt = dir / "policy.ckpt";
    const fs::path out = dir / "outcomes.csv";
    if (run_cli(fmt::format("gen-data --config {} --out {}", cfg, data.string()), log) != 0 ||
        run_cli(fmt::format("train --config {} --data {} --locations 2 --hours 0.05 --seed 3 --out {}", cfg,
                            data.string(), ckpt.string()),
                log) != 0 ||
        run_cli(fmt::format("eval --config {} --data {} --checkpoint {} --out {}", cfg, data.string(), ckpt.string(),
                            out.string()),
                log) != 0) {
      return {false, fmt::format("pipeline failed in pass {}; see {}", pass + 1, log.string())};
    }
    digests.push_back(study::file_sha256(out));
  }
  return {digests[0] == digests[1], fmt::format("outcome digests {} / {}", digests[0].substr(0, 16),
                                                digests[1].substr(0, 16))};
}

// ----------------------------------------------------------------------- 11

Verdict curation_check() {
  const curation::CurationConfig cfg;
  // Expert episodes on generated locations. Pauses are cut out by the
  // stationary filter, so length is measured per moving stretch.
  int whole = 0;
  int whole_with_demo = 0;
  int stretches = 0;
  int stretches_with_demo = 0;
  std::string missing;
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto spec = simworld::generate_location(1000 + seed);
    const simworld::World world(spec);
    std::mt19937_64 rng(seed);
    const int n = static_cast<int>(spec.route_graph.nodes.size());
    for (int k = 0; k < 4; ++k) {
      const int a = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
      const int b = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
      if (a == b) continue;
      expert::OperatorProfile profile;
      profile.detour_prob = 0.2;
      profile.pause_prob = 0.002;
      expert::DriveConfig dc;
      dc.episode_id = fmt::format("w{}-{}", seed, k);
      const auto nodes = expert::plan_route(spec, a, b, rng, profile.detour_prob);
      const auto r = expert::drive(world, expert::route_polyline(spec, nodes), profile, rng, dc);
      const auto travelled = [&](double t0, double t1) {
        double len = 0.0;
        for (std::size_t i = 1; i < r.trace.size(); ++i) {
          if (r.trace[i - 1].t < t0 - 1e-9 || r.trace[i].t > t1 + 1e-9) continue;
          len += distance(r.trace[i - 1].state.pose.position(), r.trace[i].state.pose.position());
        }
        return len;
      };
      const auto demos = curation::curate_episode(r.episode, cfg);
      if (travelled(0.0, r.trace.back().t) >= kMinEpisodeForDemoM) {
        ++whole;
        if (!demos.empty()) ++whole_with_demo;
      }
      for (const auto& sub : curation::filter_episode(r.episode, cfg.filter)) {
        if (travelled(sub.samples.front().t, sub.samples.back().t) < kMinEpisodeForDemoM) continue;
        ++stretches;
        const bool has = std::any_of(demos.begin(), demos.end(),
                                     [&](const auto& d) { return d.id.rfind(sub.id + "#", 0) == 0; });
        if (has) {
          ++stretches_with_demo;
        } else {
          missing += " " + sub.id;
        }
      }
    }
  }

  // Scripted out-and-back plus loop with exact sensors.
  const geokit::GeoPoint anchor(-1.2921, 36.8219);
  std::vector<Command> cmds;
  constexpr double kRate = 20.0;
  const auto truth = synth::integrate({0, 0, 0}, {{0.8, 0.0, 60.0},                       // 48 m out
                                                  {0.3, 0.3 / 1.5, std::numbers::pi * 5.0},  // tight U-turn
                                                  {0.8, 0.0, 60.0},                       // 48 m back
                                                  {0.8, 0.8 / 12.0, 2.0 * std::numbers::pi * 15.0}},  // r=12 loop
                                      kRate, &cmds);
  const auto episode = synth::episode_from_poses("scripted", truth, cmds, kRate, anchor);
  const auto demos = curation::curate_episode(episode, cfg);

  // Oracle: first prominent peak of the distance-from-start profile on the
  // exact 4 Hz trajectory, chained segment by segment.
  std::vector<geokit::GeoPoint> grid;
  for (std::size_t i = 0; i < truth.size(); i += 5) grid.push_back(posegraph::from_local_frame(anchor, truth[i].position()));
  std::vector<std::size_t> peaks;
  for (std::size_t start = 0;;) {
    std::vector<double> f;
    for (std::size_t i = start; i < grid.size(); ++i) f.push_back(geokit::haversine_m(grid[start], grid[i]));
    const std::size_t p = oracle::brute_force_first_peak(f, cfg.segment.min_prominence_m);
    if (p == 0) break;
    peaks.push_back(start + p);
    start += p;
  }
  bool splits_ok = demos.size() >= 2 && peaks.size() + 1 >= demos.size();
  double worst = 0.0;
  for (std::size_t k = 0; splits_ok && k + 1 < demos.size(); ++k) {
    const double d = geokit::haversine_m(demos[k].fixes.back(), grid[peaks[k]]);
    worst = std::max(worst, d);
    splits_ok = d <= kPeakMatchM;
  }
  return {stretches_with_demo == stretches && stretches > 0 && splits_ok,
          fmt::format("{}/{} moving stretches >= {:g} m gave demos{} ({}/{} whole episodes); scripted episode -> {} "
                      "segments, {} oracle peaks, max split offset {:.3f} m",
                      stretches_with_demo, stretches, kMinEpisodeForDemoM,
                      missing.empty() ? "" : " (missing:" + missing + ")", whole_with_demo, whole, demos.size(),
                      peaks.size(), worst)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  fs::path workdir = fs::temp_directory_path() / "navscale-acceptance";
  fs::path study_config = fs::path(NAVSCALE_SOURCE_DIR) / "configs" / "acceptance.json";
  fs::path small_config = fs::path(NAVSCALE_SOURCE_DIR) / "configs" / "smoke.json";
  std::vector<int> only;
  std::size_t workers = 0;
  app.add_option("--workdir", workdir, "Scratch directory for datasets and results");
  app.add_option("--study-config", study_config, "Config of the scaling study")->check(CLI::ExistingFile);
  app.add_option("--pipeline-config", small_config, "Config of the determinism pipeline")->check(CLI::ExistingFile);
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--workers", workers, "Worker threads (default: NAVSCALE_WORKERS or 1)");
  CLI11_PARSE(app, argc, argv);
  if (workers == 0) workers = study::workers_from_env();
  fs::create_directories(workdir);

  const auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  int failed = 0;
  const auto report = [&](int id, const std::string& name, const Verdict& v) {
    std::cout << fmt::format("[{}] {:>2} {}: {}", v.pass ? "PASS" : "FAIL", id, name, v.detail) << std::endl;
    if (!v.pass) ++failed;
  };
  const auto guarded = [&](const std::function<Verdict()>& fn) -> Verdict {
    try {
      return fn();
    } catch (const std::exception& e) {
      return {false, std::string("error: ") + e.what()};
    }
  };

  if (wanted(1)) report(1, "loss scale", guarded(loss_scale_check));
  if (wanted(2)) report(2, "doubling reduction", guarded(doubling_check));
  if (wanted(3)) report(3, "gradient check", guarded(gradient_check));
  if (wanted(4)) report(4, "clustering vs closure", guarded(clustering_check));
  if (wanted(5)) report(5, "Wilson interval", guarded(wilson_check));
  if (wanted(6)) report(6, "power-law recovery", guarded(power_law_check));
  if (wanted(7)) report(7, "fusion RMSE", guarded(fusion_check));
  if (wanted(8) || wanted(9)) {
    ScalingOutcome s;
    try {
      s = scaling_checks(study_config, workdir, workers);
    } catch (const std::exception& e) {
      s.trend = s.per_location = {false, std::string("error: ") + e.what()};
    }
    if (wanted(8)) report(8, "location scaling", s.trend);
    if (wanted(9)) report(9, "per-location data at 4 locations", s.per_location);
  }
  if (wanted(10)) report(10, "determinism", guarded([&] { return determinism_check(small_config, workdir); }));
  if (wanted(11)) report(11, "curation end to end", guarded(curation_check));
  std::cout << (failed == 0 ? "all criteria passed" : fmt::format("{} criteria failed", failed)) << std::endl;
  return failed == 0 ? 0 : 1;
}
