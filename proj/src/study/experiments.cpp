#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "navscale/study.hpp"

namespace navscale::study {
namespace {

using nlohmann::json;

std::mutex g_log_mutex;

void say(std::ostream* log, const std::string& line) {
  if (log == nullptr) return;
  const std::lock_guard lock(g_log_mutex);
  *log << line << '\n' << std::flush;
}

std::vector<std::string> header(const std::string& digest, std::uint64_t seed, const std::string& job) {
  return {provenance(digest, seed), "job=" + job};
}

struct JobSpec {
  std::string name;
  std::string kind;  // "cell" or "variant"
  std::optional<analysis::CellKey> cell;
  std::string variant;
  DemoSelection selection;
  std::uint64_t seed{0};
};

struct JobOutput {
  std::vector<evalharness::OutcomeRow> rows;
  bool reused{false};
};

JobOutput run_job(const ExperimentConfig& config, const Dataset& dataset, DemoStore& store, const JobSpec& job,
                  const std::filesystem::path& jobs_dir, bool resume, std::ostream* log) {
  const std::string digest = job_digest(config, job.name, job.seed);
  const auto dir = jobs_dir / fmt::format("{}-{}", job.name, digest.substr(0, 12));
  const auto outcomes_path = dir / "outcomes.csv";
  if (resume && std::filesystem::exists(outcomes_path)) {
    std::istringstream in(read_file(outcomes_path));
    say(log, fmt::format("[reuse] {}", job.name));
    return {evalharness::read_outcomes_csv(in), true};
  }

  say(log, fmt::format("[train] {} ({} demos, {:.3f} h)", job.name, job.selection.demo_ids.size(), job.selection.hours));
  const TrainedPolicy trained = train_on(config, store, job.selection, job.seed);
  const auto hdr = header(digest, job.seed, job.name);

  std::ostringstream ckpt;
  policy::save_checkpoint(ckpt, trained.policy, provenance(digest, job.seed));
  write_file_once(dir / "policy.ckpt", ckpt.str());
  std::ostringstream loss;
  for (const auto& h : hdr) loss << "# " << h << '\n';
  policy::write_loss_csv(loss, trained.curve);
  write_file_once(dir / "loss.csv", loss.str());

  json meta = {{"name", job.name},
               {"kind", job.kind},
               {"seed", job.seed},
               {"config_digest", digest},
               {"clusters", job.selection.cluster_ids},
               {"demos", job.selection.demo_ids.size()},
               {"hours", job.selection.hours},
               {"samples", trained.samples},
               {"final_loss", trained.curve.empty() ? 0.0 : trained.curve.back().loss}};
  if (job.cell) {
    meta["n_locations"] = job.cell->n_locations;
    meta["hours_per_location"] = job.cell->hours_per_location;
  }
  if (!job.variant.empty()) meta["variant"] = job.variant;
  write_file_once(dir / "job.json", meta.dump(2) + "\n");

  say(log, fmt::format("[eval]  {} (final loss {:.4f})", job.name, trained.curve.empty() ? 0.0 : trained.curve.back().loss));
  auto shared = std::make_shared<const policy::MlpPolicy>(trained.policy);
  JobOutput out{evaluate_policy(config, dataset, shared, job.name), false};
  std::ostringstream csv;
  evalharness::write_outcomes_csv(csv, out.rows, hdr);
  write_file_once(outcomes_path, csv.str());
  const auto k = std::count_if(out.rows.begin(), out.rows.end(), [](const auto& r) { return r.success; });
  say(log, fmt::format("[done]  {} success {}/{}", job.name, k, out.rows.size()));
  return out;
}

Dataset checked_dataset(const ExperimentConfig& config, const std::filesystem::path& data_dir) {
  Dataset ds = load_dataset(data_dir);
  if (ds.digest != data_digest(config)) {
    throw ConfigError("the dataset was generated with a different data configuration; rerun gen-data");
  }
  return ds;
}

void write_failures(const std::filesystem::path& path, const std::vector<JobFailure>& failures,
                    const std::string& digest, std::uint64_t seed) {
  std::string s = "# " + provenance(digest, seed) + "\njob,error\n";
  for (const auto& f : failures) {
    std::string e = f.error;
    std::replace(e.begin(), e.end(), ',', ';');
    std::replace(e.begin(), e.end(), '\n', ' ');
    s += f.job + "," + e + "\n";
  }
  write_file_once(path, s);
}

struct JobFile {
  std::filesystem::path dir;
  json meta;
  std::vector<evalharness::OutcomeRow> rows;
  std::string outcomes_sha;
};

std::vector<JobFile> scan_jobs(const std::filesystem::path& results_dir, const std::string& kind) {
  std::vector<JobFile> out;
  const auto jobs = results_dir / "jobs";
  if (!std::filesystem::exists(jobs)) return out;
  std::vector<std::filesystem::path> dirs;
  for (const auto& e : std::filesystem::directory_iterator(jobs)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    if (!std::filesystem::exists(d / "outcomes.csv") || !std::filesystem::exists(d / "job.json")) continue;
    JobFile f;
    f.dir = d;
    f.meta = json::parse(read_file(d / "job.json"));
    if (f.meta.at("kind").get<std::string>() != kind) continue;
    const std::string text = read_file(d / "outcomes.csv");
    f.outcomes_sha = sha256_hex(text);
    std::istringstream in(text);
    f.rows = evalharness::read_outcomes_csv(in);
    out.push_back(std::move(f));
  }
  return out;
}

std::string jobs_key(const std::vector<JobFile>& jobs) {
  std::string s;
  for (const auto& j : jobs) s += j.dir.filename().string() + ":" + j.outcomes_sha + "\n";
  return sha256_hex(s).substr(0, 12);
}

std::string opt_num(const std::optional<double>& v) { return v ? fmt::format("{:.17g}", *v) : ""; }

}  // namespace

DemoSelection select_cell(const curation::DatasetManifest& manifest, const analysis::CellKey& cell,
                          std::uint64_t seed) {
  const curation::SubsetCell sc = curation::subset_cell(manifest, cell.n_locations, cell.hours_per_location, seed);
  DemoSelection s;
  s.name = analysis::to_string(cell);
  s.cluster_ids = sc.cluster_ids;
  for (int c : sc.cluster_ids) {
    const auto& ids = sc.demo_ids.at(c);
    s.demo_ids.insert(s.demo_ids.end(), ids.begin(), ids.end());
  }
  s.hours = sc.total_hours;
  return s;
}

DemoSelection select_in_domain(const curation::DatasetManifest& manifest, double hours_per_site, std::uint64_t seed) {
  DemoSelection s;
  s.name = "in-domain";
  std::vector<std::string> shortfalls;
  for (const auto& c : manifest.clusters) {
    if (c.split != curation::Split::kExcluded) continue;
    std::vector<curation::ManifestDemo> demos = c.demos;
    std::mt19937_64 rng(derive_seed(seed, "in-domain", static_cast<std::uint64_t>(c.cluster.id)));
    std::shuffle(demos.begin(), demos.end(), rng);
    double acc = 0.0;
    for (const auto& d : demos) {
      if (acc >= hours_per_site * 3600.0) break;
      s.demo_ids.push_back(d.id);
      acc += d.duration_s;
    }
    if (acc < hours_per_site * 3600.0 * (1.0 - 1e-9)) {
      shortfalls.push_back(fmt::format("cluster {}: {:.3f} h < {:.3f} h", c.cluster.id, acc / 3600.0, hours_per_site));
    }
    s.cluster_ids.push_back(c.cluster.id);
    s.hours += acc / 3600.0;
  }
  if (s.cluster_ids.empty()) shortfalls.push_back("no in-domain clusters near the test sites");
  if (!shortfalls.empty()) throw curation::InfeasibleSubsetError("in-domain data is insufficient", shortfalls);
  return s;
}

TrainedPolicy train_on(const ExperimentConfig& config, DemoStore& store, const DemoSelection& selection,
                       std::uint64_t seed) {
  const auto demos = store.get(selection.demo_ids);
  const policy::PolicyShape shape = config.shape();
  const auto samples = curation::build_training_samples(demos, shape.history, config.eval.sim.action_limits,
                                                        derive_seed(seed, "goals", 0));
  if (samples.empty()) throw std::runtime_error(fmt::format("selection {} yields no training samples", selection.name));
  simworld::GenerationOptions gen;
  gen.grid_nodes = config.data.grid_nodes;
  simworld::ObservationRenderer renderer(gen, config.eval.sim.sensor);
  const auto rendered = render_samples(samples, renderer);
  policy::TrainConfig tc = config.train;
  tc.seed = derive_seed(seed, "train", 0);
  policy::TrainResult r = policy::train(rendered, shape, tc);
  return {std::move(r.policy), std::move(r.curve), rendered.size()};
}

std::vector<TestRoute> test_routes(const ExperimentConfig& config, const Dataset& dataset) {
  std::vector<TestRoute> out;
  evalharness::RouteGenOptions opts;
  opts.segments = config.eval.segments;
  for (const auto& loc : dataset.locations) {
    if (loc.kind != LocationKind::kTest) continue;
    const auto spec = simworld::generate_location(loc.world_seed, generation_options(config.data, loc));
    for (std::size_t r = 0; r < config.eval.routes_per_site; ++r) {
      const std::string id = config.eval.routes_per_site == 1 ? loc.name : fmt::format("{}-r{}", loc.name, r);
      out.push_back({loc.name, loc.world_seed,
                     evalharness::generate_route(spec, id, derive_seed(config.eval.route_seed, loc.name, r), opts)});
    }
  }
  return out;
}

std::vector<evalharness::OutcomeRow> evaluate_controller(
    const ExperimentConfig& config, const Dataset& dataset,
    const std::function<std::unique_ptr<evalharness::Controller>()>& make, const std::string& policy_id) {
  std::vector<evalharness::OutcomeRow> rows;
  for (const auto& tr : test_routes(config, dataset)) {
    const auto& loc = *std::find_if(dataset.locations.begin(), dataset.locations.end(),
                                    [&](const LocationRecord& l) { return l.name == tr.site; });
    const simworld::World world(simworld::generate_location(tr.world_seed, generation_options(config.data, loc)));
    for (int rep = 0; rep < config.eval.reps; ++rep) {
      auto controller = make();
      const auto outcome = evalharness::run_route(*controller, world, tr.route, config.eval.sim,
                                                  derive_seed(config.eval.route_seed, tr.route.id, 1000 + rep), rep);
      const auto r = evalharness::to_rows(policy_id, outcome);
      rows.insert(rows.end(), r.begin(), r.end());
    }
  }
  return rows;
}

std::vector<evalharness::OutcomeRow> evaluate_policy(const ExperimentConfig& config, const Dataset& dataset,
                                                     std::shared_ptr<const policy::MlpPolicy> policy,
                                                     const std::string& policy_id) {
  const auto limits = config.eval.sim.action_limits;
  return evaluate_controller(
      config, dataset, [&] { return std::make_unique<evalharness::PolicyController>(policy, limits); }, policy_id);
}

StudyResult run_scaling_study(const ExperimentConfig& config, const std::filesystem::path& data_dir,
                              const std::filesystem::path& out_dir, std::size_t workers, bool resume,
                              std::ostream* log) {
  const Dataset dataset = checked_dataset(config, data_dir);
  const auto cells = config.grid.cells();
  if (cells.empty()) throw ConfigError("grid defines no cells");

  // Every (cell, seed) must be feasible before anything is trained.
  std::vector<std::pair<int, double>> pairs;
  for (const auto& c : cells) pairs.emplace_back(c.n_locations, c.hours_per_location);
  std::vector<std::string> shortfalls;
  for (auto seed : config.seeds) {
    for (auto& s : curation::subset_shortfalls(dataset.manifest, pairs, seed)) {
      shortfalls.push_back(fmt::format("seed {}: {}", seed, s));
    }
  }
  if (!shortfalls.empty()) throw curation::InfeasibleSubsetError("scaling grid is infeasible", shortfalls);

  std::vector<JobSpec> jobs;
  for (const auto& c : cells) {
    for (auto seed : config.seeds) {
      JobSpec j;
      j.name = fmt::format("{}_s{}", analysis::to_string(c), seed);
      j.kind = "cell";
      j.cell = c;
      j.selection = select_cell(dataset.manifest, c, seed);
      j.seed = seed;
      jobs.push_back(std::move(j));
    }
  }

  DemoStore store(data_dir);
  StudyResult result;
  result.outcomes.resize(jobs.size());
  std::vector<bool> reused(jobs.size(), false);
  const auto errors = parallel_for(jobs.size(), workers, [&](std::size_t i) {
    JobOutput out = run_job(config, dataset, store, jobs[i], out_dir / "jobs", resume, log);
    result.outcomes[i] = {*jobs[i].cell, jobs[i].seed, std::move(out.rows)};
    reused[i] = out.reused;
  });
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (errors.contains(i)) {
      result.failures.push_back({jobs[i].name, errors.at(i)});
      say(log, fmt::format("[fail]  {}: {}", jobs[i].name, errors.at(i)));
    } else if (reused[i]) {
      ++result.reused;
    } else {
      ++result.trained;
    }
  }
  std::erase_if(result.outcomes, [](const analysis::CellOutcomes& c) { return c.rows.empty(); });
  if (!result.failures.empty()) {
    write_failures(out_dir / fmt::format("failures-{}.csv", config_digest(config).substr(0, 12)), result.failures,
                   config_digest(config), config.data.seed);
  }
  if (!result.outcomes.empty()) plot_results(out_dir);
  return result;
}

std::vector<VariantResult> run_compare_policies(const ExperimentConfig& config, const std::filesystem::path& data_dir,
                                                const std::filesystem::path& out_dir, std::size_t workers, bool resume,
                                                std::vector<JobFailure>* failures, std::ostream* log) {
  const Dataset dataset = checked_dataset(config, data_dir);
  std::vector<JobSpec> jobs;
  const std::vector<std::string> variants{"zero-shot", "scale-in-domain", "in-domain-only"};
  for (auto seed : config.seeds) {
    const DemoSelection zs = select_cell(
        dataset.manifest, {config.compare.zero_shot_locations, config.compare.zero_shot_hours_per_location}, seed);
    for (int id : zs.cluster_ids) {
      if (dataset.manifest.cluster(id).split != curation::Split::kTrain) {
        throw std::logic_error(fmt::format("zero-shot selection contains test-site cluster {}", id));
      }
    }
    const DemoSelection in = select_in_domain(dataset.manifest, config.compare.in_domain_hours_per_site, seed);
    DemoSelection both = zs;
    both.demo_ids.insert(both.demo_ids.end(), in.demo_ids.begin(), in.demo_ids.end());
    both.cluster_ids.insert(both.cluster_ids.end(), in.cluster_ids.begin(), in.cluster_ids.end());
    both.hours += in.hours;
    const DemoSelection picks[] = {zs, both, in};
    for (std::size_t v = 0; v < variants.size(); ++v) {
      JobSpec j;
      j.name = fmt::format("{}_s{}", variants[v], seed);
      j.kind = "variant";
      j.variant = variants[v];
      j.selection = picks[v];
      j.selection.name = variants[v];
      j.seed = seed;
      jobs.push_back(std::move(j));
    }
  }

  DemoStore store(data_dir);
  std::vector<std::vector<evalharness::OutcomeRow>> rows(jobs.size());
  const auto errors = parallel_for(jobs.size(), workers, [&](std::size_t i) {
    rows[i] = run_job(config, dataset, store, jobs[i], out_dir / "jobs", resume, log).rows;
  });
  for (const auto& [i, e] : errors) {
    if (failures != nullptr) failures->push_back({jobs[i].name, e});
    say(log, fmt::format("[fail]  {}: {}", jobs[i].name, e));
  }

  std::vector<VariantResult> out;
  for (const auto& v : variants) {
    std::vector<evalharness::OutcomeRow> pooled;
    std::set<int> clusters;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (jobs[i].variant != v || errors.contains(i)) continue;
      pooled.insert(pooled.end(), rows[i].begin(), rows[i].end());
      clusters.insert(jobs[i].selection.cluster_ids.begin(), jobs[i].selection.cluster_ids.end());
    }
    if (pooled.empty()) continue;
    VariantResult r;
    r.variant = v;
    const auto outcomes = evalharness::to_outcomes(pooled);
    r.success = evalharness::success_rate(outcomes);
    r.nir = evalharness::nir(outcomes);
    r.nps = evalharness::nps(outcomes);
    r.cluster_ids.assign(clusters.begin(), clusters.end());
    // Dist per (policy, route, repetition), averaged.
    std::map<std::tuple<std::string, std::string, int>, evalharness::RouteOutcome> routes;
    for (const auto& row : pooled) {
      auto& ro = routes[{row.policy_id, row.route_id, row.rep}];
      ro.route_id = row.route_id;
      ro.rep = row.rep;
      const auto o = evalharness::to_outcomes(std::span(&row, 1));
      ro.segments.push_back(o.front());
    }
    double dist = 0.0;
    for (auto& [key, ro] : routes) {
      std::sort(ro.segments.begin(), ro.segments.end(), [](const auto& a, const auto& b) { return a.segment < b.segment; });
      dist += evalharness::dist_to_first_failure(ro);
    }
    r.mean_dist_to_first_failure = dist / static_cast<double>(routes.size());
    out.push_back(std::move(r));
  }

  std::string csv = "# " + provenance(config_digest(config), config.data.seed) +
                    "\nvariant,successes,trials,success_rate,ci_lower,ci_upper,nir,nps,mean_dist_to_first_failure_m,clusters\n";
  for (const auto& r : out) {
    std::string clusters;
    for (int c : r.cluster_ids) clusters += (clusters.empty() ? "" : " ") + std::to_string(c);
    csv += fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{},{},{:.17g},{}\n", r.variant, r.success.successes,
                       r.success.trials, r.success.rate, r.success.ci.lower, r.success.ci.upper, opt_num(r.nir),
                       opt_num(r.nps), r.mean_dist_to_first_failure, clusters);
  }
  write_file_once(out_dir / fmt::format("compare-{}.csv", sha256_hex(csv).substr(0, 12)), csv);
  return out;
}

AnalysisOutput analyze_results(const std::filesystem::path& results_dir, std::ostream* log) {
  const auto jobs = scan_jobs(results_dir, "cell");
  if (jobs.empty()) throw std::runtime_error(fmt::format("no completed scaling jobs under {}", results_dir.string()));

  std::vector<analysis::CellOutcomes> results;
  std::vector<analysis::CellKey> expected;
  for (const auto& j : jobs) {
    const analysis::CellKey key{j.meta.at("n_locations").get<int>(), j.meta.at("hours_per_location").get<double>()};
    results.push_back({key, j.meta.at("seed").get<std::uint64_t>(), j.rows});
    expected.push_back(key);
  }
  std::sort(expected.begin(), expected.end());
  expected.erase(std::unique(expected.begin(), expected.end()), expected.end());

  AnalysisOutput out;
  out.tables = analysis::aggregate(expected, results);
  out.dir = results_dir / "analysis" / jobs_key(jobs);

  // Fixed-total view: the total hours shared by the most location counts.
  std::map<long long, std::set<int>> by_total;
  std::map<long long, double> total_value;
  for (const auto& k : expected) {
    const auto rounded = std::llround(k.total_hours() * 1e6);
    by_total[rounded].insert(k.n_locations);
    total_value[rounded] = k.total_hours();
  }
  std::size_t best = 0;
  for (const auto& [t, ns] : by_total) {
    if (ns.size() >= 3 && ns.size() >= best) {
      best = ns.size();
      out.fixed_total_hours = total_value[t];
    }
  }

  if (out.fixed_total_hours) {
    const auto add_fit = [&](const std::string& name, const std::vector<analysis::ScalingPoint>& pts) {
      try {
        out.fits.push_back({name, analysis::fit_power_law(pts)});
      } catch (const std::invalid_argument& e) {
        say(log, fmt::format("[fit]   {} skipped: {}", name, e.what()));
      }
    };
    add_fit("pooled", analysis::fixed_total_points(out.tables.cells, *out.fixed_total_hours));
    std::set<std::string> route_ids;
    for (const auto& r : out.tables.per_route) route_ids.insert(r.route_id);
    for (const auto& id : route_ids) {
      add_fit("route:" + id, analysis::fixed_total_points(out.tables.per_route, id, *out.fixed_total_hours));
    }
  }

  const std::vector<std::string> hdr{"jobs_key=" + out.dir.filename().string()};
  std::ostringstream cells;
  analysis::write_cells_csv(cells, out.tables.cells, hdr);
  write_file_once(out.dir / "cells.csv", cells.str());
  std::ostringstream views;
  analysis::write_views_csv(views, out.tables.cells, hdr);
  write_file_once(out.dir / "views.csv", views.str());
  std::ostringstream routes;
  analysis::write_routes_csv(routes, out.tables.per_route, hdr);
  write_file_once(out.dir / "routes.csv", routes.str());
  std::ostringstream fits;
  analysis::write_fits_csv(fits, out.fits, hdr);
  write_file_once(out.dir / "fits.csv", fits.str());

  json summary;
  summary["fixed_total_hours"] = out.fixed_total_hours ? json(*out.fixed_total_hours) : json(nullptr);
  summary["jobs"] = json::array();
  for (const auto& j : jobs) {
    summary["jobs"].push_back({{"dir", std::filesystem::relative(j.dir, results_dir).generic_string()},
                               {"name", j.meta.at("name")},
                               {"n_locations", j.meta.at("n_locations")},
                               {"hours_per_location", j.meta.at("hours_per_location")},
                               {"seed", j.meta.at("seed")},
                               {"config_digest", j.meta.at("config_digest")},
                               {"checkpoint", std::filesystem::relative(j.dir / "policy.ckpt", results_dir).generic_string()},
                               {"outcomes", std::filesystem::relative(j.dir / "outcomes.csv", results_dir).generic_string()},
                               {"outcomes_sha256", j.outcomes_sha}});
  }
  summary["cells"] = json::array();
  for (const auto& c : out.tables.cells) {
    summary["cells"].push_back({{"n_locations", c.key.n_locations},
                                {"hours_per_location", c.key.hours_per_location},
                                {"success_rate", c.pooled.rate},
                                {"ci_lower", c.pooled.ci.lower},
                                {"ci_upper", c.pooled.ci.upper},
                                {"median_seed_success_rate", c.median_success_rate},
                                {"trials", c.pooled.trials}});
  }
  summary["fits"] = json::array();
  for (const auto& f : out.fits) {
    summary["fits"].push_back({{"name", f.name},
                               {"alpha", f.fit.alpha},
                               {"beta", f.fit.beta},
                               {"r", f.fit.r ? json(*f.fit.r) : json(nullptr)},
                               {"doubling_reduction", analysis::doubling_reduction(f.fit.alpha)},
                               {"n_points", f.fit.n_points}});
  }
  write_file_once(out.dir / "summary.json", summary.dump(2) + "\n");
  say(log, fmt::format("[analyze] {} jobs -> {}", jobs.size(), out.dir.string()));
  return out;
}

std::filesystem::path plot_results(const std::filesystem::path& results_dir) {
  const AnalysisOutput a = analyze_results(results_dir);
  if (a.fixed_total_hours) {
    std::vector<analysis::PlotSeries> series;
    const auto fit_named = [&](const std::string& name) -> std::optional<analysis::PowerLawFit> {
      for (const auto& f : a.fits) {
        if (f.name == name) return f.fit;
      }
      return std::nullopt;
    };
    series.push_back({"pooled", analysis::fixed_total_points(a.tables.cells, *a.fixed_total_hours), fit_named("pooled")});
    std::set<std::string> route_ids;
    for (const auto& r : a.tables.per_route) route_ids.insert(r.route_id);
    for (const auto& id : route_ids) {
      series.push_back({id, analysis::fixed_total_points(a.tables.per_route, id, *a.fixed_total_hours),
                        fit_named("route:" + id)});
    }
    write_file_once(a.dir / "fixed_total.svg",
                    analysis::svg_loglog(series, fmt::format("Failure rate at {:g} h total", *a.fixed_total_hours),
                                         "training locations", "failure rate"));
  }
  std::map<int, std::vector<analysis::ScalingPoint>> by_locations;
  for (const auto& c : a.tables.cells) {
    by_locations[c.key.n_locations].push_back({c.key.hours_per_location, c.failure_rate, analysis::to_string(c.key)});
  }
  std::vector<analysis::PlotSeries> series;
  for (auto& [n, pts] : by_locations) {
    if (pts.size() >= 2) series.push_back({fmt::format("{} locations", n), std::move(pts), std::nullopt});
  }
  if (!series.empty()) {
    write_file_once(a.dir / "fixed_locations.svg",
                    analysis::svg_loglog(series, "Failure rate at fixed location count", "hours per location",
                                         "failure rate"));
  }
  return a.dir;
}

}  // namespace navscale::study
