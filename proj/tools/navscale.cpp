// Command-line front end for data generation, training, evaluation and the
// scaling study.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "navscale/study.hpp"

namespace fs = std::filesystem;
using namespace navscale;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitPartial = 3;

struct Options {
  std::string config;
  std::string data;
  std::string out;
  std::string episodes;
  std::string checkpoint;
  std::string results;
  std::string policy_id{"policy"};
  std::string loss;
  int locations{1};
  double hours{0.0};
  std::uint64_t seed{1};
  std::size_t workers{0};
  bool no_resume{false};
};

std::size_t workers(const Options& o) { return o.workers > 0 ? o.workers : study::workers_from_env(); }

int gen_data(const Options& o) {
  const auto config = study::load_config(o.config);
  const auto ds = study::generate_dataset(config, o.out, workers(o), &std::cerr);
  std::cout << fmt::format("{:<16} {:>8} {:>10} {:>10}\n", "location", "episodes", "raw_h", "curated_h");
  for (const auto& l : ds.locations) {
    std::cout << fmt::format("{:<16} {:>8} {:>10.3f} {:>10.3f}\n", l.name, l.episodes, l.raw_hours, l.curated_hours);
  }
  std::cout << fmt::format("clusters: {}  manifest hours: {:.3f}  data_digest: {}\n", ds.manifest.clusters.size(),
                           ds.manifest.total_hours(), ds.digest);
  // The configured grid must be satisfiable by what was generated.
  std::vector<std::pair<int, double>> cells;
  for (const auto& c : config.grid.cells()) cells.emplace_back(c.n_locations, c.hours_per_location);
  std::vector<std::string> shortfalls;
  for (auto seed : config.seeds) {
    for (auto& s : curation::subset_shortfalls(ds.manifest, cells, seed)) shortfalls.push_back(fmt::format("seed {}: {}", seed, s));
  }
  if (!shortfalls.empty()) throw curation::InfeasibleSubsetError("generated data cannot satisfy the grid", shortfalls);
  return kExitOk;
}

int curate(const Options& o) {
  const auto config = study::load_config(o.config);
  std::ifstream in(o.episodes);
  if (!in) throw std::runtime_error(fmt::format("cannot read {}", o.episodes));
  const auto episodes = read_episodes_jsonl(in);
  std::vector<curation::Demonstration> demos;
  std::string lines;
  for (const auto& e : episodes) {
    for (auto& d : curation::curate_episode(e, config.data.curation)) {
      lines += study::demo_to_json(d) + "\n";
      demos.push_back(std::move(d));
    }
  }
  std::vector<geokit::GeoPoint> sites;
  for (const auto& s : config.data.test_sites) sites.push_back(s.anchor);
  const auto manifest = curation::geo_exclusion_split(curation::build_manifest(demos), sites);
  const fs::path out(o.out);
  study::write_file_once(out / "demos.jsonl", lines);
  study::write_file_once(out / "manifest.json", curation::manifest_to_json(manifest) + "\n");
  std::cout << fmt::format("{} episodes -> {} demonstrations in {} clusters ({:.3f} h)\n", episodes.size(), demos.size(),
                           manifest.clusters.size(), manifest.total_hours());
  return kExitOk;
}

int train(const Options& o) {
  const auto config = study::load_config(o.config);
  const auto ds = study::load_dataset(o.data);
  study::DemoStore store(o.data);
  const analysis::CellKey cell{o.locations, o.hours};
  const auto selection = study::select_cell(ds.manifest, cell, o.seed);
  const auto trained = study::train_on(config, store, selection, o.seed);
  const std::string meta = study::provenance(study::job_digest(config, analysis::to_string(cell), o.seed), o.seed);
  std::ostringstream ckpt;
  policy::save_checkpoint(ckpt, trained.policy, meta);
  study::write_file_once(o.out, ckpt.str());
  if (!o.loss.empty()) {
    std::ostringstream loss;
    loss << "# " << meta << '\n';
    policy::write_loss_csv(loss, trained.curve);
    study::write_file_once(o.loss, loss.str());
  }
  std::cout << fmt::format("trained on {} samples from {} clusters; final loss {:.5f}\n", trained.samples,
                           selection.cluster_ids.size(), trained.curve.back().loss);
  return kExitOk;
}

int eval(const Options& o) {
  const auto config = study::load_config(o.config);
  const auto ds = study::load_dataset(o.data);
  std::string meta;
  auto policy = std::make_shared<const policy::MlpPolicy>(policy::load_checkpoint_file(o.checkpoint, &meta));
  const auto rows = study::evaluate_policy(config, ds, policy, o.policy_id);
  std::ostringstream csv;
  const std::vector<std::string> header{study::provenance(study::config_digest(config), config.data.seed),
                                        "checkpoint " + meta};
  evalharness::write_outcomes_csv(csv, rows, header);
  study::write_file_once(o.out, csv.str());
  const auto outcomes = evalharness::to_outcomes(rows);
  const auto sr = evalharness::success_rate(outcomes);
  std::cout << fmt::format("success {}/{} = {:.3f} [{:.3f}, {:.3f}]\n", sr.successes, sr.trials, sr.rate, sr.ci.lower,
                           sr.ci.upper);
  return kExitOk;
}

void print_cells(const study::AnalysisOutput& a) {
  std::cout << fmt::format("{:>10} {:>8} {:>9} {:>17} {:>8}\n", "locations", "h/loc", "success", "95% CI", "median");
  for (const auto& c : a.tables.cells) {
    std::cout << fmt::format("{:>10} {:>8.4g} {:>9.3f} [{:.3f}, {:.3f}] {:>8.3f}\n", c.key.n_locations,
                             c.key.hours_per_location, c.pooled.rate, c.pooled.ci.lower, c.pooled.ci.upper,
                             c.median_success_rate);
  }
  for (const auto& f : a.fits) {
    std::cout << fmt::format("fit {:<20} alpha {:+.4f}  beta {:.4f}  r {}  doubling reduction {:.4f}\n", f.name,
                             f.fit.alpha, f.fit.beta, f.fit.r ? fmt::format("{:+.3f}", *f.fit.r) : "n/a",
                             analysis::doubling_reduction(f.fit.alpha));
  }
  std::cout << "tables: " << a.dir.string() << '\n';
}

int scaling_study(const Options& o) {
  const auto config = study::load_config(o.config);
  const auto result = study::run_scaling_study(config, o.data, o.out, workers(o), !o.no_resume, &std::cerr);
  std::cout << fmt::format("jobs trained {}, reused {}, failed {}\n", result.trained, result.reused,
                           result.failures.size());
  if (!result.outcomes.empty()) print_cells(study::analyze_results(o.out));
  return result.failures.empty() ? kExitOk : kExitPartial;
}

int compare_policies(const Options& o) {
  const auto config = study::load_config(o.config);
  std::vector<study::JobFailure> failures;
  const auto rows = study::run_compare_policies(config, o.data, o.out, workers(o), !o.no_resume, &failures, &std::cerr);
  std::cout << fmt::format("{:<16} {:>9} {:>17} {:>7} {:>8} {:>8}\n", "variant", "success", "95% CI", "NIR", "NPS",
                           "Dist_m");
  for (const auto& r : rows) {
    std::cout << fmt::format("{:<16} {:>9.3f} [{:.3f}, {:.3f}] {:>7} {:>8} {:>8.1f}\n", r.variant, r.success.rate,
                             r.success.ci.lower, r.success.ci.upper,
                             r.nir ? fmt::format("{:.2f}", *r.nir) : "n/a", r.nps ? fmt::format("{:.0f}", *r.nps) : "n/a",
                             r.mean_dist_to_first_failure);
  }
  return failures.empty() ? kExitOk : kExitPartial;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Location-diversity scaling experiments for goal-conditioned navigation policies"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen-data", "Generate worlds and expert episodes, curate them and write a manifest");
  gen->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", o.out, "Dataset directory")->required();
  gen->add_option("--workers", o.workers, "Worker threads (default: NAVSCALE_WORKERS or 1)");

  auto* cur = app.add_subcommand("curate", "Curate raw episodes (JSON lines) into demonstrations");
  cur->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cur->add_option("--episodes", o.episodes, "Raw episodes, one JSON object per line")->required()->check(CLI::ExistingFile);
  cur->add_option("--out", o.out, "Output directory")->required();

  auto* tr = app.add_subcommand("train", "Train one policy on a (locations, hours) subset");
  tr->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  tr->add_option("--data", o.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  tr->add_option("--locations", o.locations, "Number of training locations")->required()->check(CLI::PositiveNumber);
  tr->add_option("--hours", o.hours, "Hours per location")->required()->check(CLI::PositiveNumber);
  tr->add_option("--seed", o.seed, "Subset and training seed");
  tr->add_option("--out", o.out, "Checkpoint path")->required();
  tr->add_option("--loss", o.loss, "Loss curve CSV path");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on the held-out test routes");
  ev->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", o.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--checkpoint", o.checkpoint, "Policy checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--policy-id", o.policy_id, "Policy id written to the outcome rows");
  ev->add_option("--out", o.out, "Outcome CSV path")->required();

  auto* ss = app.add_subcommand("scaling-study", "Train and evaluate every grid cell and seed, then analyze");
  ss->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  ss->add_option("--data", o.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  ss->add_option("--out", o.out, "Results directory")->required();
  ss->add_option("--workers", o.workers, "Worker threads (default: NAVSCALE_WORKERS or 1)");
  ss->add_flag("--no-resume", o.no_resume, "Recompute jobs even when results exist");

  auto* cp = app.add_subcommand("compare-policies", "Zero-shot vs scale + in-domain vs in-domain only");
  cp->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cp->add_option("--data", o.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  cp->add_option("--out", o.out, "Results directory")->required();
  cp->add_option("--workers", o.workers, "Worker threads (default: NAVSCALE_WORKERS or 1)");
  cp->add_flag("--no-resume", o.no_resume, "Recompute jobs even when results exist");

  auto* an = app.add_subcommand("analyze", "Aggregate scaling-study outcomes and fit power laws");
  an->add_option("--results", o.results, "Results directory")->required()->check(CLI::ExistingDirectory);

  auto* pl = app.add_subcommand("plot", "Write log-log SVG plots for a scaling study");
  pl->add_option("--results", o.results, "Results directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return gen_data(o);
    if (*cur) return curate(o);
    if (*tr) return train(o);
    if (*ev) return eval(o);
    if (*ss) return scaling_study(o);
    if (*cp) return compare_policies(o);
    if (*an) {
      print_cells(study::analyze_results(o.results, &std::cerr));
      return kExitOk;
    }
    if (*pl) {
      std::cout << "plots: " << study::plot_results(o.results).string() << '\n';
      return kExitOk;
    }
  } catch (const curation::InfeasibleSubsetError& e) {
    std::cerr << "error: " << e.what() << '\n';
    for (const auto& s : e.shortfalls()) std::cerr << "  " << s << '\n';
    return kExitInfeasible;
  } catch (const study::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
