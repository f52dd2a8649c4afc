#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "navscale/study.hpp"

namespace st = navscale::study;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / fmt::format("navscale-test-{}-{}", ::getpid(), name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = fmt::format("\"{}\" {} > \"{}\" 2>&1", NAVSCALE_CLI_PATH, args, log.string());
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  out << s;
}

constexpr const char* kTinyConfig = R"({
  "data": {"seed": 5, "train_locations": 2, "hours_per_location": 0.05},
  "grid": {"location_counts": [1, 2], "hours_per_location": [0.025]},
  "seeds": [1],
  "policy": {"hidden": [16]},
  "train": {"epochs": 1},
  "eval": {"routes_per_site": 1, "segments": 2, "reps": 1},
  "compare": {"zero_shot_locations": 2, "zero_shot_hours_per_location": 0.025, "in_domain_hours_per_site": 0.025}
})";

}  // namespace

TEST_CASE("configs reject unknown keys and bad values") {
  CHECK_NOTHROW((void)st::parse_config("{}"));
  CHECK_THROWS_AS((void)st::parse_config(R"({"trian": {}})"), st::ConfigError);
  CHECK_THROWS_AS((void)st::parse_config(R"({"train": {"epochs": 2, "lr0": 1}})"), st::ConfigError);
  CHECK_THROWS_AS((void)st::parse_config(R"({"train": {"epochs": "two"}})"), st::ConfigError);
  CHECK_THROWS_AS((void)st::parse_config(R"({"policy": {"variant": "rnn"}})"), st::ConfigError);
  CHECK_THROWS_AS((void)st::parse_config("{not json"), st::ConfigError);
  CHECK_THROWS_AS((void)st::parse_config(R"({"data": {"test_sites": [{"name": "x", "lat_deg": 95, "lon_deg": 0}]}})"),
                  st::ConfigError);
}

TEST_CASE("canonical config JSON round trips and drives the digests") {
  const auto c = st::parse_config(kTinyConfig);
  CHECK(c.data.train_locations == 2);
  CHECK(c.shape().hidden == std::vector<std::size_t>{16});
  const auto text = st::config_to_json(c);
  const auto back = st::parse_config(text);
  CHECK(st::config_to_json(back) == text);
  CHECK(st::config_digest(back) == st::config_digest(c));

  auto changed = c;
  changed.train.epochs = 3;
  CHECK(st::config_digest(changed) != st::config_digest(c));
  CHECK(st::data_digest(changed) == st::data_digest(c));
  changed.data.seed = 6;
  CHECK(st::data_digest(changed) != st::data_digest(c));
  CHECK(st::job_digest(c, "L1_H1", 1) != st::job_digest(c, "L1_H1", 2));
  CHECK(st::provenance("ab", 3) == "config_digest=ab seed=3");
}

TEST_CASE("SHA-256 known answers") {
  CHECK(st::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(st::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("derived seeds are stable and distinct") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 100; ++i) {
    CHECK(st::derive_seed(7, "location", i) == st::derive_seed(7, "location", i));
    seen.insert(st::derive_seed(7, "location", i));
    seen.insert(st::derive_seed(7, "operator", i));
    seen.insert(st::derive_seed(8, "location", i));
  }
  CHECK(seen.size() == 300);
}

TEST_CASE("grid cells are sorted, de-duplicated and include the fixed-total diagonal") {
  st::GridConfig g;
  g.location_counts = {4, 1, 2};
  g.hours_per_location = {0.5};
  g.fixed_total_hours = 2.0;
  g.extra_cells = {{2, 0.5}, {8, 0.1}};
  const auto cells = g.cells();
  const std::vector<navscale::analysis::CellKey> want = {{1, 0.5}, {1, 2.0}, {2, 0.5}, {2, 1.0},
                                                         {4, 0.5}, {8, 0.1}};
  CHECK(cells == want);
}

TEST_CASE("parallel_for reports failing jobs by index") {
  std::atomic<int> ran{0};
  const auto errors = st::parallel_for(20, 3, [&](std::size_t i) {
    ++ran;
    if (i % 7 == 3) throw std::runtime_error(fmt::format("job {}", i));
  });
  CHECK(ran == 20);
  REQUIRE(errors.size() == 3);
  CHECK(errors.at(10) == "job 10");
}

TEST_CASE("write_file_once refuses to change existing content") {
  const auto dir = scratch("once");
  const auto p = dir / "a.txt";
  st::write_file_once(p, "hello");
  CHECK_NOTHROW(st::write_file_once(p, "hello"));
  CHECK_THROWS_AS(st::write_file_once(p, "other"), std::runtime_error);
  CHECK(st::read_file(p) == "hello");
  st::write_file_atomic(p, "replaced");
  CHECK(st::read_file(p) == "replaced");
  fs::remove_all(dir);
}

TEST_CASE("location plans are deterministic and keep test sites apart") {
  const auto c = st::parse_config(kTinyConfig);
  const auto a = st::plan_locations(c.data);
  const auto b = st::plan_locations(c.data);
  REQUIRE(a.size() == 2 + c.data.test_sites.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(a[i].world_seed == b[i].world_seed);
    CHECK_NOTHROW(a[i].profile.validate());
    if (a[i].kind != st::LocationKind::kTrain) continue;
    for (const auto& site : c.data.test_sites) {
      CHECK(navscale::geokit::haversine_m(a[i].anchor, site.anchor) > navscale::curation::kExclusionRadiusM);
    }
  }
}

TEST_CASE("CLI runs the pipeline and reports errors through exit codes") {
  const auto dir = scratch("cli");
  const auto cfg = dir / "tiny.json";
  write_text(cfg, kTinyConfig);
  const auto log = dir / "log.txt";

  CHECK(run_cli("", log) == 1);
  CHECK(run_cli("frobnicate", log) == 1);
  CHECK(run_cli("train --config " + cfg.string(), log) == 1);

  const auto bad = dir / "bad.json";
  write_text(bad, R"({"train": {"epochs": 1, "learning_rate": 3}})");
  CHECK(run_cli(fmt::format("gen-data --config {} --out {}", bad.string(), (dir / "x").string()), log) == 2);
  CHECK(st::read_file(log).find("learning_rate") != std::string::npos);

  const auto data = dir / "data";
  REQUIRE(run_cli(fmt::format("gen-data --config {} --out {}", cfg.string(), data.string()), log) == 0);
  CHECK(fs::exists(data / "manifest.json"));
  CHECK(fs::exists(data / "locations.json"));

  const auto ckpt = dir / "p.ckpt";
  REQUIRE(run_cli(fmt::format("train --config {} --data {} --locations 2 --hours 0.025 --seed 1 --out {}",
                              cfg.string(), data.string(), ckpt.string()),
                  log) == 0);
  // Asking for more data than any location holds is infeasible.
  CHECK(run_cli(fmt::format("train --config {} --data {} --locations 2 --hours 5 --seed 1 --out {}", cfg.string(),
                            data.string(), (dir / "q.ckpt").string()),
                log) == 2);

  const auto out = dir / "outcomes.csv";
  REQUIRE(run_cli(fmt::format("eval --config {} --data {} --checkpoint {} --out {}", cfg.string(), data.string(),
                              ckpt.string(), out.string()),
                  log) == 0);
  std::ifstream in(out);
  const auto rows = navscale::evalharness::read_outcomes_csv(in);
  const auto c = st::load_config(cfg);
  CHECK(rows.size() == c.data.test_sites.size() * c.eval.routes_per_site * c.eval.segments *
                           static_cast<std::size_t>(c.eval.reps));
  fs::remove_all(dir);
}
