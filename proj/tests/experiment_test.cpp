#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedcgd/experiment.hpp"

using namespace fedcgd;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.fleet.num_devices = 6;
  cfg.fleet.availability = 0.6;
  cfg.data.num_classes = 4;
  cfg.data.feature_dim = 6;
  cfg.data.train_per_class = 30;
  cfg.data.test_per_class = 10;
  cfg.data.partition = "dirichlet";
  cfg.data.alpha = 0.5;
  cfg.hyper = Hyperparams{0.1, 1, 8, 4};
  cfg.solver.kind = SolverKind::kFscd;
  cfg.seeds = {1, 2};
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("placement: deterministic, in-disk, disk-uniform mean distance") {
  Rng r1(5), r2(5);
  const auto a = place_devices(1, 250.0, r1);
  const auto b = place_devices(1, 250.0, r2);
  CHECK(a[0].x == b[0].x);
  CHECK(a[0].y == b[0].y);
  CHECK(a[0].is_los == b[0].is_los);

  Rng rng(9);
  const double R = 250.0;
  const auto fleet = place_devices(10000, R, rng);
  double mean = 0.0;
  for (const auto& dev : fleet) {
    const double d = dev.d2d();
    CHECK(d <= R);
    mean += d;
  }
  mean /= static_cast<double>(fleet.size());
  CHECK(std::abs(mean - 2.0 * R / 3.0) <= 0.02 * (2.0 * R / 3.0));
}

TEST_CASE("placement: everyone inside 18 m is line of sight") {
  Rng rng(13);
  const auto fleet = place_devices(200, 15.0, rng);
  for (const auto& dev : fleet) CHECK(dev.is_los);
}

TEST_CASE("snapshot: deterministic and monotone in distance") {
  ChannelParams params;
  Rng place_rng(17);
  const auto fleet = place_devices(12, params.cell_radius_m, place_rng);
  Rng s1(3), s2(3);
  const auto snap_a = snapshot_channel(fleet, params, s1);
  const auto snap_b = snapshot_channel(fleet, params, s2);
  for (std::size_t i = 0; i < snap_a.size(); ++i) {
    CHECK(snap_a[i].avg_gain == snap_b[i].avg_gain);
    CHECK(snap_a[i].shadow_db == snap_b[i].shadow_db);
  }

  // Fixed LOS and shadow: the gain decreases with distance.
  const LinkState near = make_link_state(50.0, true, 1.0, params);
  const LinkState far = make_link_state(200.0, true, 1.0, params);
  CHECK(near.avg_gain > far.avg_gain);
}

TEST_CASE("experiment runs are reproducible and rows well-formed") {
  const ExperimentConfig cfg = tiny_config();
  const ExperimentResult a = run_experiment(cfg);
  const ExperimentResult b = run_experiment(cfg);
  REQUIRE(a.rows.size() == b.rows.size());
  REQUIRE(a.rows.size() == cfg.seeds.size() * static_cast<std::size_t>(cfg.hyper.rounds));
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(metrics_csv_row(a.rows[i]) == metrics_csv_row(b.rows[i]));
    CHECK(a.rows[i].scheduled <= a.rows[i].available);
    CHECK(a.rows[i].bandwidth_used_hz <= cfg.channel.total_bandwidth_hz);
    CHECK(a.rows[i].test_acc >= 0.0);
    CHECK(a.rows[i].test_acc <= 1.0);
    if (a.rows[i].scheduled > 0) CHECK(a.rows[i].wemd >= 0.0);
  }
  for (const auto& t : a.trials) {
    CHECK(t.final_acc >= 0.0);
    CHECK(t.max_acc <= 1.0);
  }
}

TEST_CASE("experiment outputs: byte-identical across runs") {
  ExperimentConfig cfg = tiny_config();
  const auto dir = std::filesystem::temp_directory_path() / "fedcgd_exp_test";
  std::filesystem::remove_all(dir);

  cfg.output_dir = (dir / "run1").string();
  write_experiment_outputs(cfg, run_experiment(cfg));
  cfg.output_dir = (dir / "run2").string();
  write_experiment_outputs(cfg, run_experiment(cfg));

  CHECK(slurp(dir / "run1" / "metrics.csv") == slurp(dir / "run2" / "metrics.csv"));
  CHECK_FALSE(slurp(dir / "run1" / "metrics.csv").empty());
  std::filesystem::remove_all(dir);
}

TEST_CASE("config parsing") {
  const nlohmann::json j = {
      {"channel", {{"total_bandwidth_hz", 1e7}, {"tx_power_dbm", 20.0}}},
      {"fleet", {{"num_devices", 12}, {"availability", 0.5}}},
      {"data", {{"partition", "sort"}, {"shards_per_device", 1}, {"imbalance_ratio", 3.0}}},
      {"hyper", {{"eta", 0.2}, {"tau", 2}, {"batch", 16}, {"rounds", 5}}},
      {"solver", {{"name", "gs"}, {"g_mode", "per-class"}}},
      {"seeds", {7, 8}},
      {"output", "out/test"}};
  const ExperimentConfig cfg = config_from_json(j);
  CHECK(cfg.channel.total_bandwidth_hz == 1e7);
  CHECK(cfg.channel.tx_power_w == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(cfg.fleet.num_devices == 12);
  CHECK(cfg.data.partition == "sort");
  CHECK(cfg.hyper.tau == 2);
  CHECK(cfg.solver.kind == SolverKind::kGreedy);
  CHECK(cfg.solver.per_class_g);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{7, 8});
  CHECK(cfg.output_dir == "out/test");

  nlohmann::json with_geometry = j;
  with_geometry["data"]["geometry"] = "basis";
  CHECK(config_from_json(with_geometry).data.geometry == "basis");
  with_geometry["data"]["geometry"] = "spiral";
  CHECK_THROWS(config_from_json(with_geometry));

  nlohmann::json unknown = j;
  unknown["typo_field"] = 1;
  CHECK_THROWS(config_from_json(unknown));

  nlohmann::json bad_solver = j;
  bad_solver["solver"]["name"] = "nope";
  CHECK_THROWS(config_from_json(bad_solver));

  nlohmann::json bad_avail = j;
  bad_avail["fleet"]["availability"] = 1.5;
  CHECK_THROWS(config_from_json(bad_avail));
}

TEST_CASE("bench report smoke") {
  const std::vector<int> v_list = {8};
  const BenchReport report = bench_solvers(v_list, 10, 3);
  REQUIRE(report.groups.size() == 1);
  const BenchGroup& g = report.groups[0];
  CHECK(g.num_devices == 8);
  CHECK(g.max_gs_iterations <= 8);
  REQUIRE(g.solvers.size() == 3);
  for (const auto& s : g.solvers) {
    CHECK(s.mean_rel_err >= 0.0);
    CHECK(s.max_rel_err >= s.mean_rel_err);
    CHECK(s.mean_iterations > 0.0);
  }
  const nlohmann::json j = bench_to_json(report);
  CHECK(j["groups"].size() == 1);

  // Same seed, same report.
  const BenchReport again = bench_solvers(v_list, 10, 3);
  CHECK(bench_to_json(again) == j);
}

TEST_CASE("gen-data export covers every device range") {
  ExperimentConfig cfg = tiny_config();
  const auto dir = std::filesystem::temp_directory_path() / "fedcgd_gen_test";
  std::filesystem::remove_all(dir);
  write_gen_data(cfg, dir.string());

  std::ifstream manifest_in(dir / "manifest.json");
  REQUIRE(manifest_in.good());
  nlohmann::json manifest;
  manifest_in >> manifest;
  CHECK(manifest["devices"].size() == static_cast<std::size_t>(cfg.fleet.num_devices));
  int prev_end = 0;
  for (const auto& dev : manifest["devices"]) {
    CHECK(dev["row_begin"].get<int>() == prev_end);
    prev_end = dev["row_end"].get<int>();
    CHECK(dev["label_dist"].size() == static_cast<std::size_t>(cfg.data.num_classes));
  }
  CHECK(prev_end + manifest["dropped_count"].get<int>() == manifest["train_rows"].get<int>());

  // Header plus one line per train row.
  std::ifstream csv(dir / "train.csv");
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  CHECK(lines == manifest["train_rows"].get<int>() + 1);
  std::filesystem::remove_all(dir);
}
