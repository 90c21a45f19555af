#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "fedcgd/instance_io.hpp"

using namespace fedcgd;

namespace {

const std::filesystem::path kWorkDir =
    std::filesystem::temp_directory_path() / "fedcgd_cli_test";

int run_cli(const std::string& args, const std::filesystem::path& stdout_path) {
  const std::string cmd = std::string(FEDCGD_CLI_PATH) + " " + args + " > " +
                          stdout_path.string() + " 2> " + stdout_path.string() + ".err";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path write_example_instance() {
  ProblemInstance inst;
  inst.device_dists = {ClassDistribution{{0.51, 0.49}}, ClassDistribution{{0.51, 0.49}},
                       ClassDistribution{{0.8, 0.2}}, ClassDistribution{{0.2, 0.8}}};
  inst.min_bandwidths = {1.0, 1.0, 1.0, 1.0};
  inst.global_dist = ClassDistribution{{0.5, 0.5}};
  inst.params.sigma = 0.0;
  inst.params.batch_size = 1;
  inst.params.class_weights = {1.0, 1.0};
  inst.total_bandwidth_hz = 10.0;
  const auto path = kWorkDir / "example.json";
  save_instance(inst, path.string());
  return path;
}

}  // namespace

TEST_CASE("cli solve: oracle picks the complementary pair, zero objective") {
  std::filesystem::create_directories(kWorkDir);
  const auto instance = write_example_instance();
  const auto out = kWorkDir / "solve.json";
  const int code =
      run_cli("solve --instance " + instance.string() + " --solver oracle", out);
  CHECK(code == 0);
  const nlohmann::json j = nlohmann::json::parse(slurp(out));
  // Device indices are 0-based on the wire; these are devices 3 and 4 in
  // 1-based terms.
  CHECK(j["members"] == nlohmann::json::array({2, 3}));
  CHECK(j["objective"].get<double>() == doctest::Approx(0.0));
}

TEST_CASE("cli solve: every offline solver runs") {
  std::filesystem::create_directories(kWorkDir);
  const auto instance = write_example_instance();
  for (const std::string solver : {"gs", "fscd", "cd", "bc"}) {
    const auto out = kWorkDir / ("solve_" + solver + ".json");
    const int code = run_cli(
        "solve --instance " + instance.string() + " --solver " + solver + " --seed 3", out);
    CHECK(code == 0);
    const nlohmann::json j = nlohmann::json::parse(slurp(out));
    CHECK(j["solver"] == solver);
  }
}

TEST_CASE("cli solve: usage and data errors") {
  std::filesystem::create_directories(kWorkDir);
  const auto instance = write_example_instance();
  const auto out = kWorkDir / "err.json";
  CHECK(run_cli("solve --instance " + instance.string() + " --solver nope", out) == 1);
  CHECK(run_cli("solve --instance " + instance.string(), out) == 0);  // default solver
  CHECK(run_cli("nonsense-subcommand", out) == 1);

  const auto broken = kWorkDir / "broken.json";
  std::ofstream(broken) << "{ not json";
  CHECK(run_cli("solve --instance " + broken.string() + " --solver gs", out) == 2);

  const auto missing_field = kWorkDir / "missing.json";
  std::ofstream(missing_field) << R"({"global_dist": [0.5, 0.5], "devices": []})";
  CHECK(run_cli("solve --instance " + missing_field.string() + " --solver gs", out) == 2);

  CHECK(run_cli("solve --instance /no/such/file.json --solver gs", out) == 2);
}

TEST_CASE("cli bench-solvers: identical reports for identical seeds") {
  std::filesystem::create_directories(kWorkDir);
  const auto out1 = kWorkDir / "bench1.json";
  const auto out2 = kWorkDir / "bench2.json";
  const auto log = kWorkDir / "bench.log";
  CHECK(run_cli("bench-solvers --devices 8 --instances 5 --seed 11 --out " + out1.string(),
                log) == 0);
  CHECK(run_cli("bench-solvers --devices 8 --instances 5 --seed 11 --out " + out2.string(),
                log) == 0);
  CHECK(slurp(out1) == slurp(out2));
  CHECK_FALSE(slurp(out1).empty());
}

TEST_CASE("cli train and gen-data round trip") {
  std::filesystem::create_directories(kWorkDir);
  const nlohmann::json cfg = {
      {"fleet", {{"num_devices", 6}, {"availability", 0.6}}},
      {"data",
       {{"partition", "dirichlet"},
        {"alpha", 0.5},
        {"num_classes", 4},
        {"feature_dim", 6},
        {"train_per_class", 30},
        {"test_per_class", 10}}},
      {"hyper", {{"eta", 0.1}, {"tau", 1}, {"batch", 8}, {"rounds", 3}}},
      {"solver", {{"name", "fscd"}}},
      {"seeds", {1}},
      {"output", (kWorkDir / "train_out").string()}};
  const auto cfg_path = kWorkDir / "config.json";
  std::ofstream(cfg_path) << cfg.dump(2);

  const auto out = kWorkDir / "train.json";
  CHECK(run_cli("train --config " + cfg_path.string(), out) == 0);
  CHECK(std::filesystem::exists(kWorkDir / "train_out" / "metrics.csv"));
  CHECK(std::filesystem::exists(kWorkDir / "train_out" / "summary.json"));
  const nlohmann::json summary = nlohmann::json::parse(slurp(out));
  CHECK(summary["trials"].size() == 1);

  const auto gen_out = kWorkDir / "gen";
  CHECK(run_cli("gen-data --config " + cfg_path.string() + " --out " + gen_out.string(),
                out) == 0);
  CHECK(std::filesystem::exists(gen_out / "train.csv"));
  CHECK(std::filesystem::exists(gen_out / "manifest.json"));

  CHECK(run_cli("train --config /no/such/config.json", out) == 2);

  std::filesystem::remove_all(kWorkDir);
}
