// fedcgd command line: solve serialized scheduling instances, benchmark the
// solvers against the exact oracle, run training experiments, and export
// datasets. JSON goes to stdout, diagnostics to stderr.
//
// Exit codes: 0 success, 1 usage error, 2 data/config error.

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedcgd/experiment.hpp"
#include "fedcgd/instance_io.hpp"
#include "fedcgd/schedulers.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

std::string default_out_dir() {
  if (const char* env = std::getenv("FEDCGD_OUTPUT_DIR")) return env;
  return ".";
}

std::vector<int> parse_device_list(const std::string& csv) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    const std::size_t comma = csv.find(',', pos);
    const std::string tok = csv.substr(pos, comma == std::string::npos ? comma : comma - pos);
    out.push_back(std::stoi(tok));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

int cmd_solve(const std::string& instance_path, const std::string& solver,
              std::uint64_t seed) {
  const auto kind = fedcgd::parse_solver(solver);
  if (!kind) {
    std::cerr << "unknown solver '" << solver
              << "' (expected gs|fscd|cd|oracle|bc)\n";
    return kExitUsage;
  }
  if (*kind == fedcgd::SolverKind::kBestNorm || *kind == fedcgd::SolverKind::kPoc) {
    std::cerr << "solver '" << solver
              << "' needs per-device training state and cannot run on a bare instance\n";
    return kExitUsage;
  }
  const fedcgd::ProblemInstance inst = fedcgd::load_instance(instance_path);
  fedcgd::Rng rng(seed);
  // Best-channel ordering on a bare instance: the minimum bandwidth is
  // strictly decreasing in the gain, so its negation is an exact proxy.
  std::vector<double> gains(static_cast<std::size_t>(inst.num_devices()), 0.0);
  for (int v = 0; v < inst.num_devices(); ++v) {
    if (inst.feasible(v)) gains[static_cast<std::size_t>(v)] = -inst.bw(v);
  }
  const fedcgd::SolveReport report =
      fedcgd::run_solver(*kind, inst, gains, gains, gains, 0, rng);
  std::cout << fedcgd::report_to_json(report).dump(2) << "\n";
  return kExitOk;
}

int cmd_bench(const std::string& devices_csv, int instances, std::uint64_t seed,
              std::string out_path) {
  const std::vector<int> v_list = parse_device_list(devices_csv);
  if (v_list.empty()) {
    std::cerr << "--devices expects a comma-separated list, e.g. 8,16\n";
    return kExitUsage;
  }
  const fedcgd::BenchReport report = fedcgd::bench_solvers(v_list, instances, seed);
  const nlohmann::json j = fedcgd::bench_to_json(report);
  if (out_path.empty()) {
    out_path = (std::filesystem::path(default_out_dir()) / "bench.json").string();
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::cerr << "cannot write report to " << out_path << "\n";
    return kExitData;
  }
  out << j.dump(2) << "\n";
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& g_mode,
              const std::string& out_dir) {
  fedcgd::ExperimentConfig cfg = fedcgd::load_config(config_path);
  if (g_mode == "scalar") {
    cfg.solver.per_class_g = false;
  } else if (g_mode == "per-class") {
    cfg.solver.per_class_g = true;
  } else if (!g_mode.empty()) {
    std::cerr << "--g-mode must be scalar or per-class\n";
    return kExitUsage;
  }
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  const fedcgd::ExperimentResult result = fedcgd::run_experiment(cfg);
  fedcgd::write_experiment_outputs(cfg, result);
  std::cout << fedcgd::summary_json(cfg, result).dump(2) << "\n";
  return kExitOk;
}

int cmd_gen_data(const std::string& config_path, std::string out_dir) {
  const fedcgd::ExperimentConfig cfg = fedcgd::load_config(config_path);
  if (out_dir.empty()) out_dir = default_out_dir();
  fedcgd::write_gen_data(cfg, out_dir);
  nlohmann::json j;
  j["out_dir"] = out_dir;
  j["train_csv"] = (std::filesystem::path(out_dir) / "train.csv").string();
  j["test_csv"] = (std::filesystem::path(out_dir) / "test.csv").string();
  j["manifest"] = (std::filesystem::path(out_dir) / "manifest.json").string();
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fedcgd: wireless federated-learning scheduling simulator"};
  app.require_subcommand(1);

  std::string instance_path, solver = "fscd";
  std::uint64_t solve_seed = 0;
  auto* solve = app.add_subcommand("solve", "solve a serialized scheduling instance");
  solve->add_option("--instance", instance_path, "instance JSON path")->required();
  solve->add_option("--solver", solver, "gs|fscd|cd|oracle|bc");
  solve->add_option("--seed", solve_seed, "seed for randomized solvers");

  std::string devices_csv = "16";
  int instances = 100;
  std::uint64_t bench_seed = 1;
  std::string bench_out;
  auto* bench = app.add_subcommand("bench-solvers", "benchmark solvers against the oracle");
  bench->add_option("--devices", devices_csv, "comma-separated device counts (V <= 24)");
  bench->add_option("--instances", instances, "instances per device count");
  bench->add_option("--seed", bench_seed, "benchmark seed");
  bench->add_option("--out", bench_out, "report path (default $FEDCGD_OUTPUT_DIR/bench.json)");

  std::string train_config, g_mode, train_out;
  auto* train = app.add_subcommand("train", "run a training experiment from a config");
  train->add_option("--config", train_config, "experiment config JSON")->required();
  train->add_option("--g-mode", g_mode, "scalar|per-class (overrides config)");
  train->add_option("--out", train_out, "output directory (overrides config)");

  std::string gen_config, gen_out;
  auto* gen = app.add_subcommand("gen-data", "generate and export a partitioned dataset");
  gen->add_option("--config", gen_config, "experiment config JSON")->required();
  gen->add_option("--out", gen_out, "output directory (default $FEDCGD_OUTPUT_DIR)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (solve->parsed()) return cmd_solve(instance_path, solver, solve_seed);
    if (bench->parsed()) return cmd_bench(devices_csv, instances, bench_seed, bench_out);
    if (train->parsed()) return cmd_train(train_config, g_mode, train_out);
    if (gen->parsed()) return cmd_gen_data(gen_config, gen_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
