#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedcgd/channel.hpp"
#include "fedcgd/datagen.hpp"
#include "fedcgd/fltrain.hpp"
#include "fedcgd/rng.hpp"
#include "fedcgd/schedulers.hpp"

namespace fedcgd {

// A placed device: position relative to the base station plus its LOS
// state, which is drawn once at placement and held fixed.
struct FleetDevice {
  double x = 0.0;
  double y = 0.0;
  bool is_los = false;

  double d2d() const;
};

// Area-uniform placement in the cell disk.
std::vector<FleetDevice> place_devices(int num_devices, double radius_m, Rng& rng);

// Fresh shadow-fading draw per device over fixed placement and LOS state.
std::vector<LinkState> snapshot_channel(std::span<const FleetDevice> fleet,
                                        const ChannelParams& params, Rng& rng);

struct DataConfig {
  std::string partition = "sort";  // "sort" | "dirichlet"
  std::string geometry = "ring";   // "ring" | "basis"
  int num_classes = 10;
  int feature_dim = 20;
  int train_per_class = 200;
  int test_per_class = 50;
  double noise_std = 1.0;
  double mean_scale = 2.0;
  int shards_per_device = 2;
  double imbalance_ratio = 1.0;
  double alpha = 0.5;
};

struct FleetConfig {
  int num_devices = 32;
  double availability = 0.3;
  std::optional<std::uint64_t> placement_seed;  // empty: redraw per trial seed
};

struct SolverConfig {
  SolverKind kind = SolverKind::kFscd;
  int poc_subset = 0;  // 0 -> ceil(V/2)
  bool per_class_g = false;
  double smoothing = 0.0;
};

struct ExperimentConfig {
  ChannelParams channel;
  FleetConfig fleet;
  DataConfig data;
  Hyperparams hyper;
  SolverConfig solver;
  std::vector<std::uint64_t> seeds = {1};
  std::string output_dir = "runs/default";
};

ExperimentConfig default_experiment_config();
// Strict parse: unknown keys and malformed values raise std::runtime_error.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
void validate(const ExperimentConfig& config);

struct TrialSummary {
  std::uint64_t seed = 0;
  double final_acc = 0.0;
  double max_acc = 0.0;
  double mean_scheduled = 0.0;  // over rounds that aggregated
  double mean_wemd = 0.0;       // over rounds that aggregated
  int skipped_rounds = 0;
};

struct ExperimentResult {
  std::vector<RoundMetrics> rows;     // all seeds, in seed order
  std::vector<TrialSummary> trials;
};

// Runs every seed (in parallel) and returns rows in deterministic order.
ExperimentResult run_experiment(const ExperimentConfig& config);

std::string metrics_csv_header();
std::string metrics_csv_row(const RoundMetrics& row);
void write_metrics_csv(const std::string& path, std::span<const RoundMetrics> rows);
nlohmann::json summary_json(const ExperimentConfig& config, const ExperimentResult& result);

// Writes metrics.csv and summary.json under config.output_dir.
void write_experiment_outputs(const ExperimentConfig& config, const ExperimentResult& result);

// Dataset + manifest export for the gen-data command: train rows are
// reordered so each device's samples are contiguous.
void write_gen_data(const ExperimentConfig& config, const std::string& out_dir);

// Random scheduling instances from the placement/channel/Dirichlet pipeline.
ProblemInstance random_instance(int num_devices, Rng& rng);

// Relative error against the oracle objective; absolute gap when the
// oracle objective is within 1e-9 of zero.
double relative_error(double solver_objective, double oracle_objective);

struct SolverBenchStats {
  std::string solver;
  double mean_rel_err = 0.0;
  double max_rel_err = 0.0;
  double mean_iterations = 0.0;
  double mean_evaluations = 0.0;
};

struct BenchGroup {
  int num_devices = 0;
  long max_gs_iterations = 0;
  std::vector<SolverBenchStats> solvers;
};

struct BenchReport {
  int instances_per_v = 0;
  std::uint64_t seed = 0;
  std::vector<BenchGroup> groups;
};

BenchReport bench_solvers(std::span<const int> v_list, int instances_per_v,
                          std::uint64_t seed);
nlohmann::json bench_to_json(const BenchReport& report);

}  // namespace fedcgd
