#include "fedcgd/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace fedcgd {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void check_known_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                      const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(known.begin(), known.end(),
                     [&](const char* k) { return key == k; }) == known.end()) {
      throw std::runtime_error("config: unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::runtime_error(std::string("config: field '") + key + "' has the wrong type");
  }
}

TaskGeometry task_geometry(const std::string& name) {
  if (name == "ring") return TaskGeometry::kRing;
  if (name == "basis") return TaskGeometry::kBasis;
  throw std::runtime_error("config: data.geometry must be 'ring' or 'basis'");
}

}  // namespace

double FleetDevice::d2d() const { return std::hypot(x, y); }

std::vector<FleetDevice> place_devices(int num_devices, double radius_m, Rng& rng) {
  if (num_devices < 1) throw std::invalid_argument("place_devices: need >= 1 device");
  if (!(radius_m > 0.0)) throw std::invalid_argument("place_devices: radius must be > 0");
  std::vector<FleetDevice> fleet(static_cast<std::size_t>(num_devices));
  for (auto& dev : fleet) {
    const double r = std::max(radius_m * std::sqrt(rng.uniform()), 1e-3);
    const double theta = 2.0 * kPi * rng.uniform();
    dev.x = r * std::cos(theta);
    dev.y = r * std::sin(theta);
    dev.is_los = rng.bernoulli(los_probability(r));
  }
  return fleet;
}

std::vector<LinkState> snapshot_channel(std::span<const FleetDevice> fleet,
                                        const ChannelParams& params, Rng& rng) {
  std::vector<LinkState> links;
  links.reserve(fleet.size());
  for (const auto& dev : fleet) {
    const double std_db = dev.is_los ? params.shadow_std_los_db : params.shadow_std_nlos_db;
    const double shadow = rng.normal(0.0, std_db);
    links.push_back(make_link_state(dev.d2d(), dev.is_los, shadow, params));
  }
  return links;
}

ExperimentConfig default_experiment_config() { return ExperimentConfig{}; }

namespace {

ChannelParams channel_from_json(const nlohmann::json& j) {
  check_known_keys(j,
                   {"carrier_freq_ghz", "total_bandwidth_hz", "tx_power_dbm",
                    "noise_psd_dbm_per_hz", "noise_figure_db", "deadline_s", "model_bits",
                    "cell_radius_m", "device_antenna_m", "bs_antenna_m",
                    "shadow_std_los_db", "shadow_std_nlos_db"},
                   "channel");
  ChannelParams p;
  p.carrier_freq_ghz = get_or(j, "carrier_freq_ghz", p.carrier_freq_ghz);
  p.total_bandwidth_hz = get_or(j, "total_bandwidth_hz", p.total_bandwidth_hz);
  const double tx_dbm = get_or(j, "tx_power_dbm", 23.0);
  const double noise_dbm = get_or(j, "noise_psd_dbm_per_hz", -174.0);
  const double nf_db = get_or(j, "noise_figure_db", 6.0);
  p.tx_power_w = dbm_to_watts(tx_dbm);
  // The receiver noise figure folds into the noise density once, here.
  p.noise_psd_w_per_hz = dbm_to_watts(noise_dbm) * db_to_linear(nf_db);
  p.deadline_s = get_or(j, "deadline_s", p.deadline_s);
  p.model_bits = get_or(j, "model_bits", p.model_bits);
  p.cell_radius_m = get_or(j, "cell_radius_m", p.cell_radius_m);
  p.device_antenna_m = get_or(j, "device_antenna_m", p.device_antenna_m);
  p.bs_antenna_m = get_or(j, "bs_antenna_m", p.bs_antenna_m);
  p.shadow_std_los_db = get_or(j, "shadow_std_los_db", p.shadow_std_los_db);
  p.shadow_std_nlos_db = get_or(j, "shadow_std_nlos_db", p.shadow_std_nlos_db);
  return p;
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
  check_known_keys(j, {"channel", "fleet", "data", "hyper", "solver", "seeds", "output"},
                   "top level");
  ExperimentConfig cfg;
  if (j.contains("channel")) cfg.channel = channel_from_json(j["channel"]);
  if (j.contains("fleet")) {
    const auto& f = j["fleet"];
    check_known_keys(f, {"num_devices", "availability", "placement_seed"}, "fleet");
    cfg.fleet.num_devices = get_or(f, "num_devices", cfg.fleet.num_devices);
    cfg.fleet.availability = get_or(f, "availability", cfg.fleet.availability);
    if (f.contains("placement_seed") && !f["placement_seed"].is_null()) {
      cfg.fleet.placement_seed = f["placement_seed"].get<std::uint64_t>();
    }
  }
  if (j.contains("data")) {
    const auto& d = j["data"];
    check_known_keys(d,
                     {"partition", "geometry", "num_classes", "feature_dim",
                      "train_per_class", "test_per_class", "noise_std", "mean_scale",
                      "shards_per_device", "imbalance_ratio", "alpha"},
                     "data");
    cfg.data.partition = get_or<std::string>(d, "partition", cfg.data.partition);
    cfg.data.geometry = get_or<std::string>(d, "geometry", cfg.data.geometry);
    cfg.data.num_classes = get_or(d, "num_classes", cfg.data.num_classes);
    cfg.data.feature_dim = get_or(d, "feature_dim", cfg.data.feature_dim);
    cfg.data.train_per_class = get_or(d, "train_per_class", cfg.data.train_per_class);
    cfg.data.test_per_class = get_or(d, "test_per_class", cfg.data.test_per_class);
    cfg.data.noise_std = get_or(d, "noise_std", cfg.data.noise_std);
    cfg.data.mean_scale = get_or(d, "mean_scale", cfg.data.mean_scale);
    cfg.data.shards_per_device = get_or(d, "shards_per_device", cfg.data.shards_per_device);
    cfg.data.imbalance_ratio = get_or(d, "imbalance_ratio", cfg.data.imbalance_ratio);
    cfg.data.alpha = get_or(d, "alpha", cfg.data.alpha);
  }
  if (j.contains("hyper")) {
    const auto& h = j["hyper"];
    check_known_keys(h, {"eta", "tau", "batch", "rounds"}, "hyper");
    cfg.hyper.eta = get_or(h, "eta", cfg.hyper.eta);
    cfg.hyper.tau = get_or(h, "tau", cfg.hyper.tau);
    cfg.hyper.batch = get_or(h, "batch", cfg.hyper.batch);
    cfg.hyper.rounds = get_or(h, "rounds", cfg.hyper.rounds);
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    check_known_keys(s, {"name", "poc_subset", "g_mode", "smoothing"}, "solver");
    const std::string name = get_or<std::string>(s, "name", "fscd");
    const auto kind = parse_solver(name);
    if (!kind) throw std::runtime_error("config: unknown solver '" + name + "'");
    cfg.solver.kind = *kind;
    cfg.solver.poc_subset = get_or(s, "poc_subset", 0);
    const std::string g_mode = get_or<std::string>(s, "g_mode", "scalar");
    if (g_mode == "per-class") {
      cfg.solver.per_class_g = true;
    } else if (g_mode != "scalar") {
      throw std::runtime_error("config: g_mode must be 'scalar' or 'per-class'");
    }
    cfg.solver.smoothing = get_or(s, "smoothing", 0.0);
  }
  if (j.contains("seeds")) {
    cfg.seeds.clear();
    for (const auto& s : j["seeds"]) cfg.seeds.push_back(s.get<std::uint64_t>());
  }
  cfg.output_dir = get_or<std::string>(j, "output", cfg.output_dir);
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("parse error in " + path + ": " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void validate(const ExperimentConfig& cfg) {
  validate(cfg.channel);
  validate(cfg.hyper);
  if (cfg.fleet.num_devices < 1) throw std::runtime_error("config: fleet.num_devices must be >= 1");
  if (cfg.fleet.availability < 0.0 || cfg.fleet.availability > 1.0) {
    throw std::runtime_error("config: fleet.availability must lie in [0, 1]");
  }
  if (cfg.data.partition != "sort" && cfg.data.partition != "dirichlet") {
    throw std::runtime_error("config: data.partition must be 'sort' or 'dirichlet'");
  }
  task_geometry(cfg.data.geometry);
  if (cfg.solver.smoothing < 0.0 || cfg.solver.smoothing >= 1.0) {
    throw std::runtime_error("config: solver.smoothing must lie in [0, 1)");
  }
  if (cfg.seeds.empty()) throw std::runtime_error("config: seeds must be non-empty");
}

namespace {

struct TrialOutput {
  std::vector<RoundMetrics> rows;
  TrialSummary summary;
};

TrialOutput run_trial(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto& d = cfg.data;
  SyntheticTask task =
      make_synthetic_task(d.num_classes, d.feature_dim, d.noise_std, d.train_per_class,
                          d.test_per_class, d.mean_scale, task_geometry(d.geometry));
  Rng data_rng = Rng::derive(seed, stream::kData);
  GeneratedData data = gen_synthetic(task, data_rng);
  PartitionResult parts =
      d.partition == "sort"
          ? sort_and_partition(data.train, cfg.fleet.num_devices, d.shards_per_device,
                               d.imbalance_ratio, data_rng)
          : dirichlet_partition(data.train, cfg.fleet.num_devices, d.alpha, data_rng);

  // Global distribution of the data the fleet actually holds.
  std::vector<int> held;
  for (const auto& dev : parts.devices) {
    held.insert(held.end(), dev.sample_ids.begin(), dev.sample_ids.end());
  }
  const ClassDistribution global_dist = empirical_distribution(data.train, held);

  Rng placement_rng =
      Rng::derive(cfg.fleet.placement_seed.value_or(seed), stream::kPlacement);
  const std::vector<FleetDevice> fleet =
      place_devices(cfg.fleet.num_devices, cfg.channel.cell_radius_m, placement_rng);

  RoundEnv env;
  env.train = &data.train;
  env.test = &data.test;
  env.devices = &parts.devices;
  env.global_dist = global_dist;
  env.channel = cfg.channel;
  env.hp = cfg.hyper;
  env.solver = cfg.solver.kind;
  env.poc_subset = cfg.solver.poc_subset;
  env.per_class_g = cfg.solver.per_class_g;
  env.smoothing = cfg.solver.smoothing;
  env.availability = cfg.fleet.availability;
  env.seed = seed;

  TrainState state =
      init_train_state(d.num_classes, d.feature_dim, cfg.fleet.num_devices,
                       cfg.solver.per_class_g);

  TrialOutput out;
  out.rows.reserve(static_cast<std::size_t>(cfg.hyper.rounds));
  for (int r = 0; r < cfg.hyper.rounds; ++r) {
    Rng shadow_rng = Rng::derive(seed, stream::kShadow, static_cast<std::uint64_t>(r));
    const std::vector<LinkState> snapshot = snapshot_channel(fleet, cfg.channel, shadow_rng);
    out.rows.push_back(run_round(state, env, snapshot));
  }

  TrialSummary& s = out.summary;
  s.seed = seed;
  s.final_acc = out.rows.back().test_acc;
  double sched_sum = 0.0, wemd_sum = 0.0;
  int active = 0;
  for (const auto& row : out.rows) {
    s.max_acc = std::max(s.max_acc, row.test_acc);
    if (row.scheduled > 0) {
      sched_sum += row.scheduled;
      wemd_sum += row.wemd;
      ++active;
    } else {
      ++s.skipped_rounds;
    }
  }
  s.mean_scheduled = active > 0 ? sched_sum / active : 0.0;
  s.mean_wemd = active > 0 ? wemd_sum / active : 0.0;
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const std::size_t n = cfg.seeds.size();
  std::vector<TrialOutput> outputs(n);

  const unsigned workers = std::max(1u, std::min<unsigned>(
      std::thread::hardware_concurrency(), static_cast<unsigned>(n)));
  std::vector<std::thread> threads;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (unsigned t = 0; t < workers; ++t) {
    threads.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += workers) {
        try {
          outputs[i] = run_trial(cfg, cfg.seeds[i]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  if (error) std::rethrow_exception(error);

  ExperimentResult result;
  for (auto& out : outputs) {
    result.rows.insert(result.rows.end(), out.rows.begin(), out.rows.end());
    result.trials.push_back(out.summary);
  }
  return result;
}

std::string metrics_csv_header() {
  return "round,solver,available,scheduled,bandwidth_used_hz,wemd,variance_term,"
         "objective,sigma_hat,g_hat,train_loss,test_acc,seed";
}

std::string metrics_csv_row(const RoundMetrics& r) {
  std::string out;
  out += std::to_string(r.round);
  out += ',';
  out += r.solver;
  out += ',';
  out += std::to_string(r.available);
  out += ',';
  out += std::to_string(r.scheduled);
  out += ',';
  out += fmt_double(r.bandwidth_used_hz);
  out += ',';
  out += fmt_double(r.wemd);
  out += ',';
  out += fmt_double(r.variance_term);
  out += ',';
  out += fmt_double(r.objective);
  out += ',';
  out += fmt_double(r.sigma_hat);
  out += ',';
  out += fmt_double(r.g_hat);
  out += ',';
  out += fmt_double(r.train_loss);
  out += ',';
  out += fmt_double(r.test_acc);
  out += ',';
  out += std::to_string(r.seed);
  return out;
}

void write_metrics_csv(const std::string& path, std::span<const RoundMetrics> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write metrics file: " + path);
  out << metrics_csv_header() << "\n";
  for (const auto& row : rows) out << metrics_csv_row(row) << "\n";
}

nlohmann::json summary_json(const ExperimentConfig& cfg, const ExperimentResult& result) {
  nlohmann::json j;
  j["solver"] = solver_name(cfg.solver.kind);
  j["partition"] = cfg.data.partition;
  j["num_devices"] = cfg.fleet.num_devices;
  j["rounds"] = cfg.hyper.rounds;
  j["positions_redrawn_per_seed"] = !cfg.fleet.placement_seed.has_value();
  j["trials"] = nlohmann::json::array();
  double final_sum = 0.0, max_sum = 0.0, sched_sum = 0.0, wemd_sum = 0.0;
  for (const auto& t : result.trials) {
    nlohmann::json tj;
    tj["seed"] = t.seed;
    tj["final_acc"] = t.final_acc;
    tj["max_acc"] = t.max_acc;
    tj["mean_scheduled"] = t.mean_scheduled;
    tj["mean_wemd"] = t.mean_wemd;
    tj["skipped_rounds"] = t.skipped_rounds;
    j["trials"].push_back(std::move(tj));
    final_sum += t.final_acc;
    max_sum += t.max_acc;
    sched_sum += t.mean_scheduled;
    wemd_sum += t.mean_wemd;
  }
  const double n = static_cast<double>(result.trials.size());
  j["mean_final_acc"] = final_sum / n;
  j["mean_max_acc"] = max_sum / n;
  j["mean_scheduled"] = sched_sum / n;
  j["mean_wemd"] = wemd_sum / n;
  return j;
}

void write_experiment_outputs(const ExperimentConfig& cfg, const ExperimentResult& result) {
  std::filesystem::create_directories(cfg.output_dir);
  const auto dir = std::filesystem::path(cfg.output_dir);
  write_metrics_csv((dir / "metrics.csv").string(), result.rows);
  std::ofstream out(dir / "summary.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write summary under " + cfg.output_dir);
  out << summary_json(cfg, result).dump(2) << "\n";
}

namespace {

void write_dataset_csv(const std::string& path, const Dataset& data,
                       std::span<const int> order) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  for (int f = 0; f < data.features.cols(); ++f) out << "f" << f << ",";
  out << "label\n";
  for (int id : order) {
    for (int f = 0; f < data.features.cols(); ++f) {
      out << fmt_double(data.features(id, f)) << ",";
    }
    out << data.labels[static_cast<std::size_t>(id)] << "\n";
  }
}

}  // namespace

void write_gen_data(const ExperimentConfig& cfg, const std::string& out_dir) {
  validate(cfg);
  const auto& d = cfg.data;
  const std::uint64_t seed = cfg.seeds.front();
  SyntheticTask task =
      make_synthetic_task(d.num_classes, d.feature_dim, d.noise_std, d.train_per_class,
                          d.test_per_class, d.mean_scale, task_geometry(d.geometry));
  Rng data_rng = Rng::derive(seed, stream::kData);
  GeneratedData data = gen_synthetic(task, data_rng);
  PartitionResult parts =
      d.partition == "sort"
          ? sort_and_partition(data.train, cfg.fleet.num_devices, d.shards_per_device,
                               d.imbalance_ratio, data_rng)
          : dirichlet_partition(data.train, cfg.fleet.num_devices, d.alpha, data_rng);

  std::filesystem::create_directories(out_dir);
  const auto dir = std::filesystem::path(out_dir);

  // Reorder train rows so each device's samples form one contiguous range.
  std::vector<int> order;
  nlohmann::json devices = nlohmann::json::array();
  for (const auto& dev : parts.devices) {
    nlohmann::json dj;
    dj["row_begin"] = static_cast<int>(order.size());
    order.insert(order.end(), dev.sample_ids.begin(), dev.sample_ids.end());
    dj["row_end"] = static_cast<int>(order.size());
    dj["label_dist"] = dev.label_dist.probs;
    devices.push_back(std::move(dj));
  }
  const int covered = static_cast<int>(order.size());
  order.insert(order.end(), parts.dropped_ids.begin(), parts.dropped_ids.end());

  write_dataset_csv((dir / "train.csv").string(), data.train, order);
  std::vector<int> test_order(static_cast<std::size_t>(data.test.size()));
  std::iota(test_order.begin(), test_order.end(), 0);
  write_dataset_csv((dir / "test.csv").string(), data.test, test_order);

  nlohmann::json manifest;
  manifest["num_classes"] = d.num_classes;
  manifest["feature_dim"] = d.feature_dim;
  manifest["partition"] = d.partition;
  manifest["seed"] = seed;
  manifest["train_rows"] = static_cast<int>(order.size());
  manifest["test_rows"] = data.test.size();
  manifest["devices"] = std::move(devices);
  manifest["dropped_rows_begin"] = covered;
  manifest["dropped_count"] = static_cast<int>(parts.dropped_ids.size());
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest under " + out_dir);
  out << manifest.dump(2) << "\n";
}

namespace {

// Empirical label distribution of a finite sample drawn from p, the way a
// device reports the mix of one round's batches.
ClassDistribution sampled_distribution(std::span<const double> p, int samples, Rng& rng) {
  std::vector<double> counts(p.size(), 0.0);
  for (int i = 0; i < samples; ++i) {
    double u = rng.uniform();
    std::size_t c = 0;
    while (c + 1 < p.size() && u >= p[c]) {
      u -= p[c];
      ++c;
    }
    counts[c] += 1.0;
  }
  for (double& x : counts) x /= static_cast<double>(samples);
  return ClassDistribution{std::move(counts)};
}

}  // namespace

ProblemInstance random_instance(int num_devices, Rng& rng) {
  // Payload sized so that most links need a modest bandwidth share, the
  // regime the scheduling comparison operates in.
  ChannelParams params;
  params.model_bits = 1e7;
  const int C = 10;
  // Spread of the round's reported state in the training simulator: the
  // per-sample gradient scale sits well above the heterogeneity weight, and
  // devices advertise the label mix of the tau * batch samples they used.
  static constexpr double kAlphas[3] = {0.1, 1.0, 10.0};
  constexpr int kReportedSamples = 80;

  for (;;) {
    ProblemInstance inst;
    inst.total_bandwidth_hz = params.total_bandwidth_hz;
    inst.global_dist = uniform_distribution(C);
    inst.params.batch_size = 16;
    inst.params.sigma = rng.uniform(2.0, 4.5);
    inst.params.class_weights.assign(static_cast<std::size_t>(C), rng.uniform(0.4, 1.2));

    std::vector<FleetDevice> fleet = place_devices(num_devices, params.cell_radius_m, rng);
    std::vector<LinkState> snapshot = snapshot_channel(fleet, params, rng);
    std::vector<double> alpha(static_cast<std::size_t>(C));
    const double a = kAlphas[rng.below(3)];
    for (int c = 0; c < C; ++c) alpha[static_cast<std::size_t>(c)] = a / C;

    bool any_usable = false;
    for (int v = 0; v < num_devices; ++v) {
      const std::vector<double> pv = rng.dirichlet(alpha);
      inst.device_dists.push_back(sampled_distribution(pv, kReportedSamples, rng));
      inst.min_bandwidths.push_back(snapshot[static_cast<std::size_t>(v)].min_bandwidth_hz);
      if (inst.feasible(v) && inst.bw(v) <= inst.total_bandwidth_hz) any_usable = true;
    }
    if (any_usable) return inst;
  }
}

double relative_error(double solver_objective, double oracle_objective) {
  const double gap = solver_objective - oracle_objective;
  if (std::abs(oracle_objective) <= 1e-9) return std::max(0.0, gap);
  return std::max(0.0, gap / oracle_objective);
}

BenchReport bench_solvers(std::span<const int> v_list, int instances_per_v,
                          std::uint64_t seed) {
  if (instances_per_v < 1) throw std::invalid_argument("bench_solvers: need >= 1 instance");
  BenchReport report;
  report.instances_per_v = instances_per_v;
  report.seed = seed;

  for (int V : v_list) {
    if (V > 24) throw std::invalid_argument("bench_solvers: oracle refuses V > 24");
    BenchGroup group;
    group.num_devices = V;
    struct Acc {
      double err_sum = 0.0, err_max = 0.0, iter_sum = 0.0, eval_sum = 0.0;
    };
    Acc acc[3];
    const char* names[3] = {"gs", "fscd", "cd"};

    for (int i = 0; i < instances_per_v; ++i) {
      Rng inst_rng = Rng::derive(seed, stream::kBench, static_cast<std::uint64_t>(V),
                                 static_cast<std::uint64_t>(i));
      const ProblemInstance inst = random_instance(V, inst_rng);
      const SolveReport oracle = brute_force(inst);

      Rng cd_rng = Rng::derive(seed, stream::kSolver, static_cast<std::uint64_t>(V),
                               static_cast<std::uint64_t>(i));
      const SolveReport runs[3] = {greedy_schedule(inst), fscd_schedule(inst),
                                   cd_schedule(inst, cd_rng)};
      for (int s = 0; s < 3; ++s) {
        const double err =
            relative_error(runs[s].schedule.objective, oracle.schedule.objective);
        acc[s].err_sum += err;
        acc[s].err_max = std::max(acc[s].err_max, err);
        acc[s].iter_sum += static_cast<double>(runs[s].iterations);
        acc[s].eval_sum += static_cast<double>(runs[s].evaluations);
      }
      group.max_gs_iterations = std::max(group.max_gs_iterations, runs[0].iterations);
    }

    for (int s = 0; s < 3; ++s) {
      SolverBenchStats stats;
      stats.solver = names[s];
      stats.mean_rel_err = acc[s].err_sum / instances_per_v;
      stats.max_rel_err = acc[s].err_max;
      stats.mean_iterations = acc[s].iter_sum / instances_per_v;
      stats.mean_evaluations = acc[s].eval_sum / instances_per_v;
      group.solvers.push_back(std::move(stats));
    }
    report.groups.push_back(std::move(group));
  }
  return report;
}

nlohmann::json bench_to_json(const BenchReport& report) {
  nlohmann::json j;
  j["instances_per_v"] = report.instances_per_v;
  j["seed"] = report.seed;
  j["groups"] = nlohmann::json::array();
  for (const auto& g : report.groups) {
    nlohmann::json gj;
    gj["num_devices"] = g.num_devices;
    gj["max_gs_iterations"] = g.max_gs_iterations;
    gj["solvers"] = nlohmann::json::array();
    for (const auto& s : g.solvers) {
      nlohmann::json sj;
      sj["name"] = s.solver;
      sj["mean_rel_err"] = s.mean_rel_err;
      sj["max_rel_err"] = s.max_rel_err;
      sj["mean_iterations"] = s.mean_iterations;
      sj["mean_evaluations"] = s.mean_evaluations;
      gj["solvers"].push_back(std::move(sj));
    }
    j["groups"].push_back(std::move(gj));
  }
  return j;
}

}  // namespace fedcgd
