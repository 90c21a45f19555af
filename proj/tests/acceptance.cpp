// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Thresholds are fixed here, not configurable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fedcgd/channel.hpp"
#include "fedcgd/datagen.hpp"
#include "fedcgd/experiment.hpp"
#include "fedcgd/fltrain.hpp"
#include "fedcgd/schedulers.hpp"

using namespace fedcgd;

namespace {

int g_failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("[%s] %d. %s (%s)\n", pass ? "PASS" : "FAIL", id, what.c_str(),
              detail.c_str());
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- criteria 1 and 2: solver quality and iteration bound ----

void criteria_solver_quality() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<int> v_list = {16};
  const BenchReport bench = bench_solvers(v_list, 100, 2024);
  const BenchGroup& g = bench.groups[0];
  double fscd_err = -1.0, gs_err = -1.0, cd_err = -1.0;
  for (const auto& s : g.solvers) {
    if (s.solver == "fscd") fscd_err = s.mean_rel_err;
    if (s.solver == "gs") gs_err = s.mean_rel_err;
    if (s.solver == "cd") cd_err = s.mean_rel_err;
  }

  // CD is reported, not bounded; its schedules must still be feasible.
  bool cd_feasible = true;
  for (int i = 0; i < 20; ++i) {
    Rng inst_rng = Rng::derive(2024, stream::kBench, 16, static_cast<std::uint64_t>(i));
    const ProblemInstance inst = random_instance(16, inst_rng);
    Rng cd_rng = Rng::derive(2024, stream::kSolver, 16, static_cast<std::uint64_t>(i));
    const SolveReport cd = cd_schedule(inst, cd_rng);
    double bw = 0.0;
    for (int v : cd.schedule.members) {
      if (!inst.feasible(v)) cd_feasible = false;
      else bw += inst.bw(v);
    }
    if (bw > inst.total_bandwidth_hz * (1.0 + 1e-12)) cd_feasible = false;
  }

  const double elapsed = seconds_since(t0);
  char detail[256];
  std::snprintf(detail, sizeof detail,
                "fscd mean rel err %.4f%% <= 1%%, gs %.4f%% <= 8%%, cd %.4f%% reported, "
                "cd feasible %s, %.1f s < 60 s",
                100.0 * fscd_err, 100.0 * gs_err, 100.0 * cd_err,
                cd_feasible ? "yes" : "NO", elapsed);
  report(1, fscd_err >= 0.0 && fscd_err <= 0.01 && gs_err <= 0.08 && cd_feasible &&
             elapsed < 60.0,
         "solver quality vs oracle on 100 random V=16 instances", detail);

  char it_detail[128];
  std::snprintf(it_detail, sizeof it_detail, "max gs iterations %ld <= V = 16",
                g.max_gs_iterations);
  report(2, g.max_gs_iterations <= 16, "gs iteration bound on every bench instance",
         it_detail);
}

// ---- criterion 3: minimum bandwidth binds the deadline ----

void criterion_lambert() {
  const ChannelParams params;
  Rng rng(77);
  int feasible_checked = 0, infeasible_seen = 0;
  double worst_rel = 0.0;
  bool flags_consistent = true;
  while (feasible_checked < 1000) {
    const auto fleet = place_devices(64, params.cell_radius_m, rng);
    const auto snapshot = snapshot_channel(fleet, params, rng);
    for (const auto& link : snapshot) {
      const double gamma = feasibility_gamma(link.avg_gain, params);
      if (!link.min_bandwidth_hz.has_value()) {
        ++infeasible_seen;
        if (gamma < 1.0) flags_consistent = false;
        continue;
      }
      if (gamma >= 1.0) flags_consistent = false;
      if (feasible_checked >= 1000) continue;
      ++feasible_checked;
      const double rate = transmission_rate(*link.min_bandwidth_hz, link.avg_gain, params);
      const auto latency = upload_latency(params.model_bits, rate);
      const double rel = std::abs(*latency - params.deadline_s) / params.deadline_s;
      worst_rel = std::max(worst_rel, rel);
    }
  }
  char detail[192];
  std::snprintf(detail, sizeof detail,
                "1000 feasible links, worst deadline error %.2e <= 1e-9; %d infeasible "
                "links all had gamma >= 1: %s",
                worst_rel, infeasible_seen, flags_consistent ? "yes" : "NO");
  report(3, worst_rel <= 1e-9 && flags_consistent,
         "closed-form minimum bandwidth binds the upload deadline", detail);
}

// ---- criterion 4: partition reduction soundness ----

void criterion_reduction() {
  Rng rng(4242);
  int agreements = 0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    const int n = 4 + static_cast<int>(rng.below(9));  // 4..12
    std::vector<long long> ints;
    long long sum = 0;
    for (int i = 0; i < n; ++i) {
      ints.push_back(1 + static_cast<long long>(rng.below(30)));
      sum += ints.back();
    }
    const int s = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>((n + 1) / 2)));

    bool exists = false;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n) && !exists; ++mask) {
      if (std::popcount(mask) != s) continue;
      long long subset = 0;
      for (int i = 0; i < n; ++i) {
        if (mask & (std::uint64_t{1} << i)) subset += ints[static_cast<std::size_t>(i)];
      }
      exists = 2 * subset == sum;
    }

    const ProblemInstance inst = reduce_partition(ints, s);
    const SolveReport oracle = brute_force(inst);
    const bool zero = static_cast<int>(oracle.schedule.members.size()) == s &&
                      wemd_of(oracle.schedule.members, inst) <= 1e-9;
    if (zero == exists) ++agreements;
  }
  char detail[96];
  std::snprintf(detail, sizeof detail, "%d/%d random integer sets agree exactly",
                agreements, trials);
  report(4, agreements == trials, "partition reduction matches exhaustive subset search",
         detail);
}

// ---- criterion 5: sample-level divergence under the variance bound ----

void criterion_sampling_variance() {
  const SyntheticTask task = make_synthetic_task(10, 20, 1.0, 60, 5, 2.0);
  Rng data_rng(505);
  const GeneratedData data = gen_synthetic(task, data_rng);

  struct Setting {
    int n, b;
  };
  const Setting settings[3] = {{2, 8}, {4, 16}, {8, 32}};
  bool all_ok = true;
  std::string detail;

  for (const auto& [n, b] : settings) {
    Rng part_rng(606 + static_cast<std::uint64_t>(n));
    const PartitionResult parts = dirichlet_partition(data.train, n, 0.5, part_rng);

    ModelParams model = zero_model(10, 20);
    Rng w_rng(707);
    for (Eigen::Index i = 0; i < model.weights.size(); ++i) {
      model.weights.data()[i] = 0.3 * w_rng.normal();
    }

    std::vector<Eigen::MatrixXd> full(static_cast<std::size_t>(n));
    std::vector<double> sigma_v(static_cast<std::size_t>(n));
    std::vector<int> sizes(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
      const auto& dev = parts.devices[static_cast<std::size_t>(v)];
      Eigen::MatrixXd x(dev.size(), 20);
      std::vector<int> y;
      std::vector<Eigen::MatrixXd> grads;
      for (int i = 0; i < dev.size(); ++i) {
        const int id = dev.sample_ids[static_cast<std::size_t>(i)];
        x.row(i) = data.train.features.row(id);
        y.push_back(data.train.labels[static_cast<std::size_t>(id)]);
      }
      full[static_cast<std::size_t>(v)] = loss_and_grad(model, x, y).grad;
      for (int i = 0; i < dev.size(); ++i) {
        const std::vector<int> yi = {y[static_cast<std::size_t>(i)]};
        grads.push_back(loss_and_grad(model, x.row(i), yi).grad);
      }
      sigma_v[static_cast<std::size_t>(v)] = sigma_hat_from_grads(grads);
      sizes[static_cast<std::size_t>(v)] = dev.size();
    }
    const double sigma = sigma_hat_global(sigma_v, sizes);
    const double bound = sigma / std::sqrt(static_cast<double>(n) * b) * 1.05;

    Rng resample(808 + static_cast<std::uint64_t>(b));
    double mean_norm = 0.0;
    for (int t = 0; t < 1000; ++t) {
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(10, 21);
      for (int v = 0; v < n; ++v) {
        const auto& dev = parts.devices[static_cast<std::size_t>(v)];
        Eigen::MatrixXd x(b, 20);
        std::vector<int> y;
        for (int i = 0; i < b; ++i) {
          const int id = dev.sample_ids[resample.below(static_cast<std::uint64_t>(dev.size()))];
          x.row(i) = data.train.features.row(id);
          y.push_back(data.train.labels[static_cast<std::size_t>(id)]);
        }
        acc += (loss_and_grad(model, x, y).grad - full[static_cast<std::size_t>(v)]) /
               static_cast<double>(n);
      }
      mean_norm += acc.norm();
    }
    mean_norm /= 1000.0;
    char part[80];
    std::snprintf(part, sizeof part, "(n=%d,b=%d: %.4f <= %.4f) ", n, b, mean_norm, bound);
    detail += part;
    all_ok = all_ok && mean_norm <= bound;
  }
  report(5, all_ok, "sample-level divergence within 1.05x of the variance bound", detail);
}

// ---- criterion 6: analytic gradient vs finite differences ----

void criterion_gradient() {
  Rng rng(909);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int C = 3 + static_cast<int>(rng.below(4));
    const int d = 4 + static_cast<int>(rng.below(5));
    ModelParams model = zero_model(C, d);
    for (Eigen::Index i = 0; i < model.weights.size(); ++i) {
      model.weights.data()[i] = rng.normal();
    }
    const int batch = 3 + static_cast<int>(rng.below(4));
    Eigen::MatrixXd x(batch, d);
    std::vector<int> y;
    for (int i = 0; i < batch; ++i) {
      for (int f = 0; f < d; ++f) x(i, f) = rng.normal();
      y.push_back(static_cast<int>(rng.below(C)));
    }
    const LossGrad lg = loss_and_grad(model, x, y);
    const double h = 1e-5;
    for (int r = 0; r < C; ++r) {
      for (int c = 0; c < d + 1; ++c) {
        ModelParams plus = model, minus = model;
        plus.weights(r, c) += h;
        minus.weights(r, c) -= h;
        const double fd =
            (loss_and_grad(plus, x, y).loss - loss_and_grad(minus, x, y).loss) / (2.0 * h);
        const double rel = std::abs(fd - lg.grad(r, c)) / std::max(1e-8, std::abs(fd));
        worst = std::max(worst, rel);
      }
    }
  }
  char detail[96];
  std::snprintf(detail, sizeof detail, "max relative error %.2e <= 1e-4 over 50 points",
                worst);
  report(6, worst <= 1e-4, "softmax gradient matches central finite differences", detail);
}

// ---- criteria 7 and 8: trend reproduction ----

ExperimentConfig trend_base_config() {
  ExperimentConfig cfg;
  cfg.fleet.num_devices = 32;
  cfg.fleet.availability = 0.7;
  cfg.data.geometry = "ring";
  cfg.data.num_classes = 10;
  cfg.data.feature_dim = 20;
  cfg.data.train_per_class = 200;
  cfg.data.test_per_class = 500;
  cfg.data.noise_std = 1.0;
  cfg.data.mean_scale = 2.0;
  cfg.hyper = Hyperparams{0.15, 5, 16, 150};
  cfg.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  return cfg;
}

void criterion_imbalance_trend() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = trend_base_config();
  cfg.data.partition = "sort";
  cfg.data.shards_per_device = 2;
  cfg.data.imbalance_ratio = 9.0;
  cfg.channel.model_bits = 8e7;

  cfg.solver.kind = SolverKind::kFscd;
  const ExperimentResult fscd = run_experiment(cfg);
  cfg.solver.kind = SolverKind::kBestChannel;
  const ExperimentResult bc = run_experiment(cfg);

  double fscd_acc = 0.0, bc_acc = 0.0, fscd_sched = 0.0, bc_sched = 0.0;
  int wins = 0;
  for (std::size_t i = 0; i < fscd.trials.size(); ++i) {
    fscd_acc += fscd.trials[i].final_acc;
    bc_acc += bc.trials[i].final_acc;
    fscd_sched += fscd.trials[i].mean_scheduled;
    bc_sched += bc.trials[i].mean_scheduled;
    if (fscd.trials[i].final_acc >= bc.trials[i].final_acc) ++wins;
  }
  const double n = static_cast<double>(fscd.trials.size());
  fscd_acc /= n;
  bc_acc /= n;
  fscd_sched /= n;
  bc_sched /= n;
  const double elapsed = seconds_since(t0);

  char detail[256];
  std::snprintf(detail, sizeof detail,
                "fscd acc %.4f >= bc acc %.4f, wins %d/10 >= 8, fscd scheduled %.2f <= "
                "bc %.2f, %.0f s < 600 s",
                fscd_acc, bc_acc, wins, fscd_sched, bc_sched, elapsed);
  report(7, fscd_acc >= bc_acc && wins >= 8 && fscd_sched <= bc_sched && elapsed < 600.0,
         "imbalance trend (r=9): fscd beats best-channel with fewer devices", detail);
}

void criterion_adaptivity_trend() {
  ExperimentConfig cfg = trend_base_config();
  cfg.data.partition = "dirichlet";
  cfg.channel.model_bits = 2e7;
  cfg.hyper.rounds = 40;

  auto mean_scheduled = [&](SolverKind kind, double alpha) {
    cfg.solver.kind = kind;
    cfg.data.alpha = alpha;
    const ExperimentResult res = run_experiment(cfg);
    double mean = 0.0;
    for (const auto& t : res.trials) mean += t.mean_scheduled;
    return mean / static_cast<double>(res.trials.size());
  };

  const double fscd_low = mean_scheduled(SolverKind::kFscd, 0.1);
  const double fscd_high = mean_scheduled(SolverKind::kFscd, 10.0);
  const double bc_low = mean_scheduled(SolverKind::kBestChannel, 0.1);
  const double bc_high = mean_scheduled(SolverKind::kBestChannel, 10.0);
  const double bc_gap = std::abs(bc_high - bc_low) / std::max(bc_low, bc_high);

  char detail[192];
  std::snprintf(detail, sizeof detail,
                "fscd scheduled %.2f at alpha=10 > %.2f at alpha=0.1; bc %.2f vs %.2f "
                "differs %.1f%% < 10%%",
                fscd_high, fscd_low, bc_high, bc_low, 100.0 * bc_gap);
  report(8, fscd_high > fscd_low && bc_gap < 0.10,
         "adaptivity trend: fscd schedules more devices as alpha grows", detail);
}

// ---- criterion 9: byte-identical outputs ----

void criterion_determinism() {
  ExperimentConfig cfg = trend_base_config();
  cfg.data.partition = "dirichlet";
  cfg.data.alpha = 0.5;
  cfg.hyper.rounds = 10;
  cfg.seeds = {3, 4};
  cfg.solver.kind = SolverKind::kFscd;

  const auto dir = std::filesystem::temp_directory_path() / "fedcgd_acceptance";
  std::filesystem::remove_all(dir);
  cfg.output_dir = (dir / "a").string();
  write_experiment_outputs(cfg, run_experiment(cfg));
  cfg.output_dir = (dir / "b").string();
  write_experiment_outputs(cfg, run_experiment(cfg));
  const std::string a = slurp(dir / "a" / "metrics.csv");
  const std::string b = slurp(dir / "b" / "metrics.csv");
  std::filesystem::remove_all(dir);

  char detail[96];
  std::snprintf(detail, sizeof detail, "%zu-byte metric files %s", a.size(),
                a == b ? "identical" : "DIFFER");
  report(9, !a.empty() && a == b, "identical configs produce byte-identical metrics",
         detail);
}

}  // namespace

int main() {
  criteria_solver_quality();
  criterion_lambert();
  criterion_reduction();
  criterion_sampling_variance();
  criterion_gradient();
  criterion_imbalance_trend();
  criterion_adaptivity_trend();
  criterion_determinism();
  std::printf("%s: %d criterion(s) failed\n", g_failures == 0 ? "OK" : "FAILED",
              g_failures);
  return g_failures == 0 ? 0 : 1;
}
