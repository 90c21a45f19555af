#include "fedcgd/schedulers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fedcgd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Minimum improvement for a descent move; guards against float cycling.
constexpr double kDescentEps = 1e-12;

std::vector<int> feasible_devices(const ProblemInstance& inst) {
  std::vector<int> out;
  for (int v = 0; v < inst.num_devices(); ++v) {
    if (inst.feasible(v)) out.push_back(v);
  }
  return out;
}

// Incremental objective state: per-class sums of member distributions,
// member count, and bandwidth. Keeps solver sweeps O(C) per candidate.
struct GroupState {
  std::vector<double> sums;
  int count = 0;
  double bandwidth = 0.0;

  explicit GroupState(int num_classes) : sums(static_cast<std::size_t>(num_classes), 0.0) {}

  void add(const ProblemInstance& inst, int v) {
    const auto& p = inst.device_dists[static_cast<std::size_t>(v)].probs;
    for (std::size_t c = 0; c < sums.size(); ++c) sums[c] += p[c];
    ++count;
    bandwidth += inst.bw(v);
  }

  void remove(const ProblemInstance& inst, int v) {
    const auto& p = inst.device_dists[static_cast<std::size_t>(v)].probs;
    for (std::size_t c = 0; c < sums.size(); ++c) sums[c] -= p[c];
    --count;
    bandwidth -= inst.bw(v);
  }
};

// WEMD of the group given distribution sums, with optional single-device
// deltas (add `plus`, drop `minus`).
double wemd_delta(const ProblemInstance& inst, const GroupState& g, const int* plus,
                  const int* minus) {
  int n = g.count + (plus ? 1 : 0) - (minus ? 1 : 0);
  if (n == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(n);
  const auto& weights = inst.params.class_weights;
  const auto& global = inst.global_dist.probs;
  const double* padd = plus ? inst.device_dists[static_cast<std::size_t>(*plus)].probs.data() : nullptr;
  const double* psub = minus ? inst.device_dists[static_cast<std::size_t>(*minus)].probs.data() : nullptr;
  double total = 0.0;
  for (std::size_t c = 0; c < g.sums.size(); ++c) {
    double s = g.sums[c];
    if (padd) s += padd[c];
    if (psub) s -= psub[c];
    total += weights[c] * std::abs(s * inv - global[c]);
  }
  return total;
}

Schedule finalize(const ProblemInstance& inst, std::vector<int> members) {
  std::sort(members.begin(), members.end());
  Schedule sched;
  sched.bandwidth_used_hz = 0.0;
  for (int v : members) sched.bandwidth_used_hz += inst.bw(v);
  sched.objective = objective_value(members, inst);
  sched.members = std::move(members);
  return sched;
}

SolveReport empty_report(SolverKind kind, bool no_feasible) {
  SolveReport report;
  report.schedule.objective = kInf;
  report.solver_name = solver_name(kind);
  report.no_feasible_device = no_feasible;
  return report;
}

SolveReport best_effort_fill(const ProblemInstance& inst, SolverKind kind,
                             std::vector<int> ordered) {
  SolveReport report;
  report.solver_name = solver_name(kind);
  std::vector<int> members;
  double bw_used = 0.0;
  for (int v : ordered) {
    ++report.iterations;
    if (bw_used + inst.bw(v) > inst.total_bandwidth_hz) break;
    bw_used += inst.bw(v);
    members.push_back(v);
  }
  if (members.empty()) {
    report.schedule.objective = kInf;
    report.no_feasible_device = true;
    return report;
  }
  report.schedule = finalize(inst, std::move(members));
  report.evaluations = 1;
  return report;
}

// Descending sort by key, ties toward the lower device index.
std::vector<int> order_by_key_desc(std::span<const int> devices, std::span<const double> key) {
  std::vector<int> out(devices.begin(), devices.end());
  std::stable_sort(out.begin(), out.end(), [&](int a, int b) {
    return key[static_cast<std::size_t>(a)] > key[static_cast<std::size_t>(b)];
  });
  return out;
}

}  // namespace

void validate(const ProblemInstance& inst) {
  const int V = inst.num_devices();
  if (V < 1) throw std::invalid_argument("ProblemInstance: need >= 1 device");
  if (static_cast<int>(inst.min_bandwidths.size()) != V) {
    throw std::invalid_argument("ProblemInstance: min_bandwidths size mismatch");
  }
  const int C = inst.num_classes();
  if (C < 1) throw std::invalid_argument("ProblemInstance: empty global distribution");
  for (const auto& d : inst.device_dists) {
    if (d.num_classes() != C) throw std::invalid_argument("ProblemInstance: device dist dimension mismatch");
  }
  for (const auto& b : inst.min_bandwidths) {
    if (b && !(*b > 0.0)) throw std::invalid_argument("ProblemInstance: feasible min bandwidth must be > 0");
  }
  if (!(inst.total_bandwidth_hz > 0.0)) {
    throw std::invalid_argument("ProblemInstance: total bandwidth must be > 0");
  }
  validate(inst.params, C);
}

double wemd_of(std::span<const int> members, const ProblemInstance& inst) {
  if (members.empty()) return 0.0;
  const auto group = group_distribution(members, inst.device_dists);
  return wemd(group, inst.global_dist, inst.params.class_weights);
}

double objective_value(std::span<const int> members, const ProblemInstance& inst) {
  if (members.empty()) return kInf;
  for (int v : members) {
    if (v < 0 || v >= inst.num_devices()) throw std::domain_error("objective_value: device index out of range");
    if (!inst.feasible(v)) throw std::domain_error("objective_value: schedule contains an infeasible device");
  }
  return variance_term(static_cast<int>(members.size()), inst.params) + wemd_of(members, inst);
}

std::optional<SolverKind> parse_solver(const std::string& name) {
  if (name == "gs") return SolverKind::kGreedy;
  if (name == "fscd") return SolverKind::kFscd;
  if (name == "cd") return SolverKind::kCd;
  if (name == "oracle" || name == "brute-force") return SolverKind::kOracle;
  if (name == "bc") return SolverKind::kBestChannel;
  if (name == "bn") return SolverKind::kBestNorm;
  if (name == "poc") return SolverKind::kPoc;
  return std::nullopt;
}

std::string solver_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::kGreedy: return "gs";
    case SolverKind::kFscd: return "fscd";
    case SolverKind::kCd: return "cd";
    case SolverKind::kOracle: return "oracle";
    case SolverKind::kBestChannel: return "bc";
    case SolverKind::kBestNorm: return "bn";
    case SolverKind::kPoc: return "poc";
  }
  return "unknown";
}

SolveReport greedy_schedule(const ProblemInstance& inst) {
  validate(inst);
  SolveReport report;
  report.solver_name = solver_name(SolverKind::kGreedy);

  const int V = inst.num_devices();
  std::vector<bool> in_schedule(static_cast<std::size_t>(V), false);
  GroupState group(inst.num_classes());
  std::vector<int> members;
  double objective = kInf;

  for (;;) {
    int best_v = -1;
    double best_wemd = kInf;
    for (int v = 0; v < V; ++v) {
      if (in_schedule[static_cast<std::size_t>(v)] || !inst.feasible(v)) continue;
      if (group.bandwidth + inst.bw(v) > inst.total_bandwidth_hz) continue;
      const double cand = wemd_delta(inst, group, &v, nullptr);
      ++report.evaluations;
      if (cand < best_wemd) {
        best_wemd = cand;
        best_v = v;
      }
    }
    if (best_v < 0) break;
    ++report.iterations;
    const double cand_objective =
        variance_term(group.count + 1, inst.params) + best_wemd;
    if (!(cand_objective < objective - kDescentEps)) break;
    group.add(inst, best_v);
    in_schedule[static_cast<std::size_t>(best_v)] = true;
    members.push_back(best_v);
    objective = cand_objective;
  }

  if (members.empty()) return empty_report(SolverKind::kGreedy, true);
  report.schedule = finalize(inst, std::move(members));
  return report;
}

SolveReport fscd_schedule(const ProblemInstance& inst) {
  validate(inst);
  SolveReport report;
  report.solver_name = solver_name(SolverKind::kFscd);

  // Feasible devices by ascending bandwidth need (ties by index).
  std::vector<int> by_bw = feasible_devices(inst);
  std::stable_sort(by_bw.begin(), by_bw.end(),
                   [&](int a, int b) { return inst.bw(a) < inst.bw(b); });

  // Largest S whose S cheapest devices fit the budget.
  int s_max = 0;
  double prefix = 0.0;
  for (int v : by_bw) {
    prefix += inst.bw(v);
    if (prefix > inst.total_bandwidth_hz) break;
    ++s_max;
  }
  if (s_max == 0) return empty_report(SolverKind::kFscd, by_bw.empty());

  const int V = inst.num_devices();
  std::vector<int> best_members;
  double best_objective = kInf;

  for (int size = s_max; size >= 1; --size) {
    GroupState group(inst.num_classes());
    std::vector<bool> in_schedule(static_cast<std::size_t>(V), false);
    std::vector<int> members(by_bw.begin(), by_bw.begin() + size);
    std::sort(members.begin(), members.end());
    for (int v : members) {
      group.add(inst, v);
      in_schedule[static_cast<std::size_t>(v)] = true;
    }
    double current_wemd = wemd_delta(inst, group, nullptr, nullptr);
    ++report.evaluations;
    const double var = variance_term(size, inst.params);

    // Best single swap, repeated while it strictly improves.
    for (;;) {
      ++report.iterations;
      double best_swap_wemd = kInf;
      int best_out = -1, best_in = -1;
      for (int out : members) {
        for (int in = 0; in < V; ++in) {
          if (in_schedule[static_cast<std::size_t>(in)] || !inst.feasible(in)) continue;
          if (group.bandwidth - inst.bw(out) + inst.bw(in) > inst.total_bandwidth_hz) continue;
          const double cand = wemd_delta(inst, group, &in, &out);
          ++report.evaluations;
          if (cand < best_swap_wemd) {
            best_swap_wemd = cand;
            best_out = out;
            best_in = in;
          }
        }
      }
      if (best_out < 0 || !(best_swap_wemd < current_wemd - kDescentEps)) break;
      group.remove(inst, best_out);
      group.add(inst, best_in);
      in_schedule[static_cast<std::size_t>(best_out)] = false;
      in_schedule[static_cast<std::size_t>(best_in)] = true;
      members.erase(std::find(members.begin(), members.end(), best_out));
      members.insert(std::upper_bound(members.begin(), members.end(), best_in), best_in);
      current_wemd = best_swap_wemd;
    }

    const double objective = var + current_wemd;
    if (objective < best_objective) {
      best_objective = objective;
      best_members = members;
    }

    // Early exit: schedules smaller than `size` cost at least the variance
    // term at size-1, which already exceeds the incumbent.
    const double smaller_bound =
        size >= 2 ? inst.params.sigma /
                        std::sqrt(static_cast<double>(size - 1) *
                                  static_cast<double>(inst.params.batch_size))
                  : kInf;
    if (objective <= smaller_bound) break;
  }

  report.schedule = finalize(inst, std::move(best_members));
  return report;
}

SolveReport cd_schedule(const ProblemInstance& inst, Rng& rng) {
  validate(inst);
  SolveReport report;
  report.solver_name = solver_name(SolverKind::kCd);

  const std::vector<int> feasible = feasible_devices(inst);
  if (feasible.empty()) return empty_report(SolverKind::kCd, true);

  const int V = inst.num_devices();
  std::vector<bool> in_schedule(static_cast<std::size_t>(V), false);
  GroupState group(inst.num_classes());
  std::vector<int> members;
  for (int v : feasible) {
    if (rng.bernoulli(0.5)) {
      group.add(inst, v);
      in_schedule[static_cast<std::size_t>(v)] = true;
      members.push_back(v);
    }
  }
  // Random repair when the draw exceeds the budget.
  while (group.bandwidth > inst.total_bandwidth_hz) {
    const std::size_t k = static_cast<std::size_t>(rng.below(members.size()));
    const int victim = members[k];
    group.remove(inst, victim);
    in_schedule[static_cast<std::size_t>(victim)] = false;
    members.erase(members.begin() + static_cast<std::ptrdiff_t>(k));
  }
  std::sort(members.begin(), members.end());

  double objective =
      members.empty() ? kInf
                      : variance_term(group.count, inst.params) +
                            wemd_delta(inst, group, nullptr, nullptr);
  ++report.evaluations;

  for (;;) {
    ++report.iterations;
    double best_obj = kInf;
    int best_v = -1;
    bool best_is_add = false;
    for (int v : feasible) {
      const bool scheduled = in_schedule[static_cast<std::size_t>(v)];
      double cand;
      if (scheduled) {
        cand = group.count == 1
                   ? kInf
                   : variance_term(group.count - 1, inst.params) +
                         wemd_delta(inst, group, nullptr, &v);
      } else {
        if (group.bandwidth + inst.bw(v) > inst.total_bandwidth_hz) continue;
        cand = variance_term(group.count + 1, inst.params) +
               wemd_delta(inst, group, &v, nullptr);
      }
      ++report.evaluations;
      if (cand < best_obj) {
        best_obj = cand;
        best_v = v;
        best_is_add = !scheduled;
      }
    }
    if (best_v < 0 || !(best_obj < objective - kDescentEps)) break;
    if (best_is_add) {
      group.add(inst, best_v);
      in_schedule[static_cast<std::size_t>(best_v)] = true;
      members.insert(std::upper_bound(members.begin(), members.end(), best_v), best_v);
    } else {
      group.remove(inst, best_v);
      in_schedule[static_cast<std::size_t>(best_v)] = false;
      members.erase(std::find(members.begin(), members.end(), best_v));
    }
    objective = best_obj;
  }

  if (members.empty()) return empty_report(SolverKind::kCd, true);
  report.schedule = finalize(inst, std::move(members));
  return report;
}

SolveReport brute_force(const ProblemInstance& inst) {
  validate(inst);
  const int V = inst.num_devices();
  if (V > 24) throw std::invalid_argument("brute_force: refusing more than 24 devices");

  SolveReport report;
  report.solver_name = solver_name(SolverKind::kOracle);

  GroupState group(inst.num_classes());
  int infeasible_in_set = 0;
  std::vector<bool> in_set(static_cast<std::size_t>(V), false);

  double best_objective = kInf;
  std::vector<int> best_members;
  bool any_feasible_set = false;

  const std::uint64_t total = std::uint64_t{1} << V;
  for (std::uint64_t k = 1; k < total; ++k) {
    // Gray-code walk: exactly one device toggles per step.
    const int bit = std::countr_zero(k);
    if (in_set[static_cast<std::size_t>(bit)]) {
      if (inst.feasible(bit)) group.remove(inst, bit); else --infeasible_in_set;
      in_set[static_cast<std::size_t>(bit)] = false;
    } else {
      if (inst.feasible(bit)) group.add(inst, bit); else ++infeasible_in_set;
      in_set[static_cast<std::size_t>(bit)] = true;
    }
    if (infeasible_in_set > 0 || group.count == 0) continue;
    if (group.bandwidth > inst.total_bandwidth_hz) continue;

    const double objective = variance_term(group.count, inst.params) +
                             wemd_delta(inst, group, nullptr, nullptr);
    ++report.evaluations;
    any_feasible_set = true;

    const bool better = objective < best_objective - kDescentEps;
    const bool tied = !better && objective <= best_objective + kDescentEps;
    if (better || tied) {
      std::vector<int> members;
      members.reserve(static_cast<std::size_t>(group.count));
      for (int v = 0; v < V; ++v) {
        if (in_set[static_cast<std::size_t>(v)]) members.push_back(v);
      }
      if (better || std::lexicographical_compare(members.begin(), members.end(),
                                                 best_members.begin(), best_members.end())) {
        best_objective = objective;
        best_members = std::move(members);
      }
    }
  }
  report.iterations = report.evaluations;

  if (!any_feasible_set) return empty_report(SolverKind::kOracle, true);
  report.schedule = finalize(inst, std::move(best_members));
  return report;
}

SolveReport best_channel(const ProblemInstance& inst, std::span<const double> gains) {
  validate(inst);
  if (static_cast<int>(gains.size()) != inst.num_devices()) {
    throw std::invalid_argument("best_channel: gains size mismatch");
  }
  return best_effort_fill(inst, SolverKind::kBestChannel,
                          order_by_key_desc(feasible_devices(inst), gains));
}

SolveReport best_norm(const ProblemInstance& inst, std::span<const double> norms) {
  validate(inst);
  if (static_cast<int>(norms.size()) != inst.num_devices()) {
    throw std::invalid_argument("best_norm: norms size mismatch");
  }
  return best_effort_fill(inst, SolverKind::kBestNorm,
                          order_by_key_desc(feasible_devices(inst), norms));
}

SolveReport power_of_choice(const ProblemInstance& inst,
                            std::span<const double> accumulated_losses, int subset_size,
                            Rng& rng) {
  validate(inst);
  const int V = inst.num_devices();
  if (static_cast<int>(accumulated_losses.size()) != V) {
    throw std::invalid_argument("power_of_choice: losses size mismatch");
  }
  if (subset_size < 1 || subset_size > V) {
    throw std::domain_error("power_of_choice: subset size out of range");
  }
  std::vector<int> sampled = rng.sample_without_replacement(V, subset_size);
  std::vector<int> candidates;
  for (int v : sampled) {
    if (inst.feasible(v)) candidates.push_back(v);
  }
  std::sort(candidates.begin(), candidates.end());
  return best_effort_fill(inst, SolverKind::kPoc,
                          order_by_key_desc(candidates, accumulated_losses));
}

SolveReport run_solver(SolverKind kind, const ProblemInstance& inst,
                       std::span<const double> gains, std::span<const double> norms,
                       std::span<const double> losses, int poc_subset, Rng& rng) {
  switch (kind) {
    case SolverKind::kGreedy: return greedy_schedule(inst);
    case SolverKind::kFscd: return fscd_schedule(inst);
    case SolverKind::kCd: return cd_schedule(inst, rng);
    case SolverKind::kOracle: return brute_force(inst);
    case SolverKind::kBestChannel: return best_channel(inst, gains);
    case SolverKind::kBestNorm: return best_norm(inst, norms);
    case SolverKind::kPoc: {
      const int subset = poc_subset > 0 ? poc_subset : (inst.num_devices() + 1) / 2;
      return power_of_choice(inst, losses, subset, rng);
    }
  }
  throw std::invalid_argument("run_solver: unknown solver");
}

ProblemInstance reduce_partition(std::span<const long long> integers, int subset_size) {
  const int n = static_cast<int>(integers.size());
  if (n < 1) throw std::invalid_argument("reduce_partition: empty integer set");
  for (long long r : integers) {
    if (r <= 0) throw std::invalid_argument("reduce_partition: integers must be positive");
  }
  if (subset_size < 1 || subset_size > (n + 1) / 2) {
    throw std::invalid_argument("reduce_partition: subset size out of range");
  }

  long long sum = 0;
  for (long long r : integers) sum += r;
  const double target = static_cast<double>(sum) / (2.0 * subset_size);

  ProblemInstance inst;
  inst.device_dists.reserve(static_cast<std::size_t>(n));
  for (long long r : integers) {
    inst.device_dists.push_back(ClassDistribution{{static_cast<double>(r)}});
  }
  inst.min_bandwidths.assign(static_cast<std::size_t>(n), 1.0);
  inst.global_dist = ClassDistribution{{target}};
  inst.total_bandwidth_hz = static_cast<double>(subset_size);
  inst.params.batch_size = 1;
  inst.params.class_weights = {1.0};
  if (subset_size == 1) {
    inst.params.sigma = 1.0;
  } else {
    const double gap = 1.0 / std::sqrt(static_cast<double>(subset_size - 1)) -
                       1.0 / std::sqrt(static_cast<double>(subset_size));
    inst.params.sigma = 1.01 * target / gap;
  }
  return inst;
}

}  // namespace fedcgd
