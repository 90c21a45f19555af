#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedcgd/objective.hpp"
#include "fedcgd/rng.hpp"

namespace fedcgd {

// One round's scheduling problem: per-device class distributions and
// minimum bandwidths (empty = link cannot meet the deadline), the global
// distribution, objective parameters, and the bandwidth budget.
struct ProblemInstance {
  std::vector<ClassDistribution> device_dists;
  std::vector<std::optional<double>> min_bandwidths;
  ClassDistribution global_dist;
  ObjectiveParams params;
  double total_bandwidth_hz = 0.0;

  int num_devices() const { return static_cast<int>(device_dists.size()); }
  int num_classes() const { return global_dist.num_classes(); }
  bool feasible(int v) const { return min_bandwidths[static_cast<std::size_t>(v)].has_value(); }
  double bw(int v) const { return *min_bandwidths[static_cast<std::size_t>(v)]; }
};

// Structural checks (sizes, positivity); throws std::invalid_argument.
void validate(const ProblemInstance& instance);

// WEMD of the group formed by `members` against the global distribution;
// 0 for an empty set.
double wemd_of(std::span<const int> members, const ProblemInstance& instance);

// Variance term plus WEMD; +infinity for an empty schedule. Throws
// std::domain_error when a member is infeasible or out of range.
double objective_value(std::span<const int> members, const ProblemInstance& instance);

struct Schedule {
  std::vector<int> members;  // device indices, ascending
  double bandwidth_used_hz = 0.0;
  double objective = 0.0;
};

struct SolveReport {
  Schedule schedule;
  long iterations = 0;
  long evaluations = 0;
  std::string solver_name;
  bool no_feasible_device = false;
};

enum class SolverKind { kGreedy, kFscd, kCd, kOracle, kBestChannel, kBestNorm, kPoc };

std::optional<SolverKind> parse_solver(const std::string& name);
std::string solver_name(SolverKind kind);

// Greedy scheduling: repeatedly add the budget-fitting device with the
// largest WEMD decrease while the net objective strictly improves.
SolveReport greedy_schedule(const ProblemInstance& instance);

// Fix-sum coordinate descent: for each schedule size S from the largest
// budget-feasible count down to 1, local search over single member/non-member
// swaps from the S-cheapest initialization, with an early exit once smaller
// sizes provably cannot win.
SolveReport fscd_schedule(const ProblemInstance& instance);

// Plain coordinate descent over single-bit flips from a random start.
SolveReport cd_schedule(const ProblemInstance& instance, Rng& rng);

// Exact minimizer by subset enumeration; refuses more than 24 devices.
// Ties break toward the lexicographically smallest member set.
SolveReport brute_force(const ProblemInstance& instance);

// Best-effort fills: traverse devices by descending key and add while the
// next device still fits the remaining budget.
SolveReport best_channel(const ProblemInstance& instance, std::span<const double> gains);
SolveReport best_norm(const ProblemInstance& instance, std::span<const double> norms);

// Power-of-choice: uniformly sample subset_size devices, then best-effort
// fill by descending accumulated loss.
SolveReport power_of_choice(const ProblemInstance& instance,
                            std::span<const double> accumulated_losses, int subset_size,
                            Rng& rng);

SolveReport run_solver(SolverKind kind, const ProblemInstance& instance,
                       std::span<const double> gains, std::span<const double> norms,
                       std::span<const double> losses, int poc_subset, Rng& rng);

// Partition-problem reduction: a single-class instance whose optimum
// schedules exactly subset_size devices and reaches WEMD 0 iff some
// subset_size integers sum to half the total.
ProblemInstance reduce_partition(std::span<const long long> integers, int subset_size);

}  // namespace fedcgd
