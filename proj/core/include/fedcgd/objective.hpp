#pragma once

#include <span>
#include <vector>

namespace fedcgd {

// A per-class probability vector. Real data distributions are normalized;
// the partition-reduction instances reuse this container with raw values,
// so normalization is checked at construction sites, not here.
struct ClassDistribution {
  std::vector<double> probs;

  int num_classes() const { return static_cast<int>(probs.size()); }
};

ClassDistribution uniform_distribution(int num_classes);

bool is_normalized(const ClassDistribution& dist, double tol = 1e-9);

// Throws std::invalid_argument on negative entries or sum far from 1.
void check_distribution(const ClassDistribution& dist);

// L1 distance between two distributions of equal dimension.
double l1_distance(const ClassDistribution& a, const ClassDistribution& b);

// Parameters of the scheduling objective: gradient noise scale, batch
// size, and one weight per class.
struct ObjectiveParams {
  double sigma = 0.0;
  int batch_size = 1;
  std::vector<double> class_weights;
};

void validate(const ObjectiveParams& params, int num_classes);

// Unweighted mean of the scheduled devices' distributions.
ClassDistribution group_distribution(std::span<const int> members,
                                     std::span<const ClassDistribution> device_dists);

// Weighted earth moving distance: sum_c weight_c * |group_c - global_c|.
double wemd(const ClassDistribution& group, const ClassDistribution& global,
            std::span<const double> weights);

// sigma / sqrt(n * b); +infinity for an empty schedule.
double variance_term(int n_scheduled, const ObjectiveParams& params);

}  // namespace fedcgd
