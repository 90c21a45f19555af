#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "fedcgd/objective.hpp"
#include "fedcgd/rng.hpp"

namespace fedcgd {

// Gaussian-bump classification task: class c draws features from
// N(class_means[c], noise_std^2 I).
struct SyntheticTask {
  int num_classes = 10;
  int feature_dim = 20;
  std::vector<Eigen::VectorXd> class_means;
  double noise_std = 1.0;
  int train_per_class = 200;
  int test_per_class = 50;
};

// Class-mean layouts. Basis means are mutually orthogonal, so classes train
// almost independently; ring means share two feature directions and
// neighboring classes overlap, which makes group imbalance distort the
// decision boundaries the way crowded real-world classes do.
enum class TaskGeometry { kBasis, kRing };

// Means scaled by mean_scale; kBasis requires C <= d, kRing requires d >= 2.
SyntheticTask make_synthetic_task(int num_classes, int feature_dim, double noise_std,
                                  int train_per_class, int test_per_class,
                                  double mean_scale,
                                  TaskGeometry geometry = TaskGeometry::kBasis);

void validate(const SyntheticTask& task);

struct Dataset {
  Eigen::MatrixXd features;  // one row per sample
  std::vector<int> labels;
  int num_classes = 0;

  int size() const { return static_cast<int>(labels.size()); }
};

struct GeneratedData {
  Dataset train;
  Dataset test;
};

GeneratedData gen_synthetic(const SyntheticTask& task, Rng& rng);

// A device's local shard, referencing rows of the global pool.
struct DeviceDataset {
  std::vector<int> sample_ids;
  ClassDistribution label_dist;

  int size() const { return static_cast<int>(sample_ids.size()); }
};

// Devices plus the samples dropped by integer rounding; device shards and
// dropped_ids together cover the (possibly subsampled) pool exactly once.
struct PartitionResult {
  std::vector<DeviceDataset> devices;
  std::vector<int> dropped_ids;
};

ClassDistribution empirical_distribution(const Dataset& data, std::span<const int> ids);
ClassDistribution dataset_distribution(const Dataset& data);

// Sort-by-label sharding with a class-half imbalance ratio r = n2/n1.
// Subsamples the over-represented half, sorts by label, deals
// shards_per_device equal shards to each device (remainder absorbed by the
// last shard).
PartitionResult sort_and_partition(const Dataset& train, int num_devices,
                                   int shards_per_device, double imbalance_ratio, Rng& rng);

// Dirichlet allocation: p_v ~ Dir(alpha * p) per device, equal sample
// counts per device, largest-remainder integer apportionment against the
// finite class pools.
PartitionResult dirichlet_partition(const Dataset& train, int num_devices, double alpha,
                                    Rng& rng);

}  // namespace fedcgd
