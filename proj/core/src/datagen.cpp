#include "fedcgd/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fedcgd {

namespace {

ClassDistribution distribution_from_counts(std::span<const int> counts, int total) {
  ClassDistribution dist{std::vector<double>(counts.size(), 0.0)};
  for (std::size_t c = 0; c < counts.size(); ++c) {
    dist.probs[c] = static_cast<double>(counts[c]) / static_cast<double>(total);
  }
  return dist;
}

// Integer counts summing exactly to total, proportional to probs
// (largest-remainder apportionment).
std::vector<int> apportion(std::span<const double> probs, int total) {
  const std::size_t n = probs.size();
  std::vector<int> counts(n, 0);
  std::vector<std::pair<double, std::size_t>> remainders(n);
  int assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ideal = probs[i] * total;
    counts[i] = static_cast<int>(std::floor(ideal));
    assigned += counts[i];
    remainders[i] = {ideal - std::floor(ideal), i};
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int k = 0; k < total - assigned; ++k) {
    ++counts[remainders[static_cast<std::size_t>(k)].second];
  }
  return counts;
}

}  // namespace

SyntheticTask make_synthetic_task(int num_classes, int feature_dim, double noise_std,
                                  int train_per_class, int test_per_class,
                                  double mean_scale, TaskGeometry geometry) {
  if (geometry == TaskGeometry::kBasis && num_classes > feature_dim) {
    throw std::invalid_argument("make_synthetic_task: need feature_dim >= num_classes");
  }
  if (geometry == TaskGeometry::kRing && feature_dim < 2) {
    throw std::invalid_argument("make_synthetic_task: ring layout needs feature_dim >= 2");
  }
  SyntheticTask task;
  task.num_classes = num_classes;
  task.feature_dim = feature_dim;
  task.noise_std = noise_std;
  task.train_per_class = train_per_class;
  task.test_per_class = test_per_class;
  task.class_means.reserve(static_cast<std::size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(feature_dim);
    if (geometry == TaskGeometry::kBasis) {
      mean[c] = mean_scale;
    } else {
      const double angle = 2.0 * 3.141592653589793238462643383279502884 *
                           static_cast<double>(c) / static_cast<double>(num_classes);
      mean[0] = mean_scale * std::cos(angle);
      mean[1] = mean_scale * std::sin(angle);
    }
    task.class_means.push_back(std::move(mean));
  }
  return task;
}

void validate(const SyntheticTask& task) {
  if (task.num_classes < 2) throw std::invalid_argument("SyntheticTask: need >= 2 classes");
  if (task.feature_dim < 1) throw std::invalid_argument("SyntheticTask: need feature_dim >= 1");
  if (!(task.noise_std > 0.0)) throw std::invalid_argument("SyntheticTask: noise_std must be > 0");
  if (task.train_per_class < 1 || task.test_per_class < 1) {
    throw std::invalid_argument("SyntheticTask: per-class counts must be >= 1");
  }
  if (static_cast<int>(task.class_means.size()) != task.num_classes) {
    throw std::invalid_argument("SyntheticTask: one mean per class required");
  }
  for (const auto& m : task.class_means) {
    if (m.size() != task.feature_dim) {
      throw std::invalid_argument("SyntheticTask: mean dimension mismatch");
    }
  }
}

namespace {

Dataset sample_split(const SyntheticTask& task, int per_class, Rng& rng) {
  Dataset data;
  data.num_classes = task.num_classes;
  const int total = per_class * task.num_classes;
  data.features.resize(total, task.feature_dim);
  data.labels.resize(static_cast<std::size_t>(total));
  int row = 0;
  for (int c = 0; c < task.num_classes; ++c) {
    const auto& mean = task.class_means[static_cast<std::size_t>(c)];
    for (int i = 0; i < per_class; ++i, ++row) {
      for (int f = 0; f < task.feature_dim; ++f) {
        data.features(row, f) = mean[f] + task.noise_std * rng.normal();
      }
      data.labels[static_cast<std::size_t>(row)] = c;
    }
  }
  return data;
}

}  // namespace

GeneratedData gen_synthetic(const SyntheticTask& task, Rng& rng) {
  validate(task);
  GeneratedData out;
  out.train = sample_split(task, task.train_per_class, rng);
  out.test = sample_split(task, task.test_per_class, rng);
  return out;
}

ClassDistribution empirical_distribution(const Dataset& data, std::span<const int> ids) {
  std::vector<int> counts(static_cast<std::size_t>(data.num_classes), 0);
  for (int id : ids) ++counts[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(id)])];
  return distribution_from_counts(counts, static_cast<int>(ids.size()));
}

ClassDistribution dataset_distribution(const Dataset& data) {
  std::vector<int> ids(static_cast<std::size_t>(data.size()));
  std::iota(ids.begin(), ids.end(), 0);
  return empirical_distribution(data, ids);
}

PartitionResult sort_and_partition(const Dataset& train, int num_devices,
                                   int shards_per_device, double imbalance_ratio, Rng& rng) {
  if (num_devices < 1 || shards_per_device < 1) {
    throw std::invalid_argument("sort_and_partition: devices and shards must be >= 1");
  }
  if (!(imbalance_ratio > 0.0)) {
    throw std::domain_error("sort_and_partition: imbalance ratio must be > 0");
  }
  const int C = train.num_classes;
  const int half = C / 2;

  std::vector<int> first_half, second_half;
  for (int i = 0; i < train.size(); ++i) {
    (train.labels[static_cast<std::size_t>(i)] < half ? first_half : second_half).push_back(i);
  }
  const double c1 = static_cast<double>(half);
  const double c2 = static_cast<double>(C - half);
  const double n1 = static_cast<double>(first_half.size());
  const double n2 = static_cast<double>(second_half.size());

  // Target ratio of per-class sample counts between the halves; trim the
  // half that is over-represented relative to it. With an even class count
  // this is exactly the ratio of the half totals.
  const double current = (n2 / c2) / (n1 / c1);
  if (current < imbalance_ratio) {
    const int keep = static_cast<int>(std::floor(n2 / c2 * c1 / imbalance_ratio));
    rng.shuffle(first_half);
    first_half.resize(static_cast<std::size_t>(std::min<int>(keep, static_cast<int>(n1))));
  } else if (current > imbalance_ratio) {
    const int keep = static_cast<int>(std::floor(n1 / c1 * c2 * imbalance_ratio));
    rng.shuffle(second_half);
    second_half.resize(static_cast<std::size_t>(std::min<int>(keep, static_cast<int>(n2))));
  }

  std::vector<int> pool = first_half;
  pool.insert(pool.end(), second_half.begin(), second_half.end());
  const int num_shards = num_devices * shards_per_device;
  if (static_cast<int>(pool.size()) < num_shards) {
    throw std::domain_error("sort_and_partition: not enough samples for the requested shards");
  }

  // Sort by label (stable on sample id) and cut into equal shards; the last
  // shard absorbs the remainder.
  std::stable_sort(pool.begin(), pool.end(), [&](int a, int b) {
    return train.labels[static_cast<std::size_t>(a)] < train.labels[static_cast<std::size_t>(b)];
  });
  const int shard_size = static_cast<int>(pool.size()) / num_shards;
  std::vector<std::pair<int, int>> shard_bounds;  // [begin, end)
  for (int s = 0; s < num_shards; ++s) {
    const int begin = s * shard_size;
    const int end = (s == num_shards - 1) ? static_cast<int>(pool.size()) : begin + shard_size;
    shard_bounds.emplace_back(begin, end);
  }
  std::vector<int> shard_order(static_cast<std::size_t>(num_shards));
  std::iota(shard_order.begin(), shard_order.end(), 0);
  rng.shuffle(shard_order);

  PartitionResult result;
  result.devices.resize(static_cast<std::size_t>(num_devices));
  for (int v = 0; v < num_devices; ++v) {
    auto& device = result.devices[static_cast<std::size_t>(v)];
    for (int k = 0; k < shards_per_device; ++k) {
      const int s = shard_order[static_cast<std::size_t>(v * shards_per_device + k)];
      const auto [begin, end] = shard_bounds[static_cast<std::size_t>(s)];
      device.sample_ids.insert(device.sample_ids.end(), pool.begin() + begin, pool.begin() + end);
    }
    std::sort(device.sample_ids.begin(), device.sample_ids.end());
    device.label_dist = empirical_distribution(train, device.sample_ids);
  }
  return result;
}

PartitionResult dirichlet_partition(const Dataset& train, int num_devices, double alpha,
                                    Rng& rng) {
  if (num_devices < 1) throw std::invalid_argument("dirichlet_partition: need >= 1 device");
  if (!(alpha > 0.0)) throw std::invalid_argument("dirichlet_partition: alpha must be > 0");
  const int C = train.num_classes;
  const ClassDistribution global = dataset_distribution(train);

  // Per-class sample pools in shuffled order; grants consume sequentially.
  std::vector<std::vector<int>> pools(static_cast<std::size_t>(C));
  for (int i = 0; i < train.size(); ++i) {
    pools[static_cast<std::size_t>(train.labels[static_cast<std::size_t>(i)])].push_back(i);
  }
  for (auto& p : pools) rng.shuffle(p);
  std::vector<std::size_t> next(static_cast<std::size_t>(C), 0);
  auto remaining = [&](int c) {
    return static_cast<int>(pools[static_cast<std::size_t>(c)].size() - next[static_cast<std::size_t>(c)]);
  };

  std::vector<double> concentration(static_cast<std::size_t>(C));
  for (int c = 0; c < C; ++c) concentration[static_cast<std::size_t>(c)] = alpha * global.probs[static_cast<std::size_t>(c)];

  const int quota = train.size() / num_devices;
  if (quota < 1) throw std::invalid_argument("dirichlet_partition: more devices than samples");

  PartitionResult result;
  result.devices.resize(static_cast<std::size_t>(num_devices));
  for (int v = 0; v < num_devices; ++v) {
    const std::vector<double> pv = rng.dirichlet(concentration);
    std::vector<int> want = apportion(pv, quota);

    // Cap requests at what is left in each class pool, then refill the
    // deficit from the classes with the most remaining samples.
    int granted_total = 0;
    std::vector<int> granted(static_cast<std::size_t>(C), 0);
    for (int c = 0; c < C; ++c) {
      granted[static_cast<std::size_t>(c)] = std::min(want[static_cast<std::size_t>(c)], remaining(c));
      granted_total += granted[static_cast<std::size_t>(c)];
    }
    while (granted_total < quota) {
      int best_c = -1;
      int best_slack = 0;
      for (int c = 0; c < C; ++c) {
        const int slack = remaining(c) - granted[static_cast<std::size_t>(c)];
        if (slack > best_slack) {
          best_slack = slack;
          best_c = c;
        }
      }
      if (best_c < 0) break;  // pools exhausted; device stays short
      ++granted[static_cast<std::size_t>(best_c)];
      ++granted_total;
    }

    auto& device = result.devices[static_cast<std::size_t>(v)];
    for (int c = 0; c < C; ++c) {
      auto& pool = pools[static_cast<std::size_t>(c)];
      auto& cursor = next[static_cast<std::size_t>(c)];
      for (int k = 0; k < granted[static_cast<std::size_t>(c)]; ++k) {
        device.sample_ids.push_back(pool[cursor++]);
      }
    }
    std::sort(device.sample_ids.begin(), device.sample_ids.end());
    device.label_dist = empirical_distribution(train, device.sample_ids);
  }

  for (int c = 0; c < C; ++c) {
    auto& pool = pools[static_cast<std::size_t>(c)];
    for (std::size_t k = next[static_cast<std::size_t>(c)]; k < pool.size(); ++k) {
      result.dropped_ids.push_back(pool[k]);
    }
  }
  std::sort(result.dropped_ids.begin(), result.dropped_ids.end());
  return result;
}

}  // namespace fedcgd
