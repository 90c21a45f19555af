#include "fedcgd/objective.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fedcgd {

ClassDistribution uniform_distribution(int num_classes) {
  if (num_classes < 1) throw std::invalid_argument("uniform_distribution: need >= 1 class");
  return ClassDistribution{
      std::vector<double>(static_cast<std::size_t>(num_classes), 1.0 / num_classes)};
}

bool is_normalized(const ClassDistribution& dist, double tol) {
  double sum = 0.0;
  for (double p : dist.probs) {
    if (!(p >= 0.0)) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tol;
}

void check_distribution(const ClassDistribution& dist) {
  if (dist.probs.empty()) throw std::invalid_argument("ClassDistribution: empty");
  if (!is_normalized(dist)) {
    throw std::invalid_argument("ClassDistribution: entries must be >= 0 and sum to 1");
  }
}

double l1_distance(const ClassDistribution& a, const ClassDistribution& b) {
  if (a.probs.size() != b.probs.size()) {
    throw std::domain_error("l1_distance: dimension mismatch");
  }
  double d = 0.0;
  for (std::size_t c = 0; c < a.probs.size(); ++c) d += std::abs(a.probs[c] - b.probs[c]);
  return d;
}

void validate(const ObjectiveParams& params, int num_classes) {
  if (!(params.sigma >= 0.0)) throw std::invalid_argument("ObjectiveParams: sigma must be >= 0");
  if (params.batch_size < 1) throw std::invalid_argument("ObjectiveParams: batch_size must be >= 1");
  if (static_cast<int>(params.class_weights.size()) != num_classes) {
    throw std::invalid_argument("ObjectiveParams: class_weights length mismatch");
  }
  for (double g : params.class_weights) {
    if (!(g >= 0.0)) throw std::invalid_argument("ObjectiveParams: class weights must be >= 0");
  }
}

ClassDistribution group_distribution(std::span<const int> members,
                                     std::span<const ClassDistribution> device_dists) {
  if (members.empty()) throw std::domain_error("group_distribution: empty schedule");
  const std::size_t num_classes = device_dists[static_cast<std::size_t>(members[0])].probs.size();
  ClassDistribution group{std::vector<double>(num_classes, 0.0)};
  for (int v : members) {
    const auto& dist = device_dists[static_cast<std::size_t>(v)];
    if (dist.probs.size() != num_classes) {
      throw std::domain_error("group_distribution: dimension mismatch");
    }
    for (std::size_t c = 0; c < num_classes; ++c) group.probs[c] += dist.probs[c];
  }
  const double inv = 1.0 / static_cast<double>(members.size());
  for (double& p : group.probs) p *= inv;
  return group;
}

double wemd(const ClassDistribution& group, const ClassDistribution& global,
            std::span<const double> weights) {
  if (group.probs.size() != global.probs.size() || group.probs.size() != weights.size()) {
    throw std::domain_error("wemd: dimension mismatch");
  }
  double total = 0.0;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    total += weights[c] * std::abs(group.probs[c] - global.probs[c]);
  }
  return total;
}

double variance_term(int n_scheduled, const ObjectiveParams& params) {
  if (n_scheduled < 0) throw std::domain_error("variance_term: negative count");
  if (n_scheduled == 0) return std::numeric_limits<double>::infinity();
  return params.sigma /
         std::sqrt(static_cast<double>(n_scheduled) * static_cast<double>(params.batch_size));
}

}  // namespace fedcgd
