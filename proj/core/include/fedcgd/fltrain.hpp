#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fedcgd/channel.hpp"
#include "fedcgd/datagen.hpp"
#include "fedcgd/objective.hpp"
#include "fedcgd/rng.hpp"
#include "fedcgd/schedulers.hpp"

namespace fedcgd {

// Multinomial logistic model; one row per class, bias in the last column.
struct ModelParams {
  Eigen::MatrixXd weights;
};

ModelParams zero_model(int num_classes, int feature_dim);

struct Hyperparams {
  double eta = 0.1;
  int tau = 1;
  int batch = 32;
  int rounds = 60;
};

void validate(const Hyperparams& hp);

struct LossGrad {
  double loss = 0.0;
  Eigen::MatrixXd grad;
};

// Mean softmax cross-entropy over the batch and its exact gradient.
LossGrad loss_and_grad(const ModelParams& model, const Eigen::MatrixXd& batch_x,
                       std::span<const int> batch_y);

// One device's local pass: tau SGD steps on freshly sampled batches
// (without replacement per step when the shard is large enough). Also
// reports the first batch's loss, the gradient-variance estimate, and the
// label distribution of the samples the pass actually consumed, which is
// what the device advertises to the scheduler.
struct LocalResult {
  ModelParams model;
  double first_batch_loss = 0.0;
  double sigma_hat = 0.0;
  ClassDistribution sampled_dist;
};

LocalResult local_update(const ModelParams& start, const Dataset& pool,
                         const DeviceDataset& device, const Hyperparams& hp, Rng& rng);

// Dataset-size weighted model average; weights sum to 1.
ModelParams aggregate(std::span<const ModelParams> models, std::span<const int> sizes);

// Root-mean-square deviation of per-sample gradients from their batch mean.
double sigma_hat_from_grads(std::span<const Eigen::MatrixXd> per_sample_grads);

// Size-weighted RMS combination of the per-device estimates.
double sigma_hat_global(std::span<const double> sigma_v, std::span<const int> sizes);

// (after - before) / (tau * eta): the average gradient direction implied by
// a device's local pass.
Eigen::MatrixXd pseudo_gradient(const ModelParams& before, const ModelParams& after,
                                double eta, int tau);

// Largest deviation-to-distribution-gap ratio over the scheduled devices;
// devices whose distribution matches the global one are excluded, and the
// previous estimate is kept when nothing informative remains.
double estimate_g_scalar(std::span<const Eigen::MatrixXd> pseudo_grads,
                         std::span<const int> sizes,
                         std::span<const ClassDistribution> dists,
                         const ClassDistribution& global, double previous);

// Per-class variant: devices are grouped by their dominant class and each
// group updates its own weight; classes with no contributor keep the
// previous value.
std::vector<double> estimate_g_per_class(std::span<const Eigen::MatrixXd> pseudo_grads,
                                         std::span<const int> sizes,
                                         std::span<const ClassDistribution> dists,
                                         const ClassDistribution& global,
                                         std::span<const double> previous);

// Argmax-class accuracy on a non-empty test set.
double evaluate(const ModelParams& model, const Dataset& test);

struct TrainState {
  int round = 0;
  ModelParams global_model;
  double sigma_hat = 0.0;
  double g_hat = 1.0;
  std::vector<double> g_hat_per_class;
  bool g_ready = false;  // stays false until the first aggregation round
  std::vector<double> accumulated_loss;
  std::vector<double> grad_norms;
};

TrainState init_train_state(int num_classes, int feature_dim, int num_devices,
                            bool per_class_g);

// Fixed context for a training run.
struct RoundEnv {
  const Dataset* train = nullptr;
  const Dataset* test = nullptr;
  const std::vector<DeviceDataset>* devices = nullptr;
  ClassDistribution global_dist;
  ChannelParams channel;
  Hyperparams hp;
  SolverKind solver = SolverKind::kFscd;
  int poc_subset = 0;  // 0 -> ceil(V/2)
  bool per_class_g = false;
  double smoothing = 0.0;  // EMA weight on the previous estimate; 0 = off
  double availability = 0.3;
  std::uint64_t seed = 0;
};

// One metrics CSV row.
struct RoundMetrics {
  int round = 0;
  std::string solver;
  int available = 0;
  int scheduled = 0;
  double bandwidth_used_hz = 0.0;
  double wemd = 0.0;
  double variance_term = 0.0;
  double objective = 0.0;
  double sigma_hat = 0.0;
  double g_hat = 0.0;
  double train_loss = 0.0;
  double test_acc = 0.0;
  std::uint64_t seed = 0;
};

// One scheduling round: availability draw, local updates and reports,
// instance construction, solve, aggregation, estimator updates, metrics.
// Round 0 (and any round before the first aggregation) schedules by best
// channel, after which the gradient-heterogeneity estimate exists.
RoundMetrics run_round(TrainState& state, const RoundEnv& env,
                       std::span<const LinkState> snapshot);

}  // namespace fedcgd
