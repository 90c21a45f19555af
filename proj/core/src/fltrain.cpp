#include "fedcgd/fltrain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fedcgd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
// Devices closer than this (L1) to the global distribution carry no
// heterogeneity signal for the ratio estimate.
constexpr double kDistGapEps = 1e-9;

Eigen::MatrixXd augment(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd aug(x.rows(), x.cols() + 1);
  aug.leftCols(x.cols()) = x;
  aug.col(x.cols()).setOnes();
  return aug;
}

struct Forward {
  Eigen::MatrixXd probs;  // batch x classes
  double loss = 0.0;
};

Forward forward_softmax(const ModelParams& model, const Eigen::MatrixXd& aug_x,
                        std::span<const int> y) {
  Forward fw;
  Eigen::MatrixXd z = aug_x * model.weights.transpose();
  const Eigen::VectorXd row_max = z.rowwise().maxCoeff();
  z.colwise() -= row_max;
  fw.probs = z.array().exp();
  const Eigen::VectorXd row_sum = fw.probs.rowwise().sum();
  fw.probs.array().colwise() /= row_sum.array();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    loss += std::log(row_sum[i]) - z(i, y[static_cast<std::size_t>(i)]);
  }
  fw.loss = loss / static_cast<double>(z.rows());
  return fw;
}

struct BatchPass {
  double loss = 0.0;
  Eigen::MatrixXd grad;
  double sigma_hat = 0.0;
};

// Gradient of the batch mean loss plus the per-sample gradient spread.
// Per-sample gradients are rank one (error outer input), so their squared
// norms factor and never need materializing.
BatchPass batch_pass(const ModelParams& model, const Eigen::MatrixXd& batch_x,
                     std::span<const int> batch_y) {
  const Eigen::MatrixXd aug = augment(batch_x);
  Forward fw = forward_softmax(model, aug, batch_y);
  const Eigen::Index b = aug.rows();
  Eigen::MatrixXd err = fw.probs;
  for (Eigen::Index i = 0; i < b; ++i) err(i, batch_y[static_cast<std::size_t>(i)]) -= 1.0;

  BatchPass out;
  out.loss = fw.loss;
  out.grad = (err.transpose() * aug) / static_cast<double>(b);

  double mean_sq = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    mean_sq += err.row(i).squaredNorm() * aug.row(i).squaredNorm();
  }
  mean_sq /= static_cast<double>(b);
  const double var = mean_sq - out.grad.squaredNorm();
  out.sigma_hat = std::sqrt(std::max(0.0, var));
  return out;
}

std::vector<int> draw_batch(const DeviceDataset& device, int batch, Rng& rng) {
  const int n = device.size();
  std::vector<int> ids;
  ids.reserve(static_cast<std::size_t>(batch));
  if (n >= batch) {
    for (int k : rng.sample_without_replacement(n, batch)) {
      ids.push_back(device.sample_ids[static_cast<std::size_t>(k)]);
    }
  } else {
    for (int i = 0; i < batch; ++i) {
      ids.push_back(device.sample_ids[rng.below(static_cast<std::uint64_t>(n))]);
    }
  }
  return ids;
}

Eigen::MatrixXd gather_rows(const Dataset& pool, std::span<const int> ids) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(ids.size()), pool.features.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = pool.features.row(ids[i]);
  }
  return x;
}

}  // namespace

ModelParams zero_model(int num_classes, int feature_dim) {
  return ModelParams{Eigen::MatrixXd::Zero(num_classes, feature_dim + 1)};
}

void validate(const Hyperparams& hp) {
  if (!(hp.eta > 0.0)) throw std::invalid_argument("Hyperparams: eta must be > 0");
  if (hp.tau < 1) throw std::invalid_argument("Hyperparams: tau must be >= 1");
  if (hp.batch < 1) throw std::invalid_argument("Hyperparams: batch must be >= 1");
  if (hp.rounds < 1) throw std::invalid_argument("Hyperparams: rounds must be >= 1");
}

LossGrad loss_and_grad(const ModelParams& model, const Eigen::MatrixXd& batch_x,
                       std::span<const int> batch_y) {
  if (batch_x.rows() == 0) throw std::invalid_argument("loss_and_grad: empty batch");
  if (batch_x.rows() != static_cast<Eigen::Index>(batch_y.size())) {
    throw std::invalid_argument("loss_and_grad: feature/label count mismatch");
  }
  BatchPass pass = batch_pass(model, batch_x, batch_y);
  return LossGrad{pass.loss, std::move(pass.grad)};
}

LocalResult local_update(const ModelParams& start, const Dataset& pool,
                         const DeviceDataset& device, const Hyperparams& hp, Rng& rng) {
  if (device.size() < 1) throw std::invalid_argument("local_update: device has no samples");
  LocalResult result;
  result.model = start;
  std::vector<double> label_counts(static_cast<std::size_t>(pool.num_classes), 0.0);
  int sampled_total = 0;
  std::vector<int> label_buf;
  for (int t = 0; t < hp.tau; ++t) {
    const std::vector<int> ids = draw_batch(device, hp.batch, rng);
    const Eigen::MatrixXd x = gather_rows(pool, ids);
    label_buf.clear();
    for (int id : ids) {
      const int y = pool.labels[static_cast<std::size_t>(id)];
      label_buf.push_back(y);
      label_counts[static_cast<std::size_t>(y)] += 1.0;
      ++sampled_total;
    }
    BatchPass pass = batch_pass(result.model, x, label_buf);
    if (t == 0) {
      result.first_batch_loss = pass.loss;
      result.sigma_hat = pass.sigma_hat;
    }
    result.model.weights -= hp.eta * pass.grad;
  }
  if (sampled_total > 0) {
    for (double& c : label_counts) c /= static_cast<double>(sampled_total);
    result.sampled_dist.probs = std::move(label_counts);
  } else {
    result.sampled_dist = device.label_dist;
  }
  return result;
}

ModelParams aggregate(std::span<const ModelParams> models, std::span<const int> sizes) {
  if (models.empty() || models.size() != sizes.size()) {
    throw std::invalid_argument("aggregate: need matching non-empty models and sizes");
  }
  double total = 0.0;
  for (int s : sizes) {
    if (s < 1) throw std::invalid_argument("aggregate: sizes must be >= 1");
    total += static_cast<double>(s);
  }
  ModelParams out;
  out.weights = Eigen::MatrixXd::Zero(models[0].weights.rows(), models[0].weights.cols());
  for (std::size_t i = 0; i < models.size(); ++i) {
    out.weights += (static_cast<double>(sizes[i]) / total) * models[i].weights;
  }
  return out;
}

double sigma_hat_from_grads(std::span<const Eigen::MatrixXd> grads) {
  if (grads.size() < 2) throw std::invalid_argument("sigma_hat_from_grads: need >= 2 samples");
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(grads[0].rows(), grads[0].cols());
  for (const auto& g : grads) mean += g;
  mean /= static_cast<double>(grads.size());
  double sq = 0.0;
  for (const auto& g : grads) sq += (g - mean).squaredNorm();
  return std::sqrt(sq / static_cast<double>(grads.size()));
}

double sigma_hat_global(std::span<const double> sigma_v, std::span<const int> sizes) {
  if (sigma_v.empty() || sigma_v.size() != sizes.size()) {
    throw std::invalid_argument("sigma_hat_global: need matching non-empty inputs");
  }
  double total = 0.0;
  for (int s : sizes) total += static_cast<double>(s);
  double acc = 0.0;
  for (std::size_t i = 0; i < sigma_v.size(); ++i) {
    acc += (static_cast<double>(sizes[i]) / total) * sigma_v[i] * sigma_v[i];
  }
  return std::sqrt(acc);
}

Eigen::MatrixXd pseudo_gradient(const ModelParams& before, const ModelParams& after,
                                double eta, int tau) {
  if (!(eta > 0.0) || tau < 1) {
    throw std::invalid_argument("pseudo_gradient: need eta > 0 and tau >= 1");
  }
  return (after.weights - before.weights) / (eta * static_cast<double>(tau));
}

namespace {

Eigen::MatrixXd weighted_mean(std::span<const Eigen::MatrixXd> mats,
                              std::span<const int> sizes) {
  double total = 0.0;
  for (int s : sizes) total += static_cast<double>(s);
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(mats[0].rows(), mats[0].cols());
  for (std::size_t i = 0; i < mats.size(); ++i) {
    mean += (static_cast<double>(sizes[i]) / total) * mats[i];
  }
  return mean;
}

}  // namespace

double estimate_g_scalar(std::span<const Eigen::MatrixXd> pseudo_grads,
                         std::span<const int> sizes,
                         std::span<const ClassDistribution> dists,
                         const ClassDistribution& global, double previous) {
  if (pseudo_grads.empty() || pseudo_grads.size() != sizes.size() ||
      pseudo_grads.size() != dists.size()) {
    throw std::invalid_argument("estimate_g_scalar: input size mismatch");
  }
  const Eigen::MatrixXd mean = weighted_mean(pseudo_grads, sizes);
  double best = 0.0;
  for (std::size_t i = 0; i < pseudo_grads.size(); ++i) {
    const double gap = l1_distance(dists[i], global);
    if (gap < kDistGapEps) continue;
    best = std::max(best, (pseudo_grads[i] - mean).norm() / gap);
  }
  return best > 0.0 ? best : previous;
}

std::vector<double> estimate_g_per_class(std::span<const Eigen::MatrixXd> pseudo_grads,
                                         std::span<const int> sizes,
                                         std::span<const ClassDistribution> dists,
                                         const ClassDistribution& global,
                                         std::span<const double> previous) {
  if (pseudo_grads.empty() || pseudo_grads.size() != sizes.size() ||
      pseudo_grads.size() != dists.size()) {
    throw std::invalid_argument("estimate_g_per_class: input size mismatch");
  }
  std::vector<double> out(previous.begin(), previous.end());
  std::vector<double> best(previous.size(), 0.0);
  const Eigen::MatrixXd mean = weighted_mean(pseudo_grads, sizes);
  for (std::size_t i = 0; i < pseudo_grads.size(); ++i) {
    const double gap = l1_distance(dists[i], global);
    if (gap < kDistGapEps) continue;
    const auto& p = dists[i].probs;
    const std::size_t dominant = static_cast<std::size_t>(
        std::max_element(p.begin(), p.end()) - p.begin());
    best[dominant] = std::max(best[dominant], (pseudo_grads[i] - mean).norm() / gap);
  }
  for (std::size_t c = 0; c < out.size(); ++c) {
    if (best[c] > 0.0) out[c] = best[c];
  }
  return out;
}

double evaluate(const ModelParams& model, const Dataset& test) {
  if (test.size() == 0) throw std::domain_error("evaluate: empty test set");
  const Eigen::MatrixXd scores = augment(test.features) * model.weights.transpose();
  int correct = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index pred;
    scores.row(i).maxCoeff(&pred);
    if (static_cast<int>(pred) == test.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

TrainState init_train_state(int num_classes, int feature_dim, int num_devices,
                            bool per_class_g) {
  TrainState state;
  state.global_model = zero_model(num_classes, feature_dim);
  if (per_class_g) state.g_hat_per_class.assign(static_cast<std::size_t>(num_classes), 1.0);
  state.accumulated_loss.assign(static_cast<std::size_t>(num_devices), 0.0);
  state.grad_norms.assign(static_cast<std::size_t>(num_devices), 0.0);
  return state;
}

RoundMetrics run_round(TrainState& state, const RoundEnv& env,
                       std::span<const LinkState> snapshot) {
  validate(env.hp);
  const int num_devices = static_cast<int>(env.devices->size());
  if (static_cast<int>(snapshot.size()) != num_devices) {
    throw std::invalid_argument("run_round: snapshot size mismatch");
  }

  RoundMetrics row;
  row.round = state.round;
  row.seed = env.seed;
  row.sigma_hat = state.sigma_hat;
  row.g_hat = state.g_hat;

  // 1) Availability draw, one stream per round.
  Rng avail_rng = Rng::derive(env.seed, stream::kAvailability, static_cast<std::uint64_t>(state.round));
  std::vector<int> available;
  for (int v = 0; v < num_devices; ++v) {
    if (avail_rng.bernoulli(env.availability)) available.push_back(v);
  }
  row.available = static_cast<int>(available.size());

  // 2) Local updates and per-device reports for every available device.
  std::vector<ModelParams> local_models(available.size());
  std::vector<Eigen::MatrixXd> pseudo(available.size());
  std::vector<double> sigma_v(available.size());
  std::vector<int> dev_sizes(available.size());
  std::vector<ClassDistribution> reported_dists(available.size());
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < available.size(); ++i) {
    const int v = available[i];
    Rng local_rng = Rng::derive(env.seed, stream::kLocalUpdate,
                                static_cast<std::uint64_t>(state.round),
                                static_cast<std::uint64_t>(v));
    LocalResult lr = local_update(state.global_model, *env.train,
                                  (*env.devices)[static_cast<std::size_t>(v)], env.hp, local_rng);
    pseudo[i] = pseudo_gradient(state.global_model, lr.model, env.hp.eta, env.hp.tau);
    sigma_v[i] = lr.sigma_hat;
    dev_sizes[i] = (*env.devices)[static_cast<std::size_t>(v)].size();
    reported_dists[i] = std::move(lr.sampled_dist);
    state.accumulated_loss[static_cast<std::size_t>(v)] += lr.first_batch_loss;
    state.grad_norms[static_cast<std::size_t>(v)] = pseudo[i].norm();
    loss_sum += lr.first_batch_loss;
    local_models[i] = std::move(lr.model);
  }
  row.train_loss = available.empty() ? kNan : loss_sum / static_cast<double>(available.size());

  std::vector<int> scheduled_local;  // indices into `available`
  ProblemInstance inst;

  if (!available.empty()) {
    // 3) Sampling-variance estimate over the reporting devices.
    const double sigma_raw = sigma_hat_global(sigma_v, dev_sizes);
    state.sigma_hat = env.smoothing > 0.0 && state.round > 0
                          ? env.smoothing * state.sigma_hat + (1.0 - env.smoothing) * sigma_raw
                          : sigma_raw;

    // 4) Scheduling problem over the available devices.
    inst.total_bandwidth_hz = env.channel.total_bandwidth_hz;
    inst.global_dist = env.global_dist;
    inst.params.sigma = state.sigma_hat;
    inst.params.batch_size = env.hp.batch;
    const int C = env.global_dist.num_classes();
    if (env.per_class_g && state.g_ready) {
      inst.params.class_weights = state.g_hat_per_class;
    } else {
      inst.params.class_weights.assign(static_cast<std::size_t>(C), state.g_hat);
    }
    std::vector<double> gains, norms, losses;
    for (std::size_t i = 0; i < available.size(); ++i) {
      const int v = available[i];
      // Devices advertise the label mix of the samples this round's local
      // pass actually used, so the WEMD target and the heterogeneity ratio
      // below see the same distributions.
      inst.device_dists.push_back(reported_dists[i]);
      inst.min_bandwidths.push_back(snapshot[static_cast<std::size_t>(v)].min_bandwidth_hz);
      gains.push_back(snapshot[static_cast<std::size_t>(v)].avg_gain);
      norms.push_back(state.grad_norms[static_cast<std::size_t>(v)]);
      losses.push_back(state.accumulated_loss[static_cast<std::size_t>(v)]);
    }

    // The heterogeneity weight needs one aggregation round of pseudo
    // gradients; until then schedule by best channel.
    const SolverKind solver = state.g_ready ? env.solver : SolverKind::kBestChannel;
    Rng solver_rng = Rng::derive(env.seed, stream::kSolver, static_cast<std::uint64_t>(state.round));
    SolveReport report = run_solver(solver, inst, gains, norms, losses, env.poc_subset, solver_rng);
    row.solver = report.solver_name;
    scheduled_local = report.schedule.members;
    row.scheduled = static_cast<int>(scheduled_local.size());
    row.bandwidth_used_hz = report.schedule.bandwidth_used_hz;
    row.sigma_hat = state.sigma_hat;
    row.g_hat = env.per_class_g && state.g_ready
                    ? *std::max_element(state.g_hat_per_class.begin(), state.g_hat_per_class.end())
                    : state.g_hat;
  } else {
    row.solver = solver_name(env.solver);
  }

  if (scheduled_local.empty()) {
    // Skipped round: keep the model, flag via scheduled = 0.
    row.wemd = kNan;
    row.variance_term = kInf;
    row.objective = kInf;
    row.test_acc = evaluate(state.global_model, *env.test);
    ++state.round;
    return row;
  }

  row.wemd = wemd_of(scheduled_local, inst);
  row.variance_term = variance_term(static_cast<int>(scheduled_local.size()), inst.params);
  row.objective = row.variance_term + row.wemd;

  // 5) Aggregate the scheduled devices' models.
  std::vector<ModelParams> sched_models;
  std::vector<Eigen::MatrixXd> sched_pseudo;
  std::vector<int> sched_sizes;
  std::vector<ClassDistribution> sched_dists;
  for (int i : scheduled_local) {
    sched_models.push_back(local_models[static_cast<std::size_t>(i)]);
    sched_pseudo.push_back(pseudo[static_cast<std::size_t>(i)]);
    sched_sizes.push_back(dev_sizes[static_cast<std::size_t>(i)]);
    sched_dists.push_back(inst.device_dists[static_cast<std::size_t>(i)]);
  }
  state.global_model = aggregate(sched_models, sched_sizes);

  // 6) Heterogeneity estimate from the uploaded pseudo gradients.
  const double g_raw = estimate_g_scalar(sched_pseudo, sched_sizes, sched_dists,
                                         env.global_dist, state.g_hat);
  state.g_hat = env.smoothing > 0.0 && state.g_ready
                    ? env.smoothing * state.g_hat + (1.0 - env.smoothing) * g_raw
                    : g_raw;
  if (env.per_class_g) {
    // Bootstrap: on the first aggregation round every class starts from
    // the scalar estimate, then covered classes get their own value.
    if (!state.g_ready) {
      state.g_hat_per_class.assign(state.g_hat_per_class.size(), state.g_hat);
    }
    std::vector<double> per_class = estimate_g_per_class(
        sched_pseudo, sched_sizes, sched_dists, env.global_dist, state.g_hat_per_class);
    if (env.smoothing > 0.0 && state.g_ready) {
      for (std::size_t c = 0; c < per_class.size(); ++c) {
        per_class[c] = env.smoothing * state.g_hat_per_class[c] +
                       (1.0 - env.smoothing) * per_class[c];
      }
    }
    state.g_hat_per_class = std::move(per_class);
  }
  state.g_ready = true;

  row.test_acc = evaluate(state.global_model, *env.test);
  ++state.round;
  return row;
}

}  // namespace fedcgd
