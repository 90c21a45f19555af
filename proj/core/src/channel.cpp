#include "fedcgd/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace fedcgd {

namespace {
constexpr double kLn2 = 0.6931471805599453;

void require_finite_positive(double v, const char* name) {
  if (!std::isfinite(v) || v <= 0.0) {
    throw std::invalid_argument(std::string("ChannelParams: ") + name +
                                " must be finite and positive");
  }
}
}  // namespace

void validate(const ChannelParams& p) {
  require_finite_positive(p.carrier_freq_ghz, "carrier_freq_ghz");
  require_finite_positive(p.total_bandwidth_hz, "total_bandwidth_hz");
  require_finite_positive(p.tx_power_w, "tx_power_w");
  require_finite_positive(p.noise_psd_w_per_hz, "noise_psd_w_per_hz");
  require_finite_positive(p.deadline_s, "deadline_s");
  require_finite_positive(p.model_bits, "model_bits");
  require_finite_positive(p.cell_radius_m, "cell_radius_m");
  require_finite_positive(p.device_antenna_m, "device_antenna_m");
  require_finite_positive(p.bs_antenna_m, "bs_antenna_m");
  require_finite_positive(p.shadow_std_los_db, "shadow_std_los_db");
  require_finite_positive(p.shadow_std_nlos_db, "shadow_std_nlos_db");
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double los_probability(double d2d_m) {
  if (!(d2d_m > 0.0)) throw std::domain_error("los_probability: distance must be positive");
  if (d2d_m <= 18.0) return 1.0;
  const double p = 18.0 / d2d_m + std::exp(-d2d_m / 36.0) * (1.0 - 18.0 / d2d_m);
  return std::min(1.0, std::max(0.0, p));
}

double path_loss_db(double d3d_m, double f_ghz, bool is_los) {
  if (!(d3d_m > 0.0) || !(f_ghz > 0.0)) {
    throw std::domain_error("path_loss_db: distance and frequency must be positive");
  }
  const double dist_coeff = is_los ? 21.0 : 31.9;
  return 32.4 + dist_coeff * std::log10(d3d_m) + 20.0 * std::log10(f_ghz);
}

double avg_channel_gain(double pl_db, double shadow_db) {
  return std::pow(10.0, -(pl_db + shadow_db) / 10.0);
}

double transmission_rate(double bw_hz, double gain, const ChannelParams& params) {
  if (!(bw_hz > 0.0)) throw std::domain_error("transmission_rate: bandwidth must be positive");
  if (!(gain > 0.0)) throw std::domain_error("transmission_rate: gain must be positive");
  const double snr = params.tx_power_w * gain / (bw_hz * params.noise_psd_w_per_hz);
  return bw_hz * std::log2(1.0 + snr);
}

std::optional<double> upload_latency(double model_bits, double rate_bps) {
  if (!(rate_bps > 0.0)) return std::nullopt;
  return model_bits / rate_bps;
}

double lambert_w_m1(double x) {
  const double branch_point = -std::exp(-1.0);
  if (!(x >= branch_point) || !(x < 0.0)) {
    throw std::domain_error("lambert_w_m1: x must lie in [-1/e, 0)");
  }
  if (x == branch_point) return -1.0;

  // Initial guess: series around the branch point when close to it,
  // otherwise the L1 - L2 + L2/L1 asymptotic toward 0-.
  double w;
  if (x > -0.27) {
    const double l1 = std::log(-x);
    const double l2 = std::log(-l1);
    w = l1 - l2 + l2 / l1;
  } else {
    const double p = -std::sqrt(2.0 * (1.0 + std::exp(1.0) * x));
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  }
  if (w > -1.0) w = -1.0 - 1e-12;

  // Bracket the root: w*e^w is increasing toward 0- as w -> -inf, so
  // f(-1) <= 0 and f -> -x > 0 far left.
  double hi = -1.0;
  double lo = std::min(w * 2.0, -2.0);
  while (lo * std::exp(lo) - x < 0.0 && lo > -745.0) lo *= 2.0;

  // Halley iterations with a bisection fallback whenever a step leaves
  // the bracket.
  for (int it = 0; it < 100; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    if (std::abs(f) <= 1e-13 * std::abs(x)) break;
    const double fp = ew * (w + 1.0);
    const double step_den = fp - (w + 2.0) * f / (2.0 * w + 2.0);
    double next = w - f / step_den;
    if (!(next > lo) || !(next < hi) || !std::isfinite(next)) {
      next = 0.5 * (lo + hi);
    }
    // f decreases in w on (-inf, -1]: positive residual means w is left
    // of the root.
    if (f > 0.0) lo = w; else hi = w;
    if (next == w) break;
    w = next;
  }
  return w;
}

double feasibility_gamma(double gain, const ChannelParams& params) {
  if (!(gain > 0.0)) throw std::domain_error("feasibility_gamma: gain must be positive");
  return params.noise_psd_w_per_hz * params.model_bits * kLn2 /
         (params.deadline_s * params.tx_power_w * gain);
}

std::optional<double> min_bandwidth(double gain, const ChannelParams& params) {
  const double gamma = feasibility_gamma(gain, params);
  if (gamma >= 1.0) return std::nullopt;
  const double w = lambert_w_m1(-gamma * std::exp(-gamma));
  return -params.model_bits * kLn2 / (params.deadline_s * (w + gamma));
}

LinkState make_link_state(double d2d_m, bool is_los, double shadow_db,
                          const ChannelParams& params) {
  LinkState link;
  link.d2d_m = d2d_m;
  link.d3d_m = std::hypot(d2d_m, params.bs_antenna_m - params.device_antenna_m);
  link.is_los = is_los;
  link.shadow_db = shadow_db;
  const double pl = path_loss_db(link.d3d_m, params.carrier_freq_ghz, is_los);
  link.avg_gain = avg_channel_gain(pl, shadow_db);
  link.min_bandwidth_hz = min_bandwidth(link.avg_gain, params);
  return link;
}

}  // namespace fedcgd
