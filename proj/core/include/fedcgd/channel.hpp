#pragma once

#include <optional>

namespace fedcgd {

// Uplink radio parameters for one cell. Powers are linear (W, W/Hz) with
// the receiver noise figure already folded into noise_psd_w_per_hz.
struct ChannelParams {
  double carrier_freq_ghz = 3.5;
  double total_bandwidth_hz = 20e6;
  double tx_power_w = 0.1995262314968880;        // 23 dBm
  double noise_psd_w_per_hz = 1.584893192461114e-20;  // -174 dBm/Hz + 6 dB NF
  double deadline_s = 2.0;
  double model_bits = 2e7;
  double cell_radius_m = 250.0;
  double device_antenna_m = 1.5;
  double bs_antenna_m = 10.0;
  double shadow_std_los_db = 4.0;
  double shadow_std_nlos_db = 8.2;
};

// Throws std::invalid_argument when a field is non-positive or non-finite.
void validate(const ChannelParams& params);

double dbm_to_watts(double dbm);
double db_to_linear(double db);

// One device's radio link for a round. min_bandwidth_hz is empty exactly
// when no finite bandwidth can meet the upload deadline.
struct LinkState {
  double d2d_m = 0.0;
  double d3d_m = 0.0;
  bool is_los = false;
  double shadow_db = 0.0;
  double avg_gain = 0.0;
  std::optional<double> min_bandwidth_hz;
};

// UMi street-canyon LOS probability; 1 for all distances up to 18 m.
double los_probability(double d2d_m);

// UMi street-canyon path loss in dB (f in GHz, distance in m).
double path_loss_db(double d3d_m, double f_ghz, bool is_los);

// Linear gain from path loss plus shadow fading, both in dB.
double avg_channel_gain(double pl_db, double shadow_db);

// Shannon rate of an AWGN link over bw_hz of spectrum, bits/s.
double transmission_rate(double bw_hz, double gain, const ChannelParams& params);

// Seconds to push model_bits through rate_bps; empty when rate is not positive.
std::optional<double> upload_latency(double model_bits, double rate_bps);

// Lower real branch of the Lambert W function on [-1/e, 0); w * e^w = x
// with w <= -1. Residual is within 1e-12 relative of x.
double lambert_w_m1(double x);

// Dimensionless feasibility parameter of the deadline constraint; the link
// can meet the deadline with finite bandwidth iff this is < 1.
double feasibility_gamma(double gain, const ChannelParams& params);

// Smallest bandwidth that uploads model_bits within the deadline, or empty
// when infeasible. The deadline constraint holds with equality at the
// returned value. The lower W branch is required here: the principal branch
// returns -gamma itself and zeroes the denominator.
std::optional<double> min_bandwidth(double gain, const ChannelParams& params);

// Full per-device link derivation: 3-D distance from the antenna-height
// difference, path loss, gain, and minimum bandwidth.
LinkState make_link_state(double d2d_m, bool is_los, double shadow_db,
                          const ChannelParams& params);

}  // namespace fedcgd
