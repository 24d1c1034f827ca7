// SPDX-License-Identifier: Apache-2.0
//
// Block-fading channels: training overhead, statistics conditioned on the
// channel estimate, and lower/upper GMI bounds over channel draws.
//
//   lower = rho * (-log(1 - E[Delta]))
//   upper = rho * E[-log(1 - Delta)]
//
// Delta is evaluated per draw with g and D averaged over the estimation
// error. Jensen gives lower <= upper.

#pragma once

#include "mixadc/common.hpp"
#include "mixadc/secondstats.hpp"
#include "mixadc/spectral.hpp"
#include "mixadc/switching.hpp"

#include <optional>
#include <span>
#include <vector>

namespace mixadc {

/// Training symbols: ceil(N / K) * ceil(U / N_s). K = 0 is rejected.
int training_length(int n_antennas, int n_highres, int n_users, int pilot_spacing);

/// rho = (T_c - training_length) / T_c; throws if rho <= 0.
double training_overhead(int n_antennas, int n_highres, int n_users, int pilot_spacing, int coherence_len);

struct ConditionalOptions {
  int mc_samples = 64;
  /// Plug E[Y | h_hat] into the closed forms instead of averaging g and D
  /// over error draws. Cheaper; not exact for the one-bit terms.
  bool approximate = false;
};

/// E[g^u | h_hat] for every user and E[D | h_hat]. `taps_per_user` gives the
/// support length T^u of the estimation error.
QuantizedStats conditional_stats(const ChannelSet& estimate, std::span<const int> taps_per_user, double mse_h,
                                 std::span<const AdcSpec> specs, double symbol_energy,
                                 const ConditionalOptions& options, Rng& rng);

struct ErgodicOptions {
  ConditionalOptions conditional;
  std::optional<double> rho_override;
  /// Kind of ADC used where the switch vector is 0 (one-bit by default).
  AdcSpec low_res = AdcSpec::one_bit();
  /// Keep only the selected antennas, all high-resolution (antenna selection).
  bool antenna_selection = false;
  /// Also record the per-user capacity of the true channel on every draw.
  bool with_capacity = false;
  int threads = 1;
};

struct ErgodicReport {
  double lower = 0.0;  // nats, averaged over users
  double upper = 0.0;
  double lower_se = 0.0;
  double upper_se = 0.0;
  double rho = 1.0;
  int n_draws = 0;
  std::vector<double> lower_per_user;
  std::vector<double> upper_per_user;
  /// deltas[d * U + u]
  std::vector<double> deltas;
  /// Mean per-user capacity of the true channel (not scaled by rho); NaN
  /// unless requested.
  double capacity = 0.0;
  double capacity_se = 0.0;
};

struct BoundEstimate {
  double lower = 0.0;
  double upper = 0.0;
  double lower_se = 0.0;  // delta method on the mean of Delta
  double upper_se = 0.0;
};

/// Both bounds for one user from per-draw Delta values (at least two).
BoundEstimate bounds_from_deltas(std::span<const double> deltas, double rho);

/// Draw `n_draws` channels with seeds derived from `seed`, choose the switch
/// vector on the channel estimate, and form both bounds. The result depends
/// only on (config, policy, options, seed), not on the thread count.
ErgodicReport ergodic_bounds(const SystemConfig& config, const SwitchPolicy& policy, int n_draws,
                             const ErgodicOptions& options, std::uint64_t seed);

}  // namespace mixadc
