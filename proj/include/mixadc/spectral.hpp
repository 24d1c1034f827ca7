// SPDX-License-Identifier: Apache-2.0
//
// Unitary DFT algebra, multipath channel generation, circulant decomposition
// and the estimate/error split used for imperfect CSI.
//
// Convention: the forward DFT is F x with (F)_{pq} = exp(-j 2 pi p q / Q) / sqrt(Q),
// so F F^H = I. A channel with zero-padded taps h has frequency response
// lambda = sqrt(Q) F h, and its circulant matrix satisfies C = F^H diag(lambda) F.

#pragma once

#include "mixadc/common.hpp"

#include <span>
#include <vector>

namespace mixadc {

struct SystemConfig {
  int n_antennas = 1;     // N
  int n_highres = 0;      // K
  int n_subcarriers = 1;  // Q
  int n_users = 1;        // U
  // Tap count per user. A single entry applies to all users.
  std::vector<int> n_taps{1};
  double symbol_energy = 1.0;  // E_s, noise variance fixed to 1
  double mse_h = 0.0;          // sigma_h^2
  int coherence_len = 1;       // T_c, in OFDM symbols
  int pilot_spacing = 1;       // N_s

  int taps_for(int user) const;
  int max_taps() const;
  /// Throws InvalidArgument on any violated constraint.
  void validate() const;
};

/// Time-domain taps and frequency responses for every (user, antenna) pair.
class ChannelSet {
 public:
  ChannelSet() = default;
  /// `taps[u][n]` must all have the same length Q (zero padded).
  explicit ChannelSet(std::vector<std::vector<cvec>> taps);

  int n_users() const { return static_cast<int>(taps_.size()); }
  int n_antennas() const { return taps_.empty() ? 0 : static_cast<int>(taps_[0].size()); }
  int n_subcarriers() const { return q_; }

  const cvec& taps(int user, int antenna) const { return taps_[user][antenna]; }
  const cvec& spectrum(int user, int antenna) const { return spectra_[user][antenna]; }

  /// sum_v ||lambda_n^v||^2
  double spectral_energy(int antenna) const;
  /// sum_v ||h_n^v||^2
  double tap_energy(int antenna) const;

  /// Channel seen by a subset of the antennas, in the given order.
  ChannelSet restrict_to(std::span<const int> antennas) const;

  const std::vector<std::vector<cvec>>& all_taps() const { return taps_; }

 private:
  int q_ = 0;
  std::vector<std::vector<cvec>> taps_;
  std::vector<std::vector<cvec>> spectra_;
};

struct CsiSplit {
  ChannelSet estimate;
  ChannelSet error;
};

cvec unitary_dft(const cvec& x);
cvec unitary_idft(const cvec& x);

/// lambda = sqrt(Q) F h.
cvec taps_to_spectrum(const cvec& taps);
/// h = F^H lambda / sqrt(Q); inverse of taps_to_spectrum.
cvec spectrum_to_taps(const cvec& spectrum);

/// Q x Q circulant whose first column is `taps`.
cmat circulant_from_taps(const cvec& taps);

/// Dense unitary DFT matrix, for oracles and the dense reference paths.
cmat dft_matrix(int q);

/// I.i.d. Rayleigh taps h_t ~ CN(0, 1/T^u) for every user and antenna.
ChannelSet draw_channel(const SystemConfig& config, Rng& rng);

/// Splits a channel into an MMSE estimate and an independent error with
/// per-tap variances (1 - mse)/T and mse/T. The pair is drawn jointly
/// given h: the error is the residual of the Gaussian conditional draw, so
/// estimate + error == h exactly.
CsiSplit split_csi(const ChannelSet& channel, double mse, Rng& rng);

}  // namespace mixadc
