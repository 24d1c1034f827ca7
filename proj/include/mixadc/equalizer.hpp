// SPDX-License-Identifier: Apache-2.0
//
// Optimal linear frequency-domain equalizer and the resulting GMI.
//
// With g and D from secondstats, the equalizer maximizing
//   Delta(w) = |w^H g|^2 / (Q E_s w^H D w)
// is w = D^{-1} g, and Delta(w_opt) = g^H D^{-1} g / (Q E_s) = a_opt.
// Rates are computed in nats; *_bits fields divide by log 2.

#pragma once

#include "mixadc/common.hpp"
#include "mixadc/secondstats.hpp"
#include "mixadc/spectral.hpp"

#include <span>
#include <string>
#include <vector>

namespace mixadc {

/// perm[n * Q + q] = q * N + n: antenna-major position -> subcarrier-major
/// position. Under this reordering D becomes Q diagonal blocks of size N x N.
std::vector<int> find_permutation(int n_antennas, int n_subcarriers);

/// P^T A P for a dense NQ x NQ matrix, using find_permutation's ordering.
cmat permute_dense(const cmat& a, std::span<const int> perm);

/// w = D^{-1} g through Q independent N x N Cholesky solves. Throws
/// SolverError with the subcarrier index if a block is not positive definite.
cvec solve_equalizer(const BlockDiagonalMatrix& d, const cvec& g);

/// Reference solve on the dense NQ x NQ matrix (partial-pivot LU).
cvec dense_solve(const BlockDiagonalMatrix& d, const cvec& g);

/// Dense explicit inverse followed by a product. Only used for timing.
cvec dense_inverse_solve(const BlockDiagonalMatrix& d, const cvec& g);

enum class GmiMethod { General, AllHighRes, Flat, BoundLower, BoundUpper };
std::string to_string(GmiMethod method);

struct GmiReport {
  double delta = 0.0;
  double gmi_nats = 0.0;
  double gmi_bits = 0.0;
  cplx a_opt = 0.0;
  GmiMethod method = GmiMethod::General;
  bool clipped = false;  // delta was pulled down to 1 - 1e-15
};

/// Builds a report from a raw delta. Values in [1 - 1e-15, 1 + 1e-9] are
/// clipped and flagged; anything beyond, or negative beyond roundoff, throws
/// NumericalIntegrityError.
GmiReport report_from_delta(double delta, GmiMethod method = GmiMethod::General);

inline double nats_to_bits(double nats) { return nats / std::log(2.0); }

/// -log(1 - delta), guarded the same way as report_from_delta.
double gmi_from_delta(double delta);

/// Delta(w_opt) = g^H D^{-1} g / (Q E_s).
GmiReport delta_gmi(const BlockDiagonalMatrix& d, const cvec& g, int n_subcarriers, double symbol_energy);

/// Delta(w) for an arbitrary equalizer, as a generalized Rayleigh quotient.
double delta_of_weights(const BlockDiagonalMatrix& d, const cvec& g, const cvec& w, int n_subcarriers,
                        double symbol_energy);

/// Static-channel GMI of user `user` for the given ADCs.
GmiReport gmi_static(const ChannelSet& channels, std::span<const AdcSpec> specs, double symbol_energy,
                     int user = 0);
GmiReport gmi_static(const ChannelSet& channels, const AdcSwitchVector& delta, double symbol_energy,
                     int user = 0);

struct HighResReport {
  GmiReport gmi;
  double capacity_nats = 0.0;
  double capacity_bits = 0.0;
};

/// All antennas high-resolution, single user:
///   gmi = -log(mean_q 1 / (1 + E_s sum_n |lambda_nq|^2))
///   capacity = mean_q log(1 + E_s sum_n |lambda_nq|^2)
HighResReport gmi_all_highres(std::span<const cvec> spectra, double symbol_energy);

/// Sum capacity over users divided by U, in nats:
///   (1 / (U Q)) sum_q log det(I + E_s H_q H_q^H),  H_q = [lambda_nq^u]_{n,u}.
double per_user_capacity(const ChannelSet& channels, double symbol_energy);

/// Frequency-flat special case: Delta = nu^H E^{-1} nu / E_s with the N x N
/// matrix E and vector nu built from the scalar gains h_n.
GmiReport gmi_flat_fading(std::span<const cplx> h, const AdcSwitchVector& delta, double symbol_energy);

/// Rejects channels with more than one nonzero tap and returns the scalars.
std::vector<cplx> flat_gains(const ChannelSet& channels, int user = 0);

struct LowSnrSlope {
  double gmi = 0.0;       // (1/Q) sum_n (delta_n + (1 - delta_n) 2/pi) ||lambda_n||^2
  double capacity = 0.0;  // (1/Q) sum_n ||lambda_n||^2
};
LowSnrSlope low_snr_slope(std::span<const cvec> spectra, const AdcSwitchVector& delta);

/// Limit of Delta(w_opt) as E_s -> infinity with every antenna one-bit.
double high_snr_limit(std::span<const cvec> spectra);

/// Spectra of one user as a flat list, in antenna order.
std::vector<cvec> user_spectra(const ChannelSet& channels, int user = 0);

}  // namespace mixadc
