// SPDX-License-Identifier: Apache-2.0
//
// Second-order statistics of the mixed-ADC front end.
//
//   Y_nm = E[y_n y_m^H]   pre-quantization covariance, circulant
//   R_nm = E[r_n r_m^H]   post-quantization correlation
//   g_n^u                 cross-moment segment of user u
//   D                     N x N blocks, block (m, n) = diag(F R_nm F^H)
//
// Every closed-form R_nm is an elementwise map of a circulant matrix with
// constant diagonal, hence circulant itself. The default (circulant) path
// works on first columns only and reads diag(F R F^H) off as the spectrum of
// that column. The dense path builds the Q x Q matrices explicitly and keeps
// only the diagonal of F R F^H, reporting the largest discarded off-diagonal.

#pragma once

#include "mixadc/common.hpp"
#include "mixadc/quantizer.hpp"
#include "mixadc/spectral.hpp"

#include <optional>
#include <span>
#include <vector>

namespace mixadc {

/// N x N array of Q-dimensional diagonal blocks. block(i, j) holds the
/// diagonal of the block in block-row i and block-column j, so that
/// w^H D w = sum_ij w_i^H diag(block(i, j)) w_j.
class BlockDiagonalMatrix {
 public:
  BlockDiagonalMatrix() = default;
  BlockDiagonalMatrix(int n_blocks, int block_size);

  int n_blocks() const { return n_; }
  int block_size() const { return q_; }
  int dim() const { return n_ * q_; }

  cvec& block(int row, int col) { return blocks_[static_cast<std::size_t>(row) * n_ + col]; }
  const cvec& block(int row, int col) const { return blocks_[static_cast<std::size_t>(row) * n_ + col]; }

  /// Entry (row, col) of the NQ x NQ matrix (antenna-major indexing).
  cplx entry(int row, int col) const;
  cmat dense() const;
  /// D x for a stacked vector x = [x_1; ...; x_N].
  cvec multiply(const cvec& x) const;
  /// max |D - D^H| over all entries.
  double hermitian_defect() const;

  static BlockDiagonalMatrix identity(int n_blocks, int block_size);

 private:
  int n_ = 0;
  int q_ = 0;
  std::vector<cvec> blocks_;
};

/// Pre-quantization covariances for every antenna pair, stored as first
/// columns of the circulant Y_nm (multi-user: sum over users).
class PreQuantCov {
 public:
  PreQuantCov(const ChannelSet& channels, double symbol_energy);

  int n_antennas() const { return n_; }
  int n_subcarriers() const { return q_; }
  double symbol_energy() const { return es_; }

  /// First column of Y_nm.
  const cvec& generator(int n, int m) const { return gen_[static_cast<std::size_t>(n) * n_ + m]; }
  /// (Y_nn)_qq = 1 + E_s sum_v ||lambda_n^v||^2 / Q, the same for every q.
  double variance(int n) const { return var_[n]; }

  /// Adds `amount` to the diagonal of Y_nn (white, uncorrelated across
  /// antennas). Used for the expected covariance under channel errors.
  void add_white(int n, double amount);

 private:
  int n_ = 0;
  int q_ = 0;
  double es_ = 0.0;
  std::vector<cvec> gen_;
  std::vector<double> var_;
};

/// Dense Y_nm = [n == m] I + E_s sum_v C_n^v (C_m^v)^H from explicit circulants.
cmat prequant_cov(const ChannelSet& channels, double symbol_energy, int n, int m);

/// (Theta)_pq = (Y_nm)_pq / sqrt((Y_nn)_pp (Y_mm)_qq).
cmat corr_coeff(const cmat& y_nm, const cmat& y_nn, const cmat& y_mm);

/// Clamps a correlation part into [-1, 1]; beyond 1 + 1e-9 it throws
/// NumericalIntegrityError.
double clamp_correlation(double x);

/// (2/pi) [asin(theta_R) + j asin(theta_I)], elementwise.
cplx arcsine_law(cplx theta);
cmat arcsine_law(const cmat& theta);

/// One entry of R_nm from the matching entry of Y_nm and the two marginal
/// variances (Y_nn)_pp, (Y_mm)_qq. `same_sample` marks n == m and p == q.
cplx quantized_entry(cplx y_pq, double var_p, double var_q, const AdcSpec& spec_n, const AdcSpec& spec_m,
                     bool same_sample);

/// Dense R_nm by cases: both high-res, both quantized, or mixed.
cmat quantized_cov(int n, int m, std::span<const AdcSpec> specs, const ChannelSet& channels,
                   double symbol_energy);
cmat quantized_cov(int n, int m, const AdcSwitchVector& delta, const ChannelSet& channels,
                   double symbol_energy);

/// First column of the circulant R_nm.
cvec quantized_cov_generator(int n, int m, std::span<const AdcSpec> specs, const PreQuantCov& y);

struct MatrixEstimate {
  cmat value;
  cmat std_error;  // per entry, modulus of the complex standard error
  long n_samples = 0;
};

/// Monte Carlo E[r_n r_m^H] from joint draws of the user symbols and noise.
/// Standard errors by 16 batch means.
MatrixEstimate mc_quantized_cov(int n, int m, std::span<const AdcSpec> specs, const ChannelSet& channels,
                                double symbol_energy, long samples, Rng& rng);

enum class DPath { Circulant, Dense };

struct QuantizedStats {
  std::vector<cvec> g;  // one N*Q vector per user
  BlockDiagonalMatrix d;
  bool fast_path = true;
  /// Largest |off-diagonal| of F R_nm F^H seen by the dense path; empty for
  /// the circulant path, which never forms it.
  std::optional<double> max_offdiag;
};

/// g^u, segment n = alpha_n E_s conj(lambda_n^u), with alpha_n the Bussgang
/// gain of antenna n's ADC at input variance (Y_nn)_qq.
cvec build_g(const ChannelSet& channels, std::span<const AdcSpec> specs, double symbol_energy, int user);
cvec build_g(const ChannelSet& channels, const AdcSwitchVector& delta, double symbol_energy, int user);

/// g^u with the Bussgang gains taken at the variances stored in `y`.
cvec build_g(const ChannelSet& channels, std::span<const AdcSpec> specs, const PreQuantCov& y, int user);

/// D directly from a (possibly modified) set of pre-quantization covariances.
BlockDiagonalMatrix build_D(const PreQuantCov& y, std::span<const AdcSpec> specs);

/// D for the given per-antenna ADCs. Throws NumericalIntegrityError when a
/// subcarrier block is not positive definite.
BlockDiagonalMatrix build_D(const ChannelSet& channels, std::span<const AdcSpec> specs, double symbol_energy,
                            DPath path = DPath::Circulant, double* max_offdiag = nullptr);
BlockDiagonalMatrix build_D(const ChannelSet& channels, const AdcSwitchVector& delta, double symbol_energy,
                            DPath path = DPath::Circulant, double* max_offdiag = nullptr);

/// D assembled from arbitrary R_nm (for example Monte Carlo estimates):
/// block (m, n) = diag(F R_nm F^H). `r(n, m)` must return R_nm.
template <typename RFn>
BlockDiagonalMatrix build_D_from(int n_antennas, int q, RFn&& r);

/// D from Monte Carlo estimates of every R_nm, all pairs sharing the same
/// draws of symbols and noise.
BlockDiagonalMatrix mc_build_D(const ChannelSet& channels, std::span<const AdcSpec> specs, double symbol_energy,
                               long samples, Rng& rng);

/// g and D for all users.
QuantizedStats build_stats(const ChannelSet& channels, std::span<const AdcSpec> specs, double symbol_energy,
                           DPath path = DPath::Circulant);
QuantizedStats build_stats(const ChannelSet& channels, const AdcSwitchVector& delta, double symbol_energy,
                           DPath path = DPath::Circulant);

/// Single-user g and D written directly from the single-user expressions
/// (variance 1 + E_s ||lambda_n||^2 / Q, one-bit or high-resolution only).
QuantizedStats build_single_user_stats(std::span<const cvec> spectra, const AdcSwitchVector& delta,
                                       double symbol_energy);

/// Throws NumericalIntegrityError unless every subcarrier block of D is
/// Hermitian positive definite.
void check_positive_definite(const BlockDiagonalMatrix& d);

/// diag(F A F^H) via FFTs along both dimensions; optionally reports the
/// largest off-diagonal magnitude.
cvec unitary_similarity_diagonal(const cmat& a, double* max_offdiag = nullptr);

template <typename RFn>
BlockDiagonalMatrix build_D_from(int n_antennas, int q, RFn&& r) {
  BlockDiagonalMatrix d(n_antennas, q);
  for (int n = 0; n < n_antennas; ++n)
    for (int m = 0; m < n_antennas; ++m) d.block(m, n) = unitary_similarity_diagonal(r(n, m));
  return d;
}

}  // namespace mixadc
