// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo estimators of the moments that the closed forms predict. They
// simulate the receive chain sample by sample and share no code with the
// closed-form paths beyond the quantizer and the DFT.
//
// Standard errors come from 16 batch means. For complex quantities the
// reported error is sqrt(se_re^2 + se_im^2).

#pragma once

#include "mixadc/common.hpp"
#include "mixadc/quantizer.hpp"
#include "mixadc/spectral.hpp"

#include <span>
#include <vector>

namespace mixadc {

struct MomentEstimate {
  cplx value = 0.0;
  double std_error = 0.0;
  long n_samples = 0;
  bool degenerate = false;  // e.g. w = 0 in mc_delta
};

/// Delta(w) = |E[xhat^H x]|^2 / (Q E_s E[xhat^H xhat]) for user `user`, with
/// xhat = sum_n diag(w_n) F r_n. The value is real; its error uses the delta
/// method on the batch means.
MomentEstimate mc_delta(const ChannelSet& channels, std::span<const AdcSpec> specs, const cvec& w,
                        double symbol_energy, long samples, Rng& rng, int user = 0);

/// g_nq = E[conj((F r_n)_q) x_q^u], in antenna-major order.
std::vector<MomentEstimate> mc_g(const ChannelSet& channels, std::span<const AdcSpec> specs, double symbol_energy,
                                 long samples, Rng& rng, int user = 0);

struct PairMomentEstimate {
  MomentEstimate cross;      // E[sgn(u1)^* u2]
  MomentEstimate sign_corr;  // E[sgn(u1) sgn(u2)^*]
  cplx cross_closed = 0.0;   // sqrt(2/pi) conj(s12) / s1
  cplx sign_corr_closed = 0.0;
};

/// Draws (u1, u2) ~ CN(0, [[s1sq, s12], [conj(s12), s2sq]]). Rejects
/// non-positive variances and |s12|^2 > s1sq s2sq.
PairMomentEstimate mc_pair_moments(double s1sq, double s2sq, cplx s12, long samples, Rng& rng);

}  // namespace mixadc
