// SPDX-License-Identifier: Apache-2.0
//
// Test-only generators and dense reference constructions. The references are
// built from explicit matrix products and scalar formulas and deliberately
// avoid the library's FFT and circulant shortcuts.

#pragma once

#include "mixadc/common.hpp"
#include "mixadc/quantizer.hpp"
#include "mixadc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace mixadc::test {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  bool coin() { return integer(0, 1) == 1; }
  cplx cn(double var) {
    std::normal_distribution<double> nd(0.0, std::sqrt(var / 2.0));
    const double re = nd(eng_);
    return {re, nd(eng_)};
  }
  cvec cvector(int len, double var = 1.0) {
    cvec v(len);
    for (int i = 0; i < len; ++i) v(i) = cn(var);
    return v;
  }

  /// Zero-padded taps with T nonzero entries of variance 1/T.
  cvec taps(int q, int t) {
    cvec h = cvec::Zero(q);
    for (int i = 0; i < t; ++i) h(i) = cn(1.0 / t);
    return h;
  }

  ChannelSet channel(int n, int q, int t, int u = 1) {
    std::vector<std::vector<cvec>> all(u);
    for (auto& user : all)
      for (int a = 0; a < n; ++a) user.push_back(taps(q, t));
    return ChannelSet(std::move(all));
  }

  ChannelSet flat_channel(int n, int q, std::vector<cplx>* gains = nullptr) {
    std::vector<std::vector<cvec>> all(1);
    for (int a = 0; a < n; ++a) {
      cvec h = cvec::Zero(q);
      h(0) = cn(1.0);
      if (gains) gains->push_back(h(0));
      all[0].push_back(h);
    }
    return ChannelSet(std::move(all));
  }

  AdcSwitchVector delta(int n, int k) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), eng_);
    AdcSwitchVector d = AdcSwitchVector::all(n, 0);
    for (int i = 0; i < k; ++i) d.delta[idx[i]] = 1;
    return d;
  }

  AdcSwitchVector any_delta(int n) { return delta(n, integer(0, n)); }

  /// Mixture of high-resolution, one-bit and 2/3-bit ADCs.
  std::vector<AdcSpec> specs(int n) {
    std::vector<AdcSpec> out;
    for (int i = 0; i < n; ++i) {
      switch (integer(0, 3)) {
        case 0: out.push_back(AdcSpec::high_res()); break;
        case 1: out.push_back(AdcSpec::one_bit()); break;
        case 2: out.push_back(AdcSpec::multi_bit(2)); break;
        default: out.push_back(AdcSpec::multi_bit(3)); break;
      }
    }
    return out;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

/// F with entries exp(-j 2 pi p q / Q) / sqrt(Q), filled entry by entry.
inline cmat ref_dft(int q) {
  cmat f(q, q);
  for (int p = 0; p < q; ++p)
    for (int c = 0; c < q; ++c) f(p, c) = std::polar(1.0 / std::sqrt(q), -2.0 * kPi * p * c / q);
  return f;
}

inline cmat ref_circulant(const cvec& h) {
  const int q = static_cast<int>(h.size());
  cmat c(q, q);
  for (int r = 0; r < q; ++r)
    for (int k = 0; k < q; ++k) c(r, k) = h((r - k + q) % q);
  return c;
}

/// Y_nm = [n == m] I + E_s sum_u C_n^u (C_m^u)^H.
inline cmat ref_y(const ChannelSet& ch, double es, int n, int m) {
  const int q = ch.n_subcarriers();
  cmat y = cmat::Zero(q, q);
  if (n == m) y.setIdentity();
  for (int u = 0; u < ch.n_users(); ++u)
    y += es * ref_circulant(ch.taps(u, n)) * ref_circulant(ch.taps(u, m)).adjoint();
  return y;
}

/// R_nm for high-res and one-bit ADCs only, entry by entry.
inline cmat ref_r(const ChannelSet& ch, const AdcSwitchVector& d, double es, int n, int m) {
  const cmat y = ref_y(ch, es, n, m);
  const double vn = ref_y(ch, es, n, n)(0, 0).real();
  const double vm = ref_y(ch, es, m, m)(0, 0).real();
  const bool hn = d.high_res(n), hm = d.high_res(m);
  if (hn && hm) return y;
  if (hn) return y * std::sqrt(2.0 / (kPi * vm));
  if (hm) return y * std::sqrt(2.0 / (kPi * vn));
  cmat r(y.rows(), y.cols());
  for (int p = 0; p < y.rows(); ++p)
    for (int c = 0; c < y.cols(); ++c) {
      if (n == m && p == c) {
        r(p, c) = 1.0;
        continue;
      }
      const cplx th = y(p, c) / std::sqrt(vn * vm);
      const double re = std::asin(std::clamp(th.real(), -1.0, 1.0));
      const double im = std::asin(std::clamp(th.imag(), -1.0, 1.0));
      r(p, c) = (2.0 / kPi) * cplx(re, im);
    }
  return r;
}

/// Dense NQ x NQ D with (m, n) block diag(F R_nm F^H).
inline cmat ref_d(const ChannelSet& ch, const AdcSwitchVector& d, double es) {
  const int n_ant = ch.n_antennas(), q = ch.n_subcarriers();
  const cmat f = ref_dft(q);
  cmat out = cmat::Zero(n_ant * q, n_ant * q);
  for (int n = 0; n < n_ant; ++n)
    for (int m = 0; m < n_ant; ++m) {
      const cmat b = f * ref_r(ch, d, es, n, m) * f.adjoint();
      for (int k = 0; k < q; ++k) out(m * q + k, n * q + k) = b(k, k);
    }
  return out;
}

inline cvec ref_g(const ChannelSet& ch, const AdcSwitchVector& d, double es, int user) {
  const int n_ant = ch.n_antennas(), q = ch.n_subcarriers();
  const cmat f = ref_dft(q);
  cvec g(n_ant * q);
  for (int n = 0; n < n_ant; ++n) {
    const cvec lam = std::sqrt(static_cast<double>(q)) * f * ch.taps(user, n);
    const double var = ref_y(ch, es, n, n)(0, 0).real();
    const double scale = d.high_res(n) ? es : std::sqrt(2.0 / kPi) * es / std::sqrt(var);
    g.segment(n * q, q) = scale * lam.conjugate();
  }
  return g;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace mixadc::test
