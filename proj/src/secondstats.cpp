// SPDX-License-Identifier: Apache-2.0

#include "mixadc/secondstats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mixadc {

namespace {

constexpr int kBatches = 16;

std::vector<AdcSpec> specs_from(const AdcSwitchVector& delta) { return delta.to_specs(); }

void check_specs(std::span<const AdcSpec> specs, const ChannelSet& channels) {
  if (static_cast<int>(specs.size()) != channels.n_antennas())
    throw InvalidArgument("need one ADC spec per antenna");
}

}  // namespace

// ---------------------------------------------------------------------------
// BlockDiagonalMatrix

BlockDiagonalMatrix::BlockDiagonalMatrix(int n_blocks, int block_size)
    : n_(n_blocks), q_(block_size),
      blocks_(static_cast<std::size_t>(n_blocks) * n_blocks, cvec::Zero(block_size)) {}

BlockDiagonalMatrix BlockDiagonalMatrix::identity(int n_blocks, int block_size) {
  BlockDiagonalMatrix d(n_blocks, block_size);
  for (int i = 0; i < n_blocks; ++i) d.block(i, i).setOnes();
  return d;
}

cplx BlockDiagonalMatrix::entry(int row, int col) const {
  const int qr = row % q_;
  const int qc = col % q_;
  if (qr != qc) return 0.0;
  return block(row / q_, col / q_)(qr);
}

cmat BlockDiagonalMatrix::dense() const {
  cmat out = cmat::Zero(dim(), dim());
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int q = 0; q < q_; ++q) out(i * q_ + q, j * q_ + q) = block(i, j)(q);
  return out;
}

cvec BlockDiagonalMatrix::multiply(const cvec& x) const {
  if (x.size() != dim()) throw InvalidArgument("dimension mismatch in D x");
  cvec y = cvec::Zero(dim());
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      y.segment(i * q_, q_).array() += block(i, j).array() * x.segment(j * q_, q_).array();
  return y;
}

double BlockDiagonalMatrix::hermitian_defect() const {
  double worst = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      worst = std::max(worst, (block(i, j) - block(j, i).conjugate()).cwiseAbs().maxCoeff());
  return worst;
}

// ---------------------------------------------------------------------------
// Pre-quantization covariance

PreQuantCov::PreQuantCov(const ChannelSet& channels, double symbol_energy)
    : n_(channels.n_antennas()), q_(channels.n_subcarriers()), es_(symbol_energy) {
  gen_.resize(static_cast<std::size_t>(n_) * n_);
  var_.resize(n_);
  for (int n = 0; n < n_; ++n) {
    for (int m = n; m < n_; ++m) {
      cvec eig = cvec::Zero(q_);
      for (int v = 0; v < channels.n_users(); ++v)
        eig.array() += channels.spectrum(v, n).array() * channels.spectrum(v, m).array().conjugate();
      cvec c = symbol_energy * spectrum_to_taps(eig);
      if (n == m) {
        c(0) += 1.0;
        // The lag-0 entry is real by construction; drop the roundoff part.
        c(0) = c(0).real();
        var_[n] = c(0).real();
      }
      gen_[static_cast<std::size_t>(n) * n_ + m] = c;
      if (m != n) {
        // Y_mn = Y_nm^H: first column of the adjoint circulant.
        cvec ct(q_);
        for (int k = 0; k < q_; ++k) ct(k) = std::conj(c((q_ - k) % q_));
        gen_[static_cast<std::size_t>(m) * n_ + n] = ct;
      }
    }
  }
}

void PreQuantCov::add_white(int n, double amount) {
  gen_[static_cast<std::size_t>(n) * n_ + n](0) += amount;
  var_[n] += amount;
}

cmat prequant_cov(const ChannelSet& channels, double symbol_energy, int n, int m) {
  const int q = channels.n_subcarriers();
  if (n < 0 || m < 0 || n >= channels.n_antennas() || m >= channels.n_antennas())
    throw InvalidArgument("antenna index out of range");
  cmat y = cmat::Zero(q, q);
  if (n == m) y.setIdentity();
  for (int v = 0; v < channels.n_users(); ++v) {
    const cmat cn = circulant_from_taps(channels.taps(v, n));
    const cmat cm = circulant_from_taps(channels.taps(v, m));
    y += symbol_energy * cn * cm.adjoint();
  }
  return y;
}

cmat corr_coeff(const cmat& y_nm, const cmat& y_nn, const cmat& y_mm) {
  const Eigen::Index q = y_nm.rows();
  cmat theta(q, y_nm.cols());
  for (Eigen::Index p = 0; p < q; ++p) {
    const double vp = y_nn(p, p).real();
    if (!(vp > 0.0)) throw InvalidArgument("variances must be strictly positive");
    for (Eigen::Index k = 0; k < y_nm.cols(); ++k) {
      const double vk = y_mm(k, k).real();
      if (!(vk > 0.0)) throw InvalidArgument("variances must be strictly positive");
      theta(p, k) = y_nm(p, k) / std::sqrt(vp * vk);
    }
  }
  return theta;
}

double clamp_correlation(double x) {
  if (std::abs(x) <= 1.0) return x;
  if (std::abs(x) <= 1.0 + 1e-9) return x > 0 ? 1.0 : -1.0;
  throw NumericalIntegrityError("correlation coefficient " + std::to_string(x) + " outside [-1, 1]");
}

cplx arcsine_law(cplx theta) {
  return kTwoOverPi * cplx(std::asin(clamp_correlation(theta.real())), std::asin(clamp_correlation(theta.imag())));
}

cmat arcsine_law(const cmat& theta) {
  return theta.unaryExpr([](cplx t) { return arcsine_law(t); });
}

cplx quantized_entry(cplx y_pq, double var_p, double var_q, const AdcSpec& spec_n, const AdcSpec& spec_m,
                     bool same_sample) {
  const bool hr_n = spec_n.is_high_res();
  const bool hr_m = spec_m.is_high_res();
  if (hr_n && hr_m) return y_pq;
  // Mixed pairs: the quantized side contributes its Bussgang gain.
  if (!hr_n && hr_m) return bussgang_gain(spec_n, var_p) * y_pq;
  if (hr_n && !hr_m) return bussgang_gain(spec_m, var_q) * y_pq;

  const double scale = adc_output_scale(spec_n, std::sqrt(var_p / 2.0)) * adc_output_scale(spec_m, std::sqrt(var_q / 2.0));
  if (same_sample) return scale * 2.0 * quantized_power(spec_n);
  const cplx theta = y_pq / std::sqrt(var_p * var_q);
  const double re = clamp_correlation(theta.real());
  const double im = clamp_correlation(theta.imag());
  if (spec_n.kind == AdcKind::OneBit && spec_m.kind == AdcKind::OneBit)
    return kTwoOverPi * cplx(std::asin(re), std::asin(im));
  // In-phase and quadrature pairs each contribute f(rho); see quantizer.hpp.
  return scale * 2.0 * cplx(quantized_correlation(spec_n, spec_m, re), quantized_correlation(spec_n, spec_m, im));
}

cmat quantized_cov(int n, int m, std::span<const AdcSpec> specs, const ChannelSet& channels,
                   double symbol_energy) {
  check_specs(specs, channels);
  const cmat y_nm = prequant_cov(channels, symbol_energy, n, m);
  const cmat y_nn = n == m ? y_nm : prequant_cov(channels, symbol_energy, n, n);
  const cmat y_mm = n == m ? y_nm : prequant_cov(channels, symbol_energy, m, m);
  const Eigen::Index q = y_nm.rows();
  cmat r(q, q);
  for (Eigen::Index p = 0; p < q; ++p)
    for (Eigen::Index k = 0; k < q; ++k)
      r(p, k) = quantized_entry(y_nm(p, k), y_nn(p, p).real(), y_mm(k, k).real(), specs[n], specs[m],
                                n == m && p == k);
  return r;
}

cmat quantized_cov(int n, int m, const AdcSwitchVector& delta, const ChannelSet& channels,
                   double symbol_energy) {
  const auto specs = specs_from(delta);
  return quantized_cov(n, m, specs, channels, symbol_energy);
}

cvec quantized_cov_generator(int n, int m, std::span<const AdcSpec> specs, const PreQuantCov& y) {
  const cvec& c = y.generator(n, m);
  cvec r(c.size());
  for (Eigen::Index k = 0; k < c.size(); ++k)
    r(k) = quantized_entry(c(k), y.variance(n), y.variance(m), specs[n], specs[m], n == m && k == 0);
  return r;
}

// ---------------------------------------------------------------------------
// Monte Carlo correlation

namespace {

// One joint draw of the quantized outputs of the listed antennas.
void draw_outputs(const ChannelSet& channels, std::span<const AdcSpec> specs, std::span<const int> antennas,
                  const std::vector<double>& variances, double es, Rng& rng, std::vector<cvec>& out) {
  const int q = channels.n_subcarriers();
  std::vector<cvec> symbols(channels.n_users());
  for (auto& s : symbols) {
    s.resize(q);
    for (int k = 0; k < q; ++k) s(k) = rng.complex_normal(es);
  }
  for (std::size_t i = 0; i < antennas.size(); ++i) {
    const int n = antennas[i];
    cvec freq = cvec::Zero(q);
    for (int v = 0; v < channels.n_users(); ++v) freq.array() += channels.spectrum(v, n).array() * symbols[v].array();
    cvec y = unitary_idft(freq);
    for (int k = 0; k < q; ++k) y(k) += rng.complex_normal(1.0);
    out[i] = quantize_vector(y, specs[n], std::sqrt(variances[i] / 2.0));
  }
}

}  // namespace

MatrixEstimate mc_quantized_cov(int n, int m, std::span<const AdcSpec> specs, const ChannelSet& channels,
                                double symbol_energy, long samples, Rng& rng) {
  check_specs(specs, channels);
  if (samples < kBatches) throw InvalidArgument("need at least 16 samples");
  const int q = channels.n_subcarriers();
  const PreQuantCov y(channels, symbol_energy);
  const std::vector<int> antennas{n, m};
  const std::vector<double> vars{y.variance(n), y.variance(m)};
  std::vector<cvec> out(2);

  const long per_batch = samples / kBatches;
  std::vector<cmat> batch_mean(kBatches, cmat::Zero(q, q));
  for (int b = 0; b < kBatches; ++b) {
    cmat acc = cmat::Zero(q, q);
    for (long s = 0; s < per_batch; ++s) {
      draw_outputs(channels, specs, antennas, vars, symbol_energy, rng, out);
      acc.noalias() += out[0] * out[1].adjoint();
    }
    batch_mean[b] = acc / static_cast<double>(per_batch);
  }
  MatrixEstimate est;
  est.n_samples = per_batch * kBatches;
  est.value = cmat::Zero(q, q);
  for (const auto& bm : batch_mean) est.value += bm;
  est.value /= kBatches;
  Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(q, q);
  for (const auto& bm : batch_mean) ss += (bm - est.value).cwiseAbs2();
  est.std_error = (ss / (kBatches * (kBatches - 1.0))).cwiseSqrt().cast<cplx>();
  return est;
}

BlockDiagonalMatrix mc_build_D(const ChannelSet& channels, std::span<const AdcSpec> specs, double symbol_energy,
                               long samples, Rng& rng) {
  check_specs(specs, channels);
  const int n_ant = channels.n_antennas();
  const int q = channels.n_subcarriers();
  const PreQuantCov y(channels, symbol_energy);
  std::vector<int> antennas(n_ant);
  std::vector<double> vars(n_ant);
  for (int n = 0; n < n_ant; ++n) {
    antennas[n] = n;
    vars[n] = y.variance(n);
  }
  std::vector<cvec> out(n_ant);
  std::vector<cmat> acc(static_cast<std::size_t>(n_ant) * n_ant, cmat::Zero(q, q));
  for (long s = 0; s < samples; ++s) {
    draw_outputs(channels, specs, antennas, vars, symbol_energy, rng, out);
    for (int n = 0; n < n_ant; ++n)
      for (int m = 0; m < n_ant; ++m) acc[static_cast<std::size_t>(n) * n_ant + m].noalias() += out[n] * out[m].adjoint();
  }
  const double inv = 1.0 / static_cast<double>(samples);
  return build_D_from(n_ant, q, [&](int n, int m) -> cmat { return acc[static_cast<std::size_t>(n) * n_ant + m] * inv; });
}

// ---------------------------------------------------------------------------
// g and D

cvec unitary_similarity_diagonal(const cmat& a, double* max_offdiag) {
  const Eigen::Index q = a.rows();
  cmat b(q, q);
  for (Eigen::Index k = 0; k < q; ++k) b.col(k) = unitary_dft(a.col(k));
  // (F A) F^H = (F (F A)^H)^H
  cmat bh = b.adjoint();
  cmat c(q, q);
  for (Eigen::Index k = 0; k < q; ++k) c.col(k) = unitary_dft(bh.col(k));
  c.adjointInPlace();
  if (max_offdiag) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < q; ++i)
      for (Eigen::Index j = 0; j < q; ++j)
        if (i != j) worst = std::max(worst, std::abs(c(i, j)));
    *max_offdiag = std::max(*max_offdiag, worst);
  }
  return c.diagonal();
}

cvec build_g(const ChannelSet& channels, std::span<const AdcSpec> specs, double symbol_energy, int user) {
  check_specs(specs, channels);
  if (user < 0 || user >= channels.n_users()) throw InvalidArgument("user index out of range");
  const int n_ant = channels.n_antennas();
  const int q = channels.n_subcarriers();
  cvec g(static_cast<Eigen::Index>(n_ant) * q);
  for (int n = 0; n < n_ant; ++n) {
    const double var = 1.0 + symbol_energy * channels.spectral_energy(n) / q;
    const double gain = bussgang_gain(specs[n], var);
    g.segment(static_cast<Eigen::Index>(n) * q, q) = (gain * symbol_energy) * channels.spectrum(user, n).conjugate();
  }
  return g;
}

cvec build_g(const ChannelSet& channels, std::span<const AdcSpec> specs, const PreQuantCov& y, int user) {
  check_specs(specs, channels);
  const int q = channels.n_subcarriers();
  cvec g(static_cast<Eigen::Index>(channels.n_antennas()) * q);
  for (int n = 0; n < channels.n_antennas(); ++n) {
    const double gain = bussgang_gain(specs[n], y.variance(n));
    g.segment(static_cast<Eigen::Index>(n) * q, q) = (gain * y.symbol_energy()) * channels.spectrum(user, n).conjugate();
  }
  return g;
}

BlockDiagonalMatrix build_D(const PreQuantCov& y, std::span<const AdcSpec> specs) {
  const int n_ant = y.n_antennas();
  if (static_cast<int>(specs.size()) != n_ant) throw InvalidArgument("need one ADC spec per antenna");
  BlockDiagonalMatrix d(n_ant, y.n_subcarriers());
  for (int n = 0; n < n_ant; ++n)
    for (int m = 0; m < n_ant; ++m) d.block(m, n) = taps_to_spectrum(quantized_cov_generator(n, m, specs, y));
  check_positive_definite(d);
  return d;
}

cvec build_g(const ChannelSet& channels, const AdcSwitchVector& delta, double symbol_energy, int user) {
  const auto specs = specs_from(delta);
  return build_g(channels, specs, symbol_energy, user);
}

void check_positive_definite(const BlockDiagonalMatrix& d) {
  const int n = d.n_blocks();
  cmat s(n, n);
  for (int q = 0; q < d.block_size(); ++q) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s(i, j) = 0.5 * (d.block(i, j)(q) + std::conj(d.block(j, i)(q)));
    Eigen::LLT<cmat> llt(s);
    if (llt.info() != Eigen::Success)
      throw NumericalIntegrityError("D is not positive definite at subcarrier " + std::to_string(q));
  }
}

BlockDiagonalMatrix build_D(const ChannelSet& channels, std::span<const AdcSpec> specs, double symbol_energy,
                            DPath path, double* max_offdiag) {
  check_specs(specs, channels);
  const int n_ant = channels.n_antennas();
  const int q = channels.n_subcarriers();
  if (path == DPath::Circulant) return build_D(PreQuantCov(channels, symbol_energy), specs);
  BlockDiagonalMatrix d(n_ant, q);
  double worst = 0.0;
  for (int n = 0; n < n_ant; ++n)
    for (int m = 0; m < n_ant; ++m)
      d.block(m, n) = unitary_similarity_diagonal(quantized_cov(n, m, specs, channels, symbol_energy), &worst);
  if (max_offdiag) *max_offdiag = worst;
  check_positive_definite(d);
  return d;
}

BlockDiagonalMatrix build_D(const ChannelSet& channels, const AdcSwitchVector& delta, double symbol_energy,
                            DPath path, double* max_offdiag) {
  const auto specs = specs_from(delta);
  return build_D(channels, specs, symbol_energy, path, max_offdiag);
}

QuantizedStats build_stats(const ChannelSet& channels, std::span<const AdcSpec> specs, double symbol_energy,
                           DPath path) {
  QuantizedStats stats;
  stats.fast_path = path == DPath::Circulant;
  double worst = 0.0;
  stats.d = build_D(channels, specs, symbol_energy, path, &worst);
  if (path == DPath::Dense) stats.max_offdiag = worst;
  for (int u = 0; u < channels.n_users(); ++u) stats.g.push_back(build_g(channels, specs, symbol_energy, u));
  return stats;
}

QuantizedStats build_stats(const ChannelSet& channels, const AdcSwitchVector& delta, double symbol_energy,
                           DPath path) {
  const auto specs = specs_from(delta);
  return build_stats(channels, specs, symbol_energy, path);
}

QuantizedStats build_single_user_stats(std::span<const cvec> spectra, const AdcSwitchVector& delta,
                                       double symbol_energy) {
  const int n_ant = static_cast<int>(spectra.size());
  if (n_ant == 0 || delta.size() != n_ant) throw InvalidArgument("need one switch entry per antenna");
  const int q = static_cast<int>(spectra[0].size());
  const double es = symbol_energy;

  std::vector<double> var(n_ant);
  for (int n = 0; n < n_ant; ++n) var[n] = 1.0 + es * spectra[n].squaredNorm() / q;

  QuantizedStats stats;
  cvec g(static_cast<Eigen::Index>(n_ant) * q);
  for (int n = 0; n < n_ant; ++n) {
    const double w = delta.high_res(n) ? es : std::sqrt(kTwoOverPi) * es / std::sqrt(var[n]);
    g.segment(static_cast<Eigen::Index>(n) * q, q) = w * spectra[n].conjugate();
  }
  stats.g.push_back(std::move(g));

  stats.d = BlockDiagonalMatrix(n_ant, q);
  for (int n = 0; n < n_ant; ++n) {
    for (int m = 0; m < n_ant; ++m) {
      cvec y = es * spectrum_to_taps(spectra[n].cwiseProduct(spectra[m].conjugate()));
      if (n == m) {
        y(0) += 1.0;
        y(0) = y(0).real();
      }
      cvec r(q);
      const bool hn = delta.high_res(n);
      const bool hm = delta.high_res(m);
      for (int k = 0; k < q; ++k) {
        if (hn && hm) {
          r(k) = y(k);  // case 1
        } else if (!hn && !hm) {
          r(k) = (n == m && k == 0) ? cplx(1.0) : arcsine_law(y(k) / std::sqrt(var[n] * var[m]));  // case 2
        } else if (hn) {
          r(k) = y(k) * std::sqrt(2.0 / (kPi * var[m]));  // case 3
        } else {
          r(k) = y(k) * std::sqrt(2.0 / (kPi * var[n]));  // case 4
        }
      }
      stats.d.block(m, n) = taps_to_spectrum(r);
    }
  }
  check_positive_definite(stats.d);
  return stats;
}

}  // namespace mixadc
