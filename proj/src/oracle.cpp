// SPDX-License-Identifier: Apache-2.0

#include "mixadc/oracle.hpp"

#include "mixadc/secondstats.hpp"

#include <cmath>

namespace mixadc {

namespace {

constexpr int kBatches = 16;

void check_samples(long samples) {
  if (samples < kBatches) throw InvalidArgument("need at least 16 samples");
}

// Batch means of a complex quantity -> overall mean and standard error.
MomentEstimate from_batches(const std::vector<cplx>& means, long n_samples) {
  MomentEstimate e;
  e.n_samples = n_samples;
  ComplexCompensatedSum s;
  for (cplx m : means) s.add(m);
  e.value = s.value() / static_cast<double>(means.size());
  CompensatedSum ss;
  for (cplx m : means) ss.add(std::norm(m - e.value));
  const double b = static_cast<double>(means.size());
  e.std_error = std::sqrt(ss.value() / (b * (b - 1.0)));
  return e;
}

// One realization of the quantized outputs r_n of every antenna, plus the
// frequency-domain symbols of every user.
struct Realization {
  std::vector<cvec> symbols;  // per user, length Q
  std::vector<cvec> outputs;  // per antenna, time domain, length Q
};

class ReceiveChain {
 public:
  ReceiveChain(const ChannelSet& channels, std::span<const AdcSpec> specs, double es)
      : channels_(channels), specs_(specs.begin(), specs.end()), es_(es) {
    if (static_cast<int>(specs_.size()) != channels.n_antennas())
      throw InvalidArgument("need one ADC spec per antenna");
    for (int n = 0; n < channels.n_antennas(); ++n)
      input_std_.push_back(std::sqrt((1.0 + es * channels.spectral_energy(n) / channels.n_subcarriers()) / 2.0));
  }

  void draw(Rng& rng, Realization& r) const {
    const int q = channels_.n_subcarriers();
    r.symbols.resize(channels_.n_users());
    for (auto& s : r.symbols) {
      s.resize(q);
      for (int k = 0; k < q; ++k) s(k) = rng.complex_normal(es_);
    }
    r.outputs.resize(channels_.n_antennas());
    for (int n = 0; n < channels_.n_antennas(); ++n) {
      // y_n = sum_u C_n^u F^H x^u + z_n
      cvec freq = cvec::Zero(q);
      for (int u = 0; u < channels_.n_users(); ++u)
        freq.array() += channels_.spectrum(u, n).array() * r.symbols[u].array();
      cvec y = unitary_idft(freq);
      for (int k = 0; k < q; ++k) y(k) += rng.complex_normal(1.0);
      r.outputs[n] = quantize_vector(y, specs_[n], input_std_[n]);
    }
  }

 private:
  const ChannelSet& channels_;
  std::vector<AdcSpec> specs_;
  double es_;
  std::vector<double> input_std_;
};

}  // namespace

MomentEstimate mc_delta(const ChannelSet& channels, std::span<const AdcSpec> specs, const cvec& w,
                        double symbol_energy, long samples, Rng& rng, int user) {
  check_samples(samples);
  const int n_ant = channels.n_antennas();
  const int q = channels.n_subcarriers();
  if (w.size() != static_cast<Eigen::Index>(n_ant) * q) throw InvalidArgument("w must have length N Q");
  if (user < 0 || user >= channels.n_users()) throw InvalidArgument("user index out of range");
  if (w.squaredNorm() == 0.0) {
    MomentEstimate e;
    e.n_samples = samples;
    e.degenerate = true;
    return e;
  }

  const ReceiveChain chain(channels, specs, symbol_energy);
  const long per_batch = samples / kBatches;
  // Batch means of A = xhat^H x (complex) and B = xhat^H xhat (real).
  std::vector<cplx> a_means(kBatches);
  std::vector<double> b_means(kBatches);
  Realization r;
  for (int b = 0; b < kBatches; ++b) {
    ComplexCompensatedSum a_sum;
    CompensatedSum b_sum;
    for (long s = 0; s < per_batch; ++s) {
      chain.draw(rng, r);
      cvec xhat = cvec::Zero(q);
      for (int n = 0; n < n_ant; ++n)
        xhat.array() += w.segment(static_cast<Eigen::Index>(n) * q, q).array() * unitary_dft(r.outputs[n]).array();
      a_sum.add(xhat.dot(r.symbols[user]));
      b_sum.add(xhat.squaredNorm());
    }
    a_means[b] = a_sum.value() / static_cast<double>(per_batch);
    b_means[b] = b_sum.value() / static_cast<double>(per_batch);
  }

  ComplexCompensatedSum a_all;
  CompensatedSum b_all;
  for (int b = 0; b < kBatches; ++b) {
    a_all.add(a_means[b]);
    b_all.add(b_means[b]);
  }
  const cplx a = a_all.value() / static_cast<double>(kBatches);
  const double bm = b_all.value() / kBatches;
  const double c = q * symbol_energy;
  const double delta = std::norm(a) / (c * bm);

  // Delta method: gradient of |A|^2 / (c B) w.r.t. (A_re, A_im, B).
  const Eigen::Vector3d grad(2.0 * a.real() / (c * bm), 2.0 * a.imag() / (c * bm), -std::norm(a) / (c * bm * bm));
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int b = 0; b < kBatches; ++b) {
    const Eigen::Vector3d d(a_means[b].real() - a.real(), a_means[b].imag() - a.imag(), b_means[b] - bm);
    cov += d * d.transpose();
  }
  cov /= kBatches * (kBatches - 1.0);

  MomentEstimate e;
  e.value = delta;
  e.std_error = std::sqrt(grad.dot(cov * grad));
  e.n_samples = per_batch * kBatches;
  return e;
}

std::vector<MomentEstimate> mc_g(const ChannelSet& channels, std::span<const AdcSpec> specs, double symbol_energy,
                                 long samples, Rng& rng, int user) {
  check_samples(samples);
  if (user < 0 || user >= channels.n_users()) throw InvalidArgument("user index out of range");
  const int n_ant = channels.n_antennas();
  const int q = channels.n_subcarriers();
  const Eigen::Index dim = static_cast<Eigen::Index>(n_ant) * q;
  const ReceiveChain chain(channels, specs, symbol_energy);
  const long per_batch = samples / kBatches;

  std::vector<std::vector<cplx>> means(dim, std::vector<cplx>(kBatches));
  Realization r;
  for (int b = 0; b < kBatches; ++b) {
    cvec acc = cvec::Zero(dim);
    for (long s = 0; s < per_batch; ++s) {
      chain.draw(rng, r);
      for (int n = 0; n < n_ant; ++n)
        acc.segment(static_cast<Eigen::Index>(n) * q, q).array() +=
            unitary_dft(r.outputs[n]).array().conjugate() * r.symbols[user].array();
    }
    for (Eigen::Index i = 0; i < dim; ++i) means[i][b] = acc(i) / static_cast<double>(per_batch);
  }
  std::vector<MomentEstimate> out;
  out.reserve(dim);
  for (Eigen::Index i = 0; i < dim; ++i) out.push_back(from_batches(means[i], per_batch * kBatches));
  return out;
}

PairMomentEstimate mc_pair_moments(double s1sq, double s2sq, cplx s12, long samples, Rng& rng) {
  check_samples(samples);
  if (!(s1sq > 0.0) || !(s2sq > 0.0)) throw InvalidArgument("variances must be positive");
  if (std::norm(s12) > s1sq * s2sq * (1.0 + 1e-12)) throw InvalidArgument("|s12|^2 exceeds s1^2 s2^2");

  // u2 = c u1 + e with E[u1 u2^*] = s12  =>  c = conj(s12) / s1sq.
  const cplx c = std::conj(s12) / s1sq;
  const double resid = std::max(0.0, s2sq - std::norm(s12) / s1sq);
  const long per_batch = samples / kBatches;
  std::vector<cplx> cross(kBatches), corr(kBatches);
  for (int b = 0; b < kBatches; ++b) {
    ComplexCompensatedSum cs, rs;
    for (long s = 0; s < per_batch; ++s) {
      const cplx u1 = rng.complex_normal(s1sq);
      const cplx u2 = c * u1 + rng.complex_normal(resid);
      cs.add(std::conj(csign(u1)) * u2);
      rs.add(csign(u1) * std::conj(csign(u2)));
    }
    cross[b] = cs.value() / static_cast<double>(per_batch);
    corr[b] = rs.value() / static_cast<double>(per_batch);
  }
  PairMomentEstimate out;
  out.cross = from_batches(cross, per_batch * kBatches);
  out.sign_corr = from_batches(corr, per_batch * kBatches);
  const double s1 = std::sqrt(s1sq);
  out.cross_closed = std::sqrt(kTwoOverPi) * std::conj(s12) / s1;
  out.sign_corr_closed = arcsine_law(s12 / (s1 * std::sqrt(s2sq)));
  return out;
}

}  // namespace mixadc
