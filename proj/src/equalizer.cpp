// SPDX-License-Identifier: Apache-2.0

#include "mixadc/equalizer.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <cmath>
#include <string>

namespace mixadc {

namespace {

constexpr double kClipCeiling = 1.0 - 1e-15;
constexpr double kDeltaSlack = 1e-9;

void check_dims(const BlockDiagonalMatrix& d, const cvec& g) {
  if (g.size() != d.dim()) throw InvalidArgument("g and D dimensions differ");
}

}  // namespace

std::vector<int> find_permutation(int n_antennas, int n_subcarriers) {
  if (n_antennas < 1 || n_subcarriers < 1) throw InvalidArgument("N and Q must be positive");
  std::vector<int> perm(static_cast<std::size_t>(n_antennas) * n_subcarriers);
  for (int n = 0; n < n_antennas; ++n)
    for (int q = 0; q < n_subcarriers; ++q) perm[static_cast<std::size_t>(n) * n_subcarriers + q] = q * n_antennas + n;
  return perm;
}

cmat permute_dense(const cmat& a, std::span<const int> perm) {
  const Eigen::Index dim = a.rows();
  if (a.cols() != dim || static_cast<Eigen::Index>(perm.size()) != dim)
    throw InvalidArgument("permutation size must match the matrix");
  cmat out(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) out(perm[i], perm[j]) = a(i, j);
  return out;
}

cvec solve_equalizer(const BlockDiagonalMatrix& d, const cvec& g) {
  check_dims(d, g);
  const int n = d.n_blocks();
  const int q = d.block_size();
  const auto perm = find_permutation(n, q);

  // Gather g into subcarrier-major order; each length-N slice is one subproblem.
  cvec gp(d.dim());
  for (int i = 0; i < d.dim(); ++i) gp(perm[i]) = g(i);

  cvec wp(d.dim());
  cmat s(n, n);
  for (int k = 0; k < q; ++k) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s(i, j) = d.block(i, j)(k);
    Eigen::LLT<cmat> llt(s);
    if (llt.info() != Eigen::Success)
      throw SolverError("subcarrier block " + std::to_string(k) + " is not positive definite", k);
    wp.segment(static_cast<Eigen::Index>(k) * n, n) = llt.solve(gp.segment(static_cast<Eigen::Index>(k) * n, n));
    if (!wp.segment(static_cast<Eigen::Index>(k) * n, n).allFinite())
      throw SolverError("non-finite solution at subcarrier " + std::to_string(k), k);
  }

  cvec w(d.dim());
  for (int i = 0; i < d.dim(); ++i) w(i) = wp(perm[i]);
  return w;
}

cvec dense_solve(const BlockDiagonalMatrix& d, const cvec& g) {
  check_dims(d, g);
  return d.dense().partialPivLu().solve(g);
}

cvec dense_inverse_solve(const BlockDiagonalMatrix& d, const cvec& g) {
  check_dims(d, g);
  const cmat inv = d.dense().inverse();
  return inv * g;
}

std::string to_string(GmiMethod method) {
  switch (method) {
    case GmiMethod::General: return "general";
    case GmiMethod::AllHighRes: return "all-highres";
    case GmiMethod::Flat: return "flat";
    case GmiMethod::BoundLower: return "bound-lower";
    case GmiMethod::BoundUpper: return "bound-upper";
  }
  return "unknown";
}

GmiReport report_from_delta(double delta, GmiMethod method) {
  if (!std::isfinite(delta)) throw NumericalIntegrityError("delta is not finite");
  if (delta < -kDeltaSlack) throw NumericalIntegrityError("delta " + std::to_string(delta) + " is negative");
  if (delta > 1.0 + kDeltaSlack)
    throw NumericalIntegrityError("delta " + std::to_string(delta) + " exceeds the Cauchy-Schwarz bound");
  GmiReport r;
  r.method = method;
  r.delta = std::max(delta, 0.0);
  if (r.delta > kClipCeiling) {
    r.delta = kClipCeiling;
    r.clipped = true;
  }
  r.a_opt = r.delta;
  r.gmi_nats = -std::log1p(-r.delta);
  r.gmi_bits = nats_to_bits(r.gmi_nats);
  return r;
}

double gmi_from_delta(double delta) { return report_from_delta(delta).gmi_nats; }

GmiReport delta_gmi(const BlockDiagonalMatrix& d, const cvec& g, int n_subcarriers, double symbol_energy) {
  if (!(symbol_energy > 0.0)) throw InvalidArgument("symbol_energy must be positive");
  if (g.squaredNorm() == 0.0) return report_from_delta(0.0);
  const cvec w = solve_equalizer(d, g);
  const cplx gw = g.dot(w);  // g^H w
  GmiReport r = report_from_delta(gw.real() / (n_subcarriers * symbol_energy));
  r.a_opt = gw / (n_subcarriers * symbol_energy);
  return r;
}

double delta_of_weights(const BlockDiagonalMatrix& d, const cvec& g, const cvec& w, int n_subcarriers,
                        double symbol_energy) {
  check_dims(d, g);
  if (w.size() != g.size()) throw InvalidArgument("w and g dimensions differ");
  const double den = d.multiply(w).dot(w).real();  // w^H D w
  if (den <= 0.0) return 0.0;
  return std::norm(w.dot(g)) / (n_subcarriers * symbol_energy * den);
}

GmiReport gmi_static(const ChannelSet& channels, std::span<const AdcSpec> specs, double symbol_energy, int user) {
  const BlockDiagonalMatrix d = build_D(channels, specs, symbol_energy);
  const cvec g = build_g(channels, specs, symbol_energy, user);
  return delta_gmi(d, g, channels.n_subcarriers(), symbol_energy);
}

GmiReport gmi_static(const ChannelSet& channels, const AdcSwitchVector& delta, double symbol_energy, int user) {
  const auto specs = delta.to_specs();
  return gmi_static(channels, specs, symbol_energy, user);
}

HighResReport gmi_all_highres(std::span<const cvec> spectra, double symbol_energy) {
  if (spectra.empty()) throw InvalidArgument("need at least one antenna");
  const Eigen::Index q = spectra[0].size();
  CompensatedSum inv_sum;
  CompensatedSum log_sum;
  for (Eigen::Index k = 0; k < q; ++k) {
    double gain = 0.0;
    for (const auto& l : spectra) gain += std::norm(l(k));
    inv_sum.add(1.0 / (1.0 + symbol_energy * gain));
    log_sum.add(std::log1p(symbol_energy * gain));
  }
  HighResReport r;
  const double mean_inv = inv_sum.value() / static_cast<double>(q);
  r.gmi = report_from_delta(1.0 - mean_inv, GmiMethod::AllHighRes);
  // Use the exact form rather than the clipped delta.
  r.gmi.gmi_nats = -std::log(mean_inv);
  r.gmi.gmi_bits = nats_to_bits(r.gmi.gmi_nats);
  r.capacity_nats = log_sum.value() / static_cast<double>(q);
  r.capacity_bits = nats_to_bits(r.capacity_nats);
  return r;
}

double per_user_capacity(const ChannelSet& channels, double symbol_energy) {
  const int n = channels.n_antennas();
  const int u = channels.n_users();
  const int q = channels.n_subcarriers();
  CompensatedSum total;
  cmat h(n, u);
  for (int k = 0; k < q; ++k) {
    for (int v = 0; v < u; ++v)
      for (int a = 0; a < n; ++a) h(a, v) = channels.spectrum(v, a)(k);
    // det(I_N + E_s H H^H) = det(I_U + E_s H^H H)
    const cmat gram = cmat::Identity(u, u) + symbol_energy * h.adjoint() * h;
    Eigen::LLT<cmat> llt(gram);
    if (llt.info() != Eigen::Success) throw NumericalIntegrityError("capacity Gram matrix not positive definite");
    const cmat& l = llt.matrixLLT();
    for (int i = 0; i < u; ++i) total.add(2.0 * std::log(l(i, i).real()));
  }
  return total.value() / (static_cast<double>(u) * q);
}

GmiReport gmi_flat_fading(std::span<const cplx> h, const AdcSwitchVector& delta, double symbol_energy) {
  const int n = static_cast<int>(h.size());
  if (n == 0 || delta.size() != n) throw InvalidArgument("need one switch entry per antenna");
  if (!(symbol_energy > 0.0)) throw InvalidArgument("symbol_energy must be positive");
  const double es = symbol_energy;
  std::vector<double> onebit_gain(n);
  for (int i = 0; i < n; ++i) onebit_gain[i] = std::sqrt(2.0 / (kPi * (std::norm(h[i]) * es + 1.0)));

  cvec nu(n);
  for (int i = 0; i < n; ++i) nu(i) = std::conj(h[i]) * es * (delta.high_res(i) ? 1.0 : onebit_gain[i]);

  cmat e(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const bool ha = delta.high_res(a);
      const bool hb = delta.high_res(b);
      if (a == b) {
        e(a, a) = 1.0 + (ha ? std::norm(h[a]) * es : 0.0);
        continue;
      }
      const cplx cross = std::conj(h[a]) * h[b] * es;
      if (ha && hb) {
        e(a, b) = cross;
      } else if (ha) {
        e(a, b) = cross * onebit_gain[b];
      } else if (hb) {
        e(a, b) = cross * onebit_gain[a];
      } else {
        const double den = std::sqrt(std::norm(h[a]) * es + 1.0) * std::sqrt(std::norm(h[b]) * es + 1.0);
        e(a, b) = arcsine_law(cross / den);
      }
    }
  }
  Eigen::LLT<cmat> llt(e);
  if (llt.info() != Eigen::Success) throw SolverError("flat-fading E matrix is not positive definite", 0);
  const double delta_value = nu.dot(llt.solve(nu)).real() / es;
  return report_from_delta(delta_value, GmiMethod::Flat);
}

std::vector<cplx> flat_gains(const ChannelSet& channels, int user) {
  std::vector<cplx> out;
  for (int n = 0; n < channels.n_antennas(); ++n) {
    const cvec& t = channels.taps(user, n);
    if (t.size() > 1 && t.tail(t.size() - 1).squaredNorm() != 0.0)
      throw InvalidArgument("channel is not frequency flat");
    out.push_back(t(0));
  }
  return out;
}

LowSnrSlope low_snr_slope(std::span<const cvec> spectra, const AdcSwitchVector& delta) {
  if (spectra.empty() || delta.size() != static_cast<int>(spectra.size()))
    throw InvalidArgument("need one switch entry per antenna");
  const double q = static_cast<double>(spectra[0].size());
  LowSnrSlope s;
  for (std::size_t n = 0; n < spectra.size(); ++n) {
    const double energy = spectra[n].squaredNorm();
    s.gmi += (delta.high_res(static_cast<int>(n)) ? 1.0 : kTwoOverPi) * energy / q;
    s.capacity += energy / q;
  }
  return s;
}

double high_snr_limit(std::span<const cvec> spectra) {
  const int n = static_cast<int>(spectra.size());
  if (n == 0) throw InvalidArgument("need at least one antenna");
  const int q = static_cast<int>(spectra[0].size());
  std::vector<cvec> unit(n);
  for (int i = 0; i < n; ++i) {
    const double norm = spectra[i].norm();
    if (norm == 0.0) throw InvalidArgument("zero channel has no high-SNR limit");
    unit[i] = spectra[i] / norm;
  }

  // Limiting correlation coefficient: circulant with eigenvalues
  // Q lambdabar_n lambdabar_m^*, and R = arcsine law of it.
  BlockDiagonalMatrix dbar(n, q);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      cvec theta = spectrum_to_taps(static_cast<double>(q) * unit[a].cwiseProduct(unit[b].conjugate()));
      if (a == b) theta(0) = 1.0;
      cvec r(q);
      for (int k = 0; k < q; ++k) r(k) = arcsine_law(theta(k));
      dbar.block(b, a) = taps_to_spectrum(r);
    }
  }

  cvec lbar(static_cast<Eigen::Index>(n) * q);
  for (int i = 0; i < n; ++i) lbar.segment(static_cast<Eigen::Index>(i) * q, q) = unit[i].conjugate();
  const cvec w = solve_equalizer(dbar, lbar);
  return kTwoOverPi * lbar.dot(w).real();
}

std::vector<cvec> user_spectra(const ChannelSet& channels, int user) {
  std::vector<cvec> out;
  for (int n = 0; n < channels.n_antennas(); ++n) out.push_back(channels.spectrum(user, n));
  return out;
}

}  // namespace mixadc
