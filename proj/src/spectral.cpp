// SPDX-License-Identifier: Apache-2.0

#include "mixadc/spectral.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>

namespace mixadc {

namespace {

Eigen::FFT<double>& fft_engine() {
  // Plans are cached per size inside the engine; one per thread.
  thread_local Eigen::FFT<double> engine;
  return engine;
}

}  // namespace

int SystemConfig::taps_for(int user) const {
  if (n_taps.empty()) throw InvalidArgument("n_taps must not be empty");
  if (n_taps.size() == 1) return n_taps[0];
  return n_taps.at(static_cast<std::size_t>(user));
}

int SystemConfig::max_taps() const {
  int t = 0;
  for (int u = 0; u < n_users; ++u) t = std::max(t, taps_for(u));
  return t;
}

void SystemConfig::validate() const {
  if (n_antennas < 1) throw InvalidArgument("n_antennas must be positive");
  if (n_highres < 0 || n_highres > n_antennas)
    throw InvalidArgument("n_highres must lie in [0, n_antennas]");
  if (n_subcarriers < 1) throw InvalidArgument("n_subcarriers must be positive");
  if (n_users < 1) throw InvalidArgument("n_users must be positive");
  if (n_taps.size() != 1 && static_cast<int>(n_taps.size()) != n_users)
    throw InvalidArgument("n_taps needs one entry or one per user");
  for (int t : n_taps) {
    if (t < 1 || t > n_subcarriers)
      throw InvalidArgument("each tap count must lie in [1, n_subcarriers]");
  }
  if (!(symbol_energy >= 0.0) || !std::isfinite(symbol_energy))
    throw InvalidArgument("symbol_energy must be finite and nonnegative");
  if (!(mse_h >= 0.0 && mse_h <= 1.0)) throw InvalidArgument("mse_h must lie in [0, 1]");
  if (coherence_len < 1) throw InvalidArgument("coherence_len must be positive");
  if (pilot_spacing < 1) throw InvalidArgument("pilot_spacing must be positive");
}

ChannelSet::ChannelSet(std::vector<std::vector<cvec>> taps) : taps_(std::move(taps)) {
  if (taps_.empty() || taps_[0].empty())
    throw InvalidArgument("channel set needs at least one user and one antenna");
  const std::size_t n = taps_[0].size();
  q_ = static_cast<int>(taps_[0][0].size());
  if (q_ < 1) throw InvalidArgument("channel taps must have length >= 1");
  spectra_.resize(taps_.size());
  for (std::size_t u = 0; u < taps_.size(); ++u) {
    if (taps_[u].size() != n) throw InvalidArgument("every user needs the same antenna count");
    spectra_[u].reserve(n);
    for (const auto& h : taps_[u]) {
      if (h.size() != q_) throw InvalidArgument("all tap vectors must have length Q");
      spectra_[u].push_back(taps_to_spectrum(h));
    }
  }
}

double ChannelSet::spectral_energy(int antenna) const {
  double e = 0.0;
  for (const auto& user : spectra_) e += user[antenna].squaredNorm();
  return e;
}

double ChannelSet::tap_energy(int antenna) const {
  double e = 0.0;
  for (const auto& user : taps_) e += user[antenna].squaredNorm();
  return e;
}

ChannelSet ChannelSet::restrict_to(std::span<const int> antennas) const {
  std::vector<std::vector<cvec>> sub(taps_.size());
  for (std::size_t u = 0; u < taps_.size(); ++u) {
    for (int n : antennas) {
      if (n < 0 || n >= n_antennas()) throw InvalidArgument("antenna index out of range");
      sub[u].push_back(taps_[u][n]);
    }
  }
  return ChannelSet(std::move(sub));
}

cvec unitary_dft(const cvec& x) {
  if (x.size() == 0) throw InvalidArgument("DFT input must be nonempty");
  if (x.size() == 1) return x;  // kissfft does not handle a length-1 plan
  cvec out(x.size());
  fft_engine().fwd(out, x);
  return out / std::sqrt(static_cast<double>(x.size()));
}

cvec unitary_idft(const cvec& x) {
  if (x.size() == 0) throw InvalidArgument("DFT input must be nonempty");
  if (x.size() == 1) return x;
  cvec out(x.size());
  // Eigen's inverse includes the 1/Q factor; rescale to unitary.
  fft_engine().inv(out, x);
  return out * std::sqrt(static_cast<double>(x.size()));
}

cvec taps_to_spectrum(const cvec& taps) {
  return unitary_dft(taps) * std::sqrt(static_cast<double>(taps.size()));
}

cvec spectrum_to_taps(const cvec& spectrum) {
  return unitary_idft(spectrum) / std::sqrt(static_cast<double>(spectrum.size()));
}

cmat circulant_from_taps(const cvec& taps) {
  const Eigen::Index q = taps.size();
  cmat c(q, q);
  for (Eigen::Index col = 0; col < q; ++col)
    for (Eigen::Index row = 0; row < q; ++row) c(row, col) = taps((row - col + q) % q);
  return c;
}

cmat dft_matrix(int q) {
  cmat f(q, q);
  const double scale = 1.0 / std::sqrt(static_cast<double>(q));
  for (int p = 0; p < q; ++p)
    for (int k = 0; k < q; ++k) {
      // Reduce the exponent first so large Q keeps full phase accuracy.
      const double phase = -2.0 * kPi * static_cast<double>((static_cast<long>(p) * k) % q) / q;
      f(p, k) = std::polar(scale, phase);
    }
  return f;
}

ChannelSet draw_channel(const SystemConfig& config, Rng& rng) {
  config.validate();
  const int q = config.n_subcarriers;
  std::vector<std::vector<cvec>> taps(config.n_users);
  for (int u = 0; u < config.n_users; ++u) {
    const int t = config.taps_for(u);
    const double var = 1.0 / t;
    taps[u].reserve(config.n_antennas);
    for (int n = 0; n < config.n_antennas; ++n) {
      cvec h = cvec::Zero(q);
      for (int i = 0; i < t; ++i) h(i) = rng.complex_normal(var);
      taps[u].push_back(std::move(h));
    }
  }
  return ChannelSet(std::move(taps));
}

CsiSplit split_csi(const ChannelSet& channel, double mse, Rng& rng) {
  if (!(mse >= 0.0 && mse <= 1.0)) throw InvalidArgument("mse_h must lie in [0, 1]");
  const int q = channel.n_subcarriers();
  std::vector<std::vector<cvec>> est(channel.n_users());
  std::vector<std::vector<cvec>> err(channel.n_users());
  for (int u = 0; u < channel.n_users(); ++u) {
    for (int n = 0; n < channel.n_antennas(); ++n) {
      const cvec& h = channel.taps(u, n);
      // The support is the nonzero prefix; T is recovered from it.
      Eigen::Index t = q;
      while (t > 1 && h(t - 1) == cplx(0.0)) --t;
      cvec hat = cvec::Zero(q);
      if (mse == 0.0) {
        hat = h;
      } else if (mse < 1.0) {
        // hat | h ~ CN((1 - mse) h, (1 - mse) mse / T)
        const double cond_var = (1.0 - mse) * mse / static_cast<double>(t);
        for (Eigen::Index i = 0; i < t; ++i) hat(i) = (1.0 - mse) * h(i) + rng.complex_normal(cond_var);
      }
      err[u].push_back(h - hat);
      est[u].push_back(std::move(hat));
    }
  }
  return {ChannelSet(std::move(est)), ChannelSet(std::move(err))};
}

}  // namespace mixadc
