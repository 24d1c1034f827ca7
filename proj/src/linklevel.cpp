// SPDX-License-Identifier: Apache-2.0

#include "mixadc/linklevel.hpp"

#include "mixadc/equalizer.hpp"
#include "mixadc/secondstats.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

namespace mixadc {

namespace {

// State = 2 * s1 + s2, s1 the most recent input bit.
constexpr int kStates = 4;

struct Branch {
  int next;
  std::uint8_t c1;
  std::uint8_t c2;
};

Branch branch(int state, std::uint8_t b) {
  const std::uint8_t s1 = static_cast<std::uint8_t>(state >> 1);
  const std::uint8_t s2 = static_cast<std::uint8_t>(state & 1);
  return {2 * b + s1, static_cast<std::uint8_t>(b ^ s1), static_cast<std::uint8_t>(b ^ s1 ^ s2)};
}

// Gray labels per dimension: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
double gray_level(std::uint8_t hi, std::uint8_t lo) {
  if (hi == 0) return lo == 0 ? -3.0 : -1.0;
  return lo == 1 ? 1.0 : 3.0;
}

void gray_slice(double v, std::uint8_t& hi, std::uint8_t& lo) {
  if (v < -2.0) {
    hi = 0, lo = 0;
  } else if (v < 0.0) {
    hi = 0, lo = 1;
  } else if (v < 2.0) {
    hi = 1, lo = 1;
  } else {
    hi = 1, lo = 0;
  }
}

const double kQamNorm = 1.0 / std::sqrt(10.0);

}  // namespace

Bits conv_encode(std::span<const std::uint8_t> bits) {
  Bits out;
  out.reserve(2 * bits.size());
  int state = 0;
  for (std::uint8_t b : bits) {
    const Branch br = branch(state, b & 1);
    out.push_back(br.c1);
    out.push_back(br.c2);
    state = br.next;
  }
  return out;
}

Bits conv_encode_terminated(std::span<const std::uint8_t> bits) {
  Bits padded(bits.begin(), bits.end());
  padded.push_back(0);
  padded.push_back(0);
  return conv_encode(padded);
}

Bits viterbi_decode(std::span<const std::uint8_t> coded, bool terminated) {
  if (coded.size() % 2 != 0) throw InvalidArgument("coded length must be even");
  const std::size_t steps = coded.size() / 2;
  if (terminated && steps < 2) throw InvalidArgument("terminated block needs at least the two tail steps");
  constexpr int kInf = std::numeric_limits<int>::max() / 2;

  std::array<int, kStates> metric{0, kInf, kInf, kInf};
  // survivors[t][s] = (previous state, input bit) into state s at step t.
  std::vector<std::array<std::pair<std::int8_t, std::uint8_t>, kStates>> survivors(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    std::array<int, kStates> next;
    next.fill(kInf);
    const std::uint8_t r1 = coded[2 * t] & 1;
    const std::uint8_t r2 = coded[2 * t + 1] & 1;
    for (int s = 0; s < kStates; ++s) {
      if (metric[s] >= kInf) continue;
      for (std::uint8_t b = 0; b < 2; ++b) {
        const Branch br = branch(s, b);
        const int m = metric[s] + (br.c1 != r1) + (br.c2 != r2);
        if (m < next[br.next]) {
          next[br.next] = m;
          survivors[t][br.next] = {static_cast<std::int8_t>(s), b};
        }
      }
    }
    metric = next;
  }

  int state = 0;
  if (!terminated) state = static_cast<int>(std::min_element(metric.begin(), metric.end()) - metric.begin());
  Bits decoded(steps);
  for (std::size_t t = steps; t-- > 0;) {
    decoded[t] = survivors[t][state].second;
    state = survivors[t][state].first;
  }
  if (terminated) decoded.resize(steps - 2);
  return decoded;
}

cplx qam16(std::span<const std::uint8_t> bits, double symbol_energy) {
  if (bits.size() != 4) throw InvalidArgument("16-QAM needs exactly 4 bits");
  const double s = std::sqrt(symbol_energy) * kQamNorm;
  return {s * gray_level(bits[0] & 1, bits[1] & 1), s * gray_level(bits[2] & 1, bits[3] & 1)};
}

void qam16_demap(cplx symbol, double scale, double symbol_energy, std::span<std::uint8_t> out) {
  if (out.size() != 4) throw InvalidArgument("16-QAM demapper writes exactly 4 bits");
  if (!std::isfinite(symbol.real()) || !std::isfinite(symbol.imag())) throw InvalidArgument("non-finite symbol");
  if (scale == 0.0) throw InvalidArgument("demapper scale must be nonzero");
  const cplx v = symbol / (scale * std::sqrt(symbol_energy) * kQamNorm);
  gray_slice(v.real(), out[0], out[1]);
  gray_slice(v.imag(), out[2], out[3]);
}

int cyclic_prefix_length(const SystemConfig& config) { return config.max_taps() - 1; }

std::vector<cvec> ofdm_receive(const ChannelSet& channels, std::span<const cvec> x, int cp_length,
                               std::span<const int> taps_per_user) {
  const int q = channels.n_subcarriers();
  if (static_cast<int>(x.size()) != channels.n_users()) throw InvalidArgument("need one signal per user");
  if (cp_length < 0 || cp_length > q) throw InvalidArgument("cyclic prefix must lie in [0, Q]");
  std::vector<cvec> tx(x.size());
  for (std::size_t u = 0; u < x.size(); ++u) {
    if (x[u].size() != q) throw InvalidArgument("frame length does not match Q");
    tx[u].resize(q + cp_length);
    tx[u].head(cp_length) = x[u].tail(cp_length);
    tx[u].tail(q) = x[u];
  }
  std::vector<cvec> rx(channels.n_antennas(), cvec::Zero(q));
  for (int n = 0; n < channels.n_antennas(); ++n) {
    for (int u = 0; u < channels.n_users(); ++u) {
      const cvec& h = channels.taps(u, n);
      const int t_len = taps_per_user.size() == 1 ? taps_per_user[0] : taps_per_user[u];
      for (int k = 0; k < q; ++k) {
        const int t = cp_length + k;
        cplx acc = 0.0;
        // Samples before the block (t - i < 0) belong to the previous symbol,
        // which is not simulated.
        for (int i = 0; i < t_len && i <= t; ++i) acc += h(i) * tx[u](t - i);
        rx[n](k) += acc;
      }
    }
  }
  return rx;
}

double wilson_half_width(long errors, long trials) {
  if (trials <= 0) return std::numeric_limits<double>::quiet_NaN();
  const double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(errors) / n;
  return z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / (1.0 + z * z / n);
}

BerPoint BerReport::pooled(std::size_t snr_index) const {
  BerPoint out;
  for (int u = 0; u < n_users; ++u) {
    const BerPoint& p = points.at(snr_index * n_users + u);
    out.snr_db = p.snr_db;
    out.ebn0_db = p.ebn0_db;
    out.frames = p.frames;
    out.bits += p.bits;
    out.bit_errors += p.bit_errors;
  }
  out.user = -1;
  out.ber = out.bits > 0 ? static_cast<double>(out.bit_errors) / out.bits : 0.0;
  out.ci95 = wilson_half_width(out.bit_errors, out.bits);
  return out;
}

BerReport simulate_ber(const SystemConfig& config, const BerOptions& options, std::uint64_t seed) {
  config.validate();
  if (options.frames < 1) throw InvalidArgument("frames must be positive");
  if (options.snr_db.empty()) throw InvalidArgument("SNR grid is empty");
  const int n_ant = config.n_antennas;
  const int q = config.n_subcarriers;
  const int n_users = config.n_users;
  if (q < 2) throw InvalidArgument("a frame needs Q >= 2 subcarriers");
  if (options.population && options.population->total() != n_ant)
    throw InvalidArgument("ADC population does not cover N antennas");
  const int info_len = 2 * q - 2;
  const int cp = cyclic_prefix_length(config);
  std::vector<int> taps_per_user(n_users);
  for (int u = 0; u < n_users; ++u) taps_per_user[u] = config.taps_for(u);

  struct FrameErrors {
    std::vector<long> errors;
  };

  auto run_frame = [&](std::size_t snr_index, int frame) {
    const double es = db_to_linear(options.snr_db[snr_index]);
    Rng rng(derive_seed(derive_seed(seed, snr_index), static_cast<std::uint64_t>(frame)));
    SystemConfig cfg = config;
    cfg.symbol_energy = es;
    const ChannelSet h = draw_channel(cfg, rng);

    std::vector<AdcSpec> specs;
    if (options.population) {
      std::vector<int> order;
      if (options.policy.kind == SwitchKind::Random) {
        order.resize(n_ant);
        std::iota(order.begin(), order.end(), 0);
        for (int i = n_ant - 1; i > 0; --i) {
          const int j = std::min(i, static_cast<int>(rng.uniform() * (i + 1)));
          std::swap(order[i], order[j]);
        }
      } else if (options.policy.kind == SwitchKind::Fixed) {
        for (int n = 0; n < n_ant; ++n)
          if (options.policy.fixed.high_res(n)) order.push_back(n);
        for (int n = 0; n < n_ant; ++n)
          if (!options.policy.fixed.high_res(n)) order.push_back(n);
      } else {
        order = rank_by_norm(h);
      }
      specs = assign_population(*options.population, order);
    } else {
      specs = options.policy.apply(h, config.n_highres, rng).to_specs();
    }

    std::vector<AdcSpec> design = specs;
    if (!options.matched_multibit)
      for (auto& s : design)
        if (s.kind == AdcKind::MultiBit) s = AdcSpec::high_res();

    const QuantizedStats stats = build_stats(h, design, es);
    std::vector<cvec> w(n_users);
    std::vector<double> a(n_users);
    for (int u = 0; u < n_users; ++u) {
      w[u] = solve_equalizer(stats.d, stats.g[u]);
      a[u] = stats.g[u].dot(w[u]).real() / (q * es);
    }

    std::vector<Bits> info(n_users);
    std::vector<cvec> x(n_users);
    for (int u = 0; u < n_users; ++u) {
      info[u].resize(info_len);
      for (auto& b : info[u]) b = rng.uniform() < 0.5 ? 0 : 1;
      const Bits coded = conv_encode_terminated(info[u]);
      cvec freq(q);
      for (int k = 0; k < q; ++k) freq(k) = qam16(std::span(coded).subspan(4 * k, 4), es);
      x[u] = unitary_idft(freq);
    }

    std::vector<cvec> rx = ofdm_receive(h, x, cp, taps_per_user);
    std::vector<cvec> r_freq(n_ant);
    for (int n = 0; n < n_ant; ++n) {
      if (!options.noiseless)
        for (int k = 0; k < q; ++k) rx[n](k) += rng.complex_normal(1.0);
      const double input_std = std::sqrt((1.0 + es * h.spectral_energy(n) / q) / 2.0);
      r_freq[n] = unitary_dft(quantize_vector(rx[n], specs[n], input_std));
    }

    FrameErrors out;
    out.errors.assign(n_users, 0);
    Bits hard(4 * q);
    for (int u = 0; u < n_users; ++u) {
      cvec xhat = cvec::Zero(q);
      for (int n = 0; n < n_ant; ++n)
        xhat.array() += w[u].segment(static_cast<Eigen::Index>(n) * q, q).array() * r_freq[n].array();
      for (int k = 0; k < q; ++k) qam16_demap(xhat(k), a[u], es, std::span(hard).subspan(4 * k, 4));
      const Bits decoded = viterbi_decode(hard, true);
      for (int i = 0; i < info_len; ++i) out.errors[u] += decoded[i] != info[u][i];
    }
    return out;
  };

  const std::size_t n_snr = options.snr_db.size();
  const std::size_t total = n_snr * static_cast<std::size_t>(options.frames);
  std::vector<FrameErrors> results(total);
  std::vector<std::exception_ptr> errors(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < total; i = next++) {
      try {
        results[i] = run_frame(i / options.frames, static_cast<int>(i % options.frames));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(total)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  BerReport report;
  report.n_users = n_users;
  for (std::size_t s = 0; s < n_snr; ++s) {
    for (int u = 0; u < n_users; ++u) {
      BerPoint p;
      p.snr_db = options.snr_db[s];
      p.ebn0_db = p.snr_db - 3.0;  // rate 1/2 with 4 bits per symbol
      p.user = u;
      p.frames = options.frames;
      p.bits = static_cast<long>(options.frames) * info_len;
      for (int f = 0; f < options.frames; ++f) p.bit_errors += results[s * options.frames + f].errors[u];
      p.ber = static_cast<double>(p.bit_errors) / p.bits;
      p.ci95 = wilson_half_width(p.bit_errors, p.bits);
      report.points.push_back(p);
    }
  }
  return report;
}

}  // namespace mixadc
