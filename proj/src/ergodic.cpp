// SPDX-License-Identifier: Apache-2.0

#include "mixadc/ergodic.hpp"

#include "mixadc/equalizer.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <string>
#include <thread>

namespace mixadc {

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

struct DrawResult {
  std::vector<double> deltas;  // one per user
  double capacity = 0.0;
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_and_se(const std::vector<double>& x) {
  CompensatedSum s;
  for (double v : x) s.add(v);
  const double n = static_cast<double>(x.size());
  MeanSe out;
  out.mean = s.value() / n;
  if (x.size() < 2) return out;
  CompensatedSum ss;
  for (double v : x) ss.add((v - out.mean) * (v - out.mean));
  out.se = std::sqrt(ss.value() / (n - 1.0) / n);
  return out;
}

ChannelSet draw_error(const ChannelSet& estimate, std::span<const int> taps_per_user, double mse_h, Rng& rng) {
  const int q = estimate.n_subcarriers();
  std::vector<std::vector<cvec>> taps(estimate.n_users());
  for (int u = 0; u < estimate.n_users(); ++u) {
    const int t = taps_per_user.size() == 1 ? taps_per_user[0] : taps_per_user[u];
    for (int n = 0; n < estimate.n_antennas(); ++n) {
      cvec h = estimate.taps(u, n);
      for (int i = 0; i < t && i < q; ++i) h(i) += rng.complex_normal(mse_h / t);
      taps[u].push_back(std::move(h));
    }
  }
  return ChannelSet(std::move(taps));
}

}  // namespace

int training_length(int n_antennas, int n_highres, int n_users, int pilot_spacing) {
  if (n_highres <= 0)
    throw InvalidArgument("channel training needs at least one high-resolution ADC pair (K >= 1)");
  if (n_antennas < 1 || n_users < 1 || pilot_spacing < 1)
    throw InvalidArgument("N, U and N_s must be positive");
  return ceil_div(n_antennas, n_highres) * ceil_div(n_users, pilot_spacing);
}

double training_overhead(int n_antennas, int n_highres, int n_users, int pilot_spacing, int coherence_len) {
  const int train = training_length(n_antennas, n_highres, n_users, pilot_spacing);
  if (coherence_len <= train)
    throw InvalidArgument("coherence interval " + std::to_string(coherence_len) +
                          " leaves no data symbols after " + std::to_string(train) + " training symbols");
  return static_cast<double>(coherence_len - train) / coherence_len;
}

BoundEstimate bounds_from_deltas(std::span<const double> deltas, double rho) {
  if (deltas.size() < 2) throw InvalidArgument("need at least two channel draws");
  const std::vector<double> d(deltas.begin(), deltas.end());
  std::vector<double> g(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) g[i] = gmi_from_delta(d[i]);
  const MeanSe md = mean_and_se(d);
  const MeanSe mg = mean_and_se(g);
  BoundEstimate out;
  out.lower = rho * gmi_from_delta(md.mean);
  out.upper = rho * mg.mean;
  out.lower_se = rho * md.se / (1.0 - md.mean);
  out.upper_se = rho * mg.se;
  return out;
}

QuantizedStats conditional_stats(const ChannelSet& estimate, std::span<const int> taps_per_user, double mse_h,
                                 std::span<const AdcSpec> specs, double symbol_energy,
                                 const ConditionalOptions& options, Rng& rng) {
  if (!(mse_h >= 0.0 && mse_h < 1.0)) throw InvalidArgument("mse_h must lie in [0, 1)");
  if (options.mc_samples < 1) throw InvalidArgument("mc_samples must be positive");
  if (taps_per_user.size() != 1 && static_cast<int>(taps_per_user.size()) != estimate.n_users())
    throw InvalidArgument("need one tap count or one per user");
  if (mse_h == 0.0) return build_stats(estimate, specs, symbol_energy);

  const int n_users = estimate.n_users();
  if (options.approximate) {
    // E|lambda~_q|^2 = mse_h for every q and user.
    PreQuantCov y(estimate, symbol_energy);
    for (int n = 0; n < estimate.n_antennas(); ++n) y.add_white(n, symbol_energy * n_users * mse_h);
    QuantizedStats stats;
    stats.d = build_D(y, specs);
    for (int u = 0; u < n_users; ++u) stats.g.push_back(build_g(estimate, specs, y, u));
    return stats;
  }

  QuantizedStats acc;
  acc.d = BlockDiagonalMatrix(estimate.n_antennas(), estimate.n_subcarriers());
  acc.g.assign(n_users, cvec::Zero(static_cast<Eigen::Index>(estimate.n_antennas()) * estimate.n_subcarriers()));
  for (int s = 0; s < options.mc_samples; ++s) {
    const ChannelSet h = draw_error(estimate, taps_per_user, mse_h, rng);
    const QuantizedStats one = build_stats(h, specs, symbol_energy);
    for (int u = 0; u < n_users; ++u) acc.g[u] += one.g[u];
    for (int i = 0; i < acc.d.n_blocks(); ++i)
      for (int j = 0; j < acc.d.n_blocks(); ++j) acc.d.block(i, j) += one.d.block(i, j);
  }
  const double inv = 1.0 / options.mc_samples;
  for (auto& g : acc.g) g *= inv;
  for (int i = 0; i < acc.d.n_blocks(); ++i)
    for (int j = 0; j < acc.d.n_blocks(); ++j) acc.d.block(i, j) *= inv;
  check_positive_definite(acc.d);
  return acc;
}

ErgodicReport ergodic_bounds(const SystemConfig& config, const SwitchPolicy& policy, int n_draws,
                             const ErgodicOptions& options, std::uint64_t seed) {
  config.validate();
  if (n_draws < 2) throw InvalidArgument("need at least two channel draws");
  if (options.antenna_selection && config.n_highres < 1)
    throw InvalidArgument("antenna selection needs K >= 1");

  ErgodicReport report;
  report.n_draws = n_draws;
  if (options.rho_override) {
    report.rho = *options.rho_override;
    if (!(report.rho > 0.0 && report.rho <= 1.0)) throw InvalidArgument("rho must lie in (0, 1]");
  } else if (config.mse_h > 0.0) {
    report.rho = training_overhead(config.n_antennas, config.n_highres, config.n_users, config.pilot_spacing,
                                   config.coherence_len);
  } else {
    report.rho = 1.0;  // perfect CSI, no training modeled
  }

  std::vector<int> taps_per_user(config.n_users);
  for (int u = 0; u < config.n_users; ++u) taps_per_user[u] = config.taps_for(u);

  const double es = config.symbol_energy;
  auto evaluate = [&](int d) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(d)));
    const ChannelSet h = draw_channel(config, rng);
    ChannelSet est = h;
    if (config.mse_h > 0.0) est = split_csi(h, config.mse_h, rng).estimate;
    const AdcSwitchVector delta = policy.apply(est, config.n_highres, rng);

    std::vector<AdcSpec> specs;
    if (options.antenna_selection) {
      std::vector<int> keep;
      for (int n = 0; n < delta.size(); ++n)
        if (delta.high_res(n)) keep.push_back(n);
      est = est.restrict_to(keep);
      specs.assign(keep.size(), AdcSpec::high_res());
    } else {
      for (int n = 0; n < delta.size(); ++n) specs.push_back(delta.high_res(n) ? AdcSpec::high_res() : options.low_res);
    }

    const QuantizedStats stats =
        conditional_stats(est, taps_per_user, config.mse_h, specs, es, options.conditional, rng);
    DrawResult out;
    for (int u = 0; u < config.n_users; ++u)
      out.deltas.push_back(delta_gmi(stats.d, stats.g[u], config.n_subcarriers, es).delta);
    if (options.with_capacity) out.capacity = per_user_capacity(h, es);
    return out;
  };

  std::vector<DrawResult> results(n_draws);
  std::vector<std::exception_ptr> errors(n_draws);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int d = next++; d < n_draws; d = next++) {
      try {
        results[d] = evaluate(d);
      } catch (...) {
        errors[d] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min(options.threads, n_draws));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (int d = 0; d < n_draws; ++d) {
    if (!errors[d]) continue;
    const std::string where = "channel draw " + std::to_string(d) + ": ";
    try {
      std::rethrow_exception(errors[d]);
    } catch (const SolverError& e) {
      throw SolverError(where + e.what(), e.subcarrier());
    } catch (const NumericalIntegrityError& e) {
      throw NumericalIntegrityError(where + e.what());
    }
  }

  const int n_users = config.n_users;
  CompensatedSum lower_sum, upper_sum, lower_var, upper_var;
  report.deltas.reserve(static_cast<std::size_t>(n_draws) * n_users);
  for (const auto& r : results)
    for (double v : r.deltas) report.deltas.push_back(v);
  for (int u = 0; u < n_users; ++u) {
    std::vector<double> du(n_draws);
    for (int d = 0; d < n_draws; ++d) du[d] = results[d].deltas[u];
    const BoundEstimate b = bounds_from_deltas(du, report.rho);
    report.lower_per_user.push_back(b.lower);
    report.upper_per_user.push_back(b.upper);
    lower_sum.add(b.lower);
    upper_sum.add(b.upper);
    lower_var.add(b.lower_se * b.lower_se);
    upper_var.add(b.upper_se * b.upper_se);
  }
  report.lower = lower_sum.value() / n_users;
  report.upper = upper_sum.value() / n_users;
  report.lower_se = std::sqrt(lower_var.value()) / n_users;
  report.upper_se = std::sqrt(upper_var.value()) / n_users;

  if (options.with_capacity) {
    std::vector<double> caps(n_draws);
    for (int d = 0; d < n_draws; ++d) caps[d] = results[d].capacity;
    const MeanSe mc = mean_and_se(caps);
    report.capacity = mc.mean;
    report.capacity_se = mc.se;
  } else {
    report.capacity = std::numeric_limits<double>::quiet_NaN();
    report.capacity_se = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

}  // namespace mixadc
