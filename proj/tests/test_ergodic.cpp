// SPDX-License-Identifier: Apache-2.0

#include "mixadc/equalizer.hpp"
#include "mixadc/ergodic.hpp"
#include "mixadc/switching.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace mixadc;
using mixadc::test::Gen;

namespace {

SystemConfig small_config() {
  SystemConfig c;
  c.n_antennas = 4;
  c.n_highres = 1;
  c.n_subcarriers = 4;
  c.n_taps = {2};
  c.symbol_energy = 1.0;
  return c;
}

}  // namespace

TEST_SUITE("ergodic") {

TEST_CASE("training overhead") {
  CHECK(training_length(64, 16, 10, 14) == 4);
  CHECK(training_overhead(64, 16, 10, 14, 53) == 49.0 / 53.0);
  CHECK(training_overhead(64, 64, 1, 1, 53) == 52.0 / 53.0);
  for (int n : {1, 7, 32})
    for (int tc : {2, 10, 100}) CHECK(training_overhead(n, n, 1, 1, tc) == double(tc - 1) / tc);
  CHECK(training_length(10, 3, 5, 2) == 4 * 3);
  CHECK_THROWS_AS(training_overhead(8, 0, 1, 1, 10), InvalidArgument);
  CHECK_THROWS_AS(training_overhead(8, 1, 1, 1, 8), InvalidArgument);
  CHECK_THROWS_AS(training_overhead(8, 1, 1, 1, 5), InvalidArgument);
}

TEST_CASE("bounds from per-draw deltas") {
  const std::vector<double> same(10, 0.6);
  const BoundEstimate b = bounds_from_deltas(same, 0.9);
  CHECK(b.lower == b.upper);
  CHECK(b.lower_se == 0.0);
  CHECK(std::abs(b.lower + 0.9 * std::log(0.4)) < 1e-15);

  Gen gen(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> d(gen.integer(2, 50));
    for (double& x : d) x = gen.real(0.0, 0.999);
    const double rho = gen.real(0.1, 1.0);
    const BoundEstimate e = bounds_from_deltas(d, rho);
    CHECK(e.lower <= e.upper + 1e-15);
    CHECK(e.lower >= 0.0);
  }
  CHECK_THROWS_AS(bounds_from_deltas(std::vector<double>{0.5}, 1.0), InvalidArgument);
}

TEST_CASE("conditional statistics") {
  Gen gen(2);
  const ChannelSet est = gen.channel(3, 4, 2);
  const std::vector<int> taps{2};
  const auto specs = AdcSwitchVector{{1, 0, 0}}.to_specs();
  Rng rng(1);

  const QuantizedStats exact = conditional_stats(est, taps, 0.0, specs, 1.5, {}, rng);
  const QuantizedStats direct = build_stats(est, specs, 1.5);
  CHECK(exact.g[0] == direct.g[0]);
  CHECK(exact.d.dense() == direct.d.dense());

  const QuantizedStats avg = conditional_stats(est, taps, 0.1, specs, 1.5, {}, rng);
  CHECK(avg.d.hermitian_defect() < 1e-12);
  CHECK_NOTHROW(check_positive_definite(avg.d));

  // With a zero estimate the high-resolution segment of E[g | h_hat] vanishes.
  const ChannelSet zero({std::vector<cvec>(3, cvec::Zero(4))});
  ConditionalOptions many;
  many.mc_samples = 4000;
  const QuantizedStats z = conditional_stats(zero, taps, 0.999, specs, 1.0, many, rng);
  CHECK(z.g[0].segment(0, 4).norm() < 0.1);
  ConditionalOptions approx;
  approx.approximate = true;
  const QuantizedStats za = conditional_stats(zero, taps, 0.999, specs, 1.0, approx, rng);
  CHECK(za.g[0].norm() == 0.0);

  // The approximation shares the exact high-resolution statistics.
  const QuantizedStats ea = conditional_stats(est, taps, 0.1, AdcSwitchVector::all(3, 1).to_specs(), 1.5, approx, rng);
  ConditionalOptions big;
  big.mc_samples = 20000;
  const QuantizedStats em = conditional_stats(est, taps, 0.1, AdcSwitchVector::all(3, 1).to_specs(), 1.5, big, rng);
  CHECK((ea.g[0] - em.g[0]).norm() / ea.g[0].norm() < 0.05);
  for (int q = 0; q < 4; ++q) CHECK(std::abs(ea.d.block(1, 1)(q) - em.d.block(1, 1)(q)) < 0.1);

  CHECK_THROWS_AS(conditional_stats(est, taps, 1.0, specs, 1.0, {}, rng), InvalidArgument);
  ConditionalOptions none;
  none.mc_samples = 0;
  CHECK_THROWS_AS(conditional_stats(est, taps, 0.1, specs, 1.0, none, rng), InvalidArgument);
}

TEST_CASE("perfect CSI with rho = 1 reproduces the averaged static GMI") {
  SystemConfig cfg = small_config();
  ErgodicOptions opt;
  opt.rho_override = 1.0;
  const int draws = 12;
  const std::uint64_t seed = 77;
  const ErgodicReport r = ergodic_bounds(cfg, SwitchPolicy::norm_based(), draws, opt, seed);
  CHECK(r.rho == 1.0);
  CHECK(r.n_draws == draws);
  REQUIRE(r.deltas.size() == static_cast<std::size_t>(draws));

  CompensatedSum gmi;
  for (int d = 0; d < draws; ++d) {
    Rng rng(derive_seed(seed, d));
    const ChannelSet h = draw_channel(cfg, rng);
    const GmiReport g = gmi_static(h, norm_based_switch(h, cfg.n_highres), cfg.symbol_energy);
    CHECK(std::abs(g.delta - r.deltas[d]) < 1e-13);
    gmi.add(g.gmi_nats);
  }
  CHECK(std::abs(r.upper - gmi.value() / draws) < 1e-13);
  CHECK(r.lower <= r.upper);
}

TEST_CASE("Jensen ordering, determinism and thread independence") {
  Gen gen(3);
  for (int trial = 0; trial < 6; ++trial) {
    SystemConfig cfg;
    cfg.n_antennas = gen.integer(1, 4);
    cfg.n_highres = gen.integer(0, cfg.n_antennas);
    cfg.n_subcarriers = gen.integer(1, 4);
    cfg.n_taps = {gen.integer(1, cfg.n_subcarriers)};
    cfg.n_users = gen.integer(1, 2);
    cfg.symbol_energy = std::pow(10.0, gen.real(-1.0, 2.0));
    ErgodicOptions opt;
    const auto policy = gen.coin() ? SwitchPolicy::norm_based() : SwitchPolicy::random();
    const ErgodicReport a = ergodic_bounds(cfg, policy, 8, opt, 5);
    opt.threads = 3;
    const ErgodicReport b = ergodic_bounds(cfg, policy, 8, opt, 5);
    CHECK(a.lower <= a.upper);
    CHECK(a.lower >= 0.0);
    CHECK(a.lower == b.lower);
    CHECK(a.upper == b.upper);
    CHECK(a.deltas == b.deltas);
    CHECK(a.lower_per_user.size() == static_cast<std::size_t>(cfg.n_users));
    for (double d : a.deltas) {
      CHECK(d >= 0.0);
      CHECK(d < 1.0);
    }
  }
}

TEST_CASE("imperfect CSI uses the training overhead") {
  SystemConfig cfg = small_config();
  cfg.mse_h = 0.1;
  cfg.coherence_len = 20;
  cfg.n_highres = 2;
  ErgodicOptions opt;
  opt.conditional.mc_samples = 8;
  const ErgodicReport r = ergodic_bounds(cfg, SwitchPolicy::norm_based(), 4, opt, 1);
  CHECK(r.rho == 18.0 / 20.0);
  CHECK(r.lower <= r.upper);

  cfg.n_highres = 0;
  CHECK_THROWS_AS(ergodic_bounds(cfg, SwitchPolicy::norm_based(), 4, opt, 1), InvalidArgument);
  cfg.n_highres = 2;
  CHECK_THROWS_AS(ergodic_bounds(cfg, SwitchPolicy::norm_based(), 1, opt, 1), InvalidArgument);
}

TEST_CASE("bounds are tight for N = 8, K = 2, Q = 8, T = 3 at 0 dB") {
  SystemConfig cfg;
  cfg.n_antennas = 8;
  cfg.n_highres = 2;
  cfg.n_subcarriers = 8;
  cfg.n_taps = {3};
  cfg.symbol_energy = 1.0;
  ErgodicOptions opt;
  opt.threads = 4;
  const ErgodicReport r = ergodic_bounds(cfg, SwitchPolicy::norm_based(), 100, opt, 11);
  CHECK((r.upper - r.lower) / r.upper < 0.05);
}

TEST_CASE("capacity and antenna selection options") {
  SystemConfig cfg = small_config();
  ErgodicOptions opt;
  const ErgodicReport plain = ergodic_bounds(cfg, SwitchPolicy::norm_based(), 6, opt, 3);
  CHECK(std::isnan(plain.capacity));
  opt.with_capacity = true;
  const ErgodicReport cap = ergodic_bounds(cfg, SwitchPolicy::norm_based(), 6, opt, 3);
  CHECK(cap.capacity > cap.upper);
  opt.antenna_selection = true;
  const ErgodicReport as = ergodic_bounds(cfg, SwitchPolicy::norm_based(), 6, opt, 3);
  CHECK(as.lower <= cap.lower + 1e-12);
}

}  // TEST_SUITE
