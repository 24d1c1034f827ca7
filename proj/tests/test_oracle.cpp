// SPDX-License-Identifier: Apache-2.0

#include "mixadc/equalizer.hpp"
#include "mixadc/oracle.hpp"
#include "mixadc/secondstats.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace mixadc;
using mixadc::test::Gen;

namespace {

double z_score(const MomentEstimate& e, cplx closed) { return std::abs(e.value - closed) / e.std_error; }

ChannelSet flat_unit(int n, int q, int u) {
  std::vector<std::vector<cvec>> taps(u, std::vector<cvec>(n, cvec::Zero(q)));
  for (auto& user : taps)
    for (auto& h : user) h(0) = 1.0;
  return ChannelSet(std::move(taps));
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("mixed-pair moments") {
  Rng rng(1);
  const PairMomentEstimate same = mc_pair_moments(1.0, 1.0, 1.0, 200000, rng);
  CHECK(std::abs(same.cross_closed - cplx(std::sqrt(2.0 / kPi), 0.0)) < 1e-15);
  CHECK(z_score(same.cross, same.cross_closed) < 3.0);

  const PairMomentEstimate indep = mc_pair_moments(1.0, 2.0, 0.0, 200000, rng);
  CHECK(std::abs(indep.cross.value) < 3.0 * indep.cross.std_error);
  CHECK(std::abs(indep.sign_corr.value) < 3.0 * indep.sign_corr.std_error);

  const PairMomentEstimate half = mc_pair_moments(1.0, 1.0, 0.5, 200000, rng);
  CHECK(std::abs(half.sign_corr_closed - cplx(1.0 / 3.0, 0.0)) < 1e-15);
  CHECK(z_score(half.sign_corr, half.sign_corr_closed) < 3.0);
  CHECK(z_score(half.cross, half.cross_closed) < 3.0);

  CHECK_THROWS_AS(mc_pair_moments(1.0, 1.0, 2.0, 1000, rng), InvalidArgument);
  CHECK_THROWS_AS(mc_pair_moments(0.0, 1.0, 0.0, 1000, rng), InvalidArgument);
}

TEST_CASE("mc_delta against the closed form") {
  Rng rng(2);
  Gen gen(3);
  {
    const ChannelSet ch = gen.channel(1, 2, 1);
    const auto specs = AdcSwitchVector{{1}}.to_specs();
    const QuantizedStats st = build_stats(ch, specs, 1.0);
    const cvec w = solve_equalizer(st.d, st.g[0]);
    const MomentEstimate e = mc_delta(ch, specs, w, 1.0, 100000, rng);
    CHECK(z_score(e, delta_gmi(st.d, st.g[0], 2, 1.0).delta) < 3.0);
  }
  {
    const ChannelSet ch = gen.channel(2, 4, 2);
    const auto specs = AdcSwitchVector{{0, 0}}.to_specs();
    const QuantizedStats st = build_stats(ch, specs, 1.0);
    const cvec w = solve_equalizer(st.d, st.g[0]);
    const MomentEstimate e = mc_delta(ch, specs, w, 1.0, 100000, rng);
    CHECK(z_score(e, delta_gmi(st.d, st.g[0], 4, 1.0).delta) < 3.0);
  }
  {
    const ChannelSet ch = gen.channel(2, 4, 2);
    const MomentEstimate e = mc_delta(ch, AdcSwitchVector{{1, 0}}.to_specs(), cvec::Zero(8), 1.0, 20000, rng);
    CHECK(e.degenerate);
    CHECK(std::abs(e.value) == 0.0);
  }
}

TEST_CASE("mc_g segments") {
  Rng rng(4);
  Gen gen(5);
  const ChannelSet ch = gen.channel(2, 4, 2);
  const auto specs = AdcSwitchVector{{1, 0}}.to_specs();
  const auto est = mc_g(ch, specs, 1.0, 100000, rng);
  const cvec g = build_g(ch, specs, 1.0, 0);
  for (int i = 0; i < 4; ++i) {
    CHECK(z_score(est[i], g(i)) < 3.5);
    CHECK(std::abs(g(i) - std::conj(ch.spectrum(0, 0)(i))) < 1e-14);
  }

  // Flat unit channel, one-bit: conj(lambda) / sqrt(pi).
  const ChannelSet flat = flat_unit(1, 2, 1);
  const auto ob = AdcSwitchVector{{0}}.to_specs();
  const auto ef = mc_g(flat, ob, 1.0, 100000, rng);
  for (int i = 0; i < 2; ++i) CHECK(z_score(ef[i], 1.0 / std::sqrt(kPi)) < 3.0);

  // Two users with unit spectra: sqrt(2/pi) conj(lambda^u) / sqrt(3).
  const ChannelSet two = flat_unit(1, 2, 2);
  const auto eu = mc_g(two, ob, 1.0, 100000, rng, 1);
  for (int i = 0; i < 2; ++i) CHECK(z_score(eu[i], std::sqrt(2.0 / kPi) / std::sqrt(3.0)) < 3.0);
}

TEST_CASE("standard errors shrink with the sample count") {
  Rng rng(6);
  const PairMomentEstimate a = mc_pair_moments(1.0, 1.0, cplx(0.3, 0.4), 20000, rng);
  const PairMomentEstimate b = mc_pair_moments(1.0, 1.0, cplx(0.3, 0.4), 320000, rng);
  CHECK(a.cross.std_error > 0.0);
  CHECK(a.cross.std_error / b.cross.std_error > 2.5);
  CHECK(a.cross.std_error / b.cross.std_error < 6.0);
  CHECK(b.cross.n_samples == 320000);
}

}  // TEST_SUITE
