// SPDX-License-Identifier: Apache-2.0

#include "mixadc/quantizer.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace mixadc;
using mixadc::test::Gen;

namespace {
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
}

TEST_SUITE("quantizer") {

TEST_CASE("csign examples and unit modulus") {
  CHECK(std::abs(csign({1.0, 2.0}) - cplx(kInvSqrt2, kInvSqrt2)) < 1e-15);
  CHECK(std::abs(csign({-3.0, 0.5}) - cplx(-kInvSqrt2, kInvSqrt2)) < 1e-15);
  CHECK(std::abs(csign({0.0, 0.0}) - cplx(kInvSqrt2, kInvSqrt2)) < 1e-15);
  Gen gen(1);
  for (int i = 0; i < 1000; ++i) CHECK(std::abs(std::abs(csign(gen.cn(gen.real(1e-6, 1e6)))) - 1.0) < 1e-15);
}

TEST_CASE("quantize_vector per kind") {
  cvec y(1);
  y << cplx(1.0, 1.0);
  CHECK(quantize_vector(y, AdcSpec::high_res()) == y);
  y << cplx(-0.1, -5.0);
  CHECK(std::abs(quantize_vector(y, AdcSpec::one_bit())(0) - cplx(-kInvSqrt2, -kInvSqrt2)) < 1e-15);

  const AdcSpec one = lloyd_max_design(1, 1.0);
  CHECK(std::abs(quantize_real(0.3, one) - std::sqrt(2.0 / kPi)) < 1e-9);
  CHECK(std::abs(quantize_real(-0.3, one) + std::sqrt(2.0 / kPi)) < 1e-9);

  y << cplx(std::nan(""), 0.0);
  CHECK_THROWS_AS(quantize_vector(y, AdcSpec::one_bit()), InvalidArgument);

  // High-res passthrough on arbitrary finite input.
  Gen gen(2);
  const cvec v = gen.cvector(64, 100.0);
  CHECK(quantize_vector(v, AdcSpec::high_res()) == v);
}

TEST_CASE("multi-bit quantizer scales with the input standard deviation") {
  const AdcSpec s = AdcSpec::multi_bit(3);
  Gen gen(4);
  for (int i = 0; i < 200; ++i) {
    const double x = gen.real(-4.0, 4.0), sd = gen.real(0.1, 5.0);
    CHECK(std::abs(quantize_real(x * sd, s, sd) - sd * quantize_real(x, s, 1.0)) < 1e-12);
  }
}

TEST_CASE("Lloyd-Max designs") {
  const AdcSpec one = lloyd_max_design(1, 1.0);
  REQUIRE(one.levels.size() == 2);
  CHECK(std::abs(one.levels[1] - std::sqrt(2.0 / kPi)) < 1e-9);
  CHECK(std::abs(one.levels[0] + std::sqrt(2.0 / kPi)) < 1e-9);

  const AdcSpec one2 = lloyd_max_design(1, 2.0);
  CHECK(std::abs(one2.levels[1] - 2.0 * std::sqrt(2.0 / kPi)) < 1e-9);

  double prev = 1.0;
  for (int b = 1; b <= 5; ++b) {
    const AdcSpec s = lloyd_max_design(b, 1.0);
    CHECK_NOTHROW(s.validate());
    const int m = 1 << b;
    REQUIRE(static_cast<int>(s.levels.size()) == m);
    REQUIRE(static_cast<int>(s.thresholds.size()) == m - 1);
    for (int i = 0; i < m; ++i) CHECK(std::abs(s.levels[i] + s.levels[m - 1 - i]) < 1e-12);
    const double mse = quantizer_mse(s);
    CHECK(mse < prev);
    prev = mse;
  }
  // Known Gaussian optimum distortion values to three digits.
  CHECK(std::abs(quantizer_mse(lloyd_max_design(1, 1.0)) - (1.0 - 2.0 / kPi)) < 1e-9);
  CHECK(std::abs(quantizer_mse(lloyd_max_design(2, 1.0)) - 0.1175) < 5e-4);
  CHECK(std::abs(quantizer_mse(lloyd_max_design(3, 1.0)) - 0.03455) < 5e-4);
  CHECK_NOTHROW(lloyd_max_design(8, 1.0));

  CHECK_THROWS_AS(lloyd_max_design(0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(lloyd_max_design(9, 1.0), InvalidArgument);
}

TEST_CASE("quantizer MSE agrees with a sampled estimate") {
  std::mt19937_64 eng(5);
  std::normal_distribution<double> nd;
  const AdcSpec s = AdcSpec::multi_bit(2);
  CompensatedSum err;
  const int n = 400000;
  for (int i = 0; i < n; ++i) {
    const double x = nd(eng);
    const double e = quantize_real(x, s) - x;
    err.add(e * e);
  }
  CHECK(std::abs(err.value() / n - quantizer_mse(s)) < 3e-3);
}

TEST_CASE("Bussgang gains") {
  CHECK(bussgang_gain(AdcSpec::high_res(), 3.7) == 1.0);
  // Complex input of unit variance: E[sgn(u)^* u] / E|u|^2.
  CHECK(std::abs(bussgang_gain(AdcSpec::one_bit(), 1.0) - std::sqrt(2.0 / kPi)) < 1e-15);
  CHECK_THROWS_AS(bussgang_gain(AdcSpec::one_bit(), 0.0), InvalidArgument);

  // b = 2 against a sampled E[q(u) u] / E[u^2] on a unit real Gaussian.
  const AdcSpec s = AdcSpec::multi_bit(2);
  std::mt19937_64 eng(6);
  std::normal_distribution<double> nd;
  const int batches = 16, per = 62500;
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    CompensatedSum acc;
    for (int i = 0; i < per; ++i) {
      const double x = nd(eng);
      acc.add(quantize_real(x, s) * x);
    }
    means.push_back(acc.value() / per);
  }
  double mean = 0.0, var = 0.0;
  for (double m : means) mean += m / batches;
  for (double m : means) var += (m - mean) * (m - mean) / (batches - 1);
  const double se = std::sqrt(var / batches);
  const double gain = bussgang_gain(s, 1.0);
  CHECK(std::abs(mean - gain) < 3.0 * se);
  CHECK(gain > std::sqrt(2.0 / kPi));
  CHECK(gain < 1.0);

  for (int b = 1; b <= 6; ++b) {
    const double gb = bussgang_gain(lloyd_max_design(b), 1.0);
    CHECK(gb > 0.0);
    CHECK(gb <= 1.0);
  }
}

TEST_CASE("labels and switch vectors") {
  CHECK(AdcSpec::from_label("hr").is_high_res());
  CHECK(AdcSpec::from_label("1").kind == AdcKind::OneBit);
  CHECK(AdcSpec::from_label("3b").bits == 3);
  CHECK(AdcSpec::from_label("4").label() == "4b");
  CHECK_THROWS_AS(AdcSpec::from_label("x"), InvalidArgument);

  AdcSwitchVector d{{1, 0, 1, 0}};
  CHECK(d.count() == 2);
  const auto specs = d.to_specs();
  CHECK(specs[0].is_high_res());
  CHECK(specs[1].kind == AdcKind::OneBit);
}

TEST_CASE("AdcSpec validation rejects malformed tables") {
  AdcSpec s = AdcSpec::multi_bit(2);
  CHECK_NOTHROW(s.validate());
  std::swap(s.levels[0], s.levels[1]);
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = AdcSpec::multi_bit(2);
  s.thresholds.pop_back();
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
}

}  // TEST_SUITE
