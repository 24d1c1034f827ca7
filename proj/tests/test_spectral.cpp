// SPDX-License-Identifier: Apache-2.0

#include "mixadc/spectral.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace mixadc;
using mixadc::test::Gen;

TEST_SUITE("spectral") {

TEST_CASE("unitary DFT of an impulse and of a constant") {
  cvec impulse = cvec::Zero(4);
  impulse(0) = 1.0;
  const cvec a = unitary_dft(impulse);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(a(i) - cplx(0.5, 0.0)) < 1e-15);

  const cvec b = unitary_dft(cvec::Ones(4));
  CHECK(std::abs(b(0) - cplx(2.0, 0.0)) < 1e-15);
  for (int i = 1; i < 4; ++i) CHECK(std::abs(b(i)) < 1e-15);

  CHECK_THROWS_AS(unitary_dft(cvec()), InvalidArgument);
}

TEST_CASE("DFT matches the entrywise matrix and is unitary") {
  Gen gen(11);
  for (int q : {1, 2, 3, 5, 8, 12, 16}) {
    const cvec x = gen.cvector(q);
    const cvec fx = unitary_dft(x);
    CHECK((fx - test::ref_dft(q) * x).norm() < 1e-12);
    CHECK(std::abs(fx.norm() - x.norm()) < 1e-12);
    CHECK((unitary_idft(fx) - x).norm() < 1e-12);
    CHECK((dft_matrix(q) - test::ref_dft(q)).norm() < 1e-12);
  }
}

TEST_CASE("taps_to_spectrum: single tap, delay and Parseval") {
  cvec h = cvec::Zero(4);
  h(0) = 1.0;
  CHECK((taps_to_spectrum(h) - cvec::Ones(4)).norm() < 1e-14);

  h.setZero();
  h(1) = 1.0;
  const cvec lam = taps_to_spectrum(h);
  for (int q = 0; q < 4; ++q) CHECK(std::abs(lam(q) - std::polar(1.0, -2.0 * kPi * q / 4)) < 1e-14);

  Gen gen(3);
  const cvec r = gen.cvector(8);
  CHECK(std::abs(taps_to_spectrum(r).squaredNorm() - 8.0 * r.squaredNorm()) < 1e-12);
  CHECK((spectrum_to_taps(taps_to_spectrum(r)) - r).norm() < 1e-12);
}

TEST_CASE("circulant construction and diagonalization") {
  cvec h(2);
  h << 1.0, 0.0;
  CHECK((circulant_from_taps(h) - cmat::Identity(2, 2)).norm() == 0.0);

  const cplx a(0.3, -1.0), b(2.0, 0.5);
  h << a, b;
  const cmat c = circulant_from_taps(h);
  CHECK(c(0, 0) == a);
  CHECK(c(0, 1) == b);
  CHECK(c(1, 0) == b);
  CHECK(c(1, 1) == a);

  Gen gen(5);
  for (int q : {4, 6, 8}) {
    const cvec t = gen.taps(q, 3);
    const cmat cc = circulant_from_taps(t);
    CHECK((cc - test::ref_circulant(t)).norm() < 1e-14);
    CHECK((cc.col(0) - t).norm() == 0.0);
    const cmat f = test::ref_dft(q);
    const cmat diag = f * cc * f.adjoint();
    const cvec lam = taps_to_spectrum(t);
    double off = 0.0;
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j)
        if (i != j) off = std::max(off, std::abs(diag(i, j)));
    CHECK(off < 1e-12);
    CHECK((diag.diagonal() - lam).norm() < 1e-12);
  }
}

TEST_CASE("draw_channel: tap variance, determinism and Parseval on every set") {
  SystemConfig cfg;
  cfg.n_antennas = 1;
  cfg.n_subcarriers = 8;
  for (int t : {1, 5}) {
    cfg.n_taps = {t};
    Rng rng(42);
    CompensatedSum s;
    const int draws = 100000;
    for (int d = 0; d < draws; ++d) {
      const ChannelSet ch = draw_channel(cfg, rng);
      s.add(ch.taps(0, 0).squaredNorm());
      if (d < 50) {
        CHECK(std::abs(ch.spectrum(0, 0).squaredNorm() / 8.0 - ch.taps(0, 0).squaredNorm()) < 1e-12);
        for (int i = t; i < 8; ++i) CHECK(ch.taps(0, 0)(i) == cplx(0.0));
      }
    }
    CHECK(std::abs(s.value() / draws - 1.0) < 0.02);
  }

  cfg.n_antennas = 3;
  cfg.n_users = 2;
  cfg.n_taps = {2, 4};
  Rng r1(9), r2(9);
  const ChannelSet a = draw_channel(cfg, r1), b = draw_channel(cfg, r2);
  for (int u = 0; u < 2; ++u)
    for (int n = 0; n < 3; ++n) CHECK(a.taps(u, n) == b.taps(u, n));
  CHECK(a.taps(0, 0)(2) == cplx(0.0));
  CHECK(a.taps(1, 0)(3) != cplx(0.0));
}

TEST_CASE("split_csi: boundary cases and error variance") {
  SystemConfig cfg;
  cfg.n_antennas = 2;
  cfg.n_subcarriers = 4;
  cfg.n_taps = {2};
  Rng rng(1);
  const ChannelSet h = draw_channel(cfg, rng);

  const CsiSplit exact = split_csi(h, 0.0, rng);
  CHECK(exact.estimate.taps(0, 1) == h.taps(0, 1));
  CHECK(exact.error.taps(0, 1).norm() == 0.0);

  const CsiSplit blind = split_csi(h, 1.0, rng);
  CHECK(blind.estimate.taps(0, 0).norm() == 0.0);

  CHECK_THROWS_AS(split_csi(h, -0.1, rng), InvalidArgument);
  CHECK_THROWS_AS(split_csi(h, 1.5, rng), InvalidArgument);

  // Joint law: draw h first, then split; the error must have variance mse / T
  // per tap and the two parts must add back to h.
  const int t = 5, draws = 100000;
  cfg.n_antennas = 1;
  cfg.n_subcarriers = 8;
  cfg.n_taps = {t};
  CompensatedSum err, est, cross;
  for (int d = 0; d < draws; ++d) {
    const ChannelSet ch = draw_channel(cfg, rng);
    const CsiSplit s = split_csi(ch, 0.1, rng);
    const cplx e = s.error.taps(0, 0)(0), x = s.estimate.taps(0, 0)(0);
    err.add(std::norm(e));
    est.add(std::norm(x));
    cross.add((e * std::conj(x)).real());
    if (d < 20) CHECK((s.estimate.taps(0, 0) + s.error.taps(0, 0) - ch.taps(0, 0)).norm() < 1e-15);
  }
  CHECK(std::abs(err.value() / draws * t - 0.1) < 0.005);
  CHECK(std::abs(est.value() / draws * t - 0.9) < 0.02);
  CHECK(std::abs(cross.value() / draws * t) < 0.01);
}

TEST_CASE("config validation") {
  SystemConfig cfg;
  cfg.n_antennas = 4;
  cfg.n_highres = 5;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.n_highres = 2;
  cfg.n_subcarriers = 4;
  cfg.n_taps = {5};
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.n_taps = {2, 3};
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg.n_users = 2;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.taps_for(1) == 3);
  CHECK(cfg.max_taps() == 3);
}

TEST_CASE("restrict_to keeps the chosen antennas in order") {
  Gen gen(8);
  const ChannelSet ch = gen.channel(4, 4, 2, 2);
  const std::vector<int> keep{3, 1};
  const ChannelSet sub = ch.restrict_to(keep);
  CHECK(sub.n_antennas() == 2);
  CHECK(sub.n_users() == 2);
  CHECK(sub.taps(1, 0) == ch.taps(1, 3));
  CHECK(sub.spectrum(0, 1) == ch.spectrum(0, 1));
  CHECK(std::abs(ch.spectral_energy(2) - 4.0 * ch.tap_energy(2)) < 1e-12);
}

}  // TEST_SUITE
