// SPDX-License-Identifier: Apache-2.0

#include "mixadc/equalizer.hpp"
#include "mixadc/ergodic.hpp"
#include "mixadc/experiment.hpp"
#include "mixadc/linklevel.hpp"
#include "mixadc/switching.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace mixadc;

namespace {

// taps[u][n] as an array of shape (U, N, Q).
ChannelSet channel_from_array(py::array_t<cplx, py::array::c_style | py::array::forcecast> taps) {
  if (taps.ndim() != 3) throw InvalidArgument("taps must have shape (users, antennas, subcarriers)");
  const auto v = taps.unchecked<3>();
  std::vector<std::vector<cvec>> out(v.shape(0), std::vector<cvec>(v.shape(1)));
  for (py::ssize_t u = 0; u < v.shape(0); ++u)
    for (py::ssize_t n = 0; n < v.shape(1); ++n) {
      out[u][n].resize(v.shape(2));
      for (py::ssize_t k = 0; k < v.shape(2); ++k) out[u][n](k) = v(u, n, k);
    }
  return ChannelSet(std::move(out));
}

py::array_t<cplx> channel_to_array(const ChannelSet& ch, bool spectrum) {
  py::array_t<cplx> out({ch.n_users(), ch.n_antennas(), ch.n_subcarriers()});
  auto v = out.mutable_unchecked<3>();
  for (int u = 0; u < ch.n_users(); ++u)
    for (int n = 0; n < ch.n_antennas(); ++n) {
      const cvec& x = spectrum ? ch.spectrum(u, n) : ch.taps(u, n);
      for (int k = 0; k < ch.n_subcarriers(); ++k) v(u, n, k) = x(k);
    }
  return out;
}

py::dict gmi_dict(const GmiReport& r) {
  py::dict d;
  d["delta"] = r.delta;
  d["gmi_nats"] = r.gmi_nats;
  d["gmi_bits"] = r.gmi_bits;
  d["a_opt"] = r.a_opt;
  d["method"] = to_string(r.method);
  d["clipped"] = r.clipped;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mixed-ADC massive MIMO-OFDM rates and link-level simulation";
  m.attr("__version__") = kVersion;

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericalIntegrityError>(m, "NumericalIntegrityError", PyExc_ArithmeticError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  py::class_<SystemConfig>(m, "SystemConfig")
      .def(py::init<>())
      .def_readwrite("n_antennas", &SystemConfig::n_antennas)
      .def_readwrite("n_highres", &SystemConfig::n_highres)
      .def_readwrite("n_subcarriers", &SystemConfig::n_subcarriers)
      .def_readwrite("n_users", &SystemConfig::n_users)
      .def_readwrite("n_taps", &SystemConfig::n_taps)
      .def_readwrite("symbol_energy", &SystemConfig::symbol_energy)
      .def_readwrite("mse_h", &SystemConfig::mse_h)
      .def_readwrite("coherence_len", &SystemConfig::coherence_len)
      .def_readwrite("pilot_spacing", &SystemConfig::pilot_spacing)
      .def("validate", &SystemConfig::validate);

  m.def(
      "draw_channel",
      [](const SystemConfig& config, std::uint64_t seed) {
        Rng rng(seed);
        return channel_to_array(draw_channel(config, rng), false);
      },
      py::arg("config"), py::arg("seed"), "Random taps of shape (U, N, Q), zero padded past each user's T.");
  m.def(
      "spectrum", [](py::array_t<cplx> taps) { return channel_to_array(channel_from_array(taps), true); },
      py::arg("taps"), "Frequency responses sqrt(Q) F h of every tap vector.");

  m.def(
      "norm_based_switch",
      [](py::array_t<cplx> taps, int k) { return norm_based_switch(channel_from_array(taps), k).delta; },
      py::arg("taps"), py::arg("k"));

  m.def(
      "gmi",
      [](py::array_t<cplx> taps, std::vector<int> delta, double symbol_energy, int user) {
        return gmi_dict(gmi_static(channel_from_array(taps), AdcSwitchVector{std::move(delta)}, symbol_energy, user));
      },
      py::arg("taps"), py::arg("delta"), py::arg("symbol_energy"), py::arg("user") = 0,
      "Static GMI of one user for a switch vector (1 = high-resolution, 0 = one-bit).");

  m.def(
      "high_snr_limit",
      [](py::array_t<cplx> taps, int user) { return high_snr_limit(user_spectra(channel_from_array(taps), user)); },
      py::arg("taps"), py::arg("user") = 0, "Limit of Delta as E_s grows with all ADCs one-bit.");

  m.def(
      "lloyd_max",
      [](int bits) {
        const AdcSpec s = lloyd_max_design(bits, 1.0);
        return py::make_tuple(s.thresholds, s.levels, quantizer_mse(s));
      },
      py::arg("bits"), "Unit-variance Lloyd-Max design: (thresholds, levels, mse).");

  m.def(
      "ergodic_bounds",
      [](const SystemConfig& config, int draws, std::uint64_t seed, const std::string& policy,
         std::optional<double> rho, int threads) {
        ErgodicOptions opt;
        opt.rho_override = rho;
        opt.threads = threads;
        const ErgodicReport r = ergodic_bounds(config, SwitchPolicy::from_name(policy), draws, opt, seed);
        py::dict d;
        d["lower"] = r.lower;
        d["upper"] = r.upper;
        d["lower_se"] = r.lower_se;
        d["upper_se"] = r.upper_se;
        d["rho"] = r.rho;
        d["draws"] = r.n_draws;
        d["deltas"] = r.deltas;
        return d;
      },
      py::arg("config"), py::arg("draws"), py::arg("seed") = 1, py::arg("policy") = "norm",
      py::arg("rho") = py::none(), py::arg("threads") = 1, "Ergodic lower and upper GMI bounds in nats.");

  m.def(
      "simulate_ber",
      [](const SystemConfig& config, std::vector<double> snr_db, int frames, std::uint64_t seed,
         std::optional<std::string> population, bool noiseless, int threads) {
        BerOptions opt;
        opt.snr_db = std::move(snr_db);
        opt.frames = frames;
        opt.noiseless = noiseless;
        opt.threads = threads;
        if (population) opt.population = AdcPopulation::parse(*population);
        py::list out;
        for (const BerPoint& p : simulate_ber(config, opt, seed).points) {
          py::dict d;
          d["snr_db"] = p.snr_db;
          d["user"] = p.user;
          d["bits"] = p.bits;
          d["bit_errors"] = p.bit_errors;
          d["ber"] = p.ber;
          d["ci95"] = p.ci95;
          out.append(d);
        }
        return out;
      },
      py::arg("config"), py::arg("snr_db"), py::arg("frames"), py::arg("seed") = 1,
      py::arg("population") = py::none(), py::arg("noiseless") = false, py::arg("threads") = 1);

  m.def(
      "conv_encode", [](const Bits& bits) { return conv_encode_terminated(bits); }, py::arg("bits"),
      "Rate-1/2 encoding with two zero tail bits.");
  m.def(
      "viterbi_decode", [](const Bits& coded) { return viterbi_decode(coded); }, py::arg("coded"));
}
