// SPDX-License-Identifier: Apache-2.0
//
// Scalar ADC models and the mixed-resolution front end.
//
// Each antenna feeds a pair of identical real quantizers, one for the in-phase
// and one for the quadrature component. A one-bit pair outputs
// (sgn(x_R) + j sgn(x_I)) / sqrt(2). A multi-bit pair is a symmetric Lloyd-Max
// quantizer designed for a unit-variance Gaussian; at run time its thresholds
// and levels are scaled by the per-dimension input standard deviation (ideal
// AGC), which makes its Bussgang gain independent of the channel.

#pragma once

#include "mixadc/common.hpp"

#include <span>
#include <string>
#include <vector>

namespace mixadc {

enum class AdcKind { HighRes, OneBit, MultiBit };

struct AdcSpec {
  AdcKind kind = AdcKind::HighRes;
  int bits = 0;                   // MultiBit only
  std::vector<double> thresholds;  // 2^b - 1 entries, increasing
  std::vector<double> levels;      // 2^b entries, increasing

  static AdcSpec high_res() { return {}; }
  static AdcSpec one_bit() { return {AdcKind::OneBit, 1, {0.0}, {-1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)}}; }
  /// Unit-variance Lloyd-Max design with `bits` bits.
  static AdcSpec multi_bit(int bits);

  bool is_high_res() const { return kind == AdcKind::HighRes; }
  /// Short label: "hr", "1", "3", ...
  std::string label() const;
  /// Parses a label produced by label().
  static AdcSpec from_label(const std::string& label);
  void validate() const;
};

/// Binary ADC switch vector: 1 selects a high-resolution pair.
struct AdcSwitchVector {
  std::vector<int> delta;

  int size() const { return static_cast<int>(delta.size()); }
  int count() const;
  bool high_res(int n) const { return delta[n] != 0; }

  static AdcSwitchVector all(int n, int value) { return {std::vector<int>(n, value)}; }
  /// Per-antenna specs: HighRes where delta is 1, one-bit elsewhere.
  std::vector<AdcSpec> to_specs() const;
};

/// Run-time output scale of an ADC fed with per-dimension standard deviation
/// `input_std`: multi-bit outputs follow the AGC, one-bit outputs keep the
/// fixed +-1/sqrt(2) levels, high-resolution outputs are unscaled.
double adc_output_scale(const AdcSpec& spec, double input_std);

/// Complex sign with output modulus 1. Zero components map to +1.
cplx csign(cplx z);

/// Applies a quantizer elementwise. For MultiBit specs, `input_std` is the
/// per-dimension standard deviation used for gain normalization; it is ignored
/// by the other kinds.
cvec quantize_vector(const cvec& y, const AdcSpec& spec, double input_std = 1.0);
double quantize_real(double x, const AdcSpec& spec, double input_std = 1.0);

/// Lloyd-Max quantizer for N(0, input_std^2), iterated until the largest
/// relative level change drops below 1e-10.
AdcSpec lloyd_max_design(int bits, double input_std = 1.0);

/// Mean squared error of a MultiBit design against N(0, 1).
double quantizer_mse(const AdcSpec& spec);

/// Linear gain E[q(u) u^*] / E[|u|^2] for a circularly symmetric complex
/// Gaussian u with E[|u|^2] = input_variance, using the run-time scaling of
/// each kind. HighRes -> 1; OneBit -> sqrt(2 / (pi var)); MultiBit -> the
/// unit-design per-dimension gain.
double bussgang_gain(const AdcSpec& spec, double input_variance);

/// E[q(a) q(b)] for unit-variance real Gaussians a, b with correlation rho,
/// where q is the unit-variance MultiBit (or OneBit) design. Evaluated by
/// integrating Price's identity over rho = sin(phi) with Gauss-Legendre.
double quantized_correlation(const AdcSpec& spec_a, const AdcSpec& spec_b, double rho);

/// E[q(a)^2] for a ~ N(0, 1) at unit AGC scaling.
double quantized_power(const AdcSpec& spec);

}  // namespace mixadc
