// SPDX-License-Identifier: Apache-2.0

#include "mixadc/quantizer.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

namespace mixadc {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_pdf(double x) { return std::isinf(x) ? 0.0 : kInvSqrt2Pi * std::exp(-0.5 * x * x); }
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Jumps of the staircase q(x) = levels[0] + sum_i jumps[i] * 1[x > thresholds[i]].
std::vector<double> jumps_of(const AdcSpec& spec) {
  std::vector<double> d(spec.thresholds.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = spec.levels[i + 1] - spec.levels[i];
  return d;
}

// Tabulated f(phi) = E[q_a(a) q_b(b)] at rho = sin(phi), phi in [-pi/2, pi/2].
// Values and exact derivatives are stored on a uniform grid and evaluated by
// cubic Hermite interpolation.
class CorrelationTable {
 public:
  static constexpr int kIntervals = 2048;

  CorrelationTable(const AdcSpec& a, const AdcSpec& b)
      : ta_(a.thresholds), tb_(b.thresholds), da_(jumps_of(a)), db_(jumps_of(b)) {
    step_ = kPi / kIntervals;
    value_.assign(kIntervals + 1, 0.0);
    slope_.assign(kIntervals + 1, 0.0);
    for (int k = 0; k <= kIntervals; ++k) slope_[k] = integrand(phi_at(k));
    // 3-point Gauss-Legendre per interval, accumulated outwards from phi = 0.
    static constexpr std::array<double, 3> x{-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr std::array<double, 3> w{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    const int mid = kIntervals / 2;
    auto interval = [&](int k) {
      const double lo = phi_at(k);
      double s = 0.0;
      for (int i = 0; i < 3; ++i) s += w[i] * integrand(lo + 0.5 * step_ * (1.0 + x[i]));
      return 0.5 * step_ * s;
    };
    for (int k = mid; k < kIntervals; ++k) value_[k + 1] = value_[k] + interval(k);
    for (int k = mid - 1; k >= 0; --k) value_[k] = value_[k + 1] - interval(k);
  }

  double operator()(double rho) const {
    const double phi = std::asin(std::clamp(rho, -1.0, 1.0));
    double pos = (phi + 0.5 * kPi) / step_;
    int k = std::clamp(static_cast<int>(pos), 0, kIntervals - 1);
    const double t = pos - k;
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
    const double h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t);
    const double h11 = t * t * (t - 1);
    return h00 * value_[k] + h10 * step_ * slope_[k] + h01 * value_[k + 1] + h11 * step_ * slope_[k + 1];
  }

 private:
  double phi_at(int k) const { return -0.5 * kPi + k * step_; }

  // d f / d phi = cos(phi) * sum_ij da_i db_j phi2(ta_i, tb_j; sin phi)
  double integrand(double phi) const {
    const double s = std::sin(phi);
    const double c2 = std::max(1.0 - s * s, 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < ta_.size(); ++i) {
      for (std::size_t j = 0; j < tb_.size(); ++j) {
        const double x = ta_[i];
        const double y = tb_[j];
        const double num = x * x - 2.0 * s * x * y + y * y;
        double e;
        if (c2 <= 0.0) {
          e = (num <= 1e-300) ? std::exp(-0.5 * x * x) : 0.0;
        } else {
          e = std::exp(-0.5 * num / c2);
        }
        acc += da_[i] * db_[j] * e;
      }
    }
    return acc / (2.0 * kPi);
  }

  std::vector<double> ta_, tb_, da_, db_;
  double step_ = 0.0;
  std::vector<double> value_, slope_;
};

const CorrelationTable& correlation_table(const AdcSpec& a, const AdcSpec& b) {
  static std::mutex mutex;
  static std::map<std::pair<std::string, std::string>, std::unique_ptr<CorrelationTable>> cache;
  std::lock_guard lock(mutex);
  auto key = std::make_pair(a.label(), b.label());
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, std::make_unique<CorrelationTable>(a, b)).first;
  return *it->second;
}

}  // namespace

AdcSpec AdcSpec::multi_bit(int bits) {
  static std::mutex mutex;
  static std::map<int, AdcSpec> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(bits);
  if (it == cache.end()) it = cache.emplace(bits, lloyd_max_design(bits, 1.0)).first;
  return it->second;
}

std::string AdcSpec::label() const {
  switch (kind) {
    case AdcKind::HighRes:
      return "hr";
    case AdcKind::OneBit:
      return "1";
    case AdcKind::MultiBit:
      return std::to_string(bits) + "b";
  }
  return "?";
}

AdcSpec AdcSpec::from_label(const std::string& label) {
  if (label == "hr" || label == "inf") return high_res();
  if (label == "1") return one_bit();
  std::string digits = label;
  if (!digits.empty() && digits.back() == 'b') digits.pop_back();
  try {
    std::size_t used = 0;
    const int bits = std::stoi(digits, &used);
    if (used != digits.size()) throw InvalidArgument("bad ADC label: " + label);
    if (bits == 1) return one_bit();
    return multi_bit(bits);
  } catch (const std::logic_error&) {
    throw InvalidArgument("bad ADC label: " + label);
  }
}

void AdcSpec::validate() const {
  if (kind == AdcKind::HighRes) return;
  const std::size_t m = std::size_t{1} << bits;
  if (levels.size() != m || thresholds.size() != m - 1)
    throw InvalidArgument("ADC spec needs 2^b levels and 2^b - 1 thresholds");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (!(levels[i] > levels[i - 1])) throw InvalidArgument("ADC levels must increase strictly");
  for (std::size_t i = 1; i < thresholds.size(); ++i)
    if (!(thresholds[i] > thresholds[i - 1])) throw InvalidArgument("ADC thresholds must increase strictly");
}

int AdcSwitchVector::count() const {
  int k = 0;
  for (int d : delta) k += d != 0;
  return k;
}

std::vector<AdcSpec> AdcSwitchVector::to_specs() const {
  std::vector<AdcSpec> specs;
  specs.reserve(delta.size());
  for (int d : delta) specs.push_back(d ? AdcSpec::high_res() : AdcSpec::one_bit());
  return specs;
}

double adc_output_scale(const AdcSpec& spec, double input_std) {
  return spec.kind == AdcKind::MultiBit ? input_std : 1.0;
}

cplx csign(cplx z) {
  constexpr double r = 0.70710678118654752440;
  return {z.real() >= 0.0 ? r : -r, z.imag() >= 0.0 ? r : -r};
}

double quantize_real(double x, const AdcSpec& spec, double input_std) {
  if (std::isnan(x)) throw InvalidArgument("cannot quantize NaN");
  switch (spec.kind) {
    case AdcKind::HighRes:
      return x;
    case AdcKind::OneBit:
      return x >= 0.0 ? 0.70710678118654752440 : -0.70710678118654752440;
    case AdcKind::MultiBit: {
      const double u = x / input_std;
      const auto it = std::upper_bound(spec.thresholds.begin(), spec.thresholds.end(), u);
      // Values on a threshold go to the upper cell, matching sgn(0) = +1.
      const auto cell = static_cast<std::size_t>(it - spec.thresholds.begin());
      return input_std * spec.levels[cell];
    }
  }
  return x;
}

cvec quantize_vector(const cvec& y, const AdcSpec& spec, double input_std) {
  if (spec.kind == AdcKind::MultiBit && !(input_std > 0.0))
    throw InvalidArgument("multi-bit quantization needs a positive input standard deviation");
  cvec r(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (spec.kind == AdcKind::OneBit) {
      if (std::isnan(y(i).real()) || std::isnan(y(i).imag())) throw InvalidArgument("cannot quantize NaN");
      r(i) = csign(y(i));
    } else {
      r(i) = {quantize_real(y(i).real(), spec, input_std), quantize_real(y(i).imag(), spec, input_std)};
    }
  }
  return r;
}

AdcSpec lloyd_max_design(int bits, double input_std) {
  if (bits < 1 || bits > 8) throw InvalidArgument("Lloyd-Max design supports 1 to 8 bits");
  if (!(input_std > 0.0)) throw InvalidArgument("input standard deviation must be positive");
  const int m = 1 << bits;
  std::vector<double> levels(m), thresholds(m - 1);
  // Start from a uniform grid spanning roughly +-3 sigma.
  const double span = 3.0 + 0.25 * bits;
  for (int i = 0; i < m; ++i) levels[i] = -span + (2.0 * span) * (i + 0.5) / m;

  constexpr int kMaxIterations = 10000;
  constexpr double kTolerance = 1e-10;
  // Lloyd map C(levels) and its Jacobian; the Jacobian is tridiagonal since
  // each centroid moves only with its two neighbouring thresholds.
  const auto lloyd_map = [m](const std::vector<double>& l, std::vector<double>& c, Eigen::MatrixXd* jac) {
    if (jac) jac->setZero(m, m);
    for (int i = 0; i < m; ++i) {
      const double lo = i == 0 ? -INFINITY : 0.5 * (l[i - 1] + l[i]);
      const double hi = i == m - 1 ? INFINITY : 0.5 * (l[i] + l[i + 1]);
      const double mass = normal_cdf(hi) - normal_cdf(lo);
      c[i] = (normal_pdf(lo) - normal_pdf(hi)) / mass;
      if (!jac) continue;
      if (i > 0) {
        const double da = 0.5 * normal_pdf(lo) * (c[i] - lo) / mass;
        (*jac)(i, i - 1) += da;
        (*jac)(i, i) += da;
      }
      if (i < m - 1) {
        const double db = 0.5 * normal_pdf(hi) * (hi - c[i]) / mass;
        (*jac)(i, i + 1) += db;
        (*jac)(i, i) += db;
      }
    }
  };
  const auto residual = [m](const std::vector<double>& l, const std::vector<double>& c) {
    double r = 0.0;
    for (int i = 0; i < m; ++i) r += (c[i] - l[i]) * (c[i] - l[i]);
    return r;
  };

  // Plain Lloyd iteration stalls for b >= 7, so each step tries a Newton move
  // on C(l) - l = 0 and falls back to the Lloyd update when it does not help.
  std::vector<double> centroids(m), trial(m), trial_c(m);
  Eigen::MatrixXd jac;
  bool converged = false;
  for (int iter = 0; iter < kMaxIterations && !converged; ++iter) {
    lloyd_map(levels, centroids, &jac);
    double change = 0.0;
    for (int i = 0; i < m; ++i)
      change = std::max(change, std::abs(centroids[i] - levels[i]) / std::max(std::abs(centroids[i]), 1e-300));
    converged = change < kTolerance;
    if (converged) {
      levels = centroids;
      break;
    }
    Eigen::VectorXd f(m);
    for (int i = 0; i < m; ++i) f(i) = centroids[i] - levels[i];
    jac -= Eigen::MatrixXd::Identity(m, m);
    const Eigen::VectorXd step = jac.partialPivLu().solve(-f);
    bool ordered = step.allFinite();
    for (int i = 0; i < m && ordered; ++i) {
      trial[i] = levels[i] + step(i);
      ordered = i == 0 || trial[i] > trial[i - 1];
    }
    if (ordered) lloyd_map(trial, trial_c, nullptr);
    levels = ordered && residual(trial, trial_c) < f.squaredNorm() ? trial : centroids;
    // Enforce exact symmetry about zero.
    for (int i = 0; i < m / 2; ++i) {
      const double v = 0.5 * (levels[m - 1 - i] - levels[i]);
      levels[i] = -v;
      levels[m - 1 - i] = v;
    }
  }
  if (!converged) throw NumericalIntegrityError("Lloyd-Max iteration did not converge");
  for (int i = 0; i + 1 < m; ++i) thresholds[i] = 0.5 * (levels[i] + levels[i + 1]);
  thresholds[(m - 1) / 2] = 0.0;

  AdcSpec spec;
  spec.kind = AdcKind::MultiBit;
  spec.bits = bits;
  for (auto& t : thresholds) t *= input_std;
  for (auto& l : levels) l *= input_std;
  spec.thresholds = std::move(thresholds);
  spec.levels = std::move(levels);
  return spec;
}

double quantizer_mse(const AdcSpec& spec) {
  if (spec.kind == AdcKind::HighRes) return 0.0;
  // E[(x - q(x))^2] = 1 - 2 E[x q(x)] + E[q(x)^2] for x ~ N(0, 1).
  const std::size_t m = spec.levels.size();
  double cross = 0.0, power = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double lo = i == 0 ? -INFINITY : spec.thresholds[i - 1];
    const double hi = i == m - 1 ? INFINITY : spec.thresholds[i];
    cross += spec.levels[i] * (normal_pdf(lo) - normal_pdf(hi));
    power += spec.levels[i] * spec.levels[i] * (normal_cdf(hi) - normal_cdf(lo));
  }
  return 1.0 - 2.0 * cross + power;
}

double quantized_power(const AdcSpec& spec) {
  if (spec.kind == AdcKind::HighRes) return 1.0;
  if (spec.kind == AdcKind::OneBit) return 0.5;
  const std::size_t m = spec.levels.size();
  double power = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double lo = i == 0 ? -INFINITY : spec.thresholds[i - 1];
    const double hi = i == m - 1 ? INFINITY : spec.thresholds[i];
    power += spec.levels[i] * spec.levels[i] * (normal_cdf(hi) - normal_cdf(lo));
  }
  return power;
}

double bussgang_gain(const AdcSpec& spec, double input_variance) {
  if (!(input_variance > 0.0)) throw InvalidArgument("Bussgang gain needs a positive input variance");
  switch (spec.kind) {
    case AdcKind::HighRes:
      return 1.0;
    case AdcKind::OneBit:
      return std::sqrt(2.0 / (kPi * input_variance));
    case AdcKind::MultiBit: {
      // Unit design: E[q(z) z] = sum_i l_i (phi(t_{i-1}) - phi(t_i)).
      const std::size_t m = spec.levels.size();
      double g = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double lo = i == 0 ? -INFINITY : spec.thresholds[i - 1];
        const double hi = i == m - 1 ? INFINITY : spec.thresholds[i];
        g += spec.levels[i] * (normal_pdf(lo) - normal_pdf(hi));
      }
      return g;
    }
  }
  return 1.0;
}

double quantized_correlation(const AdcSpec& spec_a, const AdcSpec& spec_b, double rho) {
  if (spec_a.is_high_res() || spec_b.is_high_res())
    throw InvalidArgument("quantized_correlation expects two quantizing ADCs");
  if (spec_a.kind == AdcKind::OneBit && spec_b.kind == AdcKind::OneBit)
    return std::asin(std::clamp(rho, -1.0, 1.0)) / kPi;
  if (rho == 1.0 && spec_a.label() == spec_b.label()) return quantized_power(spec_a);
  return correlation_table(spec_a, spec_b)(rho);
}

}  // namespace mixadc
