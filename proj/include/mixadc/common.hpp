// SPDX-License-Identifier: Apache-2.0
//
// Shared numeric types, error classes and seeded random streams.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixadc {

using cplx = std::complex<double>;
using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;
using rvec = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoOverPi = 2.0 / kPi;

/// Raised when a caller hands in arguments outside an operation's domain.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an internal consistency check fails (a bound that holds
/// analytically was violated by more than roundoff).
class NumericalIntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by a linear solve when a subcarrier block is singular or
/// indefinite; carries the offending subcarrier.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, int subcarrier)
      : std::runtime_error(what), subcarrier_(subcarrier) {}
  int subcarrier() const noexcept { return subcarrier_; }

 private:
  int subcarrier_;
};

/// SplitMix64 finalizer. Used to derive independent stream seeds from a
/// master seed and a work-unit index, so results do not depend on the order
/// in which work units are scheduled.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

/// Generator handle passed to every stochastic operation. Wraps mt19937_64;
/// Gaussian draws go through std::normal_distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// A child stream, independent of this one, identified by `stream`.
  Rng fork(std::uint64_t stream) { return Rng(derive_seed(engine_(), stream)); }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  /// CN(0, variance): real and imaginary parts i.i.d. N(0, variance/2).
  cplx complex_normal(double variance) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {s * re, s * im};
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Neumaier-compensated accumulator; reductions over work units use it so
/// the result does not drift with the number of terms.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

class ComplexCompensatedSum {
 public:
  void add(cplx x) {
    re_.add(x.real());
    im_.add(x.imag());
  }
  cplx value() const { return {re_.value(), im_.value()}; }

 private:
  CompensatedSum re_;
  CompensatedSum im_;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace mixadc
