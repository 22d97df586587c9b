#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace kerrcat {

using Complex = std::complex<double>;

/// Wraps an angle into (-pi, pi].
inline double wrap_phase(double theta) noexcept {
  double r = std::remainder(theta, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

/// A complex number held as (log|z|, arg z).
///
/// Products of Gaussian overlaps at |beta| ~ 30 reach exp(-1800); holding
/// the magnitude as a logarithm keeps every intermediate representable.
/// log_magnitude == -inf encodes exact zero.
struct LogComplex {
  double log_magnitude = -std::numeric_limits<double>::infinity();
  double phase = 0.0;

  static LogComplex zero() noexcept { return {}; }

  static LogComplex from_log(double log_mag, double arg) noexcept {
    return {log_mag, wrap_phase(arg)};
  }

  static LogComplex from(Complex z) noexcept {
    if (z == Complex{}) return zero();
    return {std::log(std::abs(z)), wrap_phase(std::arg(z))};
  }

  bool is_zero() const noexcept { return std::isinf(log_magnitude) && log_magnitude < 0; }

  Complex value() const noexcept {
    if (is_zero()) return {};
    return std::polar(std::exp(log_magnitude), phase);
  }

  LogComplex conj() const noexcept {
    if (is_zero()) return zero();
    return {log_magnitude, wrap_phase(-phase)};
  }

  friend LogComplex operator*(LogComplex a, LogComplex b) noexcept {
    if (a.is_zero() || b.is_zero()) return zero();
    return from_log(a.log_magnitude + b.log_magnitude, a.phase + b.phase);
  }
};

/// Streaming complex log-sum-exp.
///
/// Keeps total = exp(scale) * sum with |sum| bounded, rescaling whenever a
/// larger term arrives, so the result is exact up to ordinary rounding no
/// matter how small the individual terms are.
class LogSum {
 public:
  void add(LogComplex term) noexcept {
    if (term.is_zero()) return;
    if (term.log_magnitude > scale_) {
      sum_ = sum_ * std::exp(scale_ - term.log_magnitude);
      scale_ = term.log_magnitude;
      sum_ += std::polar(1.0, term.phase);
    } else {
      sum_ += std::polar(std::exp(term.log_magnitude - scale_), term.phase);
    }
  }

  LogComplex result() const noexcept {
    if (sum_ == Complex{}) return LogComplex::zero();
    return LogComplex::from_log(scale_ + std::log(std::abs(sum_)), std::arg(sum_));
  }

 private:
  double scale_ = -std::numeric_limits<double>::infinity();
  Complex sum_{};
};

}  // namespace kerrcat
