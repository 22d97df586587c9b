#pragma once

// Beam splitting against vacuum and homodyne projection onto |X>.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "kerrcat/coherent.hpp"
#include "kerrcat/errors.hpp"
#include "kerrcat/log_complex.hpp"

namespace kerrcat {

/// sum_n c_n |b_n> (x) |b_n>: both beam-splitter outputs of a coherent
/// superposition mixed with vacuum carry the same amplitude b_n = beta_n/sqrt2.
class TwoModeProductSuperposition {
 public:
  TwoModeProductSuperposition() = default;

  TwoModeProductSuperposition(std::vector<CoherentComponent> components, bool normalized)
      : components_(std::move(components)), normalized_(normalized) {}

  std::span<const CoherentComponent> components() const noexcept { return components_; }
  std::size_t size() const noexcept { return components_.size(); }
  bool is_normalized() const noexcept { return normalized_; }

 private:
  std::vector<CoherentComponent> components_;
  bool normalized_ = false;
};

struct HomodyneOutcome {
  double x = 0.0;
};

/// Two-mode norm sum conj(c_m) c_n <b_m|b_n>^2.
inline double squared_norm(const TwoModeProductSuperposition& psi) {
  LogSum acc;
  const auto comps = psi.components();
  for (const auto& m : comps) {
    for (const auto& n : comps) {
      const LogComplex ov = log_coherent_overlap(m.amp, n.amp);
      acc.add(LogComplex::from(m.coeff).conj() * LogComplex::from(n.coeff) * ov * ov);
    }
  }
  return acc.result().value().real();
}

/// |beta>|0> -> |beta/sqrt2>|beta/sqrt2>, no sign flip on either arm.
inline TwoModeProductSuperposition beamsplit_with_vacuum(const CoherentSuperposition& psi) {
  if (!psi.is_normalized()) throw std::invalid_argument("beamsplit_with_vacuum: input must be normalized");
  std::vector<CoherentComponent> out;
  out.reserve(psi.size());
  for (const auto& c : psi.components()) out.push_back({c.coeff, c.amp / std::numbers::sqrt2});
  return {std::move(out), true};
}

namespace detail {

struct LogConditioned {
  std::vector<LogComplex> coeff;
  std::vector<Complex> amp;
};

inline LogConditioned project_mode_one(const TwoModeProductSuperposition& two_mode, double x) {
  LogConditioned out;
  out.coeff.reserve(two_mode.size());
  out.amp.reserve(two_mode.size());
  for (const auto& c : two_mode.components()) {
    out.coeff.push_back(LogComplex::from(c.coeff) * log_x_amplitude(x, c.amp));
    out.amp.push_back(c.amp);
  }
  return out;
}

}  // namespace detail

/// Probability density of homodyne outcome X on mode one,
/// Tr[rho_1 |X><X|] = sum_{nm} c_n conj(c_m) <X|b_n><b_m|X> <b_m|b_n>.
inline double x_outcome_density(const TwoModeProductSuperposition& two_mode, double x) {
  const auto lc = detail::project_mode_one(two_mode, x);
  const double log_norm = detail::log_squared_norm(lc.coeff, lc.amp);
  return std::exp(log_norm);
}

/// State of mode two after mode one is projected onto |X>, renormalized.
///
/// Throws DegenerateStateError if the outcome density is below 1e-300.
inline CoherentSuperposition condition_on_x(const TwoModeProductSuperposition& two_mode, HomodyneOutcome outcome) {
  if (!two_mode.is_normalized()) throw std::invalid_argument("condition_on_x: input must be normalized");
  if (!std::isfinite(outcome.x)) throw std::invalid_argument("condition_on_x: outcome must be finite");
  const auto lc = detail::project_mode_one(two_mode, outcome.x);
  const double log_norm = detail::log_squared_norm(lc.coeff, lc.amp);
  if (!(log_norm >= kLogDegenerateNorm)) {
    throw DegenerateStateError("conditioned state has squared norm below 1e-300 at X = " + std::to_string(outcome.x));
  }
  std::vector<CoherentComponent> comps;
  comps.reserve(lc.amp.size());
  for (std::size_t i = 0; i < lc.amp.size(); ++i) {
    LogComplex c = lc.coeff[i];
    if (!c.is_zero()) c.log_magnitude -= 0.5 * log_norm;
    comps.push_back({c.value(), lc.amp[i]});
  }
  return CoherentSuperposition(std::move(comps), true);
}

/// Conditioned coefficients scaled by their largest magnitude: the true
/// coefficients are exp(log_scale) * scaled[n].
struct ScaledCoefficients {
  double log_scale = 0.0;
  std::vector<Complex> scaled;
};

/// Homodyne conditioning specialised for many outcomes of one input.
///
/// The mode-two Gram matrix <b_m|b_n> does not depend on X, or on a common
/// rotation of all amplitudes, so it is built once. Per outcome the work is
/// N exponentials and an N x N quadratic form. Results agree with
/// condition_on_x / x_outcome_density to rounding.
class HomodyneKernel {
 public:
  explicit HomodyneKernel(const TwoModeProductSuperposition& two_mode) {
    const auto comps = two_mode.components();
    n_ = comps.size();
    log_coeff_.reserve(n_);
    amp_.reserve(n_);
    for (const auto& c : comps) {
      log_coeff_.push_back(LogComplex::from(c.coeff));
      amp_.push_back(c.amp);
    }
    gram_.resize(n_ * n_);
    for (std::size_t m = 0; m < n_; ++m) {
      for (std::size_t n = 0; n < n_; ++n) gram_[m * n_ + n] = coherent_overlap(amp_[m], amp_[n]);
    }
  }

  std::size_t size() const noexcept { return n_; }
  std::span<const Complex> amplitudes() const noexcept { return amp_; }

  /// Amplitudes after a common rotation e^{i angle}; the Gram matrix is
  /// unchanged by it.
  std::vector<Complex> rotated_amplitudes(double angle) const {
    std::vector<Complex> out(amp_);
    const Complex r = std::polar(1.0, angle);
    for (auto& a : out) a *= r;
    return out;
  }

  /// Coefficients conditioned on outcome x, optionally with every amplitude
  /// rotated by e^{i rotation} first.
  ScaledCoefficients scaled_coefficients(double x, double rotation = 0.0) const {
    ScaledCoefficients out;
    std::vector<LogComplex> w(n_);
    double top = -std::numeric_limits<double>::infinity();
    const Complex r = std::polar(1.0, rotation);
    for (std::size_t i = 0; i < n_; ++i) {
      w[i] = log_coeff_[i] * log_x_amplitude(x, rotation == 0.0 ? amp_[i] : amp_[i] * r);
      top = std::max(top, w[i].log_magnitude);
    }
    out.log_scale = top;
    out.scaled.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      out.scaled[i] = w[i].is_zero() ? Complex{} : std::polar(std::exp(w[i].log_magnitude - top), w[i].phase);
    }
    return out;
  }

  /// v^dag G v.
  double quadratic_form(std::span<const Complex> v) const {
    Complex s{};
    for (std::size_t m = 0; m < n_; ++m) {
      if (v[m] == Complex{}) continue;
      Complex row{};
      const Complex* g = gram_.data() + m * n_;
      for (std::size_t n = 0; n < n_; ++n) row += g[n] * v[n];
      s += std::conj(v[m]) * row;
    }
    return s.real();
  }

  double log_density(double x) const {
    const auto sc = scaled_coefficients(x);
    return 2.0 * sc.log_scale + std::log(quadratic_form(sc.scaled));
  }

  double density(double x) const { return std::exp(log_density(x)); }

  /// Normalized conditioned coefficients, aligned with amplitudes().
  std::vector<Complex> conditioned_coefficients(double x, double rotation = 0.0) const {
    auto sc = scaled_coefficients(x, rotation);
    const double q = quadratic_form(sc.scaled);
    if (!(2.0 * sc.log_scale + std::log(q) >= kLogDegenerateNorm)) {
      throw DegenerateStateError("conditioned state has squared norm below 1e-300 at X = " + std::to_string(x));
    }
    const double inv = 1.0 / std::sqrt(q);
    for (auto& c : sc.scaled) c *= inv;
    return sc.scaled;
  }

  CoherentSuperposition conditioned(double x) const {
    const auto c = conditioned_coefficients(x);
    std::vector<CoherentComponent> comps(n_);
    for (std::size_t i = 0; i < n_; ++i) comps[i] = {c[i], amp_[i]};
    return CoherentSuperposition(std::move(comps), true);
  }

 private:
  std::size_t n_ = 0;
  std::vector<LogComplex> log_coeff_;
  std::vector<Complex> amp_;
  std::vector<Complex> gram_;
};

}  // namespace kerrcat
