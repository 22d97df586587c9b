#pragma once

// Coherent-state algebra: overlaps, quadrature wavefunctions and finite
// superpositions of coherent states.
//
// Quadratures follow X = (a + a^dag)/sqrt(2), P = (a - a^dag)/(i sqrt(2)),
// so [X, P] = i and every coherent-state marginal has variance 1/2.

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "kerrcat/errors.hpp"
#include "kerrcat/log_complex.hpp"

namespace kerrcat {

inline constexpr double kMergeTolerance = 1e-12;
inline constexpr double kDegenerateNorm = 1e-300;
inline constexpr double kNormalizedTolerance = 1e-10;

inline const double kLogDegenerateNorm = std::log(kDegenerateNorm);

inline bool is_finite(Complex z) noexcept { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

/// <beta1|beta2> in log form; never underflows.
inline LogComplex log_coherent_overlap(Complex beta1, Complex beta2) noexcept {
  const Complex e = -0.5 * std::norm(beta1) - 0.5 * std::norm(beta2) + std::conj(beta1) * beta2;
  return LogComplex::from_log(e.real(), e.imag());
}

/// <beta1|beta2> = exp(-|b1|^2/2 - |b2|^2/2 + conj(b1) b2).
inline Complex coherent_overlap(Complex beta1, Complex beta2) noexcept {
  return std::exp(-0.5 * std::norm(beta1) - 0.5 * std::norm(beta2) + std::conj(beta1) * beta2);
}

/// <X|beta> in log form.
inline LogComplex log_x_amplitude(double x, Complex beta) noexcept {
  const double re = beta.real();
  const double im = beta.imag();
  const double shift = x - std::numbers::sqrt2 * re;
  return LogComplex::from_log(-0.25 * std::log(std::numbers::pi) - 0.5 * shift * shift,
                              std::numbers::sqrt2 * x * im - re * im);
}

/// Position-quadrature wavefunction of a coherent state,
/// pi^{-1/4} exp(-(X - sqrt2 Re b)^2/2 + i sqrt2 X Im b - i Re b Im b).
inline Complex x_amplitude(double x, Complex beta) noexcept { return log_x_amplitude(x, beta).value(); }

/// <P|beta>. With <P|n> = (-i)^n psi_n(P) this is exactly <X=P|-i beta>.
inline LogComplex log_p_amplitude(double p, Complex beta) noexcept {
  return log_x_amplitude(p, Complex{0.0, -1.0} * beta);
}

inline Complex p_amplitude(double p, Complex beta) noexcept { return log_p_amplitude(p, beta).value(); }

struct CoherentComponent {
  Complex coeff;
  Complex amp;
};

/// A finite superposition sum_n c_n |beta_n>.
///
/// Components whose amplitudes coincide to within kMergeTolerance are
/// merged by summing coefficients. Claiming `normalized` is checked against
/// the Gram-matrix norm.
class CoherentSuperposition {
 public:
  CoherentSuperposition() = default;

  explicit CoherentSuperposition(std::vector<CoherentComponent> components, bool normalized = false);

  static CoherentSuperposition coherent(Complex beta) { return CoherentSuperposition({{Complex{1.0}, beta}}, true); }

  std::span<const CoherentComponent> components() const noexcept { return components_; }
  std::size_t size() const noexcept { return components_.size(); }
  bool empty() const noexcept { return components_.empty(); }
  bool is_normalized() const noexcept { return normalized_; }

  /// Rescales to unit norm. Throws DegenerateStateError below 1e-300.
  CoherentSuperposition normalized() const;

 private:
  std::vector<CoherentComponent> components_;
  bool normalized_ = false;
};

namespace detail {

/// sum_{m,n} conj(a_m) b_n <alpha_m|beta_n> accumulated in log form.
template <class LhsCoeff, class RhsCoeff>
LogComplex log_gram_form(std::span<const LhsCoeff> lhs_coeff, std::span<const Complex> lhs_amp,
                         std::span<const RhsCoeff> rhs_coeff, std::span<const Complex> rhs_amp) {
  auto as_log = [](const auto& c) {
    if constexpr (std::is_same_v<std::decay_t<decltype(c)>, LogComplex>) {
      return c;
    } else {
      return LogComplex::from(c);
    }
  };
  LogSum acc;
  for (std::size_t m = 0; m < lhs_coeff.size(); ++m) {
    const LogComplex a = as_log(lhs_coeff[m]).conj();
    if (a.is_zero()) continue;
    for (std::size_t n = 0; n < rhs_coeff.size(); ++n) {
      acc.add(a * as_log(rhs_coeff[n]) * log_coherent_overlap(lhs_amp[m], rhs_amp[n]));
    }
  }
  return acc.result();
}

inline void split(std::span<const CoherentComponent> comps, std::vector<Complex>& coeff, std::vector<Complex>& amp) {
  coeff.clear();
  amp.clear();
  coeff.reserve(comps.size());
  amp.reserve(comps.size());
  for (const auto& c : comps) {
    coeff.push_back(c.coeff);
    amp.push_back(c.amp);
  }
}

/// log of the squared norm; -inf for an exactly null state.
inline double log_squared_norm(std::span<const LogComplex> coeff, std::span<const Complex> amp) {
  const LogComplex s = log_gram_form<LogComplex, LogComplex>(coeff, amp, coeff, amp);
  return s.log_magnitude;
}

/// Merges near-duplicate amplitudes, preserving first-occurrence order.
inline std::vector<CoherentComponent> merge_duplicates(std::vector<CoherentComponent> in) {
  std::vector<CoherentComponent> out;
  out.reserve(in.size());
  for (const auto& c : in) {
    bool merged = false;
    for (auto& o : out) {
      if (std::abs(o.amp - c.amp) < kMergeTolerance) {
        o.coeff += c.coeff;
        merged = true;
        break;
      }
    }
    if (!merged) out.push_back(c);
  }
  return out;
}

}  // namespace detail

/// sum_{m,n} conj(c_m) c_n <beta_m|beta_n>.
/// Throws DegenerateStateError if the result is below 1e-300.
inline double squared_norm(const CoherentSuperposition& psi) {
  if (psi.empty()) throw std::invalid_argument("squared_norm: empty superposition");
  std::vector<Complex> c, b;
  detail::split(psi.components(), c, b);
  const LogComplex s = detail::log_gram_form<Complex, Complex>(c, b, c, b);
  if (s.is_zero() || s.log_magnitude < kLogDegenerateNorm) {
    throw DegenerateStateError("squared norm below 1e-300; state is numerically null");
  }
  // Gram form is Hermitian; whatever imaginary part survives is rounding.
  return s.value().real();
}

/// <psi|chi> in the coherent-state basis.
inline Complex inner_product(const CoherentSuperposition& psi, const CoherentSuperposition& chi) {
  if (psi.empty() || chi.empty()) throw std::invalid_argument("inner_product: empty superposition");
  std::vector<Complex> c1, b1, c2, b2;
  detail::split(psi.components(), c1, b1);
  detail::split(chi.components(), c2, b2);
  return detail::log_gram_form<Complex, Complex>(c1, b1, c2, b2).value();
}

inline CoherentSuperposition::CoherentSuperposition(std::vector<CoherentComponent> components, bool normalized) {
  for (const auto& c : components) {
    if (!is_finite(c.coeff) || !is_finite(c.amp)) {
      throw std::invalid_argument("CoherentSuperposition: non-finite coefficient or amplitude");
    }
  }
  components_ = detail::merge_duplicates(std::move(components));
  if (normalized) {
    const double n = squared_norm(*this);
    if (std::abs(n - 1.0) >= kNormalizedTolerance) {
      throw std::invalid_argument("CoherentSuperposition: claimed normalized but squared norm is " +
                                  std::to_string(n));
    }
  }
  normalized_ = normalized;
}

inline CoherentSuperposition CoherentSuperposition::normalized() const {
  const double scale = 1.0 / std::sqrt(squared_norm(*this));
  std::vector<CoherentComponent> out(components_.begin(), components_.end());
  for (auto& c : out) c.coeff *= scale;
  return CoherentSuperposition(std::move(out), true);
}

namespace detail {

template <class Amplitude>
double marginal_density(const CoherentSuperposition& psi, double q, Amplitude&& amplitude) {
  LogSum acc;
  for (const auto& c : psi.components()) acc.add(LogComplex::from(c.coeff) * amplitude(q, c.amp));
  return std::norm(acc.result().value());
}

}  // namespace detail

/// |<X|psi>|^2 for a normalized pure state.
inline double x_marginal_density(const CoherentSuperposition& psi, double x) {
  return detail::marginal_density(psi, x, log_x_amplitude);
}

/// |<P|psi>|^2 for a normalized pure state.
inline double p_marginal_density(const CoherentSuperposition& psi, double p) {
  return detail::marginal_density(psi, p, log_p_amplitude);
}

}  // namespace kerrcat
