#pragma once

// Kerr-medium evolution of a coherent state.
//
// At interaction phase lambda*tau = pi/N the Kerr output is an exact
// N-component coherent superposition with equal-magnitude coefficients.
// The Fock-basis evolution is kept alongside it as an independent oracle.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kerrcat/coherent.hpp"
#include "kerrcat/csv.hpp"
#include "kerrcat/errors.hpp"

namespace kerrcat {

inline constexpr int kMaxComponents = 4096;
inline constexpr double kMaxTruncation = 1e-8;

namespace detail {

/// exp(i pi m / N) for m = 0..2N-1; angles reduced in integer arithmetic.
inline std::vector<Complex> half_turn_table(int n) {
  std::vector<Complex> t(static_cast<std::size_t>(2 * n));
  for (int m = 0; m < 2 * n; ++m) t[static_cast<std::size_t>(m)] = std::polar(1.0, std::numbers::pi * m / n);
  return t;
}

inline std::size_t mod_index(std::int64_t m, int n) {
  const std::int64_t period = 2 * static_cast<std::int64_t>(n);
  std::int64_t r = m % period;
  if (r < 0) r += period;
  return static_cast<std::size_t>(r);
}

inline void check_component_count(int n) {
  if (n < 1) throw std::invalid_argument("component count N must be >= 1");
  if (n > kMaxComponents) throw std::invalid_argument("component count N must be <= 4096");
}

}  // namespace detail

/// Superposition weights C_{n,N}, n = 1..N, of the Kerr output at
/// lambda*tau = pi/N:
///
///   C_n = (1/N) sum_{k=0}^{N-1} (-1)^k exp[+i pi k (2n - k) / N].
///
/// The sign of the exponent is the one that reproduces exp(-i lambda tau n^2)
/// Fock evolution; every |C_n| equals 1/sqrt(N).
inline std::vector<Complex> kerr_coefficients(int n_components) {
  detail::check_component_count(n_components);
  const int big_n = n_components;
  const auto table = detail::half_turn_table(big_n);
  std::vector<Complex> out(static_cast<std::size_t>(big_n));
  for (int n = 1; n <= big_n; ++n) {
    Complex s{};
    for (int k = 0; k < big_n; ++k) {
      // (-1)^k exp(i pi k(2n-k)/N) = exp(i pi [kN + k(2n-k)] / N)
      const std::int64_t m = static_cast<std::int64_t>(k) * big_n + static_cast<std::int64_t>(k) * (2 * n - k);
      s += table[detail::mod_index(m, big_n)];
    }
    out[static_cast<std::size_t>(n - 1)] = s / static_cast<double>(big_n);
  }
  return out;
}

/// Amplitude of the n-th Kerr component, -alpha exp(2 i n pi / N).
inline Complex kerr_component_amplitude(double alpha_i, int n, int n_components) {
  return -alpha_i * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(n % n_components) / n_components);
}

struct KerrDecomposition {
  int n_components = 0;
  double alpha_i = 0.0;
  std::vector<Complex> coefficients;  // C_{n,N}, index n-1
  CoherentSuperposition state;

  Complex amplitude(int n) const { return kerr_component_amplitude(alpha_i, n, n_components); }
};

/// The Kerr output |psi_N> = sum_n C_{n,N} |-alpha_i e^{2 i n pi/N}> for a
/// real initial amplitude alpha_i. Unit norm follows from unitarity; it is
/// verified, not imposed.
inline KerrDecomposition kerr_decompose(double alpha_i, int n_components) {
  if (!(alpha_i > 0.0) || !std::isfinite(alpha_i)) throw std::invalid_argument("alpha_i must be positive and finite");
  KerrDecomposition d;
  d.n_components = n_components;
  d.alpha_i = alpha_i;
  d.coefficients = kerr_coefficients(n_components);
  std::vector<CoherentComponent> comps;
  comps.reserve(d.coefficients.size());
  for (int n = 1; n <= n_components; ++n) {
    comps.push_back({d.coefficients[static_cast<std::size_t>(n - 1)], d.amplitude(n)});
  }
  d.state = CoherentSuperposition(std::move(comps), true);
  return d;
}

/// Max over k of |sum_n C_n (-e^{2 i n pi/N})^k - exp(-i pi k^2/N)|, the
/// residual of the coupled phase equations that fix the C_n.
inline double verify_phase_identity(int n_components) {
  const int big_n = n_components;
  const auto coeff = kerr_coefficients(big_n);
  const auto table = detail::half_turn_table(big_n);
  double worst = 0.0;
  for (int k = 0; k < big_n; ++k) {
    Complex lhs{};
    for (int n = 1; n <= big_n; ++n) {
      // (-1)^k e^{2 i pi n k/N} = exp(i pi [kN + 2nk] / N)
      const std::int64_t m = static_cast<std::int64_t>(k) * big_n + 2 * static_cast<std::int64_t>(n) * k;
      lhs += coeff[static_cast<std::size_t>(n - 1)] * table[detail::mod_index(m, big_n)];
    }
    const Complex rhs = table[detail::mod_index(-static_cast<std::int64_t>(k) * k, big_n)];
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

/// Length of Kerr medium giving lambda*tau = pi/N: L = v pi / (2 lambda N).
inline double medium_length(double lambda, int n_components, double velocity) {
  if (!(lambda > 0.0) || n_components < 1 || !(velocity > 0.0)) {
    throw std::invalid_argument("medium_length: all arguments must be positive");
  }
  return velocity * std::numbers::pi / (2.0 * lambda * n_components);
}

// --- Fock-basis oracle -------------------------------------------------------

struct KerrParams {
  double lambda_tau = 0.0;
  Complex alpha{};
};

/// Truncated number-basis state, amplitudes for n = 0..cutoff.
struct FockState {
  std::vector<Complex> amplitudes;
  double truncation_error = 0.0;        // 1 - sum |c_n|^2
  bool below_recommended_cutoff = false;

  int cutoff() const noexcept { return static_cast<int>(amplitudes.size()) - 1; }
};

inline int recommended_cutoff(double abs_alpha) {
  return static_cast<int>(std::ceil(abs_alpha * abs_alpha + 10.0 * abs_alpha + 20.0));
}

/// Fock amplitudes e^{-|b|^2/2} b^n / sqrt(n!) via log-factorials.
inline std::vector<Complex> coherent_fock_amplitudes(Complex beta, int cutoff) {
  if (cutoff < 0) throw std::invalid_argument("cutoff must be non-negative");
  std::vector<Complex> c(static_cast<std::size_t>(cutoff) + 1);
  const double r = std::abs(beta);
  if (r == 0.0) {
    c[0] = 1.0;
    return c;
  }
  const double log_r = std::log(r);
  const double theta = std::arg(beta);
  for (int n = 0; n <= cutoff; ++n) {
    const double log_mag = -0.5 * r * r + n * log_r - 0.5 * std::lgamma(n + 1.0);
    c[static_cast<std::size_t>(n)] = std::polar(std::exp(log_mag), n * theta);
  }
  return c;
}

/// Kerr evolution in the number basis: c_n -> c_n exp(-i lambda tau n^2).
///
/// Throws TruncationError if more than 1e-8 of the weight lies above the
/// cutoff. The cutoff |alpha|^2 + 10|alpha| + 20 is recommended; a smaller
/// one sets below_recommended_cutoff.
inline FockState kerr_fock_evolve(const KerrParams& params, int cutoff) {
  if (!(params.lambda_tau > 0.0)) throw std::invalid_argument("lambda_tau must be positive");
  if (!is_finite(params.alpha)) throw std::invalid_argument("alpha must be finite");
  if (cutoff < 1) throw std::invalid_argument("cutoff must be positive");
  FockState out;
  out.amplitudes = coherent_fock_amplitudes(params.alpha, cutoff);
  // n^2 is an integer, so lambda_tau only matters modulo 2 pi.
  const double lt = std::fmod(params.lambda_tau, 2.0 * std::numbers::pi);
  double weight = 0.0;
  for (int n = 0; n <= cutoff; ++n) {
    auto& c = out.amplitudes[static_cast<std::size_t>(n)];
    const double n2 = static_cast<double>(n) * n;
    c *= std::polar(1.0, -std::fmod(lt * n2, 2.0 * std::numbers::pi));
    weight += std::norm(c);
  }
  out.truncation_error = std::max(0.0, 1.0 - weight);
  out.below_recommended_cutoff = cutoff < recommended_cutoff(std::abs(params.alpha));
  if (out.truncation_error > kMaxTruncation) {
    throw TruncationError("Fock truncation error " + std::to_string(out.truncation_error) + " exceeds 1e-8 at cutoff " +
                          std::to_string(cutoff));
  }
  return out;
}

/// Number-basis expansion of a coherent superposition.
inline std::vector<Complex> to_fock(const CoherentSuperposition& psi, int cutoff) {
  std::vector<Complex> out(static_cast<std::size_t>(cutoff) + 1);
  for (const auto& comp : psi.components()) {
    const auto f = coherent_fock_amplitudes(comp.amp, cutoff);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] += comp.coeff * f[n];
  }
  return out;
}

inline Complex fock_inner_product(std::span<const Complex> lhs, std::span<const Complex> rhs) {
  Complex s{};
  const std::size_t n = std::min(lhs.size(), rhs.size());
  for (std::size_t i = 0; i < n; ++i) s += std::conj(lhs[i]) * rhs[i];
  return s;
}

/// CSV with columns n, re, im, magnitude, zeta_n (zeta in (-pi, pi]).
inline void write_coefficients_csv(std::ostream& os, std::span<const Complex> coefficients) {
  csv::Writer w(os, {"n", "re", "im", "magnitude", "zeta_n"});
  for (std::size_t i = 0; i < coefficients.size(); ++i) {
    const Complex c = coefficients[i];
    w.row(static_cast<double>(i + 1), c.real(), c.imag(), std::abs(c), wrap_phase(std::arg(c)));
  }
}

}  // namespace kerrcat
