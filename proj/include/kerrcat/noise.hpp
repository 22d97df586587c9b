#pragma once

// Error models for the conditioned cat: photon loss at the end of the Kerr
// medium (odd losses flip the cat's relative phase) and Gaussian phase
// fluctuations averaged over the rotation angle.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "kerrcat/coherent.hpp"
#include "kerrcat/conditioning.hpp"
#include "kerrcat/kerr.hpp"
#include "kerrcat/metrics.hpp"
#include "kerrcat/quadrature.hpp"

namespace kerrcat {

/// How NoiseParams::loss_prob is read.
enum class LossReading {
  /// loss_prob = P(at least one photon lost) = 1 - e^{-mu}.
  at_least_one_photon,
  /// loss_prob is the odd-loss probability P_f itself; decay from gamma_tau.
  direct_flip,
  /// loss_prob ignored; mu = alpha_i^2 (1 - e^{-gamma_tau}).
  decay_exponent,
};

struct NoiseParams {
  double loss_prob = 0.0;
  double gamma_tau = 0.0;
  double sigma_phase = 0.0;
  LossReading reading = LossReading::at_least_one_photon;
};

/// Poisson probability of an odd number of lost photons,
/// sum_{n odd} e^{-mu} mu^n / n! = (1 - e^{-2 mu}) / 2.
inline double odd_loss_probability(double mu) {
  if (!(mu >= 0.0)) throw std::invalid_argument("odd_loss_probability: mu must be non-negative");
  return -0.5 * std::expm1(-2.0 * mu);
}

struct LossChannel {
  double mean_lost = 0.0;     // mu
  double p_flip = 0.0;        // P_f
  double amplitude_factor = 1.0;  // e^{-gamma tau / 2}
};

inline LossChannel loss_channel(double alpha_i, const NoiseParams& noise) {
  if (!(alpha_i > 0.0)) throw std::invalid_argument("loss_channel: alpha_i must be positive");
  if (!(noise.gamma_tau >= 0.0)) throw std::invalid_argument("loss_channel: gamma_tau must be non-negative");
  const double a2 = alpha_i * alpha_i;
  LossChannel ch;
  switch (noise.reading) {
    case LossReading::at_least_one_photon: {
      if (!(noise.loss_prob >= 0.0 && noise.loss_prob < 1.0)) {
        throw std::invalid_argument("loss_prob must be in [0, 1)");
      }
      ch.mean_lost = -std::log1p(-noise.loss_prob);
      if (!(ch.mean_lost < a2)) throw std::invalid_argument("mean photon loss exceeds the photon number");
      ch.p_flip = odd_loss_probability(ch.mean_lost);
      ch.amplitude_factor = std::sqrt(1.0 - ch.mean_lost / a2);
      break;
    }
    case LossReading::direct_flip:
      if (!(noise.loss_prob >= 0.0 && noise.loss_prob <= 0.5)) {
        throw std::invalid_argument("odd-loss probability must be in [0, 1/2]");
      }
      ch.p_flip = noise.loss_prob;
      ch.amplitude_factor = std::exp(-0.5 * noise.gamma_tau);
      ch.mean_lost = -a2 * std::expm1(-noise.gamma_tau);
      break;
    case LossReading::decay_exponent:
      ch.mean_lost = -a2 * std::expm1(-noise.gamma_tau);
      ch.p_flip = odd_loss_probability(ch.mean_lost);
      ch.amplitude_factor = std::exp(-0.5 * noise.gamma_tau);
      break;
  }
  return ch;
}

/// a|psi> / ||a|psi>||: each coefficient picks up its component's amplitude.
inline CoherentSuperposition photon_subtracted(const CoherentSuperposition& psi) {
  std::vector<CoherentComponent> comps(psi.components().begin(), psi.components().end());
  for (auto& c : comps) c.coeff *= c.amp;
  return CoherentSuperposition(std::move(comps)).normalized();
}

/// rho = (1 - P_f) |Psi><Psi| + P_f |Phi><Phi| after homodyne conditioning.
struct LossyFinalState {
  double p_flip = 0.0;
  CoherentSuperposition branch_plus;   // even number of photons lost
  CoherentSuperposition branch_minus;  // odd number lost: relative phase flipped by pi
  double decayed_alpha = 0.0;
};

/// Both mixture branches, each run through beam splitter and conditioning at
/// X with the decayed amplitude. The odd branch is the Kerr output with one
/// photon removed, which flips the relative phase of every opposite pair.
inline LossyFinalState lossy_final_state(double alpha_i, int n_components, double x, const NoiseParams& noise) {
  const LossChannel ch = loss_channel(alpha_i, noise);
  LossyFinalState s;
  s.p_flip = ch.p_flip;
  s.decayed_alpha = alpha_i * ch.amplitude_factor;
  const auto decomp = kerr_decompose(s.decayed_alpha, n_components);
  s.branch_plus = condition_on_x(beamsplit_with_vacuum(decomp.state), {x});
  s.branch_minus = condition_on_x(beamsplit_with_vacuum(photon_subtracted(decomp.state)), {x});
  return s;
}

struct LossyFidelityReport {
  double fidelity = 0.0;
  double f_plus = 0.0;
  double f_minus = 0.0;
  double p_flip = 0.0;
  double phi_max = 0.0;
  double decayed_alpha = 0.0;
};

/// <cat|rho|cat> = (1 - P_f) F+ + P_f F-, against the cat whose phase
/// maximizes the even branch and whose amplitude matches the decayed state.
inline LossyFidelityReport lossy_fidelity_report(double alpha_i, int n_components, double x, const NoiseParams& noise,
                                                 TargetRule rule = TargetRule::centered) {
  const LossyFinalState s = lossy_final_state(alpha_i, n_components, x, noise);
  const CatTarget target = default_target(kerr_decompose(s.decayed_alpha, n_components), x, rule);
  const FidelityReport plus = cat_fidelity(s.branch_plus, target);
  LossyFidelityReport r;
  r.p_flip = s.p_flip;
  r.decayed_alpha = s.decayed_alpha;
  r.phi_max = plus.phi_max;
  r.f_plus = plus.fidelity;
  r.f_minus = cat_overlap_at_phase(s.branch_minus, target, plus.phi_max);
  r.fidelity = (1.0 - s.p_flip) * r.f_plus + s.p_flip * r.f_minus;
  return r;
}

inline double lossy_fidelity(double alpha_i, int n_components, double x, const NoiseParams& noise) {
  return lossy_fidelity_report(alpha_i, n_components, x, noise).fidelity;
}

// --- phase fluctuations -----------------------------------------------------

/// Every amplitude multiplied by e^{i angle}.
inline CoherentSuperposition rotated(const CoherentSuperposition& psi, double angle) {
  std::vector<CoherentComponent> comps(psi.components().begin(), psi.components().end());
  const Complex r = std::polar(1.0, angle);
  for (auto& c : comps) c.amp *= r;
  return CoherentSuperposition(std::move(comps), psi.is_normalized());
}

/// Conditioned state when the Kerr output is rotated by delta_phi before the
/// beam splitter: components -alpha_i e^{i(2 n pi/N + delta_phi)}/sqrt2 with
/// coefficients C_n <X|...>, renormalized.
inline CoherentSuperposition phase_noise_state(double alpha_i, int n_components, double x, double delta_phi) {
  const auto decomp = kerr_decompose(alpha_i, n_components);
  return condition_on_x(beamsplit_with_vacuum(rotated(decomp.state, delta_phi)), {x});
}

enum class FidelityMeasure {
  squared,  // |<cat|psi>|^2
  modulus,  // |<cat|psi>|
};

enum class PhaseAveraging {
  adaptive,       // panelled adaptive Gauss-Kronrod in delta_phi
  gauss_hermite,  // Gauss-Hermite, node count doubled from 64 until converged
};

struct PhaseNoiseOptions {
  FidelityMeasure measure = FidelityMeasure::squared;
  PhaseAveraging method = PhaseAveraging::adaptive;
  TargetRule rule = TargetRule::centered;
  double abs_tol = 1e-11;
  std::size_t max_hermite_nodes = 4096;
};

struct PhaseNoiseReport {
  double fidelity = 0.0;
  double phi_max = 0.0;
  double abs_error = 0.0;
  std::size_t hermite_nodes = 0;  // 0 for adaptive
  bool converged = true;
};

/// Fidelity of the delta_phi-rotated conditioned state against the fixed
/// noiseless target cat. Reuses the pipeline's Gram matrix.
class PhaseNoiseIntegrand {
 public:
  PhaseNoiseIntegrand(const CatPipeline& pipe, double x, FidelityMeasure measure)
      : pipe_(pipe), x_(x), measure_(measure), target_(pipe.target(x)) {
    const FidelityPoint p = pipe.fidelity(x);
    if (p.degenerate) throw DegenerateStateError("phase noise: noiseless outcome is degenerate");
    phi_max_ = p.phi_max;
  }

  double phi_max() const noexcept { return phi_max_; }

  double operator()(double delta_phi) const {
    std::vector<Complex> c;
    try {
      c = pipe_.kernel().conditioned_coefficients(x_, delta_phi);
    } catch (const DegenerateStateError&) {
      return 0.0;
    }
    const auto amps = pipe_.kernel().rotated_amplitudes(delta_phi);
    const double f = detail::phase_objective(target_, c, amps)(phi_max_);
    return measure_ == FidelityMeasure::squared ? f : std::sqrt(f);
  }

 private:
  const CatPipeline& pipe_;
  double x_;
  FidelityMeasure measure_;
  CatTarget target_;
  double phi_max_ = 0.0;
};

namespace detail {

inline double gaussian_pdf(double t, double sigma) {
  return std::exp(-0.5 * (t / sigma) * (t / sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

/// int G(t; 0, sigma) f(t) dt over +-10 sigma, panelled at half the
/// revival spacing pi/N of an N-component state.
template <class F>
quadrature::Result gaussian_average_adaptive(const F& f, double sigma, int n_components, double abs_tol) {
  const double panel = std::min(sigma, std::numbers::pi / std::max(1, n_components)) / 2.0;
  return quadrature::integrate_panels([&](double t) { return gaussian_pdf(t, sigma) * f(t); }, -10.0 * sigma,
                                      10.0 * sigma, panel, abs_tol);
}

template <class F>
double gaussian_average_hermite(const F& f, double sigma, std::size_t nodes) {
  const quadrature::GaussHermiteRule rule(nodes);
  return rule.integrate([&](double u) { return f(std::numbers::sqrt2 * sigma * u); }) / std::sqrt(std::numbers::pi);
}

}  // namespace detail

inline PhaseNoiseReport phase_noise_avg_fidelity_report(const CatPipeline& pipe, double x, double sigma,
                                                        const PhaseNoiseOptions& opt = {}) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be finite and non-negative");
  const PhaseNoiseIntegrand f(pipe, x, opt.measure);
  PhaseNoiseReport r;
  r.phi_max = f.phi_max();
  if (sigma == 0.0) {
    r.fidelity = f(0.0);
    return r;
  }
  if (opt.method == PhaseAveraging::adaptive) {
    const auto q = detail::gaussian_average_adaptive(f, sigma, pipe.decomposition().n_components, opt.abs_tol);
    r.fidelity = q.value;
    r.abs_error = q.abs_error;
    return r;
  }
  std::size_t nodes = 64;
  double prev = detail::gaussian_average_hermite(f, sigma, nodes);
  r.converged = false;
  while (nodes * 2 <= opt.max_hermite_nodes) {
    nodes *= 2;
    const double next = detail::gaussian_average_hermite(f, sigma, nodes);
    r.abs_error = std::abs(next - prev);
    prev = next;
    if (r.abs_error < 1e-9) {
      r.converged = true;
      break;
    }
  }
  r.fidelity = prev;
  r.hermite_nodes = nodes;
  return r;
}

/// int G(delta_phi; 0, sigma) |<cat_{target, phi_max}|psi^{delta_phi}>|^2, phi_max
/// being the maximizing phase at delta_phi = 0.
inline double phase_noise_avg_fidelity(double alpha_i, int n_components, double x, double sigma,
                                       const PhaseNoiseOptions& opt = {}) {
  return phase_noise_avg_fidelity_report(CatPipeline(alpha_i, n_components, opt.rule), x, sigma, opt).fidelity;
}

/// int G(t; 0, sigma) |<b|b e^{it}>|^2 dt with b = alpha_i/sqrt2: the
/// single-branch rotation overlap that sets the phase-noise scale.
inline double rotation_overlap_average(double alpha_i, double sigma) {
  const double b2 = 0.5 * alpha_i * alpha_i;
  auto f = [b2](double t) { return std::exp(-2.0 * b2 * (1.0 - std::cos(t))); };
  if (sigma == 0.0) return 1.0;
  return detail::gaussian_average_adaptive(f, sigma, 1, 1e-12).value;
}

}  // namespace kerrcat
