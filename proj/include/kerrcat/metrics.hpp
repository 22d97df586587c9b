#pragma once

// Cat-state fidelity, homodyne success probability and quadrature
// distributions of the conditioned Kerr output.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kerrcat/coherent.hpp"
#include "kerrcat/conditioning.hpp"
#include "kerrcat/kerr.hpp"
#include "kerrcat/quadrature.hpp"
#include "kerrcat/sweep.hpp"

namespace kerrcat {

inline constexpr std::size_t kPhaseScanPoints = 4096;

/// The two branches of a target cat N (|beta> + e^{i phi} |partner>).
struct CatTarget {
  Complex beta;
  Complex partner;

  static CatTarget centered(Complex beta) { return {beta, -beta}; }
};

/// N(beta, phi) (|beta> + e^{i phi} |-beta>).
struct CatState {
  Complex beta;
  double phi = 0.0;

  /// [2 + 2 cos(phi) e^{-2|beta|^2}]^{-1/2}
  static double normalization(Complex beta, double phi) {
    return 1.0 / std::sqrt(2.0 + 2.0 * std::cos(phi) * std::exp(-2.0 * std::norm(beta)));
  }

  CoherentSuperposition state() const {
    const double n = normalization(beta, phi);
    return CoherentSuperposition({{Complex{n}, beta}, {n * std::polar(1.0, phi), -beta}}, true);
  }
};

struct FidelityReport {
  double fidelity = 0.0;
  double phi_max = 0.0;
  Complex target_beta{};
};

namespace detail {

/// |<cat_phi|psi>|^2 with g0 = <beta|psi>, g1 = <partner|psi>, s = <beta|partner>.
struct PhaseObjective {
  Complex g0, g1, s;

  double operator()(double phi) const {
    const Complex e = std::polar(1.0, phi);
    const double norm_inv = 2.0 + 2.0 * (e * s).real();
    return std::norm(g0 + std::conj(e) * g1) / norm_inv;
  }
};

/// Grid scan over [0, 2pi) followed by shrinking parabolic refinement.
inline std::pair<double, double> maximize_phase(const PhaseObjective& f) {
  const double h0 = 2.0 * std::numbers::pi / static_cast<double>(kPhaseScanPoints);
  std::size_t best = 0;
  double best_f = -1.0;
  for (std::size_t j = 0; j < kPhaseScanPoints; ++j) {
    const double v = f(h0 * static_cast<double>(j));
    if (v > best_f) {
      best_f = v;
      best = j;
    }
  }
  double phi = h0 * static_cast<double>(best);
  double h = h0;
  for (int iter = 0; iter < 8; ++iter) {
    const double fm = f(phi - h);
    const double fp = f(phi + h);
    const double curvature = fm - 2.0 * best_f + fp;
    if (curvature < 0.0) {
      const double step = std::clamp(0.5 * h * (fm - fp) / curvature, -h, h);
      const double cand = f(phi + step);
      if (cand > best_f) {
        phi += step;
        best_f = cand;
      }
    }
    h *= 0.25;
  }
  phi = std::fmod(phi, 2.0 * std::numbers::pi);
  if (phi < 0.0) phi += 2.0 * std::numbers::pi;
  return {best_f, phi};
}

inline Complex overlap_with_coherent(Complex beta, std::span<const Complex> coeff, std::span<const Complex> amp) {
  LogSum acc;
  for (std::size_t i = 0; i < coeff.size(); ++i) {
    acc.add(LogComplex::from(coeff[i]) * log_coherent_overlap(beta, amp[i]));
  }
  return acc.result().value();
}

inline PhaseObjective phase_objective(const CatTarget& t, std::span<const Complex> coeff, std::span<const Complex> amp) {
  return {overlap_with_coherent(t.beta, coeff, amp), overlap_with_coherent(t.partner, coeff, amp),
          coherent_overlap(t.beta, t.partner)};
}

inline PhaseObjective phase_objective(const CatTarget& t, const CoherentSuperposition& psi) {
  std::vector<Complex> c, b;
  split(psi.components(), c, b);
  return phase_objective(t, c, b);
}

}  // namespace detail

/// max over phi of |<cat_{target, phi}|psi>|^2, with the maximizing phase.
inline FidelityReport cat_fidelity(const CoherentSuperposition& psi, const CatTarget& target) {
  if (!psi.is_normalized()) throw std::invalid_argument("cat_fidelity: psi must be normalized");
  if (!(std::abs(target.beta) > 0.0) || !is_finite(target.beta)) {
    throw std::invalid_argument("cat_fidelity: target amplitude must be finite and nonzero");
  }
  const auto [f, phi] = detail::maximize_phase(detail::phase_objective(target, psi));
  return {f, phi, target.beta};
}

inline FidelityReport cat_fidelity(const CoherentSuperposition& psi, Complex target_beta) {
  return cat_fidelity(psi, CatTarget::centered(target_beta));
}

/// |<cat_{target, phi}|psi>|^2 at a fixed relative phase.
inline double cat_overlap_at_phase(const CoherentSuperposition& psi, const CatTarget& target, double phi) {
  return detail::phase_objective(target, psi)(phi);
}

/// How the reference cat is chosen for a conditioned state.
enum class TargetRule {
  /// Branch of the X = 0 outcome, i.e. the component with Re(beta_n)
  /// nearest zero, against its negative. Independent of X.
  centered,
  /// Component whose X-wavefunction is largest at the actual outcome,
  /// against its complex conjugate (a displaced cat for X != 0).
  nearest_pair,
};

/// Index of the amplitude whose X wavefunction is largest at outcome x.
/// Ties (within 1e-9 in log magnitude) go to the earliest entry.
inline std::size_t dominant_branch(std::span<const Complex> amps, double x) {
  std::size_t best_i = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const double lm = log_x_amplitude(x, amps[i]).log_magnitude;
    if (lm > best + 1e-9) {
      best = lm;
      best_i = i;
    }
  }
  return best_i;
}

/// Amplitude of the dominant conditioned branch. With the centered rule the
/// probe outcome is 0, so X = 0 with N = 4k selects n = N/4.
inline Complex default_target_beta(const KerrDecomposition& decomp, double x, TargetRule rule = TargetRule::centered) {
  std::vector<Complex> amps;
  amps.reserve(static_cast<std::size_t>(decomp.n_components));
  for (int n = 1; n <= decomp.n_components; ++n) amps.push_back(decomp.amplitude(n) / std::numbers::sqrt2);
  return amps[dominant_branch(amps, rule == TargetRule::centered ? 0.0 : x)];
}

/// Centered target read off a conditioned state's own amplitudes; equals
/// default_target for states produced by the pipeline.
inline CatTarget centered_target_of(const CoherentSuperposition& psi) {
  if (psi.empty()) throw std::invalid_argument("centered_target_of: empty state");
  std::vector<Complex> amps;
  for (const auto& c : psi.components()) amps.push_back(c.amp);
  return CatTarget::centered(amps[dominant_branch(amps, 0.0)]);
}

inline CatTarget default_target(const KerrDecomposition& decomp, double x, TargetRule rule = TargetRule::centered) {
  const Complex beta = default_target_beta(decomp, x, rule);
  return rule == TargetRule::centered ? CatTarget::centered(beta) : CatTarget{beta, std::conj(beta)};
}

struct FidelityPoint {
  double x = 0.0;
  double fidelity = 0.0;
  double phi_max = 0.0;
  bool degenerate = false;
};

/// Kerr decomposition -> beam splitter -> homodyne kernel for one (alpha_i, N).
///
/// Immutable after construction; every query is const and thread-safe.
class CatPipeline {
 public:
  CatPipeline(double alpha_i, int n_components, TargetRule rule = TargetRule::centered)
      : decomp_(kerr_decompose(alpha_i, n_components)),
        two_mode_(beamsplit_with_vacuum(decomp_.state)),
        kernel_(two_mode_),
        rule_(rule) {}

  const KerrDecomposition& decomposition() const noexcept { return decomp_; }
  const TwoModeProductSuperposition& two_mode() const noexcept { return two_mode_; }
  const HomodyneKernel& kernel() const noexcept { return kernel_; }
  TargetRule rule() const noexcept { return rule_; }

  CatTarget target(double x) const { return default_target(decomp_, x, rule_); }

  double density(double x) const { return kernel_.density(x); }

  CoherentSuperposition conditioned(double x) const { return kernel_.conditioned(x); }

  FidelityPoint fidelity(double x) const {
    FidelityPoint p;
    p.x = x;
    std::vector<Complex> c;
    try {
      c = kernel_.conditioned_coefficients(x);
    } catch (const DegenerateStateError&) {
      p.degenerate = true;
      return p;
    }
    const auto [f, phi] = detail::maximize_phase(detail::phase_objective(target(x), c, kernel_.amplitudes()));
    p.fidelity = f;
    p.phi_max = phi;
    return p;
  }

 private:
  KerrDecomposition decomp_;
  TwoModeProductSuperposition two_mode_;
  HomodyneKernel kernel_;
  TargetRule rule_;
};

/// F(X) over a grid. Degenerate outcomes give fidelity 0 and a flag.
inline std::vector<FidelityPoint> fidelity_curve(double alpha_i, int n_components, std::span<const double> x_grid,
                                                 TargetRule rule = TargetRule::centered, SweepOptions sweep = {}) {
  for (double x : x_grid) {
    if (!std::isfinite(x)) throw std::invalid_argument("fidelity_curve: grid must be finite");
  }
  const CatPipeline pipe(alpha_i, n_components, rule);
  return parallel_map(x_grid, [&](double x) { return pipe.fidelity(x); }, sweep.workers);
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// A set of disjoint homodyne-outcome intervals counted as success.
class AcceptanceWindow {
 public:
  AcceptanceWindow() = default;

  explicit AcceptanceWindow(std::vector<Interval> intervals) : intervals_(std::move(intervals)) {
    std::sort(intervals_.begin(), intervals_.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
      if (std::isnan(intervals_[i].lo) || std::isnan(intervals_[i].hi) || !(intervals_[i].lo < intervals_[i].hi)) {
        throw std::invalid_argument("AcceptanceWindow: each interval needs lo < hi");
      }
      if (i > 0 && intervals_[i].lo < intervals_[i - 1].hi) {
        throw std::invalid_argument("AcceptanceWindow: intervals overlap");
      }
    }
  }

  std::span<const Interval> intervals() const noexcept { return intervals_; }
  bool empty() const noexcept { return intervals_.empty(); }

  bool contains(double x) const noexcept {
    return std::any_of(intervals_.begin(), intervals_.end(), [x](const Interval& i) { return x >= i.lo && x <= i.hi; });
  }

  /// "lo:hi|lo:hi" with 15 significant digits; empty string for no intervals.
  std::string to_string() const {
    std::string s;
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
      if (i) s += '|';
      s += csv::format(intervals_[i].lo) + ':' + csv::format(intervals_[i].hi);
    }
    return s;
  }

 private:
  std::vector<Interval> intervals_;
};

inline constexpr double kProbabilityTolerance = 1e-9;

/// Outcome density beyond |X| = alpha_i + 12 is below exp(-144) and ignored.
inline double outcome_support(double alpha_i) { return alpha_i + 12.0; }

/// int over the window of the homodyne outcome density.
inline double success_probability(const CatPipeline& pipe, const AcceptanceWindow& window) {
  const double edge = outcome_support(pipe.decomposition().alpha_i);
  double total = 0.0;
  for (const auto& iv : window.intervals()) {
    const double lo = std::max(iv.lo, -edge);
    const double hi = std::min(iv.hi, edge);
    if (!(lo < hi)) continue;
    total += quadrature::integrate_panels([&](double x) { return pipe.density(x); }, lo, hi, 1.0,
                                          kProbabilityTolerance)
                 .value;
  }
  return total;
}

inline double success_probability(double alpha_i, int n_components, const AcceptanceWindow& window) {
  return success_probability(CatPipeline(alpha_i, n_components), window);
}

/// Union of outcome intervals with F(X) >= f_min, scanned over
/// [-(alpha_i + 5), alpha_i + 5] and bisected at each crossing to 1e-6.
inline AcceptanceWindow window_from_threshold(const CatPipeline& pipe, double f_min, double scan_step = 0.01,
                                              SweepOptions sweep = {}) {
  if (!(f_min > 0.0 && f_min < 1.0)) throw std::invalid_argument("window_from_threshold: f_min must be in (0, 1)");
  if (!(scan_step > 0.0)) throw std::invalid_argument("window_from_threshold: scan_step must be positive");
  const double edge = pipe.decomposition().alpha_i + 5.0;
  const auto steps = static_cast<std::size_t>(std::ceil(2.0 * edge / scan_step));
  std::vector<double> xs(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) xs[i] = std::min(edge, -edge + scan_step * static_cast<double>(i));
  const auto pts = parallel_map(std::span<const double>(xs), [&](double x) { return pipe.fidelity(x); }, sweep.workers);

  auto inside = [&](double x) { return pipe.fidelity(x).fidelity >= f_min; };
  auto crossing = [&](double out_x, double in_x) {
    while (std::abs(in_x - out_x) > 1e-6) {
      const double mid = 0.5 * (in_x + out_x);
      (inside(mid) ? in_x : out_x) = mid;
    }
    return in_x;
  };

  std::vector<Interval> found;
  std::optional<double> open;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const bool in = pts[i].fidelity >= f_min;
    if (in && !open) open = (i == 0) ? xs[0] : crossing(xs[i - 1], xs[i]);
    if (!in && open) {
      found.push_back({*open, crossing(xs[i], xs[i - 1])});
      open.reset();
    }
  }
  if (open) found.push_back({*open, xs.back()});
  // A single isolated sample can bisect to a zero-width interval.
  std::erase_if(found, [](const Interval& iv) { return !(iv.lo < iv.hi); });
  return AcceptanceWindow(std::move(found));
}

inline AcceptanceWindow window_from_threshold(double alpha_i, int n_components, double f_min, double scan_step = 0.01,
                                              SweepOptions sweep = {}) {
  return window_from_threshold(CatPipeline(alpha_i, n_components), f_min, scan_step, sweep);
}

struct DensityPoint {
  double q = 0.0;
  double density = 0.0;
};

inline std::vector<DensityPoint> p_distribution(const CoherentSuperposition& psi, std::span<const double> p_grid) {
  std::vector<DensityPoint> out;
  out.reserve(p_grid.size());
  for (double p : p_grid) {
    if (!std::isfinite(p)) throw std::invalid_argument("p_distribution: grid must be finite");
    out.push_back({p, p_marginal_density(psi, p)});
  }
  return out;
}

/// P-quadrature density of the conditioned state at outcome X.
inline std::vector<DensityPoint> conditioned_p_distribution(double alpha_i, int n_components, double x,
                                                            std::span<const double> p_grid) {
  const auto d = kerr_decompose(alpha_i, n_components);
  return p_distribution(condition_on_x(beamsplit_with_vacuum(d.state), {x}), p_grid);
}

/// P-quadrature density of the Kerr output before the beam splitter.
inline std::vector<DensityPoint> precondition_p_distribution(double alpha_i, int n_components,
                                                             std::span<const double> p_grid) {
  return p_distribution(kerr_decompose(alpha_i, n_components).state, p_grid);
}

/// Evenly spaced grid lo, lo+step, ..., up to hi (inclusive within step/2).
inline std::vector<double> make_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw std::invalid_argument("make_grid: need step > 0 and hi >= lo");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5));
  std::vector<double> g(n + 1);
  for (std::size_t i = 0; i <= n; ++i) g[i] = lo + step * static_cast<double>(i);
  return g;
}

}  // namespace kerrcat
