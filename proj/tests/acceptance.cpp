// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fock_oracle.hpp"
#include "kerrcat/kerrcat.hpp"

using namespace kerrcat;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double integrate_density(const std::function<double(double)>& f, double half_width) {
  return quadrature::integrate_panels(f, -half_width, half_width, 0.5, 1e-10).value;
}

Outcome phase_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::vector<int> ns;
  for (int n = 1; n <= 64; ++n) ns.push_back(n);
  ns.push_back(200);
  ns.push_back(256);
  for (int n : ns) worst = std::max(worst, verify_phase_identity(n));
  const double dt = seconds_since(t0);
  return {worst < 1e-12 && dt < 1.0, fmt("max residual %.3e over N in 1..64, 200, 256 (%.3f s)", worst, dt)};
}

Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 1.0;
  for (double a : {1.0, 2.0, 4.0, 6.0, 8.0}) {
    const int cutoff = static_cast<int>(a * a + 10.0 * a + 50.0);
    for (int big_n : {2, 3, 4, 5, 8, 20}) {
      const fock::Vec ref = fock::kerr(a, std::numbers::pi / big_n, cutoff);
      fock::Vec lib(cutoff + 1);
      const auto decomp = kerr_decompose(a, big_n);
      for (const auto& c : decomp.state.components()) {
        const fock::Vec v = fock::coherent(c.amp, cutoff);
        for (int n = 0; n <= cutoff; ++n) lib[n] += c.coeff * v[n];
      }
      worst = std::min(worst, std::abs(fock::inner(ref, lib)));
    }
  }
  const double dt = seconds_since(t0);
  return {worst >= 1.0 - 1e-8 && dt < 5.0, fmt("min |<fock|decomposition>| = %.15f (%.3f s)", worst, dt)};
}

Outcome yurke_stoler() {
  double worst_f = 0.0, worst_phi = 0.0;
  for (double a : {1.0, 3.0, 20.0}) {
    const auto r = cat_fidelity(kerr_decompose(a, 2).state, a);
    worst_f = std::max(worst_f, std::abs(r.fidelity - 1.0));
    worst_phi = std::max(worst_phi, std::abs(r.phi_max - std::numbers::pi / 2));
  }
  return {worst_f <= 1e-10 && worst_phi <= 1e-4,
          fmt("N=2, alpha in {1,3,20}: max |F-1| = %.2e, max |phi-pi/2| = %.2e", worst_f, worst_phi)};
}

Outcome peak_fidelity() {
  const auto p = CatPipeline(20.0, 20).fidelity(0.0);
  return {p.fidelity > 0.99999, fmt("alpha=20, N=20, X=0: F = %.9f", p.fidelity)};
}

Outcome success_probabilities() {
  struct Case {
    int n;
    double f_min, expected, tol;
  };
  bool ok = true;
  std::string detail;
  for (const Case c : {Case{20, 0.99999, 0.10, 0.02}, Case{40, 0.99, 0.04, 0.01}, Case{60, 0.9, 0.02, 0.005}}) {
    const auto t0 = std::chrono::steady_clock::now();
    const CatPipeline pipe(20.0, c.n);
    const double p = success_probability(pipe, window_from_threshold(pipe, c.f_min));
    const double dt = seconds_since(t0);
    ok = ok && std::abs(p - c.expected) <= c.tol && dt < 10.0;
    detail += fmt("%sN=%d F>%g: %.5f (%.2f s)", detail.empty() ? "" : "; ", c.n, c.f_min, p, dt);
  }
  return {ok, detail};
}

Outcome max_fidelity_n60() {
  const CatPipeline pipe(20.0, 60);
  const auto grid = make_grid(-25.0, 25.0, 0.01);
  const auto pts = parallel_map(std::span<const double>(grid), [&](double x) { return pipe.fidelity(x); }, 0);
  const auto best = *std::max_element(pts.begin(), pts.end(),
                                      [](const auto& l, const auto& r) { return l.fidelity < r.fidelity; });
  return {std::abs(best.fidelity - 0.975) <= 0.005, fmt("max F = %.5f at X = %.2f", best.fidelity, best.x)};
}

Outcome bimodal_n200() {
  const auto d = conditioned_p_distribution(20.0, 200, 0.0, make_grid(-35.0, 35.0, 0.01));
  double top = 0.0;
  for (const auto& p : d) top = std::max(top, p.density);
  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < d.size(); ++i) {
    if (d[i].density > d[i - 1].density && d[i].density >= d[i + 1].density && d[i].density >= 0.1 * top) {
      peaks.push_back(i);
    }
  }
  std::string where;
  for (auto i : peaks) where += fmt("%s%.2f", where.empty() ? "" : ", ", d[i].q);
  if (peaks.size() != 2) return {false, fmt("%zu dominant maxima at P = {%s}", peaks.size(), where.c_str())};
  double dip = top;
  for (std::size_t i = peaks[0]; i <= peaks[1]; ++i) dip = std::min(dip, d[i].density);
  const double lower_peak = std::min(d[peaks[0]].density, d[peaks[1]].density);
  const bool placed = std::abs(d[peaks[0]].q + 20.0) <= 0.5 && std::abs(d[peaks[1]].q - 20.0) <= 0.5;
  return {placed && dip < 0.1 * lower_peak,
          fmt("maxima at P = {%s}, dip/peak = %.2e", where.c_str(), dip / lower_peak)};
}

Outcome loss_model() {
  const double probs[] = {0.1, 0.3, 0.6};
  const double expected[] = {0.88, 0.71, 0.55};
  bool ok = true;
  std::string detail = "reading=at_least_one_photon (mu = -ln(1-p)):";
  for (int i = 0; i < 3; ++i) {
    NoiseParams np;
    np.loss_prob = probs[i];
    const double f = lossy_fidelity(20.0, 20, 0.0, np);
    ok = ok && std::abs(f - expected[i]) <= 0.04;
    detail += fmt(" %g%% -> %.4f", 100 * probs[i], f);
  }
  detail += "; reading=direct_flip:";
  for (double p : probs) {
    NoiseParams np;
    np.loss_prob = p;
    np.reading = LossReading::direct_flip;
    try {
      detail += fmt(" %g%% -> %.4f", 100 * p, lossy_fidelity(20.0, 20, 0.0, np));
    } catch (const std::invalid_argument&) {
      detail += fmt(" %g%% -> invalid", 100 * p);
    }
  }
  return {ok, detail};
}

Outcome phase_noise() {
  bool ok = true;
  double worst_zero = 0.0;
  std::string detail;
  const auto sigmas = make_grid(0.0, 0.3, 0.01);
  for (int big_n : {20, 40, 60}) {
    const CatPipeline pipe(20.0, big_n);
    const double noiseless = pipe.fidelity(0.0).fidelity;
    const auto f = parallel_map(
        std::span<const double>(sigmas), [&](double s) { return phase_noise_avg_fidelity_report(pipe, 0.0, s).fidelity; },
        0);
    worst_zero = std::max(worst_zero, std::abs(f[0] - noiseless));
    std::size_t rises = 0;
    for (std::size_t i = 1; i < f.size(); ++i) rises += f[i] > f[i - 1];
    ok = ok && rises == 0;
    detail += fmt("; N=%d: F(0.3) = %.4f, increases = %zu", big_n, f.back(), rises);
  }
  return {ok && worst_zero <= 1e-9, fmt("max |F(0) - F| = %.2e", worst_zero) + detail};
}

Outcome normalization() {
  double worst_state = 0.0, worst_density = 0.0;
  auto state = [&](const CoherentSuperposition& s) { worst_state = std::max(worst_state, std::abs(squared_norm(s) - 1.0)); };
  auto density = [&](const std::function<double(double)>& f, double half_width) {
    worst_density = std::max(worst_density, std::abs(integrate_density(f, half_width) - 1.0));
  };
  for (double a : {1.0, 5.0, 20.0, 30.0}) {
    for (int big_n = 1; big_n <= 64; ++big_n) state(kerr_decompose(a, big_n).state);
  }
  for (int big_n : {2, 20, 40, 60, 200}) {
    const double a = 20.0;
    const CatPipeline pipe(a, big_n);
    worst_state = std::max(worst_state, std::abs(squared_norm(pipe.two_mode()) - 1.0));
    const double w = std::numbers::sqrt2 * a + 12.0;
    density([&](double x) { return pipe.density(x); }, w);
    density([&](double p) { return p_marginal_density(pipe.decomposition().state, p); }, w);
    for (double x : {-2.0, 0.0, 1.5}) {
      const auto s = pipe.conditioned(x);
      state(s);
      state(phase_noise_state(a, big_n, x, 0.07));
      density([&](double q) { return x_marginal_density(s, q); }, w);
      density([&](double q) { return p_marginal_density(s, q); }, w);
    }
  }
  for (int big_n : {2, 20}) {
    NoiseParams np;
    np.loss_prob = 0.3;
    np.gamma_tau = 0.05;
    const auto s = lossy_final_state(20.0, big_n, 0.0, np);
    state(s.branch_plus);
    state(s.branch_minus);
  }
  for (double phi : {0.0, 1.0, std::numbers::pi}) state(CatState{Complex{0.5, 0.2}, phi}.state());
  return {worst_state <= 1e-10 && worst_density <= 1e-6,
          fmt("max |norm-1| = %.2e, max |integral-1| = %.2e", worst_state, worst_density)};
}

Outcome brute_force() {
  double worst = 0.0;
  bool targets_agree = true;
  for (double a : {1.0, 2.0, 4.0, 6.0}) {
    const int cutoff = static_cast<int>(a * a + 10.0 * a + 50.0);
    for (int big_n = 2; big_n <= 8; ++big_n) {
      const CatPipeline pipe(a, big_n);
      const Complex target = fock::centered_target(a, big_n);
      for (double x : {-1.5, 0.0, 0.6, 2.0}) {
        targets_agree = targets_agree && std::abs(pipe.target(x).beta - target) < 1e-12;
        const auto ref = fock::pipeline(a, big_n, x, target, cutoff);
        worst = std::max({worst, std::abs(pipe.density(x) - ref.density),
                          std::abs(pipe.fidelity(x).fidelity - ref.fidelity)});
      }
    }
  }
  return {worst <= 1e-6 && targets_agree,
          fmt("alpha <= 6, N in 2..8: max deviation %.2e, targets %s", worst, targets_agree ? "agree" : "differ")};
}

Outcome symmetry() {
  bool ok = true;
  std::string detail;
  for (int big_n : {2, 20, 40, 60}) {
    const CatPipeline pipe(20.0, big_n);
    double df = 0.0, dd = 0.0;
    for (double x : {0.25, 0.5, 1.0, 2.0, 3.0}) {
      df = std::max(df, std::abs(pipe.fidelity(x).fidelity - pipe.fidelity(-x).fidelity));
      dd = std::max(dd, std::abs(pipe.density(x) - pipe.density(-x)));
    }
    ok = ok && df <= 1e-8 && dd <= 1e-8;
    detail += fmt("%sN=%d: |dF| %.1e, |d density| %.1e", detail.empty() ? "" : "; ", big_n, df, dd);
  }
  return {ok, detail};
}

}  // namespace

int main() {
  const std::pair<const char*, Outcome (*)()> criteria[] = {
      {"phase identity", phase_identity},
      {"oracle equivalence", oracle_equivalence},
      {"two-component limit", yurke_stoler},
      {"peak fidelity", peak_fidelity},
      {"success probabilities", success_probabilities},
      {"max fidelity N=60", max_fidelity_n60},
      {"bimodal P at N=200", bimodal_n200},
      {"loss model", loss_model},
      {"phase noise", phase_noise},
      {"normalization", normalization},
      {"number-basis brute force", brute_force},
      {"X mirror symmetry", symmetry},
  };
  int failed = 0;
  int id = 0;
  for (const auto& [name, check] : criteria) {
    ++id;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", id - failed, id);
  return failed == 0 ? 0 : 1;
}
