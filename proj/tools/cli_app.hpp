#pragma once

// The kerrcat command-line application. main() is a thin wrapper so tests can
// drive run() in-process with their own streams.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kerrcat/kerrcat.hpp"

namespace kerrcat::cli {

enum ExitCode : int {
  kOk = 0,
  kBadArguments = 1,
  kNumericalFailure = 2,
  kVerificationFailure = 3,
};

/// Raised for argument combinations CLI11 cannot check on its own.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using ordered_json = nlohmann::ordered_json;

struct Options {
  double alpha = 20.0;
  int n = 20;
  std::optional<double> lambda_tau;
  double x = 0.0;
  std::string format = "csv";
  std::string output;
  std::optional<unsigned> workers;

  // grids
  double x_min = -3.0, x_max = 3.0, x_step = 0.01;
  double p_min = -35.0, p_max = 35.0, p_step = 0.05;
  std::optional<double> sigma;
  double sigma_min = 0.0, sigma_max = 0.3, sigma_step = 0.01;

  // fidelity / windows
  std::string state_file;
  std::optional<double> target_re, target_im;
  std::string rule = "centered";
  std::optional<double> f_min;
  std::string window;
  double scan_step = 0.01;

  // Fock evolution
  double alpha_im = 0.0;
  std::optional<int> cutoff;

  // noise
  std::vector<double> loss_probs{0.1, 0.3, 0.6};
  std::string reading = "threshold";
  double gamma_tau = 0.0;
  std::string measure = "squared";
  std::string method = "adaptive";

  std::string figure;
};

namespace detail {

inline std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

inline unsigned workers_from(const Options& o) {
  if (o.workers) return *o.workers;
  if (const auto w = env("KERRCAT_WORKERS")) {
    try {
      std::size_t used = 0;
      const long v = std::stol(*w, &used);
      if (used == w->size() && v >= 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw UsageError("KERRCAT_WORKERS must be a non-negative integer, got '" + *w + "'");
  }
  return 1;
}

/// N from --n, or from --lambda-tau which must be pi/N for an integer N.
inline int components_from(const Options& o) {
  if (!o.lambda_tau) return o.n;
  const double lt = *o.lambda_tau;
  if (!(lt > 0.0) || !std::isfinite(lt)) throw UsageError("--lambda-tau must be positive");
  const double ratio = std::numbers::pi / lt;
  const long n = std::lround(ratio);
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio) {
    throw UsageError("--lambda-tau must equal pi/N for a positive integer N");
  }
  return static_cast<int>(n);
}

inline double lambda_tau_from(const Options& o) {
  return o.lambda_tau ? *o.lambda_tau : std::numbers::pi / components_from(o);
}

inline TargetRule rule_from(const std::string& s) {
  return s == "nearest-pair" ? TargetRule::nearest_pair : TargetRule::centered;
}

inline LossReading reading_from(const std::string& s) {
  if (s == "direct") return LossReading::direct_flip;
  if (s == "decay") return LossReading::decay_exponent;
  return LossReading::at_least_one_photon;
}

/// "lo:hi|lo:hi"
inline AcceptanceWindow parse_window(const std::string& text) {
  std::vector<Interval> ivs;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, '|')) {
    const auto colon = part.find(':');
    if (colon == std::string::npos) throw UsageError("--window expects lo:hi[|lo:hi...], got '" + text + "'");
    try {
      std::size_t u1 = 0, u2 = 0;
      const std::string a = part.substr(0, colon), b = part.substr(colon + 1);
      const double lo = std::stod(a, &u1), hi = std::stod(b, &u2);
      if (u1 != a.size() || u2 != b.size()) throw std::invalid_argument("trailing characters");
      ivs.push_back({lo, hi});
    } catch (const std::exception&) {
      throw UsageError("--window expects numbers, got '" + part + "'");
    }
  }
  if (ivs.empty()) throw UsageError("--window is empty");
  try {
    return AcceptanceWindow(std::move(ivs));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

inline std::vector<double> grid(double lo, double hi, double step, const char* name) {
  if (!(step > 0.0) || !(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw UsageError(std::string(name) + " grid needs finite bounds with max >= min and step > 0");
  }
  if ((hi - lo) / step > 1e7) throw UsageError(std::string(name) + " grid has more than 1e7 points");
  return make_grid(lo, hi, step);
}

inline std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

inline ordered_json complex_json(Complex z) { return ordered_json{{"re", z.real()}, {"im", z.imag()}}; }

}  // namespace detail

/// Everything a command needs besides its options.
struct Context {
  const Options& opt;
  std::ostream& err;
  std::ostringstream body;  // written to stdout or --output once the command succeeds
  std::string default_name;  // used by reproduce when only KERRCAT_OUTPUT_DIR is set
  bool verification_failed = false;
};

// --- commands ----------------------------------------------------------------

inline void cmd_decompose(Context& ctx) {
  const auto d = kerr_decompose(ctx.opt.alpha, detail::components_from(ctx.opt));
  if (ctx.opt.format == "json") {
    ctx.body << dump_state(d.state);
  } else {
    write_coefficients_csv(ctx.body, d.coefficients);
  }
}

inline void cmd_evolve_fock(Context& ctx) {
  const auto& o = ctx.opt;
  const Complex alpha{o.alpha, o.alpha_im};
  const int cutoff = o.cutoff ? *o.cutoff : recommended_cutoff(std::abs(alpha));
  const FockState f = kerr_fock_evolve({detail::lambda_tau_from(o), alpha}, cutoff);
  if (f.below_recommended_cutoff) {
    ctx.err << "warning: cutoff " << cutoff << " is below the recommended " << recommended_cutoff(std::abs(alpha))
            << "\n";
  }
  if (o.format == "json") {
    ordered_json j;
    j["lambda_tau"] = detail::lambda_tau_from(o);
    j["cutoff"] = f.cutoff();
    j["truncation_error"] = f.truncation_error;
    ordered_json amps = ordered_json::array();
    for (Complex c : f.amplitudes) amps.push_back(detail::complex_json(c));
    j["amplitudes"] = std::move(amps);
    ctx.body << detail::dump(j);
    return;
  }
  csv::Writer w(ctx.body, {"n", "re", "im", "probability"});
  for (int n = 0; n <= f.cutoff(); ++n) {
    const Complex c = f.amplitudes[static_cast<std::size_t>(n)];
    w.row(n, c.real(), c.imag(), std::norm(c));
  }
}

inline void cmd_condition(Context& ctx) {
  const auto& o = ctx.opt;
  const auto d = kerr_decompose(o.alpha, detail::components_from(o));
  const auto tm = beamsplit_with_vacuum(d.state);
  const auto s = condition_on_x(tm, {o.x});
  if (o.format == "json") {
    ctx.body << dump_state(s, o.x);
    return;
  }
  csv::Writer w(ctx.body, {"n", "coeff_re", "coeff_im", "amp_re", "amp_im"});
  int n = 1;
  for (const auto& c : s.components()) w.row(n++, c.coeff.real(), c.coeff.imag(), c.amp.real(), c.amp.imag());
}

inline void cmd_fidelity(Context& ctx) {
  const auto& o = ctx.opt;
  CoherentSuperposition psi;
  std::optional<double> x;
  CatTarget target;
  if (!o.state_file.empty()) {
    std::ifstream in(o.state_file);
    if (!in) throw UsageError("cannot open state file '" + o.state_file + "'");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("state file is not valid JSON: ") + e.what());
    }
    auto sd = state_from_json(doc);
    if (!sd.state.is_normalized()) sd.state = sd.state.normalized();
    psi = std::move(sd.state);
    x = sd.measured_x;
    target = centered_target_of(psi);
  } else {
    const auto d = kerr_decompose(o.alpha, detail::components_from(o));
    psi = condition_on_x(beamsplit_with_vacuum(d.state), {o.x});
    x = o.x;
    target = default_target(d, o.x, detail::rule_from(o.rule));
  }
  if (o.target_re || o.target_im) target = CatTarget::centered(Complex{o.target_re.value_or(0.0), o.target_im.value_or(0.0)});
  const FidelityReport r = cat_fidelity(psi, target);
  if (o.format == "json") {
    ordered_json j;
    j["x"] = x ? ordered_json(*x) : ordered_json(nullptr);
    j["fidelity"] = r.fidelity;
    j["phi_max"] = r.phi_max;
    j["target"] = detail::complex_json(target.beta);
    j["partner"] = detail::complex_json(target.partner);
    ctx.body << detail::dump(j);
    return;
  }
  csv::Writer w(ctx.body, {"x", "fidelity", "phi_max", "target_re", "target_im"});
  w.row(x ? csv::format(*x) : std::string(), r.fidelity, r.phi_max, target.beta.real(), target.beta.imag());
}

inline void cmd_fidelity_curve(Context& ctx) {
  const auto& o = ctx.opt;
  const auto g = detail::grid(o.x_min, o.x_max, o.x_step, "X");
  const auto pts = fidelity_curve(o.alpha, detail::components_from(o), g, detail::rule_from(o.rule),
                                  {detail::workers_from(o)});
  if (o.format == "json") {
    ordered_json arr = ordered_json::array();
    for (const auto& p : pts) {
      arr.push_back({{"x", p.x}, {"fidelity", p.fidelity}, {"phi_max", p.phi_max}, {"degenerate", p.degenerate}});
    }
    ctx.body << detail::dump(arr);
    return;
  }
  csv::Writer w(ctx.body, {"x", "fidelity", "phi_max", "degenerate"});
  for (const auto& p : pts) w.row(p.x, p.fidelity, p.phi_max, p.degenerate ? 1 : 0);
}

inline void write_density(Context& ctx, const std::vector<DensityPoint>& d) {
  if (ctx.opt.format == "json") {
    ordered_json arr = ordered_json::array();
    for (const auto& p : d) arr.push_back({{"p", p.q}, {"density", p.density}});
    ctx.body << detail::dump(arr);
    return;
  }
  csv::Writer w(ctx.body, {"p", "density"});
  for (const auto& p : d) w.row(p.q, p.density);
}

inline void cmd_pdist_pre(Context& ctx) {
  const auto& o = ctx.opt;
  const auto g = detail::grid(o.p_min, o.p_max, o.p_step, "P");
  write_density(ctx, precondition_p_distribution(o.alpha, detail::components_from(o), g));
}

inline void cmd_pdist_post(Context& ctx) {
  const auto& o = ctx.opt;
  const auto g = detail::grid(o.p_min, o.p_max, o.p_step, "P");
  write_density(ctx, conditioned_p_distribution(o.alpha, detail::components_from(o), o.x, g));
}

inline void cmd_success_prob(Context& ctx) {
  const auto& o = ctx.opt;
  if (o.f_min.has_value() == !o.window.empty()) throw UsageError("give exactly one of --f-min and --window");
  const int n = detail::components_from(o);
  const CatPipeline pipe(o.alpha, n, detail::rule_from(o.rule));
  const AcceptanceWindow w = o.f_min ? window_from_threshold(pipe, *o.f_min, o.scan_step, {detail::workers_from(o)})
                                     : detail::parse_window(o.window);
  const double p = success_probability(pipe, w);
  if (o.format == "json") {
    ordered_json j;
    j["N"] = n;
    j["alpha_i"] = o.alpha;
    j["f_min"] = o.f_min ? ordered_json(*o.f_min) : ordered_json(nullptr);
    j["window_intervals"] = w.to_string();
    j["probability"] = p;
    ctx.body << detail::dump(j);
    return;
  }
  csv::Writer out(ctx.body, {"N", "alpha_i", "f_min", "window_intervals", "probability"});
  out.row(n, o.alpha, o.f_min ? csv::format(*o.f_min) : std::string(), w.to_string(), p);
}

inline void cmd_window(Context& ctx) {
  const auto& o = ctx.opt;
  if (!o.f_min) throw UsageError("--f-min is required");
  const CatPipeline pipe(o.alpha, detail::components_from(o), detail::rule_from(o.rule));
  const auto w = window_from_threshold(pipe, *o.f_min, o.scan_step, {detail::workers_from(o)});
  if (o.format == "json") {
    ordered_json arr = ordered_json::array();
    for (const auto& iv : w.intervals()) arr.push_back({{"lo", iv.lo}, {"hi", iv.hi}});
    ctx.body << detail::dump(arr);
    return;
  }
  csv::Writer out(ctx.body, {"lo", "hi"});
  for (const auto& iv : w.intervals()) out.row(iv.lo, iv.hi);
}

inline void cmd_noise_loss(Context& ctx) {
  const auto& o = ctx.opt;
  const int n = detail::components_from(o);
  const LossReading reading = detail::reading_from(o.reading);
  std::vector<double> probs = o.loss_probs;
  if (reading == LossReading::decay_exponent) probs = {0.0};  // loss set by --gamma-tau alone
  ordered_json arr = ordered_json::array();
  std::ostringstream rows;
  csv::Writer w(rows, {"loss_prob", "p_flip", "decayed_alpha", "f_plus", "f_minus", "fidelity"});
  for (double p : probs) {
    NoiseParams np;
    np.loss_prob = p;
    np.gamma_tau = o.gamma_tau;
    np.reading = reading;
    const auto r = lossy_fidelity_report(o.alpha, n, o.x, np, detail::rule_from(o.rule));
    const double shown = reading == LossReading::decay_exponent ? -std::expm1(-loss_channel(o.alpha, np).mean_lost) : p;
    w.row(shown, r.p_flip, r.decayed_alpha, r.f_plus, r.f_minus, r.fidelity);
    arr.push_back({{"loss_prob", shown},
                   {"p_flip", r.p_flip},
                   {"decayed_alpha", r.decayed_alpha},
                   {"f_plus", r.f_plus},
                   {"f_minus", r.f_minus},
                   {"fidelity", r.fidelity}});
  }
  ctx.body << (o.format == "json" ? detail::dump(arr) : rows.str());
}

inline std::vector<double> sigma_grid(const Options& o) {
  if (o.sigma) return {*o.sigma};
  return detail::grid(o.sigma_min, o.sigma_max, o.sigma_step, "sigma");
}

inline PhaseNoiseOptions phase_options(const Options& o) {
  PhaseNoiseOptions p;
  p.measure = o.measure == "modulus" ? FidelityMeasure::modulus : FidelityMeasure::squared;
  p.method = o.method == "hermite" ? PhaseAveraging::gauss_hermite : PhaseAveraging::adaptive;
  p.rule = detail::rule_from(o.rule);
  return p;
}

inline void cmd_noise_phase(Context& ctx) {
  const auto& o = ctx.opt;
  const auto sigmas = sigma_grid(o);
  for (double s : sigmas) {
    if (!(s >= 0.0)) throw UsageError("sigma must be non-negative");
  }
  const auto popt = phase_options(o);
  const CatPipeline pipe(o.alpha, detail::components_from(o), popt.rule);
  const auto reports = parallel_map(
      std::span<const double>(sigmas), [&](double s) { return phase_noise_avg_fidelity_report(pipe, o.x, s, popt); },
      detail::workers_from(o));
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (!reports[i].converged) {
      ctx.err << "warning: Gauss-Hermite average did not converge at sigma = " << csv::format(sigmas[i]) << "\n";
    }
  }
  if (o.format == "json") {
    ordered_json arr = ordered_json::array();
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
      arr.push_back({{"sigma", sigmas[i]}, {"avg_fidelity", reports[i].fidelity}});
    }
    ctx.body << detail::dump(arr);
    return;
  }
  csv::Writer w(ctx.body, {"sigma", "avg_fidelity"});
  for (std::size_t i = 0; i < sigmas.size(); ++i) w.row(sigmas[i], reports[i].fidelity);
}

// --- reproduce -----------------------------------------------------------------

inline constexpr double kFlagshipAlpha = 20.0;
inline constexpr int kCurveComponents[] = {20, 40, 60};

inline void reproduce_fig2(Context& ctx) {
  const auto g = make_grid(-35.0, 35.0, 0.05);
  const auto pre = precondition_p_distribution(kFlagshipAlpha, 20, g);
  const auto post = conditioned_p_distribution(kFlagshipAlpha, 20, 0.0, g);
  csv::Writer w(ctx.body, {"p", "density_before", "density_after"});
  for (std::size_t i = 0; i < g.size(); ++i) w.row(g[i], pre[i].density, post[i].density);
}

inline void reproduce_fig3(Context& ctx) {
  const auto g = make_grid(-3.0, 3.0, 0.01);
  std::vector<std::vector<FidelityPoint>> series;
  for (int n : kCurveComponents) {
    series.push_back(fidelity_curve(kFlagshipAlpha, n, g, TargetRule::centered, {detail::workers_from(ctx.opt)}));
  }
  csv::Writer w(ctx.body, {"x", "fidelity_n20", "phi_max_n20", "fidelity_n40", "phi_max_n40", "fidelity_n60",
                           "phi_max_n60"});
  for (std::size_t i = 0; i < g.size(); ++i) {
    w.row(g[i], series[0][i].fidelity, series[0][i].phi_max, series[1][i].fidelity, series[1][i].phi_max,
          series[2][i].fidelity, series[2][i].phi_max);
  }
}

inline void reproduce_fig4(Context& ctx) {
  const auto g = make_grid(-35.0, 35.0, 0.01);
  const auto d = conditioned_p_distribution(kFlagshipAlpha, 200, 0.0, g);
  csv::Writer w(ctx.body, {"p", "density"});
  for (const auto& p : d) w.row(p.q, p.density);
}

inline void reproduce_fig5(Context& ctx) {
  const auto g = make_grid(0.0, 0.3, 0.005);
  std::vector<std::vector<double>> cols;
  for (int n : kCurveComponents) {
    const CatPipeline pipe(kFlagshipAlpha, n);
    const auto r = parallel_map(std::span<const double>(g),
                                [&](double s) { return phase_noise_avg_fidelity_report(pipe, 0.0, s).fidelity; },
                                detail::workers_from(ctx.opt));
    cols.push_back(r);
  }
  csv::Writer w(ctx.body, {"sigma", "avg_fidelity_n20", "avg_fidelity_n40", "avg_fidelity_n60"});
  for (std::size_t i = 0; i < g.size(); ++i) w.row(g[i], cols[0][i], cols[1][i], cols[2][i]);
}

/// Each quoted number next to the value computed here.
inline void reproduce_table1(Context& ctx) {
  csv::Writer w(ctx.body, {"quantity", "parameters", "reference", "computed", "tolerance", "agrees"});
  auto row = [&](const std::string& q, const std::string& params, double ref, double got, double tol) {
    w.row(q, params, ref, got, tol, std::abs(got - ref) <= tol ? "yes" : "no");
  };
  const auto d20 = kerr_decompose(kFlagshipAlpha, 20);
  row("fidelity_before_splitter", "alpha_i=20 N=20 target=alpha_i", 0.1, cat_fidelity(d20.state, kFlagshipAlpha).fidelity,
      0.01);

  const CatPipeline p20(kFlagshipAlpha, 20), p40(kFlagshipAlpha, 40), p60(kFlagshipAlpha, 60);
  const auto peak = p20.fidelity(0.0);
  w.row("peak_fidelity", "alpha_i=20 N=20 X=0", "0.99999", peak.fidelity, "lower bound",
        peak.fidelity > 0.99999 ? "yes" : "no");
  row("phi_max_at_origin", "alpha_i=20 N=20 X=0", std::numbers::pi, peak.phi_max, 1e-3);

  const unsigned workers = detail::workers_from(ctx.opt);
  struct Claim {
    const CatPipeline* pipe;
    int n;
    double f_min, ref, tol;
  };
  for (const Claim& c : {Claim{&p20, 20, 0.99999, 0.10, 0.02}, Claim{&p40, 40, 0.99, 0.04, 0.01},
                         Claim{&p60, 60, 0.9, 0.02, 0.005}}) {
    const auto win = window_from_threshold(*c.pipe, c.f_min, 0.01, {workers});
    row("success_probability", "alpha_i=20 N=" + std::to_string(c.n) + " f_min=" + csv::format(c.f_min), c.ref,
        success_probability(*c.pipe, win), c.tol);
  }

  const auto g = make_grid(-1.0, 1.0, 0.01);
  const auto curve = parallel_map(std::span<const double>(g), [&](double x) { return p60.fidelity(x).fidelity; }, workers);
  row("max_fidelity", "alpha_i=20 N=60", 0.975, *std::max_element(curve.begin(), curve.end()), 0.005);

  for (auto [reading, name] : {std::pair{LossReading::at_least_one_photon, "threshold"},
                               std::pair{LossReading::direct_flip, "direct"}}) {
    for (auto [p, ref] : {std::pair{0.1, 0.88}, std::pair{0.3, 0.71}, std::pair{0.6, 0.55}}) {
      NoiseParams np;
      np.loss_prob = p;
      np.reading = reading;
      const std::string params = "alpha_i=20 N=20 X=0 loss=" + csv::format(p) + " reading=" + name;
      if (reading == LossReading::direct_flip && p > 0.5) {
        w.row("lossy_fidelity", params, ref, "unavailable (P_f > 1/2)", 0.04, "no");
        continue;
      }
      row("lossy_fidelity", params, ref, lossy_fidelity(kFlagshipAlpha, 20, 0.0, np), 0.04);
    }
  }
}

inline void cmd_reproduce(Context& ctx) {
  static const std::map<std::string, void (*)(Context&)> figures = {
      {"fig2", reproduce_fig2}, {"fig3", reproduce_fig3}, {"fig4", reproduce_fig4},
      {"fig5", reproduce_fig5}, {"table1", reproduce_table1}};
  ctx.default_name = ctx.opt.figure + ".csv";
  figures.at(ctx.opt.figure)(ctx);
}

// --- verify ----------------------------------------------------------------------

inline void cmd_verify(Context& ctx) {
  auto report = [&](bool ok, const std::string& name, const std::string& detail) {
    ctx.body << (ok ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
    if (!ok) ctx.verification_failed = true;
  };

  std::vector<int> ns;
  for (int n = 1; n <= 64; ++n) ns.push_back(n);
  ns.push_back(200);
  ns.push_back(256);
  double worst = 0.0;
  for (int n : ns) worst = std::max(worst, verify_phase_identity(n));
  report(worst < 1e-12, "phase identity", "max residual " + csv::format(worst) + " over N = 1..64, 200, 256");

  double min_overlap = 1.0;
  for (double a : {1.0, 2.0, 4.0, 6.0, 8.0}) {
    const int cutoff = static_cast<int>(a * a + 10.0 * a + 50.0);
    for (int n : {2, 3, 4, 5, 8, 20}) {
      const auto f = kerr_fock_evolve({std::numbers::pi / n, a}, cutoff);
      const double ov = std::abs(fock_inner_product(f.amplitudes, to_fock(kerr_decompose(a, n).state, cutoff)));
      min_overlap = std::min(min_overlap, ov);
    }
  }
  report(min_overlap >= 1.0 - 1e-8, "number-basis equivalence", "min |overlap| " + csv::format(min_overlap));

  const auto ys = cat_fidelity(kerr_decompose(3.0, 2).state, 3.0);
  report(std::abs(ys.fidelity - 1.0) <= 1e-10 && std::abs(ys.phi_max - std::numbers::pi / 2) <= 1e-4,
         "two-component cat", "F = " + csv::format(ys.fidelity) + ", phi_max = " + csv::format(ys.phi_max));

  double worst_norm = 0.0;
  for (double a : {1.0, 5.0, 10.0, 20.0, 30.0}) {
    for (int n = 1; n <= 64; ++n) worst_norm = std::max(worst_norm, std::abs(squared_norm(kerr_decompose(a, n).state) - 1.0));
  }
  report(worst_norm <= 1e-10, "unitarity", "max |norm - 1| " + csv::format(worst_norm));
}

// --- wiring ----------------------------------------------------------------------

inline std::filesystem::path resolve_output(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative()) {
    if (const auto dir = detail::env("KERRCAT_OUTPUT_DIR")) p = std::filesystem::path(*dir) / p;
  }
  return p;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw UsageError("cannot open output file '" + p.string() + "'");
  f << text;
  if (!f) throw std::runtime_error("failed writing '" + p.string() + "'");
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{
      "kerrcat: cat states from weak Kerr nonlinearity, beam splitting and homodyne conditioning.\n"
      "Every command is deterministic. Tables go to stdout as CSV (15 significant digits) unless --output is "
      "given.\n"
      "Environment: KERRCAT_OUTPUT_DIR prefixes relative --output paths (and receives reproduce output);\n"
      "KERRCAT_WORKERS sets the default worker count for grid sweeps.\n"
      "Exit codes: 0 success, 1 bad arguments, 2 numerical failure, 3 verification failure.",
      "kerrcat"};
  app.require_subcommand(1);
  app.fallthrough();

  auto add_alpha = [&](CLI::App* s) {
    s->add_option("--alpha", o.alpha, "initial coherent amplitude alpha_i (real, > 0)")->capture_default_str();
  };
  auto add_n = [&](CLI::App* s) {
    auto* n = s->add_option("--n", o.n, "component count N; the Kerr phase is lambda*tau = pi/N")
                  ->capture_default_str()
                  ->check(CLI::Range(1, kMaxComponents));
    s->add_option("--lambda-tau", o.lambda_tau, "Kerr phase lambda*tau, must equal pi/N")->excludes(n);
  };
  auto add_x = [&](CLI::App* s) {
    s->add_option("--x", o.x, "homodyne outcome X on the monitored arm")->capture_default_str();
  };
  auto add_io = [&](CLI::App* s, bool json) {
    s->add_option("--output,-o", o.output, "write to this file instead of stdout");
    if (json) {
      s->add_option("--format", o.format, "csv or json")
          ->check(CLI::IsMember({"csv", "json"}))
          ->capture_default_str();
    }
  };
  auto add_workers = [&](CLI::App* s) {
    s->add_option("--workers", o.workers, "threads for grid sweeps (0 = all cores; default KERRCAT_WORKERS or 1)");
  };
  auto add_rule = [&](CLI::App* s) {
    s->add_option("--rule", o.rule,
                  "reference cat: centered (branch selected at X = 0, against its negative) or nearest-pair "
                  "(branch nearest the outcome, against its conjugate)")
        ->check(CLI::IsMember({"centered", "nearest-pair"}))
        ->capture_default_str();
  };
  auto add_p_grid = [&](CLI::App* s) {
    s->add_option("--p-min", o.p_min, "P grid start")->capture_default_str();
    s->add_option("--p-max", o.p_max, "P grid end")->capture_default_str();
    s->add_option("--p-step", o.p_step, "P grid step")->capture_default_str();
  };

  std::map<CLI::App*, void (*)(Context&)> commands;

  auto* decompose = app.add_subcommand(
      "decompose", "Kerr output at lambda*tau = pi/N as N coherent components: prints C_n (n, re, im, magnitude, "
                   "zeta_n) or the state as JSON");
  add_alpha(decompose);
  add_n(decompose);
  add_io(decompose, true);
  commands[decompose] = cmd_decompose;

  auto* evolve = app.add_subcommand(
      "evolve-fock", "number-basis Kerr evolution exp(-i lambda*tau n^2) of a coherent state (reference oracle)");
  add_alpha(evolve);
  evolve->add_option("--alpha-im", o.alpha_im, "imaginary part of the initial amplitude")->capture_default_str();
  add_n(evolve);
  evolve->add_option("--cutoff", o.cutoff, "largest photon number kept (default |alpha|^2 + 10|alpha| + 20)")
      ->check(CLI::PositiveNumber);
  add_io(evolve, true);
  commands[evolve] = cmd_evolve_fock;

  auto* condition = app.add_subcommand(
      "condition", "split the Kerr output with vacuum on a 50:50 beam splitter and project one arm onto <X|");
  add_alpha(condition);
  add_n(condition);
  add_x(condition);
  add_io(condition, true);
  commands[condition] = cmd_condition;

  auto* fidelity = app.add_subcommand(
      "fidelity", "phase-maximized fidelity with the reference cat N(|b> + e^{i phi}|-b>), from parameters or a "
                  "saved state");
  add_alpha(fidelity);
  add_n(fidelity);
  add_x(fidelity);
  add_rule(fidelity);
  fidelity->add_option("--state", o.state_file, "state JSON (as written by condition --format json)")
      ->check(CLI::ExistingFile);
  fidelity->add_option("--target-re", o.target_re, "override the cat amplitude b (real part)");
  fidelity->add_option("--target-im", o.target_im, "override the cat amplitude b (imaginary part)");
  add_io(fidelity, true);
  commands[fidelity] = cmd_fidelity;

  auto* curve = app.add_subcommand("fidelity-curve", "fidelity against the homodyne outcome X over a grid");
  add_alpha(curve);
  add_n(curve);
  add_rule(curve);
  curve->add_option("--x-min", o.x_min, "X grid start")->capture_default_str();
  curve->add_option("--x-max", o.x_max, "X grid end")->capture_default_str();
  curve->add_option("--x-step", o.x_step, "X grid step")->capture_default_str();
  add_workers(curve);
  add_io(curve, true);
  commands[curve] = cmd_fidelity_curve;

  auto* pre = app.add_subcommand("pdist-pre", "P-quadrature distribution of the Kerr output before the beam splitter");
  add_alpha(pre);
  add_n(pre);
  add_p_grid(pre);
  add_io(pre, true);
  commands[pre] = cmd_pdist_pre;

  auto* post = app.add_subcommand("pdist-post", "P-quadrature distribution of the state conditioned on outcome X");
  add_alpha(post);
  add_n(post);
  add_x(post);
  add_p_grid(post);
  add_io(post, true);
  commands[post] = cmd_pdist_post;

  auto* success = app.add_subcommand(
      "success-prob", "probability that the outcome lands in the acceptance window: the set where F >= f_min, or "
                      "an explicit --window");
  add_alpha(success);
  add_n(success);
  add_rule(success);
  success->add_option("--f-min", o.f_min, "fidelity threshold in (0, 1)");
  success->add_option("--window", o.window, "explicit window lo:hi[|lo:hi...]");
  success->add_option("--scan-step", o.scan_step, "X scan step for threshold crossings")->capture_default_str();
  add_workers(success);
  add_io(success, true);
  commands[success] = cmd_success_prob;

  auto* window = app.add_subcommand("window", "intervals of X where the fidelity is at least f_min");
  add_alpha(window);
  add_n(window);
  add_rule(window);
  window->add_option("--f-min", o.f_min, "fidelity threshold in (0, 1)")->required();
  window->add_option("--scan-step", o.scan_step, "X scan step for threshold crossings")->capture_default_str();
  add_workers(window);
  add_io(window, true);
  commands[window] = cmd_window;

  auto* loss = app.add_subcommand(
      "noise-loss", "fidelity of the mixture (1 - P_f)|Psi><Psi| + P_f|Phi><Phi| when an odd photon loss flips the "
                    "relative phase");
  add_alpha(loss);
  add_n(loss);
  add_x(loss);
  add_rule(loss);
  loss->add_option("--loss-prob", o.loss_probs, "loss probabilities (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  loss->add_option("--reading", o.reading,
                   "threshold: loss-prob = P(at least one photon lost); direct: loss-prob = P_f; decay: use "
                   "--gamma-tau only")
      ->check(CLI::IsMember({"threshold", "direct", "decay"}))
      ->capture_default_str();
  loss->add_option("--gamma-tau", o.gamma_tau, "decay exponent gamma*tau (direct and decay readings)")
      ->capture_default_str();
  add_io(loss, true);
  commands[loss] = cmd_noise_loss;

  auto* phase = app.add_subcommand(
      "noise-phase", "fidelity averaged over a zero-mean Gaussian rotation with standard deviation sigma");
  add_alpha(phase);
  add_n(phase);
  add_x(phase);
  add_rule(phase);
  auto* single = phase->add_option("--sigma", o.sigma, "a single sigma instead of the grid");
  phase->add_option("--sigma-min", o.sigma_min, "sigma grid start")->capture_default_str()->excludes(single);
  phase->add_option("--sigma-max", o.sigma_max, "sigma grid end")->capture_default_str()->excludes(single);
  phase->add_option("--sigma-step", o.sigma_step, "sigma grid step")->capture_default_str()->excludes(single);
  phase->add_option("--measure", o.measure, "squared |<cat|psi>|^2 or modulus |<cat|psi>|")
      ->check(CLI::IsMember({"squared", "modulus"}))
      ->capture_default_str();
  phase->add_option("--method", o.method, "adaptive (panelled Gauss-Kronrod) or hermite (doubling Gauss-Hermite)")
      ->check(CLI::IsMember({"adaptive", "hermite"}))
      ->capture_default_str();
  add_workers(phase);
  add_io(phase, true);
  commands[phase] = cmd_noise_phase;

  auto* reproduce = app.add_subcommand(
      "reproduce",
      "emit a figure's data at alpha_i = 20: fig2 (P distributions before/after conditioning, N = 20), fig3 "
      "(fidelity vs X, N = 20/40/60), fig4 (P distribution, N = 200), fig5 (fidelity vs phase noise sigma, "
      "N = 20/40/60), table1 (quoted numbers against computed ones)");
  reproduce->add_option("figure", o.figure, "fig2, fig3, fig4, fig5 or table1")
      ->required()
      ->check(CLI::IsMember({"fig2", "fig3", "fig4", "fig5", "table1"}));
  add_workers(reproduce);
  add_io(reproduce, false);
  commands[reproduce] = cmd_reproduce;

  auto* verify = app.add_subcommand(
      "verify", "check the coefficient phase identity, number-basis equivalence, the two-component cat and "
                "unitarity; exit 3 on any failure");
  add_io(verify, false);
  commands[verify] = cmd_verify;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kBadArguments;
  }

  CLI::App* chosen = app.get_subcommands().front();
  Context ctx{o, err, {}, {}, false};
  try {
    commands.at(chosen)(ctx);
    const std::string text = ctx.body.str();
    if (!o.output.empty()) {
      write_file(resolve_output(o.output), text);
    } else if (const auto dir = detail::env("KERRCAT_OUTPUT_DIR"); dir && !ctx.default_name.empty()) {
      const auto p = std::filesystem::path(*dir) / ctx.default_name;
      write_file(p, text);
      err << "wrote " << p.string() << "\n";
    } else {
      out << text;
    }
  } catch (const DegenerateStateError& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const TruncationError& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kBadArguments;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalFailure;
  }
  return ctx.verification_failed ? kVerificationFailure : kOk;
}

}  // namespace kerrcat::cli
