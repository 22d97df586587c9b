#pragma once

// Thin RAII wrappers over GSL's adaptive Gauss-Kronrod (QAG) and fixed
// Gauss-Hermite rules.

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <memory>
#include <new>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace kerrcat::quadrature {

struct Result {
  double value = 0.0;
  double abs_error = 0.0;
};

namespace detail {

inline void disable_gsl_abort() {
  // GSL aborts on error by default; status codes are checked instead.
  static const bool once = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)once;
}

struct WorkspaceDeleter {
  void operator()(gsl_integration_workspace* w) const noexcept { gsl_integration_workspace_free(w); }
};

template <class F>
struct Trampoline {
  F* f;
  std::exception_ptr error;

  static double call(double x, void* self) {
    auto* t = static_cast<Trampoline*>(self);
    if (t->error) return 0.0;
    try {
      return (*t->f)(x);
    } catch (...) {
      t->error = std::current_exception();
      return 0.0;
    }
  }
};

}  // namespace detail

inline constexpr std::size_t kWorkspaceIntervals = 2000;

/// Adaptive 21-point Gauss-Kronrod on [a, b] with an absolute tolerance.
///
/// GSL round-off and subdivision-limit statuses are tolerated: the best
/// estimate is returned with its error. Exceptions thrown by `f` propagate.
template <class F>
Result integrate(F&& f, double a, double b, double abs_tol) {
  detail::disable_gsl_abort();
  if (a == b) return {};
  std::unique_ptr<gsl_integration_workspace, detail::WorkspaceDeleter> ws(
      gsl_integration_workspace_alloc(kWorkspaceIntervals));
  if (!ws) throw std::bad_alloc();

  using Fn = std::remove_reference_t<F>;
  detail::Trampoline<Fn> tramp{&f, nullptr};
  gsl_function gf{&detail::Trampoline<Fn>::call, &tramp};
  Result r;
  const int status =
      gsl_integration_qag(&gf, a, b, abs_tol, 0.0, kWorkspaceIntervals, GSL_INTEG_GAUSS21, ws.get(), &r.value,
                          &r.abs_error);
  if (tramp.error) std::rethrow_exception(tramp.error);
  if (status != GSL_SUCCESS && status != GSL_EROUND && status != GSL_EMAXITER && status != GSL_ESING) {
    throw std::runtime_error(std::string("gsl_integration_qag: ") + gsl_strerror(status));
  }
  return r;
}

/// Splits [a, b] into panels no wider than `max_panel` and integrates each
/// adaptively. Panelling keeps narrow features in wide domains from being
/// missed by the first Kronrod sample.
template <class F>
Result integrate_panels(F&& f, double a, double b, double max_panel, double abs_tol) {
  if (!(max_panel > 0.0)) throw std::invalid_argument("integrate_panels: max_panel must be positive");
  if (a == b) return {};
  const auto panels = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / max_panel)));
  const double width = (b - a) / static_cast<double>(panels);
  const double per_panel = abs_tol / static_cast<double>(panels);
  Result total;
  for (std::size_t i = 0; i < panels; ++i) {
    const double lo = a + width * static_cast<double>(i);
    const double hi = (i + 1 == panels) ? b : lo + width;
    const Result r = integrate(f, lo, hi, per_panel);
    total.value += r.value;
    total.abs_error += r.abs_error;
  }
  return total;
}

/// Gauss-Hermite rule for int exp(-x^2) f(x) dx.
class GaussHermiteRule {
 public:
  explicit GaussHermiteRule(std::size_t order) {
    if (order == 0) throw std::invalid_argument("GaussHermiteRule: order must be positive");
    detail::disable_gsl_abort();
    gsl_integration_fixed_workspace* w =
        gsl_integration_fixed_alloc(gsl_integration_fixed_hermite, order, 0.0, 1.0, 0.0, 0.0);
    if (!w) throw std::runtime_error("gsl_integration_fixed_alloc failed");
    const double* x = gsl_integration_fixed_nodes(w);
    const double* wt = gsl_integration_fixed_weights(w);
    nodes_.assign(x, x + order);
    weights_.assign(wt, wt + order);
    gsl_integration_fixed_free(w);
  }

  std::size_t order() const noexcept { return nodes_.size(); }
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (weights_[i] == 0.0) continue;
      s += weights_[i] * f(nodes_[i]);
    }
    return s;
  }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

}  // namespace kerrcat::quadrature
