#pragma once

// Globally adaptive Gauss-Kronrod (10/21 point) quadrature for complex-valued
// integrands on finite intervals, plus truncation of exponentially decaying
// integrands on [a, inf).
//
// Oscillatory integrands are handled by capping the initial panel width at a
// fraction of the oscillation period (PanelOptions::max_panel_width); the
// adaptive refinement then only has to deal with non-oscillatory structure.
// The real and imaginary parts share one panel set and one error budget.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "fecoh/errors.hpp"

namespace fecoh {

struct QuadratureConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-14;
  /// Upper bound on the number of panels, initial partition included.
  std::size_t max_subdivisions = 1'000'000;
  /// Number of decay lengths after which an exponentially decaying integrand
  /// is truncated (e^{-37} < 1e-16).
  double tail_decay_threshold = 37.0;
  /// Largest panel width for oscillatory integrands, as a fraction of the period.
  double oscillation_panel_fraction = 0.125;

  void validate() const {
    if (!(rel_tol > 0.0)) throw DomainError("QuadratureConfig: rel_tol must be > 0");
    if (!(abs_tol > 0.0)) throw DomainError("QuadratureConfig: abs_tol must be > 0");
    if (max_subdivisions < 1)
      throw DomainError("QuadratureConfig: max_subdivisions must be >= 1");
    if (!(tail_decay_threshold > 0.0))
      throw DomainError("QuadratureConfig: tail_decay_threshold must be > 0");
    if (!(oscillation_panel_fraction > 0.0 && oscillation_panel_fraction <= 1.0))
      throw DomainError("QuadratureConfig: oscillation_panel_fraction must be in (0, 1]");
  }
};

struct QuadratureResult {
  std::complex<double> value{};
  double error_estimate = 0.0;
  std::size_t evaluations = 0;
};

struct PanelOptions {
  double max_panel_width = std::numeric_limits<double>::infinity();
  /// Interior points where the integrand is singular or kinked; they become
  /// panel endpoints and are never evaluated.
  std::span<const double> breakpoints{};
};

/// Panel width that resolves e^{i k s} under `cfg`; infinite for k == 0.
inline double oscillation_panel_width(double wavenumber, const QuadratureConfig& cfg) {
  const double k = std::abs(wavenumber);
  if (k == 0.0) return std::numeric_limits<double>::infinity();
  return cfg.oscillation_panel_fraction * 2.0 * 3.14159265358979323846 / k;
}

namespace detail {

inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};

inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};

inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Panel {
  double a;
  double b;
  std::complex<double> value;
  double error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

// QUADPACK's qk21 error heuristic for one real component.
inline double qk_error(double resk, double resg, double resabs, double resasc,
                       double half) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr double tiny = std::numeric_limits<double>::min();
  double err = std::abs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  if (resabs > tiny / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
  return err;
}

template <class F>
Panel gauss_kronrod21(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  std::array<std::complex<double>, 21> fv;
  fv[20] = std::complex<double>(f(center));
  for (std::size_t j = 0; j < 10; ++j) {
    const double dx = half * kXgk[j];
    fv[2 * j] = std::complex<double>(f(center - dx));
    fv[2 * j + 1] = std::complex<double>(f(center + dx));
  }
  std::complex<double> resk = fv[20] * kWgk[10];
  std::complex<double> resg{0.0, 0.0};
  for (std::size_t j = 0; j < 10; ++j) {
    const std::complex<double> pair = fv[2 * j] + fv[2 * j + 1];
    resk += kWgk[j] * pair;
    if (j % 2 == 1) resg += kWg[j / 2] * pair;
  }
  const std::complex<double> mean = resk * 0.5;
  double abs_re = kWgk[10] * std::abs(fv[20].real());
  double abs_im = kWgk[10] * std::abs(fv[20].imag());
  double asc_re = kWgk[10] * std::abs(fv[20].real() - mean.real());
  double asc_im = kWgk[10] * std::abs(fv[20].imag() - mean.imag());
  for (std::size_t j = 0; j < 10; ++j) {
    for (std::size_t s = 0; s < 2; ++s) {
      const auto& v = fv[2 * j + s];
      abs_re += kWgk[j] * std::abs(v.real());
      abs_im += kWgk[j] * std::abs(v.imag());
      asc_re += kWgk[j] * std::abs(v.real() - mean.real());
      asc_im += kWgk[j] * std::abs(v.imag() - mean.imag());
    }
  }
  const double ah = std::abs(half);
  const double err = qk_error(resk.real(), resg.real(), abs_re * ah, asc_re * ah, half) +
                     qk_error(resk.imag(), resg.imag(), abs_im * ah, asc_im * ah, half);
  return {a, b, resk * half, err};
}

}  // namespace detail

/// Adaptive integral of f over [a, b]. Throws ConvergenceError (with the best
/// estimate) when the panel limit is exhausted before
/// error <= max(abs_tol, rel_tol * |value|).
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, const QuadratureConfig& cfg,
                                    const PanelOptions& opts = {}) {
  if (!std::isfinite(a) || !std::isfinite(b))
    throw DomainError("integrate_adaptive: limits must be finite");
  if (a > b) throw DomainError("integrate_adaptive: requires a <= b");
  if (a == b) return {};

  // Initial partition: breakpoints, then uniform splitting to max_panel_width.
  std::vector<double> edges{a};
  std::vector<double> cuts;
  for (double p : opts.breakpoints)
    if (p > a && p < b) cuts.push_back(p);
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(b);
  for (double cut : cuts) {
    const double lo = edges.back();
    if (cut <= lo) continue;
    const double len = cut - lo;
    std::size_t pieces = 1;
    if (std::isfinite(opts.max_panel_width) && opts.max_panel_width > 0.0)
      pieces = static_cast<std::size_t>(std::ceil(len / opts.max_panel_width));
    pieces = std::max<std::size_t>(pieces, 1);
    if (edges.size() + pieces > cfg.max_subdivisions + 1)
      throw ConvergenceError("integrate_adaptive: initial partition exceeds max_subdivisions",
                             {0.0, 0.0}, std::numeric_limits<double>::infinity());
    for (std::size_t i = 1; i < pieces; ++i)
      edges.push_back(lo + len * static_cast<double>(i) / static_cast<double>(pieces));
    edges.push_back(cut);
  }

  std::vector<detail::Panel> storage;
  storage.reserve(edges.size() * 2);
  std::complex<double> total{0.0, 0.0};
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    storage.push_back(detail::gauss_kronrod21(f, edges[i], edges[i + 1]));
    total += storage.back().value;
    total_err += storage.back().error;
  }
  std::size_t evaluations = 21 * storage.size();
  std::priority_queue<detail::Panel> heap(std::less<detail::Panel>{}, std::move(storage));
  std::vector<detail::Panel> frozen;

  auto tolerance = [&] { return std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total)); };

  while (total_err > tolerance()) {
    if (heap.empty()) break;
    if (heap.size() + frozen.size() >= cfg.max_subdivisions) {
      throw ConvergenceError("integrate_adaptive: max_subdivisions reached", total, total_err);
    }
    detail::Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      frozen.push_back(worst);  // cannot be split further in double precision
      continue;
    }
    const detail::Panel left = detail::gauss_kronrod21(f, worst.a, mid);
    const detail::Panel right = detail::gauss_kronrod21(f, mid, worst.b);
    evaluations += 42;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }

  // Re-sum from the panel set to drop accumulated update drift.
  QuadratureResult result;
  result.evaluations = evaluations;
  std::complex<double> sum{0.0, 0.0};
  double err = 0.0;
  for (const auto& p : frozen) {
    sum += p.value;
    err += p.error;
  }
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  result.value = sum;
  result.error_estimate = err;
  if (err > std::max(cfg.abs_tol, cfg.rel_tol * std::abs(sum)) && !frozen.empty()) {
    double frozen_err = 0.0;
    for (const auto& p : frozen) frozen_err += p.error;
    if (frozen_err > std::max(cfg.abs_tol, cfg.rel_tol * std::abs(sum)))
      throw ConvergenceError("integrate_adaptive: roundoff limits the attainable accuracy",
                             sum, err);
  }
  return result;
}

/// Integral of f over [a, inf) for an integrand whose envelope decays at
/// least like e^{-(x-a)/decay_scale}. The domain is truncated after
/// cfg.tail_decay_threshold decay lengths; |f(b)| * decay_scale at the cut is
/// added to the error estimate as a bound on the discarded tail.
template <class F>
QuadratureResult integrate_semiinfinite_decaying(F&& f, double a, double decay_scale,
                                                 const QuadratureConfig& cfg,
                                                 const PanelOptions& opts = {}) {
  if (!(decay_scale > 0.0) || !std::isfinite(decay_scale))
    throw DomainError("integrate_semiinfinite_decaying: decay_scale must be finite and > 0");
  const double b = a + cfg.tail_decay_threshold * decay_scale;
  QuadratureResult r = integrate_adaptive(f, a, b, cfg, opts);
  r.error_estimate += std::abs(std::complex<double>(f(b))) * decay_scale;
  r.evaluations += 1;
  return r;
}

}  // namespace fecoh
