#include "fecoh/specfun.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "fecoh/errors.hpp"

namespace fecoh {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kEulerGamma = std::numbers::egamma;
constexpr int kMaxIter = 2000;

void check_order(int order) {
  if (order != 0 && order != 1)
    throw DomainError("modified Bessel function: only orders 0 and 1 are supported");
}

}  // namespace

namespace detail {

double bessel_i_series(int order, double x) {
  const double q = 0.25 * x * x;
  double term = order == 0 ? 1.0 : 0.5 * x;
  double sum = term;
  for (int k = 1; k < kMaxIter; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k + order));
    sum += term;
    if (term < 0.25 * kEps * sum) break;
  }
  return sum;
}

double bessel_i_asymptotic(int order, double x) {
  // I_n(x) ~ e^x / sqrt(2 pi x) * sum_k (-1)^k a_k(n) / x^k
  const double mu = 4.0 * order * order;
  double term = 1.0;
  double sum = 1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k < kMaxIter; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= -(mu - odd * odd) / (8.0 * k * x);
    if (std::abs(term) >= prev) break;  // series starts to diverge
    sum += term;
    prev = std::abs(term);
    if (prev < 0.25 * kEps * std::abs(sum)) break;
  }
  // Split the exponential so e^{x} alone does not overflow before the
  // prefactor brings it down (x up to ~709 + log sqrt(2 pi x)).
  const double half = std::exp(0.5 * x);
  return half * (half * sum / std::sqrt(2.0 * std::numbers::pi * x));
}

double bessel_k_series(int order, double x) {
  const double q = 0.25 * x * x;
  const double log_half_x = std::log(0.5 * x);
  if (order == 0) {
    // K0 = -(ln(x/2) + gamma) I0 + sum_{k>=1} (x^2/4)^k / (k!)^2 H_k
    double term = 1.0;
    double harmonic = 0.0;
    double sum = 0.0;
    for (int k = 1; k < kMaxIter; ++k) {
      term *= q / (static_cast<double>(k) * k);
      harmonic += 1.0 / k;
      const double add = term * harmonic;
      sum += add;
      if (add < 0.25 * kEps * std::abs(sum)) break;
    }
    return -(log_half_x + kEulerGamma) * bessel_i_series(0, x) + sum;
  }
  // K1 = 1/x + ln(x/2) I1 - (x/4) sum_k (x^2/4)^k/(k!(k+1)!) (H_k + H_{k+1} - 2 gamma)
  double term = 1.0;
  double h_k = 0.0;
  double h_k1 = 1.0;
  double sum = term * (h_k + h_k1 - 2.0 * kEulerGamma);
  for (int k = 1; k < kMaxIter; ++k) {
    term *= q / (static_cast<double>(k) * (k + 1));
    h_k = h_k1;
    h_k1 += 1.0 / (k + 1);
    const double add = term * (h_k + h_k1 - 2.0 * kEulerGamma);
    sum += add;
    if (std::abs(add) < 0.25 * kEps * std::abs(sum)) break;
  }
  return 1.0 / x + log_half_x * bessel_i_series(1, x) - 0.25 * x * sum;
}

double bessel_k_continued_fraction_scaled(int order, double x) {
  // Steed's algorithm for Temme's CF2 at nu = 0 (Numerical Recipes, bessik).
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  const double a1 = 0.25;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 1; i < kMaxIter; ++i) {
    a -= 2.0 * i;
    c = -a * c / (i + 1.0);
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < 0.5 * kEps) break;
  }
  h *= a1;
  const double k0 = std::sqrt(std::numbers::pi / (2.0 * x)) / s;
  if (order == 0) return k0;
  return k0 * (x + 0.5 - h) / x;
}

}  // namespace detail

double bessel_i(int order, double x) {
  check_order(order);
  if (!(x >= 0.0) || !std::isfinite(x))
    throw DomainError("bessel_i: argument must be finite and >= 0");
  if (x <= kBesselISeriesLimit) return detail::bessel_i_series(order, x);
  return detail::bessel_i_asymptotic(order, x);
}

double bessel_k_scaled(int order, double x) {
  check_order(order);
  if (!(x > 0.0) || std::isnan(x)) throw DomainError("bessel_k: argument must be > 0");
  if (std::isinf(x)) return 0.0;
  if (x <= kBesselKSeriesLimit) return std::exp(x) * detail::bessel_k_series(order, x);
  return detail::bessel_k_continued_fraction_scaled(order, x);
}

double bessel_k(int order, double x) {
  check_order(order);
  if (!(x > 0.0) || std::isnan(x)) throw DomainError("bessel_k: argument must be > 0");
  if (std::isinf(x)) return 0.0;
  if (x <= kBesselKSeriesLimit) return detail::bessel_k_series(order, x);
  return std::exp(-x) * detail::bessel_k_continued_fraction_scaled(order, x);
}

}  // namespace fecoh
