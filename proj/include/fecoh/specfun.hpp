#pragma once

// Modified Bessel functions of integer order 0 and 1.
//
// I_n: power series below kBesselISeriesLimit, Hankel asymptotic expansion
// above it. K_n: power series (A&S 9.6.11/9.6.13) up to kBesselKSeriesLimit,
// Steed/Temme continued fraction beyond. Both switch points sit where the two
// branches agree to better than 1e-13.

namespace fecoh {

inline constexpr double kBesselISeriesLimit = 30.0;
inline constexpr double kBesselKSeriesLimit = 2.0;

/// I_order(x) for order 0 or 1 and finite x >= 0.
double bessel_i(int order, double x);

/// K_order(x) for order 0 or 1 and x > 0.
double bessel_k(int order, double x);

/// e^{x} K_order(x); finite for large x where K_order underflows.
double bessel_k_scaled(int order, double x);

inline double bessel_i0(double x) { return bessel_i(0, x); }
inline double bessel_i1(double x) { return bessel_i(1, x); }
inline double bessel_k0(double x) { return bessel_k(0, x); }
inline double bessel_k1(double x) { return bessel_k(1, x); }

namespace detail {
// Individual branches, exposed for overlap-window tests.
double bessel_i_series(int order, double x);
double bessel_i_asymptotic(int order, double x);
double bessel_k_series(int order, double x);
/// e^{x} K_order(x) from the continued fraction; valid for x >~ 1.
double bessel_k_continued_fraction_scaled(int order, double x);
}  // namespace detail

}  // namespace fecoh
