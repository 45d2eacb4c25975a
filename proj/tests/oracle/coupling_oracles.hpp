// Independent reference evaluations of the spectral coupling, used only by
// tests. None of these go through the Bessel-series representation of g.
#pragma once

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <complex>
#include <vector>

#include "fecoh/coupling.hpp"

namespace oracle {

// g_c(w) = i eta F(w/v0) / (2 pi (w - w0)), where F(k) is the full-line
// Fourier transform of the dipole-projected field,
// F(k) = (2|k|/gamma^2) [d_x K1(a|k|) + i sgn(k) d_z K0(a|k|)/gamma].
inline std::complex<double> g_c_closed_form(double omega, const fecoh::BeamParams& beam,
                                            const fecoh::EmitterParams& emitter) {
  const auto k = fecoh::CouplingConstants::from(beam, emitter);
  const double kk = omega / k.velocity;
  std::complex<double> F;
  if (kk == 0.0) {
    F = 2.0 * k.d_x / (k.gamma * k.gamma * k.a);
  } else {
    const double ak = k.a * std::abs(kk);
    const double sg = kk > 0 ? 1.0 : -1.0;
    F = (2.0 * std::abs(kk) / (k.gamma * k.gamma)) *
        std::complex<double>(k.d_x * boost::math::cyl_bessel_k(1, ak),
                             sg * k.d_z * boost::math::cyl_bessel_k(0, ak) / k.gamma);
  }
  return std::complex<double>(0.0, 1.0) * k.eta * F / (2.0 * M_PI * (omega - k.omega0));
}

// Numerical transform (1/2 pi v0) int dzt G(zt) e^{i (w - w0) zt / v0}, with
// G(zt) obtained by marching the field integral from -L on 10-point
// Gauss-Legendre panels; G(-L) comes from the leading asymptotic form
// eta f(-L) e^{-i alpha L}/(i alpha). The transform window is [-L, L]. Beyond
// it, G - g_inf H(zt) behaves like eta f(zt) e^{i alpha zt}/(i alpha) on both
// sides; for w = 0 the two 1/zt^2 tails cancel at leading order and for
// w != 0 they oscillate, so only the g_inf e^{i q zt} piece on the right is
// added back (Abel-regularised).
inline std::complex<double> g_c_windowed_transform(double omega, const fecoh::BeamParams& beam,
                                                   const fecoh::EmitterParams& emitter,
                                                   double L) {
  static const double xg[5] = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
                               0.8650633666889845, 0.9739065285171717};
  static const double wg[5] = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                               0.1494513499615783, 0.0666713443086881};
  using cd = std::complex<double>;
  const auto k = fecoh::CouplingConstants::from(beam, emitter);
  const cd I(0.0, 1.0);
  const double q = (omega - k.omega0) / k.velocity;
  const double h = std::min(0.25 * k.a, 2.0 * M_PI / (32.0 * std::max(k.alpha, std::abs(q))));
  const auto n = static_cast<long>(std::ceil(2.0 * L / h));
  const double dz = 2.0 * L / static_cast<double>(n);

  cd G = k.eta * k.field(-L) * std::polar(1.0, -k.alpha * L) / (I * k.alpha);
  cd transform = 0.0;
  for (long p = 0; p < n; ++p) {
    const double lo = -L + dz * static_cast<double>(p);
    auto partial = [&](double x) {
      cd acc = 0.0;
      const double cc = 0.5 * (lo + x), hh = 0.5 * (x - lo);
      for (int j = 0; j < 5; ++j)
        acc += wg[j] * (k.integrand(cc - hh * xg[j]) + k.integrand(cc + hh * xg[j]));
      return acc * hh;
    };
    const double c = lo + 0.5 * dz;
    for (int j = 0; j < 5; ++j) {
      for (double s : {-1.0, 1.0}) {
        const double x = c + s * 0.5 * dz * xg[j];
        transform += wg[j] * 0.5 * dz * (G + partial(x)) * std::polar(1.0, q * x);
      }
    }
    G += partial(lo + dz);
  }
  const cd g_inf = fecoh::g_infinity(beam, emitter);
  transform += g_inf * std::polar(1.0, q * L) / (-I * q);
  return transform / (2.0 * M_PI * k.velocity);
}

}  // namespace oracle
