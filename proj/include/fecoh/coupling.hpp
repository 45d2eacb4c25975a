#pragma once

// Time-dependent electron-emitter coupling
//
//   g(z,t) = e^{-i w0 z/v0} * eta * int_{-inf}^{z+v0 t} ds
//            (s d_z + r d_x) / (gamma^2 s^2 + r^2)^{3/2} * e^{i w0 s/v0},
//   eta    = -gamma e^2 / (4 pi eps0 hbar v0).
//
// g depends on (z, t) only through the prefactor e^{-i w0 z/v0} and
// ztilde = z + v0 t. Everything below works with the "reduced" coupling
// G(ztilde) = g(z,t) e^{+i w0 z/v0} and restores the prefactor at the end.
//
// Three evaluation routes are provided: direct quadrature of the defining
// integral (g_direct), the Bessel-function representation g0 + g1
// (g_semianalytic), and a tabulated profile that anchors the Bessel form at
// ztilde ~ 0 and integrates the field outward (CouplingProfile, used by the
// dynamics). The spectral decomposition g_q delta(w - w0) + g_c(w) lives in
// SpectralCoupling.

#include <complex>
#include <span>
#include <vector>

#include "fecoh/quadrature.hpp"
#include "fecoh/units.hpp"

namespace fecoh {

/// Derived constants shared by all coupling routes.
struct CouplingConstants {
  double eta = 0.0;       // dimensionless (charge in e, dipole in e*nm)
  double velocity = 0.0;  // nm/fs
  double alpha = 0.0;     // omega0 / v0, nm^-1
  double a = 0.0;         // r_perp / gamma, nm
  double gamma = 1.0;
  double r_perp = 0.0;
  double d_x = 0.0;
  double d_z = 0.0;
  double omega0 = 0.0;

  static CouplingConstants from(const BeamParams& beam, const EmitterParams& emitter);

  /// Dipole-projected Coulomb field kernel (s d_z + r d_x)/(gamma^2 s^2 + r^2)^{3/2}.
  double field(double s) const {
    const double q = gamma * gamma * s * s + r_perp * r_perp;
    return (s * d_z + r_perp * d_x) / (q * std::sqrt(q));
  }

  /// eta * field(s) * e^{i alpha s}: the integrand of the reduced coupling.
  std::complex<double> integrand(double s) const {
    const double w = eta * field(s);
    return {w * std::cos(alpha * s), w * std::sin(alpha * s)};
  }
};

struct CouplingValue {
  std::complex<double> g{};
  double magnitude = 0.0;
  /// arg(g e^{+i w0 z/v0}) in (-pi, pi].
  double phase = 0.0;
  double error_estimate = 0.0;

  static CouplingValue make(std::complex<double> g, double z, double alpha,
                            double error_estimate = 0.0);
};

/// eta = -gamma e^2/(4 pi eps0 hbar v0).
double coupling_eta(const BeamParams& beam);

/// Long-time coupling constant
/// g_inf = (2 eta w0 / gamma^2 v0) [d_x K1(x) + i d_z K0(x)/gamma], x = r w0/(gamma v0).
std::complex<double> g_infinity(const BeamParams& beam, const EmitterParams& emitter);

/// Default lower cutoff for g_direct: 1e4 * max(r_perp, v0/(gamma w0)).
double default_cutoff_length(const BeamParams& beam, const EmitterParams& emitter);

/// Direct quadrature of the defining integral with lower limit -cutoff
/// (cutoff <= 0 selects default_cutoff_length). The analytic bound on the
/// discarded tail, |eta| (|d_z|/(gamma^2 L) + r|d_x|/(2 gamma^3 L^2)), is
/// included in error_estimate.
CouplingValue g_direct(double z, double t, const BeamParams& beam,
                       const EmitterParams& emitter, double cutoff = 0.0,
                       const QuadratureConfig& cfg = {});

/// g_direct at many (z[i], t[i]) points. The defining integral is accumulated
/// in order of increasing z + v0 t, so the shared part from -cutoff is
/// integrated once; each result carries the error of its whole path.
std::vector<CouplingValue> g_direct_many(std::span<const double> z, std::span<const double> t,
                                         const BeamParams& beam, const EmitterParams& emitter,
                                         double cutoff = 0.0, const QuadratureConfig& cfg = {});

struct SemianalyticParts {
  std::complex<double> g0{};
  std::complex<double> g1{};
  double error_estimate = 0.0;
};

/// Reduced g0 and g1 at ztilde:
///   g0 = (g_inf/2) [1 + gamma zt / R],  R = sqrt(gamma^2 zt^2 + r^2)
///   g1 = (eta r alpha / gamma^2 R) [g_K int_0^alpha e^{i s zt} I1(a s)/s ds
///                                  - g_I int_alpha^inf e^{i s zt} K1(a s)/s ds]
/// with g_K = -i d_x K1(x) + d_z K0(x)/gamma and g_I = i d_x I1(x) + d_z I0(x)/gamma.
SemianalyticParts coupling_semianalytic_parts(double ztilde, const BeamParams& beam,
                                              const EmitterParams& emitter,
                                              const QuadratureConfig& cfg = {});

CouplingValue g_semianalytic(double z, double t, const BeamParams& beam,
                             const EmitterParams& emitter, const QuadratureConfig& cfg = {});

/// Relative half-width of the window around w0 where g_c is not defined.
inline constexpr double kSpectralExclusion = 1e-3;

/// Spectral decomposition of the reduced coupling,
///   g~(w) = [delta(w - w0) g_q + g_c(w)] e^{i w0 t},  g_q = g_inf / 2.
class SpectralCoupling {
 public:
  SpectralCoupling(const BeamParams& beam, const EmitterParams& emitter,
                   const QuadratureConfig& cfg = {});

  std::complex<double> g_q() const { return g_inf_ * 0.5; }
  std::complex<double> g_inf() const { return g_inf_; }
  std::complex<double> g_K() const { return g_K_; }
  std::complex<double> g_I() const { return g_I_; }
  double exclusion_halfwidth() const { return kSpectralExclusion * k_.omega0; }

  /// Continuous spectral weight. Throws DomainError for
  /// |omega - omega0| < exclusion_halfwidth().
  std::complex<double> g_c(double omega) const;

 private:
  CouplingConstants k_;
  QuadratureConfig cfg_;
  std::complex<double> g_inf_;
  std::complex<double> g_K_;
  std::complex<double> g_I_;
};

std::complex<double> g_spectral(double omega, const BeamParams& beam,
                                const EmitterParams& emitter, const QuadratureConfig& cfg = {});

/// Reduced coupling G(ztilde) tabulated on a uniform node set and refined
/// between nodes by a short Gauss-Kronrod panel, so every query is exact to
/// quadrature precision. The node closest to ztilde = 0 is anchored with the
/// Bessel representation; the others follow by integrating the field.
/// Queries outside [ztilde_min, ztilde_max] fall back to g_semianalytic.
/// Immutable after construction; safe to share between threads.
class CouplingProfile {
 public:
  CouplingProfile(const BeamParams& beam, const EmitterParams& emitter, double ztilde_min,
                  double ztilde_max, const QuadratureConfig& cfg = {});

  std::complex<double> reduced(double ztilde) const;
  std::complex<double> g(double z, double t) const;
  CouplingValue value(double z, double t) const;

  const BeamParams& beam() const { return beam_; }
  const EmitterParams& emitter() const { return emitter_; }
  const CouplingConstants& constants() const { return k_; }
  const QuadratureConfig& config() const { return cfg_; }
  std::complex<double> g_infinity() const { return g_inf_; }
  double node_spacing() const { return h_; }
  double ztilde_min() const { return zmin_; }
  double ztilde_max() const { return zmin_ + h_ * static_cast<double>(nodes_.size() - 1); }

 private:
  std::complex<double> segment(double from, double to) const;

  BeamParams beam_;
  EmitterParams emitter_;
  QuadratureConfig cfg_;
  CouplingConstants k_;
  std::complex<double> g_inf_;
  double zmin_ = 0.0;
  double h_ = 0.0;
  std::vector<std::complex<double>> nodes_;
};

}  // namespace fecoh
