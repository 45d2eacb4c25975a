#pragma once

// Joint electron-emitter amplitudes after first-order Magnus evolution and the
// reduced emitter density matrix obtained by tracing out the electron's
// Gaussian wavepacket.

#include <complex>
#include <span>
#include <vector>

#include "fecoh/coupling.hpp"
#include "fecoh/quadrature.hpp"
#include "fecoh/units.hpp"

namespace fecoh {

/// Layout of the Gauss-Legendre panels used for every integral over z.
struct ZGridSpec {
  /// Half-span in units of sigma_z. Must be >= 6.
  double span_sigmas = 8.0;
  /// Upper bound on the coarse panel width in nm; 0 selects the automatic
  /// width min(sigma_z/4, pi/K), K the largest wavenumber to resolve.
  double max_panel_width = 0.0;
  /// Extra wavenumber (nm^-1) the panels must resolve, on top of the
  /// coupling's own 2 w0/v0; set by spectra to max|k| + w0/v0.
  double resolve_wavenumber = 0.0;

  void validate() const;
};

/// Quadrature nodes and weights on [-half_span, half_span] (plain dz measure).
struct ZQuadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
  double half_span = 0.0;
  /// Largest |wavenumber| the coarse panels resolve to quadrature precision.
  double resolved_wavenumber = 0.0;
};

/// Panels of width <= the coarse width, graded towards the coupling's
/// transition point z = -v0 t (widths r/(2 gamma), doubling outward).
ZQuadrature build_z_quadrature(const BeamParams& beam, const EmitterParams& emitter, double t,
                               const ZGridSpec& spec = {});

/// Coupling profile covering every z-quadrature node for t in [t_min, t_max].
CouplingProfile make_coupling_profile(const BeamParams& beam, const EmitterParams& emitter,
                                      double t_min, double t_max, const ZGridSpec& spec = {},
                                      const QuadratureConfig& cfg = {});

struct JointAmplitudes {
  double t = 0.0;
  std::vector<double> z;
  std::vector<std::complex<double>> c_g;
  std::vector<std::complex<double>> c_e;
};

/// Rotation of the initial state a|g> + b e^{-i phi_r}|e> by the first-order
/// Magnus generator at each z:
///   c_g = a cos|g| - i b e^{-i phi_r} conj(g) sin|g|/|g|
///   c_e = b e^{-i phi_r} cos|g| - i a g sin|g|/|g|
/// g carries its full phase, including e^{-i w0 z/v0}.
void rotate_initial_state(const EmitterParams& emitter, std::complex<double> g,
                          std::complex<double>& c_g, std::complex<double>& c_e);

JointAmplitudes amplitudes(std::span<const double> z_grid, double t, const CouplingProfile& profile);
JointAmplitudes amplitudes(std::span<const double> z_grid, double t, const BeamParams& beam,
                           const EmitterParams& emitter, const QuadratureConfig& cfg = {});

struct DensityMatrix2 {
  double t = 0.0;
  double rho_gg = 0.0;
  double rho_ee = 0.0;
  /// <g|rho|e> = integral of c_g conj(c_e); the initial value is a b e^{+i phi_r}.
  std::complex<double> rho_ge{};

  std::complex<double> rho_eg() const { return std::conj(rho_ge); }
};

/// Gaussian-weighted z-average of the joint state's emitter block. Throws
/// ResolutionError when spec.span_sigmas < 6.
DensityMatrix2 reduced_density_matrix(double t, const CouplingProfile& profile,
                                      const ZGridSpec& spec = {});
DensityMatrix2 reduced_density_matrix(double t, const BeamParams& beam,
                                      const EmitterParams& emitter, const ZGridSpec& spec = {},
                                      const QuadratureConfig& cfg = {});

/// Density matrix at every time, evaluated on the worker pool.
std::vector<DensityMatrix2> density_matrix_series(std::span<const double> times,
                                                  const BeamParams& beam,
                                                  const EmitterParams& emitter,
                                                  const ZGridSpec& spec = {},
                                                  const QuadratureConfig& cfg = {});

struct FirstOrderPopulations {
  double t = 0.0;
  double rho_ee = 0.0;
  double rho_gg = 0.0;
  /// Bound on the contribution of the excluded window around w0.
  double error_estimate = 0.0;
};

/// First-order populations
///   rho_ee = b^2 + a b e^{-sigma_t^2 w0^2/2} Im{g_inf e^{i phi_r}}
///          + 2 a b Im{ int dw g_c(w) e^{-sigma_t^2 w^2/2} e^{-i (w - w0) t + i phi_r} }.
/// The w-integrand is tabulated once on Gauss-Legendre panels over
/// |w| <= 9/sigma_t, resolved for |t| <= max(max_abs_time, 12 sigma_t), and
/// reused for every t in that range.
class FirstOrderDynamics {
 public:
  FirstOrderDynamics(const BeamParams& beam, const EmitterParams& emitter,
                     const QuadratureConfig& cfg = {}, double max_abs_time = 0.0);

  /// Throws ResolutionError for |t| > max_abs_time().
  FirstOrderPopulations populations(double t) const;
  /// Same populations with g_c(w) replaced by g_c(0):
  ///   rho_ee = b^2 + a b e^{-sigma_t^2 w0^2/2} Im{g_inf e^{i phi_r}}
  ///          + 2 sqrt(2 pi) a b e^{-t^2/(2 sigma_t^2)}/sigma_t Im{g_c(0) e^{i(w0 t + phi_r)}}.
  FirstOrderPopulations heuristic(double t) const;

  const SpectralCoupling& spectral() const { return spectral_; }
  std::complex<double> g_c_zero() const { return g_c0_; }
  std::size_t table_size() const { return omega_.size(); }
  double max_abs_time() const { return max_abs_time_; }

 private:
  BeamParams beam_;
  EmitterParams emitter_;
  SpectralCoupling spectral_;
  std::complex<double> g_c0_;
  std::vector<double> omega_;
  std::vector<std::complex<double>> weighted_;  // w_j g_c(w_j) e^{-sigma_t^2 w_j^2/2}
  double window_bound_ = 0.0;
  double max_abs_time_ = 0.0;
};

FirstOrderPopulations populations_firstorder(double t, const BeamParams& beam,
                                             const EmitterParams& emitter,
                                             const QuadratureConfig& cfg = {});
FirstOrderPopulations populations_heuristic(double t, const BeamParams& beam,
                                            const EmitterParams& emitter,
                                            const QuadratureConfig& cfg = {});

}  // namespace fecoh
