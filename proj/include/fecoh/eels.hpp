#pragma once

// Time-resolved electron energy spectra from the joint amplitudes.
//
// psi_i(k, t) = N^-1 int dz e^{-z^2/(4 sigma_z^2)} e^{-i k z} c_i(z, t),
// N = sqrt(2 pi) (2 pi sigma_z^2)^{1/4}, k = (E - E0)/(hbar v0), and
// dP/dE = (|psi_g|^2 + |psi_e|^2)/(hbar v0), which integrates to 1.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "fecoh/coupling.hpp"
#include "fecoh/emitter.hpp"

namespace fecoh {

enum class Channel { ground, excited };

/// Wavepacket normalization N = sqrt(2 pi) (2 pi sigma_z^2)^{1/4}.
double wavepacket_normalization(double sigma_z);

/// Peak dP/dE of the interaction-free zero-loss peak per unit weight,
/// sqrt(2/pi) sigma_t / hbar, in 1/eV.
double zlp_scale(const BeamParams& beam);

/// Uniform grid of energy offsets E - E0 in eV.
struct EnergyGrid {
  double min_ev = 0.0;
  double max_ev = 0.0;
  std::size_t points = 0;

  /// [-halfwidth_quanta hbar w0, +halfwidth_quanta hbar w0] with `points` samples.
  static EnergyGrid around_transition(const EmitterParams& emitter,
                                      double halfwidth_quanta = 2.5, std::size_t points = 801);
  void validate() const;
  std::vector<double> values() const;
  double step() const;
};

/// Index of the sample closest to `target` (ties resolve to the lower index).
std::size_t nearest_index(std::span<const double> energies, double target = 0.0);

std::complex<double> spectral_amplitude(Channel which, double k, double t,
                                        const CouplingProfile& profile,
                                        const ZGridSpec& spec = {});
std::complex<double> spectral_amplitude(Channel which, double k, double t,
                                        const BeamParams& beam, const EmitterParams& emitter,
                                        const ZGridSpec& spec = {},
                                        const QuadratureConfig& cfg = {});

struct Spectrum {
  double t = 0.0;
  std::vector<double> energy;  // E - E0, eV
  std::vector<double> dPdE;    // 1/eV
  std::vector<double> loss;    // |psi_e|^2/(hbar v0)
  std::vector<double> gain;    // |psi_g|^2/(hbar v0)
};

struct GammaNetTrace {
  double t = 0.0;
  std::vector<double> energy;
  std::vector<double> gamma_net;  // loss - gain
};

/// Throws ResolutionError if spec.max_panel_width is too coarse for the
/// largest |k| on the grid.
Spectrum eels_probability(std::span<const double> energies, double t,
                          const CouplingProfile& profile, const ZGridSpec& spec = {});
Spectrum eels_probability(std::span<const double> energies, double t, const BeamParams& beam,
                          const EmitterParams& emitter, const ZGridSpec& spec = {},
                          const QuadratureConfig& cfg = {});

GammaNetTrace gamma_net(std::span<const double> energies, double t,
                        const CouplingProfile& profile, const ZGridSpec& spec = {});
GammaNetTrace gamma_net(std::span<const double> energies, double t, const BeamParams& beam,
                        const EmitterParams& emitter, const ZGridSpec& spec = {},
                        const QuadratureConfig& cfg = {});

/// Spectra at every time, evaluated on the worker pool.
std::vector<Spectrum> spectrum_series(std::span<const double> energies,
                                      std::span<const double> times, const BeamParams& beam,
                                      const EmitterParams& emitter, const ZGridSpec& spec = {},
                                      const QuadratureConfig& cfg = {});

/// Gamma_net at the exact zero-loss energy (k = 0) for every time.
std::vector<double> zlp_gamma_net_series(std::span<const double> times, const BeamParams& beam,
                                         const EmitterParams& emitter,
                                         const ZGridSpec& spec = {},
                                         const QuadratureConfig& cfg = {});

/// First-order zero-loss Gamma_net for a = b:
///   (1/hbar v0) (4 sqrt(pi) a sigma_z / N)^2
///   [ (1/2) e^{-sigma_t^2 w0^2} Im{g_inf e^{i phi_r}}
///     + sqrt(pi) e^{-t^2/(4 sigma_t^2)}/sigma_t Im{g_c(0) e^{i(w0 t + phi_r)}} ].
/// Throws DomainError unless a == b.
double zlp_oscillation_firstorder(double t, const BeamParams& beam, const EmitterParams& emitter,
                                  const QuadratureConfig& cfg = {});
double zlp_oscillation_firstorder(double t, const BeamParams& beam, const EmitterParams& emitter,
                                  const SpectralCoupling& spectral);

}  // namespace fecoh
