#pragma once

// Internal unit system: energy in eV, length in nm, time in fs, charge in
// units of e. Dipole moments are therefore in e*nm and angular frequencies in
// rad/fs. The coupling g that results from these choices is dimensionless.

#include <numbers>

namespace fecoh {

namespace constants {
inline constexpr double kPi = std::numbers::pi;
/// hbar*c in eV*nm (CODATA 2018).
inline constexpr double kHbarC = 197.3269804;
/// Speed of light in nm/fs.
inline constexpr double kSpeedOfLight = 299.792458;
/// hbar in eV*fs.
inline constexpr double kHbar = kHbarC / kSpeedOfLight;
/// h*c in eV*nm.
inline constexpr double kHC = 2.0 * kPi * kHbarC;
/// Fine-structure constant (CODATA 2018).
inline constexpr double kFineStructure = 1.0 / 137.035999084;
/// e^2 / (4 pi eps0) in eV*nm.
inline constexpr double kCoulomb = kHbarC * kFineStructure;
/// Electron rest energy in keV (CODATA 2018).
inline constexpr double kElectronRestEnergyKeV = 510.99895;
/// 1 Debye = 1e-21/c C*m, expressed in e*nm.
inline constexpr double kDebyeInENm = 1e-21 / 299792458.0 / 1.602176634e-19 * 1e9;
}  // namespace constants

/// v/c of an electron with kinetic energy `kinetic_energy_kev`.
double velocity_from_kinetic_energy(double kinetic_energy_kev);

/// 1/sqrt(1 - beta^2). Requires 0 <= beta < 1.
double lorentz_gamma(double beta);

struct TransitionFrequency {
  double omega0;       // rad/fs
  double hbar_omega0;  // eV
};

TransitionFrequency omega_from_wavelength(double wavelength_nm);

double dipole_debye_to_internal(double debye);

/// Electron beam and wavepacket parameters. Construct through the factories,
/// which keep the derived fields consistent.
struct BeamParams {
  double kinetic_energy = 0.0;  // keV
  double beta = 0.0;
  double gamma = 1.0;
  double sigma_z = 0.0;  // nm
  double sigma_t = 0.0;  // fs
  double r_perp = 0.0;   // nm
  double k0 = 0.0;       // nm^-1, central electron wavenumber

  double velocity() const { return beta * constants::kSpeedOfLight; }  // nm/fs

  static BeamParams from_sigma_z(double kinetic_energy_kev, double sigma_z_nm,
                                 double r_perp_nm);
  static BeamParams from_sigma_t(double kinetic_energy_kev, double sigma_t_fs,
                                 double r_perp_nm);
};

/// Two-level emitter: transition dipole, transition frequency and the initial
/// state a|g> + b e^{-i phi_r}|e>.
struct EmitterParams {
  double d_x = 0.0;  // e*nm
  double d_y = 0.0;  // e*nm; no field component couples to it in this geometry
  double d_z = 0.0;  // e*nm
  double omega0 = 0.0;       // rad/fs
  double hbar_omega0 = 0.0;  // eV
  double a = 1.0;
  double b = 0.0;
  double phi_r = 0.0;  // rad

  static EmitterParams from_wavelength(double d_x_debye, double d_y_debye,
                                       double d_z_debye, double wavelength_nm,
                                       double a, double b, double phi_r);

  /// Throws DomainError when a^2 + b^2 != 1 (1e-12) or omega0 <= 0.
  void validate() const;
};

}  // namespace fecoh
