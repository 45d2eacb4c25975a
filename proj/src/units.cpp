#include "fecoh/units.hpp"

#include <cmath>

#include "fecoh/errors.hpp"

namespace fecoh {

using namespace constants;

double velocity_from_kinetic_energy(double kinetic_energy_kev) {
  if (!(kinetic_energy_kev >= 0.0) || !std::isfinite(kinetic_energy_kev))
    throw DomainError("velocity_from_kinetic_energy: kinetic energy must be finite and >= 0");
  const double gamma = 1.0 + kinetic_energy_kev / kElectronRestEnergyKeV;
  // 1 - 1/gamma^2 = (gamma-1)(gamma+1)/gamma^2 keeps precision for small energies.
  const double gm1 = kinetic_energy_kev / kElectronRestEnergyKeV;
  return std::sqrt(gm1 * (gamma + 1.0)) / gamma;
}

double lorentz_gamma(double beta) {
  if (!(beta >= 0.0) || !(beta < 1.0))
    throw DomainError("lorentz_gamma: beta must satisfy 0 <= beta < 1");
  return 1.0 / std::sqrt((1.0 - beta) * (1.0 + beta));
}

TransitionFrequency omega_from_wavelength(double wavelength_nm) {
  if (!(wavelength_nm > 0.0))
    throw DomainError("omega_from_wavelength: wavelength must be > 0");
  return {2.0 * kPi * kSpeedOfLight / wavelength_nm, kHC / wavelength_nm};
}

double dipole_debye_to_internal(double debye) { return debye * kDebyeInENm; }

namespace {

BeamParams make_beam(double kinetic_energy_kev, double r_perp_nm) {
  if (!(kinetic_energy_kev > 0.0))
    throw DomainError("BeamParams: kinetic energy must be > 0");
  if (!(r_perp_nm > 0.0)) throw DomainError("BeamParams: r_perp must be > 0");
  BeamParams beam;
  beam.kinetic_energy = kinetic_energy_kev;
  beam.beta = velocity_from_kinetic_energy(kinetic_energy_kev);
  beam.gamma = 1.0 + kinetic_energy_kev / kElectronRestEnergyKeV;
  beam.r_perp = r_perp_nm;
  // k0 = E0 v0 / (hbar c^2) with E0 = gamma m c^2 the total energy.
  beam.k0 = beam.gamma * kElectronRestEnergyKeV * 1e3 * beam.beta / kHbarC;
  return beam;
}

}  // namespace

BeamParams BeamParams::from_sigma_z(double kinetic_energy_kev, double sigma_z_nm,
                                    double r_perp_nm) {
  if (!(sigma_z_nm > 0.0)) throw DomainError("BeamParams: sigma_z must be > 0");
  BeamParams beam = make_beam(kinetic_energy_kev, r_perp_nm);
  beam.sigma_z = sigma_z_nm;
  beam.sigma_t = sigma_z_nm / beam.velocity();
  return beam;
}

BeamParams BeamParams::from_sigma_t(double kinetic_energy_kev, double sigma_t_fs,
                                    double r_perp_nm) {
  if (!(sigma_t_fs > 0.0)) throw DomainError("BeamParams: sigma_t must be > 0");
  BeamParams beam = make_beam(kinetic_energy_kev, r_perp_nm);
  beam.sigma_t = sigma_t_fs;
  beam.sigma_z = sigma_t_fs * beam.velocity();
  return beam;
}

EmitterParams EmitterParams::from_wavelength(double d_x_debye, double d_y_debye,
                                             double d_z_debye, double wavelength_nm,
                                             double a, double b, double phi_r) {
  const auto freq = omega_from_wavelength(wavelength_nm);
  EmitterParams e;
  e.d_x = dipole_debye_to_internal(d_x_debye);
  e.d_y = dipole_debye_to_internal(d_y_debye);
  e.d_z = dipole_debye_to_internal(d_z_debye);
  e.omega0 = freq.omega0;
  e.hbar_omega0 = freq.hbar_omega0;
  e.a = a;
  e.b = b;
  e.phi_r = phi_r;
  e.validate();
  return e;
}

void EmitterParams::validate() const {
  if (!(omega0 > 0.0)) throw DomainError("EmitterParams: omega0 must be > 0");
  if (!(std::abs(a * a + b * b - 1.0) <= 1e-12))
    throw DomainError("EmitterParams: a^2 + b^2 must equal 1 within 1e-12");
  if (!std::isfinite(phi_r)) throw DomainError("EmitterParams: phi_r must be finite");
}

}  // namespace fecoh
