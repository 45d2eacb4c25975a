#include "fecoh/eels.hpp"

#include <algorithm>
#include <cmath>

#include "fecoh/errors.hpp"
#include "fecoh/parallel.hpp"

namespace fecoh {

using cd = std::complex<double>;
using constants::kHbar;
using constants::kPi;

double wavepacket_normalization(double sigma_z) {
  if (!(sigma_z > 0.0)) throw DomainError("wavepacket_normalization: sigma_z must be > 0");
  return std::sqrt(2.0 * kPi) * std::sqrt(std::sqrt(2.0 * kPi) * sigma_z);
}

double zlp_scale(const BeamParams& beam) {
  return std::sqrt(2.0 / kPi) * beam.sigma_t / kHbar;
}

EnergyGrid EnergyGrid::around_transition(const EmitterParams& emitter, double halfwidth_quanta,
                                         std::size_t points) {
  EnergyGrid g{-halfwidth_quanta * emitter.hbar_omega0, halfwidth_quanta * emitter.hbar_omega0,
               points};
  g.validate();
  return g;
}

void EnergyGrid::validate() const {
  if (!std::isfinite(min_ev) || !std::isfinite(max_ev) || !(min_ev < max_ev))
    throw DomainError("energy grid: requires finite min < max");
  if (points < 2) throw DomainError("energy grid: requires at least 2 points");
}

double EnergyGrid::step() const { return (max_ev - min_ev) / static_cast<double>(points - 1); }

std::vector<double> EnergyGrid::values() const {
  validate();
  std::vector<double> v(points);
  const double h = step();
  for (std::size_t i = 0; i < points; ++i) v[i] = min_ev + h * static_cast<double>(i);
  v.back() = max_ev;
  return v;
}

std::size_t nearest_index(std::span<const double> energies, double target) {
  if (energies.empty()) throw DomainError("nearest_index: empty grid");
  std::size_t best = 0;
  for (std::size_t i = 1; i < energies.size(); ++i)
    if (std::abs(energies[i] - target) < std::abs(energies[best] - target)) best = i;
  return best;
}

namespace {

// Apodized, normalized amplitudes on the z nodes at one time:
// A_i(z_j) = w_j e^{-z_j^2/(4 sigma_z^2)} c_i(z_j) / N.
struct ApodizedAmplitudes {
  std::vector<double> z;
  std::vector<cd> ground;
  std::vector<cd> excited;
};

ApodizedAmplitudes apodize(double t, const CouplingProfile& profile, const ZGridSpec& spec,
                           double max_abs_k) {
  const auto& beam = profile.beam();
  const auto& emitter = profile.emitter();
  const double alpha = emitter.omega0 / beam.velocity();
  ZGridSpec local = spec;
  local.resolve_wavenumber = std::max(spec.resolve_wavenumber, max_abs_k + alpha);
  const auto quad = build_z_quadrature(beam, emitter, t, local);
  if (max_abs_k + alpha > quad.resolved_wavenumber * (1.0 + 1e-12))
    throw ResolutionError("spectral amplitude: z panels too coarse for the requested wavenumber");
  const double inv_n = 1.0 / wavepacket_normalization(beam.sigma_z);
  const double s2 = beam.sigma_z * beam.sigma_z;
  ApodizedAmplitudes out;
  out.z = quad.nodes;
  out.ground.resize(quad.nodes.size());
  out.excited.resize(quad.nodes.size());
  for (std::size_t j = 0; j < quad.nodes.size(); ++j) {
    const double z = quad.nodes[j];
    const double w = quad.weights[j] * std::exp(-0.25 * z * z / s2) * inv_n;
    cd c_g, c_e;
    rotate_initial_state(emitter, profile.g(z, t), c_g, c_e);
    out.ground[j] = w * c_g;
    out.excited[j] = w * c_e;
  }
  return out;
}

bool is_uniform(std::span<const double> x) {
  if (x.size() < 3) return true;
  const double h = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
  if (!(h > 0.0)) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::abs(x[i] - (x.front() + h * static_cast<double>(i))) > 1e-9 * h) return false;
  return true;
}

// psi_g(k_m), psi_e(k_m) for all m.
void transform(const ApodizedAmplitudes& amp, std::span<const double> ks, std::vector<cd>& psi_g,
               std::vector<cd>& psi_e) {
  const std::size_t m = ks.size();
  psi_g.assign(m, cd{0.0, 0.0});
  psi_e.assign(m, cd{0.0, 0.0});
  if (m == 0) return;
  if (is_uniform(ks) && m > 2) {
    // e^{-i k_m z} by recurrence in m, reseeded every 32 steps.
    const double dk = (ks.back() - ks.front()) / static_cast<double>(m - 1);
    constexpr std::size_t kReseed = 32;
    for (std::size_t j = 0; j < amp.z.size(); ++j) {
      const double z = amp.z[j];
      const cd step = std::polar(1.0, -dk * z);
      const cd ag = amp.ground[j];
      const cd ae = amp.excited[j];
      cd phase{};
      for (std::size_t i = 0; i < m; ++i) {
        if (i % kReseed == 0)
          phase = std::polar(1.0, -(ks.front() + dk * static_cast<double>(i)) * z);
        else
          phase *= step;
        psi_g[i] += ag * phase;
        psi_e[i] += ae * phase;
      }
    }
    return;
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < amp.z.size(); ++j) {
      const cd phase = std::polar(1.0, -ks[i] * amp.z[j]);
      psi_g[i] += amp.ground[j] * phase;
      psi_e[i] += amp.excited[j] * phase;
    }
  }
}

std::vector<double> wavenumbers(std::span<const double> energies, const BeamParams& beam) {
  const double hv = kHbar * beam.velocity();
  std::vector<double> ks(energies.size());
  for (std::size_t i = 0; i < energies.size(); ++i) {
    if (!std::isfinite(energies[i])) throw DomainError("energy grid: values must be finite");
    ks[i] = energies[i] / hv;
  }
  return ks;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

CouplingProfile profile_for(double t_min, double t_max, const BeamParams& beam,
                            const EmitterParams& emitter, const ZGridSpec& spec,
                            const QuadratureConfig& cfg) {
  emitter.validate();
  return make_coupling_profile(beam, emitter, t_min, t_max, spec, cfg);
}

}  // namespace

cd spectral_amplitude(Channel which, double k, double t, const CouplingProfile& profile,
                      const ZGridSpec& spec) {
  if (!std::isfinite(k) || !std::isfinite(t))
    throw DomainError("spectral_amplitude: k and t must be finite");
  const auto amp = apodize(t, profile, spec, std::abs(k));
  const std::vector<double> ks{k};
  std::vector<cd> psi_g, psi_e;
  transform(amp, ks, psi_g, psi_e);
  return which == Channel::ground ? psi_g[0] : psi_e[0];
}

cd spectral_amplitude(Channel which, double k, double t, const BeamParams& beam,
                      const EmitterParams& emitter, const ZGridSpec& spec,
                      const QuadratureConfig& cfg) {
  return spectral_amplitude(which, k, t, profile_for(t, t, beam, emitter, spec, cfg), spec);
}

Spectrum eels_probability(std::span<const double> energies, double t,
                          const CouplingProfile& profile, const ZGridSpec& spec) {
  const auto& beam = profile.beam();
  const auto ks = wavenumbers(energies, beam);
  const auto amp = apodize(t, profile, spec, max_abs(ks));
  std::vector<cd> psi_g, psi_e;
  transform(amp, ks, psi_g, psi_e);
  const double inv_hv = 1.0 / (kHbar * beam.velocity());
  Spectrum s;
  s.t = t;
  s.energy.assign(energies.begin(), energies.end());
  s.loss.resize(ks.size());
  s.gain.resize(ks.size());
  s.dPdE.resize(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) {
    s.loss[i] = std::norm(psi_e[i]) * inv_hv;
    s.gain[i] = std::norm(psi_g[i]) * inv_hv;
    s.dPdE[i] = s.loss[i] + s.gain[i];
  }
  return s;
}

Spectrum eels_probability(std::span<const double> energies, double t, const BeamParams& beam,
                          const EmitterParams& emitter, const ZGridSpec& spec,
                          const QuadratureConfig& cfg) {
  return eels_probability(energies, t, profile_for(t, t, beam, emitter, spec, cfg), spec);
}

GammaNetTrace gamma_net(std::span<const double> energies, double t,
                        const CouplingProfile& profile, const ZGridSpec& spec) {
  const auto s = eels_probability(energies, t, profile, spec);
  GammaNetTrace out;
  out.t = t;
  out.energy = s.energy;
  out.gamma_net.resize(s.energy.size());
  for (std::size_t i = 0; i < s.energy.size(); ++i) out.gamma_net[i] = s.loss[i] - s.gain[i];
  return out;
}

GammaNetTrace gamma_net(std::span<const double> energies, double t, const BeamParams& beam,
                        const EmitterParams& emitter, const ZGridSpec& spec,
                        const QuadratureConfig& cfg) {
  return gamma_net(energies, t, profile_for(t, t, beam, emitter, spec, cfg), spec);
}

std::vector<Spectrum> spectrum_series(std::span<const double> energies,
                                      std::span<const double> times, const BeamParams& beam,
                                      const EmitterParams& emitter, const ZGridSpec& spec,
                                      const QuadratureConfig& cfg) {
  if (times.empty()) return {};
  const auto [lo, hi] = std::minmax_element(times.begin(), times.end());
  const auto profile = profile_for(*lo, *hi, beam, emitter, spec, cfg);
  std::vector<Spectrum> out(times.size());
  parallel_for(times.size(),
               [&](std::size_t i) { out[i] = eels_probability(energies, times[i], profile, spec); });
  return out;
}

std::vector<double> zlp_gamma_net_series(std::span<const double> times, const BeamParams& beam,
                                         const EmitterParams& emitter, const ZGridSpec& spec,
                                         const QuadratureConfig& cfg) {
  if (times.empty()) return {};
  const auto [lo, hi] = std::minmax_element(times.begin(), times.end());
  const auto profile = profile_for(*lo, *hi, beam, emitter, spec, cfg);
  const double zero[] = {0.0};
  std::vector<double> out(times.size());
  parallel_for(times.size(), [&](std::size_t i) {
    out[i] = gamma_net(zero, times[i], profile, spec).gamma_net[0];
  });
  return out;
}

double zlp_oscillation_firstorder(double t, const BeamParams& beam, const EmitterParams& emitter,
                                  const SpectralCoupling& spectral) {
  emitter.validate();
  if (std::abs(emitter.a - emitter.b) > 1e-12)
    throw DomainError("zlp_oscillation_firstorder: requires an equal superposition (a == b)");
  if (!std::isfinite(t)) throw DomainError("zlp_oscillation_firstorder: t must be finite");
  const double st = beam.sigma_t;
  const double w0 = emitter.omega0;
  const double pre_amp = 4.0 * std::sqrt(kPi) * emitter.a * beam.sigma_z /
                         wavepacket_normalization(beam.sigma_z);
  const double pre = pre_amp * pre_amp / (kHbar * beam.velocity());
  const cd steady = spectral.g_inf() * std::polar(1.0, emitter.phi_r);
  const cd osc = spectral.g_c(0.0) * std::polar(1.0, w0 * t + emitter.phi_r);
  return pre * (0.5 * std::exp(-st * st * w0 * w0) * steady.imag() +
                std::sqrt(kPi) * std::exp(-t * t / (4.0 * st * st)) / st * osc.imag());
}

double zlp_oscillation_firstorder(double t, const BeamParams& beam, const EmitterParams& emitter,
                                  const QuadratureConfig& cfg) {
  return zlp_oscillation_firstorder(t, beam, emitter, SpectralCoupling(beam, emitter, cfg));
}

}  // namespace fecoh
