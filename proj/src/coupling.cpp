#include "fecoh/coupling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "fecoh/errors.hpp"
#include "fecoh/specfun.hpp"

namespace fecoh {

using namespace std::complex_literals;
using constants::kPi;

namespace {

double wrap_phase(double phi) {
  // std::arg returns [-pi, pi]; fold -pi onto +pi.
  return phi <= -kPi ? phi + 2.0 * kPi : phi;
}

void check_inputs(const BeamParams& beam, const EmitterParams& emitter) {
  if (!(beam.r_perp > 0.0)) throw DomainError("coupling: r_perp must be > 0");
  if (!(beam.beta > 0.0 && beam.beta < 1.0))
    throw DomainError("coupling: beta must lie in (0, 1)");
  if (!(emitter.omega0 > 0.0)) throw DomainError("coupling: omega0 must be > 0");
}

// Bessel constants at x = r w0/(gamma v0).
struct BesselAtX {
  double i0, i1, k0, k1;
};

BesselAtX bessel_at_x(const CouplingConstants& k) {
  const double x = k.a * k.alpha;
  return {bessel_i0(x), bessel_i1(x), bessel_k0(x), bessel_k1(x)};
}

std::complex<double> g_inf_from(const CouplingConstants& k, const BesselAtX& bx) {
  return (2.0 * k.eta * k.alpha / (k.gamma * k.gamma)) *
         std::complex<double>(k.d_x * bx.k1, k.d_z * bx.k0 / k.gamma);
}

std::complex<double> g_K_from(const CouplingConstants& k, const BesselAtX& bx) {
  return {k.d_z * bx.k0 / k.gamma, -k.d_x * bx.k1};
}

std::complex<double> g_I_from(const CouplingConstants& k, const BesselAtX& bx) {
  return {k.d_z * bx.i0 / k.gamma, k.d_x * bx.i1};
}

// 1 + gamma zt / R without cancellation for large negative zt.
double step_bracket(double ztilde, const CouplingConstants& k) {
  const double gz = k.gamma * ztilde;
  const double r2 = k.r_perp * k.r_perp;
  const double R = std::sqrt(gz * gz + r2);
  if (gz >= 0.0) return 1.0 + gz / R;
  return r2 / (R * (R - gz));
}

}  // namespace

CouplingConstants CouplingConstants::from(const BeamParams& beam, const EmitterParams& emitter) {
  check_inputs(beam, emitter);
  CouplingConstants k;
  k.eta = coupling_eta(beam);
  k.velocity = beam.velocity();
  k.alpha = emitter.omega0 / k.velocity;
  k.a = beam.r_perp / beam.gamma;
  k.gamma = beam.gamma;
  k.r_perp = beam.r_perp;
  k.d_x = emitter.d_x;
  k.d_z = emitter.d_z;
  k.omega0 = emitter.omega0;
  return k;
}

CouplingValue CouplingValue::make(std::complex<double> g, double z, double alpha,
                                  double error_estimate) {
  CouplingValue v;
  v.g = g;
  v.magnitude = std::abs(g);
  const std::complex<double> reduced = g * std::polar(1.0, alpha * z);
  v.phase = wrap_phase(std::arg(reduced));
  v.error_estimate = error_estimate;
  return v;
}

double coupling_eta(const BeamParams& beam) {
  if (!(beam.beta > 0.0)) throw DomainError("coupling_eta: beta must be > 0");
  return -beam.gamma * constants::kCoulomb / (constants::kHbarC * beam.beta);
}

std::complex<double> g_infinity(const BeamParams& beam, const EmitterParams& emitter) {
  const auto k = CouplingConstants::from(beam, emitter);
  return g_inf_from(k, bessel_at_x(k));
}

double default_cutoff_length(const BeamParams& beam, const EmitterParams& emitter) {
  const auto k = CouplingConstants::from(beam, emitter);
  return 1e4 * std::max(beam.r_perp, 1.0 / (k.gamma * k.alpha));
}

CouplingValue g_direct(double z, double t, const BeamParams& beam, const EmitterParams& emitter,
                       double cutoff, const QuadratureConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(z) || !std::isfinite(t)) throw DomainError("g_direct: z and t must be finite");
  const auto k = CouplingConstants::from(beam, emitter);
  const double L = cutoff > 0.0 ? cutoff : default_cutoff_length(beam, emitter);
  const double ztilde = z + k.velocity * t;
  const double tail = std::abs(k.eta) * (std::abs(k.d_z) / (k.gamma * k.gamma * L) +
                                         k.r_perp * std::abs(k.d_x) /
                                             (2.0 * k.gamma * k.gamma * k.gamma * L * L));
  std::complex<double> reduced{0.0, 0.0};
  double err = tail;
  if (ztilde > -L) {
    const std::array<double, 1> peak{0.0};
    PanelOptions opts;
    opts.max_panel_width = oscillation_panel_width(k.alpha, cfg);
    opts.breakpoints = peak;
    const auto r = integrate_adaptive([&k](double s) { return k.integrand(s); }, -L, ztilde,
                                      cfg, opts);
    reduced = r.value;
    err += r.error_estimate;
  }
  return CouplingValue::make(reduced * std::polar(1.0, -k.alpha * z), z, k.alpha, err);
}

std::vector<CouplingValue> g_direct_many(std::span<const double> z, std::span<const double> t,
                                         const BeamParams& beam, const EmitterParams& emitter,
                                         double cutoff, const QuadratureConfig& cfg) {
  cfg.validate();
  if (z.size() != t.size()) throw DomainError("g_direct_many: z and t differ in length");
  const auto k = CouplingConstants::from(beam, emitter);
  const double L = cutoff > 0.0 ? cutoff : default_cutoff_length(beam, emitter);
  const double tail = std::abs(k.eta) * (std::abs(k.d_z) / (k.gamma * k.gamma * L) +
                                         k.r_perp * std::abs(k.d_x) /
                                             (2.0 * k.gamma * k.gamma * k.gamma * L * L));
  std::vector<double> zt(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!std::isfinite(z[i]) || !std::isfinite(t[i]))
      throw DomainError("g_direct_many: z and t must be finite");
    zt[i] = z[i] + k.velocity * t[i];
  }
  std::vector<std::size_t> order(z.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return zt[a] < zt[b]; });

  PanelOptions opts;
  opts.max_panel_width = oscillation_panel_width(k.alpha, cfg);
  const std::array<double, 1> peak{0.0};
  std::vector<CouplingValue> out(z.size());
  double from = -L;
  std::complex<double> acc{0.0, 0.0};
  double err = tail;
  for (std::size_t idx : order) {
    const double upper = zt[idx];
    if (upper > from) {
      opts.breakpoints = (from < 0.0 && 0.0 < upper) ? std::span<const double>(peak)
                                                     : std::span<const double>{};
      const auto r = integrate_adaptive([&k](double s) { return k.integrand(s); }, from, upper,
                                        cfg, opts);
      acc += r.value;
      err += r.error_estimate;
      from = upper;
    }
    const std::complex<double> reduced = upper > -L ? acc : std::complex<double>{0.0, 0.0};
    out[idx] = CouplingValue::make(reduced * std::polar(1.0, -k.alpha * z[idx]), z[idx], k.alpha,
                                   err);
  }
  return out;
}

SemianalyticParts coupling_semianalytic_parts(double ztilde, const BeamParams& beam,
                                              const EmitterParams& emitter,
                                              const QuadratureConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(ztilde)) throw DomainError("g_semianalytic: ztilde must be finite");
  const auto k = CouplingConstants::from(beam, emitter);
  const auto bx = bessel_at_x(k);
  const auto g_inf = g_inf_from(k, bx);

  SemianalyticParts parts;
  parts.g0 = 0.5 * g_inf * step_bracket(ztilde, k);

  // Smooth Bessel amplitudes: one oscillation period per starting panel is
  // enough for the 21-point rule, and refinement handles the rest.
  PanelOptions opts;
  opts.max_panel_width = ztilde == 0.0 ? std::numeric_limits<double>::infinity()
                                       : 2.0 * kPi / std::abs(ztilde);

  // I1(a s)/s -> a/2 as s -> 0.
  const double s_floor = 1e-12 * k.alpha;
  auto first_kind = [&](double s) -> std::complex<double> {
    const double amp = s < s_floor ? 0.5 * k.a : bessel_i1(k.a * s) / s;
    return {amp * std::cos(s * ztilde), amp * std::sin(s * ztilde)};
  };
  auto second_kind = [&](double s) -> std::complex<double> {
    const double amp = bessel_k1(k.a * s) / s;
    return {amp * std::cos(s * ztilde), amp * std::sin(s * ztilde)};
  };
  const auto A = integrate_adaptive(first_kind, 0.0, k.alpha, cfg, opts);
  const auto B = integrate_semiinfinite_decaying(second_kind, k.alpha, 1.0 / k.a, cfg, opts);

  const double R = std::sqrt(k.gamma * k.gamma * ztilde * ztilde + k.r_perp * k.r_perp);
  const double pref = k.eta * k.r_perp * k.alpha / (k.gamma * k.gamma * R);
  const auto gK = g_K_from(k, bx);
  const auto gI = g_I_from(k, bx);
  parts.g1 = pref * (gK * A.value - gI * B.value);
  parts.error_estimate =
      std::abs(pref) * (std::abs(gK) * A.error_estimate + std::abs(gI) * B.error_estimate);
  return parts;
}

CouplingValue g_semianalytic(double z, double t, const BeamParams& beam,
                             const EmitterParams& emitter, const QuadratureConfig& cfg) {
  if (!std::isfinite(z) || !std::isfinite(t))
    throw DomainError("g_semianalytic: z and t must be finite");
  const auto k = CouplingConstants::from(beam, emitter);
  const double ztilde = z + k.velocity * t;
  const auto parts = coupling_semianalytic_parts(ztilde, beam, emitter, cfg);
  return CouplingValue::make((parts.g0 + parts.g1) * std::polar(1.0, -k.alpha * z), z, k.alpha,
                             parts.error_estimate);
}

// ---------------------------------------------------------------------------

SpectralCoupling::SpectralCoupling(const BeamParams& beam, const EmitterParams& emitter,
                                   const QuadratureConfig& cfg)
    : k_(CouplingConstants::from(beam, emitter)), cfg_(cfg) {
  cfg_.validate();
  const auto bx = bessel_at_x(k_);
  g_inf_ = g_inf_from(k_, bx);
  g_K_ = g_K_from(k_, bx);
  g_I_ = g_I_from(k_, bx);
}

std::complex<double> SpectralCoupling::g_c(double omega) const {
  if (!std::isfinite(omega)) throw DomainError("g_c: omega must be finite");
  const double detune = omega - k_.omega0;
  if (std::abs(detune) < exclusion_halfwidth())
    throw DomainError("g_c: omega inside the exclusion window around omega0");

  const double q = detune / k_.velocity;
  const double sgn = detune > 0.0 ? 1.0 : -1.0;
  const std::complex<double> line = g_inf_ * (1.0i * k_.a) * bessel_k1(k_.a * std::abs(q)) * sgn;

  // K0(a|s + q|) has an integrable log singularity at s = -q.
  const std::array<double, 1> singular{-q};
  PanelOptions opts;
  opts.breakpoints = singular;

  const double s_floor = 1e-12 * k_.alpha;
  auto kernel = [&](double s) { return bessel_k0(k_.a * std::abs(s + q)); };
  auto first_kind = [&](double s) {
    const double amp = s < s_floor ? 0.5 * k_.a : bessel_i1(k_.a * s) / s;
    return amp * kernel(s);
  };
  auto second_kind = [&](double s) { return bessel_k1(k_.a * s) / s * kernel(s); };

  const auto A = integrate_adaptive(first_kind, 0.0, k_.alpha, cfg_, opts);
  const auto B = integrate_semiinfinite_decaying(second_kind, k_.alpha, 1.0 / k_.a, cfg_, opts);

  const double pref = 2.0 * k_.eta * k_.r_perp * k_.alpha / (k_.gamma * k_.gamma * k_.gamma);
  const std::complex<double> continuum = pref * (g_K_ * A.value - g_I_ * B.value);
  return (line + continuum) / (2.0 * kPi * k_.velocity);
}

std::complex<double> g_spectral(double omega, const BeamParams& beam,
                                const EmitterParams& emitter, const QuadratureConfig& cfg) {
  return SpectralCoupling(beam, emitter, cfg).g_c(omega);
}

// ---------------------------------------------------------------------------

CouplingProfile::CouplingProfile(const BeamParams& beam, const EmitterParams& emitter,
                                 double ztilde_min, double ztilde_max, const QuadratureConfig& cfg)
    : beam_(beam), emitter_(emitter), cfg_(cfg), k_(CouplingConstants::from(beam, emitter)) {
  cfg_.validate();
  if (!std::isfinite(ztilde_min) || !std::isfinite(ztilde_max) || !(ztilde_min < ztilde_max))
    throw DomainError("CouplingProfile: requires finite ztilde_min < ztilde_max");
  g_inf_ = fecoh::g_infinity(beam, emitter);

  // Resolve both the field width r/gamma and the phase e^{i alpha s}.
  const double h_max = std::min(0.5 * k_.a, 2.0 * kPi / (16.0 * k_.alpha));
  const auto n = static_cast<std::size_t>(std::ceil((ztilde_max - ztilde_min) / h_max)) + 1;
  zmin_ = ztilde_min;
  h_ = (ztilde_max - ztilde_min) / static_cast<double>(n - 1);
  nodes_.resize(n);

  const double anchor_pos = std::clamp(std::round(-zmin_ / h_), 0.0, static_cast<double>(n - 1));
  const auto anchor = static_cast<std::size_t>(anchor_pos);
  const double z_anchor = zmin_ + h_ * static_cast<double>(anchor);
  const auto parts = coupling_semianalytic_parts(z_anchor, beam, emitter, cfg_);
  nodes_[anchor] = parts.g0 + parts.g1;
  for (std::size_t i = anchor + 1; i < n; ++i) {
    const double lo = zmin_ + h_ * static_cast<double>(i - 1);
    nodes_[i] = nodes_[i - 1] + segment(lo, lo + h_);
  }
  for (std::size_t i = anchor; i-- > 0;) {
    const double hi = zmin_ + h_ * static_cast<double>(i + 1);
    nodes_[i] = nodes_[i + 1] - segment(hi - h_, hi);
  }
}

std::complex<double> CouplingProfile::segment(double from, double to) const {
  if (from == to) return {0.0, 0.0};
  const bool flip = from > to;
  const double lo = flip ? to : from;
  const double hi = flip ? from : to;
  auto f = [this](double s) { return k_.integrand(s); };
  auto panel = detail::gauss_kronrod21(f, lo, hi);
  std::complex<double> value = panel.value;
  if (panel.error > std::max(1e-3 * cfg_.abs_tol, 1e-3 * cfg_.rel_tol * std::abs(panel.value))) {
    QuadratureConfig tight = cfg_;
    tight.abs_tol = 1e-3 * cfg_.abs_tol;
    tight.rel_tol = 1e-3 * cfg_.rel_tol;
    value = integrate_adaptive(f, lo, hi, tight).value;
  }
  return flip ? -value : value;
}

std::complex<double> CouplingProfile::reduced(double ztilde) const {
  if (!(ztilde >= zmin_ && ztilde <= ztilde_max())) {
    const auto parts = coupling_semianalytic_parts(ztilde, beam_, emitter_, cfg_);
    return parts.g0 + parts.g1;
  }
  const double pos = std::round((ztilde - zmin_) / h_);
  const auto i = std::min(static_cast<std::size_t>(pos), nodes_.size() - 1);
  const double node = zmin_ + h_ * static_cast<double>(i);
  // The remaining piece spans at most h/2 <= r/(4 gamma); the field's poles sit
  // r/gamma off the real axis, so 10-point Gauss-Legendre is exact to rounding.
  const double center = 0.5 * (node + ztilde);
  const double half = 0.5 * (ztilde - node);
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t j = 0; j < 5; ++j) {
    const double dx = half * detail::kXgk[2 * j + 1];
    acc += detail::kWg[j] * (k_.integrand(center - dx) + k_.integrand(center + dx));
  }
  return nodes_[i] + acc * half;
}

std::complex<double> CouplingProfile::g(double z, double t) const {
  return reduced(z + k_.velocity * t) * std::polar(1.0, -k_.alpha * z);
}

CouplingValue CouplingProfile::value(double z, double t) const {
  return CouplingValue::make(g(z, t), z, k_.alpha);
}

}  // namespace fecoh
