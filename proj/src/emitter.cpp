#include "fecoh/emitter.hpp"

#include <algorithm>
#include <cmath>

#include "fecoh/errors.hpp"
#include "fecoh/parallel.hpp"

namespace fecoh {

using cd = std::complex<double>;
using constants::kPi;

namespace {

// sin(x)/x, accurate near 0.
double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

// Appends 10-point Gauss-Legendre nodes and weights for every panel between
// consecutive (sorted) edges.
void append_gauss_legendre(const std::vector<double>& edges, std::vector<double>& nodes,
                           std::vector<double>& weights) {
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double center = 0.5 * (edges[p] + edges[p + 1]);
    const double half = 0.5 * (edges[p + 1] - edges[p]);
    if (!(half > 0.0)) continue;
    for (std::size_t j = 0; j < 5; ++j) {
      const double dx = half * detail::kXgk[2 * j + 1];
      const double w = half * detail::kWg[j];
      nodes.push_back(center - dx);
      weights.push_back(w);
      nodes.push_back(center + dx);
      weights.push_back(w);
    }
  }
}

// Sorts, clips to [lo, hi], drops near-duplicates and splits panels wider
// than max_width.
std::vector<double> finalize_edges(std::vector<double> edges, double lo, double hi,
                                   double max_width) {
  edges.push_back(lo);
  edges.push_back(hi);
  std::vector<double> kept;
  for (double e : edges)
    if (e >= lo && e <= hi) kept.push_back(e);
  std::sort(kept.begin(), kept.end());
  const double merge = 1e-9 * max_width;
  std::vector<double> out{kept.front()};
  for (double e : kept) {
    if (e - out.back() <= merge) continue;
    const double gap = e - out.back();
    const auto pieces = static_cast<std::size_t>(std::ceil(gap / max_width * (1.0 - 1e-12)));
    const double start = out.back();
    for (std::size_t i = 1; i < pieces; ++i)
      out.push_back(start + gap * static_cast<double>(i) / static_cast<double>(pieces));
    out.push_back(e);
  }
  if (out.back() < hi) out.back() = hi;
  return out;
}

// Breakpoints p +/- (offset + d 2^-j), j = 0..levels, on the side(s) requested.
void add_geometric(std::vector<double>& edges, double p, double offset, double d, int levels) {
  for (int j = 0; j <= levels; ++j) {
    const double s = offset + d * std::ldexp(1.0, -j);
    edges.push_back(p - s);
    edges.push_back(p + s);
  }
  if (offset > 0.0) {
    edges.push_back(p - offset);
    edges.push_back(p + offset);
  } else {
    edges.push_back(p);
  }
}

double gaussian_density_weight(double z, double sigma_z) {
  return std::exp(-0.5 * (z * z) / (sigma_z * sigma_z));
}

}  // namespace

void ZGridSpec::validate() const {
  if (!(span_sigmas >= 6.0))
    throw ResolutionError("z grid: span must be at least 6 sigma_z");
  if (!std::isfinite(span_sigmas)) throw DomainError("z grid: span must be finite");
  if (!(max_panel_width >= 0.0) || !std::isfinite(max_panel_width))
    throw DomainError("z grid: max_panel_width must be finite and >= 0");
  if (!(resolve_wavenumber >= 0.0) || !std::isfinite(resolve_wavenumber))
    throw DomainError("z grid: resolve_wavenumber must be finite and >= 0");
}

ZQuadrature build_z_quadrature(const BeamParams& beam, const EmitterParams& emitter, double t,
                               const ZGridSpec& spec) {
  spec.validate();
  if (!std::isfinite(t)) throw DomainError("z grid: t must be finite");
  const double v = beam.velocity();
  const double alpha = emitter.omega0 / v;
  const double K = std::max(2.0 * alpha, spec.resolve_wavenumber);
  const double auto_width = std::min(beam.sigma_z / 4.0, kPi / K);
  const double coarse = spec.max_panel_width > 0.0 ? spec.max_panel_width : auto_width;

  ZQuadrature q;
  q.half_span = spec.span_sigmas * beam.sigma_z;
  // A 10-point rule integrates e^{iKz} over a half-wave panel to ~1e-15.
  q.resolved_wavenumber = kPi / coarse;

  std::vector<double> edges;
  const auto n_coarse = static_cast<std::size_t>(std::ceil(2.0 * q.half_span / coarse));
  const double step = 2.0 * q.half_span / static_cast<double>(n_coarse);
  for (std::size_t i = 0; i <= n_coarse; ++i)
    edges.push_back(-q.half_span + step * static_cast<double>(i));

  // Graded panels around the coupling's transition at z = -v0 t.
  const double a = beam.r_perp / beam.gamma;
  const double zs = -v * t;
  std::vector<double> offsets{0.0};
  double width = 0.5 * a;
  double d = 0.0;
  while (width < coarse) {
    d += width;
    offsets.push_back(d);
    if (d >= 2.0 * a) width *= 2.0;
  }
  const double reach = offsets.back();
  if (zs + reach > -q.half_span && zs - reach < q.half_span) {
    std::erase_if(edges, [&](double e) { return std::abs(e - zs) < reach; });
    for (double off : offsets) {
      edges.push_back(zs - off);
      edges.push_back(zs + off);
    }
  }
  const auto final_edges = finalize_edges(std::move(edges), -q.half_span, q.half_span, coarse);
  append_gauss_legendre(final_edges, q.nodes, q.weights);
  return q;
}

CouplingProfile make_coupling_profile(const BeamParams& beam, const EmitterParams& emitter,
                                      double t_min, double t_max, const ZGridSpec& spec,
                                      const QuadratureConfig& cfg) {
  spec.validate();
  if (!(t_min <= t_max)) throw DomainError("coupling profile: requires t_min <= t_max");
  const double half = spec.span_sigmas * beam.sigma_z;
  const double v = beam.velocity();
  const double pad = beam.r_perp;
  return CouplingProfile(beam, emitter, -half + v * t_min - pad, half + v * t_max + pad, cfg);
}

void rotate_initial_state(const EmitterParams& emitter, cd g, cd& c_g, cd& c_e) {
  const double mag = std::abs(g);
  const double c = std::cos(mag);
  const double s = sinc(mag);
  const cd minus_i(0.0, -1.0);
  const cd b_phase = emitter.b * std::polar(1.0, -emitter.phi_r);
  c_g = emitter.a * c + minus_i * b_phase * std::conj(g) * s;
  c_e = b_phase * c + minus_i * emitter.a * g * s;
}

JointAmplitudes amplitudes(std::span<const double> z_grid, double t,
                           const CouplingProfile& profile) {
  JointAmplitudes out;
  out.t = t;
  out.z.assign(z_grid.begin(), z_grid.end());
  out.c_g.resize(z_grid.size());
  out.c_e.resize(z_grid.size());
  for (std::size_t i = 0; i < z_grid.size(); ++i)
    rotate_initial_state(profile.emitter(), profile.g(z_grid[i], t), out.c_g[i], out.c_e[i]);
  return out;
}

JointAmplitudes amplitudes(std::span<const double> z_grid, double t, const BeamParams& beam,
                           const EmitterParams& emitter, const QuadratureConfig& cfg) {
  emitter.validate();
  if (z_grid.empty()) return {t, {}, {}, {}};
  const auto [lo, hi] = std::minmax_element(z_grid.begin(), z_grid.end());
  const double v = beam.velocity();
  const CouplingProfile profile(beam, emitter, *lo + v * t - beam.r_perp,
                                *hi + v * t + beam.r_perp, cfg);
  return amplitudes(z_grid, t, profile);
}

DensityMatrix2 reduced_density_matrix(double t, const CouplingProfile& profile,
                                      const ZGridSpec& spec) {
  const auto& beam = profile.beam();
  const auto& emitter = profile.emitter();
  const auto quad = build_z_quadrature(beam, emitter, t, spec);
  double gg = 0.0, ee = 0.0;
  cd ge{0.0, 0.0};
  for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
    const double z = quad.nodes[i];
    const double w = quad.weights[i] * gaussian_density_weight(z, beam.sigma_z);
    cd c_g, c_e;
    rotate_initial_state(emitter, profile.g(z, t), c_g, c_e);
    gg += w * std::norm(c_g);
    ee += w * std::norm(c_e);
    ge += w * c_g * std::conj(c_e);
  }
  const double norm = std::sqrt(2.0 * kPi) * beam.sigma_z;
  return {t, gg / norm, ee / norm, ge / norm};
}

DensityMatrix2 reduced_density_matrix(double t, const BeamParams& beam,
                                      const EmitterParams& emitter, const ZGridSpec& spec,
                                      const QuadratureConfig& cfg) {
  emitter.validate();
  const auto profile = make_coupling_profile(beam, emitter, t, t, spec, cfg);
  return reduced_density_matrix(t, profile, spec);
}

std::vector<DensityMatrix2> density_matrix_series(std::span<const double> times,
                                                  const BeamParams& beam,
                                                  const EmitterParams& emitter,
                                                  const ZGridSpec& spec,
                                                  const QuadratureConfig& cfg) {
  emitter.validate();
  if (times.empty()) return {};
  const auto [lo, hi] = std::minmax_element(times.begin(), times.end());
  const auto profile = make_coupling_profile(beam, emitter, *lo, *hi, spec, cfg);
  std::vector<DensityMatrix2> out(times.size());
  parallel_for(times.size(),
               [&](std::size_t i) { out[i] = reduced_density_matrix(times[i], profile, spec); });
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kFrequencyWindowSigmas = 9.0;  // e^{-81/2} ~ 2.6e-18
constexpr double kDefaultResolvedTimeSigmas = 12.0;

}  // namespace

FirstOrderDynamics::FirstOrderDynamics(const BeamParams& beam, const EmitterParams& emitter,
                                       const QuadratureConfig& cfg, double max_abs_time)
    : beam_(beam), emitter_(emitter), spectral_(beam, emitter, cfg) {
  emitter_.validate();
  const double st = beam.sigma_t;
  const double W = kFrequencyWindowSigmas / st;
  const double w0 = emitter.omega0;
  const double excl = spectral_.exclusion_halfwidth();
  g_c0_ = spectral_.g_c(0.0);

  if (!(max_abs_time >= 0.0) || !std::isfinite(max_abs_time))
    throw DomainError("FirstOrderDynamics: max_abs_time must be finite and >= 0");
  max_abs_time_ = std::max(max_abs_time, kDefaultResolvedTimeSigmas * st);
  // Half-wave panels for e^{-i w t} at the largest supported |t|.
  const double max_width = kPi / max_abs_time_;
  std::vector<double> edges;
  // g_c has a k ln|k| kink at w = 0 and a 1/(w - w0) line at w0.
  add_geometric(edges, 0.0, 0.0, 0.5 * W, 30);
  if (w0 - excl < W) add_geometric(edges, w0, excl, 0.25 * w0, 30);
  auto all = finalize_edges(std::move(edges), -W, W, max_width);

  std::vector<double> nodes, weights;
  append_gauss_legendre(all, nodes, weights);
  std::vector<double> kept_nodes, kept_weights;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (std::abs(nodes[i] - w0) < excl) continue;
    kept_nodes.push_back(nodes[i]);
    kept_weights.push_back(weights[i]);
  }
  omega_ = std::move(kept_nodes);
  weighted_.resize(omega_.size());
  parallel_for(omega_.size(), [&](std::size_t i) {
    const double w = omega_[i];
    weighted_[i] = kept_weights[i] * spectral_.g_c(w) * std::exp(-0.5 * st * st * w * w);
  });

  // The excluded window: the sgn line is odd about w0 and cancels; what is
  // left is bounded by the window width times the edge values.
  if (w0 - excl < W) {
    const cd up = spectral_.g_c(w0 + excl * (1.0 + 1e-9));
    const cd dn = spectral_.g_c(w0 - excl * (1.0 + 1e-9));
    const double gauss = std::exp(-0.5 * st * st * std::pow(std::max(0.0, w0 - excl), 2));
    window_bound_ = 2.0 * emitter.a * emitter.b * 2.0 * excl *
                    (std::abs(up + dn) + std::abs(up - dn)) * gauss;
  }
}

FirstOrderPopulations FirstOrderDynamics::populations(double t) const {
  if (!std::isfinite(t)) throw DomainError("populations_firstorder: t must be finite");
  const double st = beam_.sigma_t;
  const double a = emitter_.a, b = emitter_.b;
  const cd phase_r = std::polar(1.0, emitter_.phi_r);
  const cd steady = spectral_.g_inf() * phase_r;
  if (std::abs(t) > max_abs_time_)
    throw ResolutionError("populations_firstorder: |t| beyond the tabulated frequency resolution");
  cd transient{0.0, 0.0};
  const double w0 = emitter_.omega0;
  for (std::size_t i = 0; i < omega_.size(); ++i)
    transient += weighted_[i] * std::polar(1.0, -(omega_[i] - w0) * t);
  const double dev = a * b * std::exp(-0.5 * st * st * emitter_.omega0 * emitter_.omega0) *
                         steady.imag() +
                     2.0 * a * b * (transient * phase_r).imag();
  return {t, b * b + dev, a * a - dev, window_bound_};
}

FirstOrderPopulations FirstOrderDynamics::heuristic(double t) const {
  if (!std::isfinite(t)) throw DomainError("populations_heuristic: t must be finite");
  const double st = beam_.sigma_t;
  const double a = emitter_.a, b = emitter_.b;
  const double w0 = emitter_.omega0;
  const cd steady = spectral_.g_inf() * std::polar(1.0, emitter_.phi_r);
  const cd osc = g_c0_ * std::polar(1.0, w0 * t + emitter_.phi_r);
  const double dev = a * b * std::exp(-0.5 * st * st * w0 * w0) * steady.imag() +
                     2.0 * std::sqrt(2.0 * kPi) * a * b * std::exp(-0.5 * t * t / (st * st)) /
                         st * osc.imag();
  return {t, b * b + dev, a * a - dev, 0.0};
}

FirstOrderPopulations populations_firstorder(double t, const BeamParams& beam,
                                             const EmitterParams& emitter,
                                             const QuadratureConfig& cfg) {
  if (emitter.a == 0.0 || emitter.b == 0.0) {
    emitter.validate();
    return {t, emitter.b * emitter.b, emitter.a * emitter.a, 0.0};
  }
  return FirstOrderDynamics(beam, emitter, cfg, std::abs(t)).populations(t);
}

FirstOrderPopulations populations_heuristic(double t, const BeamParams& beam,
                                            const EmitterParams& emitter,
                                            const QuadratureConfig& cfg) {
  return FirstOrderDynamics(beam, emitter, cfg).heuristic(t);
}

}  // namespace fecoh
