#include <cmath>
#include <complex>

#include "doctest.h"
#include "fecoh/emitter.hpp"
#include "fecoh/errors.hpp"
#include "support/analysis.hpp"

using namespace fecoh;
using cd = std::complex<double>;

namespace {

const double kHalf = 1.0 / std::sqrt(2.0);

EmitterParams emitter_of(double a, double phi = 0.0, double lambda = 560.0, double d = 30.0) {
  return EmitterParams::from_wavelength(d, 0, d, lambda, a, std::sqrt(1.0 - a * a), phi);
}

BeamParams fig1_beam(const EmitterParams& e, double kev = 0.5) {
  return BeamParams::from_sigma_t(kev, 4.0 * 2.0 * M_PI / e.omega0, 2.0);
}

double max_g_squared(const CouplingProfile& prof, double t, const ZGridSpec& spec = {}) {
  const auto q = build_z_quadrature(prof.beam(), prof.emitter(), t, spec);
  double m = 0.0;
  for (double z : q.nodes) m = std::max(m, std::norm(prof.g(z, t)));
  return m;
}

}  // namespace

TEST_CASE("z quadrature integrates the Gaussian weight and resolves its wavenumber") {
  const auto e = emitter_of(kHalf);
  const auto b = fig1_beam(e);
  for (double t : {-30.0, 0.0, 2.0, 200.0}) {
    const auto q = build_z_quadrature(b, e, t);
    double s = 0.0;
    cd osc = 0.0;
    const double k = q.resolved_wavenumber;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
      const double g = std::exp(-0.5 * q.nodes[i] * q.nodes[i] / (b.sigma_z * b.sigma_z));
      s += q.weights[i] * g;
      osc += q.weights[i] * g * std::polar(1.0, k * q.nodes[i]);
    }
    CHECK(s / (std::sqrt(2.0 * M_PI) * b.sigma_z) == doctest::Approx(1.0).epsilon(1e-14));
    const double exact = std::exp(-0.5 * k * k * b.sigma_z * b.sigma_z);
    CHECK(std::abs(osc / (std::sqrt(2.0 * M_PI) * b.sigma_z) - exact) < 1e-13);
    CHECK(q.half_span == doctest::Approx(8.0 * b.sigma_z));
  }
  ZGridSpec narrow;
  narrow.span_sigmas = 5.0;
  CHECK_THROWS_AS(build_z_quadrature(b, e, 0.0, narrow), ResolutionError);
  CHECK_THROWS_AS(reduced_density_matrix(0.0, b, e, narrow), ResolutionError);
}

TEST_CASE("amplitudes: identity rotation, unitarity, ground-state excitation") {
  const auto e = emitter_of(kHalf, 0.7);
  const auto b = fig1_beam(e);
  const auto zero = EmitterParams::from_wavelength(0, 0, 0, 560, kHalf, kHalf, 0.7);
  const std::vector<double> z = analysis::linspace(-300.0, 300.0, 301);
  const auto id = amplitudes(z, 1.0, b, zero);
  for (std::size_t i = 0; i < z.size(); ++i) {
    CHECK(id.c_g[i] == cd(kHalf));
    CHECK(std::abs(id.c_e[i] - kHalf * std::polar(1.0, -0.7)) < 1e-16);
  }
  for (double t : {-5.0, 0.0, 3.0}) {
    const auto amp = amplitudes(z, t, b, e);
    for (std::size_t i = 0; i < z.size(); ++i)
      CHECK(std::abs(std::norm(amp.c_g[i]) + std::norm(amp.c_e[i]) - 1.0) < 1e-12);
  }
  const auto ground = emitter_of(1.0);
  const auto prof = make_coupling_profile(b, ground, 0.5, 0.5);
  const auto amp = amplitudes(z, 0.5, prof);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double g = std::abs(prof.g(z[i], 0.5));
    CHECK(std::norm(amp.c_e[i]) == doctest::Approx(std::sin(g) * std::sin(g)).epsilon(1e-12));
    CHECK(std::norm(amp.c_e[i]) <= g * g);
  }
}

TEST_CASE("density matrix invariants over a time grid") {
  const auto e = emitter_of(0.8, 0.4);
  const auto b = fig1_beam(e);
  const auto times = analysis::linspace(-3 * b.sigma_t, 6 * b.sigma_t, 61);
  const auto rho = density_matrix_series(times, b, e);
  for (const auto& r : rho) {
    CHECK(std::abs(r.rho_gg + r.rho_ee - 1.0) < 1e-10);
    CHECK(r.rho_ee >= 0.0);
    CHECK(r.rho_ee <= 1.0);
    CHECK(std::norm(r.rho_ge) <= r.rho_gg * r.rho_ee + 1e-10);
    CHECK(r.rho_eg() == std::conj(r.rho_ge));
  }
}

TEST_CASE("ground state stays below max |g|^2") {
  const auto e = emitter_of(1.0);
  const auto b = fig1_beam(e);
  const auto times = analysis::linspace(-3 * b.sigma_t, 6 * b.sigma_t, 31);
  const auto prof = make_coupling_profile(b, e, times.front(), times.back());
  for (double t : times) {
    const auto r = reduced_density_matrix(t, prof);
    CHECK(r.rho_ee <= max_g_squared(prof, t) + 1e-15);
  }
}

TEST_CASE("early times reproduce the initial pure state") {
  const auto e = emitter_of(0.6, 1.1);
  const auto b = fig1_beam(e);
  const double t = -10.0 * b.sigma_t - 1e3 * b.r_perp / b.velocity();
  const auto r = reduced_density_matrix(t, b, e);
  CHECK(std::abs(r.rho_gg - 0.36) < 1e-6);
  CHECK(std::abs(r.rho_ee - 0.64) < 1e-6);
  CHECK(std::abs(r.rho_ge - 0.6 * 0.8 * std::polar(1.0, 1.1)) < 1e-6);
}

TEST_CASE("relative-phase antisymmetry of the population deviation") {
  const auto e0 = emitter_of(kHalf, 0.0);
  const auto epi = emitter_of(kHalf, M_PI);
  const auto b = fig1_beam(e0);
  const auto times = analysis::linspace(-3 * b.sigma_t, 6 * b.sigma_t, 91);
  const auto r0 = density_matrix_series(times, b, e0);
  const auto rpi = density_matrix_series(times, b, epi);
  const auto prof = make_coupling_profile(b, e0, times.front(), times.back());
  double gmax = 0.0;
  for (double t : times) gmax = std::max(gmax, max_g_squared(prof, t));
  double worst = 0.0, dev = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    worst = std::max(worst, std::abs((r0[i].rho_ee - 0.5) + (rpi[i].rho_ee - 0.5)));
    dev = std::max(dev, std::abs(r0[i].rho_ee - 0.5));
  }
  CHECK(worst <= 10.0 * gmax);
  CHECK(worst < 0.2 * dev);  // the first-order part really does cancel
}

TEST_CASE("first-order populations") {
  const auto b_only = EmitterParams::from_wavelength(30, 0, 30, 560, 0.0, 1.0, 0.3);
  const auto beam = fig1_beam(b_only);
  auto p = populations_firstorder(1.0, beam, b_only);
  CHECK(p.rho_ee == 1.0);
  CHECK(p.rho_gg == 0.0);
  const auto a_only = emitter_of(1.0);
  p = populations_firstorder(-2.0, beam, a_only);
  CHECK(p.rho_ee == 0.0);
  CHECK(p.rho_gg == 1.0);

  const auto e = emitter_of(kHalf);
  const auto b = fig1_beam(e);
  const auto times = analysis::linspace(-3 * b.sigma_t, 6 * b.sigma_t, 301);
  FirstOrderDynamics fo(b, e, {}, 6 * b.sigma_t);
  const auto full = density_matrix_series(times, b, e);
  const auto prof = make_coupling_profile(b, e, times.front(), times.back());
  double gmax = 0.0;
  for (double t : times) gmax = std::max(gmax, max_g_squared(prof, t));
  std::vector<double> dev_full;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto f = fo.populations(times[i]);
    CHECK(std::abs(f.rho_ee - full[i].rho_ee) < 10.0 * gmax);
    CHECK(f.rho_ee + f.rho_gg == doctest::Approx(1.0).epsilon(1e-15));
    dev_full.push_back(full[i].rho_ee - 0.5);
  }
  CHECK_THROWS_AS(fo.populations(13.0 * b.sigma_t), ResolutionError);
  CHECK(populations_firstorder(1.0, b, e).rho_ee ==
        doctest::Approx(fo.populations(1.0).rho_ee).epsilon(1e-12));

  SUBCASE("oscillation period and Gaussian envelope") {
    const double period = 2.0 * M_PI / e.omega0;
    const double w = analysis::dominant_frequency(times, dev_full, 0.5 * e.omega0, 1.5 * e.omega0);
    CHECK(std::abs(2.0 * M_PI / w / period - 1.0) < 0.02);
    const double tzc = analysis::zero_crossing_period(times, dev_full);
    CHECK(std::abs(tzc / period - 1.0) < 0.02);
    const auto fit = analysis::gaussian_envelope(times, dev_full, 0.02);
    CHECK(std::abs(fit.tau / b.sigma_t - 1.0) < 0.2);
  }
  SUBCASE("heuristic envelope tracks the full result") {
    for (std::size_t i = 0; i < times.size(); ++i)
      CHECK(std::abs(fo.heuristic(times[i]).rho_ee - full[i].rho_ee) < 10.0 * gmax);
    CHECK(populations_heuristic(2.0, b, e).rho_ee ==
          doctest::Approx(fo.heuristic(2.0).rho_ee).epsilon(1e-14));
  }
}

TEST_CASE("coherence transient has a Gaussian envelope of width sigma_t") {
  const auto e = emitter_of(0.8);
  const auto b = fig1_beam(e);
  const auto times = analysis::linspace(-3 * b.sigma_t, 6 * b.sigma_t, 401);
  const auto rho = density_matrix_series(times, b, e);
  std::vector<double> im;
  for (const auto& r : rho) im.push_back(r.rho_ge.imag());
  const auto fit = analysis::gaussian_envelope(times, im, 0.02);
  CHECK(std::abs(fit.tau / b.sigma_t - 1.0) < 0.2);
}

TEST_CASE("d_y never enters") {
  const auto e = emitter_of(kHalf, 0.2);
  auto ey = e;
  ey.d_y = 3.0;
  const auto b = fig1_beam(e);
  const auto r1 = reduced_density_matrix(1.5, b, e);
  const auto r2 = reduced_density_matrix(1.5, b, ey);
  CHECK(r1.rho_ee == r2.rho_ee);
  CHECK(r1.rho_ge == r2.rho_ge);
}

TEST_CASE("density matrix is independent of the worker count") {
  const auto e = emitter_of(kHalf, 0.2);
  const auto b = fig1_beam(e);
  const auto times = analysis::linspace(-10, 10, 17);
  setenv("FECOH_WORKERS", "1", 1);
  const auto a = density_matrix_series(times, b, e);
  setenv("FECOH_WORKERS", "3", 1);
  const auto c = density_matrix_series(times, b, e);
  unsetenv("FECOH_WORKERS");
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(a[i].rho_ee == c[i].rho_ee);
    CHECK(a[i].rho_ge == c[i].rho_ge);
  }
}
