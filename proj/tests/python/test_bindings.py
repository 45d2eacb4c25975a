"""Smoke tests for the Python module."""

import cmath
import json
import math

import numpy as np
import pytest

import fecoh


@pytest.fixture
def setup():
    beam = fecoh.BeamParams.from_sigma_t(2.0, 10.0, 2.0)
    emitter = fecoh.EmitterParams.from_wavelength(30.0, 0.0, 30.0, 560.0,
                                                  a=math.sqrt(0.5), b=math.sqrt(0.5))
    return beam, emitter


def test_units():
    beta = fecoh.velocity_from_kinetic_energy(115.0)
    assert beta == pytest.approx(0.578, abs=5e-4)
    omega0, hw = fecoh.omega_from_wavelength(560.0)
    assert hw == pytest.approx(2 * math.pi * fecoh.constants.hbar_c / 560.0)
    assert omega0 == pytest.approx(hw / fecoh.constants.hbar)


def test_coupling_evaluators_agree(setup):
    beam, emitter = setup
    g_inf = fecoh.g_infinity(beam, emitter)
    # Long after passage only a phase factor separates g from its limit.
    late = fecoh.g_semianalytic(1e3 * beam.r_perp, 0.0, beam, emitter)
    assert late.magnitude == pytest.approx(abs(g_inf), rel=1e-4)
    z = np.linspace(-20.0, 20.0, 7)
    t = np.zeros_like(z)
    many = fecoh.g_direct_many(z, t, beam, emitter)
    assert many.dtype == np.complex128
    for zi, gi in zip(z, many):
        assert abs(fecoh.g_semianalytic(zi, 0.0, beam, emitter).g - gi) < 1e-6
    sc = fecoh.SpectralCoupling(beam, emitter)
    assert sc.g_inf == g_inf
    assert cmath.isfinite(sc.g_c(0.5 * emitter.omega0))


def test_density_matrix_and_spectrum(setup):
    beam, emitter = setup
    t = np.linspace(0.0, 20.0, 5)
    rho = fecoh.density_matrix_series(t, beam, emitter)
    np.testing.assert_allclose(rho["rho_gg"] + rho["rho_ee"], 1.0, atol=1e-12)
    assert np.all(np.abs(rho["rho_ge"]) ** 2 <= rho["rho_gg"] * rho["rho_ee"] + 1e-12)

    e = np.linspace(-3 * emitter.hbar_omega0, 3 * emitter.hbar_omega0, 301)
    s = fecoh.eels_probability(e, 5.0, beam, emitter)
    np.testing.assert_allclose(s["dPdE"], s["loss"] + s["gain"], rtol=1e-12)
    assert np.trapezoid(s["dPdE"], e) == pytest.approx(1.0, abs=1e-3)
    np.testing.assert_allclose(fecoh.gamma_net(e, 5.0, beam, emitter), s["loss"] - s["gain"],
                               rtol=1e-12, atol=1e-14)


def test_errors_map_to_python_exceptions(setup):
    beam, emitter = setup
    with pytest.raises(ValueError):
        fecoh.BeamParams.from_sigma_t(-1.0, 10.0, 2.0)
    with pytest.raises(fecoh.ParseError):
        fecoh.parse_scenario("beam.kinetic_energy_kev 2\n")
    coarse = fecoh.ZGridSpec()
    coarse.max_panel_width = 400.0
    with pytest.raises(fecoh.ResolutionError):
        fecoh.eels_probability(np.array([0.0]), 0.0, beam, emitter, coarse)


def test_scenario_run(tmp_path):
    names = fecoh.builtin_names()
    assert "fig2a" in names
    s = fecoh.builtin_scenario("fig1b")
    s.set("grid.time.points", "5")
    r = s.resolved()
    assert "beam.sigma_t_fs" in r.defaults_applied
    assert len(r.times()) == 5
    m = fecoh.run(s, tmp_path)
    assert json.loads(m["json"])["scenario"] == "fig1b"
    assert (tmp_path / "populations.csv").exists()
