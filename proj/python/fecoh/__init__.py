"""Coherent interaction of a free-electron wavepacket with a two-level emitter.

Units throughout: energy eV, length nm, time fs, charge e. Arrays are numpy
float64 (complex128 for amplitudes and couplings).
"""

from ._core import (
    BeamParams,
    ConvergenceError,
    CouplingValue,
    DomainError,
    EmitterParams,
    ParseError,
    QuadratureConfig,
    ResolutionError,
    RunError,
    Scenario,
    SpectralCoupling,
    ValidationError,
    ZGridSpec,
    __version__,
    builtin_names,
    builtin_scenario,
    constants,
    default_cutoff_length,
    density_matrix_series,
    dipole_debye_to_internal,
    eels_probability,
    g_direct,
    g_direct_many,
    g_infinity,
    g_semianalytic,
    gamma_net,
    load_scenario,
    lorentz_gamma,
    omega_from_wavelength,
    parse_scenario,
    populations_firstorder,
    run,
    sweep,
    velocity_from_kinetic_energy,
    zlp_gamma_net_series,
    zlp_oscillation_firstorder,
    zlp_scale,
)

__all__ = [name for name in dir() if not name.startswith("_")]
