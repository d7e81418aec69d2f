"""Photon absorption cross sections."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .bloch import (
    BlochBand,
    EdgeSingular,
    EnergyOutsideBand,
    bloch_state_prefactor,
    cell_dipole,
    constant_energy_set,
    discrete_to_band_dipole,
    dos_band,
    joint_dos,
    joint_surface,
)
from .bound import BoundState, dipole_matrix_element
from .core.lineshape import Lineshape, lineshape_eval
from .core.polarization import angle_average_dipole
from .errors import BroadLineWarning, EnergyOrdering


@dataclass(frozen=True)
class AbsorptionResult:
    """sigma holds the surface-integral (or exact) value, sigma_dos the
    constant-matrix-element density-of-states estimate when one exists."""

    sigma: float
    photon_energy: float
    approximation: str = "SurfaceIntegral"
    sigma_dos: float | None = None
    metadata: dict = field(default_factory=dict, compare=False)


def _coupling(eps, vec) -> float:
    """|eps . M|^2 with the bilinear (absorption) contraction."""
    return abs(np.dot(np.asarray(eps, dtype=complex), vec)) ** 2


def abs_dd(f: BoundState, i: BoundState, eps, photon_k: float | None, shape: Lineshape,
           angle_averaged: bool = False, broad_line_factor: bool = False) -> AbsorptionResult:
    """Discrete-discrete absorption.

    A Delta lineshape yields the integrated line strength (nm^2/fs), a
    Lorentzian the cross section at photon wavenumber photon_k (nm^2).
    """
    if f.energy <= i.energy:
        raise EnergyOrdering(f"E_f = {f.energy!r} eV must exceed E_i = {i.energy!r} eV")
    const = i.const
    amp = dipole_matrix_element(f, i)
    omega = amp.omega_fi
    m2 = angle_average_dipole(amp.value) if angle_averaged else _coupling(eps, amp.value)
    strength = 4.0 * math.pi**2 * const.alpha_s * omega * m2
    meta = {"initial": i.label, "final": f.label, "angle_averaged": angle_averaged}
    if shape.is_delta:
        return AbsorptionResult(strength, const.hbar * omega, "LineStrength", None, meta)
    if shape.gamma / omega > 0.1:
        meta["warning"] = "BroadLineWarning"
        warnings.warn(f"Gamma/omega = {shape.gamma / omega:.3g} > 0.1", BroadLineWarning, stacklevel=2)
    ck = const.c * photon_k
    sigma = strength * lineshape_eval(shape, omega - ck)
    if broad_line_factor:
        sigma *= omega / ck
    return AbsorptionResult(sigma, const.hbar * ck, "Lorentz", None, meta)


def _band_absorption(band: BlochBand, E_band: float, photon_k: float, element, labels):
    const = band.const
    photon_energy = const.hbar_c * photon_k
    try:
        surface = constant_energy_set(band, E_band)
    except EnergyOutsideBand:
        return AbsorptionResult(0.0, photon_energy, "SurfaceIntegral", 0.0, labels)
    except EdgeSingular:
        return AbsorptionResult(math.inf, photon_energy, "SurfaceIntegral", math.inf, labels)
    pref = 4.0 * math.pi**2 * const.alpha_s * photon_energy
    norm = bloch_state_prefactor(band) ** 2
    couplings = [element(k) for k, _ in surface.points]
    surface_sum = norm * sum(c * w for c, (_, w) in zip(couplings, surface.points))
    sigma = pref * surface_sum
    sigma_dos = pref * couplings[0] * dos_band(band, E_band)
    spread = (max(couplings) - min(couplings)) / max(max(couplings), 1e-300)
    meta = dict(labels, matrix_element_spread=spread)
    return AbsorptionResult(sigma, photon_energy, "SurfaceIntegral", sigma_dos, meta)


def abs_dc_band(i: BoundState, band: BlochBand, eps, photon_k: float, axis: int = 0) -> AbsorptionResult:
    """Discrete state -> band (donor ionization)."""
    E = i.energy + band.const.hbar_c * photon_k

    def element(k):
        return _coupling(eps, discrete_to_band_dipole(band, k, i, axis).value)

    return _band_absorption(band, E, photon_k, element, {"initial": i.label, "band": band.n})


def abs_cd_band(f: BoundState, band: BlochBand, eps, photon_k: float, axis: int = 0) -> AbsorptionResult:
    """Band -> discrete state (acceptor filling)."""
    E = f.energy - band.const.hbar_c * photon_k

    def element(k):
        return _coupling(eps, np.conj(discrete_to_band_dipole(band, k, f, axis).value))

    return _band_absorption(band, E, photon_k, element, {"final": f.label, "band": band.n})


def abs_cc_interband(band_v: BlochBand, band_c: BlochBand, eps, photon_k: float,
                     axis: int = 0) -> AbsorptionResult:
    """Interband absorption per lattice cell at photon wavenumber photon_k.

    Surface path: 4 pi^2 alpha hbar ck (a/2pi) sum |eps.M|^2 / |d(E_c-E_v)/dk|;
    joint-DOS path: 4 pi^2 alpha hbar ck |eps.M|^2 rho_cv with M taken at the
    first solution point.
    """
    const = band_v.const
    photon_energy = const.hbar_c * photon_k
    labels = {"valence_band": band_v.n, "conduction_band": band_c.n}
    try:
        surface = joint_surface(band_v, band_c, photon_energy)
    except EdgeSingular:
        return AbsorptionResult(math.inf, photon_energy, "SurfaceIntegral", math.inf, labels)
    if not surface.points:
        return AbsorptionResult(0.0, photon_energy, "SurfaceIntegral", 0.0, labels)
    pref = 4.0 * math.pi**2 * const.alpha_s * photon_energy
    couplings = [_coupling(eps, cell_dipole(band_c, band_v, k, axis).value) for k, _ in surface.points]
    norm = band_v.a / (2.0 * math.pi)
    sigma = pref * norm * sum(c * w for c, (_, w) in zip(couplings, surface.points))
    sigma_dos = pref * couplings[0] * joint_dos(band_v, band_c, photon_energy)
    spread = (max(couplings) - min(couplings)) / max(max(couplings), 1e-300)
    return AbsorptionResult(sigma, photon_energy, "SurfaceIntegral", sigma_dos,
                            dict(labels, matrix_element_spread=spread))
