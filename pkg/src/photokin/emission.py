"""Spontaneous emission rates and radiative capture cross sections."""

from __future__ import annotations

import math
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
    group_velocity,
)
from .bound import BoundState, dipole_matrix_element
from .core.polarization import polarization_basis, polarization_sum
from .core.spin import spin_average
from .errors import NonDecayingPair, ZeroCurrent
from .table import SpectrumTable


@dataclass(frozen=True)
class EmissionResult:
    kind: str
    value: float
    photon_energy: float  # eV
    metadata: dict = field(default_factory=dict, compare=False)


def _transverse_eps(eps, k_hat):
    eps = np.asarray(eps, dtype=complex)
    k_hat = polarization_basis(k_hat).k_hat
    if abs(np.dot(k_hat, eps)) > 1e-9 * max(np.linalg.norm(eps), 1e-300):
        raise ValueError("polarization must be transverse to the photon direction")
    return eps


def _angular_factor(d, k_hat, eps) -> float:
    if eps is None:
        return polarization_sum(d, k_hat)
    return abs(np.vdot(_transverse_eps(eps, k_hat), d)) ** 2


def _photon_energy(omega: float, const, recoil=None) -> float:
    if recoil is not None:
        from .recoil import recoil_shift

        omega = recoil_shift(omega, recoil, const)
    return const.hbar * omega


def emission_dd_differential(f: BoundState, i: BoundState, k_hat, eps=None,
                             recoil=None) -> EmissionResult:
    """dGamma/dOmega (1/fs/sr) for photon direction k_hat.

    With eps=None both polarizations are summed.  The rate is spin
    independent, so the spin average of the two diagonal channels is the
    channel value itself.
    """
    if i.energy <= f.energy:
        raise NonDecayingPair(f"E_i = {i.energy!r} eV does not lie above E_f = {f.energy!r} eV")
    const = i.const
    amp = dipole_matrix_element(f, i)
    omega = -amp.omega_fi
    rate = const.alpha_s / (2.0 * math.pi * const.c**2) * omega**3 * _angular_factor(amp.value, k_hat, eps)
    rate = spin_average([rate, rate], "SpinPreserving")
    kind = "DifferentialUnpolarized" if eps is None else "DifferentialPolarized"
    return EmissionResult(kind, rate, _photon_energy(omega, const, recoil),
                          {"initial": i.label, "final": f.label})


def _einstein(omega: float, strength: float, const) -> float:
    return 4.0 * const.alpha_s / (3.0 * const.c**2) * omega**3 * strength


def einstein_A(f: BoundState, i: BoundState, recoil=None) -> EmissionResult:
    """Total spontaneous decay rate i -> f in 1/fs (metadata carries 1/s)."""
    if i.energy <= f.energy:
        raise NonDecayingPair(f"E_i = {i.energy!r} eV does not lie above E_f = {f.energy!r} eV")
    const = i.const
    amp = dipole_matrix_element(f, i)
    omega = -amp.omega_fi
    A = _einstein(omega, amp.strength, const)
    return EmissionResult("TotalUnpolarized", A, _photon_energy(omega, const, recoil),
                          {"initial": i.label, "final": f.label, "per_second": A * 1e15})


def band_current(band: BlochBand, k: float) -> float:
    """Cell-averaged probability current per unit k of a delta-normalized Bloch state.

    (1/a) int (hbar/m) Im(psi^* psi') dx with psi = sqrt(a/2pi) exp(ikx) u,
    evaluated by quadrature over the primitive cell (nm/fs).
    """
    from .bloch import _cell_nodes

    y, w = _cell_nodes(band.model)
    psi = band.psi(k, y)
    dpsi = band.psi(k, y, derivative=True)
    const = band.const
    flux = const.hbar / const.mass * float(np.sum(w * np.imag(np.conj(psi) * dpsi)))
    return flux / (2.0 * math.pi)


def _capture_current(band: BlochBand, k: float) -> float:
    if group_velocity(band, k) == 0.0:
        raise ZeroCurrent(f"band {band.n} has zero group velocity at k = {k!r}")
    current = abs(band_current(band, k))
    if current == 0.0:
        raise ZeroCurrent(f"band {band.n} carries no current at k = {k!r}")
    return current


def hole_capture_cross_section(i: BoundState, band: BlochBand, k_e: float,
                               axis: int = 0) -> EmissionResult:
    """Radiative capture of a band hole at k_e by the occupied discrete state i.

    In one dimension the result is a dimensionless capture probability per
    unit flux (the reduced analogue of an area).
    """
    E_band = band.energy(k_e)
    if i.energy <= E_band:
        raise NonDecayingPair(f"E_i = {i.energy!r} eV not above E_n(k) = {E_band!r} eV")
    const = i.const
    current = _capture_current(band, k_e)
    amp = discrete_to_band_dipole(band, k_e, i, axis)
    strength = bloch_state_prefactor(band) ** 2 * amp.strength
    omega = (i.energy - E_band) / const.hbar
    sigma = _einstein(omega, strength, const) / current
    return EmissionResult("CaptureCrossSection", sigma, const.hbar * omega,
                          {"initial": i.label, "band": band.n, "k_e": k_e, "current": current})


def electron_capture_cross_section(f: BoundState, band: BlochBand, k_e: float,
                                   axis: int = 0) -> EmissionResult:
    """Radiative capture of a band electron at k_e into the empty discrete state f."""
    E_band = band.energy(k_e)
    if E_band <= f.energy:
        raise NonDecayingPair(f"E_n(k) = {E_band!r} eV not above E_f = {f.energy!r} eV")
    const = f.const
    current = _capture_current(band, k_e)
    amp = discrete_to_band_dipole(band, k_e, f, axis)
    strength = bloch_state_prefactor(band) ** 2 * amp.strength
    omega = (E_band - f.energy) / const.hbar
    sigma = _einstein(omega, strength, const) / current
    return EmissionResult("CaptureCrossSection", sigma, const.hbar * omega,
                          {"final": f.label, "band": band.n, "k_e": k_e, "current": current})


def emission_dc_rate_density(i: BoundState, band: BlochBand, k_photon: float,
                             axis: int = 0) -> float:
    """dGamma/dk (nm/fs) for emission of a photon of wavenumber k into band states."""
    const = i.const
    E = i.energy - const.hbar_c * k_photon
    try:
        surface = constant_energy_set(band, E)
    except EnergyOutsideBand:
        return 0.0
    except EdgeSingular:
        return math.inf
    total = sum(w * discrete_to_band_dipole(band, k, i, axis).strength for k, w in surface.points)
    total *= bloch_state_prefactor(band) ** 2
    return 4.0 * const.alpha_s / 3.0 * const.hbar * const.c**2 * k_photon**3 * total


def emission_dc_spectrum(i: BoundState, band: BlochBand, k_photon_grid,
                         axis: int = 0) -> SpectrumTable:
    """Photon spectrum of a discrete state decaying into a band (1D surface sums)."""
    ks = np.asarray(k_photon_grid, dtype=float)
    if np.any(ks <= 0):
        raise ValueError("photon wavenumbers must be positive")
    if i.energy <= band.E_lo:
        raise NonDecayingPair(f"E_i = {i.energy!r} eV lies below band {band.n}")
    rates = np.array([emission_dc_rate_density(i, band, float(k), axis) for k in ks])
    const = i.const
    finite = np.where(np.isfinite(rates), rates, 0.0)
    total = float(np.trapezoid(finite, ks)) if ks.size > 1 else 0.0
    meta = {
        "process": "emission.dc",
        "initial": i.label,
        "band": str(band.n),
        "total_rate_per_fs": repr(total),
    }
    return SpectrumTable({"photon_energy_eV": const.hbar_c * ks, "rate_per_fs_per_k": rates}, meta)


def emission_cc(band_i: BlochBand, band_f: BlochBand, k_e: float, k_hat=None, eps=None,
                axis: int = 0) -> EmissionResult:
    """Direct interband emission at fixed k_e.

    Without k_hat the total rate (both polarizations, all directions) is
    returned; with k_hat the differential rate per solid angle, polarized if
    eps is given.
    """
    E_i, E_f = band_i.energy(k_e), band_f.energy(k_e)
    if E_i <= E_f:
        raise NonDecayingPair(f"band {band_i.n} lies below band {band_f.n} at k = {k_e!r}")
    const = band_i.const
    amp = cell_dipole(band_f, band_i, k_e, axis)
    omega = -amp.omega_fi
    meta = {"initial_band": band_i.n, "final_band": band_f.n, "k_e": k_e}
    if k_hat is None:
        return EmissionResult("TotalUnpolarized", _einstein(omega, amp.strength, const),
                              const.hbar * omega, meta)
    rate = const.alpha_s / (2.0 * math.pi * const.c**2) * omega**3 * _angular_factor(amp.value, k_hat, eps)
    kind = "DifferentialUnpolarized" if eps is None else "DifferentialPolarized"
    return EmissionResult(kind, rate, const.hbar * omega, meta)
