"""Recoil frequency shift and toy electron-hole recombination."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .bloch import BlochBand, cell_dipole
from .core.constants import DEFAULT_CONSTANTS, Constants
from .core.lineshape import lorentz
from .emission import band_current
from .errors import (
    DegenerateKinematics,
    EnergyOrdering,
    GridMismatch,
    RelativisticRegimeWarning,
    ZeroCurrent,
)

RELATIVISTIC_THRESHOLD = 0.01


@dataclass(frozen=True)
class RecoilContext:
    total_mass_energy: float  # M c^2 in eV
    K: float = 0.0  # centre-of-mass wavenumber, 1/nm
    theta: float = 0.0  # angle between K and the photon direction

    def __post_init__(self):
        if not self.total_mass_energy > 0:
            raise ValueError("total mass energy must be positive")


def recoil_ratio(ctx: RecoilContext, const: Constants = DEFAULT_CONSTANTS) -> float:
    return const.hbar_c * abs(ctx.K) / ctx.total_mass_energy


def recoil_shift(omega_if: float, ctx: RecoilContext, const: Constants = DEFAULT_CONSTANTS) -> float:
    """Photon frequency ck (1/fs) emitted by a moving, recoiling atom."""
    if ctx.total_mass_energy < const.electron_mass_energy:
        raise ValueError("total mass energy below the electron rest energy")
    ratio = recoil_ratio(ctx, const)
    if ratio > RELATIVISTIC_THRESHOLD:
        warnings.warn(f"hbar K c / M c^2 = {ratio:.3g} exceeds {RELATIVISTIC_THRESHOLD}",
                      RelativisticRegimeWarning, stacklevel=2)
    doppler = ratio * math.cos(ctx.theta) * omega_if
    recoil = const.hbar * omega_if**2 / (2.0 * ctx.total_mass_energy)
    return omega_if + doppler - recoil


def recoil_energy_shift(photon_energy: float, ctx: RecoilContext,
                        const: Constants = DEFAULT_CONSTANTS) -> float:
    """Photon energy change in eV for a transition of energy photon_energy."""
    omega = photon_energy / const.hbar
    return const.hbar * (recoil_shift(omega, ctx, const) - omega)


@dataclass(frozen=True)
class EhPair:
    k_i: float  # conduction electron
    k_f: float  # valence hole
    band_c: BlochBand
    band_v: BlochBand
    gamma: float  # 1/fs

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("linewidth gamma must be positive")
        lim = math.pi / self.band_c.a * (1.0 + 1e-12)
        if abs(self.k_i) > lim or abs(self.k_f) > lim:
            raise ValueError("wavevectors must lie in the first zone")


def eh_recombination_cross_section(pair: EhPair, eps=None, angle_averaged: bool = False,
                                   axis: int = 0) -> float:
    """Toy 1D recombination cross section gated by a Lorentz profile.

    The photon wavenumber along the chain is |k_i - k_f|; the transverse
    photon direction is left free, so eps is not constrained by it.
    """
    band_c, band_v = pair.band_c, pair.band_v
    const = band_c.const
    dk = abs(pair.k_i - pair.k_f)
    if dk < 1e-12:
        raise DegenerateKinematics("photon wavenumber |k_i - k_f| vanishes")
    w_c = band_c.energy(pair.k_i) / const.hbar
    w_v = band_v.energy(pair.k_f) / const.hbar
    if w_c <= w_v:
        raise EnergyOrdering("conduction state does not lie above the valence state")
    current = abs(band_current(band_c, pair.k_i))
    if current == 0.0 or band_c.slope(pair.k_i) == 0.0:
        raise ZeroCurrent(f"no electron current at k = {pair.k_i!r}")
    amp = cell_dipole(band_v, band_c, pair.k_f, axis, k_i=pair.k_i)
    if angle_averaged:
        pref, m2 = const.alpha_s / (6.0 * math.pi), amp.strength
    else:
        if eps is None:
            raise ValueError("polarized cross section needs eps")
        pref, m2 = const.alpha_s / (2.0 * math.pi), abs(np.vdot(np.asarray(eps, dtype=complex), amp.value)) ** 2
    gate = lorentz(const.c * dk + w_v - w_c, pair.gamma)
    return pref * (w_c - w_v) ** 2 / dk * m2 / current * gate


def eh_on_shell_partner(band_c: BlochBand, band_v: BlochBand, k_i: float, direction: int = 1) -> float:
    """Hole wavevector k_f = k_i - direction*delta with c delta = w_c(k_i) - w_v(k_f)."""
    const = band_c.const
    w_c = band_c.energy(k_i) / const.hbar
    kmax = math.pi / band_c.a

    def mismatch(delta):
        k_f = k_i - direction * delta
        return const.c * delta - (w_c - band_v.energy(k_f) / const.hbar)

    hi = kmax - direction * k_i + kmax
    delta = brentq(mismatch, 0.0, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps)
    return k_i - direction * delta


def eh_rate_per_volume(sigma_field, j_e_field, rho_h_field, k_i_grid, k_f_grid=None) -> float:
    """Trapezoid double integral of sigma(k_i,k_f) |j_e(k_i)| |rho_h(k_f)|."""
    sigma = np.asarray(sigma_field, dtype=float)
    j_e = np.asarray(j_e_field, dtype=float)
    rho_h = np.asarray(rho_h_field, dtype=float)
    k_i = np.asarray(k_i_grid, dtype=float)
    k_f = k_i if k_f_grid is None else np.asarray(k_f_grid, dtype=float)
    if sigma.shape != (k_i.size, k_f.size) or j_e.shape != k_i.shape or rho_h.shape != k_f.shape:
        raise GridMismatch(
            f"sigma {sigma.shape}, j_e {j_e.shape}, rho_h {rho_h.shape} on grids {k_i.size}x{k_f.size}"
        )
    inner = np.trapezoid(sigma * np.abs(rho_h)[None, :], k_f, axis=1)
    return float(np.trapezoid(inner * np.abs(j_e), k_i))
