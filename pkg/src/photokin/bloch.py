"""Kronig-Penney delta-comb bands, Bloch factors and densities of states.

The comb V(x) = W sum_n delta(x - n a) is described by the dimensionless
strength P = m W a / hbar^2.  Energies are handled through the reduced
wavenumber t = q a with E = E_a t|t|, E_a = hbar^2 / (2 m a^2); negative t
encodes the evanescent branch q = i|t|/a.  The Wigner-Seitz cell is
[-a/2, a/2) with the delta at its centre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq, minimize_scalar

from .bound import BoundState, IncompatibleStates, Oscillator, TransitionAmplitude, sample_on_grid
from .core.constants import DEFAULT_CONSTANTS, Constants
from .errors import (
    DegenerateBandsAtK,
    EdgeSingular,
    EnergyOutsideBand,
    OutOfZone,
    RootBracketingFailure,
    StateSpansMultipleCells,
)

SCAN_SAMPLES_PER_BAND = 4096
_XTOL = 1e-15


@dataclass(frozen=True)
class KronigPenney:
    a: float
    strength: float
    cell_points: int = 256
    const: Constants = DEFAULT_CONSTANTS

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("lattice constant must be positive")
        if self.cell_points < 128:
            raise ValueError("cell grid needs at least 128 points")
        if not math.isfinite(self.strength):
            raise ValueError("strength must be finite")

    @property
    def energy_unit(self) -> float:
        return self.const.hbar2_over_2m / self.a**2

    def g_of_t(self, t: float) -> float:
        """Right-hand side cos(qa) + P sin(qa)/(qa) as a function of t = qa."""
        P = self.strength
        if t > 0.0:
            return math.cos(t) + P * (math.sin(t) / t if t > 1e-8 else 1.0)
        if t < 0.0:
            kap = -t
            return math.cosh(kap) + P * (math.sinh(kap) / kap if kap > 1e-8 else 1.0)
        return 1.0 + P

    def t_of_energy(self, E: float) -> float:
        s = E / self.energy_unit
        return math.copysign(math.sqrt(abs(s)), s)

    def energy_of_t(self, t: float) -> float:
        return self.energy_unit * t * abs(t)

    def dispersion_rhs(self, E: float) -> float:
        return self.g_of_t(self.t_of_energy(E))

    def one_minus_plus_g(self, E: float) -> tuple[float, float]:
        """(1 - g, 1 + g) formed without cancellation near g = +-1."""
        t = self.t_of_energy(E)
        P = self.strength
        if t > 0.0:
            ratio = math.sin(t) / t if t > 1e-8 else 1.0
            return 2.0 * math.sin(0.5 * t) ** 2 - P * ratio, 2.0 * math.cos(0.5 * t) ** 2 + P * ratio
        if t < 0.0:
            kap = -t
            ratio = math.sinh(kap) / kap if kap > 1e-8 else 1.0
            return -2.0 * math.sinh(0.5 * kap) ** 2 - P * ratio, 2.0 * math.cosh(0.5 * kap) ** 2 + P * ratio
        return -P, 2.0 + P

    def dg_dE(self, E: float) -> float:
        s = E / self.energy_unit
        P = self.strength
        if abs(s) < 1e-3:
            S = 1.0 - s / 6.0 + s * s / 120.0 - s**3 / 5040.0
            dS = -1.0 / 6.0 + s / 60.0 - s * s / 1680.0
        else:
            z = math.sqrt(abs(s))
            if s > 0:
                C, S = math.cos(z), math.sin(z) / z
            else:
                C, S = math.cosh(z), math.sinh(z) / z
            dS = (C - S) / (2.0 * s)
        return (-0.5 * S + P * dS) / self.energy_unit


def _t_scan_range(model: KronigPenney, count: int) -> tuple[float, float]:
    t_min = -(abs(model.strength) + 10.0) if model.strength < 0 else 0.0
    return t_min, (count + 2) * math.pi


def _band_intervals(model: KronigPenney, count: int) -> list[tuple[float, float]]:
    """Reduced-wavenumber intervals [t_lo, t_hi] of the lowest `count` bands."""
    t_min, t_max = _t_scan_range(model, count)
    g = np.vectorize(model.g_of_t)
    for _ in range(8):
        n_samples = int(SCAN_SAMPLES_PER_BAND * (t_max - t_min) / math.pi) + 1
        ts = np.linspace(t_min, t_max, n_samples)
        gs = g(ts)
        edges = {}
        # t = m pi always solves |g| = 1 for m >= 1; t = 0 does when P = 0
        for m in range(0, int(t_max / math.pi) + 1):
            tm = m * math.pi
            if m == 0 and model.strength != 0.0:
                continue
            if tm >= t_min and abs(abs(model.g_of_t(tm)) - 1.0) < 1e-12:
                edges[tm] = True
        for target in (1.0, -1.0):
            d = gs - target
            idx = np.nonzero(d[:-1] * d[1:] < 0)[0]
            for j in idx:
                try:
                    root = brentq(lambda t: model.g_of_t(t) - target, ts[j], ts[j + 1],
                                  xtol=_XTOL, rtol=4 * np.finfo(float).eps)
                except ValueError as exc:
                    raise RootBracketingFailure(str(exc)) from exc
                if all(abs(root - e) > 1e-9 for e in edges):
                    edges[root] = True
            for j in np.nonzero(d == 0.0)[0]:
                if all(abs(ts[j] - e) > 1e-9 for e in edges):
                    edges[float(ts[j])] = True
        ordered = sorted(edges)
        bands = []
        for lo, hi in zip(ordered[:-1], ordered[1:]):
            if abs(model.g_of_t(0.5 * (lo + hi))) <= 1.0:
                bands.append((lo, hi))
        if len(bands) >= count:
            return bands[:count]
        t_max *= 2.0
    raise RootBracketingFailure(f"could not bracket {count} bands")


@dataclass(frozen=True, eq=False)
class BlochBand:
    model: KronigPenney
    n: int
    t_lo: float
    t_hi: float
    k_samples: NDArray[np.float64] = field(repr=False)
    E: NDArray[np.float64] = field(repr=False)

    @property
    def a(self) -> float:
        return self.model.a

    @property
    def const(self) -> Constants:
        return self.model.const

    @property
    def E_lo(self) -> float:
        return self.model.energy_of_t(self.t_lo)

    @property
    def E_hi(self) -> float:
        return self.model.energy_of_t(self.t_hi)

    @property
    def k_bottom(self) -> float:
        """|k| at the lower band edge (0 or pi/a)."""
        return 0.0 if self.model.g_of_t(self.t_lo) > 0 else math.pi / self.a

    def contains(self, E: float) -> bool:
        return self.E_lo <= E <= self.E_hi

    def _t_of_k(self, k: float) -> float:
        target = math.cos(k * self.a)
        model = self.model
        g_lo, g_hi = model.g_of_t(self.t_lo), model.g_of_t(self.t_hi)
        if (target - g_lo) * (target - g_hi) >= 0.0:
            return self.t_lo if abs(target - g_lo) <= abs(target - g_hi) else self.t_hi
        try:
            return brentq(lambda t: model.g_of_t(t) - target, self.t_lo, self.t_hi,
                          xtol=_XTOL, rtol=4 * np.finfo(float).eps)
        except ValueError as exc:
            raise RootBracketingFailure(str(exc)) from exc

    def energy(self, k: float) -> float:
        return self.model.energy_of_t(self._t_of_k(k))

    def energies(self, ks) -> NDArray[np.float64]:
        return np.array([self.energy(float(k)) for k in np.ravel(ks)])

    def k_of_energy(self, E: float) -> float:
        """Non-negative Bloch wavenumber with E_n(k) = E."""
        lower, upper = self.model.one_minus_plus_g(E)
        half = math.atan2(math.sqrt(max(lower, 0.0)), math.sqrt(max(upper, 0.0)))
        return 2.0 * half / self.a

    def slope_at_energy(self, E: float) -> float:
        """|dE/dk| at energy E, from sin(ka) = sqrt((1 - g)(1 + g))."""
        lower, upper = self.model.one_minus_plus_g(E)
        sin_ka = math.sqrt(max(lower, 0.0) * max(upper, 0.0))
        return abs(self.a * sin_ka / self.model.dg_dE(E))

    def slope(self, k: float) -> float:
        """dE/dk (eV nm), exact through implicit differentiation of the dispersion."""
        a = self.a
        sin_ka = math.sin(k * a)
        if k == 0.0 or abs(abs(k) * a - math.pi) < 1e-15:
            return 0.0
        E = self.energy(k)
        dg = self.model.dg_dE(E)
        if abs(dg) * self.model.energy_unit < 1e-7 and abs(sin_ka) < 1e-7:
            # gap closes here (free limit): both factors vanish, use the energy form
            return math.copysign(self.slope_at_energy(E), k * (1.0 if self.k_bottom == 0.0 else -1.0))
        return -a * sin_ka / dg

    # Bloch functions on the primitive interval (0, a) --------------------

    def _basis(self, t: float, y):
        a = self.a
        y = np.asarray(y, dtype=float)
        if t > 0.0:
            z = t * y / a
            return np.cos(z), np.sin(z) * a / t, -(t / a) * np.sin(z), np.cos(z)
        if t < 0.0:
            kap = -t
            z = kap * y / a
            return np.cosh(z), np.sinh(z) * a / kap, (kap / a) * np.sinh(z), np.cosh(z)
        one = np.ones_like(y)
        return one, y.copy(), 0.0 * y, one

    def coefficients(self, k: float) -> tuple[float, complex, complex]:
        """(t, c1, c2) with psi(y) = c1 C(y) + c2 S(y) on 0 <= y < a, cell-normalized."""
        a = self.a
        P = self.model.strength
        t = self._t_of_k(k)
        C, S, dC, _ = self._basis(t, np.array([a]))
        C, S, dC = float(C[0]), float(S[0]), float(dC[0])
        e = complex(math.cos(k * a), math.sin(k * a))
        mat = np.array([[C - e, S / a], [(-dC - 2.0 * P * e / a) * a, e - C]])
        _, _, vh = np.linalg.svd(mat)
        c1, c2a = np.conj(vh[-1])
        c2 = c2a / a
        scale = max(abs(c1), abs(c2a))
        phase = c1 / abs(c1) if abs(c1) > 1e-6 * scale else c2 / abs(c2)
        c1, c2 = c1 / phase, c2 / phase
        y, w = _cell_nodes(self.model)
        Cy, Sy, _, _ = self._basis(t, y)
        norm = math.sqrt(float(np.sum(w * np.abs(c1 * Cy + c2 * Sy) ** 2)))
        return t, c1 / norm, c2 / norm

    def psi(self, k: float, x, derivative: bool = False):
        """Cell-normalized Bloch function psi = exp(ikx) u at arbitrary x (nm)."""
        t, c1, c2 = self.coefficients(k)
        x = np.asarray(x, dtype=float)
        cells = np.floor(x / self.a)
        y = x - cells * self.a
        C, S, dC, dS = self._basis(t, y)
        phase = np.exp(1j * k * cells * self.a)
        if derivative:
            return phase * (c1 * dC + c2 * dS)
        return phase * (c1 * C + c2 * S)

    def u(self, k: float, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-1j * k * x) * self.psi(k, x)

    def cell_grid(self) -> NDArray[np.float64]:
        """Uniform samples x/a in [-1/2, 1/2)."""
        n = self.model.cell_points
        return -0.5 + np.arange(n) / n

    def bloch_factors(self) -> NDArray[np.complex128]:
        """u_n(k, x) for every sampled k on the uniform cell grid, shape (M, N)."""
        x = self.cell_grid() * self.a
        return np.array([self.u(float(k), x) for k in self.k_samples])


@lru_cache(maxsize=32)
def _cell_nodes(model: KronigPenney):
    """Gauss-Legendre nodes on (0, a); psi is analytic between the deltas."""
    xg, wg = np.polynomial.legendre.leggauss(model.cell_points)
    y = 0.5 * model.a * (xg + 1.0)
    w = 0.5 * model.a * wg
    return y, w


def zone_samples(a: float, count: int) -> NDArray[np.float64]:
    """`count` k points spanning (-pi/a, pi/a]."""
    return -math.pi / a + 2.0 * math.pi * (np.arange(count) + 1) / (a * count)


def solve_dispersion(model: KronigPenney, bands: int, k_resolution: int = 128) -> list[BlochBand]:
    if bands < 1:
        raise ValueError("need at least one band")
    if k_resolution < 64:
        raise ValueError("k_resolution must be at least 64")
    ks = zone_samples(model.a, k_resolution)
    ks.setflags(write=False)
    out = []
    for n, (t_lo, t_hi) in enumerate(_band_intervals(model, bands), start=1):
        proto = BlochBand(model, n, t_lo, t_hi, ks, np.empty(0))
        E = proto.energies(ks)
        E.setflags(write=False)
        out.append(BlochBand(model, n, t_lo, t_hi, ks, E))
    return out


def group_velocity(band: BlochBand, k: float) -> float:
    """dE/dk in eV nm; zero at k = 0 and at the zone boundary."""
    if abs(k) * band.a > math.pi * (1.0 + 1e-12):
        raise OutOfZone(f"k = {k!r} outside the first zone")
    return band.slope(k)


@dataclass(frozen=True)
class EnergySurface:
    """Solutions of E_n(k) = energy with weights 1/|dE/dk|."""

    energy: float
    points: tuple[tuple[float, float], ...]

    @property
    def total_weight(self) -> float:
        return sum(w for _, w in self.points)


def _edge_tolerance(band: BlochBand) -> float:
    return 1e-12 * max(band.E_hi - band.E_lo, 1e-300)


def constant_energy_set(band: BlochBand, E: float) -> EnergySurface:
    tol = _edge_tolerance(band)
    if E < band.E_lo - tol or E > band.E_hi + tol:
        raise EnergyOutsideBand(f"E = {E!r} eV outside band {band.n} [{band.E_lo!r}, {band.E_hi!r}]")
    if abs(E - band.E_lo) <= tol or abs(E - band.E_hi) <= tol:
        raise EdgeSingular(f"E = {E!r} eV is a band edge of band {band.n}")
    k = band.k_of_energy(E)
    w = 1.0 / band.slope_at_energy(E)
    return EnergySurface(E, ((k, w), (-k, w)))


def dos_band(band: BlochBand, E: float) -> float:
    """States per eV per cell per spin: (a/2 pi) sum 1/|dE/dk|."""
    try:
        surface = constant_energy_set(band, E)
    except EnergyOutsideBand:
        return 0.0
    except EdgeSingular:
        return math.inf
    return band.a / (2.0 * math.pi) * surface.total_weight


def free_electron_dos(E: float, const: Constants = DEFAULT_CONSTANTS) -> float:
    """3D free-electron states per eV per nm^3 per spin."""
    if E <= 0.0:
        return 0.0
    m, hbar = const.mass, const.hbar
    return math.sqrt(2.0 * m**3 * E) / (2.0 * math.pi**2 * hbar**3)


def local_dos(band: BlochBand, E: float, x) -> float | NDArray[np.float64]:
    """(a/2 pi) sum |u(k,x)|^2 / |dE/dk| at positions x (nm)."""
    x = np.asarray(x, dtype=float)
    try:
        surface = constant_energy_set(band, E)
    except EnergyOutsideBand:
        out = np.zeros_like(x)
        return out if out.ndim else 0.0
    total = sum(w * np.abs(band.u(k, x)) ** 2 for k, w in surface.points)
    out = band.a / (2.0 * math.pi) * total
    return out if np.ndim(out) else float(out)


# joint density of states ---------------------------------------------------

_JOINT_SCAN = 1024


@lru_cache(maxsize=64)
def _pair_scan(band_v: BlochBand, band_c: BlochBand):
    ks = np.linspace(0.0, math.pi / band_v.a, _JOINT_SCAN + 1)
    dE = band_c.energies(ks) - band_v.energies(ks)
    return ks, dE


def _transition_energy(band_v, band_c, k):
    return band_c.energy(k) - band_v.energy(k)


def joint_critical_points(band_v: BlochBand, band_c: BlochBand) -> list[tuple[float, float]]:
    """(k, dE) at the zone centre, boundary and interior extrema of the transition energy."""
    ks, dE = _pair_scan(band_v, band_c)
    crit = [(0.0, float(dE[0]))]
    for j in range(1, len(ks) - 1):
        if (dE[j] - dE[j - 1]) * (dE[j + 1] - dE[j]) < 0:
            sign = 1.0 if dE[j] < dE[j - 1] else -1.0
            res = minimize_scalar(lambda k: sign * _transition_energy(band_v, band_c, k),
                                  bounds=(ks[j - 1], ks[j + 1]), method="bounded",
                                  options={"xatol": 1e-13})
            crit.append((float(res.x), _transition_energy(band_v, band_c, float(res.x))))
    crit.append((float(ks[-1]), float(dE[-1])))
    return crit


def joint_support(band_v: BlochBand, band_c: BlochBand) -> tuple[float, float]:
    values = [e for _, e in joint_critical_points(band_v, band_c)]
    return min(values), max(values)


def joint_surface(band_v: BlochBand, band_c: BlochBand, dE: float) -> EnergySurface:
    """k points with E_c(k) - E_v(k) = dE, weights 1/|d(E_c - E_v)/dk|."""
    ks, scan = _pair_scan(band_v, band_c)
    lo, hi = joint_support(band_v, band_c)
    if dE < lo or dE > hi:
        return EnergySurface(dE, ())
    crit = joint_critical_points(band_v, band_c)
    tol = 1e-12 * max(hi - lo, 1e-300)
    if any(abs(dE - e) <= tol for _, e in crit):
        raise EdgeSingular(f"transition energy {dE!r} eV sits on a joint van Hove point")
    # monotone pieces between critical points
    nodes = [k for k, _ in crit]
    points = []
    for k0, k1 in zip(nodes[:-1], nodes[1:]):
        f0 = _transition_energy(band_v, band_c, k0) - dE
        f1 = _transition_energy(band_v, band_c, k1) - dE
        if f0 * f1 > 0:
            continue
        try:
            k = brentq(lambda kk: _transition_energy(band_v, band_c, kk) - dE, k0, k1,
                       xtol=1e-15, rtol=4 * np.finfo(float).eps)
        except ValueError as exc:
            raise RootBracketingFailure(str(exc)) from exc
        slope = abs(group_velocity(band_c, k) - group_velocity(band_v, k))
        points.append((k, 1.0 / slope))
        points.append((-k, 1.0 / slope))
    return EnergySurface(dE, tuple(points))


def joint_dos(band_v: BlochBand, band_c: BlochBand, dE: float) -> float:
    """Interband pairs per eV per cell per spin at transition energy dE."""
    try:
        surface = joint_surface(band_v, band_c, dE)
    except EdgeSingular:
        return math.inf
    return band_v.a / (2.0 * math.pi) * surface.total_weight


def integrate_edge_singular(func, lo: float, hi: float, nodes: int = 200) -> float:
    """Integral of func over [lo, hi] with inverse-square-root endpoint singularities.

    Uses E = lo + (hi - lo)(1 - cos theta)/2, which behaves like E_edge +- t^2
    near both ends and leaves a smooth integrand in theta.
    """
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    theta = 0.5 * math.pi * (xg + 1.0)
    w = 0.5 * math.pi * wg
    half = 0.5 * (hi - lo)
    E = lo + half * (1.0 - np.cos(theta))
    jac = half * np.sin(theta)
    return float(sum(wi * ji * func(float(Ei)) for Ei, wi, ji in zip(E, w, jac)))


# matrix elements -----------------------------------------------------------

def _embed(value: complex, axis: int):
    out = np.zeros(3, dtype=complex)
    out[axis] = value
    return out


def _momentum_cell(band_f: BlochBand, k_f: float, band_i: BlochBand, k_i: float) -> complex:
    """Cell integral of psi_f^* (-i hbar d/dx) psi_i over (0, a)."""
    y, w = _cell_nodes(band_f.model)
    pf = band_f.psi(k_f, y)
    dpi = band_i.psi(k_i, y, derivative=True)
    return complex(-1j * band_f.const.hbar * np.sum(w * np.conj(pf) * dpi))


def cell_dipole(band_f: BlochBand, band_i: BlochBand, k: float, axis: int = 0,
                k_i: float | None = None) -> TransitionAmplitude:
    """Length-form <u_f|x|u_i>_V through the velocity form divided by i m w_fi.

    `k_i` lets the initial state sit at a different wavevector (used for
    electron-hole recombination); by default both share `k`.
    """
    if band_f.model is not band_i.model and band_f.model != band_i.model:
        raise IncompatibleStates("bands from different lattices")
    if band_f.n == band_i.n and k_i is None:
        raise DegenerateBandsAtK("intraband cell dipole is not defined")
    ki = k if k_i is None else k_i
    const = band_f.const
    omega = (band_f.energy(k) - band_i.energy(ki)) / const.hbar
    if abs(omega) < 1e-9:
        raise DegenerateBandsAtK(f"bands {band_f.n} and {band_i.n} degenerate at k = {k!r}")
    p = _momentum_cell(band_f, k, band_i, ki)
    value = p / (1j * const.mass * omega)
    return TransitionAmplitude(_embed(value, axis), omega, "Length", {"velocity": p})


def bloch_state_prefactor(band: BlochBand) -> float:
    """sqrt(a / 2 pi): converts <u_n|x|i> into <n,k|x|i> for delta(k-k') normalized states."""
    return math.sqrt(band.a / (2.0 * math.pi))


def discrete_to_band_dipole(band: BlochBand, k: float, state: BoundState,
                            axis: int = 0) -> TransitionAmplitude:
    """<u_n(k)|x|i> with exp(ikx) -> 1 inside the cell.

    Positions are measured from the lattice site at the cell centre.  The
    delta-normalized <n,k|x|i> is bloch_state_prefactor(band) times this.
    """
    if isinstance(state.analytic, Oscillator):
        state = sample_on_grid(state, np.linspace(-0.5 * band.a, 0.5 * band.a, 2049))
    if not state.on_grid:
        raise IncompatibleStates("band dipoles need a grid or oscillator state")
    span = float(state.x[-1] - state.x[0])
    if span > band.a * (1.0 + 1e-9):
        raise StateSpansMultipleCells(f"state spans {span!r} nm > a = {band.a!r} nm")
    uk = band.u(k, state.x)
    value = np.trapezoid(np.conj(uk) * state.x * state.psi, state.x)
    omega = (band.energy(k) - state.energy) / band.const.hbar
    meta = {"normalization": "cell-normalized u_n; multiply by sqrt(a/2pi) for <n,k|x|i>"}
    return TransitionAmplitude(_embed(complex(value), axis), omega, "Length", meta)
