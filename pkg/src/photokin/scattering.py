"""Second-order photon scattering and its Kramers-Heisenberg approximations.

External and intermediate states are either BoundState objects or
BandPoint(band, k) Bloch states.  Matrix elements involving Bloch states use
cell-normalized u_n; the sqrt(a/2pi) factor of each external Bloch state is
applied where the surface sums are formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .bloch import (
    BlochBand,
    EdgeSingular,
    EnergyOutsideBand,
    cell_dipole,
    constant_energy_set,
    discrete_to_band_dipole,
    dos_band,
    joint_dos,
    joint_surface,
)
from .bound import BoundState, dipole_matrix_element, momentum_matrix_element
from .core.lineshape import lorentz
from .errors import EmptyIntermediateSet, OffShellKinematics


class BandPoint(NamedTuple):
    band: BlochBand
    k: float


@dataclass(frozen=True)
class IntermediateSet:
    discrete: tuple = ()
    bands: tuple = ()
    eta: float | None = None  # 1/fs; default 1e-4 x smallest |w_vi|
    k_nodes: int = 256  # zone quadrature for band intermediates between discrete states
    window: float | None = None  # eV half-width around E_i + hbar ck; None keeps every state

    def __post_init__(self):
        object.__setattr__(self, "discrete", tuple(self.discrete))
        object.__setattr__(self, "bands", tuple(self.bands))
        if self.eta is not None and not self.eta > 0:
            raise ValueError("eta must be positive")

    @property
    def empty(self) -> bool:
        return not self.discrete and not self.bands


@dataclass(frozen=True)
class ScatterKinematics:
    k_in: float
    k_out: float
    eps_in: np.ndarray
    eps_out: np.ndarray
    k_hat_in: tuple = (0.0, 0.0, 1.0)
    k_hat_out: tuple = (0.0, 1.0, 0.0)

    def __post_init__(self):
        if not (self.k_in > 0 and self.k_out > 0):
            raise ValueError("photon wavenumbers must be positive")
        for eps, kh in ((self.eps_in, self.k_hat_in), (self.eps_out, self.k_hat_out)):
            e = np.asarray(eps, dtype=complex)
            if abs(np.dot(np.asarray(kh, dtype=float), e)) > 1e-9 * max(np.linalg.norm(e), 1e-300):
                raise ValueError("polarizations must be transverse to their photon directions")
        object.__setattr__(self, "eps_in", np.asarray(self.eps_in, dtype=complex))
        object.__setattr__(self, "eps_out", np.asarray(self.eps_out, dtype=complex))

    @classmethod
    def on_shell(cls, k_in: float, omega_fi: float, c: float, eps_in, eps_out,
                 k_hat_in=(0.0, 0.0, 1.0), k_hat_out=(0.0, 1.0, 0.0)) -> "ScatterKinematics":
        """Outgoing wavenumber fixed by w_fi = c (k_in - k_out)."""
        k_out = k_in - omega_fi / c
        if k_out <= 0:
            raise OffShellKinematics(f"no outgoing photon: k_out = {k_out!r}")
        return cls(k_in, k_out, eps_in, eps_out, k_hat_in, k_hat_out)


@dataclass(frozen=True)
class ScatterResult:
    value: float
    kind: str
    eta: float
    detuning: float
    near_resonant: bool
    truncation_bound: float = 0.0
    dos_value: float | None = None
    metadata: dict = field(default_factory=dict, compare=False)


def _energy(s) -> float:
    return s.band.energy(s.k) if isinstance(s, BandPoint) else s.energy


def _const(s):
    return s.band.const if isinstance(s, BandPoint) else s.const


def _same(a, b) -> bool:
    if isinstance(a, BandPoint) and isinstance(b, BandPoint):
        return a.band is b.band and a.k == b.k
    return a is b


@lru_cache(maxsize=8192)
def _xvec(a, b, axis: int):
    """Length-form <a|x|b> as a 3-vector (Bloch states cell-normalized)."""
    if isinstance(a, BandPoint):
        if isinstance(b, BandPoint):
            if a.k != b.k:
                raise ValueError("interband elements need a common k")
            return cell_dipole(a.band, b.band, a.k, axis).value
        return discrete_to_band_dipole(a.band, a.k, b, axis).value
    if isinstance(b, BandPoint):
        return np.conj(discrete_to_band_dipole(b.band, b.k, a, axis).value)
    return dipole_matrix_element(a, b, axis).value


def _expand(vset: IntermediateSet, externals) -> list[tuple[object, float]]:
    items = [(v, 1.0) for v in vset.discrete]
    bloch_ext = [s for s in externals if isinstance(s, BandPoint)]
    if bloch_ext:
        k_e = bloch_ext[0].k
        for b in vset.bands:
            v = BandPoint(b, k_e)
            # the intraband position element is not defined; such states are skipped
            if not any(_same(v, s) for s in bloch_ext):
                items.append((v, 1.0))
    else:
        xg, wg = np.polynomial.legendre.leggauss(vset.k_nodes)
        for b in vset.bands:
            kmax = math.pi / b.a
            for x, w in zip(xg, wg):
                items.append((BandPoint(b, float(x * kmax)), w * kmax * b.a / (2.0 * math.pi)))
    return items


def _default_eta(omegas) -> float:
    finite = [abs(w) for w in omegas if abs(w) > 0]
    if not finite:
        raise EmptyIntermediateSet("no intermediate state with nonzero transition frequency")
    return 1e-4 * min(finite)


def _dispersion(f, i, vset, kin, axis, full=False, resonant_only=False, ck=None, ck_out=None):
    """Resonant and antiresonant sums plus diagnostics."""
    if vset.empty:
        raise EmptyIntermediateSet("intermediate set is empty")
    const = _const(i)
    hbar = const.hbar
    ck = const.c * kin.k_in if ck is None else ck
    ck_out = const.c * kin.k_out if ck_out is None else ck_out
    e_in = kin.eps_in
    e_out = np.conj(kin.eps_out)
    E_i, E_f = _energy(i), _energy(f)
    items = _expand(vset, (i, f))
    omega_vi = [(_energy(v) - E_i) / hbar for v, _ in items]
    eta = vset.eta if vset.eta is not None else _default_eta(omega_vi)

    res = anti = 0.0 + 0.0j
    tail = 0.0
    target = E_i + hbar * ck
    for (v, w), w_vi in zip(items, omega_vi):
        x_fv = _xvec(f, v, axis)
        x_vi = _xvec(v, i, axis)
        weight = w * ((E_f - _energy(v)) / hbar * w_vi if full else 1.0)
        r_term = weight * np.dot(e_out, x_fv) * np.dot(e_in, x_vi) / (w_vi - ck - 1j * eta)
        a_term = 0.0 if resonant_only else (
            weight * np.dot(e_in, x_fv) * np.dot(e_out, x_vi) / (w_vi + ck_out - 1j * eta)
        )
        if vset.window is not None and not isinstance(v, BandPoint) and abs(_energy(v) - target) > vset.window:
            tail += abs(r_term) + abs(a_term)
            continue
        res += r_term
        anti += a_term
    detuning = min(abs(w - ck) for w in omega_vi) / ck
    return res, anti, eta, detuning, tail


def _kronecker(f, i) -> float:
    return 1.0 if _same(f, i) else 0.0


def _check_on_shell(f, i, kin):
    const = _const(i)
    omega_fi = (_energy(f) - _energy(i)) / const.hbar
    transfer = const.c * (kin.k_in - kin.k_out)
    scale = max(abs(omega_fi), const.c * kin.k_in)
    if abs(omega_fi - transfer) > 1e-9 * scale:
        raise OffShellKinematics(f"w_fi = {omega_fi!r} but c(k - k') = {transfer!r}")


def _result(value, kind, eta, detuning, tail, dos_value=None, **meta):
    return ScatterResult(float(value), kind, float(eta), float(detuning), bool(detuning < 0.1),
                         float(tail), dos_value, meta)


def scatter_full_second_order(f, i, kin: ScatterKinematics, vset: IntermediateSet,
                              axis: int = 0) -> ScatterResult:
    """Full second-order dsigma/dOmega (nm^2/sr) in length form, Thomson term included."""
    _check_on_shell(f, i, kin)
    const = _const(i)
    res, anti, eta, det, tail = _dispersion(f, i, vset, kin, axis, full=True)
    thomson = const.hbar / const.mass * _kronecker(f, i) * np.dot(np.conj(kin.eps_out), kin.eps_in)
    value = (const.alpha_s / const.c) ** 2 * (kin.k_out / kin.k_in) * abs(thomson + res + anti) ** 2
    return _result(value, "dsigma_dOmega", eta, det, tail)


def scatter_velocity_form(f: BoundState, i: BoundState, kin: ScatterKinematics,
                          vset: IntermediateSet, axis: int = 0) -> ScatterResult:
    """Same cross section from momentum matrix elements (discrete states only)."""
    _check_on_shell(f, i, kin)
    if vset.bands or any(isinstance(s, BandPoint) for s in (f, i)):
        raise ValueError("velocity form is implemented for discrete states only")
    if vset.empty:
        raise EmptyIntermediateSet("intermediate set is empty")
    const = _const(i)
    m, hbar = const.mass, const.hbar
    ck, ck_out = const.c * kin.k_in, const.c * kin.k_out
    e_in, e_out = kin.eps_in, np.conj(kin.eps_out)
    omegas = [(v.energy - i.energy) / hbar for v in vset.discrete]
    eta = vset.eta if vset.eta is not None else _default_eta(omegas)
    total = m * hbar * _kronecker(f, i) * np.dot(e_out, e_in)
    for v, w_vi in zip(vset.discrete, omegas):
        p_fv = momentum_matrix_element(f, v, axis).value
        p_vi = momentum_matrix_element(v, i, axis).value
        total -= np.dot(e_out, p_fv) * np.dot(e_in, p_vi) / (w_vi - ck - 1j * eta)
        total -= np.dot(e_in, p_fv) * np.dot(e_out, p_vi) / (w_vi + ck_out - 1j * eta)
    value = (const.alpha_s / (m * m * const.c)) ** 2 * (kin.k_out / kin.k_in) * abs(total) ** 2
    det = min(abs(w - ck) for w in omegas) / ck
    return _result(value, "dsigma_dOmega", eta, det, 0.0)


def kh_dd(f: BoundState, i: BoundState, kin: ScatterKinematics, vset: IntermediateSet,
          resonant_only: bool = False, axis: int = 0) -> ScatterResult:
    """Kramers-Heisenberg dsigma/dOmega between discrete states (on shell)."""
    _check_on_shell(f, i, kin)
    const = _const(i)
    res, anti, eta, det, tail = _dispersion(f, i, vset, kin, axis, resonant_only=resonant_only)
    value = const.alpha_s**2 * const.c**2 * kin.k_in * kin.k_out**3 * abs(res + anti) ** 2
    return _result(value, "dsigma_dOmega", eta, det, tail)


def kh_dd_ww(f: BoundState, i: BoundState, kin: ScatterKinematics, vset: IntermediateSet,
             gamma: float, resonant_only: bool = False, axis: int = 0) -> ScatterResult:
    """Lineshape-resolved dsigma/(dOmega dk') with a Lorentz profile of half width gamma."""
    const = _const(i)
    res, anti, eta, det, tail = _dispersion(f, i, vset, kin, axis, resonant_only=resonant_only)
    omega_fi = (f.energy - i.energy) / const.hbar
    profile = lorentz(omega_fi + const.c * (kin.k_out - kin.k_in), gamma)
    value = const.alpha_s**2 * const.c**3 * kin.k_in * kin.k_out**3 * profile * abs(res + anti) ** 2
    return _result(value, "dsigma_dOmega_dk", eta, det, tail, gamma=gamma)


def _surface_scatter(make_pair, band, E, kin, vset, axis, resonant_only):
    const = band.const
    pref = const.alpha_s**2 * const.hbar * const.c**3 * kin.k_in * kin.k_out**3
    try:
        surface = constant_energy_set(band, E)
    except EnergyOutsideBand:
        return _result(0.0, "dsigma_dOmega_dk", vset.eta or 0.0, math.inf, 0.0, 0.0)
    except EdgeSingular:
        return _result(math.inf, "dsigma_dOmega_dk", vset.eta or 0.0, math.inf, 0.0, math.inf)
    norm = band.a / (2.0 * math.pi)
    total, first, eta, det, tail_sum = 0.0, None, 0.0, math.inf, 0.0
    for k_e, w in surface.points:
        f, i = make_pair(BandPoint(band, k_e))
        res, anti, eta, d, tail = _dispersion(f, i, vset, kin, axis, resonant_only=resonant_only)
        factor = abs(res + anti) ** 2
        first = factor if first is None else first
        total += norm * w * factor
        det, tail_sum = min(det, d), tail_sum + tail
    dos_value = pref * dos_band(band, E) * first
    return _result(pref * total, "dsigma_dOmega_dk", eta, det, tail_sum, dos_value)


def kh_dc(i: BoundState, band_f: BlochBand, kin: ScatterKinematics, vset: IntermediateSet,
          resonant_only: bool = False, axis: int = 0) -> ScatterResult:
    """Discrete initial state, band final state: dsigma/(dOmega dk')."""
    E_f = i.energy + band_f.const.hbar_c * (kin.k_in - kin.k_out)
    return _surface_scatter(lambda bp: (bp, i), band_f, E_f, kin, vset, axis, resonant_only)


def kh_cd(band_i: BlochBand, f: BoundState, kin: ScatterKinematics, vset: IntermediateSet,
          resonant_only: bool = False, axis: int = 0) -> ScatterResult:
    """Band initial state, discrete final state: dsigma/(dOmega dk')."""
    E_i = f.energy + band_i.const.hbar_c * (kin.k_out - kin.k_in)
    return _surface_scatter(lambda bp: (f, bp), band_i, E_i, kin, vset, axis, resonant_only)


def _bands_only(vset: IntermediateSet) -> IntermediateSet:
    return IntermediateSet((), vset.bands, vset.eta, vset.k_nodes, vset.window)


def kh_cc(band_i: BlochBand, band_f: BlochBand, k_e: float, kin: ScatterKinematics,
          vset: IntermediateSet, resonant_only: bool = False, axis: int = 0) -> ScatterResult:
    """Interband scattering at fixed k_e through band states at the same k_e."""
    i, f = BandPoint(band_i, k_e), BandPoint(band_f, k_e)
    _check_on_shell(f, i, kin)
    const = band_i.const
    res, anti, eta, det, tail = _dispersion(f, i, _bands_only(vset), kin, axis, resonant_only=resonant_only)
    value = const.alpha_s**2 * const.c**2 * kin.k_in * kin.k_out**3 * abs(res + anti) ** 2
    return _result(value, "dsigma_dOmega", eta, det, tail)


def kh_cc_spectral(band_i: BlochBand, band_f: BlochBand, kin: ScatterKinematics,
                   vset: IntermediateSet, resonant_only: bool = False, axis: int = 0) -> ScatterResult:
    """Per-cell interband dsigma/(dOmega dk') summed over the k points with matching energy transfer."""
    const = band_i.const
    transfer = const.hbar_c * (kin.k_in - kin.k_out)
    if band_f.n > band_i.n:
        lower, upper, dE = band_i, band_f, transfer
    else:
        lower, upper, dE = band_f, band_i, -transfer
    pref = const.alpha_s**2 * const.hbar * const.c**3 * kin.k_in * kin.k_out**3
    try:
        surface = joint_surface(lower, upper, dE)
    except EdgeSingular:
        return _result(math.inf, "dsigma_dOmega_dk", vset.eta or 0.0, math.inf, 0.0, math.inf)
    if not surface.points:
        return _result(0.0, "dsigma_dOmega_dk", vset.eta or 0.0, math.inf, 0.0, 0.0)
    bands_vset = _bands_only(vset)
    norm = band_i.a / (2.0 * math.pi)
    total, first, eta, det, tail_sum = 0.0, None, 0.0, math.inf, 0.0
    for k_e, w in surface.points:
        i, f = BandPoint(band_i, k_e), BandPoint(band_f, k_e)
        res, anti, eta, d, tail = _dispersion(f, i, bands_vset, kin, axis, resonant_only=resonant_only)
        factor = abs(res + anti) ** 2
        first = factor if first is None else first
        total += norm * w * factor
        det, tail_sum = min(det, d), tail_sum + tail
    dos_value = pref * joint_dos(lower, upper, dE) * first
    return _result(pref * total, "dsigma_dOmega_dk", eta, det, tail_sum, dos_value)
