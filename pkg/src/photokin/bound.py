"""Discrete electronic states and their matrix elements."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import eigh_tridiagonal
from scipy.special import eval_hermite, roots_laguerre, sph_harm_y

from .core.constants import DEFAULT_CONSTANTS, Constants
from .core.quadrature import sphere_grid
from .errors import (
    ConvergenceFailure,
    DegenerateTransition,
    GridTooCoarse,
    IncompatibleStates,
)

MIN_GRID_POINTS = 64


@dataclass(frozen=True, eq=False)
class Potential1D:
    """Potential sampled on a uniform grid with hard walls at both ends."""

    x: NDArray[np.float64]
    V: NDArray[np.float64]
    boundary: str = "HardWall"

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        V = np.asarray(self.V, dtype=float)
        if x.ndim != 1 or x.shape != V.shape:
            raise ValueError("grid and potential must be 1D arrays of equal length")
        if x.size < MIN_GRID_POINTS:
            raise GridTooCoarse(f"need at least {MIN_GRID_POINTS} grid points, got {x.size}")
        steps = np.diff(x)
        if np.any(steps <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.max(np.abs(steps - steps.mean())) > 1e-9 * steps.mean():
            raise ValueError("grid must be uniform")
        if not np.all(np.isfinite(V)):
            raise ValueError("potential must be finite at every node")
        if self.boundary != "HardWall":
            raise ValueError(f"unsupported boundary {self.boundary!r}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "V", V)

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])

    @classmethod
    def from_function(cls, func, x_min: float, x_max: float, points: int) -> "Potential1D":
        x = np.linspace(x_min, x_max, points)
        return cls(x, np.asarray(func(x), dtype=float) * np.ones_like(x))

    @classmethod
    def box(cls, x_min: float, x_max: float, points: int) -> "Potential1D":
        return cls.from_function(lambda x: 0.0, x_min, x_max, points)

    @classmethod
    def harmonic(cls, hbar_omega: float, x_min: float, x_max: float, points: int,
                 const: Constants = DEFAULT_CONSTANTS) -> "Potential1D":
        # 1/2 m w^2 x^2 = (mc^2 / 2) (hbar w / hbar c)^2 x^2
        stiffness = 0.5 * const.electron_mass_energy * (hbar_omega / const.hbar_c) ** 2
        return cls.from_function(lambda x: stiffness * x * x, x_min, x_max, points)

    @classmethod
    def square_well(cls, depth: float, width: float, x_min: float, x_max: float,
                    points: int) -> "Potential1D":
        return cls.from_function(
            lambda x: np.where(np.abs(x) <= 0.5 * width, -abs(depth), 0.0), x_min, x_max, points
        )


def load_potential(path: str | Path) -> Potential1D:
    data = np.loadtxt(path, comments="#", delimiter=None, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns (x_nm, V_eV)")
    return Potential1D(data[:, 0], data[:, 1])


@dataclass(frozen=True)
class Hydrogenic:
    n: int
    l: int
    m: int
    Z: float = 1.0

    def __post_init__(self):
        if not (1 <= self.n <= 3 and 0 <= self.l < self.n and abs(self.m) <= self.l):
            raise ValueError(f"hydrogenic quantum numbers out of range: {self}")
        if self.Z <= 0:
            raise ValueError("nuclear charge must be positive")


@dataclass(frozen=True)
class Oscillator:
    n: int
    hbar_omega: float  # eV

    def __post_init__(self):
        if self.n < 0 or self.hbar_omega <= 0:
            raise ValueError(f"invalid oscillator parameters: {self}")


@dataclass(frozen=True, eq=False)
class BoundState:
    index: int
    energy: float  # eV
    x: NDArray[np.float64] | None = None
    psi: NDArray[np.complex128] | None = None
    analytic: Hydrogenic | Oscillator | None = None
    const: Constants = DEFAULT_CONSTANTS
    label: str = ""

    @property
    def on_grid(self) -> bool:
        return self.psi is not None

    def norm(self) -> float:
        if self.on_grid:
            return float(np.trapezoid(np.abs(self.psi) ** 2, self.x))
        return 1.0

    def nodes(self) -> int:
        """Sign changes of the real part, ignoring numerically vanishing samples."""
        re = self.psi.real
        big = re[np.abs(re) > 1e-6 * np.max(np.abs(re))]
        return int(np.count_nonzero(np.diff(np.sign(big))))


@dataclass(frozen=True)
class TransitionAmplitude:
    """Matrix element <f|x|i> (Length, nm) or <f|p|i> (Velocity, eV fs/nm)."""

    value: NDArray[np.complex128]
    omega_fi: float  # 1/fs
    form: str = "Length"
    meta: dict = field(default_factory=dict, compare=False)

    def to_length(self, const: Constants = DEFAULT_CONSTANTS) -> "TransitionAmplitude":
        if self.form == "Length":
            return self
        if self.omega_fi == 0.0:
            raise DegenerateTransition("length form undefined for omega_fi = 0")
        return TransitionAmplitude(
            self.value / (1j * const.mass * self.omega_fi), self.omega_fi, "Length", dict(self.meta)
        )

    def to_velocity(self, const: Constants = DEFAULT_CONSTANTS) -> "TransitionAmplitude":
        if self.form == "Velocity":
            return self
        return TransitionAmplitude(
            1j * const.mass * self.omega_fi * self.value, self.omega_fi, "Velocity", dict(self.meta)
        )

    @property
    def strength(self) -> float:
        """|value|^2 summed over components."""
        return float(np.vdot(self.value, self.value).real)


def _fix_phase(psi: NDArray) -> NDArray:
    mags = np.abs(psi)
    first = int(np.argmax(mags > 1e-8 * mags.max()))
    phase = psi[first] / mags[first]
    return psi / phase


def solve_bound_states(pot: Potential1D, count: int,
                       const: Constants = DEFAULT_CONSTANTS) -> list[BoundState]:
    """Lowest eigenstates of the 3-point finite-difference Hamiltonian."""
    n_grid = pot.x.size
    if count < 1:
        raise ValueError("count must be at least 1")
    if count > n_grid // 4:
        raise GridTooCoarse(f"{count} states requested from {n_grid} points (limit {n_grid // 4})")
    t = const.hbar2_over_2m / pot.h**2
    diag = 2.0 * t + pot.V[1:-1]
    off = np.full(diag.size - 1, -t)
    try:
        energies, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, count - 1))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc

    scale = 2.0 * t + float(np.max(np.abs(pot.V)))
    states = []
    for idx in range(count):
        v = vecs[:, idx]
        hv = diag * v
        hv[1:] -= t * v[:-1]
        hv[:-1] -= t * v[1:]
        # residual measured relative to the operator scale so it does not grow with 1/h^2
        resid = np.linalg.norm(hv - energies[idx] * v) / np.linalg.norm(v)
        if resid > 1e-8 * max(1.0, scale * 1e-4):
            raise ConvergenceFailure(f"state {idx}: residual {resid:.3e}")
        psi = np.zeros(n_grid, dtype=complex)
        psi[1:-1] = v
        psi /= math.sqrt(np.trapezoid(np.abs(psi) ** 2, pot.x))
        states.append(
            BoundState(idx, float(energies[idx]), pot.x, _fix_phase(psi), None, const, f"grid{idx}")
        )
    return states


def hydrogenic_state(n: int, l: int, m: int, Z: float = 1.0,
                     const: Constants = DEFAULT_CONSTANTS) -> BoundState:
    tag = Hydrogenic(n, l, m, Z)
    energy = -0.5 * Z**2 * const.alpha_s**2 * const.electron_mass_energy / n**2
    return BoundState(n - 1, energy, analytic=tag, const=const, label=f"H{n}{'spd'[l]}{m:+d}")


def oscillator_state(n: int, hbar_omega: float, const: Constants = DEFAULT_CONSTANTS,
                     offset: float = 0.0) -> BoundState:
    return BoundState(n, hbar_omega * (n + 0.5) + offset, analytic=Oscillator(n, hbar_omega),
                      const=const, label=f"osc{n}")


def sample_on_grid(state: BoundState, x) -> BoundState:
    """Grid version of an analytic oscillator state, renormalized on the grid."""
    if not isinstance(state.analytic, Oscillator):
        raise IncompatibleStates("only oscillator states can be sampled on a 1D grid")
    x = np.asarray(x, dtype=float)
    n, hw = state.analytic.n, state.analytic.hbar_omega
    inv_len2 = state.const.electron_mass_energy * hw / state.const.hbar_c**2
    xi = x * math.sqrt(inv_len2)
    psi = eval_hermite(n, xi) * np.exp(-0.5 * xi * xi)
    psi = psi.astype(complex)
    psi /= math.sqrt(np.trapezoid(np.abs(psi) ** 2, x))
    return BoundState(state.index, state.energy, x, _fix_phase(psi), None, state.const, state.label)


# radial functions R_nl(r) = a^{-3/2} P(rho) exp(-rho/n), rho = r/a, a = a0/Z
_RADIAL = {
    (1, 0): lambda r: 2.0 * np.ones_like(r),
    (2, 0): lambda r: (1.0 - r / 2.0) / math.sqrt(2.0),
    (2, 1): lambda r: r / (2.0 * math.sqrt(6.0)),
    (3, 0): lambda r: 2.0 / (3.0 * math.sqrt(3.0)) * (1.0 - 2.0 * r / 3.0 + 2.0 * r * r / 27.0),
    (3, 1): lambda r: 8.0 / (27.0 * math.sqrt(6.0)) * r * (1.0 - r / 6.0),
    (3, 2): lambda r: 4.0 / (81.0 * math.sqrt(30.0)) * r * r,
}

_LAGUERRE = roots_laguerre(40)


def radial_function(n: int, l: int, r, a: float = 1.0):
    r = np.asarray(r, dtype=float) / a
    return _RADIAL[(n, l)](r) * np.exp(-r / n) / a**1.5


def radial_integral(nf: int, lf: int, ni: int, li: int, power: int = 3, a: float = 1.0) -> float:
    """Integral of R_f R_i r^power dr by Gauss-Laguerre (exact for these polynomials)."""
    beta = 1.0 / nf + 1.0 / ni
    y, w = _LAGUERRE
    rho = y / beta
    g = _RADIAL[(nf, lf)](rho) * _RADIAL[(ni, li)](rho) * rho**power
    return float(np.sum(w * g)) * a ** (power - 2) / beta


def _angular_vector(lf: int, mf: int, li: int, mi: int) -> NDArray[np.complex128]:
    dirs, weights = sphere_grid(16, 32)
    theta = np.arccos(np.clip(dirs[:, 2], -1.0, 1.0))
    phi = np.arctan2(dirs[:, 1], dirs[:, 0])
    yf = sph_harm_y(lf, mf, theta, phi)
    yi = sph_harm_y(li, mi, theta, phi)
    prod = weights * np.conj(yf) * yi
    out = prod @ dirs
    out[np.abs(out) < 1e-14] = 0.0
    return out


def _hydrogen_dipole(f: Hydrogenic, i: Hydrogenic, const: Constants) -> NDArray[np.complex128]:
    if f.Z != i.Z:
        raise IncompatibleStates("hydrogenic states with different nuclear charge")
    if abs(f.l - i.l) != 1:
        return np.zeros(3, dtype=complex)
    a = const.bohr_radius / f.Z
    return radial_integral(f.n, f.l, i.n, i.l, 3, a) * _angular_vector(f.l, f.m, i.l, i.m)


def _embed(value: complex, axis: int) -> NDArray[np.complex128]:
    out = np.zeros(3, dtype=complex)
    out[axis] = value
    return out


def _same_grid(f: BoundState, i: BoundState):
    if f.x is not i.x and not (f.x.shape == i.x.shape and np.array_equal(f.x, i.x)):
        raise IncompatibleStates("grid states live on different grids")


def _omega(f: BoundState, i: BoundState) -> float:
    return (f.energy - i.energy) / f.const.hbar


def dipole_matrix_element(f: BoundState, i: BoundState, axis: int = 0) -> TransitionAmplitude:
    """<f|x|i> in nm. One-dimensional states are embedded along `axis`."""
    omega = _omega(f, i)
    if f.on_grid and i.on_grid:
        _same_grid(f, i)
        val = np.trapezoid(np.conj(f.psi) * f.x * i.psi, f.x)
        return TransitionAmplitude(_embed(val, axis), omega)
    fa, ia = f.analytic, i.analytic
    if isinstance(fa, Oscillator) and isinstance(ia, Oscillator):
        if fa.hbar_omega != ia.hbar_omega:
            raise IncompatibleStates("oscillators with different frequencies")
        length = f.const.hbar_c / math.sqrt(2.0 * f.const.electron_mass_energy * fa.hbar_omega)
        m, n = fa.n, ia.n
        val = 0.0
        if m == n - 1:
            val = length * math.sqrt(n)
        elif m == n + 1:
            val = length * math.sqrt(n + 1)
        return TransitionAmplitude(_embed(val, axis), omega)
    if isinstance(fa, Hydrogenic) and isinstance(ia, Hydrogenic):
        return TransitionAmplitude(_hydrogen_dipole(fa, ia, f.const), omega)
    raise IncompatibleStates(f"cannot pair {f.label or type(fa).__name__} with {i.label or type(ia).__name__}")


def momentum_matrix_element(f: BoundState, i: BoundState, axis: int = 0) -> TransitionAmplitude:
    """<f|p|i> in eV fs/nm.

    Grid states use the central difference consistent with the 3-point
    Hamiltonian; hydrogenic states go through i m omega <f|x|i>.
    """
    const = f.const
    omega = _omega(f, i)
    if f.on_grid and i.on_grid:
        _same_grid(f, i)
        h = float(f.x[1] - f.x[0])
        padded = np.concatenate(([0.0], i.psi, [0.0]))
        deriv = (padded[2:] - padded[:-2]) / (2.0 * h)
        val = -1j * const.hbar * h * np.sum(np.conj(f.psi) * deriv)
        return TransitionAmplitude(_embed(val, axis), omega, "Velocity")
    fa, ia = f.analytic, i.analytic
    if isinstance(fa, Oscillator) and isinstance(ia, Oscillator):
        if fa.hbar_omega != ia.hbar_omega:
            raise IncompatibleStates("oscillators with different frequencies")
        # sqrt(m hbar w / 2) in eV fs / nm
        scale = math.sqrt(const.electron_mass_energy * fa.hbar_omega / 2.0) / const.c
        m, n = fa.n, ia.n
        val = 0.0
        if m == n + 1:
            val = 1j * scale * math.sqrt(n + 1)
        elif m == n - 1:
            val = -1j * scale * math.sqrt(n)
        return TransitionAmplitude(_embed(val, axis), omega, "Velocity")
    return dipole_matrix_element(f, i, axis).to_velocity(const)


def oscillator_strength(f: BoundState, i: BoundState, dimensionality: str = "ThreeD") -> float:
    """F_fi = (2m/3hbar) w_fi |<f|x|i>|^2 in 3D, (2m/hbar) w_fi |<f|x|i>|^2 in 1D."""
    if dimensionality not in ("OneD", "ThreeD"):
        raise ValueError(f"unknown dimensionality {dimensionality!r}")
    amp = dipole_matrix_element(f, i)
    const = f.const
    pref = 2.0 if dimensionality == "OneD" else 2.0 / 3.0
    return pref * const.mass * amp.omega_fi * amp.strength / const.hbar


def trk_sum(i: BoundState, states, dimensionality: str = "ThreeD") -> float:
    """Partial Thomas-Reiche-Kuhn sum; tends to 1 as the state list becomes complete."""
    return float(sum(oscillator_strength(f, i, dimensionality) for f in states))


def export_states_csv(states, path: str | Path) -> None:
    lines = ["# columns: state index, x_nm, Re psi, Im psi", "index,x_nm,re_psi,im_psi"]
    for s in states:
        if not s.on_grid:
            raise IncompatibleStates("only grid states can be exported")
        for xv, pv in zip(s.x, s.psi):
            lines.append(f"{s.index},{float(xv)!r},{float(pv.real)!r},{float(pv.imag)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
