"""Invariant suite run by `photokin check` on a scenario's objects."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..absorption import abs_dd
from ..bloch import (
    _cell_nodes,
    dos_band,
    group_velocity,
    integrate_edge_singular,
    joint_dos,
    joint_support,
    local_dos,
)
from ..bound import (
    Oscillator,
    dipole_matrix_element,
    momentum_matrix_element,
    oscillator_strength,
    trk_sum,
)
from ..core.lineshape import Lineshape
from ..core.polarization import (
    angle_average_dipole,
    angle_average_quadrature,
    polarization_basis,
    polarization_sum,
)
from ..emission import einstein_A
from ..errors import RelativisticRegimeWarning
from ..recoil import RecoilContext, eh_rate_per_volume, recoil_shift
from ..scattering import IntermediateSet, ScatterKinematics, scatter_full_second_order, scatter_velocity_form
from .runner import Context


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str  # PASS, FAIL or INFO
    detail: str

    def __str__(self):
        return f"{self.status} {self.name}: {self.detail}"


def _verdict(name, error, tol):
    return CheckResult(name, "PASS" if error <= tol else "FAIL", f"error {error:.3e} (tolerance {tol:.0e})")


def _polarization_checks(ctx):
    k_hat = np.asarray(ctx.scenario.get("photon", "direction", (0.0, 0.0, 1.0)), dtype=float)
    out = []
    for kind in ("Cartesian", "Chiral"):
        basis = polarization_basis(k_hat, kind)
        err = np.max(np.abs(basis.projector() + np.outer(k_hat, k_hat) - np.eye(3)))
        out.append(_verdict(f"polarization completeness ({kind})", err, 1e-12))
    d = np.array([0.3 + 0.1j, -0.7, 0.2 - 0.5j])
    err = abs(polarization_sum(d, k_hat) - (np.vdot(d, d).real - abs(np.dot(k_hat, d)) ** 2))
    out.append(_verdict("polarization sum identity", err, 1e-12))
    err = abs(angle_average_quadrature(d) - angle_average_dipole(d))
    out.append(_verdict("angle average quadrature", err, 1e-10))
    return out


def _state_checks(ctx):
    out = []
    states = list(ctx.states.values())
    for st in states:
        if st.on_grid:
            out.append(_verdict(f"norm {st.label}", abs(st.norm() - 1.0), 1e-9))
    one_d = [st for st in states if st.on_grid or isinstance(st.analytic, Oscillator)]
    for f, i in itertools.combinations(one_d, 2):
        if abs(f.energy - i.energy) < 1e-12:
            continue
        try:
            x = dipole_matrix_element(f, i)
            p = momentum_matrix_element(f, i)
        except Exception as exc:  # states of different kinds are not comparable
            out.append(CheckResult(f"length/velocity {f.label},{i.label}", "INFO", str(exc)))
            continue
        ref = max(np.linalg.norm(p.value), 1e-300)
        err = np.linalg.norm(p.value - x.to_velocity().value) / ref
        if ref < 1e-12 * (i.const.mass * abs(x.omega_fi) * 1.0):
            out.append(CheckResult(f"length/velocity {f.label},{i.label}", "INFO", "forbidden transition"))
        else:
            out.append(_verdict(f"length/velocity {f.label},{i.label}", err, 1e-4))
    for lo, hi in itertools.combinations(states, 2):
        if lo.energy == hi.energy:
            continue
        lo, hi = sorted((lo, hi), key=lambda s: s.energy)
        try:
            A = einstein_A(lo, hi)
            line = abs_dd(hi, lo, None, None, Lineshape(), angle_averaged=True)
        except Exception as exc:
            out.append(CheckResult(f"emission/absorption {hi.label}->{lo.label}", "INFO", str(exc)))
            continue
        lam = 2.0 * math.pi * lo.const.c / (A.photon_energy / lo.const.hbar)
        target = lam**2 / 4.0 * A.value
        if target > 0:
            out.append(_verdict(f"emission/absorption {hi.label}->{lo.label}",
                                abs(line.sigma - target) / target, 1e-10))
    if len(states) > 1:
        ground = min(states, key=lambda s: s.energy)
        default = "ThreeD" if any(s.analytic is not None and not isinstance(s.analytic, Oscillator)
                                   for s in states) else "OneD"
        dim = ctx.scenario.get("numerics", "oscillator_dim", default)
        try:
            total = trk_sum(ground, [s for s in states if s is not ground], dim)
            strongest = max((oscillator_strength(s, ground, dim) for s in states if s is not ground), key=abs)
            out.append(CheckResult("partial TRK sum", "INFO",
                                   f"sum F = {total:.6g} over {len(states) - 1} states ({dim}); largest {strongest:.6g}"))
        except Exception as exc:
            out.append(CheckResult("partial TRK sum", "INFO", str(exc)))
    return out


def _band_checks(ctx):
    out = []
    bands = ctx.bands
    for b in bands:
        total = integrate_edge_singular(lambda E, b=b: dos_band(b, E), b.E_lo, b.E_hi)
        out.append(_verdict(f"band {b.n} DOS normalization", abs(total - 1.0), 1e-6))
        E_mid = 0.5 * (b.E_lo + b.E_hi)
        y, w = _cell_nodes(b.model)
        ldos = float(np.sum(w * local_dos(b, E_mid, y)))
        out.append(_verdict(f"band {b.n} local DOS cell integral", abs(ldos - dos_band(b, E_mid)) / dos_band(b, E_mid), 1e-8))
        k = 0.37 * math.pi / b.a
        h = 1e-5 / b.a
        fd = (b.energy(k + h) - b.energy(k - h)) / (2 * h)
        gv = group_velocity(b, k)
        out.append(_verdict(f"band {b.n} group velocity", abs(gv - fd) / max(abs(fd), 1e-300), 1e-5))
    if len(bands) > 1:
        k = 0.37 * math.pi / bands[0].a
        y, w = _cell_nodes(bands[0].model)
        psi = np.array([b.psi(k, y) for b in bands])
        gram = (psi.conj() * w) @ psi.T
        out.append(_verdict("Bloch orthonormality", float(np.max(np.abs(gram - np.eye(len(bands))))), 1e-10))
        lo, hi = joint_support(bands[0], bands[1])
        total = integrate_edge_singular(lambda E: joint_dos(bands[0], bands[1], E), lo, hi)
        out.append(_verdict("joint DOS normalization (1,2)", abs(total - 1.0), 1e-6))
    return out


def _scattering_checks(ctx):
    s = ctx.scenario
    out = []
    refs = s.get("process", "intermediates", ())
    discrete = [ctx.ref(r) for r in refs if r.startswith("state")]
    ext = [ctx.process_ref(k) for k in ("initial", "final")]
    if not discrete or len(discrete) != len(refs) or any(e not in ctx.states.values() for e in ext):
        return out
    i, f = ext
    const = i.const
    omega_fi = (f.energy - i.energy) / const.hbar
    eps = np.array([1.0, 0.0, 0.0], dtype=complex)
    vset = IntermediateSet(discrete, eta=s.get("numerics", "eta_per_fs"))
    lines = [abs(v.energy - i.energy) for v in discrete if v.energy != i.energy]
    k_in = 0.3 * min(lines) / const.hbar_c + max(omega_fi, 0.0) / const.c
    kin = ScatterKinematics.on_shell(k_in, omega_fi, const.c, eps, eps, (0, 0, 1), (0, 0, 1))
    length = scatter_full_second_order(f, i, kin, vset).value
    try:
        velocity = scatter_velocity_form(f, i, kin, vset).value
    except Exception as exc:
        return [CheckResult("length/velocity scattering", "INFO", str(exc))]
    err = abs(length - velocity) / max(abs(length), 1e-300)
    if all(isinstance(st.analytic, Oscillator) for st in [i, f, *discrete]):
        out.append(_verdict("length/velocity scattering (complete set)", err, 1e-6))
    else:
        out.append(CheckResult("length/velocity scattering", "INFO", f"relative difference {err:.3e}"))
    return out


def _recoil_checks(ctx):
    s = ctx.scenario
    const = ctx.const
    mass = s.get("process", "mass_energy_ev")
    K = s.get("process", "K_nm", 0.0)
    omega = float(np.mean([s.get("photon", "energy_min_ev", 1.0), s.get("photon", "energy_max_ev", 1.0)])) / const.hbar
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RelativisticRegimeWarning)
        values = [recoil_shift(omega, RecoilContext(mass, K, t), const) for t in (0.0, math.pi / 2, math.pi / 3)]
    # linear in cos(theta): f(pi/3) = (f(0) + f(pi/2)) / 2
    err = abs(values[2] - 0.5 * (values[0] + values[1])) / omega
    return [_verdict("recoil shift linear in cos(theta)", err, 1e-14)]


def _eh_checks(ctx):
    rng = np.random.default_rng(7)
    k = np.linspace(-1.0, 1.0, 32)
    sigma = rng.random((32, 32))
    j_e = rng.random(32)
    rho_h = rng.random(32)
    h = k[1] - k[0]
    wt = np.full(32, h)
    wt[[0, -1]] = 0.5 * h
    brute = sum(wt[a] * wt[b] * sigma[a, b] * j_e[a] * rho_h[b] for a in range(32) for b in range(32))
    rate = eh_rate_per_volume(sigma, j_e, rho_h, k)
    return [_verdict("eh rate per volume vs brute force", abs(rate - brute) / brute, 1e-10)]


def run_checks(ctx: Context) -> list[CheckResult]:
    results = _polarization_checks(ctx)
    results += _state_checks(ctx)
    if ctx.bands:
        results += _band_checks(ctx)
    proc = ctx.scenario.process
    if proc in ("scattering.dd", "scattering.full", "scattering.dd_ww"):
        results += _scattering_checks(ctx)
    if proc == "recoil.shift":
        results += _recoil_checks(ctx)
    if proc == "recombination.eh":
        results += _eh_checks(ctx)
    return results
