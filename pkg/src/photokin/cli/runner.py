"""Scenario execution: build states and bands, sweep the photon grid, write tables."""

from __future__ import annotations

import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .. import __version__
from ..absorption import abs_cc_interband, abs_cd_band, abs_dc_band, abs_dd
from ..bloch import (
    EdgeSingular,
    EnergyOutsideBand,
    KronigPenney,
    constant_energy_set,
    dos_band,
    joint_dos,
    joint_support,
    solve_dispersion,
)
from ..bound import (
    Potential1D,
    hydrogenic_state,
    load_potential,
    oscillator_state,
    solve_bound_states,
)
from ..core.constants import DEFAULT_CONSTANTS, Constants
from ..core.lineshape import Lineshape, lorentz
from ..core.polarization import polarization_basis
from ..emission import (
    einstein_A,
    electron_capture_cross_section,
    emission_cc,
    emission_dc_spectrum,
    emission_dd_differential,
    hole_capture_cross_section,
)
from ..errors import IoError, OffShellKinematics, PhysicsError, ZeroCurrent
from ..recoil import EhPair, RecoilContext, eh_on_shell_partner, eh_recombination_cross_section, recoil_shift
from ..scattering import (
    IntermediateSet,
    ScatterKinematics,
    kh_cc,
    kh_cc_spectral,
    kh_cd,
    kh_dc,
    kh_dd,
    kh_dd_ww,
    scatter_full_second_order,
)
from ..table import SpectrumTable, format_float
from .scenario import Issue, MissingRequirement, RangeError, Scenario, photon_grid

_AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}


@dataclass
class Context:
    scenario: Scenario
    const: Constants
    states: dict
    bands: list | None
    base_dir: Path

    def ref(self, name: str):
        if name.startswith("band"):
            return self.bands[int(name[4:]) - 1]
        return self.states[name]

    def process_ref(self, key: str):
        return self.ref(self.scenario.get("process", key))


def _build_state(s: Scenario, name: str, const: Constants, base_dir: Path):
    get = lambda key, default=None: s.get(name, key, default)  # noqa: E731
    kind = get("kind")
    if kind == "Hydrogenic":
        state = hydrogenic_state(get("n"), get("l", 0), get("m", 0), get("Z", 1.0), const)
    elif kind == "Oscillator":
        state = oscillator_state(get("n"), get("hbar_omega_ev"), const, get("offset_ev", 0.0))
    else:
        lo, hi, pts = get("x_min_nm"), get("x_max_nm"), get("points")
        potential = get("potential")
        if potential == "harmonic":
            pot = Potential1D.harmonic(get("hbar_omega_ev"), lo, hi, pts, const)
        elif potential == "square_well":
            pot = Potential1D.square_well(get("depth_ev"), get("width_nm"), lo, hi, pts)
        elif potential == "infinite_well":
            pot = Potential1D.box(lo, hi, pts)
        else:
            path = base_dir / get("path")
            try:
                pot = load_potential(path)
            except OSError as exc:
                raise IoError(f"cannot read potential file {path}: {exc}") from exc
        state = solve_bound_states(pot, get("index") + 1, const)[get("index")]
        if get("offset_ev") is not None:
            state = replace(state, energy=state.energy + get("offset_ev"))
    return replace(state, label=name)


def build_context(s: Scenario, const: Constants = DEFAULT_CONSTANTS, base_dir=".") -> Context:
    base_dir = Path(base_dir)
    states = {name: _build_state(s, name, const, base_dir) for name in s.state_names}
    bands = None
    if "material" in s.sections:
        strength = s.get("material", "strength", 0.0) if s.get("material", "kind") == "KronigPenney" else 0.0
        model = KronigPenney(s.get("material", "a_nm"), strength, s.get("material", "cell_points", 256), const)
        bands = solve_dispersion(model, s.get("material", "bands", 4), s.get("material", "k_points", 128))
    return Context(s, const, states, bands, base_dir)


def _polarization(s: Scenario, key: str, direction_key: str, default: str):
    name = s.get("photon", key, default)
    k_hat = np.asarray(s.get("photon", direction_key, (0.0, 0.0, 1.0)), dtype=float)
    if name in ("sum", "average"):
        return None
    if name in _AXES:
        eps = np.asarray(_AXES[name], dtype=complex)
    else:
        kind = "Cartesian" if name in ("e1", "e2") else "Chiral"
        basis = polarization_basis(k_hat, kind)
        eps = basis.eps1 if name in ("e1", "plus") else basis.eps2
    if abs(np.dot(k_hat, eps)) > 1e-9 and s.process != "recombination.eh":
        entry = s.sections.get("photon", {}).get(key)
        line, col = (entry.line, entry.column) if entry else (1, 1)
        raise RangeError([Issue(line, col, "RangeError",
                                f"polarization {name} is not transverse to photon.{direction_key}")])
    return eps


def _vset(ctx: Context) -> IntermediateSet:
    s = ctx.scenario
    refs = s.get("process", "intermediates", ())
    return IntermediateSet(
        discrete=[ctx.ref(r) for r in refs if r.startswith("state")],
        bands=[ctx.ref(r) for r in refs if r.startswith("band")],
        eta=s.get("numerics", "eta_per_fs"),
        k_nodes=s.get("numerics", "k_nodes", 256),
        window=s.get("numerics", "window_ev"),
    )


def _surface_k(band, E):
    """Non-negative wavevector on the constant-energy set, or None outside the band."""
    try:
        points = constant_energy_set(band, E).points
    except EnergyOutsideBand:
        return None
    return max(k for k, _ in points)


def _capture(func, state, band, E):
    try:
        k = _surface_k(band, E)
    except EdgeSingular:
        return math.inf
    if k is None:
        return 0.0
    try:
        return func(state, band, k).value
    except ZeroCurrent:
        return math.inf


class _Plan:
    """Column names, per-row evaluator and metadata for one process."""

    def __init__(self, columns, row, meta=None, x_name="photon_energy_eV"):
        self.columns, self.row, self.meta, self.x_name = columns, row, meta or {}, x_name


def _scatter_row(result):
    return (result.value, float(result.near_resonant), result.eta)


def _plan(ctx: Context) -> _Plan:
    s, const = ctx.scenario, ctx.const
    proc = s.process
    hbar_c = const.hbar_c
    gamma = s.get("numerics", "gamma_per_fs")
    k_hat = tuple(s.get("photon", "direction", (0.0, 0.0, 1.0)))
    k_hat_out = tuple(s.get("photon", "out_direction", (0.0, 0.0, 1.0)))
    eps = _polarization(s, "polarization", "direction", "x")
    init = s.get("process", "initial")
    fin = s.get("process", "final")
    i = ctx.process_ref("initial") if init else None
    f = ctx.process_ref("final") if fin else None

    def need_eps():
        if eps is None:
            entry = s.sections["photon"]["polarization"]
            raise RangeError([Issue(entry.line, entry.column, "RangeError",
                                    f"{proc} needs a definite polarization")])
        return eps

    if proc == "emission.dd":
        A = einstein_A(f, i)
        omega = A.photon_energy / const.hbar
        diff = emission_dd_differential(f, i, k_hat, eps).value

        def row(E):
            profile = const.c * lorentz(E / const.hbar - omega, gamma)
            return (A.value * profile, diff * profile)

        return _Plan(["rate_per_fs_per_k", "dgamma_domega_dk"], row,
                     {"einstein_A_per_s": format_float(A.metadata["per_second"]), "line_energy_eV": format_float(A.photon_energy)})

    if proc == "emission.dc":
        def row(E):
            table = emission_dc_spectrum(i, f, [E / hbar_c])
            return (table.column("rate_per_fs_per_k")[0],
                    _capture(hole_capture_cross_section, i, f, i.energy - E))

        return _Plan(["rate_per_fs_per_k", "capture_cross_section"], row)

    if proc == "emission.cd":
        return _Plan(["capture_cross_section"],
                     lambda E: (_capture(electron_capture_cross_section, f, i, f.energy + E),))

    if proc == "emission.cc":
        k_e = s.get("process", "k_e")
        direct = emission_cc(i, f, k_e)
        meta = {"direct_rate_per_fs": format_float(direct.value), "direct_photon_energy_eV": format_float(direct.photon_energy)}
        if eps is not None:
            meta["direct_dgamma_domega_per_fs"] = format_float(emission_cc(i, f, k_e, k_hat, eps).value)
        lower, upper = (f, i) if f.n < i.n else (i, f)
        norm = i.a / (2.0 * math.pi)
        from ..bloch import joint_surface

        def row(E):
            try:
                points = joint_surface(lower, upper, E).points
            except EdgeSingular:
                return (math.inf,)
            total = sum(w * emission_cc(i, f, k).value for k, w in points)
            return (hbar_c * norm * total,)

        return _Plan(["rate_per_fs_per_k"], row, meta)

    if proc == "absorption.dd":
        averaged = s.get("numerics", "angle_averaged", False) or eps is None
        shape = Lineshape.lorentz(gamma)
        strength = abs_dd(f, i, eps, None, Lineshape(), averaged).sigma
        blf = s.get("numerics", "broad_line_factor", False)
        return _Plan(["sigma_nm2"],
                     lambda E: (abs_dd(f, i, eps, E / hbar_c, shape, averaged, blf).sigma,),
                     {"approximation": "Lorentz", "line_strength_nm2_per_fs": format_float(strength)})

    if proc in ("absorption.dc", "absorption.cd", "absorption.cc"):
        pol = need_eps()
        func = {"absorption.dc": lambda k: abs_dc_band(i, f, pol, k),
                "absorption.cd": lambda k: abs_cd_band(f, i, pol, k),
                "absorption.cc": lambda k: abs_cc_interband(i, f, pol, k)}[proc]

        def row(E):
            r = func(E / hbar_c)
            return (r.sigma, r.sigma_dos)

        return _Plan(["sigma_nm2", "sigma_dos_nm2"], row, {"approximation": "SurfaceIntegral+ConstantMatrixElementDOS"})

    eps_out = _polarization(s, "out_polarization", "out_direction", "x")
    resonant_only = s.get("numerics", "resonant_only", False)
    scatter_cols = ["dsigma_dOmega_nm2", "resonant_flag", "eta_used"]
    spectral_cols = ["dsigma_dOmega_dk", "resonant_flag", "eta_used"]

    def kin(k_in, k_out):
        return ScatterKinematics(k_in, k_out, need_eps(), eps_out, k_hat, k_hat_out)

    if proc in ("scattering.dd", "scattering.full", "scattering.cc"):
        vset = _vset(ctx)
        if proc == "scattering.cc":
            k_e = s.get("process", "k_e")
            omega_fi = (f.energy(k_e) - i.energy(k_e)) / const.hbar
        else:
            omega_fi = (f.energy - i.energy) / const.hbar

        def row(E):
            try:
                kn = ScatterKinematics.on_shell(E / hbar_c, omega_fi, const.c, need_eps(), eps_out, k_hat, k_hat_out)
            except OffShellKinematics:
                return (0.0, 0.0, math.nan)
            if proc == "scattering.dd":
                return _scatter_row(kh_dd(f, i, kn, vset, resonant_only))
            if proc == "scattering.full":
                return _scatter_row(scatter_full_second_order(f, i, kn, vset))
            return _scatter_row(kh_cc(i, f, k_e, kn, vset, resonant_only))

        return _Plan(scatter_cols, row)

    if proc in ("scattering.dd_ww", "scattering.dc", "scattering.cd", "scattering.cc_spectral"):
        vset = _vset(ctx)
        k_in = s.get("photon", "incident_ev") / hbar_c

        def row(E):
            kn = kin(k_in, E / hbar_c)
            if proc == "scattering.dd_ww":
                return _scatter_row(kh_dd_ww(f, i, kn, vset, gamma, resonant_only))
            if proc == "scattering.dc":
                r = kh_dc(i, f, kn, vset, resonant_only)
            elif proc == "scattering.cd":
                r = kh_cd(i, f, kn, vset, resonant_only)
            else:
                r = kh_cc_spectral(i, f, kn, vset, resonant_only)
            return (r.value, r.dos_value, float(r.near_resonant), r.eta)

        cols = spectral_cols if proc == "scattering.dd_ww" else (
            ["dsigma_dOmega_dk", "dos_dsigma_dOmega_dk", "resonant_flag", "eta_used"])
        return _Plan(cols, row, {"incident_energy_eV": format_float(s.get("photon", "incident_ev"))},
                     x_name="k_out_energy_eV")

    if proc == "recoil.shift":
        ctx_r = RecoilContext(s.get("process", "mass_energy_ev"), s.get("process", "K_nm", 0.0),
                              s.get("process", "theta_rad", 0.0))

        def row(E):
            shifted = const.hbar * recoil_shift(E / const.hbar, ctx_r, const)
            return (shifted, shifted - E)

        return _Plan(["shifted_photon_energy_eV", "shift_eV"], row)

    if proc == "recombination.eh":
        k_i = s.get("process", "k_e")
        averaged = s.get("numerics", "angle_averaged", False)
        pol = None if averaged else need_eps()
        kmax = math.pi / i.a
        partner = eh_on_shell_partner(i, f, k_i)

        def row(E):
            k_f = k_i - E / hbar_c
            if abs(k_f) > kmax:
                return (0.0,)
            pair = EhPair(k_i, k_f, i, f, gamma)
            return (eh_recombination_cross_section(pair, pol, averaged),)

        peak = eh_recombination_cross_section(EhPair(k_i, partner, i, f, gamma), pol, averaged)
        return _Plan(["sigma_nm2"], row, {"on_shell_k_f": format_float(partner), "on_shell_sigma_nm2": format_float(peak)})

    raise AssertionError(proc)


def run_scan(s: Scenario, const: Constants = DEFAULT_CONSTANTS, base_dir=".") -> SpectrumTable:
    """One row per photon-grid point, assembled in grid order."""
    ctx = build_context(s, const, base_dir)
    plan = _plan(ctx)
    grid = photon_grid(s)

    def evaluate(index):
        E = float(grid[index])
        try:
            return plan.row(E)
        except PhysicsError as exc:
            raise type(exc)(f"grid index {index} (photon energy {E!r} eV): {exc}") from exc

    jobs = s.get("numerics", "jobs", 1)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(evaluate, range(grid.size)))
    else:
        rows = [evaluate(j) for j in range(grid.size)]
    data = np.array(rows, dtype=float).reshape(grid.size, len(plan.columns))
    columns = {plan.x_name: grid}
    columns.update({name: data[:, j] for j, name in enumerate(plan.columns)})
    return SpectrumTable(columns, _metadata(ctx, plan))


def _metadata(ctx: Context, plan: _Plan) -> dict:
    s, const = ctx.scenario, ctx.const
    meta = {
        "photokin_version": __version__,
        "process": s.process,
        "constants": (f"hbar_c_ev_nm={const.hbar_c!r} mec2_ev={const.electron_mass_energy!r} "
                      f"c_nm_fs={const.c!r} alpha_s={const.alpha_s!r}"),
        "eta_per_fs": format_float(s.get("numerics", "eta_per_fs")) if s.has("numerics", "eta_per_fs") else "auto",
        "gamma_per_fs": format_float(s.get("numerics", "gamma_per_fs")) if s.has("numerics", "gamma_per_fs") else "none",
    }
    if s.has("process", "initial"):
        meta["initial"] = s.get("process", "initial")
        meta["final"] = s.get("process", "final")
    meta.update(plan.meta)
    return meta


def emit_output(table: SpectrumTable, fmt: str = "csv", path=None) -> None:
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown output format {fmt!r}")
    text = table.to_csv() if fmt == "csv" else table.to_json()
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


# band-structure exports ----------------------------------------------------

def _require_bands(ctx: Context):
    if not ctx.bands:
        raise MissingRequirement([Issue(1, 1, "MissingRequirement", "band export needs a material section")])
    return ctx.bands


def export_bands(ctx: Context, kind: str = "bands") -> SpectrumTable:
    bands = _require_bands(ctx)
    a = bands[0].a
    meta = {"photokin_version": __version__, "export": kind, "a_nm": format_float(a)}
    if kind == "bands":
        n = np.concatenate([np.full(b.k_samples.size, b.n, dtype=float) for b in bands])
        k = np.concatenate([b.k_samples * a / math.pi for b in bands])
        E = np.concatenate([b.E for b in bands])
        return SpectrumTable({"n": n, "k_a_over_pi": k, "E_eV": E}, meta)
    if kind == "dos":
        lo = min(b.E_lo for b in bands)
        hi = max(b.E_hi for b in bands)
        edges = np.linspace(lo, hi, 401)
        E = 0.5 * (edges[1:] + edges[:-1])
        rho = [sum(dos_band(b, float(e)) for b in bands) for e in E]
        return SpectrumTable({"E_eV": E, "rho": rho}, meta)
    if kind == "bloch":
        rows = []
        x = np.linspace(-0.5, 0.5, 17) * a
        for b in bands:
            for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
                k = frac * math.pi / a
                u = b.u(k, x)
                rows.extend((b.n, frac, xv / a, uv.real, uv.imag) for xv, uv in zip(x, u))
        data = np.array(rows, dtype=float)
        names = ["n", "k_a_over_pi", "x_over_a", "re_u", "im_u"]
        return SpectrumTable({name: data[:, j] for j, name in enumerate(names)}, meta)
    if kind == "jdos":
        s = ctx.scenario
        pair = [s.get("process", key) for key in ("initial", "final")]
        if all(p and p.startswith("band") for p in pair):
            low, high = sorted((ctx.ref(p) for p in pair), key=lambda b: b.n)
        else:
            low, high = bands[0], bands[min(1, len(bands) - 1)]
        if low is high:
            raise RangeError([Issue(1, 1, "RangeError", "joint DOS needs two distinct bands")])
        lo, hi = joint_support(low, high)
        edges = np.linspace(lo, hi, 201)
        dE = 0.5 * (edges[1:] + edges[:-1])
        meta.update({"valence_band": str(low.n), "conduction_band": str(high.n)})
        return SpectrumTable({"dE_eV": dE, "rho_joint": [joint_dos(low, high, float(e)) for e in dE]}, meta)
    raise ValueError(f"unknown export kind {kind!r}")
