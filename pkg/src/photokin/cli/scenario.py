"""Line-oriented scenario files: `section.key = value`, `#` comments."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from ..errors import PhotokinError

PROCESSES = (
    "emission.dd", "emission.dc", "emission.cd", "emission.cc",
    "absorption.dd", "absorption.dc", "absorption.cd", "absorption.cc",
    "scattering.dd", "scattering.dc", "scattering.cd", "scattering.cc",
    "scattering.dd_ww", "scattering.full", "scattering.cc_spectral",
    "recoil.shift", "recombination.eh",
)
POLARIZATIONS = ("x", "y", "z", "e1", "e2", "plus", "minus", "sum", "average")


@dataclass(frozen=True)
class Issue:
    line: int
    column: int
    kind: str
    message: str

    def __str__(self):
        return f"{self.line}:{self.column}: {self.kind}: {self.message}"


class ScenarioError(PhotokinError):
    """All problems found in a scenario; the class reflects the first one."""

    kind = "ScenarioError"

    def __init__(self, issues: list[Issue]):
        self.issues = list(issues)
        super().__init__("\n".join(str(i) for i in self.issues))


class ScenarioSyntaxError(ScenarioError):
    kind = "SyntaxError"


class UnknownKey(ScenarioError):
    kind = "UnknownKey"


class MissingRequirement(ScenarioError):
    kind = "MissingRequirement"


class RangeError(ScenarioError):
    kind = "RangeError"


_ERROR_CLASSES = {c.kind: c for c in (ScenarioSyntaxError, UnknownKey, MissingRequirement, RangeError)}


# value kinds --------------------------------------------------------------

class _Bad(Exception):
    def __init__(self, kind: str, message: str):
        self.kind, self.message = kind, message


def _float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise _Bad("SyntaxError", f"expected a number, got {text!r}") from None
    if not math.isfinite(v):
        raise _Bad("RangeError", "value must be finite")
    return v


def _int(text: str) -> int:
    if not re.fullmatch(r"[+-]?[0-9]+", text):
        raise _Bad("SyntaxError", f"expected an integer, got {text!r}")
    return int(text)


@dataclass(frozen=True)
class Field:
    kind: str  # float, int, enum, bool, str, vec3, floats, ref, refs
    lo: float | None = None
    hi: float | None = None
    choices: tuple = ()
    open_lo: bool = False

    def parse(self, text: str):
        if self.kind == "float":
            v = _float(text)
            self._range(v)
            return v
        if self.kind == "int":
            v = _int(text)
            self._range(v)
            return v
        if self.kind == "bool":
            if text not in ("true", "false"):
                raise _Bad("SyntaxError", "expected true or false")
            return text == "true"
        if self.kind == "enum":
            if text not in self.choices:
                raise _Bad("RangeError", f"{text!r} is not one of {', '.join(self.choices)}")
            return text
        if self.kind == "str":
            return text
        if self.kind in ("vec3", "floats"):
            parts = [p.strip() for p in text.split(",")]
            values = tuple(_float(p) for p in parts)
            if self.kind == "vec3":
                if len(values) != 3:
                    raise _Bad("SyntaxError", "expected three comma-separated numbers")
                if abs(math.sqrt(sum(v * v for v in values)) - 1.0) > 1e-9:
                    raise _Bad("RangeError", "direction must be a unit vector")
            else:
                for v in values:
                    self._range(v)
            return values
        if self.kind == "ref":
            return _ref(text)
        if self.kind == "refs":
            return tuple(_ref(p.strip()) for p in text.split(","))
        raise AssertionError(self.kind)

    def _range(self, v):
        if self.lo is not None and (v < self.lo or (self.open_lo and v == self.lo)):
            raise _Bad("RangeError", f"{v!r} below the allowed minimum {self.lo!r}")
        if self.hi is not None and v > self.hi:
            raise _Bad("RangeError", f"{v!r} above the allowed maximum {self.hi!r}")

    def render(self, value) -> str:
        if self.kind == "float":
            return repr(float(value))
        if self.kind == "bool":
            return "true" if value else "false"
        if self.kind in ("vec3", "floats"):
            return ", ".join(repr(float(v)) for v in value)
        if self.kind == "refs":
            return ", ".join(value)
        return str(value)


def _ref(text: str) -> str:
    if not re.fullmatch(r"(state|band)[1-9][0-9]*", text):
        raise _Bad("SyntaxError", f"expected stateN or bandN, got {text!r}")
    return text


def _pos(open_lo=True, hi=None):
    return Field("float", 0.0, hi, open_lo=open_lo)


SCHEMA: dict[str, dict[str, Field]] = {
    "material": {
        "kind": Field("enum", choices=("KronigPenney", "FreeElectron")),
        "a_nm": _pos(),
        "strength": Field("float", -1e4, 1e4),
        "bands": Field("int", 1, 16),
        "k_points": Field("int", 64, 65536),
        "cell_points": Field("int", 16, 8192),
    },
    "state": {
        "kind": Field("enum", choices=("Hydrogenic", "Oscillator", "GridPotential")),
        "n": Field("int", 0, 200),
        "l": Field("int", 0, 2),
        "m": Field("int", -2, 2),
        "Z": _pos(),
        "hbar_omega_ev": _pos(),
        "offset_ev": Field("float", -1e6, 1e6),
        "potential": Field("enum", choices=("harmonic", "square_well", "infinite_well", "file")),
        "x_min_nm": Field("float", -1e4, 1e4),
        "x_max_nm": Field("float", -1e4, 1e4),
        "points": Field("int", 64, 65536),
        "index": Field("int", 0, 1000),
        "depth_ev": _pos(),
        "width_nm": _pos(),
        "path": Field("str"),
    },
    "process": {
        "kind": Field("enum", choices=PROCESSES),
        "initial": Field("ref"),
        "final": Field("ref"),
        "k_e": Field("float", -1e4, 1e4),
        "intermediates": Field("refs"),
        "mass_energy_ev": _pos(),
        "K_nm": Field("float", -1e6, 1e6),
        "theta_rad": Field("float", -10.0, 10.0),
    },
    "photon": {
        "energy_min_ev": _pos(),
        "energy_max_ev": _pos(),
        "points": Field("int", 2, 100000),
        "energies": Field("floats", 0.0, None, open_lo=True),
        "incident_ev": _pos(),
        "direction": Field("vec3"),
        "polarization": Field("enum", choices=POLARIZATIONS),
        "out_direction": Field("vec3"),
        "out_polarization": Field("enum", choices=POLARIZATIONS[:7]),
    },
    "numerics": {
        "eta_per_fs": _pos(),
        "gamma_per_fs": _pos(),
        "resonant_only": Field("bool"),
        "broad_line_factor": Field("bool"),
        "angle_averaged": Field("bool"),
        "k_nodes": Field("int", 8, 4096),
        "window_ev": _pos(),
        "oscillator_dim": Field("enum", choices=("OneD", "ThreeD")),
        "jobs": Field("int", 1, 64),
    },
    "output": {
        "format": Field("enum", choices=("csv", "json")),
        "path": Field("str"),
    },
}

STATE_KEYS = {
    "Hydrogenic": ("kind", "n", "l", "m", "Z"),
    "Oscillator": ("kind", "n", "hbar_omega_ev", "offset_ev"),
    "GridPotential": ("kind", "potential", "index", "points", "x_min_nm", "x_max_nm",
                      "hbar_omega_ev", "depth_ev", "width_nm", "path", "offset_ev"),
}
POTENTIAL_NEEDS = {
    "harmonic": ("hbar_omega_ev",),
    "square_well": ("depth_ev", "width_nm"),
    "infinite_well": (),
    "file": ("path",),
}


@dataclass
class Entry:
    value: object
    line: int
    column: int  # column of the value


@dataclass
class Scenario:
    sections: dict[str, dict[str, Entry]] = field(default_factory=dict)

    def get(self, section: str, key: str, default=None):
        entry = self.sections.get(section, {}).get(key)
        return default if entry is None else entry.value

    def has(self, section: str, key: str) -> bool:
        return key in self.sections.get(section, {})

    @property
    def process(self) -> str:
        return self.get("process", "kind")

    @property
    def state_names(self) -> list[str]:
        return sorted((s for s in self.sections if s.startswith("state")), key=lambda s: int(s[5:]))

    def to_text(self) -> str:
        """Canonical text: fixed section and key order, shortest float form."""
        out = []
        order = ["material"] + self.state_names + ["process", "photon", "numerics", "output"]
        for section in order:
            if section not in self.sections:
                continue
            schema = SCHEMA["state" if section.startswith("state") else section]
            entries = self.sections[section]
            for key in schema:
                if key in entries:
                    out.append(f"{section}.{key} = {schema[key].render(entries[key].value)}")
        return "\n".join(out) + ("\n" if out else "")

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        flat = lambda s: {(sec, k): e.value for sec, d in s.sections.items() for k, e in d.items()}  # noqa: E731
        return flat(self) == flat(other)


_KEY_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\.([A-Za-z_][A-Za-z0-9_]*)")


def _section_schema(section: str):
    if re.fullmatch(r"state[1-9][0-9]{0,2}", section):
        return SCHEMA["state"]
    return None if section == "state" else SCHEMA.get(section)


def parse_scenario(text: str | bytes) -> Scenario:
    """Parse and validate; raises a ScenarioError subclass listing every problem."""
    issues: list[Issue] = []
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            prefix = bytes(text)[: exc.start]
            line = prefix.count(b"\n") + 1
            col = exc.start - (prefix.rfind(b"\n") + 1) + 1
            _raise([Issue(line, col, "SyntaxError", "input is not valid UTF-8")])
    scenario = Scenario()
    for lineno, raw in enumerate(text.split("\n"), start=1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        if "=" not in body:
            issues.append(Issue(lineno, len(body) - len(body.lstrip()) + 1, "SyntaxError",
                                "expected `section.key = value`"))
            continue
        lhs, _, rhs = body.partition("=")
        key_col = len(lhs) - len(lhs.lstrip()) + 1
        value_col = len(lhs) + 2 + (len(rhs) - len(rhs.lstrip()))
        name, value_text = lhs.strip(), rhs.strip()
        match = _KEY_RE.fullmatch(name)
        if not match:
            issues.append(Issue(lineno, key_col, "SyntaxError", f"malformed key {name!r}"))
            continue
        section, key = match.groups()
        schema = _section_schema(section)
        if schema is None:
            issues.append(Issue(lineno, key_col, "UnknownKey", f"unknown section {section!r}"))
            continue
        if key not in schema:
            issues.append(Issue(lineno, key_col + len(section) + 1, "UnknownKey",
                                f"unknown key {key!r} in section {section!r}"))
            continue
        if not value_text:
            issues.append(Issue(lineno, value_col, "SyntaxError", f"missing value for {name}"))
            continue
        if key in scenario.sections.get(section, {}):
            issues.append(Issue(lineno, key_col, "SyntaxError", f"duplicate key {name}"))
            continue
        try:
            value = schema[key].parse(value_text)
        except _Bad as bad:
            issues.append(Issue(lineno, value_col, bad.kind, f"{name}: {bad.message}"))
            continue
        scenario.sections.setdefault(section, {})[key] = Entry(value, lineno, value_col)
    if not issues:
        issues = _validate(scenario)
    if issues:
        _raise(issues)
    return scenario


def _raise(issues: list[Issue]):
    raise _ERROR_CLASSES[issues[0].kind](issues)


# semantic validation -----------------------------------------------------

_NEEDS = {
    # process: (initial kind, final kind, needs gamma, intermediates)
    "emission.dd": ("state", "state", True, None),
    "emission.dc": ("state", "band", False, None),
    "emission.cd": ("band", "state", False, None),
    "emission.cc": ("band", "band", False, None),
    "absorption.dd": ("state", "state", True, None),
    "absorption.dc": ("state", "band", False, None),
    "absorption.cd": ("band", "state", False, None),
    "absorption.cc": ("band", "band", False, None),
    "scattering.dd": ("state", "state", False, "any"),
    "scattering.dd_ww": ("state", "state", True, "any"),
    "scattering.full": ("state", "state", False, "any"),
    "scattering.dc": ("state", "band", False, "any"),
    "scattering.cd": ("band", "state", False, "any"),
    "scattering.cc": ("band", "band", False, "band"),
    "scattering.cc_spectral": ("band", "band", False, "band"),
    "recoil.shift": (None, None, False, None),
    "recombination.eh": ("band", "band", True, None),
}


def _validate(s: Scenario) -> list[Issue]:
    issues: list[Issue] = []

    def missing(message, line=1, column=1):
        issues.append(Issue(line, column, "MissingRequirement", message))

    def at(section, key):
        e = s.sections[section][key]
        return e.line, e.column

    if not s.has("process", "kind"):
        missing("process.kind is required")
        return issues
    proc = s.process
    pline, pcol = at("process", "kind")

    material = s.sections.get("material", {})
    if material:
        if "kind" not in material:
            missing("material.kind is required when a material is declared")
        else:
            if "a_nm" not in material:
                missing(f"material.a_nm is required for {s.get('material', 'kind')}", *at("material", "kind"))
            if s.get("material", "kind") == "KronigPenney" and "strength" not in material:
                missing("material.strength is required for KronigPenney", *at("material", "kind"))
            if s.get("material", "kind") == "FreeElectron" and "strength" in material:
                issues.append(Issue(*at("material", "strength"), "UnknownKey",
                                    "material.strength does not apply to FreeElectron"))
    n_bands = s.get("material", "bands", 4)

    for name in s.state_names:
        entries = s.sections[name]
        if "kind" not in entries:
            first = min(entries.values(), key=lambda e: e.line)
            missing(f"{name}.kind is required", first.line, 1)
            continue
        kind = entries["kind"].value
        for key, entry in entries.items():
            if key not in STATE_KEYS[kind]:
                issues.append(Issue(entry.line, 1, "UnknownKey", f"{name}.{key} does not apply to {kind}"))
        kline, kcol = at(name, "kind")
        needs = {"Hydrogenic": ("n",), "Oscillator": ("n", "hbar_omega_ev"),
                 "GridPotential": ("potential", "index")}[kind]
        for key in needs:
            if key not in entries:
                missing(f"{name}.{key} is required for {kind}", kline, kcol)
        if kind == "Hydrogenic":
            n, l, m = s.get(name, "n", 1), s.get(name, "l", 0), s.get(name, "m", 0)
            if not (1 <= n <= 3 and l < n and abs(m) <= l):
                issues.append(Issue(kline, kcol, "RangeError", f"{name}: need 1 <= n <= 3, l < n, |m| <= l"))
        if kind == "GridPotential" and "potential" in entries:
            grid_keys = ("points", "x_min_nm", "x_max_nm")
            for key in grid_keys:
                if entries["potential"].value == "file" and key in entries:
                    issues.append(Issue(entries[key].line, 1, "UnknownKey",
                                        f"{name}.{key} does not apply to a potential file"))
                elif entries["potential"].value != "file" and key not in entries:
                    missing(f"{name}.{key} is required for potential {entries['potential'].value}",
                            *at(name, "potential"))
            for key in POTENTIAL_NEEDS[entries["potential"].value]:
                if key not in entries:
                    missing(f"{name}.{key} is required for potential {entries['potential'].value}",
                            *at(name, "potential"))
            if "x_min_nm" in entries and "x_max_nm" in entries and not (
                    entries["x_max_nm"].value > entries["x_min_nm"].value):
                issues.append(Issue(*at(name, "x_max_nm"), "RangeError", "x_max_nm must exceed x_min_nm"))
            if "index" in entries and entries["index"].value >= entries.get("points", Entry(65536, 0, 0)).value // 4:
                issues.append(Issue(*at(name, "index"), "RangeError", "state index too high for the grid"))

    init_kind, final_kind, needs_gamma, inter = _NEEDS[proc]

    def check_ref(key, want):
        if not s.has("process", key):
            missing(f"{proc} requires process.{key} ({'a discrete state' if want == 'state' else 'a band'})",
                    pline, pcol)
            return
        ref = s.get("process", key)
        line, col = at("process", key)
        if want == "state" and not ref.startswith("state"):
            issues.append(Issue(line, col, "MissingRequirement", f"{proc} needs a discrete state for process.{key}"))
        elif want == "band" and not ref.startswith("band"):
            issues.append(Issue(line, col, "MissingRequirement", f"{proc} needs a band for process.{key}"))
        else:
            _resolve(ref, line, col)

    def _resolve(ref, line, col):
        if ref.startswith("state"):
            if ref not in s.sections:
                issues.append(Issue(line, col, "MissingRequirement", f"{ref} is not declared"))
        else:
            if not material:
                issues.append(Issue(line, col, "MissingRequirement", f"{ref} needs a material section"))
            elif int(ref[4:]) > n_bands:
                issues.append(Issue(line, col, "RangeError", f"{ref} exceeds material.bands = {n_bands}"))

    needs_state = "state" in (init_kind, final_kind)
    if needs_state and not s.state_names:
        missing(f"{proc} requires at least one discrete state", pline, pcol)
    if "band" in (init_kind, final_kind) and not material:
        missing(f"{proc} requires a material with at least one band", pline, pcol)
    if init_kind:
        check_ref("initial", init_kind)
        check_ref("final", final_kind)
    if proc in ("emission.cc", "scattering.cc", "recombination.eh") and not s.has("process", "k_e"):
        missing(f"{proc} requires process.k_e", pline, pcol)
    if proc == "recoil.shift" and not s.has("process", "mass_energy_ev"):
        missing("recoil.shift requires process.mass_energy_ev", pline, pcol)
    if needs_gamma and not s.has("numerics", "gamma_per_fs"):
        missing(f"{proc} requires numerics.gamma_per_fs", pline, pcol)
    if inter:
        if not s.has("process", "intermediates"):
            missing(f"{proc} requires process.intermediates", pline, pcol)
        else:
            line, col = at("process", "intermediates")
            for ref in s.get("process", "intermediates"):
                if inter == "band" and not ref.startswith("band"):
                    issues.append(Issue(line, col, "MissingRequirement",
                                        f"{proc} takes band intermediates only, got {ref}"))
                else:
                    _resolve(ref, line, col)
    if proc == "scattering.dd_ww" and not s.has("photon", "incident_ev"):
        missing("scattering.dd_ww requires photon.incident_ev", pline, pcol)
    if proc in ("scattering.dc", "scattering.cd", "scattering.cc_spectral") and not s.has("photon", "incident_ev"):
        missing(f"{proc} requires photon.incident_ev", pline, pcol)

    photon = s.sections.get("photon", {})
    grid_keys = [k for k in ("energy_min_ev", "energy_max_ev", "points") if k in photon]
    if "energies" in photon:
        if grid_keys:
            issues.append(Issue(*at("photon", grid_keys[0]), "SyntaxError",
                                "use either photon.energies or the min/max/points grid, not both"))
        values = photon["energies"].value
        if len(values) < 2 or any(b <= a for a, b in zip(values, values[1:])):
            issues.append(Issue(*at("photon", "energies"), "RangeError",
                                "photon energies must be strictly increasing with at least 2 points"))
    elif len(grid_keys) != 3:
        missing("photon grid needs energy_min_ev, energy_max_ev and points (or energies)")
    elif not photon["energy_max_ev"].value > photon["energy_min_ev"].value:
        issues.append(Issue(*at("photon", "energy_max_ev"), "RangeError",
                            "energy_max_ev must exceed energy_min_ev"))
    return issues


def photon_grid(s: Scenario):
    import numpy as np

    if s.has("photon", "energies"):
        return np.array(s.get("photon", "energies"), dtype=float)
    return np.linspace(s.get("photon", "energy_min_ev"), s.get("photon", "energy_max_ev"), s.get("photon", "points"))
