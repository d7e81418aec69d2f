"""Physical constants in the eV / nm / fs unit system."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

FILE_KEYS = {
    "hbar_c_ev_nm": "hbar_c",
    "mec2_ev": "electron_mass_energy",
    "c_nm_fs": "c",
    "alpha_s": "alpha_s",
}


@dataclass(frozen=True)
class Constants:
    alpha_s: float = 7.2973525693e-3
    hbar_c: float = 197.3269804  # eV nm
    electron_mass_energy: float = 510998.95  # eV
    c: float = 299.792458  # nm/fs

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"constant {f.name} must be positive, got {v!r}")
        if self.alpha_s >= 1:
            raise ValueError("alpha_s must be below 1")

    @property
    def hbar(self) -> float:
        """hbar in eV fs."""
        return self.hbar_c / self.c

    @property
    def mass(self) -> float:
        """Electron mass in eV fs^2 / nm^2."""
        return self.electron_mass_energy / self.c**2

    @property
    def hbar2_over_2m(self) -> float:
        """hbar^2 / 2m in eV nm^2."""
        return self.hbar_c**2 / (2.0 * self.electron_mass_energy)

    @property
    def electron_radius(self) -> float:
        """Classical electron radius alpha hbar / (m c) in nm."""
        return self.alpha_s * self.hbar_c / self.electron_mass_energy

    @property
    def bohr_radius(self) -> float:
        return self.hbar_c / (self.alpha_s * self.electron_mass_energy)

    def as_file_dict(self) -> dict[str, float]:
        return {key: getattr(self, attr) for key, attr in FILE_KEYS.items()}


DEFAULT_CONSTANTS = Constants()


def load_constants(path: str | Path) -> Constants:
    """Read a key=value override file. Missing keys keep their defaults."""
    values = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in FILE_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown constant {key!r}")
        values[FILE_KEYS[key]] = float(value)
    return Constants(**values)
