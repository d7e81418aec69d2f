from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DeltaEvaluatedPointwise


@dataclass(frozen=True)
class Lineshape:
    """Energy-conserving profile: a symbolic delta or a Lorentzian of half width gamma (1/fs)."""

    kind: str = "Delta"
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in ("Delta", "Lorentz"):
            raise ValueError(f"unknown lineshape kind {self.kind!r}")
        if self.kind == "Lorentz":
            if self.gamma is None or not self.gamma > 0:
                raise ValueError("Lorentz lineshape needs gamma > 0")

    @classmethod
    def lorentz(cls, gamma: float) -> "Lineshape":
        return cls("Lorentz", float(gamma))

    @property
    def is_delta(self) -> bool:
        return self.kind == "Delta"


def lorentz(x, gamma: float):
    x = np.asarray(x, dtype=float)
    out = gamma / (math.pi * (x * x + gamma * gamma))
    return out if out.ndim else float(out)


def lineshape_eval(shape: Lineshape, x):
    """Pointwise profile value in 1/(angular frequency)."""
    if shape.is_delta:
        raise DeltaEvaluatedPointwise("a Delta lineshape has no pointwise value")
    return lorentz(x, shape.gamma)
