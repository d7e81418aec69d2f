"""Column tables written by the CLI and returned by spectral operations."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


def format_float(v: float) -> str:
    """Shortest round-trip decimal form."""
    return repr(float(v))


@dataclass
class SpectrumTable:
    columns: dict[str, np.ndarray] = field(default_factory=dict)
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.columns = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}
        lengths = {v.shape for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"ragged columns: {lengths}")

    @property
    def n_rows(self) -> int:
        return next(iter(self.columns.values())).size if self.columns else 0

    def column(self, name: str) -> np.ndarray:
        return self.columns[name]

    def to_csv(self) -> str:
        lines = [f"# {k}: {v}" for k, v in self.metadata.items()]
        names = list(self.columns)
        lines.append(",".join(names))
        cols = [self.columns[n] for n in names]
        for row in range(self.n_rows):
            lines.append(",".join(format_float(c[row]) for c in cols))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        def clean(v):
            v = float(v)
            return v if math.isfinite(v) else None

        payload = {
            "metadata": dict(self.metadata),
            "columns": {k: [clean(x) for x in v] for k, v in self.columns.items()},
        }
        return json.dumps(payload, indent=1) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "SpectrumTable":
        meta, rows, header = {}, [], None
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(": ")
                meta[key] = value
            elif header is None:
                header = line.split(",") if line else []
            elif line:
                rows.append([float(x) for x in line.split(",")])
        data = np.array(rows, dtype=float).reshape(len(rows), len(header or []))
        return cls({name: data[:, j] for j, name in enumerate(header or [])}, meta)

    @classmethod
    def from_json(cls, text: str) -> "SpectrumTable":
        payload = json.loads(text)
        cols = {
            k: np.array([math.nan if x is None else x for x in v], dtype=float)
            for k, v in payload["columns"].items()
        }
        return cls(cols, payload["metadata"])
