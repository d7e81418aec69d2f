"""Angular quadrature on the sphere and over rotations."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=16)
def _sphere(n_theta: int, n_phi: int):
    ct, wt = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1.0 - ct**2)
    dirs = np.stack(
        [
            np.outer(st, np.cos(phi)).ravel(),
            np.outer(st, np.sin(phi)).ravel(),
            np.repeat(ct, n_phi),
        ],
        axis=1,
    )
    weights = np.repeat(wt, n_phi) * (2.0 * math.pi / n_phi)
    dirs.setflags(write=False)
    weights.setflags(write=False)
    return dirs, weights


def sphere_grid(n_theta: int = 16, n_phi: int = 32):
    """Unit directions and solid-angle weights (summing to 4 pi).

    Gauss-Legendre in cos(theta) times trapezoid in phi.
    """
    return _sphere(int(n_theta), int(n_phi))


def _rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rot_y(b):
    c, s = math.cos(b), math.sin(b)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


@lru_cache(maxsize=4)
def _rotations(n: int):
    cb, wb = np.polynomial.legendre.leggauss(n)
    angles = 2.0 * math.pi * np.arange(n) / n
    mats, weights = [], []
    for a in angles:
        ra = _rot_z(a)
        for b, w in zip(np.arccos(cb), wb):
            rab = ra @ _rot_y(b)
            for g in angles:
                mats.append(rab @ _rot_z(g))
                weights.append(w / (2.0 * n * n))
    return np.array(mats), np.array(weights)


def rotation_average(func, n: int = 8) -> float:
    """Average func(R) over SO(3) with a product Euler-angle rule.

    Exact for integrands polynomial of degree < n in the matrix entries.
    """
    mats, weights = _rotations(int(n))
    return float(sum(w * func(r) for r, w in zip(mats, weights)))
