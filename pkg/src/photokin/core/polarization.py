from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..errors import NonUnitVector
from .quadrature import sphere_grid

CVec3 = NDArray[np.complex128]



def cvec3(x=0.0, y=0.0, z=0.0) -> CVec3:
    return np.array([x, y, z], dtype=complex)


def _unit(k_hat) -> NDArray[np.float64]:
    k = np.asarray(k_hat, dtype=float).reshape(3)
    kx, ky, kz = k.tolist()
    norm = math.sqrt(kx * kx + ky * ky + kz * kz)
    if abs(norm - 1.0) > 1e-9:
        raise NonUnitVector(f"|k_hat| = {norm!r}")
    return k


@dataclass(frozen=True)
class PolarizationBasis:
    k_hat: NDArray[np.float64]
    eps1: CVec3
    eps2: CVec3
    kind: str

    def vectors(self) -> tuple[CVec3, CVec3]:
        return self.eps1, self.eps2

    def projector(self) -> NDArray[np.complex128]:
        """Sum over the basis of eps eps^dagger."""
        return np.outer(self.eps1, self.eps1.conj()) + np.outer(self.eps2, self.eps2.conj())


def polarization_basis(k_hat, kind: str = "Cartesian") -> PolarizationBasis:
    k = _unit(k_hat)
    kx, ky, kz = k.tolist()
    # z x k = (-ky, kx, 0)
    norm = math.hypot(kx, ky)
    if norm < 1e-12:
        e1 = np.array([1.0, 0.0, 0.0])
        e2 = np.array([0.0, math.copysign(1.0, kz), 0.0])
    else:
        ax, ay = -ky / norm, kx / norm
        e1 = np.array([ax, ay, 0.0])
        e2 = np.array([-kz * ay, kz * ax, kx * ay - ky * ax])
    if kind == "Cartesian":
        eps1, eps2 = e1.astype(complex), e2.astype(complex)
    elif kind == "Chiral":
        eps1 = (e1 + 1j * e2) / math.sqrt(2.0)
        eps2 = (e1 - 1j * e2) / math.sqrt(2.0)
    else:
        raise ValueError(f"unknown basis kind {kind!r}")
    return PolarizationBasis(k, eps1, eps2, kind)


def polarization_sum(d, k_hat, kind: str = "Cartesian") -> float:
    """Sum over both transverse polarizations of |eps^dagger . d|^2."""
    basis = polarization_basis(k_hat, kind)
    d = np.asarray(d, dtype=complex)
    proj = np.stack(basis.vectors()).conj() @ d
    return float(np.sum(proj.real**2 + proj.imag**2))


def angle_average_dipole(d) -> float:
    """Orientation average of |eps . d|^2, closed form |d|^2 / 3."""
    d = np.asarray(d, dtype=complex)
    return float(np.vdot(d, d).real) / 3.0


def angle_average_quadrature(d, n_theta: int = 16, n_phi: int = 32) -> float:
    """Same average evaluated on the product sphere grid."""
    dirs, weights = sphere_grid(n_theta, n_phi)
    proj = dirs @ np.asarray(d, dtype=complex)
    return float(np.sum(weights * np.abs(proj) ** 2) / (4.0 * math.pi))
