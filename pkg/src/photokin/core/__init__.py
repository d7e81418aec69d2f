from .constants import Constants, DEFAULT_CONSTANTS, load_constants
from .lineshape import Lineshape, lineshape_eval
from .polarization import (
    PolarizationBasis,
    angle_average_dipole,
    angle_average_quadrature,
    cvec3,
    polarization_basis,
    polarization_sum,
)
from .quadrature import rotation_average, sphere_grid
from .spin import spin_average

__all__ = [
    "Constants",
    "DEFAULT_CONSTANTS",
    "load_constants",
    "Lineshape",
    "lineshape_eval",
    "PolarizationBasis",
    "angle_average_dipole",
    "angle_average_quadrature",
    "cvec3",
    "polarization_basis",
    "polarization_sum",
    "rotation_average",
    "sphere_grid",
    "spin_average",
]
