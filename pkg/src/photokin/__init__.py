"""Photon emission, absorption and scattering rates for 1D bound states and Kronig-Penney bands."""

__version__ = "0.1.0"

from .core import DEFAULT_CONSTANTS, Constants, load_constants  # noqa: E402

__all__ = ["__version__", "Constants", "DEFAULT_CONSTANTS", "load_constants"]
