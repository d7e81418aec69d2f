import dataclasses
import math

import numpy as np
import pytest

from photokin.absorption import abs_cc_interband, abs_cd_band, abs_dc_band, abs_dd
from photokin.bloch import KronigPenney, joint_support, solve_dispersion
from photokin.bound import dipole_matrix_element, oscillator_state
from photokin.core import DEFAULT_CONSTANTS as C, Lineshape
from photokin.errors import BroadLineWarning, EnergyOrdering

X = (1.0, 0.0, 0.0)


@pytest.fixture(scope="module")
def kp3():
    return solve_dispersion(KronigPenney(1.0, -3.0), 3)


def test_dd_peak_and_average():
    g, e = oscillator_state(0, 1.0), oscillator_state(1, 1.0)
    omega = 1.0 / C.hbar
    gamma = 1e-3 * omega
    m2 = dipole_matrix_element(e, g).strength
    peak = abs_dd(e, g, X, omega / C.c, Lineshape.lorentz(gamma)).sigma
    assert peak == pytest.approx(4 * math.pi**2 * C.alpha_s * omega * m2 / (math.pi * gamma), rel=1e-12)
    avg = abs_dd(e, g, X, omega / C.c, Lineshape.lorentz(gamma), angle_averaged=True).sigma
    assert avg == pytest.approx(peak / 3, rel=1e-14)
    with pytest.raises(EnergyOrdering):
        abs_dd(g, e, X, omega / C.c, Lineshape())
    with pytest.warns(BroadLineWarning):
        abs_dd(e, g, X, omega / C.c, Lineshape.lorentz(0.2 * omega))


def test_dd_broad_line_factor():
    g, e = oscillator_state(0, 1.0), oscillator_state(1, 1.0)
    omega = 1.0 / C.hbar
    shape = Lineshape.lorentz(1e-3 * omega)
    plain = abs_dd(e, g, X, 0.9 * omega / C.c, shape).sigma
    scaled = abs_dd(e, g, X, 0.9 * omega / C.c, shape, broad_line_factor=True).sigma
    assert scaled / plain == pytest.approx(1 / 0.9, rel=1e-14)


def test_dc_threshold_and_paths(kp3):
    band = kp3[1]
    acceptor = oscillator_state(1, 2.0, offset=-2.5)
    below = (band.E_lo - acceptor.energy - 0.01) / C.hbar_c
    assert abs_dc_band(acceptor, band, X, below).sigma == 0.0
    res = abs_dc_band(acceptor, band, X, (0.5 * (band.E_lo + band.E_hi) - acceptor.energy) / C.hbar_c)
    assert res.metadata["matrix_element_spread"] < 0.01
    assert res.sigma_dos == pytest.approx(res.sigma, rel=1e-2)
    vals = []
    for d in (1e-5, 1e-7):
        k = (band.E_lo + d - acceptor.energy) / C.hbar_c
        vals.append(abs_dc_band(acceptor, band, X, k).sigma * math.sqrt(d))
    assert vals[0] == pytest.approx(vals[1], rel=1e-2)


def test_cd_gap_and_reciprocity(kp3):
    band = kp3[1]
    state = oscillator_state(1, 2.0)
    E_band = band.energy(1.2)
    photon = 0.8
    low = dataclasses.replace(state, energy=E_band - photon)
    high = dataclasses.replace(state, energy=E_band + photon)
    dc = abs_dc_band(low, band, X, photon / C.hbar_c)
    cd = abs_cd_band(high, band, X, photon / C.hbar_c)
    assert cd.sigma == pytest.approx(dc.sigma, rel=1e-12)
    gap = 0.5 * (kp3[1].E_hi + kp3[2].E_lo)
    assert abs_cd_band(dataclasses.replace(state, energy=gap + photon), band, X, photon / C.hbar_c).sigma == 0.0
    vals = []
    for d in (1e-5, 1e-7):
        top = dataclasses.replace(state, energy=band.E_hi - d + photon)
        vals.append(abs_cd_band(top, band, X, photon / C.hbar_c).sigma * math.sqrt(d))
    assert vals[0] == pytest.approx(vals[1], rel=1e-2)


def test_interband(kp3):
    lo, hi = joint_support(kp3[1], kp3[2])
    ks = np.linspace(0.0, math.pi, 20001)
    assert lo == pytest.approx(float(np.min(kp3[2].energies(ks) - kp3[1].energies(ks))), abs=1e-6)
    assert abs_cc_interband(kp3[1], kp3[2], X, 0.99 * lo / C.hbar_c).sigma == 0.0
    assert abs_cc_interband(kp3[1], kp3[2], X, (lo + 1e-4) / C.hbar_c).sigma > 0.0
    mid = abs_cc_interband(kp3[1], kp3[2], X, 0.5 * (lo + hi) / C.hbar_c)
    assert mid.sigma_dos == pytest.approx(mid.sigma, rel=1e-12)
