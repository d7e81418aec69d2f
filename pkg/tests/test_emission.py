import dataclasses
import math

import numpy as np
import pytest

from photokin.bloch import KronigPenney, cell_dipole, integrate_edge_singular, solve_dispersion
from photokin.bound import Potential1D, hydrogenic_state, oscillator_state, solve_bound_states
from photokin.core import DEFAULT_CONSTANTS as C, polarization_basis, sphere_grid
from photokin.emission import (
    band_current,
    einstein_A,
    electron_capture_cross_section,
    emission_cc,
    emission_dc_rate_density,
    emission_dc_spectrum,
    emission_dd_differential,
    hole_capture_cross_section,
)
from photokin.errors import NonDecayingPair, ZeroCurrent

H1S, H2P0 = hydrogenic_state(1, 0, 0), hydrogenic_state(2, 1, 0)


@pytest.fixture(scope="module")
def kp3():
    return solve_dispersion(KronigPenney(1.0, -3.0), 3)


@pytest.fixture(scope="module")
def donor():
    # an odd oscillator level above band 1, confined to one cell
    return oscillator_state(1, 2.0, offset=-2.0)


def test_differential_geometry():
    assert emission_dd_differential(H1S, H2P0, (0, 0, 1)).value == pytest.approx(0.0, abs=1e-30)
    got = emission_dd_differential(H1S, H2P0, (1, 0, 0), eps=(0, 0, 1)).value
    omega = (H2P0.energy - H1S.energy) / C.hbar
    d = 128 * math.sqrt(2) / 243 * C.bohr_radius
    assert got == pytest.approx(C.alpha_s / (2 * math.pi * C.c**2) * omega**3 * d**2, rel=1e-12)
    with pytest.raises(ValueError):
        emission_dd_differential(H1S, H2P0, (1, 0, 0), eps=(1, 0, 0))


def test_differential_integrates_to_einstein_A():
    dirs, w = sphere_grid()
    total = sum(wi * emission_dd_differential(H1S, H2P0, k).value for k, wi in zip(dirs, w))
    per_pol = sum(wi * emission_dd_differential(H1S, H2P0, k, eps=e).value
                  for k, wi in zip(dirs, w) for e in polarization_basis(k).vectors())
    A = einstein_A(H1S, H2P0).value
    assert total == pytest.approx(A, rel=1e-12)
    assert per_pol == pytest.approx(A, rel=1e-12)


def test_einstein_A_rules():
    states = solve_bound_states(Potential1D.box(0.0, 1.0, 1024), 3)
    assert einstein_A(states[0], states[2]).value == pytest.approx(0.0, abs=1e-12 * einstein_A(states[0], states[1]).value)
    scaled = dataclasses.replace(states[1], psi=3.0 * states[1].psi)
    assert einstein_A(states[0], scaled).value == pytest.approx(9.0 * einstein_A(states[0], states[1]).value, rel=1e-12)
    with pytest.raises(NonDecayingPair):
        einstein_A(H2P0, H1S)


def test_dc_spectrum(kp3, donor):
    band = kp3[0]
    k_gap = (donor.energy - (band.E_lo - 0.1)) / C.hbar_c
    assert emission_dc_rate_density(donor, band, k_gap) == 0.0
    edge_k = (donor.energy - band.E_lo) / C.hbar_c
    vals = [emission_dc_rate_density(donor, band, edge_k - d / C.hbar_c) * math.sqrt(d) for d in (1e-5, 1e-7)]
    assert vals[0] == pytest.approx(vals[1], rel=1e-2)
    ks = np.linspace((donor.energy - band.E_hi) / C.hbar_c + 1e-6, edge_k - 1e-6, 101)
    table = emission_dc_spectrum(donor, band, ks)
    rates = table.column("rate_per_fs_per_k")
    assert float(table.metadata["total_rate_per_fs"]) == pytest.approx(np.trapezoid(rates, ks), rel=1e-15)


def test_capture_cross_sections(kp3, donor):
    band = kp3[0]
    with pytest.raises(ZeroCurrent):
        hole_capture_cross_section(donor, band, 0.0)
    sigma = hole_capture_cross_section(donor, band, 0.5 * math.pi).value
    assert 0 < sigma < math.inf
    assert hole_capture_cross_section(donor, band, -0.5 * math.pi).value == pytest.approx(sigma, rel=1e-10)
    # band 1 of the free lattice has a constant Bloch factor, so an even level cannot couple
    flat = solve_dispersion(KronigPenney(1.0, 0.0), 1)[0]
    allowed = hole_capture_cross_section(oscillator_state(1, 2.0), flat, 1.0).value
    forbidden = hole_capture_cross_section(oscillator_state(0, 2.0), flat, 1.0).value
    assert forbidden <= 1e-12 * allowed
    # electron capture from the same band point into an image state below it
    below = dataclasses.replace(donor, energy=2 * band.energy(0.5 * math.pi) - donor.energy)
    assert electron_capture_cross_section(below, band, 0.5 * math.pi).value == pytest.approx(sigma, rel=1e-12)
    with pytest.raises(NonDecayingPair):
        electron_capture_cross_section(donor, band, 0.5 * math.pi)


def test_band_current_matches_group_velocity(kp3):
    from photokin.bloch import group_velocity

    band = kp3[1]
    for k in (0.4, 1.7, 2.9):
        assert band_current(band, k) == pytest.approx(group_velocity(band, k) / C.hbar / (2 * math.pi), rel=1e-8)


def test_capture_rate_recovers_dc_total(kp3, donor):
    band = kp3[0]
    x, w = np.polynomial.legendre.leggauss(200)
    ks = math.pi * x
    via_sigma = sum(math.pi * wi * hole_capture_cross_section(donor, band, k).value
                    * abs(band_current(band, k)) for k, wi in zip(ks, w))
    lo = (donor.energy - band.E_hi) / C.hbar_c
    hi = (donor.energy - band.E_lo) / C.hbar_c
    via_spectrum = integrate_edge_singular(lambda kp: emission_dc_rate_density(donor, band, kp), lo, hi)
    assert via_sigma == pytest.approx(via_spectrum, rel=1e-6)


def test_interband_emission(kp3):
    kp7 = solve_dispersion(KronigPenney(1.0, -7.0), 3)
    res = emission_cc(kp7[2], kp7[1], 0.0)
    amp = cell_dipole(kp7[1], kp7[2], 0.0)
    omega = (kp7[2].energy(0.0) - kp7[1].energy(0.0)) / C.hbar
    assert res.value == pytest.approx(4 * C.alpha_s / (3 * C.c**2) * omega**3 * amp.strength, rel=1e-12)
    assert emission_cc(kp3[2], kp3[1], 1.1).value == pytest.approx(emission_cc(kp3[2], kp3[1], -1.1).value, rel=1e-10)
    k_hat = (0.0, 0.6, 0.8)
    unpol = emission_cc(kp3[2], kp3[1], 1.1, k_hat=k_hat).value
    parts = sum(emission_cc(kp3[2], kp3[1], 1.1, k_hat=k_hat, eps=e).value for e in polarization_basis(k_hat).vectors())
    assert parts == pytest.approx(unpol, rel=1e-12)
    with pytest.raises(NonDecayingPair):
        emission_cc(kp3[1], kp3[2], 1.1)
