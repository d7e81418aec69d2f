import math
import warnings

import numpy as np
import pytest

from photokin.bloch import KronigPenney, cell_dipole, solve_dispersion
from photokin.core import DEFAULT_CONSTANTS as C
from photokin.emission import band_current
from photokin.errors import (
    DegenerateKinematics,
    EnergyOrdering,
    GridMismatch,
    RelativisticRegimeWarning,
    ZeroCurrent,
)
from photokin.recoil import (
    EhPair,
    RecoilContext,
    eh_on_shell_partner,
    eh_rate_per_volume,
    eh_recombination_cross_section,
    recoil_energy_shift,
    recoil_ratio,
    recoil_shift,
)

PROTON = 938272088.16 + 510998.95
X = (1.0, 0.0, 0.0)


@pytest.fixture(scope="module")
def bands():
    kp = solve_dispersion(KronigPenney(1.0, -3.0), 2)
    return kp[1], kp[0]


def test_shift_at_rest():
    omega = 10.2 / C.hbar
    shifted = recoil_shift(omega, RecoilContext(PROTON))
    assert shifted - omega == pytest.approx(-C.hbar * omega**2 / (2 * PROTON), rel=1e-6)


def test_doppler_term():
    base = recoil_energy_shift(10.2, RecoilContext(PROTON))
    K = 100.0
    side = recoil_energy_shift(10.2, RecoilContext(PROTON, K, math.pi / 2))
    assert side == pytest.approx(base, abs=1e-15)
    values = [recoil_energy_shift(10.2, RecoilContext(PROTON, K, th)) for th in np.linspace(0, math.pi, 7)]
    slope = np.polyfit(np.cos(np.linspace(0, math.pi, 7)), values, 1)
    assert slope[0] == pytest.approx(10.2 * C.hbar_c * K / PROTON, rel=1e-9)


def test_guards():
    with pytest.raises(ValueError):
        RecoilContext(0.0)
    with pytest.raises(ValueError):
        recoil_shift(1.0, RecoilContext(1000.0))
    fast = RecoilContext(PROTON, K=0.02 * PROTON / C.hbar_c)
    assert recoil_ratio(fast) == pytest.approx(0.02)
    with pytest.warns(RelativisticRegimeWarning):
        recoil_shift(1.0, fast)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        recoil_shift(1.0, RecoilContext(PROTON, K=1.0))


def test_eh_cross_section_structure(bands):
    cond, val = bands
    k_i, gamma = 1.5, 1e-3
    k_f = eh_on_shell_partner(cond, val, k_i)
    delta = abs(k_i - k_f)
    assert C.c * delta == pytest.approx((cond.energy(k_i) - val.energy(k_f)) / C.hbar, rel=1e-12)
    pair = EhPair(k_i, k_f, cond, val, gamma)
    sigma = eh_recombination_cross_section(pair, X)
    amp = cell_dipole(val, cond, k_f, k_i=k_i)
    d_omega = (cond.energy(k_i) - val.energy(k_f)) / C.hbar
    expected = (C.alpha_s / (2 * math.pi) * abs(amp.value[0]) ** 2 * d_omega**2 / delta
                / abs(band_current(cond, k_i)) / (math.pi * gamma))
    assert sigma == pytest.approx(expected, rel=1e-9)
    averaged = eh_recombination_cross_section(pair, angle_averaged=True)
    assert averaged / sigma == pytest.approx(1.0 / 3.0, rel=1e-12)


def test_eh_errors(bands):
    cond, val = bands
    with pytest.raises(DegenerateKinematics):
        eh_recombination_cross_section(EhPair(1.0, 1.0, cond, val, 1e-3), X)
    with pytest.raises(ZeroCurrent):
        eh_recombination_cross_section(EhPair(0.0, 1.0, cond, val, 1e-3), X)
    with pytest.raises(EnergyOrdering):
        eh_recombination_cross_section(EhPair(1.0, 0.5, val, cond, 1e-3), X)
    with pytest.raises(ValueError):
        EhPair(1.0, 0.5, cond, val, 0.0)
    with pytest.raises(ValueError):
        EhPair(4.0, 0.5, cond, val, 1e-3)
    with pytest.raises(ValueError):
        eh_recombination_cross_section(EhPair(1.0, 0.5, cond, val, 1e-3))


def test_rate_per_volume_limits():
    grid = np.linspace(-math.pi, math.pi, 33)
    h = grid[1] - grid[0]
    rng = np.random.default_rng(7)
    sigma = rng.random((33, 33))
    j_e = rng.random(33)
    assert eh_rate_per_volume(sigma, j_e, np.zeros(33), grid) == 0.0
    a, b = 10, 20
    spike_e = np.zeros(33)
    spike_e[a] = 1.0 / h
    spike_h = np.zeros(33)
    spike_h[b] = 1.0 / h
    assert eh_rate_per_volume(sigma, spike_e, spike_h, grid) == pytest.approx(sigma[a, b], rel=1e-14)
    with pytest.raises(GridMismatch):
        eh_rate_per_volume(sigma[:, :-1], j_e, j_e, grid)


def test_eh_gamma_dependence(bands):
    cond, val = bands
    k_i = 1.5
    k_on = eh_on_shell_partner(cond, val, k_i)
    on = [eh_recombination_cross_section(EhPair(k_i, k_on, cond, val, g), X) for g in (1e-3, 1e-4)]
    assert on[1] / on[0] == pytest.approx(10.0, rel=1e-9)
    k_off = k_on - 0.05
    off = [eh_recombination_cross_section(EhPair(k_i, k_off, cond, val, g), X) for g in (1e-3, 1e-4, 1e-5)]
    assert off[0] > off[1] > off[2]
    assert off[2] / off[1] == pytest.approx(0.1, rel=1e-6)


def test_warning_threshold_is_exact():
    mass = 1e9
    at = RecoilContext(mass, K=0.01 * mass / C.hbar_c)
    assert recoil_ratio(at) <= 0.01
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        recoil_shift(1.0, at)
    above = RecoilContext(mass, K=0.01 * mass / C.hbar_c * (1 + 1e-12))
    with pytest.warns(RelativisticRegimeWarning):
        recoil_shift(1.0, above)
