import math

import numpy as np
import pytest

import oracles
from photokin.core import (
    DEFAULT_CONSTANTS as C,
    Constants,
    Lineshape,
    angle_average_dipole,
    angle_average_quadrature,
    lineshape_eval,
    load_constants,
    polarization_basis,
    polarization_sum,
    rotation_average,
    sphere_grid,
    spin_average,
)
from photokin.core.lineshape import lorentz
from photokin.errors import ChannelCountMismatch, DeltaEvaluatedPointwise, NonUnitVector

Z = (0.0, 0.0, 1.0)


def test_constants_match_reference_values():
    assert C.hbar_c == 197.3269804
    assert C.electron_mass_energy == 510998.95
    assert C.c == 299.792458
    assert C.alpha_s == 7.2973525693e-3
    assert C.hbar == pytest.approx(oracles.HBAR, rel=1e-15)
    assert C.electron_radius == pytest.approx(oracles.ELECTRON_RADIUS, rel=1e-15)
    assert C.bohr_radius == pytest.approx(oracles.BOHR, rel=1e-15)


def test_constants_file_round_trip(tmp_path):
    path = tmp_path / "c.txt"
    path.write_text("# custom\nhbar_c_ev_nm = 197.0\nalpha_s = 0.0073  # inline\n")
    loaded = load_constants(path)
    assert loaded.hbar_c == 197.0 and loaded.alpha_s == 0.0073
    assert loaded.c == C.c
    with pytest.raises(ValueError):
        bad = tmp_path / "bad.txt"
        bad.write_text("speed = 3\n")
        load_constants(bad)
    with pytest.raises(ValueError):
        Constants(hbar_c=-1.0)


def test_basis_conventions():
    basis = polarization_basis(Z)
    np.testing.assert_allclose(basis.eps1, [1, 0, 0])
    np.testing.assert_allclose(basis.eps2, [0, 1, 0])
    chiral = polarization_basis(Z, "Chiral")
    np.testing.assert_allclose(chiral.eps1, np.array([1, 1j, 0]) / math.sqrt(2))
    np.testing.assert_allclose(chiral.eps2, np.array([1, -1j, 0]) / math.sqrt(2))
    for e in chiral.vectors():
        assert np.vdot(e, e).real == pytest.approx(1.0, abs=1e-15)


def test_basis_is_right_handed_and_orthonormal():
    rng = np.random.default_rng(3)
    for _ in range(200):
        k = rng.normal(size=3)
        k /= np.linalg.norm(k)
        b = polarization_basis(k)
        assert abs(np.dot(b.eps1, k)) < 1e-14 and abs(np.dot(b.eps2, k)) < 1e-14
        np.testing.assert_allclose(np.cross(b.eps1.real, b.eps2.real), k, atol=1e-14)
    south = polarization_basis((0.0, 0.0, -1.0))
    np.testing.assert_allclose(np.cross(south.eps1.real, south.eps2.real), [0, 0, -1])


def test_non_unit_direction_rejected():
    with pytest.raises(NonUnitVector):
        polarization_basis((0.0, 0.0, 2.0))
    with pytest.raises(NonUnitVector):
        polarization_sum((1, 0, 0), (1.0, 1.0, 0.0))
    with pytest.raises(ValueError):
        polarization_basis(Z, "Helical")


@pytest.mark.parametrize("d, expected", [
    ((0, 0, 1), 0.0),
    ((1, 0, 0), 1.0),
    (np.array([1, 1j, 0]) / math.sqrt(2), 1.0),
])
def test_polarization_sum_cases(d, expected):
    assert polarization_sum(d, Z) == pytest.approx(expected, abs=1e-15)
    assert polarization_sum(d, Z, "Chiral") == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("d, expected", [
    ((0, 0, 1), 1 / 3),
    (np.array([1, 1j, 0]) / math.sqrt(2), 1 / 3),
    ((0, 0, 0), 0.0),
])
def test_angle_average(d, expected):
    assert angle_average_dipole(d) == pytest.approx(expected, abs=1e-15)
    assert angle_average_quadrature(d) == pytest.approx(expected, abs=1e-12)


def test_sphere_grid_integrates_exactly():
    dirs, w = sphere_grid()
    assert w.sum() == pytest.approx(4 * math.pi, rel=1e-14)
    np.testing.assert_allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-15)
    # second moments of the sphere
    assert np.sum(w * dirs[:, 2] ** 2) == pytest.approx(4 * math.pi / 3, rel=1e-13)
    assert np.sum(w * dirs[:, 0] ** 4) == pytest.approx(4 * math.pi / 5, rel=1e-13)


def test_rotation_average_of_quadratic_form():
    d = np.array([0.3, -1.2, 0.7])
    val = rotation_average(lambda R: float((R @ d)[0] ** 2))
    assert val == pytest.approx(d @ d / 3, rel=1e-12)


def test_lorentz_profile():
    shape = Lineshape.lorentz(0.1)
    assert lineshape_eval(shape, 0.0) == pytest.approx(1 / (0.1 * math.pi), rel=1e-15)
    assert lineshape_eval(shape, 0.1) == pytest.approx(0.5 / (0.1 * math.pi), rel=1e-15)
    # over +-100 Gamma the tails hold 2 atan-complement / pi of the weight
    x = np.linspace(-10.0, 10.0, 400_001)
    window = np.trapezoid(lorentz(x, 0.1), x)
    assert window == pytest.approx(2.0 / math.pi * math.atan(100.0), abs=1e-9)
    assert window + 2.0 / math.pi * math.atan(1.0 / 100.0) == pytest.approx(1.0, abs=1e-9)
    wide = np.linspace(-1e4, 1e4, 4_000_001)
    assert np.trapezoid(lorentz(wide, 0.1), wide) == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(DeltaEvaluatedPointwise):
        lineshape_eval(Lineshape(), 0.0)
    with pytest.raises(ValueError):
        Lineshape.lorentz(0.0)


def test_spin_average():
    assert spin_average([2.5, 2.5]) == 2.5
    assert spin_average([2.0, 0.0]) == 1.0
    assert spin_average([1.0, 2.0, 3.0, 4.0], "General") == 5.0
    with pytest.raises(ChannelCountMismatch):
        spin_average([1.0, 2.0, 3.0])
    with pytest.raises(ChannelCountMismatch):
        spin_average([1.0, 2.0], "General")
