import math
import os
import sys

sys.path.append(os.path.join(os.path.dirname(__file__), "src"))

import numpy as np
import pytest

from core.exceptions import ConfigurationError
from schemas.configuration import CenterConfiguration, StrengthTuple
from schemas.gamma import BetaChart
from services import gamma_service

FOUR_PI = 4.0 * math.pi


def random_configuration(rng, n):
    return CenterConfiguration(points=tuple(tuple(p) for p in rng.normal(size=(n, 3))))


def random_tuple(rng, n, scale=0.2):
    return StrengthTuple.from_values(rng.normal(size=n) * scale + 1j * rng.normal(size=n) * scale)


def test_green_kernel():
    z = 0.7 - 0.2j
    assert gamma_service.green_kernel(z, (0.0, 3.0, 4.0)) == pytest.approx(np.exp(5j * z) / (FOUR_PI * 5.0))
    with pytest.raises(ConfigurationError):
        gamma_service.green_kernel(z, (0.0, 0.0, 0.0))


def test_single_center_determinant():
    config = CenterConfiguration(points=((0.0, 0.0, 0.0),))
    alpha = StrengthTuple.from_values([0.3 - 0.1j])
    z = 1.2 - 0.4j
    assert gamma_service.det_gamma(alpha, config, z) == pytest.approx(0.3 - 0.1j - 1j * z / FOUR_PI)


def test_determinant_matches_numpy():
    rng = np.random.default_rng(1)
    for n in (2, 3, 5):
        config = random_configuration(rng, n)
        alpha = random_tuple(rng, n)
        z = complex(*rng.normal(size=2))
        gamma = gamma_service.build_gamma(alpha, config, z)
        assert gamma.dimension == n
        np.testing.assert_allclose(gamma.entries, gamma.entries.T)
        assert gamma_service.det_gamma(alpha, config, z) == pytest.approx(np.linalg.det(gamma.entries), rel=1e-12)


def test_batch_determinant_matches_scalar():
    rng = np.random.default_rng(2)
    config = random_configuration(rng, 4)
    alpha = random_tuple(rng, 4)
    zs = rng.normal(size=6) + 1j * rng.normal(size=6)
    batch = gamma_service.det_gamma_batch(alpha.values(), config.distances, zs)
    for z, value in zip(zs, batch):
        assert value == pytest.approx(gamma_service.det_gamma(alpha, config, z), rel=1e-12)


def test_log_derivative_matches_finite_difference():
    rng = np.random.default_rng(3)
    config = random_configuration(rng, 3)
    alpha = random_tuple(rng, 3)
    z, h = 0.9 - 0.3j, 1e-6
    numeric = (
        gamma_service.det_gamma(alpha, config, z + h) - gamma_service.det_gamma(alpha, config, z - h)
    ) / (2 * h) / gamma_service.det_gamma(alpha, config, z)
    assert gamma_service.dz_log_det(alpha, config, z) == pytest.approx(numeric, rel=1e-6)


def test_first_minor_single_center_is_one():
    config = CenterConfiguration(points=((0.0, 0.0, 0.0),))
    chart = BetaChart(base=StrengthTuple.from_values([0.4]))
    assert gamma_service.first_minor(chart, None, config, 0.3 - 0.2j, 0) == pytest.approx(1.0)


def test_first_minor_two_centers():
    config = CenterConfiguration(points=((0.0, 0.0, 0.0), (1.0, 0.0, 0.0)))
    chart = BetaChart(base=StrengthTuple.from_values([0.1, -0.25]))
    z = 0.8 - 0.1j
    assert gamma_service.first_minor(chart, None, config, z, 0) == pytest.approx(-0.25 - 1j * z / FOUR_PI)


def test_regularized_det_at_base_point_is_reduced_det():
    rng = np.random.default_rng(4)
    config = random_configuration(rng, 4)
    alpha = StrengthTuple.from_values([0.1, "inf", -0.2 + 0.05j, "inf"])
    chart = BetaChart(base=alpha)
    z = 0.6 - 0.4j
    reduced = StrengthTuple.from_values([0.1, -0.2 + 0.05j])
    expected = gamma_service.det_gamma(reduced, config.subset((0, 2)), z)
    assert gamma_service.regularized_det(chart, None, config, z) == pytest.approx(expected, rel=1e-12)


def test_minor_is_the_affine_slope():
    rng = np.random.default_rng(5)
    config = random_configuration(rng, 4)
    chart = BetaChart(base=StrengthTuple.from_values([0.1, "inf", -0.3, "inf"]))
    z = 1.1 - 0.2j
    base = chart.base_point
    for i in range(4):
        h = 1e-3
        beta = base.copy()
        beta[i] += h
        slope = (
            gamma_service.regularized_det(chart, beta, config, z) - gamma_service.regularized_det(chart, None, config, z)
        ) / h
        minor = gamma_service.first_minor(chart, None, config, z, i)
        assert slope == pytest.approx(minor, rel=1e-7, abs=1e-12)


def test_chart_coordinates_of_large_strength():
    config = CenterConfiguration(points=((0.0, 0.0, 0.0), (1.0, 0.0, 0.0)))
    chart = BetaChart(base=StrengthTuple.from_values([0.2, "inf"]))
    beta = chart.beta_of(StrengthTuple.from_values([0.2, 1e6]))
    z = 0.5 - 0.3j
    near = gamma_service.det_gamma(StrengthTuple.from_values([0.2, 1e6]), config, z)
    # D_a(β) = det Γ(α)·Π_{∞ slots}(−β_j)
    assert gamma_service.regularized_det(chart, beta, config, z) == pytest.approx(near * (-beta[1]), rel=1e-9)


def test_bordered_minor_is_corner_free_at_a_zero():
    config = CenterConfiguration(points=((0.0, 0.0, 0.0), (1.0, 0.0, 0.0)))
    a = 0.05
    chart = BetaChart(base=StrengthTuple.from_values([a, "inf"]))
    zero = -FOUR_PI * 1j * a
    assert gamma_service.bordered_minor_c_independence(chart, config, zero, 1) < 1e-10
    assert gamma_service.bordered_minor_c_independence(chart, config, zero + 0.3, 1) > 1e-3


def test_principal_minor():
    rng = np.random.default_rng(6)
    config = random_configuration(rng, 3)
    alpha = random_tuple(rng, 3)
    z = 0.2 - 0.5j
    entries = gamma_service.build_gamma(alpha, config, z).entries
    expected = np.linalg.det(entries[np.ix_([0, 2], [0, 2])])
    assert gamma_service.principal_minor(alpha, config, z, 1) == pytest.approx(expected, rel=1e-12)


def test_conjugation_law():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n = int(rng.integers(1, 6))
        config = random_configuration(rng, n)
        alpha = random_tuple(rng, n)
        conjugate = StrengthTuple.from_values(np.conj(alpha.values()))
        z = complex(rng.uniform(-10.0, 10.0), rng.uniform(-3.0, 3.0))
        lhs = np.conj(gamma_service.det_gamma(alpha, config, z))
        rhs = gamma_service.det_gamma(conjugate, config, -z.conjugate())
        scale = gamma_service.residual_scale(alpha.values(), config.distances, z)
        assert abs(lhs - rhs) <= 1e-12 * scale


def test_residual_scale_does_not_vanish_at_a_zero():
    values = np.array([0.37 + 0.0j])
    distances = np.zeros((1, 1))
    k = -FOUR_PI * 1j * 0.37
    assert abs(gamma_service.det_gamma_batch(values, distances, np.array([k]))[0]) < 1e-15
    assert gamma_service.residual_scale(values, distances, k) == pytest.approx(0.74)
