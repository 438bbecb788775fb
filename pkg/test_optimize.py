import math
import os
import sys

sys.path.append(os.path.join(os.path.dirname(__file__), "src"))

import numpy as np
import pytest

from core.exceptions import ConfigurationError, NotARootError
from schemas.configuration import CenterConfiguration, StrengthTuple
from schemas.gamma import BetaChart
from schemas.roots import SearchWindow
from services import gamma_service, optimize_service, rootfinder_service, tetra_service

FOUR_PI = 4.0 * math.pi
EDGE = math.pi
TETRA = tetra_service.tetra_vertices(EDGE)
ONE_CENTER = CenterConfiguration(points=((0.0, 0.0, 0.0),))


def nmin4_optimum(f=1.5):
    optimum = tetra_service.optimal_alpha_oracle(f, EDGE)
    return optimum, StrengthTuple.from_values([optimum.alpha_star] * 4)


def test_certificate_passes_at_the_nmin4_optimum():
    optimum, alpha = nmin4_optimum()
    certificate = optimize_service.certify(alpha, TETRA, optimum.k)
    assert certificate.passed
    assert certificate.residual < 1e-8
    assert len(certificate.minors) == 4
    assert -math.pi <= certificate.xi < math.pi


def test_certificate_fails_at_a_generic_resonance():
    config = CenterConfiguration(points=((0.0, 0.0, 0.0), (1.0, 0.0, 0.0)))
    alpha = StrengthTuple.from_values([0.05, 0.2])
    roots = rootfinder_service.resonances(alpha, config, SearchWindow.parse("0.5,6,-4,-0.01"))
    assert roots
    certificate = optimize_service.certify(alpha, config, roots[0].k)
    assert not certificate.passed


def test_line_mode_has_no_sign_condition():
    optimum, alpha = nmin4_optimum()
    certificate = optimize_service.certify(alpha, TETRA, optimum.k, mode="line")
    assert certificate.mode == "line"
    assert all(certificate.verdicts)
    assert certificate.passed


def test_certify_rejects_non_roots():
    optimum, alpha = nmin4_optimum()
    with pytest.raises(NotARootError):
        optimize_service.certify(alpha, TETRA, optimum.k + 0.1)


def test_optimizer_family_with_arbitrary_entries():
    optimum = tetra_service.optimal_alpha_oracle(0.5, EDGE)
    a = optimum.alpha_star
    rng = np.random.default_rng(41)
    for _ in range(20):
        others = ["inf" if rng.random() < 0.3 else float(rng.normal()) for _ in range(2)]
        alpha = StrengthTuple.from_values([a, a] + others)
        certificate = optimize_service.certify(alpha, TETRA, optimum.k)
        assert set(certificate.vanishing) >= {2, 3}
        results = optimize_service.persistence_check(alpha, TETRA, optimum.k, indices=[2, 3], seed=1)
        assert all(r.passed for r in results)
        finite = StrengthTuple.from_values([a, a] + [0.0 if o == "inf" else o for o in others])
        values = finite.values()
        det = gamma_service.det_gamma(finite, TETRA, optimum.k)
        assert abs(det) <= 1e-9 * gamma_service.hadamard_scale(values, TETRA.distances, optimum.k)


def test_single_center_certificate_and_perturbation():
    a = 0.2
    alpha = StrengthTuple.from_values([a])
    k = -FOUR_PI * 1j * a
    certificate = optimize_service.certify(alpha, ONE_CENTER, k)
    assert certificate.minors[0] == pytest.approx(1.0)
    coefficient = optimize_service.perturb_first_order(BetaChart(base=alpha), ONE_CENTER, k, 1, [1.0])
    assert coefficient == pytest.approx(-FOUR_PI * 1j)


def test_perturbation_law_for_a_simple_root():
    config = CenterConfiguration(points=((0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.3, 0.0)))
    alpha = StrengthTuple.from_values([0.05, -0.1, 0.02])
    roots = rootfinder_service.resonances(alpha, config, SearchWindow.parse("0.5,5,-3,-0.01"))
    root = roots[0]
    assert root.multiplicity == 1
    direction = np.array([1.0, 0.5, -0.25])
    coefficient = optimize_service.perturb_first_order(BetaChart(base=alpha), config, root.k, 1, direction)
    zeta = 1e-6
    moved = StrengthTuple.from_values(alpha.values() + zeta * direction)
    half = 1e-3
    window = SearchWindow(
        re_min=root.k.real - half, re_max=root.k.real + half, im_min=root.k.imag - half, im_max=root.k.imag + half,
    )
    (new_root,) = rootfinder_service.find_zeros(moved, config, window)
    assert abs((new_root.k - root.k) / zeta - coefficient) <= 1e-3 * abs(coefficient)


def test_predicted_branches_are_rotations():
    branches = optimize_service.predicted_branches(1 - 1j, 8.0, 3, 1.0)
    np.testing.assert_allclose(np.abs(branches - (1 - 1j)), [2.0, 2.0, 2.0])


def test_perturbation_rejects_bad_direction():
    alpha = StrengthTuple.from_values([0.2])
    with pytest.raises(ConfigurationError):
        optimize_service.perturb_first_order(BetaChart(base=alpha), ONE_CENTER, -0.8j, 1, [1.0, 2.0])


def test_sampled_frontier_tracks_the_oracle():
    f_grid = [0.5, 1.5]
    points = optimize_service.sample_frontier(TETRA, "real", f_grid, sample_budget=40, seed=3)
    for f, point in zip(f_grid, points):
        oracle = tetra_service.rmin_oracle(f, EDGE)
        assert point is not None
        assert point.r >= oracle - 1e-8
        assert point.r - oracle <= 5e-3
        assert point.alpha.is_real


def test_sampled_frontier_is_deterministic():
    f_grid = [0.3, 0.7, 1.3]
    first = optimize_service.sample_frontier(TETRA, "real", f_grid, sample_budget=60, seed=9)
    second = optimize_service.sample_frontier(TETRA, "real", f_grid, sample_budget=60, seed=9, threads=1)
    assert [p.model_dump() if p else None for p in first] == [p.model_dump() if p else None for p in second]


def test_real_frontier_is_mirrored():
    points = optimize_service.sample_frontier(TETRA, "real", [-1.5, 1.5], sample_budget=40, seed=4)
    assert points[0].r == points[1].r
    assert points[0].f == -1.5


def test_dissipative_frontier_reaches_the_axis_for_negative_frequencies():
    (point,) = optimize_service.sample_frontier(TETRA, "dissipative", [-0.5], sample_budget=10, seed=5)
    assert point.r == 0.0
    assert point.alpha.is_dissipative


def test_dissipative_frontier_lies_below_the_real_one():
    real = optimize_service.sample_frontier(TETRA, "real", [1.5], sample_budget=40, seed=6)[0]
    dissipative = optimize_service.sample_frontier(TETRA, "dissipative", [1.5], sample_budget=40, seed=6)[0]
    assert dissipative is not None
    assert dissipative.r <= real.r + 1e-12


def test_sampler_input_validation():
    with pytest.raises(ConfigurationError):
        optimize_service.sample_frontier(TETRA, "real", [], 10)
    with pytest.raises(ConfigurationError):
        optimize_service.sample_frontier(TETRA, "real", [1.0, 0.5], 10)


def test_refinement_at_zero_frequency():
    point, certificate = optimize_service.refine_extremal(TETRA, 0.0, StrengthTuple.from_values([0.1] * 4), 0.1)
    assert point.r == 0.0
    assert point.alpha.infinity_pattern == (1, 2, 3)
    assert certificate.passed


def test_width_of():
    energy, width = optimize_service.width_of(2 - 1j)
    assert energy == pytest.approx(3.0)
    assert width == pytest.approx(8.0)


def test_single_center_root_from_the_solver_is_certified():
    alpha = StrengthTuple.from_values([0.37])
    (root,) = rootfinder_service.find_zeros(alpha, ONE_CENTER, SearchWindow.parse("-1,1,-6,-3"))
    certificate = optimize_service.certify(alpha, ONE_CENTER, root.k)
    assert certificate.passed
    with pytest.raises(NotARootError):
        optimize_service.certify(alpha, ONE_CENTER, root.k + 1e-3)


@pytest.mark.parametrize("f", [1.8037, 1.9408])
def test_sampled_frontier_near_band_edges(f):
    (point,) = optimize_service.sample_frontier(TETRA, "real", [f], sample_budget=20, seed=12)
    oracle = tetra_service.rmin_oracle(f, EDGE)
    assert point is not None
    assert oracle - 1e-8 <= point.r <= oracle + 5e-3


def test_sampled_frontier_over_both_bands():
    f_grid = list(np.linspace(0.02, 0.98, 10)) + list(np.linspace(1.02, 1.98, 10))
    points = optimize_service.sample_frontier(TETRA, "real", f_grid, sample_budget=400, seed=13)
    for f, point in zip(f_grid, points):
        oracle = tetra_service.rmin_oracle(f, EDGE)
        assert point is not None
        assert oracle - 1e-8 <= point.r <= oracle + 5e-3


def test_sampler_prefers_the_pair_on_nmin2_bands():
    (point,) = optimize_service.sample_frontier(TETRA, "real", [0.5], sample_budget=20, seed=14)
    assert point.alpha.n_finite == 2


@pytest.mark.parametrize("f", [0.5, 0.98, 1.5])
def test_refinement_from_sampled_seeds(f):
    (seed,) = optimize_service.sample_frontier(TETRA, "real", [f], sample_budget=20, seed=15)
    point, certificate = optimize_service.refine_extremal(TETRA, f, seed.alpha, seed.r)
    assert certificate.passed
    assert point.r == pytest.approx(tetra_service.rmin_oracle(f, EDGE), abs=1e-8)


def test_width_of_frontier_point_and_mirror():
    r = tetra_service.rmin_oracle(0.5, EDGE)
    k = complex(0.5, -r)
    energy, width = optimize_service.width_of(k)
    assert energy == pytest.approx(0.25 - r * r)
    assert width == pytest.approx(4 * 0.5 * r)
    assert optimize_service.width_of(-k.conjugate()) == pytest.approx((energy, width))


def test_width_frontier_starts_at_zero_width():
    points = optimize_service.width_frontier(TETRA, "real", (0.0, 0.4), grid=2, sample_budget=129, seed=16, refine=False)
    assert points[0].energy == 0.0
    assert points[0].width == 0.0


def test_width_frontier_fills_every_bin():
    e_lo, e_hi, grid = 0.1, 2.0, 4
    points = optimize_service.width_frontier(
        TETRA, "real", (e_lo, e_hi), grid=grid, sample_budget=129, seed=17, refine=False,
    )
    edges = np.linspace(e_lo, e_hi, grid + 1)
    assert len(points) == grid
    for lo, hi, point in zip(edges[:-1], edges[1:], points):
        assert lo <= point.energy <= hi
        energy, width = optimize_service.width_of(point.k)
        assert point.width == pytest.approx(width)
        assert point.width > 0.0


def test_refined_widths_never_exceed_sampled_ones():
    kwargs = dict(grid=2, sample_budget=129, seed=18)
    sampled = optimize_service.width_frontier(TETRA, "real", (0.5, 2.0), refine=False, **kwargs)
    refined = optimize_service.width_frontier(TETRA, "real", (0.5, 2.0), refine=True, **kwargs)
    assert len(refined) == len(sampled)
    for a, b in zip(sampled, refined):
        assert b.width <= a.width
