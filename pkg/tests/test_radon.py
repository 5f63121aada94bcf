import numpy as np
import pytest
from numpy.testing import assert_allclose

from commext.cubature import AlreadyCommuteError, cross_factor, diametrical_pairs, radon_solve, verify_rule
from commext.cubature.radon import radon_extensions
from commext.moments import GAUSSIAN_PLANE, INTERVAL, SQUARE, SQUARE_MINUS_SQUARE, UNIT_DISK, WeightedDomain


def _split_center(rule):
    radii = np.sum(rule.nodes**2, axis=1)
    center = np.flatnonzero(radii < 1e-10)
    assert len(center) == 1
    others = np.flatnonzero(radii >= 1e-10)
    return int(center[0]), others, radii


def test_square_rule():
    rules = radon_solve(WeightedDomain(kind=SQUARE))
    rule = rules[0]
    assert rule.num_nodes == 7
    assert rule.degree == 5

    center, others, radii = _split_center(rule)
    assert rule.weights[center] == pytest.approx(8 / 7, abs=1e-12)
    assert_allclose(radii[others], 14 / 15, atol=1e-12)
    assert len(diametrical_pairs(rule)) == 3
    assert verify_rule(rule).max_rel_error < 1e-10

    expected = sorted([20 / 63] * 2 + [5 / 9] * 4)
    assert_allclose(np.sort(rule.weights[others]), expected, atol=1e-12)


def test_disk_family():
    rules = radon_solve(WeightedDomain(kind=UNIT_DISK))
    assert len(rules) >= 1

    angles = []
    for rule in rules:
        assert rule.info["kernel_dim"] == 2
        center, others, radii = _split_center(rule)
        assert rule.weights[center] == pytest.approx(np.pi / 4, abs=1e-12)
        assert_allclose(radii[others], 2 / 3, atol=1e-12)
        assert_allclose(rule.weights[others], np.pi / 8, atol=1e-12)
        angles.append(np.sort(np.mod(np.arctan2(rule.nodes[others, 1], rule.nodes[others, 0]), np.pi / 3)))

    # every member is a rotated hexagon
    for a in angles:
        assert np.ptp(a) < 1e-8 or np.ptp(np.mod(a + np.pi / 6, np.pi / 3)) < 1e-8


def test_disk_family_param_picks_one_rule():
    rules = radon_solve(WeightedDomain(kind=UNIT_DISK), family_param=0.3)
    assert len(rules) == 1
    assert rules[0].info["family_param"] == 0.3

    with pytest.raises(ValueError):
        radon_solve(WeightedDomain(kind=UNIT_DISK), family_param=1.0)


def test_square_minus_square_node_outside():
    rules = radon_solve(WeightedDomain(kind=SQUARE_MINUS_SQUARE, r=0.4))
    target = np.array([0.1844, 1.0360])

    found = False
    for rule in rules:
        assert verify_rule(rule).passed
        dist = np.max(np.abs(rule.nodes - target), axis=1)
        k = int(np.argmin(dist))
        if dist[k] < 5e-4:
            share = rule.weights[k] / rule.total_weight
            assert share == pytest.approx(0.0325, abs=0.001)
            found = True
    assert found


@pytest.mark.parametrize("i", range(1, 9))
def test_square_minus_square_sweep(i):
    domain = WeightedDomain(kind=SQUARE_MINUS_SQUARE, r=i / 20)
    rules = radon_solve(domain)
    assert rules
    for rule in rules:
        assert rule.num_nodes == 7
        assert rule.degree == 5
        assert np.all(rule.weights > 0)
        assert verify_rule(rule, domain).max_rel_error < 1e-10


def test_gaussian_plane_rule():
    rules = radon_solve(WeightedDomain(kind=GAUSSIAN_PLANE))
    assert len(rules) >= 1
    for rule in rules:
        center, others, radii = _split_center(rule)
        assert rule.weights[center] == pytest.approx(np.pi / 2, abs=1e-10)
        assert_allclose(radii[others], 2.0, atol=1e-10)
        assert_allclose(rule.weights[others], np.pi / 12, atol=1e-10)
        assert len(diametrical_pairs(rule)) == 3


def test_radon_needs_a_plane_domain():
    with pytest.raises(ValueError):
        radon_extensions(WeightedDomain(kind=INTERVAL))


def test_cross_factor():
    rng = np.random.default_rng(3)
    m = rng.standard_normal((3, 3))
    c = m - m.T
    v, w = cross_factor(c)

    assert_allclose(np.outer(v, w) - np.outer(w, v), -c, atol=1e-12)
    assert np.linalg.norm(v) == pytest.approx(np.linalg.norm(w))


def test_cross_factor_rejects_bad_input():
    with pytest.raises(AlreadyCommuteError):
        cross_factor(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        cross_factor(np.eye(3))
    with pytest.raises(ValueError):
        cross_factor(np.zeros((2, 2)))
