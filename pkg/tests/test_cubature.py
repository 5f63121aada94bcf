import dataclasses

import numpy as np
import pytest
from numpy.testing import assert_allclose
from test_utils import square_degree5_rule

from commext.cubature import (
    CubatureRule,
    NotPositiveRuleError,
    RuleNotExactError,
    check_rule,
    delta_identity_error,
    diametrical_pairs,
    gauss_1d,
    node_count_check,
    node_span_check,
    rule_from_extension,
    verify_rule,
)
from commext.cubature.rule import EXTENSION_SEARCH
from commext.extensions import ZeroBlockSpec, candidate_from_extension
from commext.moments import INTERVAL, SQUARE, WeightedDomain, coordinate_matrices, gram_schmidt_basis


def _interval(a=-1.0, b=1.0):
    return WeightedDomain(kind=INTERVAL, a=a, b=b)


def _square_mats():
    domain = WeightedDomain(kind=SQUARE)
    return domain, coordinate_matrices(domain, gram_schmidt_basis(domain, 2))


@pytest.mark.parametrize("q", range(10))
def test_gauss_1d_matches_legendre(q):
    rule = gauss_1d(_interval(), q)
    nodes, weights = np.polynomial.legendre.leggauss(q + 1)
    order = np.argsort(rule.nodes[:, 0])

    assert rule.num_nodes == q + 1
    assert rule.degree == 2 * q + 1
    assert_allclose(rule.nodes[order, 0], nodes, atol=1e-12)
    assert_allclose(rule.weights[order], weights, atol=1e-12)
    assert verify_rule(rule).passed


def test_gauss_1d_on_unit_interval():
    rule = gauss_1d(_interval(0.0, 1.0), 3)
    nodes, weights = np.polynomial.legendre.leggauss(4)
    order = np.argsort(rule.nodes[:, 0])
    assert_allclose(rule.nodes[order, 0], 0.5 * (nodes + 1.0), atol=1e-12)
    assert_allclose(rule.weights[order], 0.5 * weights, atol=1e-12)
    assert rule.total_weight == pytest.approx(1.0)


def test_gauss_1d_needs_an_interval():
    with pytest.raises(ValueError):
        gauss_1d(WeightedDomain(kind=SQUARE), 2)


def test_rule_from_trivial_extension_is_gauss():
    domain = _interval()
    basis = gram_schmidt_basis(domain, 4)
    mats = coordinate_matrices(domain, basis)
    cand = candidate_from_extension(mats.arrays, mats, ZeroBlockSpec(basis.dim_previous))

    rule = rule_from_extension(cand, basis, domain)
    gauss = gauss_1d(domain, 4)
    assert rule.provenance == EXTENSION_SEARCH
    assert_allclose(np.sort(rule.nodes[:, 0]), np.sort(gauss.nodes[:, 0]), atol=1e-12)
    assert verify_rule(rule).passed


def test_rule_from_one_row_extension_of_jacobi_matrix():
    domain = _interval()
    q = 3
    basis = gram_schmidt_basis(domain, q)
    mats = coordinate_matrices(domain, basis)
    n = basis.n

    # a bordered Jacobi matrix touching only the last row keeps degree 2q+1 with q+2 nodes
    ext = np.zeros((1, n + 1, n + 1))
    ext[0, :n, :n] = mats.arrays[0]
    ext[0, n - 1, n] = ext[0, n, n - 1] = 0.5
    ext[0, n, n] = 0.2
    cand = candidate_from_extension(ext, mats, ZeroBlockSpec(basis.dim_previous))

    rule = rule_from_extension(cand, basis, domain)
    report = check_rule(rule, mats, domain)
    assert rule.num_nodes == n + 1
    assert np.all(rule.weights > 0)
    assert report.passed
    assert report.node_count_ok and report.node_span_ok
    assert delta_identity_error(rule, basis, np.eye(n)) < 1e-10


def test_verify_rule_pass_and_fail():
    rule = square_degree5_rule()
    report = verify_rule(rule)
    assert report.passed
    assert report.max_rel_error < 1e-13
    assert report.num_monomials == 21
    assert set(report.per_degree) == set(range(6))

    weights = rule.weights.copy()
    weights[0] = 8 / 6
    bad = dataclasses.replace(rule, weights=weights)
    report = verify_rule(bad)
    assert not report.passed
    assert report.worst_monomial == (0, 0)
    # the error on the constant is relative to the area
    assert report.max_rel_error == pytest.approx((8 / 6 - 8 / 7) / 4)


def test_verify_rule_at_higher_degree_fails():
    report = verify_rule(square_degree5_rule(), degree=6)
    assert not report.passed
    assert sum(report.worst_monomial) == 6


def test_node_checks_on_radon_square_rule():
    domain, mats = _square_mats()
    rule = square_degree5_rule()
    assert node_count_check(rule, mats, domain)
    assert node_span_check(rule, mats, domain)

    report = check_rule(rule, mats, domain)
    assert report.passed
    assert report.node_count_ok and report.node_span_ok


def test_node_checks_need_an_exact_rule():
    domain, mats = _square_mats()
    rule = square_degree5_rule()
    weights = rule.weights.copy()
    weights[0] = 8 / 6
    bad = dataclasses.replace(rule, weights=weights)

    with pytest.raises(RuleNotExactError):
        node_count_check(bad, mats, domain)
    with pytest.raises(RuleNotExactError):
        node_span_check(dataclasses.replace(rule, degree=3), mats, domain)

    report = check_rule(bad, mats, domain)
    assert not report.passed
    assert report.node_count_ok is None and report.node_span_ok is None


def test_delta_identity_needs_joint_system():
    domain = _interval()
    basis = gram_schmidt_basis(domain, 2)
    with pytest.raises(ValueError):
        delta_identity_error(square_degree5_rule(), basis, np.eye(3))

    rule = gauss_1d(domain, 2)
    assert delta_identity_error(rule, basis, np.eye(3)) < 1e-12


def test_cubature_rule_validation():
    with pytest.raises(NotPositiveRuleError):
        CubatureRule(d=1, nodes=[[0.0], [1.0]], weights=[1.0, -0.5], degree=1, provenance=EXTENSION_SEARCH)
    with pytest.raises(ValueError):
        CubatureRule(d=1, nodes=[[0.0]], weights=[1.0], degree=1, provenance="made_up")
    with pytest.raises(ValueError):
        CubatureRule(d=1, nodes=[[0.0], [1.0]], weights=[1.0], degree=1, provenance=EXTENSION_SEARCH)
    with pytest.raises(ValueError):
        CubatureRule(d=1, nodes=[[np.nan]], weights=[1.0], degree=1, provenance=EXTENSION_SEARCH)

    rule = CubatureRule(d=1, nodes=[[0.5], [1.0]], weights=[1.0, 0.0], degree=1, provenance=EXTENSION_SEARCH)
    assert rule.integrate(lambda x: x[:, 0] ** 2) == pytest.approx(0.25)


def test_diametrical_pairs():
    pairs = diametrical_pairs(square_degree5_rule())
    assert sorted(pairs) == [(1, 2), (3, 6), (4, 5)]

    rule = gauss_1d(_interval(), 2)
    assert len(diametrical_pairs(rule)) == 1
