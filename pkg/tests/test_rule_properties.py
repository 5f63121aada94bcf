import numpy as np
import pytest

from commext.cubature import check_rule, delta_identity_error, gauss_1d, radon_solve
from commext.extensions import spectral_containment
from commext.moments import (
    GAUSSIAN_PLANE,
    INTERVAL,
    SQUARE,
    SQUARE_MINUS_SQUARE,
    UNIT_DISK,
    WeightedDomain,
    coordinate_matrices,
    gram_schmidt_basis,
)


PLANE_DOMAINS = [
    WeightedDomain(kind=SQUARE),
    WeightedDomain(kind=UNIT_DISK),
    WeightedDomain(kind=GAUSSIAN_PLANE),
    *(WeightedDomain(kind=SQUARE_MINUS_SQUARE, r=i / 20) for i in range(1, 9)),
]


def _extended(rule):
    v = rule.joint.vectors
    return np.einsum("an,in,bn->iab", v, rule.joint.values, v)


def _assert_exact_rule_properties(rule, domain, q, rng):
    basis = gram_schmidt_basis(domain, q)
    mats = coordinate_matrices(domain, basis)

    report = check_rule(rule, mats, domain)
    assert report.passed, report.max_rel_error
    assert report.node_count_ok
    assert report.node_span_ok

    ext = _extended(rule)
    for i in range(mats.d):
        assert spectral_containment(mats[i], ext[i])

    p = rng.standard_normal((50, basis.n))
    assert delta_identity_error(rule, basis, p) < 1e-8


@pytest.mark.parametrize("domain", PLANE_DOMAINS, ids=lambda d: f"{d.kind}-{d.r}")
def test_radon_rules_have_exact_rule_properties(domain):
    rng = np.random.default_rng(0)
    rules = radon_solve(domain)
    assert rules
    for rule in rules:
        _assert_exact_rule_properties(rule, domain, 2, rng)


@pytest.mark.parametrize("q", range(10))
def test_gauss_rules_have_exact_rule_properties(q):
    domain = WeightedDomain(kind=INTERVAL)
    _assert_exact_rule_properties(gauss_1d(domain, q), domain, q, np.random.default_rng(q))
