import numpy as np
import pytest
from numpy.testing import assert_allclose

from commext.cubature import SearchOptions, delta_identity_error, radon_solve, search_rule
from commext.cubature.search import BELOW_BOUND, MINIMIZE_S
from commext.extensions import FlowOptions, MinimizeOptions
from commext.moments import GAUSSIAN_PLANE, INTERVAL, SQUARE, WeightedDomain, gram_schmidt_basis


def test_below_bound_does_not_search():
    outcome = search_rule(WeightedDomain(kind=SQUARE), 2, 6)
    assert not outcome.success
    assert outcome.reason.startswith(BELOW_BOUND)
    assert outcome.reason == "below rank bound: N=6 < 7"
    assert outcome.bounds.rank_bound == 7
    assert outcome.attempts == []
    assert outcome.candidate is None


def test_search_options_validation():
    with pytest.raises(ValueError):
        SearchOptions(methods=())
    with pytest.raises(ValueError):
        SearchOptions(methods=("simulated_annealing",))


@pytest.mark.slow
def test_search_finds_gauss_rule_on_interval():
    opts = SearchOptions(
        methods=(MINIMIZE_S,),
        minimize=MinimizeOptions(max_sweeps=500, multistarts=4, seed=0),
        flow=FlowOptions(multistarts=1),
    )
    outcome = search_rule(WeightedDomain(kind=INTERVAL), 3, 4, opts)

    assert outcome.success, outcome.reason
    assert outcome.rule.num_nodes == 4
    assert outcome.report.passed
    assert outcome.candidate.converged


@pytest.mark.slow
def test_search_matches_radon_rule_on_square():
    domain = WeightedDomain(kind=SQUARE)
    opts = SearchOptions(minimize=MinimizeOptions(max_sweeps=5000, multistarts=8, seed=0))
    outcome = search_rule(domain, 2, 7, opts)

    assert outcome.success, outcome.reason
    assert outcome.rule.num_nodes == 7
    assert outcome.report.node_count_ok and outcome.report.node_span_ok
    radon = radon_solve(domain)[0]
    assert_allclose(np.sort(outcome.rule.weights), np.sort(radon.weights), atol=1e-6)

    # a numerical extension only meets the identity to the accuracy S allows
    basis = gram_schmidt_basis(domain, 2)
    p = np.random.default_rng(0).standard_normal((50, basis.n))
    assert delta_identity_error(outcome.rule, basis, p) < 1e-5


@pytest.mark.slow
def test_search_on_gaussian_plane_degree_11():
    opts = SearchOptions(
        minimize=MinimizeOptions(max_sweeps=2000, multistarts=2, seed=0),
        flow=FlowOptions(max_iters=5000, multistarts=2, seed=0),
    )
    outcome = search_rule(WeightedDomain(kind=GAUSSIAN_PLANE), 5, 26, opts)

    if outcome.success:
        assert outcome.rule.num_nodes == 26
        assert outcome.rule.degree == 11
        assert np.all(outcome.rule.weights > 0)
        assert outcome.report.max_rel_error < 1e-8
    else:
        # best effort: a failure has to say why and keep what was tried
        assert outcome.reason
        assert outcome.attempts
        assert outcome.bounds.rank_bound <= 26
