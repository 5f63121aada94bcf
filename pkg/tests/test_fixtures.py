import numpy as np
import pytest
from numpy.testing import assert_allclose

from commext.fixtures import CIRCULANT_DEMO, PLANTED, RANK_TWO_PAIR, make_fixture, planted, rank_two_pair
from commext.linalg import commutator, numerical_rank


def test_rank_two_pair():
    fixture = rank_two_pair(seed=0)
    a1, a2 = fixture.mats
    assert a1.shape == (6, 6)
    assert_allclose(a1, np.diag([1.0, 2, 3, 4, 5, 6]))
    assert_allclose(a2, a2.T)
    assert fixture.commutator_rank == 2

    v, w = np.array(fixture.info["v"]), np.array(fixture.info["w"])
    assert_allclose(commutator(a1, a2), np.outer(w, v) - np.outer(v, w), atol=1e-12)


def test_rank_two_pair_rejects_repeated_eigenvalues():
    with pytest.raises(ValueError):
        rank_two_pair(eigenvalues=(1, 1, 2))


def test_fixtures_are_reproducible():
    a = make_fixture(PLANTED, n=4, N=6, seed=5)
    b = make_fixture(PLANTED, n=4, N=6, seed=5)
    c = make_fixture(PLANTED, n=4, N=6, seed=6)
    assert_allclose(a.mats[1], b.mats[1])
    assert not np.allclose(a.mats[1], c.mats[1])


def test_planted_extension():
    fixture = planted(6, 8, d=2, seed=0)
    big = fixture.extension
    assert len(big) == 2 and big[0].shape == (8, 8)
    assert np.max(np.abs(commutator(big[0], big[1]))) < 1e-12
    for a, b in zip(fixture.mats, big):
        assert_allclose(a, b[:6, :6])
    # a generic restriction no longer commutes
    assert numerical_rank(commutator(*fixture.mats)) > 0


def test_circulant_demo_default_is_the_scalar_pair():
    fixture = make_fixture(CIRCULANT_DEMO)
    assert_allclose(fixture.mats[0], [[2.0]])
    assert_allclose(fixture.mats[1], [[3.0]])
    assert fixture.commutator_rank == 0
    assert fixture.extension[0].shape == (2, 2)
    assert np.max(np.abs(commutator(*fixture.extension))) == 0.0


def test_make_fixture_by_name():
    assert make_fixture(RANK_TWO_PAIR).name == RANK_TWO_PAIR
    assert len(make_fixture(CIRCULANT_DEMO, d=3, n=2, seed=1).mats) == 3
    with pytest.raises(ValueError):
        make_fixture("nonexistent")
