import numpy as np
import pytest

from commext.cubature.radon import radon_extensions
from commext.extensions import (
    BlockShapeError,
    LemmaInapplicableError,
    extendability_test,
    spectral_containment,
    structured_residual,
)
from commext.fixtures import planted, rank_two_pair
from commext.linalg import commutator
from commext.moments import SQUARE, WeightedDomain


def _square_radon():
    _, mats, _, candidates = radon_extensions(WeightedDomain(kind=SQUARE))
    return mats, candidates[0][1]


def test_structured_residual_vanishes_for_radon_extension():
    mats, cand = _square_radon()
    residuals = structured_residual(cand, mats.block_sizes)
    assert len(residuals) == 1
    assert residuals[0].index == 1
    assert residuals[0].max < 1e-10


def test_structured_residual_checks_block_sizes():
    mats, cand = _square_radon()
    with pytest.raises(BlockShapeError):
        structured_residual(cand, (1, 2, 2))
    # the added column is nonzero on the quadratic rows, so they cannot sit outside the last block
    with pytest.raises(BlockShapeError):
        structured_residual(cand, (5, 1))


def test_extendability_of_rank_two_pair():
    a1, a2 = rank_two_pair(seed=0).mats
    result = extendability_test(a1, a2)
    assert not result.dependent
    assert result.kernel.shape == (6, 0)
    c = commutator(a1, a2)
    assert np.max(np.abs(c + np.outer(result.v, result.w) - np.outer(result.w, result.v))) < 1e-10


def test_extendability_of_square_coordinate_matrices():
    mats, _ = _square_radon()
    result = extendability_test(*mats.arrays)
    assert result.dependent
    assert result.kernel.shape[1] >= 1


def test_extendability_needs_rank_two():
    with pytest.raises(LemmaInapplicableError):
        extendability_test(np.diag([1.0, 2.0]), np.diag([3.0, 4.0]))


def test_spectral_containment():
    fixture = planted(4, 7, d=2, seed=0)
    for a, big in zip(fixture.mats, fixture.extension):
        assert spectral_containment(a, big)

    with pytest.raises(BlockShapeError):
        spectral_containment(fixture.mats[0], fixture.extension[1])
    with pytest.raises(BlockShapeError):
        spectral_containment(np.eye(3), np.eye(2))
