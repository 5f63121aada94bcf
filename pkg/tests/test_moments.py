import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from commext.linalg import commutator
from commext.moments import (
    GAUSSIAN_PLANE,
    INTERVAL,
    SQUARE,
    SQUARE_MINUS_SQUARE,
    UNIT_DISK,
    WeightedDomain,
    coordinate_matrices,
    degree_block_sizes,
    dim_polynomials,
    graded_monomials,
    gram_schmidt_basis,
    moment,
)


ALL_DOMAINS = [
    WeightedDomain(kind=INTERVAL),
    WeightedDomain(kind=INTERVAL, a=0.0, b=1.0),
    WeightedDomain(kind=SQUARE),
    WeightedDomain(kind=UNIT_DISK),
    WeightedDomain(kind=GAUSSIAN_PLANE),
    WeightedDomain(kind=SQUARE_MINUS_SQUARE, r=0.2),
]


@pytest.mark.parametrize(
    "domain,m,expected",
    [
        (WeightedDomain(kind=INTERVAL, a=0.0, b=1.0), (3,), 0.25),
        (WeightedDomain(kind=SQUARE), (2, 0), 4 / 3),
        (WeightedDomain(kind=SQUARE), (2, 2), 4 / 9),
        (WeightedDomain(kind=SQUARE), (1, 2), 0.0),
        (WeightedDomain(kind=UNIT_DISK), (0, 0), math.pi),
        (WeightedDomain(kind=UNIT_DISK), (2, 0), math.pi / 4),
        (WeightedDomain(kind=UNIT_DISK), (2, 2), math.pi / 24),
        (WeightedDomain(kind=GAUSSIAN_PLANE), (0, 0), math.pi),
        (WeightedDomain(kind=GAUSSIAN_PLANE), (2, 0), math.pi / 2),
        (WeightedDomain(kind=GAUSSIAN_PLANE), (2, 2), math.pi / 4),
        (WeightedDomain(kind=SQUARE_MINUS_SQUARE, r=0.4), (0, 0), 4 - 0.64),
        (WeightedDomain(kind=SQUARE_MINUS_SQUARE, r=0.0), (2, 2), 4 / 9),
    ],
)
def test_moments(domain, m, expected):
    assert moment(domain, m) == pytest.approx(expected, abs=1e-14)


def test_square_minus_square_first_moment():
    # the removed square has area (2r)^2 and centre (2/5, 3/5)
    r = 0.3
    domain = WeightedDomain(kind=SQUARE_MINUS_SQUARE, r=r)
    assert moment(domain, (1, 0)) == pytest.approx(-0.4 * 4 * r * r, abs=1e-14)
    assert moment(domain, (0, 1)) == pytest.approx(-0.6 * 4 * r * r, abs=1e-14)


def test_moment_rejects_bad_indices():
    with pytest.raises(ValueError):
        moment(WeightedDomain(kind=SQUARE), (1,))
    with pytest.raises(ValueError):
        moment(WeightedDomain(kind=INTERVAL), (-1,))


def test_graded_monomials():
    assert graded_monomials(2, 2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert graded_monomials(1, 3) == [(0,), (1,), (2,), (3,)]
    assert dim_polynomials(2, 5) == 21
    assert dim_polynomials(3, 2) == 10
    assert dim_polynomials(2, -1) == 0
    assert degree_block_sizes(2, 3) == (1, 2, 3, 4)


def _gram(domain, basis):
    mons = basis.monomials
    g = np.array([[moment(domain, tuple(a + b for a, b in zip(m, k))) for k in mons] for m in mons])
    return basis.coeffs @ g @ basis.coeffs.T


@pytest.mark.parametrize("domain", ALL_DOMAINS, ids=lambda d: f"{d.kind}[{d.a},{d.b},{d.r}]")
def test_basis_is_orthonormal_and_graded(domain):
    q = 4
    basis = gram_schmidt_basis(domain, q)
    assert basis.n == dim_polynomials(domain.dim, q)
    assert_allclose(_gram(domain, basis), np.eye(basis.n), atol=1e-10)
    # lower triangular with a positive diagonal
    assert_allclose(np.triu(basis.coeffs, 1), 0.0)
    assert np.all(np.diag(basis.coeffs) > 0)
    assert basis.constant_value == pytest.approx(1 / math.sqrt(domain.total_mass))


@pytest.mark.parametrize("domain", ALL_DOMAINS, ids=lambda d: f"{d.kind}[{d.a},{d.b},{d.r}]")
def test_coordinate_matrices_structure(domain):
    basis = gram_schmidt_basis(domain, 3)
    mats = coordinate_matrices(domain, basis)
    degrees = basis.degrees()
    far = np.abs(degrees[:, None] - degrees[None, :]) >= 2

    assert mats.d == domain.dim
    assert mats.block_sizes == basis.block_sizes
    for a in mats.arrays:
        assert_allclose(a, a.T)
        assert np.all(a[far] == 0.0)

    last = basis.block_sizes[-1]
    for i in range(mats.d):
        for j in range(i + 1, mats.d):
            c = commutator(mats.arrays[i], mats.arrays[j])
            assert np.max(np.abs(c[: basis.n - last])) < 1e-10
            assert np.max(np.abs(c[:, : basis.n - last])) < 1e-10


def test_legendre_jacobi_matrix():
    basis = gram_schmidt_basis(WeightedDomain(kind=INTERVAL), 5)
    a = coordinate_matrices(WeightedDomain(kind=INTERVAL), basis).arrays[0]
    k = np.arange(1, 6)
    assert_allclose(np.diag(a, 1), k / np.sqrt(4 * k * k - 1), atol=1e-13)
    assert_allclose(np.diag(a), 0.0, atol=1e-13)


def test_basis_evaluates_like_its_coefficients():
    domain = WeightedDomain(kind=UNIT_DISK)
    basis = gram_schmidt_basis(domain, 2)
    point = np.array([[0.3, -0.2]])
    monos = np.array([0.3**a * (-0.2) ** b for a, b in basis.monomials])
    assert_allclose(basis.evaluate(point)[0], basis.coeffs @ monos)
