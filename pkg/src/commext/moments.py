"""
Weighted integration domains described by exact moment functionals, the graded orthonormal polynomial basis built on
them, and the matrices of the coordinate multiplication operators in that basis.

No numeric quadrature is used anywhere in this module: every inner product comes from closed-form moments.
"""
import functools
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import equinox as eqx
import numpy as np
from jaxtyping import Float

from commext.linalg import SymMatrix, commutator


logger = logging.getLogger(__name__)

MultiIndex = Tuple[int, ...]

INTERVAL = "interval"
SQUARE = "square"
UNIT_DISK = "unit_disk"
GAUSSIAN_PLANE = "gaussian_plane"
SQUARE_MINUS_SQUARE = "square_minus_square"

DOMAIN_KINDS = (INTERVAL, SQUARE, UNIT_DISK, GAUSSIAN_PLANE, SQUARE_MINUS_SQUARE)

# center of the square removed in square_minus_square
REMOVED_SQUARE_CENTER = (0.4, 0.6)
MAX_REMOVED_HALF_WIDTH = 0.4

GRAM_SCHMIDT_PIVOT_TOL = 1e-12
STRUCTURE_TOL = 1e-10


class UnsupportedDomainError(ValueError):
    pass


class DegenerateMomentError(ValueError):
    pass


class InternalConsistencyError(RuntimeError):
    pass


@dataclass
class WeightedDomain:
    """
    An integration domain with its weight function, known only through its moments.

    kinds:
        * ``interval``: [a, b] with unit weight (d = 1)
        * ``square``: [-1, 1]^2 with unit weight
        * ``unit_disk``: the unit disk with unit weight
        * ``gaussian_plane``: the plane with weight exp(-x^2 - y^2)
        * ``square_minus_square``: [-1, 1]^2 with the square of half-width ``r`` centred at (2/5, 3/5) removed
    """

    kind: str = SQUARE
    a: float = -1.0  # left end of an interval
    b: float = 1.0  # right end of an interval
    r: float = 0.0  # half-width of the removed square, in [0, 2/5]

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise UnsupportedDomainError(f"unsupported domain kind {self.kind!r}; expected one of {DOMAIN_KINDS}")
        if self.kind == INTERVAL and not self.a < self.b:
            raise UnsupportedDomainError(f"interval needs a < b, got a={self.a}, b={self.b}")
        if self.kind == SQUARE_MINUS_SQUARE and not 0.0 <= self.r <= MAX_REMOVED_HALF_WIDTH:
            raise UnsupportedDomainError(f"removed square half-width must be in [0, 2/5], got r={self.r}")

    @property
    def dim(self) -> int:
        return 1 if self.kind == INTERVAL else 2

    @property
    def total_mass(self) -> float:
        return moment(self, (0,) * self.dim)

    def to_dict(self) -> Dict[str, object]:
        """The fields that matter for this kind, for reports and rule files."""
        if self.kind == INTERVAL:
            return {"kind": self.kind, "a": self.a, "b": self.b}
        if self.kind == SQUARE_MINUS_SQUARE:
            return {"kind": self.kind, "r": self.r}
        return {"kind": self.kind}

    @staticmethod
    def from_dict(d: Dict[str, object]) -> "WeightedDomain":
        if "kind" not in d:
            raise UnsupportedDomainError("domain needs a 'kind'")
        unknown = set(d) - {"kind", "a", "b", "r"}
        if unknown:
            raise UnsupportedDomainError(f"unknown domain fields {sorted(unknown)}")
        return WeightedDomain(**d)  # type: ignore


def _power_integral(lo: float, hi: float, k: int) -> float:
    return (hi ** (k + 1) - lo ** (k + 1)) / (k + 1)


def _symmetric_power_integral(k: int) -> float:
    """Integral of x^k over [-1, 1]."""
    return 2.0 / (k + 1) if k % 2 == 0 else 0.0


def _centered_power_integral(center: float, half_width: float, k: int) -> float:
    """Integral of x^k over [c - h, c + h], by binomial expansion about c (stable for small h)."""
    total = 0.0
    for j in range(0, k + 1, 2):
        total += math.comb(k, j) * center ** (k - j) * 2.0 * half_width ** (j + 1) / (j + 1)
    return total


@functools.lru_cache(maxsize=None)
def _moment(kind: str, a: float, b: float, r: float, m: MultiIndex) -> float:
    if kind == INTERVAL:
        return _power_integral(a, b, m[0])
    if kind == SQUARE:
        return _symmetric_power_integral(m[0]) * _symmetric_power_integral(m[1])
    if kind == UNIT_DISK:
        p, q = m
        if p % 2 or q % 2:
            return 0.0
        return 2.0 * math.gamma((p + 1) / 2) * math.gamma((q + 1) / 2) / ((p + q + 2) * math.gamma((p + q + 2) / 2))
    if kind == GAUSSIAN_PLANE:
        p, q = m
        if p % 2 or q % 2:
            return 0.0
        return math.gamma((p + 1) / 2) * math.gamma((q + 1) / 2)
    if kind == SQUARE_MINUS_SQUARE:
        big = _symmetric_power_integral(m[0]) * _symmetric_power_integral(m[1])
        if r == 0.0:
            return big
        cx, cy = REMOVED_SQUARE_CENTER
        small = _centered_power_integral(cx, r, m[0]) * _centered_power_integral(cy, r, m[1])
        return big - small

    raise UnsupportedDomainError(f"unsupported domain kind {kind!r}")


def moment(domain: WeightedDomain, m: Sequence[int]) -> float:
    """The exact weighted integral of the monomial x^m over the domain."""
    m = tuple(int(k) for k in m)
    if len(m) != domain.dim:
        raise ValueError(f"multi-index {m} does not match domain dimension {domain.dim}")
    if any(k < 0 for k in m):
        raise ValueError(f"multi-index components must be nonnegative, got {m}")
    return _moment(domain.kind, float(domain.a), float(domain.b), float(domain.r), m)


def dim_polynomials(d: int, q: int) -> int:
    """dim P_q in d variables; zero for negative q."""
    if q < 0:
        return 0
    return math.comb(d + q, d)


def graded_monomials(d: int, q: int) -> List[MultiIndex]:
    """Multi-indices of total degree <= q, by degree and then lexicographically (x_1 highest first)."""
    out: List[MultiIndex] = []
    for m in range(q + 1):
        layer = [c for c in itertools.product(range(m, -1, -1), repeat=d) if sum(c) == m]
        layer.sort(reverse=True)
        out.extend(layer)
    return out


def degree_block_sizes(d: int, q: int) -> Tuple[int, ...]:
    """n_1 = 1 and n_{m+1} = dim P_m - dim P_{m-1}, for m = 1..q."""
    return tuple(dim_polynomials(d, m) - dim_polynomials(d, m - 1) for m in range(q + 1))


def monomial_values(points, monomials: Sequence[MultiIndex]) -> Float[np.ndarray, "P n"]:
    """Values of each monomial at each point; ``points`` is P×d."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    exps = np.asarray(monomials, dtype=np.int64)
    return np.prod(pts[:, None, :] ** exps[None, :, :], axis=-1)


class GradedBasis(eqx.Module):
    """
    Orthonormal basis e_1..e_n of P_q ordered by degree, stored as ``coeffs[a, k]``: the coefficient of monomial k
    in e_a. The matrix is lower triangular, so the first dim P_m elements span P_m.
    """

    q: int = eqx.field(static=True)
    d: int = eqx.field(static=True)
    monomials: Tuple[MultiIndex, ...] = eqx.field(static=True)
    coeffs: Float[np.ndarray, "n n"]
    block_sizes: Tuple[int, ...] = eqx.field(static=True)

    @property
    def n(self) -> int:
        return len(self.monomials)

    @property
    def dim_previous(self) -> int:
        """dim P_{q-1}: the rows that the compatibility condition forbids extension blocks from touching."""
        return dim_polynomials(self.d, self.q - 1)

    @property
    def constant_value(self) -> float:
        """The (constant) value of e_1."""
        return float(self.coeffs[0, 0])

    def degrees(self) -> np.ndarray:
        return np.array([sum(m) for m in self.monomials])

    def evaluate(self, points) -> Float[np.ndarray, "P n"]:
        """Values e_a(x) for each point, as a P×n array."""
        return monomial_values(points, self.monomials) @ self.coeffs.T


def _gram_matrix(domain: WeightedDomain, monomials: Sequence[MultiIndex], shift: MultiIndex) -> np.ndarray:
    n = len(monomials)
    g = np.empty((n, n))
    for k in range(n):
        for l in range(k, n):
            idx = tuple(a + b + s for a, b, s in zip(monomials[k], monomials[l], shift))
            g[k, l] = g[l, k] = moment(domain, idx)
    return g


def gram_schmidt_basis(domain: WeightedDomain, q: int) -> GradedBasis:
    """
    Graded orthonormal basis of P_q under the domain's inner product, by modified Gram–Schmidt with one full
    re-orthogonalization pass.

    The degree-m candidates are x_i * e_b with e_b of degree m - 1, rather than bare monomials. They span the same
    spaces with the same triangular structure and are far better conditioned.

    Raises:
        DegenerateMomentError: if a candidate's remaining norm after orthogonalization falls below 1e-12 of its
            starting norm.
    """
    if q < 0:
        raise ValueError(f"q must be nonnegative, got {q}")

    d = domain.dim
    monomials = graded_monomials(d, q)
    n = len(monomials)
    index = {m: k for k, m in enumerate(monomials)}
    gram = _gram_matrix(domain, monomials, (0,) * d)

    if gram[0, 0] <= 0:
        raise DegenerateMomentError(f"degenerate moment functional: total mass {gram[0, 0]} is not positive")

    def inner(u, v):
        return float(u @ gram @ v)

    coeffs = np.zeros((n, n))
    for a, mono in enumerate(monomials):
        if a == 0:
            cand = np.zeros(n)
            cand[0] = 1.0
        else:
            i = next(k for k, e in enumerate(mono) if e > 0)
            parent = list(mono)
            parent[i] -= 1
            parent_coeffs = coeffs[index[tuple(parent)]]
            cand = np.zeros(n)
            for k, c in enumerate(parent_coeffs):
                if c != 0.0:
                    shifted = list(monomials[k])
                    shifted[i] += 1
                    cand[index[tuple(shifted)]] += c

        start = math.sqrt(inner(cand, cand))
        for _ in range(2):
            for b in range(a):
                cand = cand - inner(coeffs[b], cand) * coeffs[b]

        nrm2 = inner(cand, cand)
        if nrm2 <= 0 or math.sqrt(nrm2) < GRAM_SCHMIDT_PIVOT_TOL * start:
            raise DegenerateMomentError(
                f"degenerate moment functional: pivot for monomial {mono} is {math.sqrt(max(nrm2, 0.0)):.3e}"
                f" (candidate norm {start:.3e})"
            )
        cand = cand / math.sqrt(nrm2)
        # the basis is triangular: only monomials up to `a` appear
        cand[a + 1 :] = 0.0
        if cand[a] < 0:
            cand = -cand
        coeffs[a] = cand

    return GradedBasis(q=q, d=d, monomials=tuple(monomials), coeffs=coeffs, block_sizes=degree_block_sizes(d, q))


class CoordinateMatrices(eqx.Module):
    """The matrices (A_i)_{ab} = <e_a | x_i e_b> of multiplication by each coordinate on P_q."""

    mats: Tuple[SymMatrix, ...]
    block_sizes: Tuple[int, ...] = eqx.field(static=True)

    @property
    def d(self) -> int:
        return len(self.mats)

    @property
    def n(self) -> int:
        return self.mats[0].dim

    @property
    def arrays(self) -> Float[np.ndarray, "d n n"]:
        return np.stack([m.entries for m in self.mats])

    def __getitem__(self, i: int) -> SymMatrix:
        return self.mats[i]

    def __len__(self) -> int:
        return len(self.mats)


def coordinate_matrices(domain: WeightedDomain, basis: GradedBasis) -> CoordinateMatrices:
    """
    Builds A_i = C M_i C^T with (M_i)_{kl} the moment of monomial_k * monomial_l * x_i, so every entry comes from the
    moment oracle.

    The entries that the graded structure forces to vanish (blocks two or more degrees apart) are checked to be
    below 1e-10 and then set to exactly zero; likewise the commutators are checked to vanish outside their last
    degree block.

    Raises:
        InternalConsistencyError: if either structural property fails beyond tolerance.
    """
    d = domain.dim
    if basis.d != d:
        raise ValueError(f"basis is for dimension {basis.d}, domain has dimension {d}")

    degrees = basis.degrees()
    far = np.abs(degrees[:, None] - degrees[None, :]) >= 2

    arrays = []
    for i in range(d):
        shift = tuple(1 if k == i else 0 for k in range(d))
        m_i = _gram_matrix(domain, basis.monomials, shift)
        a_i = basis.coeffs @ m_i @ basis.coeffs.T
        a_i = 0.5 * (a_i + a_i.T)

        scale = max(1.0, float(np.linalg.norm(a_i)))
        worst = float(np.max(np.abs(a_i[far]), initial=0.0))
        if worst > STRUCTURE_TOL * scale:
            raise InternalConsistencyError(
                f"A_{i + 1} violates the tridiagonal block structure: entry of size {worst:.3e}"
            )
        a_i[far] = 0.0
        arrays.append(a_i)

    last = basis.block_sizes[-1]
    n = basis.n
    outside = np.ones((n, n), dtype=bool)
    outside[n - last :, n - last :] = False
    for i in range(d):
        for j in range(i + 1, d):
            c = commutator(arrays[i], arrays[j])
            scale = max(1.0, float(np.linalg.norm(arrays[i]) * np.linalg.norm(arrays[j])))
            worst = float(np.max(np.abs(c[outside]), initial=0.0))
            if worst > STRUCTURE_TOL * scale:
                raise InternalConsistencyError(
                    f"[A_{i + 1}, A_{j + 1}] is nonzero outside its last block: entry of size {worst:.3e}"
                )

    logger.debug(f"built {d} coordinate matrices of size {n} for {domain.kind}, q={basis.q}")
    return CoordinateMatrices(mats=tuple(SymMatrix(a) for a in arrays), block_sizes=basis.block_sizes)
