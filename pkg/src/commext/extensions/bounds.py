"""
Lower bounds and size estimates for commuting extensions.

Only the commutator-rank bound is a theorem: an N×N symmetric commuting extension forces
rank([A_i, A_j]) <= 2(N - n). The rest count parameters against equations and are recommendations.
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from commext.extensions.objective import stack_mats
from commext.linalg import commutator, numerical_rank


RIGOROUS = "rigorous"
HEURISTIC = "heuristic"

# slack for ceil() on quotients that are integers in exact arithmetic
_CEIL_SLACK = 1e-9


def _ceil(x: float) -> int:
    return int(math.ceil(x - _CEIL_SLACK))


@dataclass(frozen=True)
class BoundReport:
    n: int
    d: int
    commutator_ranks: Dict[Tuple[int, int], int]
    rank_bound: int
    param_bound: int
    structured_bound: Optional[int] = None
    dof_bound_2d: Optional[int] = None
    dof_bound: Optional[int] = None
    q: Optional[int] = None
    labels: Dict[str, str] = field(
        default_factory=lambda: {
            "rank_bound": RIGOROUS,
            "param_bound": HEURISTIC,
            "structured_bound": HEURISTIC,
            "dof_bound_2d": HEURISTIC,
            "dof_bound": HEURISTIC,
        }
    )

    @property
    def max_rank(self) -> int:
        return max(self.commutator_ranks.values(), default=0)

    @property
    def recommended_N(self) -> int:
        """The size to try first: the degree-of-freedom count when there is one, never below the rank bound."""
        for guess in (self.dof_bound_2d, self.dof_bound, self.structured_bound):
            if guess is not None:
                return max(guess, self.rank_bound)
        return max(self.param_bound, self.rank_bound)

    def rows(self):
        """(name, value, label) for each bound that applies."""
        for name in ("rank_bound", "param_bound", "structured_bound", "dof_bound_2d", "dof_bound"):
            value = getattr(self, name)
            if value is not None:
                yield name, value, self.labels[name]


def commutator_rank_bound(n: int, max_rank: int) -> int:
    """N >= n + ½ max rank([A_i, A_j])."""
    return n + _ceil(max_rank / 2)


def parameter_count_bound(n: int, d: int) -> int:
    """Smallest N with N - n >= n(n-1)(d-1) / (2(n+d)), from counting free entries against commutator equations."""
    if d <= 1:
        return n
    return n + max(0, _ceil(n * (n - 1) * (d - 1) / (2 * (n + d))))


def structured_size_bound(n: int, d: int, block_sizes: Sequence[int]) -> Optional[int]:
    """
    Smallest N with N - n >= n_r(n_r - 1) / (2((n_r + d)/(d - 1) - n_{r-1})) for extensions that keep the
    tridiagonal block form. None when the denominator is not positive, where the count says nothing.
    """
    if d <= 1:
        return n
    n_r = block_sizes[-1]
    n_prev = block_sizes[-2] if len(block_sizes) > 1 else 0
    denom = (n_r + d) / (d - 1) - n_prev
    if denom <= 0:
        return None
    return n + max(0, _ceil(n_r * (n_r - 1) / (2 * denom)))


def dof_bound_plane(q: int) -> int:
    """⌈(2q+2)(2q+3)/6⌉: a third of dim P_{2q+1} in two variables."""
    return _ceil((2 * q + 2) * (2 * q + 3) / 6)


def dof_bound_general(d: int, q: int) -> int:
    """⌈dim P_{2q+1} / (d+1)⌉: nodes needed for a degree 2q+1 rule in d variables by counting unknowns."""
    return _ceil(math.comb(d + 2 * q + 1, d) / (d + 1))


def bound_report(mats, block_sizes: Optional[Sequence[int]] = None, *, q: Optional[int] = None) -> BoundReport:
    """
    All size bounds for commuting extensions of ``mats`` (CoordinateMatrices or a list of matrices).

    The block structure, and with it the structured and degree-of-freedom estimates, is taken from
    CoordinateMatrices when available. ``q`` defaults to the number of degree blocks minus one.
    """
    if block_sizes is None and hasattr(mats, "block_sizes"):
        block_sizes = mats.block_sizes
    arr = stack_mats(mats)
    d, n, _ = arr.shape
    if d < 1:
        raise ValueError("need at least one matrix")

    if q is None and block_sizes is not None:
        q = len(block_sizes) - 1

    ranks: Dict[Tuple[int, int], int] = {}
    for i in range(d):
        for j in range(i + 1, d):
            c = commutator(arr[i], arr[j])
            ranks[(i, j)] = numerical_rank(c) if np.any(c) else 0
    max_rank = max(ranks.values(), default=0)

    def at_least_n(x: Optional[int]) -> Optional[int]:
        return None if x is None else max(n, x)

    structured = structured_size_bound(n, d, block_sizes) if block_sizes is not None else None

    return BoundReport(
        n=n,
        d=d,
        commutator_ranks=ranks,
        rank_bound=commutator_rank_bound(n, max_rank),
        param_bound=at_least_n(parameter_count_bound(n, d)),  # type: ignore
        structured_bound=at_least_n(structured),
        dof_bound_2d=at_least_n(dof_bound_plane(q)) if d == 2 and q is not None else None,
        dof_bound=at_least_n(dof_bound_general(d, q)) if q is not None else None,
        q=q,
    )


def circulant_extension(mats) -> List[np.ndarray]:
    """
    Explicit commuting extensions of any d square n×n matrices to size dn: block (j, k) of Ã_i is A_{(i+k-j) mod d}.

    Block (j, k) of Ã_i Ã_l is Σ_t A_t A_{(i+l+k-j-t) mod d}, which is symmetric in i and l, so the Ã_i commute.
    The top-left block of Ã_i is A_i. The result is symmetric only in special cases, so this
    bounds the size of an extension but not of a symmetric one.
    """
    arr = [np.asarray(m, dtype=np.float64) for m in mats]
    d = len(arr)
    if d == 0:
        return []
    n = arr[0].shape[0]
    for m in arr:
        if m.shape != (n, n):
            raise ValueError(f"all matrices must be {n}x{n}, got {m.shape}")

    out = []
    for i in range(d):
        big = np.zeros((d * n, d * n))
        for j in range(d):
            for k in range(d):
                big[j * n : (j + 1) * n, k * n : (k + 1) * n] = arr[(i + k - j) % d]
        out.append(big)
    return out
