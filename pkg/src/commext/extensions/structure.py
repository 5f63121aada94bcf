"""
Checks that use the block structure of the matrices: the residual equations of a block-tridiagonal extension, the
dependency test that an (n+1)-extension of a rank-2 commutator pair must pass, and spectral containment.
"""
import logging
from typing import List, NamedTuple, Sequence

import numpy as np

from commext.extensions.candidate import ExtensionCandidate
from commext.linalg import as_array, commutator, null_space, numerical_rank, sym_eigen


logger = logging.getLogger(__name__)


class LemmaInapplicableError(ValueError):
    pass


class BlockShapeError(ValueError):
    pass


class StructuredResidual(NamedTuple):
    """Frobenius norms of the four block equations pairing Ã_1 with Ã_i."""

    index: int
    previous_block: float
    """rows of degree block r-1 against the added columns"""
    last_block: float
    """degree block r against itself"""
    coupling: float
    """degree block r against the added columns"""
    added_block: float
    """added rows against added columns"""

    @property
    def max(self) -> float:
        return max(self.previous_block, self.last_block, self.coupling, self.added_block)


class ExtendabilityResult(NamedTuple):
    dependent: bool
    """whether v, w, A_1v, A_1w, A_2v, A_2w are linearly dependent"""
    kernel: np.ndarray
    """orthonormal basis (columns) of the coefficient vectors of the dependencies, shape (6, k)"""
    v: np.ndarray
    w: np.ndarray


def _block_views(ext: np.ndarray, n: int, block_sizes: Sequence[int]):
    n_r = block_sizes[-1]
    n_prev = block_sizes[-2] if len(block_sizes) > 1 else 0
    last = slice(n - n_r, n)
    prev = slice(n - n_r - n_prev, n - n_r)
    return {
        "a_prev": ext[prev, last],
        "alpha_r": ext[last, last],
        "a": ext[last, n:],
        "alpha": ext[n:, n:],
    }


def structured_residual(
    c: ExtensionCandidate, block_sizes: Sequence[int], *, shape_tol: float = 1e-8
) -> List[StructuredResidual]:
    """
    For i = 2..d, the residuals of the equations a block-tridiagonal extension satisfies exactly when Ã_1 and Ã_i
    commute in the blocks that can be nonzero. With a_{i(r-1)} the coupling of degree blocks r-1 and r, α_{ir} the
    last diagonal block, a_i the added columns of block r and α_i the added diagonal block:

        a_{1(r-1)} a_i - a_{i(r-1)} a_1
        a_{1(r-1)}^T a_{i(r-1)} - a_{i(r-1)}^T a_{1(r-1)} + [α_{1r}, α_{ir}] + a_1 a_i^T - a_i a_1^T
        α_{1r} a_i - α_{ir} a_1 + a_1 α_i - a_i α_1
        a_1^T a_i - a_i^T a_1 + [α_1, α_i]

    Raises:
        BlockShapeError: if the block sizes do not add up to n, or the added columns are nonzero (beyond
            ``shape_tol``) outside the last degree block.
    """
    block_sizes = [int(s) for s in block_sizes]
    if not block_sizes or any(s <= 0 for s in block_sizes):
        raise BlockShapeError(f"block sizes must be positive, got {block_sizes}")
    if sum(block_sizes) != c.n:
        raise BlockShapeError(f"block sizes {block_sizes} add up to {sum(block_sizes)}, not n={c.n}")

    ext = np.asarray(c.extended)
    n_r = block_sizes[-1]
    outside = ext[:, : c.n - n_r, c.n :]
    if outside.size and float(np.max(np.abs(outside))) > shape_tol:
        raise BlockShapeError(
            f"added columns are nonzero outside the last degree block (max |entry| {np.max(np.abs(outside)):.3e})"
        )

    first = _block_views(ext[0], c.n, block_sizes)
    out = []
    for i in range(1, c.d):
        other = _block_views(ext[i], c.n, block_sizes)
        e1 = first["a_prev"] @ other["a"] - other["a_prev"] @ first["a"]
        e2 = (
            first["a_prev"].T @ other["a_prev"]
            - other["a_prev"].T @ first["a_prev"]
            + commutator(first["alpha_r"], other["alpha_r"])
            + first["a"] @ other["a"].T
            - other["a"] @ first["a"].T
        )
        e3 = first["alpha_r"] @ other["a"] - other["alpha_r"] @ first["a"] + first["a"] @ other["alpha"]
        e3 = e3 - other["a"] @ first["alpha"]
        e4 = first["a"].T @ other["a"] - other["a"].T @ first["a"] + commutator(first["alpha"], other["alpha"])
        out.append(StructuredResidual(i, *(float(np.linalg.norm(e)) for e in (e1, e2, e3, e4))))
    return out


def extendability_test(a1, a2, *, rel_tol: float = 1e-10) -> ExtendabilityResult:
    """
    Necessary condition for a symmetric (n+1)-extension of a pair whose commutator has rank 2.

    Writes [A_1, A_2] = -(v w^T - w v^T) with v, w from the two dominant singular directions, then tests whether
    v, w, A_1v, A_1w, A_2v, A_2w are linearly dependent. If they are independent there is no (n+1)×(n+1) symmetric
    commuting extension.

    Raises:
        LemmaInapplicableError: if the commutator does not have numerical rank 2.
    """
    a1, a2 = as_array(a1), as_array(a2)
    c = commutator(a1, a2)
    rank = numerical_rank(c, rel_tol) if np.any(c) else 0
    if rank != 2:
        raise LemmaInapplicableError(f"lemma inapplicable: commutator has rank {rank}, not 2")

    u, _, _ = np.linalg.svd(c)
    x, y = u[:, 0], u[:, 1]
    coeff = float(x @ c @ y)
    scale = np.sqrt(abs(coeff))
    v = -np.sign(coeff) * scale * x
    w = scale * y

    residual = float(np.linalg.norm(c + np.outer(v, w) - np.outer(w, v)))
    if residual > 1e-10 * max(1.0, float(np.linalg.norm(c))):
        logger.warning(f"rank-2 factorization of the commutator is inexact: residual {residual:.3e}")

    m = np.column_stack([v, w, a1 @ v, a1 @ w, a2 @ v, a2 @ w])
    kernel = null_space(m, rel_tol)
    return ExtendabilityResult(dependent=kernel.shape[1] > 0, kernel=kernel, v=v, w=w)


def spectral_containment(a, a_tilde, *, block_tol: float = 1e-8, margin: float = 1e-10) -> bool:
    """
    Whether the spectrum of the extension Ã spans that of A: min eig(Ã) <= min eig(A) and max eig(Ã) >= max eig(A),
    within ``margin``.

    Raises:
        BlockShapeError: if the top-left block of Ã does not equal A within ``block_tol``.
    """
    a, a_tilde = as_array(a), as_array(a_tilde)
    n = a.shape[0]
    if a_tilde.shape[0] < n or a_tilde.shape[0] != a_tilde.shape[1]:
        raise BlockShapeError(f"cannot extend a {n}x{n} matrix to shape {a_tilde.shape}")
    mismatch = float(np.max(np.abs(a_tilde[:n, :n] - a))) if n else 0.0
    if mismatch > block_tol:
        raise BlockShapeError(f"top-left block differs from A by {mismatch:.3e}")

    eig_a, _ = sym_eigen(a)
    eig_t, _ = sym_eigen(a_tilde)
    return bool(eig_t[0] <= eig_a[0] + margin and eig_t[-1] >= eig_a[-1] - margin)
