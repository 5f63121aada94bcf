"""
The least-squares objective S(Q, Λ) = ½ Σ_i ||A_i - Q Λ_i Q^T||_F^2 over n×N matrices Q with orthonormal rows, the
linear system that gives its optimal Λ for fixed Q, and the compatibility penalty on the forbidden blocks.

The array math is written once with jax.numpy so the searches can jit it; the public functions take and return numpy.
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import jax.numpy as jnp
import numpy as np
from jaxtyping import Array, Float

from commext.linalg import as_array


LAMBDA_SINGULAR_TOL = 1e-10


class SingularLambdaSystemError(ValueError):
    pass


@dataclass(frozen=True)
class ZeroBlockSpec:
    """
    Rows 0..rows-1 of the columns added by an extension must vanish. For cubature these are the dim P_{q-1} rows
    of the lower degree basis elements.
    """

    rows: int

    def __post_init__(self):
        if self.rows < 0:
            raise ValueError(f"zero block rows must be nonnegative, got {self.rows}")


def zero_rows(spec: Optional[ZeroBlockSpec]) -> int:
    return 0 if spec is None else spec.rows


def stack_mats(mats) -> np.ndarray:
    """Accepts CoordinateMatrices, a sequence of matrices, or a (d, n, n) array."""
    if hasattr(mats, "arrays"):
        return np.asarray(mats.arrays, dtype=np.float64)
    if isinstance(mats, np.ndarray) and mats.ndim == 3:
        return mats.astype(np.float64)
    return np.stack([as_array(m) for m in mats])


def s_scale(mats) -> float:
    """Σ_i ||A_i||_F^2: the natural size of S, and the unit for its tolerances."""
    arr = stack_mats(mats)
    return float(np.sum(arr * arr))


def lambda_system(q: Float[Array, "n N"]) -> Float[Array, "N N"]:
    """The matrix with entries ((Q^T Q)_{αβ})^2."""
    p = q.T @ q
    return p * p


def lambdas_for(q: Float[Array, "n N"], mats: Float[Array, "d n n"]) -> Float[Array, "d N"]:
    """Solves Σ_β (Q^T Q)_{αβ}^2 Λ_{iβ} = (Q^T A_i Q)_{αα} without any singularity check."""
    rhs = jnp.einsum("an,iab,bn->in", q, mats, q)
    return jnp.linalg.solve(lambda_system(q), rhs.T).T


def objective_terms(
    q: Float[Array, "n N"], lambdas: Float[Array, "d N"], mats: Float[Array, "d n n"], rows: int
) -> Tuple[Float[Array, ""], Float[Array, ""]]:
    """
    S and the compatibility penalty. The penalty is Σ_i ||(Q Λ_i Q_b^T)[:rows]||^2 for any completion Q_b of Q;
    since Q_b^T Q_b = I - Q^T Q it is computed without choosing one.
    """
    recon = jnp.einsum("an,in,bn->iab", q, lambdas, q)
    diff = mats - recon
    s = 0.5 * jnp.sum(diff * diff)
    if rows == 0:
        return s, jnp.zeros((), dtype=s.dtype)

    big_n = q.shape[1]
    proj = jnp.eye(big_n, dtype=q.dtype) - q.T @ q
    top = q[:rows][None, :, :] * lambdas[:, None, :]
    blocks = top @ proj
    return s, jnp.sum(blocks * blocks)


def solve_lambda(q, mats) -> Float[np.ndarray, "d N"]:
    """
    The Λ_i minimizing S for fixed Q.

    Raises:
        SingularLambdaSystemError: if the system matrix has smallest singular value below 1e-10 of its largest,
            which means Q is degenerate (for instance it has a zero column).
    """
    q = np.asarray(as_array(q), dtype=np.float64)
    arr = stack_mats(mats)
    if arr.shape[1] != q.shape[0]:
        raise ValueError(f"Q has {q.shape[0]} rows but the matrices are {arr.shape[1]}x{arr.shape[2]}")

    w = np.asarray(lambda_system(jnp.asarray(q)))
    s = np.linalg.svd(w, compute_uv=False)
    if s[0] == 0.0 or s[-1] < LAMBDA_SINGULAR_TOL * s[0]:
        raise SingularLambdaSystemError(
            f"lambda system singular: smallest singular value {s[-1]:.3e}, largest {s[0]:.3e}"
        )

    rhs = np.einsum("an,iab,bn->in", q, arr, q)
    return np.linalg.solve(w, rhs.T).T


def s_objective(
    q, lambdas: Sequence[Sequence[float]], mats, zero_block_spec: Optional[ZeroBlockSpec] = None
) -> Tuple[float, float]:
    """Returns ``(S, penalty)``. The penalty is zero when no zero block is given."""
    q = jnp.asarray(as_array(q))
    arr = jnp.asarray(stack_mats(mats))
    lam = jnp.asarray(np.asarray(lambdas, dtype=np.float64))
    rows = zero_rows(zero_block_spec)
    if rows > q.shape[0]:
        raise ValueError(f"zero block has {rows} rows but Q only has {q.shape[0]}")
    s, pen = objective_terms(q, lam, arr, rows)
    return float(s), float(pen)
