import dataclasses
import logging
from typing import Optional, Sequence, Tuple

import equinox as eqx
import jax.numpy as jnp
import numpy as np
from jaxtyping import Float

from commext.extensions.objective import ZeroBlockSpec, lambdas_for, objective_terms, stack_mats, zero_rows
from commext.linalg import (
    OrthonormalRows,
    commutator,
    orthonormality_error,
    simultaneous_diagonalize,
    sym_eigen,
)


logger = logging.getLogger(__name__)


class ExtensionCandidate(eqx.Module):
    """
    An (approximate) commuting extension of n×n matrices A_1..A_d to N×N matrices Ã_1..Ã_d, kept both as the
    extended matrices and as the factorization Ã_i = Q̃ Λ_i Q̃^T. ``q_full`` is the orthogonal Q̃ whose first n
    rows are Q.

    ``objective`` is S = ½ Σ_i ||A_i - (Ã_i)_{top-left}||_F^2, so the top-left blocks match A_i within sqrt(2S).
    """

    n: int = eqx.field(static=True)
    N: int = eqx.field(static=True)
    d: int = eqx.field(static=True)
    q_full: Float[np.ndarray, "N N"]
    lambdas: Float[np.ndarray, "d N"]
    extended: Float[np.ndarray, "d N N"]
    objective: float = eqx.field(static=True)
    compat_penalty: float = eqx.field(static=True)
    commutator_residual: float = eqx.field(static=True)
    zero_block_rows: int = eqx.field(static=True, default=0)
    converged: bool = eqx.field(static=True, default=False)
    method: str = eqx.field(static=True, default="")
    seed: Optional[int] = eqx.field(static=True, default=None)
    sweeps: int = eqx.field(static=True, default=0)
    history: Tuple[float, ...] = eqx.field(static=True, default=())
    diagnostic: str = eqx.field(static=True, default="")

    @property
    def Q(self) -> Float[np.ndarray, "n N"]:
        return self.q_full[: self.n]

    @property
    def q_rows(self) -> OrthonormalRows:
        return OrthonormalRows(self.Q, tol=1e-10)

    @property
    def completion(self) -> Float[np.ndarray, "m N"]:
        return self.q_full[self.n :]

    @property
    def zero_block_spec(self) -> Optional[ZeroBlockSpec]:
        return ZeroBlockSpec(self.zero_block_rows) if self.zero_block_rows else None

    def with_status(self, **kwargs) -> "ExtensionCandidate":
        """A copy with some of the static status fields replaced."""
        return dataclasses.replace(self, **kwargs)


def max_commutator_norm(mats) -> float:
    worst = 0.0
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            worst = max(worst, float(np.linalg.norm(commutator(mats[i], mats[j]))))
    return worst


def candidate_from_factorization(
    q_full,
    mats,
    zero_block_spec: Optional[ZeroBlockSpec] = None,
    *,
    lambdas: Optional[Sequence[Sequence[float]]] = None,
    **status,
) -> ExtensionCandidate:
    """Builds the candidate for an orthogonal Q̃; Λ is solved for unless given."""
    q_full = np.asarray(q_full, dtype=np.float64)
    arr = stack_mats(mats)
    d, n, _ = arr.shape
    big_n = q_full.shape[0]
    if q_full.shape != (big_n, big_n) or big_n < n:
        raise ValueError(f"Q̃ must be N×N with N >= {n}, got shape {q_full.shape}")
    err = orthonormality_error(q_full)
    if err > 1e-8:
        raise ValueError(f"Q̃ is not orthogonal: ||Q̃Q̃^T - I||_F = {err:.3e}")

    q = q_full[:n]
    if lambdas is None:
        lam = np.asarray(lambdas_for(jnp.asarray(q), jnp.asarray(arr)))
    else:
        lam = np.asarray(lambdas, dtype=np.float64)

    rows = zero_rows(zero_block_spec)
    s, pen = objective_terms(jnp.asarray(q), jnp.asarray(lam), jnp.asarray(arr), rows)
    extended = np.einsum("an,in,bn->iab", q_full, lam, q_full)
    extended = 0.5 * (extended + np.swapaxes(extended, 1, 2))

    return ExtensionCandidate(
        n=n,
        N=big_n,
        d=d,
        q_full=q_full,
        lambdas=lam,
        extended=extended,
        objective=float(s),
        compat_penalty=float(pen),
        commutator_residual=max_commutator_norm(extended),
        zero_block_rows=rows,
        **status,
    )


def candidate_from_extension(
    extended, mats, zero_block_spec: Optional[ZeroBlockSpec] = None, **status
) -> ExtensionCandidate:
    """
    Builds the candidate for explicit N×N matrices Ã_i. Q̃ and Λ come from a joint diagonalization when the Ã_i
    commute. Otherwise there is no joint eigensystem: Q̃ holds the eigenvectors of Ã_1, the candidate is marked
    unconverged and ``diagnostic`` says why.

    Raises:
        ConvergenceError: if the Ã_i commute but their joint diagonalization fails.
    """
    ext = stack_mats(extended)
    ext = 0.5 * (ext + np.swapaxes(ext, 1, 2))
    arr = stack_mats(mats)
    d, n, _ = arr.shape
    big_n = ext.shape[1]
    if ext.shape[0] != d or big_n < n:
        raise ValueError(f"need {d} extended matrices of size >= {n}, got shape {ext.shape}")

    rows = zero_rows(zero_block_spec)
    diff = arr - ext[:, :n, :n]
    objective = 0.5 * float(np.sum(diff * diff))
    penalty = float(np.sum(ext[:, :rows, n:] ** 2))
    residual = max_commutator_norm(ext)

    commute_tol = 1e-8 * max(float(np.linalg.norm(m)) for m in ext) ** 2
    if residual <= commute_tol:
        q_full = simultaneous_diagonalize(ext, tol=1e-10, commute_tol=commute_tol).vectors
    else:
        _, q_full = sym_eigen(ext[0])
        status["converged"] = False
        status["diagnostic"] = (
            f"no joint eigensystem: commutator residual {residual:.3e} > {commute_tol:.3e}, Q̃ diagonalizes Ã_1 only"
        )
        logger.debug(status["diagnostic"])
    lam = np.einsum("an,iab,bn->in", q_full, ext, q_full)

    return ExtensionCandidate(
        n=n,
        N=big_n,
        d=d,
        q_full=q_full,
        lambdas=lam,
        extended=ext,
        objective=objective,
        compat_penalty=penalty,
        commutator_residual=residual,
        zero_block_rows=rows,
        **status,
    )


def conjugate_family(c: ExtensionCandidate, u) -> ExtensionCandidate:
    """
    Conjugates the extension by diag(I_n, U) for an orthogonal (N-n)×(N-n) matrix U. The top-left blocks and the
    joint spectrum are unchanged.
    """
    u = np.asarray(u, dtype=np.float64)
    m = c.N - c.n
    if u.shape != (m, m):
        raise ValueError(f"U must be {m}x{m}, got shape {u.shape}")
    err = orthonormality_error(u) if m else 0.0
    if err > 1e-10:
        raise ValueError(f"U is not orthogonal: ||UU^T - I||_F = {err:.3e}")

    big_u = np.eye(c.N)
    big_u[c.n :, c.n :] = u
    extended = np.einsum("ab,ibc,dc->iad", big_u, c.extended, big_u)
    q_full = big_u @ c.q_full

    return dataclasses.replace(c, q_full=q_full, extended=extended, commutator_residual=max_commutator_norm(extended))
