"""
Dense real symmetric linear algebra: a cyclic Jacobi eigensolver, numerical rank and null spaces, orthonormal
completion of row sets, and Jacobi-style joint diagonalization of commuting symmetric families.

Everything here works on float64 numpy arrays and is pure, so values can be shared freely between threads.
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

import equinox as eqx
import numpy as np
from jaxtyping import Float


logger = logging.getLogger(__name__)

DEFAULT_MAX_SWEEPS = 100


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class NotCommutingError(ValueError):
    def __init__(self, max_commutator: float, tolerance: float):
        super().__init__(f"matrices are not commuting: max commutator norm {max_commutator:.3e} > {tolerance:.3e}")
        self.max_commutator = max_commutator


class NotOrthonormalError(ValueError):
    pass


class SymMatrix(eqx.Module):
    """A real symmetric matrix. Symmetry is enforced on construction by averaging with the transpose."""

    entries: Float[np.ndarray, "n n"]

    def __init__(self, entries):
        a = np.array(entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"SymMatrix needs a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("SymMatrix entries must be finite")
        self.entries = 0.5 * (a + a.T)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


class OrthonormalRows(eqx.Module):
    """An n×N matrix (n ≤ N) whose rows are orthonormal."""

    entries: Float[np.ndarray, "n N"]

    def __init__(self, entries, tol: float = 1e-12):
        q = np.array(entries, dtype=np.float64)
        if q.ndim != 2 or q.shape[0] > q.shape[1]:
            raise NotOrthonormalError(f"expected an n×N matrix with n <= N, got shape {q.shape}")
        err = orthonormality_error(q)
        if err > tol:
            raise NotOrthonormalError(f"rows are not orthonormal: ||QQ^T - I||_F = {err:.3e} > {tol:.3e}")
        self.entries = q

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    def __array__(self, dtype=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


class JointEigenSystem(eqx.Module):
    """
    Common eigenvectors (the columns of ``vectors``) of a commuting symmetric family, with ``values[i, alpha]`` the
    eigenvalue of the i-th matrix on the alpha-th vector. Columns are ordered lexicographically by their eigenvalue
    tuples.
    """

    vectors: Float[np.ndarray, "N N"]
    values: Float[np.ndarray, "d N"]
    offdiag_residual: float = eqx.field(static=True)

    @property
    def tuples(self) -> np.ndarray:
        """The eigenvalue tuples as an N×d array."""
        return self.values.T


MatrixLike = Union[SymMatrix, np.ndarray, Sequence[Sequence[float]]]


def as_array(m) -> np.ndarray:
    if isinstance(m, (SymMatrix, OrthonormalRows)):
        return m.entries
    return np.asarray(m, dtype=np.float64)


def commutator(a, b) -> np.ndarray:
    a = as_array(a)
    b = as_array(b)
    return a @ b - b @ a


def orthonormality_error(q) -> float:
    q = as_array(q)
    return float(np.linalg.norm(q @ q.T - np.eye(q.shape[0])))


def _off_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def _fix_column_signs(vectors: np.ndarray, rel_tol: float = 1e-10) -> np.ndarray:
    """Flips each column so that its first significantly nonzero component is positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        big = np.abs(col) > rel_tol * np.max(np.abs(col))
        if np.any(big) and col[np.argmax(big)] < 0:
            out[:, j] = -col
    return out


def sym_eigen(
    a: MatrixLike, tol: float = 1e-13, max_sweeps: int = DEFAULT_MAX_SWEEPS
) -> Tuple[Float[np.ndarray, " n"], Float[np.ndarray, "n n"]]:
    """
    Eigen-decomposition of a real symmetric matrix by cyclic-by-row Jacobi rotations, with threshold skipping in the
    first sweeps. Returns ``(values, vectors)`` with values ascending and ``A ≈ V diag(values) V^T``.

    Raises:
        ConvergenceError: if the off-diagonal mass is still above ``tol * ||A||_F`` after ``max_sweeps`` sweeps.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")

    a = np.array(as_array(a), dtype=np.float64)
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    norm = float(np.linalg.norm(a))

    if n == 0:
        return np.zeros(0), v

    off = _off_norm(a)
    sweep = 0
    while off > tol * norm:
        if sweep >= max_sweeps:
            raise ConvergenceError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps", off / norm)

        # skip small rotations early on, the big ones pay for themselves first
        thresh = 0.2 * off / (n * n) if sweep < 3 else 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                g = 100.0 * abs(apq)
                if sweep > 3 and abs(a[p, p]) + g == abs(a[p, p]) and abs(a[q, q]) + g == abs(a[q, q]):
                    a[p, q] = a[q, p] = 0.0
                    continue
                if abs(apq) <= thresh or apq == 0.0:
                    continue

                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0

                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq

        sweep += 1
        off = _off_norm(a)

    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")
    return values[order], _fix_column_signs(v[:, order])


def singular_values(m) -> np.ndarray:
    m = as_array(m)
    if m.size == 0:
        return np.zeros(0)
    return np.linalg.svd(m, compute_uv=False)


def numerical_rank(m, rel_tol: float = 1e-10) -> int:
    """Number of singular values above ``rel_tol`` times the largest one. The zero matrix has rank 0."""
    if not 0 < rel_tol < 1:
        raise ValueError(f"rel_tol must be in (0, 1), got {rel_tol}")
    s = singular_values(m)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


def null_space(m, rel_tol: float = 1e-10) -> Float[np.ndarray, "cols k"]:
    """Orthonormal basis (as columns) of the right null space of ``m``, using the same rank rule as numerical_rank."""
    m = as_array(m)
    _, s, vt = np.linalg.svd(m, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(m.shape[1])
    rank = int(np.sum(s > rel_tol * s[0]))
    return vt[rank:].T.copy()


def complete_orthonormal(q, tol: float = 1e-8) -> Float[np.ndarray, "N N"]:
    """
    Extends the orthonormal rows of an n×N matrix to an N×N orthogonal matrix whose top n rows are ``q``.

    The added rows come from Gram–Schmidt (applied twice) against the standard basis vectors in index order,
    skipping candidates whose residual norm is below 1/sqrt(2N); one pass over the basis always suffices.
    """
    q = as_array(q)
    n, big_n = q.shape
    err = orthonormality_error(q)
    if err > tol:
        raise NotOrthonormalError(f"rows are not orthonormal: ||QQ^T - I||_F = {err:.3e} > {tol:.3e}")

    rows: List[np.ndarray] = [r for r in q]
    skip_below = 1.0 / math.sqrt(2.0 * big_n)
    for k in range(big_n):
        if len(rows) == big_n:
            break
        basis = np.array(rows) if rows else np.zeros((0, big_n))
        cand = np.zeros(big_n)
        cand[k] = 1.0
        for _ in range(2):
            cand = cand - basis.T @ (basis @ cand)
        nrm = float(np.linalg.norm(cand))
        if nrm < skip_below:
            continue
        rows.append(cand / nrm)

    if len(rows) != big_n:
        # unreachable for orthonormal input; see the docstring
        raise RuntimeError(f"orthonormal completion produced {len(rows)} of {big_n} rows")

    out = np.array(rows)
    out[:n] = q
    return out


def _check_commuting(mats: np.ndarray, commute_tol: Optional[float]) -> None:
    max_norm = max(float(np.linalg.norm(m)) for m in mats)
    if commute_tol is None:
        commute_tol = 1e-8 * max_norm**2
    worst = 0.0
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            worst = max(worst, float(np.linalg.norm(commutator(mats[i], mats[j]))))
    if worst > commute_tol:
        raise NotCommutingError(worst, commute_tol)


def _lex_order(values: np.ndarray, decimals: int = 9) -> np.ndarray:
    rounded = np.round(values, decimals) + 0.0  # +0.0 folds -0.0 into 0.0
    # np.lexsort sorts by the last key first
    return np.lexsort(tuple(rounded[::-1]))


def simultaneous_diagonalize(
    mats: Sequence[MatrixLike],
    tol: float = 1e-10,
    *,
    commute_tol: Optional[float] = None,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> JointEigenSystem:
    """
    Joint eigenvectors of a commuting family of symmetric matrices, by Jacobi sweeps that minimize the summed squared
    off-diagonal entries. Each rotation angle has the closed form of Cardoso and Souloumiac.

    Raises:
        NotCommutingError: if some pairwise commutator has Frobenius norm above ``commute_tol``
            (default ``1e-8 * max ||A_i||_F^2``).
        ConvergenceError: if ``sum_i ||offdiag(V^T A_i V)||_F`` is still above ``tol * sum_i ||A_i||_F``.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if len(mats) == 0:
        raise ValueError("need at least one matrix")

    a = np.array([0.5 * (as_array(m) + as_array(m).T) for m in mats], dtype=np.float64)
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise ValueError(f"all matrices must be square and of the same size, got {[as_array(m).shape for m in mats]}")

    _check_commuting(a, commute_tol)

    d, big_n, _ = a.shape
    v = np.eye(big_n)
    scale = float(sum(np.linalg.norm(m) for m in a))

    def residual() -> float:
        return float(sum(_off_norm(m) for m in a))

    off = residual()
    sweep = 0
    while off > tol * scale:
        if sweep >= max_sweeps:
            raise ConvergenceError(f"joint diagonalization did not converge in {max_sweeps} sweeps", off / scale)

        rotated = False
        for p in range(big_n - 1):
            for q in range(p + 1, big_n):
                am = a[:, p, p] - a[:, q, q]
                ap = a[:, p, q] + a[:, q, p]
                ton = float(am @ am - ap @ ap)
                toff = float(2.0 * am @ ap)
                # toff == 0 with ton < 0 (equal diagonals) needs the quarter turn
                theta = 0.25 * math.atan2(toff, ton)
                c = math.cos(theta)
                s = math.sin(theta)
                if abs(s) <= 1e-16:
                    continue
                rotated = True

                col_p = a[:, :, p].copy()
                col_q = a[:, :, q].copy()
                a[:, :, p] = c * col_p + s * col_q
                a[:, :, q] = -s * col_p + c * col_q
                row_p = a[:, p, :].copy()
                row_q = a[:, q, :].copy()
                a[:, p, :] = c * row_p + s * row_q
                a[:, q, :] = -s * row_p + c * row_q

                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp + s * vq
                v[:, q] = -s * vp + c * vq

        sweep += 1
        off = residual()
        if not rotated and off > tol * scale:
            raise ConvergenceError("joint diagonalization stalled", off / scale)

    logger.debug(f"joint diagonalization of {d} {big_n}x{big_n} matrices took {sweep} sweeps")

    values = np.array([np.diag(m) for m in a])
    order = _lex_order(values)
    return JointEigenSystem(
        vectors=_fix_column_signs(v[:, order]),
        values=values[:, order],
        offdiag_residual=off,
    )
