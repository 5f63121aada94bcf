"""
Closed-form 7-point degree-5 rules in two dimensions.

For q = 2 the commutator [A_1, A_2] lives in the 3×3 block of the quadratic basis elements and has rank 2, so it
can be written -(v w^T - w v^T) with v, w supported on that block. A 7×7 symmetric commuting extension

    Ã_1 = [[A_1, a], [a^T, α]],    Ã_2 = [[A_2, b], [b^T, β]]

with a = λv + μw, b = νv + ρw and λρ - μν = 1 exists for every vector k = (k_0..k_5) in the kernel of
M = [v w A_1v A_1w A_2v A_2w] with D = k_2 k_5 - k_3 k_4 > 0, through

    λ = -k_4/√D, μ = -k_5/√D, ν = k_2/√D, ρ = k_3/√D,
    α = (k_1 k_4 - k_0 k_5)/D, β = (k_0 k_3 - k_1 k_2)/D.

Since v and w vanish on the first three rows, so does the first row of M, and the kernel is never trivial.
"""
import logging
from typing import List, NamedTuple, Optional, Sequence, Tuple

import jax
import numpy as np

from commext.cubature.rule import RADON_CLOSED_FORM, CubatureRule, rule_from_extension
from commext.cubature.verify import verify_rule
from commext.extensions.candidate import ExtensionCandidate, candidate_from_extension
from commext.extensions.objective import ZeroBlockSpec
from commext.linalg import commutator, null_space
from commext.moments import CoordinateMatrices, GradedBasis, WeightedDomain, coordinate_matrices, gram_schmidt_basis
from commext.utils.jax_utils import key_for_seed


logger = logging.getLogger(__name__)

DEFAULT_FAMILY_GRID = (0.0, 0.25, 0.5, 0.75)
KERNEL_TOL = 1e-10
# kernels of dimension > 2 are sampled with this many deterministic directions
SPHERE_SAMPLES = 16
RADON_VERIFY_TOL = 1e-9


class AlreadyCommuteError(ValueError):
    pass


class NoRadonExtensionError(RuntimeError):
    pass


def cross_factor(c, tol: float = 1e-12) -> Tuple[np.ndarray, np.ndarray]:
    """
    Two vectors v, w in R^3 with v w^T - w v^T = -C for an antisymmetric 3×3 C, i.e. v × w = z with
    z = (-C_12, C_02, -C_01).

    v is the column of C with the largest norm (every column is orthogonal to z), rescaled to length sqrt(|z|), and
    w = z × v / |v|^2, so both have length sqrt(|z|).

    Raises:
        AlreadyCommuteError: if ||C||_F <= tol.
    """
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (3, 3):
        raise ValueError(f"need a 3x3 matrix, got shape {c.shape}")
    asym = float(np.linalg.norm(c + c.T))
    norm = float(np.linalg.norm(c))
    if norm <= tol:
        raise AlreadyCommuteError(f"matrices already commute: ||C||_F = {norm:.3e}")
    if asym > 1e-10 * norm:
        raise ValueError(f"C is not antisymmetric: ||C + C^T||_F = {asym:.3e}")

    z = np.array([-c[1, 2], c[0, 2], -c[0, 1]])
    col = c[:, int(np.argmax(np.linalg.norm(c, axis=0)))]
    v = np.sqrt(np.linalg.norm(z)) * col / np.linalg.norm(col)
    w = np.cross(z, v) / float(v @ v)
    return v, w


class RadonKernel(NamedTuple):
    matrix: np.ndarray
    """M = [v w A_1v A_1w A_2v A_2w]"""
    kernel: np.ndarray
    """orthonormal basis of ker M as columns"""
    v: np.ndarray
    w: np.ndarray


def radon_kernel(mats: CoordinateMatrices, kernel_tol: float = KERNEL_TOL) -> RadonKernel:
    if mats.d != 2 or mats.block_sizes != (1, 2, 3):
        raise ValueError(f"need the coordinate matrices of a 2-D domain at q=2, got block sizes {mats.block_sizes}")
    a1, a2 = mats.arrays
    c = commutator(a1, a2)
    off_block = float(np.max(np.abs(c[:3]))) if c.size else 0.0
    if off_block > 1e-10 * max(1.0, float(np.linalg.norm(c))):
        raise ValueError(f"commutator is not confined to the quadratic block (max entry {off_block:.3e})")

    v3, w3 = cross_factor(c[3:, 3:])
    v = np.concatenate([np.zeros(3), v3])
    w = np.concatenate([np.zeros(3), w3])
    m = np.column_stack([v, w, a1 @ v, a1 @ w, a2 @ v, a2 @ w])
    return RadonKernel(matrix=m, kernel=null_space(m, kernel_tol), v=v, w=w)


def radon_extension(mats: CoordinateMatrices, rk: RadonKernel, k: Sequence[float]) -> Optional[np.ndarray]:
    """The pair of 7×7 extensions for kernel vector ``k``, or None if k is not admissible (D <= 0)."""
    k = np.asarray(k, dtype=np.float64)
    det = k[2] * k[5] - k[3] * k[4]
    if det <= 1e-12 * float(k @ k):
        return None
    s = 1.0 / np.sqrt(det)
    lam, mu, nu, rho = -s * k[4], -s * k[5], s * k[2], s * k[3]
    alpha = (k[1] * k[4] - k[0] * k[5]) / det
    beta = (k[0] * k[3] - k[1] * k[2]) / det

    a1, a2 = mats.arrays
    a = lam * rk.v + mu * rk.w
    b = nu * rk.v + rho * rk.w
    ext = np.zeros((2, 7, 7))
    for i, (base, col, corner) in enumerate(((a1, a, alpha), (a2, b, beta))):
        ext[i, :6, :6] = base
        ext[i, :6, 6] = col
        ext[i, 6, :6] = col
        ext[i, 6, 6] = corner
    return ext


def _kernel_directions(kernel: np.ndarray, family_param: Optional[float]) -> List[Tuple[Optional[float], np.ndarray]]:
    dim = kernel.shape[1]
    if dim == 1:
        return [(None, kernel[:, 0])]
    if dim == 2:
        params = DEFAULT_FAMILY_GRID if family_param is None else (family_param,)
        return [(t, np.cos(np.pi * t) * kernel[:, 0] + np.sin(np.pi * t) * kernel[:, 1]) for t in params]

    logger.warning(f"kernel of M has dimension {dim}; sampling {SPHERE_SAMPLES} directions")
    g = np.asarray(jax.random.normal(key_for_seed(0), (SPHERE_SAMPLES, dim)))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return [(None, kernel @ x) for x in g]


def radon_extensions(
    domain: WeightedDomain, family_param: Optional[float] = None, *, kernel_tol: float = KERNEL_TOL
) -> Tuple[GradedBasis, CoordinateMatrices, RadonKernel, List[Tuple[Optional[float], ExtensionCandidate]]]:
    """The admissible 7×7 extensions, as candidates, together with the basis, matrices and kernel they came from."""
    if domain.dim != 2:
        raise ValueError(f"Radon rules need a 2-D domain, got {domain.kind}")
    if family_param is not None and not 0.0 <= family_param < 1.0:
        raise ValueError(f"family_param must be in [0, 1), got {family_param}")

    basis = gram_schmidt_basis(domain, 2)
    mats = coordinate_matrices(domain, basis)
    rk = radon_kernel(mats, kernel_tol)
    logger.info(f"Radon kernel for {domain.kind} has dimension {rk.kernel.shape[1]}")

    out = []
    for t, k in _kernel_directions(rk.kernel, family_param):
        ext = radon_extension(mats, rk, k)
        if ext is None:
            logger.debug(f"kernel vector {k} is not admissible (family_param={t})")
            continue
        cand = candidate_from_extension(ext, mats, ZeroBlockSpec(basis.dim_previous), converged=True, method="radon")
        out.append((t, cand))
    return basis, mats, rk, out


def radon_solve(domain: WeightedDomain, family_param: Optional[float] = None) -> List[CubatureRule]:
    """
    Degree-5 rules with 7 nodes for a 2-D domain, one per admissible kernel direction. With a 2-dimensional kernel,
    ``family_param`` t in [0, 1) picks the direction cos(πt) k1 + sin(πt) k2; without it a fixed grid of t is used.

    Raises:
        NoRadonExtensionError: if no kernel direction is admissible or none gives a verified rule.
    """
    basis, _, rk, candidates = radon_extensions(domain, family_param)
    kernel_dim = rk.kernel.shape[1]

    rules = []
    for t, cand in candidates:
        rule = rule_from_extension(cand, basis, domain, provenance=RADON_CLOSED_FORM)
        report = verify_rule(rule, domain, tol=RADON_VERIFY_TOL)
        if not report.passed:
            logger.warning(f"Radon rule for family_param={t} failed verification: {report.max_rel_error:.3e}")
            continue
        rules.append(rule.with_info(kernel_dim=kernel_dim, family_param=t))

    if not rules:
        raise NoRadonExtensionError(
            f"no Radon extension found for {domain.kind}: no admissible kernel vector among {len(candidates)} tried"
            if not candidates
            else f"no Radon extension found for {domain.kind}: none of {len(candidates)} candidates verified"
        )
    return rules
