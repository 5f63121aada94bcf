"""
Jacobi-sweep minimization of S(Q, Λ) + compatibility penalty.

Q is the top n rows of an orthogonal N×N matrix Q̃. A sweep visits every pair of rows (p, r) with p < n and p < r,
finds the rotation angle in that plane minimizing the objective (with Λ re-solved for every trial Q), and applies it
if it does not make things worse. Rotations among the added rows only are skipped: they leave Q unchanged.

Whole chunks of sweeps run under jit; the Python driver only checks for convergence and stalls between chunks.
"""
import dataclasses
import functools
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import jax
import jax.numpy as jnp
import numpy as np
import ray
from jax import lax
from tqdm import tqdm

from commext.extensions.candidate import ExtensionCandidate, candidate_from_factorization
from commext.extensions.objective import (
    SingularLambdaSystemError,
    ZeroBlockSpec,
    lambdas_for,
    objective_terms,
    s_scale,
    solve_lambda,
    stack_mats,
    zero_rows,
)
from commext.logging import capture_time, format_duration, log_metrics
from commext.utils.jax_utils import key_for_seed, random_orthogonal, random_rotation


logger = logging.getLogger(__name__)

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_MAX_PERTURBATIONS = 16
# keys for perturbations after the start, disjoint from the ones used at the start
_RESWEEP_STREAM = 1 << 20


@dataclass(frozen=True)
class MinimizeOptions:
    max_sweeps: int = 5000
    seed: int = 0
    s_tol: Optional[float] = None
    """Success threshold on S + penalty. Defaults to 1e-12 Σ_i ||A_i||_F^2."""
    multistarts: int = 8
    chunk: int = 25
    """Sweeps per jitted call."""
    num_grid: int = 64
    refine_iters: int = 40
    stall_sweeps: int = 500
    """Give up on a start once S + penalty improved by less than ``stall_rtol`` (relative) over this many sweeps."""
    stall_rtol: float = 1e-6
    parallel: bool = False
    """Run the starts as ray tasks."""

    def __post_init__(self):
        if self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be positive, got {self.max_sweeps}")
        if self.multistarts < 1:
            raise ValueError(f"multistarts must be positive, got {self.multistarts}")
        if self.chunk < 1 or self.num_grid < 2 or self.refine_iters < 0:
            raise ValueError("chunk, num_grid and refine_iters must be positive")
        if self.s_tol is not None and self.s_tol < 0:
            raise ValueError(f"s_tol must be nonnegative, got {self.s_tol}")


def _golden_section(f, lo, hi, iters: int):
    def body(_, bounds):
        a, b = bounds
        c = b - _INV_PHI * (b - a)
        d = a + _INV_PHI * (b - a)
        left = f(c) < f(d)
        return jnp.where(left, a, c), jnp.where(left, d, b)

    a, b = lax.fori_loop(0, iters, body, (lo, hi))
    return 0.5 * (a + b)


def _minimize_angle(f, num_grid: int = 64, refine_iters: int = 40):
    """
    Returns ``(theta, f(theta))`` for theta in (-π/4, π/4]. The best point of a ``num_grid`` scan is refined by
    golden section within one grid step. 0 is returned unless something is strictly better than f(0).
    f must be traceable by jax.
    """
    quarter = jnp.pi / 4
    h = (jnp.pi / 2) / num_grid
    thetas = -quarter + (jnp.arange(num_grid, dtype=jnp.float64) + 1) * h

    def safe(t):
        v = f(t)
        return jnp.where(jnp.isfinite(v), v, jnp.inf)

    vals = jax.vmap(safe)(thetas)
    k = jnp.argmin(vals)
    best_t, best_v = thetas[k], vals[k]

    lo = jnp.maximum(best_t - h, -quarter)
    hi = jnp.minimum(best_t + h, quarter)
    t = _golden_section(safe, lo, hi, refine_iters)
    v = safe(t)
    best_t, best_v = jnp.where(v <= best_v, t, best_t), jnp.minimum(v, best_v)

    f0 = safe(jnp.zeros((), dtype=jnp.float64))
    better = best_v < f0
    return jnp.where(better, best_t, 0.0), jnp.where(better, best_v, f0)


def rotation_angle_minimize(f: Callable[[float], float], *, num_grid: int = 64, refine_iters: int = 40) -> float:
    """
    Minimizes f over (-π/4, π/4] by a ``num_grid`` point scan followed by golden section refinement.

    f must be written with jax.numpy. The result satisfies f(result) <= f(0).
    """

    def g(t):
        return jnp.asarray(f(t), dtype=jnp.float64) + 0.0 * t

    theta, _ = jax.jit(functools.partial(_minimize_angle, g, num_grid=num_grid, refine_iters=refine_iters))()
    return float(theta)


def _rotate_rows(qf, p, r, theta):
    c, s = jnp.cos(theta), jnp.sin(theta)
    row_p, row_r = qf[p], qf[r]
    return qf.at[p].set(c * row_p - s * row_r).at[r].set(s * row_p + c * row_r)


def _rotation_pairs(n: int, big_n: int) -> Tuple[np.ndarray, np.ndarray]:
    pairs = [(p, r) for p in range(n) for r in range(p + 1, big_n)]
    ps, rs = zip(*pairs) if pairs else ((), ())
    return np.asarray(ps, dtype=np.int32), np.asarray(rs, dtype=np.int32)


@functools.lru_cache(maxsize=32)
def _sweeper(n: int, big_n: int, rows: int, num_sweeps: int, num_grid: int, refine_iters: int):
    """A jitted function running ``num_sweeps`` sweeps: (Q̃, mats) -> (Q̃, per-sweep S, per-sweep penalty)."""
    ps, rs = _rotation_pairs(n, big_n)
    ps, rs = jnp.asarray(ps), jnp.asarray(rs)

    def total(qf, mats):
        q = qf[:n]
        s, pen = objective_terms(q, lambdas_for(q, mats), mats, rows)
        return s + pen

    def sweep(qf, mats):
        def visit(k, carry):
            qf, cur = carry
            p, r = ps[k], rs[k]
            theta, val = _minimize_angle(
                lambda t: total(_rotate_rows(qf, p, r, t), mats), num_grid=num_grid, refine_iters=refine_iters
            )
            accept = val <= cur
            theta = jnp.where(accept, theta, 0.0)
            return _rotate_rows(qf, p, r, theta), jnp.where(accept, val, cur)

        start = total(qf, mats)
        start = jnp.where(jnp.isfinite(start), start, jnp.inf)
        qf, _ = lax.fori_loop(0, ps.shape[0], visit, (qf, start))
        q = qf[:n]
        s, pen = objective_terms(q, lambdas_for(q, mats), mats, rows)
        return qf, (s, pen)

    @jax.jit
    def run(qf, mats):
        qf, (s, pen) = lax.scan(lambda carry, _: sweep(carry, mats), qf, None, length=num_sweeps)
        return qf, s, pen

    return run


def _polar(qf: np.ndarray) -> np.ndarray:
    """The orthogonal matrix nearest to ``qf``; removes rounding drift accumulated by many rotations."""
    u, _, vt = np.linalg.svd(qf)
    return u @ vt


def perturb_until_regular(qf: np.ndarray, arr: np.ndarray, key, *, what: str = "Q") -> np.ndarray:
    """
    Applies small random rotations to Q̃ until the Λ system of its top rows is regular, at most
    ``_MAX_PERTURBATIONS`` times. Returns Q̃ unchanged when the system already is.
    """
    n, big_n = arr.shape[1], qf.shape[0]
    qf = np.asarray(qf, dtype=np.float64)
    for attempt in range(_MAX_PERTURBATIONS):
        try:
            solve_lambda(qf[:n], arr)
            return qf
        except SingularLambdaSystemError:
            logger.debug(f"singular lambda system for {what}, perturbing (attempt {attempt + 1})")
            qf = random_rotation(jax.random.fold_in(key, attempt + 1), big_n) @ qf
    return qf


def _initial_factor(arr: np.ndarray, big_n: int, seed: int, start: int) -> np.ndarray:
    key = key_for_seed(seed, start)
    return perturb_until_regular(random_orthogonal(key, big_n), arr, key, what=f"start {start}")


def _single_start(
    arr: np.ndarray, big_n: int, rows: int, opts: MinimizeOptions, s_tol: float, start: int
) -> ExtensionCandidate:
    n = arr.shape[1]
    qf = jnp.asarray(_initial_factor(arr, big_n, opts.seed, start))
    mats = jnp.asarray(arr)

    history: List[float] = []
    done = 0
    converged = False
    while done < opts.max_sweeps:
        # sweeps can drift onto a degenerate Q
        key = jax.random.fold_in(key_for_seed(opts.seed, start), _RESWEEP_STREAM + done)
        qf = jnp.asarray(perturb_until_regular(np.asarray(qf), arr, key, what=f"start {start} at sweep {done}"))
        steps = min(opts.chunk, opts.max_sweeps - done)
        run = _sweeper(n, big_n, rows, steps, opts.num_grid, opts.refine_iters)
        qf, s, pen = run(qf, mats)
        totals = np.asarray(s + pen)
        history.extend(float(t) for t in totals)
        done += steps
        log_metrics({"search/objective": float(s[-1]), "search/penalty": float(pen[-1])}, step=done)

        if history[-1] <= s_tol:
            converged = True
            break
        if done >= opts.stall_sweeps:
            before = history[-opts.stall_sweeps]
            if history[-1] >= before * (1.0 - opts.stall_rtol):
                logger.debug(f"start {start}: stalled after {done} sweeps at {history[-1]:.3e}")
                break

    return candidate_from_factorization(
        _polar(np.asarray(qf)),
        arr,
        ZeroBlockSpec(rows) if rows else None,
        converged=converged,
        method="minimize_s",
        seed=opts.seed,
        sweeps=done,
        history=tuple(history),
    )


@ray.remote(num_cpus=1)
def _remote_start(arr, big_n, rows, opts, s_tol, start):
    return _single_start(arr, big_n, rows, opts, s_tol, start)


def minimize_s(
    mats, N: int, zero_block_spec: Optional[ZeroBlockSpec] = None, opts: Optional[MinimizeOptions] = None
) -> ExtensionCandidate:
    """
    Searches for an N×N commuting extension of ``mats`` by minimizing S + penalty over Q̃ with Jacobi sweeps, from
    ``opts.multistarts`` seeded random orthogonal starts. Returns the best candidate found.

    Non-convergence is not an error: the candidate's ``converged`` flag and ``history`` (S + penalty after every
    sweep) say how far it got. The history never increases, except after Q̃ is perturbed off a singular Λ system
    between chunks of sweeps.
    """
    opts = opts or MinimizeOptions()
    arr = stack_mats(mats)
    d, n, _ = arr.shape
    if N < n:
        raise ValueError(f"N must be at least n={n}, got {N}")
    rows = zero_rows(zero_block_spec)
    if rows > n:
        raise ValueError(f"zero block has {rows} rows but n is {n}")
    s_tol = opts.s_tol if opts.s_tol is not None else 1e-12 * s_scale(arr)

    logger.info(f"Minimizing S for n={n}, N={N}, d={d} with {opts.multistarts} starts, tolerance {s_tol:.3e}")
    with capture_time() as elapsed:
        if opts.parallel:
            if not ray.is_initialized():
                ray.init(ignore_reinit_error=True)
            refs = [_remote_start.remote(arr, N, rows, opts, s_tol, i) for i in range(opts.multistarts)]
            results = ray.get(refs)
        else:
            results = []
            for i in tqdm(range(opts.multistarts), desc="starts", leave=False):
                c = _single_start(arr, N, rows, opts, s_tol, i)
                results.append(c)
                if c.converged:
                    break

    # ties go to the earliest start
    best_index = min(range(len(results)), key=lambda i: (results[i].objective + results[i].compat_penalty, i))
    best = results[best_index]
    logger.info(
        f"Best start {best_index}: S={best.objective:.3e}, penalty={best.compat_penalty:.3e}, "
        f"converged={best.converged} after {best.sweeps} sweeps ({format_duration(elapsed())})"
    )
    return dataclasses.replace(best, seed=opts.seed)


def decay_rate(history, *, skip: int = 0) -> Optional[float]:
    """Fits ln S = a - b k to a sweep history and returns b, or None if there are fewer than two positive values."""
    h = np.asarray(history[skip:], dtype=np.float64)
    k = np.arange(skip, skip + len(h))
    keep = h > 0
    if keep.sum() < 2:
        return None
    slope, _ = np.polyfit(k[keep], np.log(h[keep]), 1)
    return float(-slope)
