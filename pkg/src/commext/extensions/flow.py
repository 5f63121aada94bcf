"""
Gradient flow on ||[Ã_1, Ã_2]||_F^2 for a pair of matrices.

The free variables are the added blocks of

    Ã_i = [[A_i,   a_i],
           [a_i^T, α_i]]

with α_i symmetric and the first ``zero_block_spec.rows`` rows of a_i held at zero. The flow is integrated with
explicit Euler steps (``optax.sgd``) whose length is halved whenever a step increases the objective.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import equinox as eqx
import jax
import jax.numpy as jnp
import numpy as np
import optax
from jaxtyping import Array, Float

from commext.extensions.candidate import ExtensionCandidate, candidate_from_extension
from commext.extensions.objective import ZeroBlockSpec, stack_mats, zero_rows
from commext.logging import capture_time, format_duration, log_metrics, log_optimizer_hyperparams
from commext.utils.jax_utils import key_for_seed


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FlowOptions:
    step: Optional[float] = None
    """Initial Euler step. Defaults to 0.1 / (||A_1||_F^2 + ||A_2||_F^2)."""
    max_iters: int = 20000
    seed: int = 0
    tol: Optional[float] = None
    """Success threshold on ||[Ã_1, Ã_2]||_F. Defaults to 1e-10 ||A_1||_F ||A_2||_F."""
    multistarts: int = 8
    diagonal_alpha1: bool = False
    """Keep α_1 diagonal. Conjugating the added block by an orthogonal U diagonalizes α_1 without changing anything
    else, so this loses no solutions."""
    init_scale: Optional[float] = None
    grow: float = 1.2
    shrink: float = 0.5
    min_step: float = 1e-12
    """Give up once the step has shrunk below this fraction of the initial step."""
    log_every: int = 100

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError(f"max_iters must be nonnegative, got {self.max_iters}")
        if self.multistarts < 1:
            raise ValueError(f"multistarts must be positive, got {self.multistarts}")
        if not (0 < self.shrink < 1 <= self.grow):
            raise ValueError(f"need 0 < shrink < 1 <= grow, got shrink={self.shrink}, grow={self.grow}")
        if self.step is not None and self.step <= 0:
            raise ValueError(f"step must be positive, got {self.step}")


class FlowProblem(eqx.Module):
    """The pair A_1, A_2 and the layout of the flat variable vector."""

    mats: Float[Array, "2 n n"]
    n: int = eqx.field(static=True)
    N: int = eqx.field(static=True)
    rows: int = eqx.field(static=True, default=0)
    diagonal_alpha1: bool = eqx.field(static=True, default=False)

    @property
    def m(self) -> int:
        return self.N - self.n

    def _sizes(self) -> Tuple[int, int, int]:
        a_size = (self.n - self.rows) * self.m
        alpha1 = self.m if self.diagonal_alpha1 else self.m * (self.m + 1) // 2
        return a_size, alpha1, self.m * (self.m + 1) // 2

    @property
    def num_variables(self) -> int:
        a_size, alpha1, alpha2 = self._sizes()
        return 2 * a_size + alpha1 + alpha2

    def _split(self, v):
        a_size, alpha1, alpha2 = self._sizes()
        offsets = np.cumsum([a_size, alpha1, a_size])
        return jnp.split(v, offsets)

    def _sym(self, flat, diagonal: bool):
        if diagonal:
            return jnp.diag(flat)
        iu = jnp.triu_indices(self.m)
        upper = jnp.zeros((self.m, self.m), dtype=flat.dtype).at[iu].set(flat)
        return upper + upper.T - jnp.diag(jnp.diag(upper))

    def _block(self, a_flat, alpha, i: int):
        a = jnp.zeros((self.n, self.m), dtype=a_flat.dtype)
        a = a.at[self.rows :].set(a_flat.reshape(self.n - self.rows, self.m))
        top = jnp.concatenate([self.mats[i], a], axis=1)
        bottom = jnp.concatenate([a.T, alpha], axis=1)
        return jnp.concatenate([top, bottom], axis=0)

    def unpack(self, v: Float[Array, " k"]) -> Tuple[Float[Array, "N N"], Float[Array, "N N"]]:
        a1, al1, a2, al2 = self._split(v)
        x = self._block(a1, self._sym(al1, self.diagonal_alpha1), 0)
        y = self._block(a2, self._sym(al2, False), 1)
        return x, y

    def pack(self, x, y) -> Float[Array, " k"]:
        """The variable vector of an extended pair. α_1 must already be diagonal if ``diagonal_alpha1`` is set."""
        x, y = jnp.asarray(x), jnp.asarray(y)
        iu = jnp.triu_indices(self.m)
        parts = [x[self.rows : self.n, self.n :].reshape(-1)]
        parts.append(jnp.diag(x[self.n :, self.n :]) if self.diagonal_alpha1 else x[self.n :, self.n :][iu])
        parts.append(y[self.rows : self.n, self.n :].reshape(-1))
        parts.append(y[self.n :, self.n :][iu])
        return jnp.concatenate(parts)

    def objective(self, v) -> Float[Array, ""]:
        x, y = self.unpack(v)
        c = x @ y - y @ x
        return jnp.sum(c * c)

    def gradient(self, v) -> Float[Array, " k"]:
        """d||[X, Y]||^2 = <2[C, Y], dX> + <2[X, C], dY> with C = [X, Y], restricted to the free entries."""
        x, y = self.unpack(v)
        c = x @ y - y @ x
        gx = 2.0 * (c @ y - y @ c)
        gy = 2.0 * (x @ c - c @ x)
        return jnp.concatenate([*self._reduce(gx, self.diagonal_alpha1), *self._reduce(gy, False)])

    def _reduce(self, g, diagonal: bool):
        # a_i appears twice in Ã_i, and so does every off-diagonal entry of α_i
        ga = 2.0 * g[self.rows : self.n, self.n :].reshape(-1)
        block = g[self.n :, self.n :]
        if diagonal:
            return ga, jnp.diag(block)
        iu = jnp.triu_indices(self.m)
        galpha = 2.0 * block - jnp.diag(jnp.diag(block))
        return ga, galpha[iu]


def commutator_objective(problem: FlowProblem, v) -> float:
    return float(problem.objective(jnp.asarray(v)))


def commutator_gradient(problem: FlowProblem, v) -> np.ndarray:
    return np.asarray(problem.gradient(jnp.asarray(v)))


# the step length is carried in the optimizer state
_EULER = optax.inject_hyperparams(optax.sgd)(learning_rate=1.0)


@eqx.filter_jit
def _euler_step(problem: FlowProblem, v, opt_state):
    g = problem.gradient(v)
    updates, new_state = _EULER.update(g, opt_state, v)
    new_v = optax.apply_updates(v, updates)
    return new_v, new_state, problem.objective(new_v), jnp.linalg.norm(g)


def _initial_variables(problem: FlowProblem, key, scale: float) -> jnp.ndarray:
    return scale * jax.random.normal(key, (problem.num_variables,), dtype=jnp.float64)


def _diagonalize_first_alpha(ext: np.ndarray, n: int) -> np.ndarray:
    """Conjugates by diag(I, U) so that the added diagonal block of the first matrix is diagonal."""
    _, u = np.linalg.eigh(ext[0, n:, n:])
    big_u = np.eye(ext.shape[1])
    big_u[n:, n:] = u.T
    return np.einsum("ab,ibc,dc->iad", big_u, ext, big_u)


@dataclass
class _FlowRun:
    v: np.ndarray
    residual: float
    iters: int
    converged: bool
    history: List[float]


def _integrate(problem: FlowProblem, v0, opts: FlowOptions, step: float, tol: float, start: int) -> _FlowRun:
    v = jnp.asarray(v0)
    f = float(problem.objective(v))
    history = [float(np.sqrt(f))]
    if f <= tol * tol:
        return _FlowRun(np.asarray(v), float(np.sqrt(f)), 0, True, history)

    opt_state = _EULER.init(v)
    opt_state.hyperparams["learning_rate"] = jnp.asarray(step)
    lr = step
    it = 0
    converged = False
    for it in range(1, opts.max_iters + 1):
        new_v, new_state, new_f, gnorm = _euler_step(problem, v, opt_state)
        new_f = float(new_f)
        if float(gnorm) == 0.0:
            # no free variables, or an exact critical point that is not a solution
            break
        if np.isfinite(new_f) and new_f <= f:
            v, opt_state, f = new_v, new_state, new_f
            lr *= opts.grow
        else:
            lr *= opts.shrink
            if lr < opts.min_step * step:
                logger.debug(f"start {start}: step collapsed to {lr:.1e} at iteration {it}")
                break
        opt_state.hyperparams["learning_rate"] = jnp.asarray(lr)

        if f <= tol * tol:
            converged = True
            break
        if it % opts.log_every == 0:
            history.append(float(np.sqrt(f)))
            log_metrics({"flow/residual": float(np.sqrt(f))}, step=it)
            log_optimizer_hyperparams(opt_state, prefix="flow", step=it)

    history.append(float(np.sqrt(f)))
    return _FlowRun(np.asarray(v), float(np.sqrt(f)), it, converged, history)


def gradient_flow(
    mats,
    N: int,
    zero_block_spec: Optional[ZeroBlockSpec] = None,
    opts: Optional[FlowOptions] = None,
    *,
    init=None,
) -> ExtensionCandidate:
    """
    Searches for an N×N commuting extension of a pair of matrices by following the gradient flow of the squared
    commutator norm from ``opts.multistarts`` Gaussian starts (or from ``init``, a pair of N×N extensions, when
    given). Returns the candidate with the smallest final commutator. Non-convergence is reported through the
    candidate's ``converged`` flag.
    """
    opts = opts or FlowOptions()
    arr = stack_mats(mats)
    d, n, _ = arr.shape
    if d != 2:
        raise ValueError(f"gradient_flow works on exactly 2 matrices, got {d}")
    if N < n:
        raise ValueError(f"N must be at least n={n}, got {N}")
    rows = zero_rows(zero_block_spec)
    if rows > n:
        raise ValueError(f"zero block has {rows} rows but n is {n}")

    norms = [float(np.linalg.norm(m)) for m in arr]
    tol = opts.tol if opts.tol is not None else 1e-10 * max(norms[0] * norms[1], 1e-300)
    step = opts.step if opts.step is not None else 0.1 / max(norms[0] ** 2 + norms[1] ** 2, 1e-300)
    scale = opts.init_scale if opts.init_scale is not None else max(norms) / np.sqrt(n)

    problem = FlowProblem(jnp.asarray(arr), n=n, N=N, rows=rows, diagonal_alpha1=opts.diagonal_alpha1)

    if init is not None:
        ext = stack_mats(init)
        if ext.shape != (2, N, N):
            raise ValueError(f"init must be 2 matrices of size {N}x{N}, got shape {ext.shape}")
        if opts.diagonal_alpha1 and N > n:
            ext = _diagonalize_first_alpha(ext, n)
        starts = [np.asarray(problem.pack(ext[0], ext[1]))]
    else:
        starts = [
            np.asarray(_initial_variables(problem, key_for_seed(opts.seed, i), scale)) for i in range(opts.multistarts)
        ]

    logger.info(f"Gradient flow for n={n}, N={N}: {problem.num_variables} variables, {len(starts)} starts")
    best: Optional[_FlowRun] = None
    with capture_time() as elapsed:
        for i, v0 in enumerate(starts):
            run = _integrate(problem, v0, opts, step, tol, i)
            if best is None or run.residual < best.residual:
                best = run
            if run.converged:
                break
    assert best is not None

    x, y = problem.unpack(jnp.asarray(best.v))
    logger.info(
        f"Gradient flow finished with ||[Ã_1, Ã_2]||_F = {best.residual:.3e} after {best.iters} iterations, "
        f"converged={best.converged} ({format_duration(elapsed())})"
    )
    return candidate_from_extension(
        np.stack([np.asarray(x), np.asarray(y)]),
        arr,
        zero_block_spec,
        converged=best.converged,
        method="gradient_flow",
        seed=opts.seed,
        sweeps=best.iters,
        history=tuple(best.history),
    )
