"""Seeded test matrices with known extension properties."""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import jax
import jax.numpy as jnp
import numpy as np

from commext.extensions.bounds import circulant_extension
from commext.linalg import commutator, numerical_rank
from commext.utils.jax_utils import key_for_seed, random_orthogonal


RANK_TWO_PAIR = "rank_two_pair"
CIRCULANT_DEMO = "circulant_demo"
PLANTED = "planted"
FIXTURE_NAMES = (RANK_TWO_PAIR, CIRCULANT_DEMO, PLANTED)


@dataclass
class Fixture:
    name: str
    mats: List[np.ndarray]
    extension: Optional[List[np.ndarray]] = None
    """a known extension of ``mats``, when the construction provides one"""
    info: Dict[str, Any] = field(default_factory=dict)

    @property
    def commutator_rank(self) -> int:
        worst = 0
        for i in range(len(self.mats)):
            for j in range(i + 1, len(self.mats)):
                c = commutator(self.mats[i], self.mats[j])
                if np.any(c):
                    worst = max(worst, numerical_rank(c))
        return worst


def rank_two_pair(seed: int = 0, eigenvalues: Sequence[float] = (1, 2, 3, 4, 5, 6)) -> Fixture:
    """
    A_1 = diag(λ) and (A_2)_{ab} = (w_a v_b - w_b v_a)/(λ_a - λ_b) off the diagonal, μ_a on it, for random μ, v, w.
    Then [A_1, A_2] = w v^T - v w^T has rank 2, yet for generic v, w the pair has no symmetric extension of size n+1.
    """
    lam = np.asarray(eigenvalues, dtype=np.float64)
    n = lam.shape[0]
    if len(set(lam.tolist())) != n:
        raise ValueError(f"eigenvalues must be distinct, got {lam}")

    k_mu, k_v, k_w = jax.random.split(key_for_seed(seed), 3)
    mu = np.asarray(jax.random.normal(k_mu, (n,), dtype=jnp.float64))
    v = np.asarray(jax.random.normal(k_v, (n,), dtype=jnp.float64))
    w = np.asarray(jax.random.normal(k_w, (n,), dtype=jnp.float64))

    a1 = np.diag(lam)
    a2 = np.diag(mu)
    for a in range(n):
        for b in range(n):
            if a != b:
                a2[a, b] = (w[a] * v[b] - w[b] * v[a]) / (lam[a] - lam[b])

    return Fixture(RANK_TWO_PAIR, [a1, a2], info={"seed": seed, "v": v.tolist(), "w": w.tolist()})


def circulant_demo(d: int = 2, n: int = 1, seed: Optional[int] = None) -> Fixture:
    """
    d random symmetric n×n matrices with their circulant extensions of size dn. With the defaults and no seed,
    the scalar pair A_1 = (2), A_2 = (3).
    """
    if d < 1 or n < 1:
        raise ValueError(f"need d >= 1 and n >= 1, got d={d}, n={n}")
    if seed is None and d == 2 and n == 1:
        mats = [np.array([[2.0]]), np.array([[3.0]])]
    else:
        g = np.asarray(jax.random.normal(key_for_seed(seed or 0), (d, n, n), dtype=jnp.float64))
        mats = [0.5 * (m + m.T) for m in g]
    return Fixture(CIRCULANT_DEMO, mats, extension=circulant_extension(mats), info={"seed": seed, "d": d, "n": n})


def planted(n: int, N: int, d: int = 2, seed: int = 0) -> Fixture:
    """The top-left n×n blocks of d commuting N×N matrices Q̃ diag(λ_i) Q̃^T with random Q̃ and λ_i."""
    if not 1 <= n <= N:
        raise ValueError(f"need 1 <= n <= N, got n={n}, N={N}")
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    k_q, k_lam = jax.random.split(key_for_seed(seed))
    q_full = random_orthogonal(k_q, N)
    lam = np.asarray(jax.random.uniform(k_lam, (d, N), dtype=jnp.float64, minval=-1.0, maxval=1.0))
    big = [q_full @ np.diag(lam_i) @ q_full.T for lam_i in lam]
    big = [0.5 * (b + b.T) for b in big]
    mats = [b[:n, :n].copy() for b in big]
    return Fixture(
        PLANTED,
        mats,
        extension=big,
        info={"seed": seed, "n": n, "N": N, "d": d, "q_full": q_full, "lambdas": lam},
    )


def make_fixture(
    name: str, *, n: Optional[int] = None, N: Optional[int] = None, d: int = 2, seed: Optional[int] = None
) -> Fixture:
    """Builds a fixture by name; unset sizes take each construction's defaults."""
    if name == RANK_TWO_PAIR:
        return rank_two_pair(seed or 0)
    if name == CIRCULANT_DEMO:
        return circulant_demo(d, n or 1, seed)
    if name == PLANTED:
        return planted(n or 6, N or 8, d, seed or 0)
    raise ValueError(f"unknown fixture {name!r}; expected one of {FIXTURE_NAMES}")
