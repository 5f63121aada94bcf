import jax
import numpy as np
from jax import numpy as jnp
from jaxtyping import PRNGKeyArray


def jnp_to_python(a: jnp.ndarray):
    if isinstance(a, (float, int)):
        return float(a)
    elif a.shape == () or a.shape == (1,):
        return a.item()
    else:
        return a.tolist()


def key_for_seed(seed: int, index: int = 0) -> PRNGKeyArray:
    """The key for the ``index``-th independent stream of ``seed``. Streams never depend on how many were drawn."""
    return jax.random.fold_in(jax.random.PRNGKey(seed), index)


def random_orthogonal(key: PRNGKeyArray, n: int) -> np.ndarray:
    """Haar-distributed orthogonal n×n matrix, as float64 numpy."""
    g = np.asarray(jax.random.normal(key, (n, n), dtype=jnp.float64))
    q, r = np.linalg.qr(g)
    # fix the signs so the distribution is uniform and the result reproducible
    return q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))[None, :]


def random_rotation(key: PRNGKeyArray, n: int, angle_scale: float = 0.1) -> np.ndarray:
    """A single Givens rotation on a random pair of coordinates through a random small angle."""
    k_pair, k_angle = jax.random.split(key)
    pair = np.asarray(jax.random.choice(k_pair, n, (2,), replace=False))
    theta = float(jax.random.uniform(k_angle, (), minval=-angle_scale, maxval=angle_scale)) * np.pi
    rot = np.eye(n)
    p, r = int(pair[0]), int(pair[1])
    c, s = np.cos(theta), np.sin(theta)
    rot[p, p] = c
    rot[r, r] = c
    rot[p, r] = -s
    rot[r, p] = s
    return rot
