import logging

import jax
import jax.numpy as jnp
import numpy as np
import pytest
from test_utils import commuting_family

from commext.extensions import MinimizeOptions, ZeroBlockSpec, minimize_s, rotation_angle_minimize, search
from commext.extensions.objective import s_scale, solve_lambda
from commext.extensions.search import decay_rate, perturb_until_regular
from commext.fixtures import planted
from commext.linalg import orthonormality_error


def test_rotation_angle_minimize_finds_interior_minimum():
    theta = rotation_angle_minimize(lambda t: (jnp.sin(t) - 0.3) ** 2)
    assert theta == pytest.approx(np.arcsin(0.3), abs=1e-6)


def test_rotation_angle_minimize_keeps_zero_without_improvement():
    assert rotation_angle_minimize(lambda t: 1.0) == 0.0
    assert rotation_angle_minimize(lambda t: t**2) == 0.0


def test_rotation_angle_minimize_never_worse_than_zero():
    def f(t):
        return jnp.cos(4 * t) + 0.1 * t

    theta = rotation_angle_minimize(f)
    assert -np.pi / 4 < theta <= np.pi / 4
    assert float(f(theta)) <= float(f(0.0))


def test_minimize_options_validation():
    with pytest.raises(ValueError):
        MinimizeOptions(max_sweeps=0)
    with pytest.raises(ValueError):
        MinimizeOptions(multistarts=0)
    with pytest.raises(ValueError):
        MinimizeOptions(s_tol=-1.0)


def test_minimize_s_rejects_small_n():
    with pytest.raises(ValueError):
        minimize_s([np.eye(3), np.eye(3)], 2)


def test_decay_rate():
    history = 10.0 * np.exp(-0.5 * np.arange(20))
    assert decay_rate(history) == pytest.approx(0.5)
    assert decay_rate(history, skip=5) == pytest.approx(0.5)
    assert decay_rate([0.0, 0.0]) is None


def test_perturb_until_regular():
    mats = np.stack([np.diag([1.0, 2.0]), np.array([[0.0, 1.0], [1.0, 0.0]])])
    key = jax.random.PRNGKey(0)

    fixed = perturb_until_regular(np.eye(3), mats, key)

    assert orthonormality_error(fixed) < 1e-12
    assert not np.allclose(fixed, np.eye(3))
    solve_lambda(fixed[:2], mats)

    regular = np.asarray(np.linalg.qr(np.arange(1.0, 10.0).reshape(3, 3) + np.eye(3))[0])
    assert np.array_equal(perturb_until_regular(regular, mats, key), regular)


def test_minimize_s_perturbs_degenerate_q_between_sweeps(monkeypatch, caplog):
    mats = commuting_family(np.random.default_rng(2), 2, 2)
    monkeypatch.setattr(search, "_initial_factor", lambda arr, big_n, seed, start: np.eye(big_n))

    with caplog.at_level(logging.DEBUG, logger=search.__name__):
        c = minimize_s(mats, 3, opts=MinimizeOptions(max_sweeps=2, chunk=1, multistarts=1))

    assert any("at sweep 0" in r.getMessage() for r in caplog.records)
    assert np.all(np.isfinite(c.history))
    assert orthonormality_error(c.q_full) < 1e-10


def test_minimize_s_on_commuting_matrices():
    mats = commuting_family(np.random.default_rng(0), 4, 2)
    c = minimize_s(mats, 4, opts=MinimizeOptions(max_sweeps=200, multistarts=2, seed=1))

    assert c.converged
    assert c.objective <= 1e-12 * s_scale(mats)
    assert orthonormality_error(c.q_full) < 1e-10
    assert c.commutator_residual < 1e-5
    assert c.seed == 1
    assert c.method == "minimize_s"


@pytest.mark.slow
def test_minimize_s_finds_planted_extension():
    fixture = planted(3, 4, d=2, seed=0)
    c = minimize_s(fixture.mats, 4, opts=MinimizeOptions(max_sweeps=3000, multistarts=8))

    assert c.converged
    assert c.objective <= 1e-12 * s_scale(fixture.mats)
    history = np.asarray(c.history)
    assert np.all(np.diff(history) <= 1e-12 * s_scale(fixture.mats))


@pytest.mark.slow
def test_minimize_s_with_zero_block_is_monotone():
    fixture = planted(3, 5, d=2, seed=1)
    c = minimize_s(fixture.mats, 5, ZeroBlockSpec(1), MinimizeOptions(max_sweeps=200, multistarts=1))
    history = np.asarray(c.history)
    assert len(history) >= 1
    assert np.all(np.diff(history) <= 1e-12 * s_scale(fixture.mats))
    assert c.zero_block_rows == 1


@pytest.mark.slow
def test_minimize_s_recovers_planted_one_row_extensions():
    recovered = 0
    for seed in range(20):
        fixture = planted(6, 7, d=2, seed=seed)
        tol = 1e-10 * s_scale(fixture.mats)
        c = minimize_s(fixture.mats, 7, opts=MinimizeOptions(max_sweeps=5000, multistarts=16, s_tol=tol, seed=seed))

        history = np.asarray(c.history)
        assert np.all(np.diff(history) <= 1e-12 * s_scale(fixture.mats))
        if c.objective + c.compat_penalty < tol:
            recovered += 1

    assert recovered >= 18
