import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import EXAMPLE1_TABLE, cycle2, make_system
from fjmask import (
    FjSystem,
    Network,
    ParameterError,
    UnstableSystemError,
    is_stable,
    limit_opinions,
    load_system,
    random_fj_system,
    random_regular_network,
    save_system,
    simulate,
    spectral_radius,
)
from fjmask.dynamics import read_trajectory_csv, step, susceptibility_bounds


def test_step_example1(ex1):
    np.testing.assert_allclose(step(ex1, [1, 2, 3]), [1.6, 2.2, 2.4], atol=1e-15)
    np.testing.assert_allclose(step(ex1, [1.6, 2.2, 2.4]), [1.52, 2.1, 2.4], atol=1e-15)


def test_step_fully_stubborn_returns_bias():
    sys = make_system(8, 3, 0, 0.0, 0.0)
    np.testing.assert_array_equal(step(sys, np.arange(8.0)), sys.u)


def test_step_dimension_mismatch(ex1):
    with pytest.raises(ParameterError):
        step(ex1, [1.0, 2.0])


def test_example1_table(ex1):
    traj = simulate(ex1, 1e-12, 5)
    assert traj.T == 5 and not traj.converged
    np.testing.assert_array_equal(traj.states[0], [1, 2, 3])
    np.testing.assert_allclose(traj.states[1:].T, EXAMPLE1_TABLE, atol=1e-12)


def test_example1_reaches_limit(ex1):
    traj = simulate(ex1, 1e-4, 1000)
    assert traj.converged
    assert np.max(np.abs(traj.final - limit_opinions(ex1))) < 1e-3


def test_stubborn_system_converges_in_two_steps():
    sys = make_system(5, 2, 3, 0.0, 0.0).with_x0(np.full(5, 7.0))
    traj = simulate(sys, 1e-9, 100)
    assert traj.converged and traj.T == 2
    np.testing.assert_array_equal(traj.states[1], sys.u)
    np.testing.assert_array_equal(traj.states[2], sys.u)


@pytest.mark.parametrize("eps, t_max", [(0.0, 10), (-1.0, 10), (1e-3, 0)])
def test_simulate_rejects_bad_arguments(ex1, eps, t_max):
    with pytest.raises(ParameterError):
        simulate(ex1, eps, t_max)


def test_non_finite_state_raises(ex1):
    # a valid system stays in the convex hull of x0 and u, so the guard is
    # exercised by planting a non-finite start state
    object.__setattr__(ex1, "x0", np.array([np.inf, 1.0, 1.0]))
    with np.errstate(invalid="ignore", over="ignore"):
        with pytest.raises(UnstableSystemError):
            simulate(ex1, 1e-6, 10)


def test_limit_fully_stubborn_is_bias():
    sys = make_system(6, 2, 1, 0.0, 0.0)
    np.testing.assert_array_equal(limit_opinions(sys), sys.u)


def test_limit_single_agent():
    sys = FjSystem(Network.complete(1), [[1.0]], [0.5], [2.0], [0.0])
    np.testing.assert_allclose(limit_opinions(sys), [2.0])


def test_limit_fixed_point_residual(ex1):
    x = limit_opinions(ex1)
    assert np.max(np.abs((np.eye(3) - ex1.lam_w) @ x - ex1.stubborn_bias)) < 1e-12


def test_limit_of_unstable_system_raises():
    sys = FjSystem(Network.complete(2), [[0.5, 0.5], [0.5, 0.5]], [1, 1], [0, 1], [0, 1])
    with pytest.raises(UnstableSystemError):
        limit_opinions(sys)


def test_stability_examples(ex1):
    assert is_stable(ex1)
    oblivious = FjSystem(Network.complete(3), np.full((3, 3), 1 / 3), [1, 1, 1], [0, 1, 2], [0, 1, 2])
    assert not is_stable(oblivious)
    assert spectral_radius(oblivious) == pytest.approx(1.0)
    two = FjSystem(cycle2(), [[0, 1], [1, 0]], [1.0, 0.5], [0, 1], [0, 1])
    assert is_stable(two)
    assert spectral_radius(two) < 1


@given(seed=st.integers(0, 2**32), n=st.integers(1, 8), data=st.data())
def test_graph_stability_test_matches_spectral_radius(seed, n, data):
    d = data.draw(st.integers(1, n))
    net = random_regular_network(n, d, seed)
    rng = np.random.default_rng(seed)
    sys = random_fj_system(net, 0.0, 1.0, seed)
    lam = np.where(rng.random(n) < 0.6, 1.0, sys.lam)
    W = sys.W.copy()
    W[rng.random((n, n)) < 0.2] = 0.0
    W = np.where(W.sum(axis=1, keepdims=True) > 0, W, sys.W)
    W = W / W.sum(axis=1, keepdims=True)
    sys = FjSystem(net, W, lam, sys.u, sys.x0)
    assert is_stable(sys) == (spectral_radius(sys) < 1 - 1e-9)


def test_random_system_degenerate_bounds():
    sys = make_system(20, 4, 9, 0.3, 0.3)
    np.testing.assert_array_equal(sys.lam, 0.3)


@pytest.mark.parametrize("seed", range(100))
def test_random_systems_stable_when_lambda_below_one(seed):
    sys = make_system(100, 10, seed, 0.0, 0.999)
    assert np.max(np.abs(sys.W.sum(axis=1) - 1)) < 1e-12
    assert is_stable(sys)
    assert spectral_radius(sys) < 1


def test_random_system_is_seeded_and_adapted():
    net = random_regular_network(30, 4, 3)
    a, b = random_fj_system(net, seed=5), random_fj_system(net, seed=5)
    np.testing.assert_array_equal(a.W, b.W)
    np.testing.assert_array_equal(a.x0, a.u)
    assert np.all(a.W[~net.adjacency()] == 0)


@pytest.mark.parametrize(
    "W, lam",
    [
        ([[0.5, 0.6], [0.5, 0.5]], [0.5, 0.5]),
        ([[1.5, -0.5], [0.5, 0.5]], [0.5, 0.5]),
        ([[0.5, 0.5], [0.5, 0.5]], [1.5, 0.5]),
    ],
)
def test_invalid_systems_rejected(W, lam):
    with pytest.raises(ParameterError):
        FjSystem(Network.complete(2), W, lam, [0, 1], [0, 1])


def test_weight_outside_graph_rejected():
    with pytest.raises(ParameterError):
        FjSystem(cycle2(), [[0.5, 0.5], [1, 0]], [0.5, 0.5], [0, 1], [0, 1])


def test_system_arrays_are_read_only(ex1):
    with pytest.raises(ValueError):
        ex1.W[0, 0] = 1.0


@given(seed=st.integers(0, 2**32))
def test_limit_consistency(seed):
    sys = make_system(12, 3, seed, 0.0, 0.95)
    traj = simulate(sys, 1e-10, 100_000)
    assert traj.converged
    assert np.max(np.abs(traj.final - limit_opinions(sys))) < 1e-6


@given(seed=st.integers(0, 2**32))
def test_convexity_bound(seed):
    sys = make_system(10, 3, seed)
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, 10)
    y = step(sys, x)
    assert np.all(y >= -1e-15) and np.all(y <= 1 + 1e-15)


@given(seed=st.integers(0, 2**32))
def test_monotone_contraction(seed):
    sys = make_system(15, 4, seed, 0.0, 0.9)
    rho = float(sys.lam.max())
    x_inf = limit_opinions(sys)
    traj = simulate(sys.with_x0(np.random.default_rng(seed).normal(size=15)), 1e-12, 200)
    gaps = np.max(np.abs(traj.states - x_inf), axis=1)
    assert np.all(gaps[1:] <= rho * gaps[:-1] + 1e-13)


def test_trajectory_csv_round_trip(tmp_path, ex1):
    traj = simulate(ex1, 1e-12, 5)
    path = tmp_path / "t.csv"
    traj.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x0,x1,x2"
    assert lines[1].startswith("0,1,2,3")
    np.testing.assert_array_equal(read_trajectory_csv(path), traj.states)


def test_system_json_round_trip(tmp_path, ex1):
    save_system(ex1, tmp_path / "s.json")
    back = load_system(tmp_path / "s.json")
    np.testing.assert_array_equal(back.W, ex1.W)
    assert list(ex1.to_dict()) == ["network", "W", "lambda", "u", "x0"]
    assert "W" not in ex1.to_dict(redact=True)


def test_susceptibility_bounds():
    assert susceptibility_bounds(0.5) == pytest.approx((0.45, 0.55))
    assert susceptibility_bounds(0.05) == pytest.approx((0.0, 0.1))
    assert susceptibility_bounds(0.95) == pytest.approx((0.9, 1.0))


def test_example1_runtime(ex1):
    start = time.perf_counter()
    simulate(ex1, 1e-12, 5)
    assert time.perf_counter() - start < 1e-3 or min(
        _timed(lambda: simulate(ex1, 1e-12, 5)) for _ in range(5)
    ) < 1e-3


def _timed(fn):
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start
