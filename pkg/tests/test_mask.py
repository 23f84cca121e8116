import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_system
from fjmask import (
    FjSystem,
    MaskConfig,
    Network,
    NoiseSource,
    ParameterError,
    UnstableSystemError,
    limit_opinions,
    random_regular_network,
    simulate,
    simulate_masked,
)
from fjmask.mask import decoy_weights, draw_noise


def test_empty_network_noise_is_zero():
    net = Network.from_lists([[], [], []])
    np.testing.assert_array_equal(draw_noise(net, NoiseSource(net, 1)), np.zeros((3, 3)))
    np.testing.assert_array_equal(draw_noise(net, np.random.default_rng(1)), np.zeros((3, 3)))


def test_noise_stream_determinism():
    net = random_regular_network(10, 3, 0)
    src = NoiseSource(net, 7)
    a, b = draw_noise(net, src), draw_noise(net, src)
    assert not np.array_equal(a, b)
    again = NoiseSource(net, 7)
    np.testing.assert_array_equal(draw_noise(net, again), a)
    np.testing.assert_array_equal(draw_noise(net, again), b)


def test_noise_is_local():
    net = random_regular_network(12, 4, 1)
    src = NoiseSource(net, 3)
    for _ in range(5):
        V = draw_noise(net, src)
        assert np.all(V[~net.adjacency()] == 0)
        assert np.all(V[net.adjacency()] != 0)


def test_noise_rows_are_independent_of_other_agents():
    # agent 0's row depends only on (seed, agent 0), not on the rest of the graph
    a = Network.from_lists([[0, 1], [0], [1, 2]])
    b = Network.from_lists([[0, 1], [0, 1], [0, 1, 2]])
    va = draw_noise(a, NoiseSource(a, 11))
    vb = draw_noise(b, NoiseSource(b, 11))
    np.testing.assert_array_equal(va[0], vb[0])


@pytest.mark.parametrize("chunk", [1, 3, 64, 200])
def test_chunking_does_not_change_values(chunk):
    net = random_regular_network(6, 2, 4)
    ref = NoiseSource(net, 5, chunk=1)
    src = NoiseSource(net, 5, chunk=chunk)
    for _ in range(130):
        np.testing.assert_array_equal(src.next_edges(), ref.next_edges())


def test_noise_moments():
    net = Network.from_lists([[0]])
    src = NoiseSource(net, 2024)
    v = np.array([src.next_edges()[0] for _ in range(10_000)])
    assert abs(v.mean()) < 0.05
    assert abs(v.var() - 1) < 0.05


def test_decoy_weights():
    W = np.array([[0.5, 0.5], [0.3, 0.7]])
    np.testing.assert_array_equal(decoy_weights(W, 1.0, 3, np.zeros((2, 2))), W)
    V = np.zeros((2, 2))
    V[1, 0] = -0.25
    out = decoy_weights(W, 1.0, 0, V)
    assert out[1, 0] == 0.3 - 0.25
    with pytest.raises(ParameterError):
        decoy_weights(W, 1.0, 0, np.zeros((3, 3)))


def test_decay_envelope():
    rng = np.random.default_rng(0)
    W = rng.random((4, 4))
    V = rng.uniform(-3, 3, (4, 4))
    V.flat[np.argmax(np.abs(V))] = 3.0
    D = decoy_weights(W, 1.0, 10, V) - W
    assert np.max(np.abs(D)) == pytest.approx(3 * np.exp(-10), rel=1e-14)
    assert np.max(np.abs(D)) < 1.4e-4


def test_mask_config_validation():
    with pytest.raises(ParameterError):
        MaskConfig(0.0)
    with pytest.raises(ParameterError):
        MaskConfig(-1.0)


def test_decoy_log_matches_noise_log(ex1):
    run = simulate_masked(ex1, MaskConfig(0.5, 3), 1e-8, 500, log_decoys=True)
    assert len(run.decoy_log) == len(run.noise_log) == run.trajectory.T
    for t, (D, V) in enumerate(zip(run.decoy_log, run.noise_log)):
        np.testing.assert_array_equal(D, ex1.W + np.exp(-0.5 * t) * V)
        np.testing.assert_array_equal(run.decoy(t), D)


def test_masked_recurrence_replays_from_noise_log(ex1):
    run = simulate_masked(ex1, MaskConfig(0.3, 1), 1e-8, 1000)
    X = run.trajectory.states
    for t in range(run.trajectory.T):
        expected = ex1.lam * (run.decoy(t) @ X[t]) + ex1.stubborn_bias
        np.testing.assert_allclose(X[t + 1], expected, rtol=0, atol=1e-14)


def test_fast_decay_follows_unmasked_dynamics_after_first_step(ex1):
    run = simulate_masked(ex1, MaskConfig(50.0, 0), 1e-10, 1000)
    X = run.trajectory.states
    restart = simulate(ex1.with_x0(X[1]), 1e-10, 1000).states
    m = min(len(restart), len(X) - 1)
    assert np.max(np.abs(X[1 : 1 + m] - restart[:m])) < 1e-6
    assert np.max(np.abs(run.trajectory.final - limit_opinions(ex1))) < 1e-6


def test_zero_noise_matches_unmasked(ex1):
    run = simulate_masked(ex1, MaskConfig(0.3, 9), 1e-6, 1000, zero_noise=True)
    np.testing.assert_array_equal(run.trajectory.states, simulate(ex1, 1e-6, 1000).states)


@pytest.mark.parametrize("seed", range(100))
def test_masked_limit_within_ten_eps(seed):
    sys = make_system(30, 5, seed, 0.0, 0.9)
    eps = 1e-6
    run = simulate_masked(sys, MaskConfig(0.3, seed), eps, 100_000, log_noise=False)
    assert run.trajectory.converged
    assert np.max(np.abs(run.trajectory.final - limit_opinions(sys))) < 10 * eps


@given(seed=st.integers(0, 2**32), phi=st.floats(0.1, 5.0))
def test_limit_preservation(seed, phi):
    sys = make_system(20, 4, seed, 0.0, 0.9)
    eps = 1e-4
    run = simulate_masked(sys, MaskConfig(phi, seed), eps, 100_000, log_noise=False)
    assert np.max(np.abs(run.trajectory.final - limit_opinions(sys))) < max(10 * eps, 1e-3)


def test_masking_unstable_system_rejected():
    sys = FjSystem(Network.complete(2), [[0.5, 0.5], [0.5, 0.5]], [1, 1], [0, 1], [0, 1])
    with pytest.raises(UnstableSystemError):
        simulate_masked(sys, MaskConfig(1.0), 1e-4, 10)


def test_masked_run_capped_reports_non_convergence(ex1):
    run = simulate_masked(ex1, MaskConfig(0.01, 0), 1e-12, 5)
    assert not run.trajectory.converged and run.trajectory.T == 5


def test_noise_log_export(tmp_path, ex1):
    run = simulate_masked(ex1, MaskConfig(1.0, 4), 1e-6, 100)
    path = tmp_path / "noise.json"
    run.write_noise_log(path, seed=4)
    doc = json.loads(path.read_text())
    assert doc["phi"] == 1.0 and doc["seed"] == 4
    assert len(doc["values"]) == run.trajectory.T
    assert len(doc["rows"]) == len(doc["cols"]) == 9
