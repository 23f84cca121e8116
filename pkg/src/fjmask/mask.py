"""Decaying-pseudonoise mask on the influence structure.

At step ``t`` each agent draws standard normal noise on its own influence
elements, forms the decoy weights ``W + exp(-phi t) V_t`` and pools opinions
with them. The decoy rows are not renormalised and may go negative.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._validation import as_entropy, check_positive
from .dynamics import FjSystem, Trajectory, is_stable
from .exceptions import ParameterError, UnstableSystemError
from .network import Network


@dataclass(frozen=True)
class MaskConfig:
    phi: float
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "phi", check_positive("phi", self.phi))
        as_entropy(self.seed)


class NoiseSource:
    """Noise streams for a network, one independent generator per agent.

    Agent ``i`` owns the stream seeded by ``(seed, i)`` and consumes it in
    timestep order, so the noise does not depend on how agents are scheduled.
    Draws are buffered ``chunk`` timesteps at a time; numpy fills arrays from
    the same bit stream element by element, so buffering does not change
    the values.
    """

    def __init__(self, net: Network, seed: int, chunk: int = 64):
        self.net = net
        self.rows, self.cols = net.edge_index()
        entropy = as_entropy(seed)
        self._gens = [np.random.default_rng([entropy, i]) for i in range(net.n)]
        self._chunk = chunk
        self._buf = np.empty((0, self.rows.size))
        self._pos = 0

    def next_edges(self) -> np.ndarray:
        """Noise values on every influence element, in ``edge_index`` order."""
        if self._pos >= self._buf.shape[0]:
            blocks = [
                g.standard_normal((self._chunk, d)) for g, d in zip(self._gens, self.net.degrees)
            ]
            self._buf = np.hstack(blocks) if blocks else np.empty((self._chunk, 0))
            self._pos = 0
        out = self._buf[self._pos]
        self._pos += 1
        return out

    def to_matrix(self, values: np.ndarray) -> np.ndarray:
        V = np.zeros((self.net.n, self.net.n))
        V[self.rows, self.cols] = values
        return V


def draw_noise(net: Network, rng) -> np.ndarray:
    """One noise matrix: N(0, 1) on the influence elements, zero elsewhere.

    ``rng`` is either a :class:`NoiseSource` for ``net`` (per-agent streams)
    or a plain ``numpy.random.Generator`` consumed row by row.
    """
    if isinstance(rng, NoiseSource):
        if rng.net != net:
            raise ParameterError("noise source belongs to a different network")
        return rng.to_matrix(rng.next_edges())
    rows, cols = net.edge_index()
    V = np.zeros((net.n, net.n))
    V[rows, cols] = rng.standard_normal(rows.size)
    return V


def decoy_weights(W, phi: float, t: int, V) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    V = np.asarray(V, dtype=float)
    if W.shape != V.shape:
        raise ParameterError(f"W {W.shape} and V {V.shape} differ in shape")
    return W + np.exp(-phi * t) * V


@dataclass(frozen=True)
class MaskedRun:
    """Result of a masked simulation.

    ``noise_edges[t]`` holds the values of ``V_t`` on the influence elements
    (``net.edge_index()`` order). It is ground truth for testing only and is
    never part of what an eavesdropper sees.
    """

    trajectory: Trajectory
    net: Network
    W: np.ndarray
    phi: float
    noise_edges: np.ndarray | None
    decoy_log: list | None = None

    def noise_matrix(self, t: int) -> np.ndarray:
        if self.noise_edges is None:
            raise ParameterError("run was made without noise logging")
        rows, cols = self.net.edge_index()
        V = np.zeros((self.net.n, self.net.n))
        V[rows, cols] = self.noise_edges[t]
        return V

    @property
    def noise_log(self) -> list:
        if self.noise_edges is None:
            return []
        return [self.noise_matrix(t) for t in range(self.noise_edges.shape[0])]

    def decoy(self, t: int) -> np.ndarray:
        return decoy_weights(self.W, self.phi, t, self.noise_matrix(t))

    def noise_log_dict(self, seed=None) -> dict:
        rows, cols = self.net.edge_index()
        return {
            "phi": self.phi,
            "seed": seed,
            "rows": rows.tolist(),
            "cols": cols.tolist(),
            "values": [] if self.noise_edges is None else self.noise_edges.tolist(),
        }

    def write_noise_log(self, path, seed=None) -> None:
        Path(path).write_text(json.dumps(self.noise_log_dict(seed)))


def simulate_masked(
    sys: FjSystem,
    mask: MaskConfig,
    eps: float,
    t_max: int,
    *,
    log_noise: bool = True,
    log_decoys: bool = False,
    zero_noise: bool = False,
) -> MaskedRun:
    """Run the masked recurrence ``x[t+1] = diag(lam) W_t x[t] + (1 - lam) u``.

    Uses the same stopping rule as :func:`fjmask.dynamics.simulate`. Runs
    that hit ``t_max`` come back with ``converged=False``; a non-finite state
    raises :class:`UnstableSystemError`. ``zero_noise`` forces ``V_t = 0``.
    """
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    if t_max < 1:
        raise ParameterError(f"t_max must be at least 1, got {t_max}")
    if not is_stable(sys):
        raise UnstableSystemError("masking requires a stable system")
    phi = mask.phi
    net = sys.net
    source = NoiseSource(net, mask.seed)
    rows, cols = source.rows, source.cols
    lam, W, bias, n = sys.lam, sys.W, sys.stubborn_bias, sys.n
    x = sys.x0
    states = [x]
    noise = []
    decoys = [] if log_decoys else None
    converged = False
    for t in range(t_max):
        v = source.next_edges()
        if zero_noise:
            v = np.zeros_like(v)
        if log_noise:
            noise.append(v)
        if log_decoys:
            decoys.append(decoy_weights(W, phi, t, source.to_matrix(v)))
        pooled = W @ x + np.exp(-phi * t) * np.bincount(rows, weights=v * x[cols], minlength=n)
        nxt = lam * pooled + bias
        if not np.all(np.isfinite(nxt)):
            raise UnstableSystemError(f"masked trajectory became non-finite at t={t + 1}")
        states.append(nxt)
        if np.max(np.abs(nxt - x)) < eps:
            converged = True
            break
        x = nxt
    traj = Trajectory(np.array(states), converged)
    noise_arr = np.array(noise).reshape(len(noise), rows.size) if log_noise else None
    return MaskedRun(traj, net, W, phi, noise_arr, decoys)
