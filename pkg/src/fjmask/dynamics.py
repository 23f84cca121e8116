"""Friedkin-Johnsen opinion dynamics ``x[t+1] = diag(lam) W x[t] + (1 - lam) u``."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ParameterError, UnstableSystemError
from .network import Network, reaches_any

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FjSystem:
    """A Friedkin-Johnsen system on a fixed network.

    ``W`` must be row stochastic and adapted to ``net``; zero weights on
    existing edges are allowed.
    """

    net: Network
    W: np.ndarray
    lam: np.ndarray
    u: np.ndarray
    x0: np.ndarray
    _lam_w: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.net.n
        W = np.array(self.W, dtype=float)
        lam = np.array(self.lam, dtype=float).reshape(-1)
        u = np.array(self.u, dtype=float).reshape(-1)
        x0 = np.array(self.x0, dtype=float).reshape(-1)
        if W.shape != (n, n):
            raise ParameterError(f"W must be {n}x{n}, got {W.shape}")
        for name, v in (("lambda", lam), ("u", u), ("x0", x0)):
            if v.shape != (n,):
                raise ParameterError(f"{name} must have length {n}, got {v.shape[0]}")
            if not np.all(np.isfinite(v)):
                raise ParameterError(f"{name} contains non-finite values")
        if not np.all(np.isfinite(W)) or np.any(W < 0):
            raise ParameterError("W entries must be finite and non-negative")
        if np.any(W[~self.net.adjacency()] != 0):
            raise ParameterError("W has weight outside the network's influence elements")
        if np.max(np.abs(W.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
            raise ParameterError("rows of W must sum to 1")
        if np.any(lam < 0) or np.any(lam > 1):
            raise ParameterError("susceptibilities must lie in [0, 1]")
        for name, v in (("W", W), ("lam", lam), ("u", u), ("x0", x0)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        lam_w = lam[:, None] * W
        lam_w.setflags(write=False)
        object.__setattr__(self, "_lam_w", lam_w)

    @property
    def n(self) -> int:
        return self.net.n

    @property
    def lam_w(self) -> np.ndarray:
        """The product ``diag(lam) @ W``."""
        return self._lam_w

    @property
    def stubborn_bias(self) -> np.ndarray:
        """``(I - diag(lam)) u``, the constant input of the recurrence."""
        return (1.0 - self.lam) * self.u

    def with_x0(self, x0) -> "FjSystem":
        return FjSystem(self.net, self.W, self.lam, self.u, x0)

    def to_dict(self, redact: bool = False) -> dict:
        doc = {"network": self.net.to_dict()}
        if not redact:
            doc["W"] = self.W.tolist()
        doc["lambda"] = self.lam.tolist()
        doc["u"] = self.u.tolist()
        doc["x0"] = self.x0.tolist()
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "FjSystem":
        try:
            return cls(
                Network.from_dict(doc["network"]),
                np.asarray(doc["W"], dtype=float),
                np.asarray(doc["lambda"], dtype=float),
                np.asarray(doc["u"], dtype=float),
                np.asarray(doc["x0"], dtype=float),
            )
        except KeyError as exc:
            raise ParameterError(f"system document is missing field {exc}") from exc


def example1_system() -> FjSystem:
    """Three-agent worked example with ``x0 = u = [1, 2, 3]``."""
    W = np.array([[0.0, 0.5, 0.5], [0.2, 0.2, 0.6], [0.5, 0.0, 0.5]])
    u = np.array([1.0, 2.0, 3.0])
    return FjSystem(Network.complete(3), W, np.array([0.4, 0.5, 0.6]), u, u.copy())


@dataclass(frozen=True)
class Trajectory:
    """Opinion states ``x_0 ... x_T`` stacked row-wise, shape ``(T + 1, n)``."""

    states: np.ndarray
    converged: bool

    @property
    def T(self) -> int:
        return self.states.shape[0] - 1

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self) -> str:
        return trajectory_to_csv(self.states)

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv())


def trajectory_to_csv(states: np.ndarray) -> str:
    states = np.atleast_2d(states)
    buf = io.StringIO()
    n = states.shape[1]
    buf.write(",".join(["t"] + [f"x{i}" for i in range(n)]) + "\n")
    for t, row in enumerate(states):
        buf.write(",".join([str(t)] + [format(v, ".17g") for v in row]) + "\n")
    return buf.getvalue()


def read_trajectory_csv(path) -> np.ndarray:
    """Parse a trajectory CSV back into a ``(T + 1, n)`` array."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ParameterError(f"{path}: trajectory CSV has no data rows")
    header = rows[0]
    if not header or header[0] != "t":
        raise ParameterError(f"{path}: first column must be 't'")
    try:
        states = np.array([[float(v) for v in r[1:]] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ParameterError(f"{path}: malformed value ({exc})") from exc
    if states.shape[1] != len(header) - 1:
        raise ParameterError(f"{path}: row width does not match header")
    return states


def step(sys: FjSystem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (sys.n,):
        raise ParameterError(f"state must have length {sys.n}, got shape {x.shape}")
    return sys.lam * (sys.W @ x) + sys.stubborn_bias


def simulate(sys: FjSystem, eps: float, t_max: int) -> Trajectory:
    """Iterate until the largest per-agent change drops below ``eps``.

    Stops after at most ``t_max`` steps; ``converged`` records which
    condition ended the run.
    """
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    if t_max < 1:
        raise ParameterError(f"t_max must be at least 1, got {t_max}")
    lam, W, bias = sys.lam, sys.W, sys.stubborn_bias
    x = sys.x0
    states = [x]
    converged = False
    for _ in range(t_max):
        nxt = lam * (W @ x) + bias
        if not np.all(np.isfinite(nxt)):
            raise UnstableSystemError("trajectory became non-finite")
        states.append(nxt)
        if np.max(np.abs(nxt - x)) < eps:
            converged = True
            break
        x = nxt
    return Trajectory(np.array(states), converged)


def spectral_radius(sys: FjSystem) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(sys.lam_w))))


def is_stable(sys: FjSystem) -> bool:
    """Graph test for Schur stability of ``diag(lam) W``.

    Stable iff every agent is non-oblivious itself or is indirectly influenced,
    through edges of positive weight, by a non-oblivious agent.
    Agrees with ``spectral_radius(sys) < 1``.
    """
    non_oblivious = sys.lam < 1.0
    return bool(np.all(reaches_any(sys.W > 0, non_oblivious)))


def limit_opinions(sys: FjSystem) -> np.ndarray:
    """Fixed point solving ``(I - diag(lam) W) x = (I - diag(lam)) u``."""
    if not is_stable(sys):
        raise UnstableSystemError("system is not Schur stable; no finite limit")
    return np.linalg.solve(np.eye(sys.n) - sys.lam_w, sys.stubborn_bias)


def susceptibility_bounds(midpoint: float, width: float = 0.1) -> tuple[float, float]:
    """Interval of given width centred on ``midpoint``, clipped to [0, 1]."""
    return max(0.0, midpoint - width / 2), min(1.0, midpoint + width / 2)


def random_fj_system(
    net: Network, lambda_lo: float = 0.0, lambda_hi: float = 1.0, seed=None, x0=None
) -> FjSystem:
    """Draw a random system on ``net``.

    Influence rows are uniform(0, 1) on the influence elements, normalised to
    sum to one. Susceptibilities are uniform on ``[lambda_lo, lambda_hi]`` and
    biases uniform on [0, 1]. The initial opinions default to the biases.
    """
    if not 0.0 <= lambda_lo <= lambda_hi <= 1.0:
        raise ParameterError(
            f"need 0 <= lambda_lo <= lambda_hi <= 1, got [{lambda_lo}, {lambda_hi}]"
        )
    if np.any(net.degrees == 0):
        raise ParameterError("every agent needs at least one in-neighbour")
    rng = np.random.default_rng(seed)
    W = np.zeros((net.n, net.n))
    for i, nbrs in enumerate(net.in_neighbors):
        r = rng.uniform(0.0, 1.0, size=len(nbrs))
        W[i, list(nbrs)] = r / r.sum()
    lam = rng.uniform(lambda_lo, lambda_hi, size=net.n)
    u = rng.uniform(0.0, 1.0, size=net.n)
    return FjSystem(net, W, lam, u, u.copy() if x0 is None else x0)


def save_system(sys: FjSystem, path, redact: bool = False) -> None:
    Path(path).write_text(json.dumps(sys.to_dict(redact=redact)))


def load_system(path) -> FjSystem:
    return FjSystem.from_dict(json.loads(Path(path).read_text()))
