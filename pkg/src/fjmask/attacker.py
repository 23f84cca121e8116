"""The eavesdropper: exact identification of unmasked systems and maximum
likelihood estimation of one agent's influence row under the mask.

The eavesdropper knows the graph, the biases, the susceptibilities and the
broadcast opinions ``x_0 ... x_T``. It never sees ``W`` or the noise.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive, check_states, check_vector
from .dynamics import FjSystem, Trajectory
from .exceptions import (
    InfeasibleError,
    InsufficientExcitationError,
    ParameterError,
    UnobservableAgentError,
)
from .metrics import (
    InfoMatrix,
    ScaledTriangularFactor,
    estimate_error,
    information_matrix,
    nullspace_basis,
)
from .network import Network

COND_MAX = 1e12
LAMBDA_ZERO_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class KnowledgeSet:
    """What the eavesdropper observes: graph, biases, susceptibilities, opinions."""

    net: Network
    u: np.ndarray
    lam: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        n = self.net.n
        object.__setattr__(self, "u", check_vector("u", self.u, n))
        object.__setattr__(self, "lam", check_vector("lambda", self.lam, n))
        object.__setattr__(self, "states", check_states(self.states, n))

    @property
    def T(self) -> int:
        return self.states.shape[0] - 1

    @classmethod
    def observe(cls, sys: FjSystem, trajectory: Trajectory | np.ndarray) -> "KnowledgeSet":
        """Public view of a run: drops ``W`` and anything mask related."""
        states = trajectory.states if isinstance(trajectory, Trajectory) else trajectory
        return cls(sys.net, sys.u, sys.lam, states)


@dataclass(frozen=True)
class Observation:
    """One linear constraint ``A . w_t = b`` on the target's decoy row at time ``t``."""

    A: np.ndarray
    b: float
    t: int


def neighbor_opinions(K: KnowledgeSet, i: int) -> np.ndarray:
    """Rows ``A_t`` (t = 0 .. T-1) of the opinions of agent ``i``'s neighbours.

    Needs no susceptibility, so it works even for fully stubborn targets.
    """
    if not 0 <= i < K.net.n:
        raise ParameterError(f"agent index {i} outside [0, {K.net.n})")
    return K.states[:-1, list(K.net.in_neighbors[i])]


def build_observations(K: KnowledgeSet, i: int) -> list[Observation]:
    """Constraints ``A_t w_t = b_t`` with ``b_t = (x^i_{t+1} - (1 - lam^i) u^i) / lam^i``."""
    A = neighbor_opinions(K, i)
    lam_i = K.lam[i]
    if lam_i <= 0:
        raise UnobservableAgentError(
            f"agent {i} has zero susceptibility; its influence row never enters the dynamics"
        )
    b = (K.states[1:, i] - (1.0 - lam_i) * K.u[i]) / lam_i
    return [Observation(A[t].copy(), float(b[t]), t) for t in range(A.shape[0])]


def regress_lam_w(states, cond_max: float = COND_MAX) -> np.ndarray:
    """Least-squares ``diag(lam) W`` from one unmasked trajectory.

    Successive differences obey ``dx_{t+1} = diag(lam) W dx_t``, which
    removes the bias term; every observed pair of differences is used.
    """
    states = check_states(states)
    n = states.shape[1]
    if states.shape[0] < n + 2:
        raise InsufficientExcitationError(
            f"need at least n + 2 = {n + 2} successive states, got {states.shape[0]}"
        )
    diffs = np.diff(states, axis=0)
    before, after = diffs[:-1], diffs[1:]
    sv = np.linalg.svd(before, compute_uv=False)
    if sv[0] == 0 or sv[-1] == 0 or sv[0] / sv[-1] > cond_max:
        raise InsufficientExcitationError(
            "opinion differences are (numerically) linearly dependent; "
            "the trajectory does not excite the system"
        )
    return np.linalg.lstsq(before, after, rcond=None)[0].T


def split_lam_w(lam_w: np.ndarray):
    """Split each row into its 1-norm (susceptibility) and the normalised influence row.

    Rows whose norm is indistinguishable from zero come back as NaN.
    """
    lam_hat = np.abs(lam_w).sum(axis=1)
    W_hat = np.full_like(lam_w, np.nan)
    ok = lam_hat > LAMBDA_ZERO_TOL
    W_hat[ok] = lam_w[ok] / lam_hat[ok, None]
    if not np.all(ok):
        warnings.warn(
            f"influence rows of agents {np.flatnonzero(~ok).tolist()} are unidentifiable "
            "(zero susceptibility)",
            RuntimeWarning,
            stacklevel=3,
        )
    return lam_hat, W_hat


def identify_unmasked(K: KnowledgeSet, cond_max: float = COND_MAX):
    """Recover ``(lambda, W)`` exactly from an unmasked trajectory."""
    return split_lam_w(regress_lam_w(K.states, cond_max))


@dataclass(frozen=True)
class EstimateReport:
    """Maximum likelihood estimate of one influence row and its quality.

    ``objective_trace`` holds ``log`` of the weighted cost
    ``sum_t e^{2 phi t} |w_t - w|^2 / 2`` after each active-set iteration;
    it never decreases. ``fixed`` lists the (row-local) entries held at zero.
    """

    w_hat: np.ndarray
    info: InfoMatrix | None
    cov: np.ndarray
    estimate_error: float
    fully_determined: bool = False
    fixed: tuple[int, ...] = ()
    objective_trace: tuple[float, ...] = field(default=())
    agent: int | None = None

    def info_eigenvalues(self) -> np.ndarray:
        return np.zeros(0) if self.info is None else self.info.eigenvalues()

    def to_dict(self) -> dict:
        def num(v):
            v = float(v)
            return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")

        return {
            "agent": self.agent,
            "w_hat": [float(v) for v in self.w_hat],
            "estimate_error": num(self.estimate_error),
            "info_eigenvalues": [num(v) for v in self.info_eigenvalues()],
        }


def _log_cost(A, b, norms, logw, w):
    res = np.abs(b - A @ w) / norms
    with np.errstate(divide="ignore"):
        terms = 2.0 * logw + 2.0 * np.log(res)
    if np.all(terms == -np.inf):
        return -math.inf
    return float(np.logaddexp.reduce(terms)) - math.log(2.0)


def _solve_face(A, b, norms, logw, free):
    """Profile MLE with entries outside ``free`` fixed at zero.

    Writes ``w_F = 1/k + Q s`` with ``Q`` spanning the complement of the
    ones vector in the ``k`` free coordinates; the inner variables ``w_t``
    are projected out in closed form, leaving weighted least squares in ``s``.
    """
    d = A.shape[1]
    k = len(free)
    w = np.zeros(d)
    if k == 1:
        w[free[0]] = 1.0
        return w
    AF = A[:, free]
    Q = nullspace_basis(np.ones(k))
    rows = (AF @ Q) / norms[:, None]
    rhs = (b - AF.sum(axis=1) / k) / norms
    factor = ScaledTriangularFactor(k - 1, n_rhs=1)
    for t in np.argsort(-logw, kind="stable"):
        factor.add_row(logw[t], np.append(rows[t], rhs[t]))
    w[free] = 1.0 / k + Q @ factor.solve()
    return w


def mle_estimate(obs: list[Observation], phi: float, agent: int | None = None) -> EstimateReport:
    """Maximum likelihood estimate of the influence row behind ``obs``.

    Maximises ``-sum_t e^{2 phi t} |w_t - w|^2 / 2`` subject to
    ``A_t w_t = b_t``, ``sum(w) = 1`` and ``w >= 0``. The equality-constrained
    problem is solved first; while an entry is negative the most negative
    one is fixed at zero and the problem re-solved on that face.
    """
    phi = check_positive("phi", phi)
    if not obs:
        raise ParameterError("at least one observation is required")
    A = np.array([np.asarray(o.A, dtype=float) for o in obs])
    b = np.array([float(o.b) for o in obs])
    t = np.array([o.t for o in obs], dtype=float)
    if A.ndim != 2:
        raise ParameterError("observations must share one degree")
    d = A.shape[1]
    norms = np.linalg.norm(A, axis=1)
    zero = norms == 0
    if np.any(zero & (b != 0)):
        raise InfeasibleError("an all-zero observation row has a nonzero right-hand side")
    if np.all(zero):
        raise ParameterError("every observation row is zero")
    A, b, t, norms = A[~zero], b[~zero], t[~zero], norms[~zero]
    logw = phi * t

    if d == 1:
        w = np.ones(1)
        return EstimateReport(
            w, None, np.zeros((0, 0)), 0.0, fully_determined=True,
            objective_trace=(_log_cost(A, b, norms, logw, w),), agent=agent,
        )

    free = list(range(d))
    fixed = []
    trace = []
    while True:
        w = _solve_face(A, b, norms, logw, free)
        trace.append(_log_cost(A, b, norms, logw, w))
        neg = [j for j in free if w[j] < 0]
        if not neg:
            break
        worst = min(neg, key=lambda j: w[j])
        free.remove(worst)
        fixed.append(worst)
        if not free:
            raise InfeasibleError("active set emptied the simplex")
    w = np.where(np.abs(w) <= 1e-12, 0.0, w)
    w = np.maximum(w, 0.0)

    info = information_matrix(A, phi, times=t)
    return EstimateReport(
        w_hat=w,
        info=info,
        cov=info.covariance(),
        estimate_error=estimate_error(info),
        fixed=tuple(fixed),
        objective_trace=tuple(trace),
        agent=agent,
    )


def attack_agent(K: KnowledgeSet, i: int, phi: float) -> EstimateReport:
    """Convenience wrapper: observations of agent ``i`` followed by the MLE."""
    return mle_estimate(build_observations(K, i), phi, agent=i)
