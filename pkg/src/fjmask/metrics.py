"""Information matrix and estimate error for an eavesdropper's estimate of one influence row.

The information in the observations of one agent is

    I_w = sum_t exp(2 phi t) Q1' a_t' a_t Q1,

where ``a_t`` is the unit vector of neighbour opinions at time ``t`` and
``Q1`` an orthonormal basis of the complement of the all-ones vector. The
weights span hundreds of orders of magnitude for large ``phi * T``, so the
matrix is also accumulated as a triangular square-root factor whose rows
carry their own log scale (see :class:`ScaledTriangularFactor`). The
estimate error is read off that factor; forming ``I_w`` explicitly would
lose the small eigenvalues to rounding.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from ._validation import check_positive, check_rows
from .exceptions import ParameterError

SINGULAR_EIG = 1e-12
# estimate error at which the smallest information eigenvalue reaches SINGULAR_EIG
_LOG_ERROR_CUTOFF = -0.5 * math.log(SINGULAR_EIG)


def nullspace_basis(a) -> np.ndarray:
    """Orthonormal basis ``Q`` (m x (m-1)) of the vectors orthogonal to ``a``.

    Built from the Householder reflector that maps ``a`` onto its largest
    coordinate axis; each column is signed so its first nonzero entry is
    positive.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    m = a.size
    if m < 2:
        raise ParameterError("nullspace basis needs a vector of length >= 2")
    norm = np.linalg.norm(a)
    if norm == 0 or not np.isfinite(norm):
        raise ParameterError("nullspace basis of a zero or non-finite vector")
    ah = a / norm
    k = int(np.argmax(np.abs(ah)))
    v = ah.copy()
    v[k] += 1.0 if ah[k] >= 0 else -1.0
    H = np.eye(m) - (2.0 / (v @ v)) * np.outer(v, v)
    Q = np.delete(H, k, axis=1)
    for j in range(Q.shape[1]):
        nz = np.flatnonzero(np.abs(Q[:, j]) > 1e-12)
        if nz.size and Q[nz[0], j] < 0:
            Q[:, j] = -Q[:, j]
    return Q


def projection_identity_check(a) -> float:
    """Max-abs gap between ``Q Q'`` and ``I - a_hat' a_hat``."""
    a = np.asarray(a, dtype=float).reshape(-1)
    Q = nullspace_basis(a)
    ah = a / np.linalg.norm(a)
    return float(np.max(np.abs(Q @ Q.T - (np.eye(a.size) - np.outer(ah, ah)))))


def _normalize(vec):
    mx = np.max(np.abs(vec)) if vec.size else 0.0
    if mx == 0 or not np.isfinite(mx):
        return None
    return math.log(mx), vec / mx


def _combine(s1, l1, v1, s2, l2, v2):
    """Normalised ``s1 e^l1 v1 + s2 e^l2 v2`` as ``(log_scale, vector)`` or None."""
    base = max(l1, l2)
    vec = s1 * math.exp(l1 - base) * v1 + s2 * math.exp(l2 - base) * v2
    out = _normalize(vec)
    if out is None:
        return None
    return base + out[0], out[1]


class ScaledTriangularFactor:
    """Upper-triangular ``R`` with ``R' R = sum_t e^{2 l_t} y_t' y_t``.

    Rows are added one at a time with a log weight ``l_t`` and folded in by
    Givens rotations. Row ``k`` of ``R`` is stored as ``exp(log_scale[k]) *
    rows[k]`` with ``max|rows[k]| = 1``, so no weight is ever exponentiated
    on its own. Extra trailing columns (``n_rhs``) are carried along, which
    turns the factor into a weighted least-squares solver.
    """

    def __init__(self, m: int, n_rhs: int = 0):
        self.m = m
        self.width = m + n_rhs
        self.log_scale = np.full(m, -np.inf)
        self.rows = np.zeros((m, self.width))
        self.filled = np.zeros(m, dtype=bool)

    def add_row(self, log_weight: float, row) -> None:
        row = np.asarray(row, dtype=float)
        start = _normalize(row)
        if start is None:
            return
        ell, y = start[0] + log_weight, start[1]
        for k in range(self.m):
            b = y[k]
            if b == 0:
                continue
            if not self.filled[k]:
                self.rows[k] = y
                self.log_scale[k] = ell
                self.filled[k] = True
                return
            lk, r = self.log_scale[k], self.rows[k]
            a = r[k]
            la = lk + math.log(abs(a))
            lb = ell + math.log(abs(b))
            lr = max(la, lb) + 0.5 * math.log1p(math.exp(-2.0 * abs(la - lb)))
            sa = 1.0 if a > 0 else -1.0
            sb = 1.0 if b > 0 else -1.0
            new_r = _combine(sa, la - lr + lk, r, sb, lb - lr + ell, y)
            new_y = _combine(-sb, lb - lr + lk, r, sa, la - lr + ell, y)
            self.log_scale[k], self.rows[k] = new_r
            if new_y is None:
                return
            ell, y = new_y
            y[k] = 0.0
            again = _normalize(y)
            if again is None:
                return
            ell, y = ell + again[0], again[1]

    @property
    def rank(self) -> int:
        return int(self.filled.sum())

    def log_inverse_norm(self) -> float:
        """``log ||R^{-1}||_2``, i.e. half the log of the largest covariance eigenvalue."""
        if self.rank < self.m:
            return math.inf
        R = self.rows[:, : self.m]
        low = float(self.log_scale.min())
        C = solve_triangular(R, np.diag(np.exp(-(self.log_scale - low))), lower=False)
        top = np.linalg.norm(C, 2)
        if not np.isfinite(top):
            return math.inf
        return -low + math.log(top)

    def covariance(self) -> np.ndarray:
        """``(R' R)^{-1}`` as an explicit matrix (entries may overflow to inf)."""
        if self.m == 0:
            return np.zeros((0, 0))
        if self.rank < self.m:
            return np.full((self.m, self.m), np.inf)
        R = self.rows[:, : self.m]
        low = float(self.log_scale.min())
        C = solve_triangular(R, np.diag(np.exp(-(self.log_scale - low))), lower=False)
        with np.errstate(over="ignore", invalid="ignore"):
            return (C @ C.T) * np.exp(-2.0 * low)

    def solve(self) -> np.ndarray:
        """Least-squares solution of the system whose right-hand side is column ``m``.

        Row scales cancel, so the triangular solve uses the normalised rows.
        Rank-deficient factors fall back to the minimum-norm solution.
        """
        R = self.rows[:, : self.m]
        z = self.rows[:, self.m]
        if self.rank == self.m:
            return solve_triangular(R, z, lower=False)
        sol, *_ = np.linalg.lstsq(R[self.filled], z[self.filled], rcond=None)
        return sol


@dataclass(frozen=True)
class InfoMatrix:
    """Information matrix ``M = exp(log_scale) * scaled`` of size (d-1) x (d-1).

    ``factor`` is the square-root form used for accurate estimate errors;
    matrices built directly from an explicit ``M`` have none.
    """

    scaled: np.ndarray
    log_scale: float
    d: int
    phi: float
    T: int
    factor: ScaledTriangularFactor | None = None

    @classmethod
    def from_matrix(cls, M, phi: float = float("nan"), T: int = 0) -> "InfoMatrix":
        M = np.atleast_2d(np.asarray(M, dtype=float))
        if M.shape[0] != M.shape[1]:
            raise ParameterError(f"information matrix must be square, got {M.shape}")
        return cls(0.5 * (M + M.T), 0.0, M.shape[0] + 1, phi, T)

    @property
    def M(self) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            return np.where(self.scaled == 0, 0.0, self.scaled * np.exp(self.log_scale))

    def eigenvalues(self) -> np.ndarray:
        """Ascending eigenvalues. With a factor the smallest one is taken from it."""
        if self.d <= 1:
            return np.zeros(0)
        vals = np.linalg.eigvalsh(self.scaled)
        with np.errstate(over="ignore", invalid="ignore"):
            vals = np.where(vals == 0, 0.0, vals * np.exp(self.log_scale))
        if self.factor is not None:
            log_err = self.factor.log_inverse_norm()
            vals[0] = 0.0 if log_err == math.inf else float(np.exp(-2.0 * log_err))
        return vals

    def covariance(self) -> np.ndarray:
        if self.d <= 1:
            return np.zeros((0, 0))
        if self.factor is not None:
            return self.factor.covariance()
        if estimate_error(self) == math.inf:
            return np.full_like(self.scaled, np.inf)
        return np.linalg.inv(self.scaled) * math.exp(-self.log_scale)


def _time_index(A, times):
    if times is None:
        return np.arange(A.shape[0], dtype=float)
    times = np.asarray(times, dtype=float).reshape(-1)
    if times.shape[0] != A.shape[0]:
        raise ParameterError("times must have one entry per observation row")
    return times


def _usable_rows(A):
    norms = np.linalg.norm(A, axis=1)
    zero = norms == 0
    if np.any(zero):
        warnings.warn(
            f"skipping {int(zero.sum())} all-zero observation row(s); they carry no information",
            RuntimeWarning,
            stacklevel=3,
        )
    return ~zero, norms


def information_matrix(A_list, phi: float, times=None) -> InfoMatrix:
    """Closed-form information matrix of one influence row.

    ``A_list`` holds one row of neighbour opinions per timestep; row ``k`` is
    taken to be time ``k`` unless ``times`` says otherwise. All-zero rows are
    skipped with a warning.
    """
    A = check_rows(A_list)
    phi = check_positive("phi", phi)
    T, d = A.shape
    if d < 2:
        raise ParameterError("information matrix needs degree >= 2")
    t = _time_index(A, times)
    keep, norms = _usable_rows(A)
    Q1 = nullspace_basis(np.ones(d))
    B = (A[keep] / norms[keep, None]) @ Q1
    logw = phi * t[keep]
    factor = ScaledTriangularFactor(d - 1)
    for k in np.argsort(-logw, kind="stable"):
        factor.add_row(logw[k], B[k])
    if B.shape[0] == 0:
        return InfoMatrix(np.zeros((d - 1, d - 1)), 0.0, d, phi, T, factor)
    top = float(logw.max())
    scaled = (B * np.exp(logw - top)[:, None]).T @ (B * np.exp(logw - top)[:, None])
    scaled = 0.5 * (scaled + scaled.T)
    return InfoMatrix(scaled, 2.0 * top, d, phi, T, factor)


def full_kkt_information(A_list, phi: float) -> InfoMatrix:
    """Information for ``w`` from the full problem over ``(w_0, ..., w_{T-1}, w)``.

    Builds the block nullspace basis, the difference operator and the
    exponential weights explicitly and takes the Schur complement of the
    ``w`` block. Costs O((T d)^3); meant as a cross-check of
    :func:`information_matrix`.
    """
    A = check_rows(A_list)
    phi = check_positive("phi", phi)
    T, d = A.shape
    if d < 2:
        raise ParameterError("information matrix needs degree >= 2")
    keep, _ = _usable_rows(A)
    times = np.flatnonzero(keep)
    k = times.size
    blocks = [nullspace_basis(A[t]) for t in times] + [nullspace_basis(np.ones(d))]
    m = d - 1
    Q = np.zeros(((k + 1) * d, (k + 1) * m))
    for b, Qb in enumerate(blocks):
        Q[b * d:(b + 1) * d, b * m:(b + 1) * m] = Qb
    Y = np.hstack([np.eye(k * d), -np.tile(np.eye(d), (k, 1))])
    H = np.diag(np.repeat(np.exp(2.0 * phi * times), d))
    full = Q.T @ Y.T @ H @ Y @ Q
    top, K, R = full[: k * m, : k * m], full[: k * m, k * m:], full[k * m:, k * m:]
    Iw = R - K.T @ np.linalg.solve(top, K) if k else R
    return InfoMatrix.from_matrix(Iw, phi=phi, T=T)


def estimate_error(info: InfoMatrix) -> float:
    """Square root of the largest covariance eigenvalue, ``1 / sqrt(min eig(M))``.

    Returns ``inf`` when the smallest information eigenvalue is at most
    1e-12 (the row cannot be recovered) and 0 for a single-neighbour row,
    which the simplex constraint pins down completely.
    """
    if info.d <= 1:
        return 0.0
    if info.factor is not None:
        log_err = info.factor.log_inverse_norm()
        if log_err >= _LOG_ERROR_CUTOFF:
            return math.inf
        return math.exp(log_err)
    lam_min = float(np.linalg.eigvalsh(info.scaled)[0])
    if lam_min <= 0:
        return math.inf
    log_min = math.log(lam_min) + info.log_scale
    if log_min <= math.log(SINGULAR_EIG):
        return math.inf
    return math.exp(-0.5 * log_min)
