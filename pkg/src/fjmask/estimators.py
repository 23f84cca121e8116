"""scikit-learn style wrappers around the eavesdropper's two attacks.

Both estimators take opinion states as ``X`` (one row per timestep, one
column per agent), follow the ``fit``/``predict``/``get_params`` protocol and
can be cloned, gridded over and put in pipelines like any other estimator.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive, check_states
from .attacker import (
    COND_MAX,
    KnowledgeSet,
    attack_agent,
    regress_lam_w,
    split_lam_w,
)
from .exceptions import ParameterError


class FJRegressionIdentifier(RegressorMixin, BaseEstimator):
    """Identify an unmasked system ``x[t+1] = coef_ @ x[t] + intercept_``.

    Parameters
    ----------
    cond_max : float, default=1e12
        Largest acceptable condition number of the regression; above it the
        trajectory is treated as not sufficiently excited.

    Attributes
    ----------
    coef_ : ndarray of shape (n, n)
        Estimate of ``diag(lam) W``.
    intercept_ : ndarray of shape (n,)
        Estimate of ``(I - diag(lam)) u``.
    susceptibility_, influence_ : ndarray
        ``coef_`` split row-wise into its 1-norm and the normalised row.
    """

    def __init__(self, cond_max=COND_MAX):
        self.cond_max = cond_max

    def fit(self, X, y=None):
        """Fit from a trajectory ``X`` (consecutive states), or from pairs ``(X, y)``.

        With ``y`` given, row ``k`` of ``y`` is the successor of row ``k`` of
        ``X`` and an ordinary affine least-squares fit is used.
        """
        check_positive("cond_max", self.cond_max)
        X = check_states(X)
        if y is None:
            coef = regress_lam_w(X, self.cond_max)
            prev, nxt = X[:-1], X[1:]
        else:
            y = check_states(y, X.shape[1])
            if y.shape[0] != X.shape[0]:
                raise ParameterError("X and y must have the same number of rows")
            design = np.hstack([X, np.ones((X.shape[0], 1))])
            sol = np.linalg.lstsq(design, y, rcond=None)[0]
            coef = sol[:-1].T
            prev, nxt = X, y
        self.coef_ = coef
        self.intercept_ = (nxt - prev @ coef.T).mean(axis=0)
        self.susceptibility_, self.influence_ = split_lam_w(coef)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = check_states(X, self.n_features_in_)
        return X @ self.coef_.T + self.intercept_


class InfluenceMLE(RegressorMixin, BaseEstimator):
    """Maximum likelihood estimate of one agent's influence row under the mask.

    Parameters
    ----------
    phi : float, default=0.3
        Publicly known decay rate of the mask.
    agent : int, default=0
        Index of the target agent.

    The eavesdropper's side knowledge (network, biases, susceptibilities)
    is passed to :meth:`fit`; ``X`` is the broadcast trajectory.
    """

    def __init__(self, phi=0.3, agent=0):
        self.phi = phi
        self.agent = agent

    def fit(self, X, y=None, *, network, bias, susceptibility):
        K = KnowledgeSet(network, bias, susceptibility, check_states(X, network.n))
        report = attack_agent(K, int(self.agent), self.phi)
        nbrs = list(network.in_neighbors[int(self.agent)])
        self.neighbors_ = np.array(nbrs, dtype=int)
        self.w_hat_ = report.w_hat
        self.coef_ = np.zeros(network.n)
        self.coef_[nbrs] = report.w_hat
        self.information_ = report.info
        self.covariance_ = report.cov
        self.estimate_error_ = report.estimate_error
        self.report_ = report
        self.lam_i_ = float(K.lam[self.agent])
        self.u_i_ = float(K.u[self.agent])
        self.n_features_in_ = network.n
        return self

    def predict(self, X):
        """Next opinion of the target agent for each state row, under the estimated row."""
        check_is_fitted(self)
        X = check_states(X, self.n_features_in_)
        return self.lam_i_ * (X @ self.coef_) + (1.0 - self.lam_i_) * self.u_i_
