"""Closed-form linear solvers on centred data."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..anchors import (
    AnchorAssignment,
    as_data_matrix,
    as_projection,
    as_target_vector,
    center_dataset,
)
from ..augment import ar_transform
from ..exceptions import ConfigError
from ..partitioning import AnchorPartitioner


@dataclass(frozen=True)
class LinearModel:
    coef: np.ndarray
    intercept: float

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        return x @ self.coef + self.intercept


def _lstsq(x, y):
    # SVD based; returns the minimum-norm solution when x is rank deficient
    return np.linalg.lstsq(x, y, rcond=None)[0]


def fit_ols(x, y, fit_intercept=True) -> LinearModel:
    if not fit_intercept:
        x = as_data_matrix(x)
        return LinearModel(_lstsq(x, as_target_vector(y, x.shape[0])), 0.0)
    ds = center_dataset(x, y)
    coef = _lstsq(ds.x, ds.y)
    return LinearModel(coef, float(ds.y_mean - ds.x_mean @ coef))


def fit_ridge(x, y, lam, fit_intercept=True) -> LinearModel:
    """Ridge regression ``(X^T X + lam I)^{-1} X^T y`` on centred data.

    Solved as least squares on ``[X; sqrt(lam) I]`` which avoids forming
    ``X^T X``. ``lam = 0`` is plain OLS.
    """
    if not lam >= 0:
        raise ConfigError(f"ridge penalty must be >= 0, got {lam}")
    if lam == 0:
        return fit_ols(x, y, fit_intercept)
    ds = center_dataset(x, y)
    xc, yc = (ds.x, ds.y) if fit_intercept else (ds.x + ds.x_mean, ds.y + ds.y_mean)
    d = xc.shape[1]
    xa = np.vstack([xc, np.sqrt(lam) * np.eye(d)])
    ya = np.concatenate([yc, np.zeros(d)])
    coef = _lstsq(xa, ya)
    intercept = float(ds.y_mean - ds.x_mean @ coef) if fit_intercept else 0.0
    return LinearModel(coef, intercept)


def _residual(b: LinearModel, x, y):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return np.asarray(y, dtype=np.float64) - x @ b.coef - b.intercept


def anchor_loss(b: LinearModel, x, y, pi, gamma) -> float:
    """``|(I - Pi) r|^2 + gamma |Pi r|^2`` with residual ``r = y - x b``."""
    if not gamma >= 0:
        raise ConfigError(f"gamma must be >= 0, got {gamma}")
    pi = as_projection(pi)
    r = _residual(b, x, y)
    pr = pi.apply(r)
    return float(np.sum((r - pr) ** 2) + gamma * np.sum(pr**2))


def anchor_loss_grad(b: LinearModel, x, y, pi, gamma) -> np.ndarray:
    """Gradient of :func:`anchor_loss` with respect to ``b.coef``.

    The loss equals ``|W r|^2`` with ``W = (I - Pi) + sqrt(gamma) Pi``, so the
    gradient is ``-2 x^T W^2 r`` and ``W^2 = (I - Pi) + gamma Pi``.
    """
    pi = as_projection(pi)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    r = _residual(b, x, y)
    pr = pi.apply(r)
    return -2.0 * x.T @ (r - pr + gamma * pr)


def fit_anchor_regression(x, y, assignment, gamma) -> LinearModel:
    """Anchor regression via OLS on anchor-modified, centred data."""
    if not gamma >= 0:
        raise ConfigError(f"gamma must be >= 0, got {gamma}")
    ds = center_dataset(x, y)
    xt, yt = ar_transform(ds.x, ds.y, as_projection(assignment), gamma)
    coef = _lstsq(xt, yt)
    return LinearModel(coef, float(ds.y_mean - ds.x_mean @ coef))


class _LinearBase(RegressorMixin, BaseEstimator):
    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        return X @ self.coef_ + self.intercept_

    def _set_model(self, model: LinearModel):
        self.model_ = model
        self.coef_ = model.coef
        self.intercept_ = model.intercept
        return self


class RidgeRegression(_LinearBase):
    """Ridge regression with an unpenalised intercept; ``lam=0`` is OLS."""

    def __init__(self, lam=1.0):
        self.lam = lam

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        return self._set_model(fit_ridge(X, y, self.lam))


class AnchorRegression(_LinearBase):
    """Anchor regression with cluster-derived or user-supplied anchors.

    Parameters
    ----------
    gamma : float, default=1.0
        ``1`` is OLS, ``0`` partials the anchors out, large values approach
        the instrumental-variable solution.
    n_groups : int, default=8
        Anchor groups formed by k-means when ``fit`` receives no labels.
    random_state : int, default=0

    Attributes
    ----------
    coef_, intercept_
    assignment_ : AnchorAssignment used for the fit
    """

    def __init__(self, gamma=1.0, n_groups=8, random_state=0):
        self.gamma = gamma
        self.n_groups = n_groups
        self.random_state = random_state

    def fit(self, X, y, anchor_labels=None):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        if anchor_labels is None:
            assignment = AnchorPartitioner(
                self.n_groups, random_state=self.random_state
            ).fit(X).assignment_
        elif isinstance(anchor_labels, AnchorAssignment):
            assignment = anchor_labels
        else:
            labels = np.asarray(anchor_labels)
            assignment = AnchorAssignment(labels, int(labels.max()) + 1)
        self.assignment_ = assignment
        return self._set_model(fit_anchor_regression(X, y, assignment, self.gamma))
