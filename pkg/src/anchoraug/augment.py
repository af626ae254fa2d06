"""Anchor data augmentation and the Mixup-family baselines.

All transforms are pure: inputs are never modified and randomness comes only
from the ``numpy.random.Generator`` passed in.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted, check_X_y

from .anchors import (
    AnchorAssignment,
    CompactProjection,
    ProjectionOperator,
    as_data_matrix,
    as_projection,
    as_target_vector,
)
from .exceptions import ConfigError, DataError, ZeroDenominatorError
from .partitioning import AnchorPartitioner


@dataclass(frozen=True)
class GammaPrior:
    """Uniform prior on ``[1/alpha, alpha]``."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 1:
            raise ConfigError(f"alpha must be > 1, got {self.alpha}")

    @property
    def low(self) -> float:
        return 1.0 / self.alpha

    @property
    def high(self) -> float:
        return float(self.alpha)


@dataclass(frozen=True)
class GammaGrid:
    alpha: float
    k: int
    values: np.ndarray


def gamma_grid(alpha, k) -> GammaGrid:
    """Symmetric grid ``{1/alpha, 1/beta_{k/2-1}, ..., 1, ..., beta_{k/2-1}, alpha}``.

    ``beta_i = 1 + (alpha - 1) * i / (k / 2)``, so ``beta_{k/2} = alpha``.
    ``k`` is the number of augmented copies; the grid has ``k + 1`` values
    including ``gamma = 1``.
    """
    if not alpha > 1:
        raise ConfigError(f"alpha must be > 1, got {alpha}")
    if int(k) != k or k < 2 or k % 2:
        raise ConfigError(f"k must be an even integer >= 2, got {k}")
    k = int(k)
    half = k // 2
    beta = 1.0 + (alpha - 1.0) * np.arange(1, half + 1) / half
    beta[-1] = alpha
    values = np.concatenate([1.0 / beta[::-1], [1.0], beta])
    values.setflags(write=False)
    return GammaGrid(float(alpha), k, values)


def sample_gamma(prior: GammaPrior, rng: np.random.Generator) -> float:
    return float(rng.uniform(prior.low, prior.high))


def _check_gamma(gamma):
    gamma = float(gamma)
    if not np.isfinite(gamma) or gamma < 0:
        raise ConfigError(f"gamma must be finite and >= 0, got {gamma}")
    return gamma


def _check_xy(x, y):
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    x = as_data_matrix(x)
    y = as_target_vector(y, x.shape[0])
    return x, y, squeeze


def ar_transform(x, y, pi, gamma):
    """Anchor-regression data modification ``v + (sqrt(gamma) - 1) Pi v``.

    Ordinary least squares on the returned pair solves the anchor regression
    problem for ``gamma``.
    """
    gamma = _check_gamma(gamma)
    x, y, squeeze = _check_xy(x, y)
    pi = as_projection(pi)
    if gamma == 1.0:
        xt, yt = x.copy(), y.copy()
    else:
        s = np.sqrt(gamma) - 1.0
        xt = x + s * pi.apply(x)
        yt = y + s * pi.apply(y)
    return (xt[:, 0] if squeeze else xt), yt


def ada_transform(x, y, pi, gamma):
    """Row-normalised anchor modification.

    Row ``i`` becomes ``(v_i + (sqrt(gamma) - 1) (Pi v)_i) / (1 + (sqrt(gamma) - 1) sum_j Pi_ij)``.
    For a one-hot anchor matrix this is ``c + (v_i - c) / sqrt(gamma)`` with
    ``c`` the group centroid: samples slide along the ray through their
    centroid, towards it for ``gamma > 1`` and away from it for ``gamma < 1``.
    """
    gamma = _check_gamma(gamma)
    x, y, squeeze = _check_xy(x, y)
    pi = as_projection(pi)
    if pi.n != x.shape[0]:
        raise DataError(f"projection has {pi.n} rows but x has {x.shape[0]}")
    if gamma == 1.0:
        xt, yt = x.copy(), y.copy()
    else:
        s = np.sqrt(gamma) - 1.0
        den = 1.0 + s * pi.row_sums()
        bad = np.flatnonzero(np.abs(den) < 1e-12)
        if bad.size:
            raise ZeroDenominatorError(
                f"normalising denominator vanishes at row {int(bad[0])} for gamma={gamma}"
            )
        xt = (x + s * pi.apply(x)) / den[:, None]
        yt = (y + s * pi.apply(y)) / den
    return (xt[:, 0] if squeeze else xt), yt


@dataclass(frozen=True)
class AugmentedBatch:
    """Output of one minibatch augmentation.

    ``gamma`` is the anchor strength used (1.0 for the Mixup baselines, which
    record their mixing weight in ``lam`` and partners in ``partners``).
    """

    x: np.ndarray
    y: np.ndarray
    gamma: float
    source_indices: np.ndarray
    lam: float | None = None
    partners: np.ndarray | None = None


def ada_minibatch(batch_x, batch_y, batch_assignment, prior, rng,
                  source_indices=None) -> AugmentedBatch:
    """Augment one minibatch: draw a single gamma, project within the batch.

    ``batch_assignment`` holds the anchor rows of the batch only; group sizes
    are those inside the batch. ``prior`` is a :class:`GammaPrior` or a fixed
    float gamma.
    """
    x, y, _ = _check_xy(batch_x, batch_y)
    if isinstance(batch_assignment, AnchorAssignment):
        if batch_assignment.n != x.shape[0]:
            raise DataError(
                f"assignment covers {batch_assignment.n} rows, batch has {x.shape[0]}"
            )
        pi = CompactProjection(batch_assignment)
    elif isinstance(batch_assignment, ProjectionOperator):
        pi = batch_assignment
    else:
        raise TypeError("batch_assignment must be an AnchorAssignment or ProjectionOperator")
    gamma = sample_gamma(prior, rng) if isinstance(prior, GammaPrior) else float(prior)
    xt, yt = ada_transform(x, y, pi, gamma)
    idx = np.arange(x.shape[0]) if source_indices is None else np.asarray(source_indices)
    return AugmentedBatch(xt, yt, gamma, idx)


def augment_dataset_offline(x, y, assignment, grid, return_meta=False):
    """Stack ``ada_transform`` over every gamma of ``grid`` (gamma-major order).

    ``grid`` is a :class:`GammaGrid` or any sequence of gammas. With
    ``return_meta`` also returns ``(source_index, gamma)`` per output row.
    """
    x, y, squeeze = _check_xy(x, y)
    gammas = grid.values if isinstance(grid, GammaGrid) else np.asarray(grid, dtype=np.float64)
    pi = as_projection(assignment)
    xs, ys = [], []
    for g in gammas:
        xt, yt = ada_transform(x, y, pi, g)
        xs.append(xt)
        ys.append(yt)
    x_aug = np.concatenate(xs)
    y_aug = np.concatenate(ys)
    if squeeze:
        x_aug = x_aug[:, 0]
    if not return_meta:
        return x_aug, y_aug
    n = x.shape[0]
    src = np.tile(np.arange(n), len(gammas))
    gam = np.repeat(gammas, n)
    return x_aug, y_aug, src, gam


def _draw_lambda(beta_param, rng, lam):
    if lam is not None:
        return float(lam)
    if not beta_param > 0:
        raise ConfigError(f"beta_param must be > 0, got {beta_param}")
    return float(rng.beta(beta_param, beta_param))


def _mix(x, y, partners, lam):
    return lam * x + (1 - lam) * x[partners], lam * y + (1 - lam) * y[partners]


def cmixup_partner_probs(y, bandwidth) -> np.ndarray:
    """Row-stochastic partner matrix ``P_ij ~ exp(-(y_i - y_j)^2 / (2 h^2))``, ``P_ii = 0``."""
    if not bandwidth > 0:
        raise ConfigError(f"bandwidth must be > 0, got {bandwidth}")
    y = np.asarray(y, dtype=np.float64)
    logk = -((y[:, None] - y[None, :]) ** 2) / (2.0 * bandwidth**2)
    np.fill_diagonal(logk, -np.inf)
    logk -= logk.max(axis=1, keepdims=True)
    k = np.exp(logk)
    return k / k.sum(axis=1, keepdims=True)


def cmixup_minibatch(batch_x, batch_y, bandwidth=1.0, beta_param=2.0, rng=None,
                     lam=None, source_indices=None) -> AugmentedBatch:
    """C-Mixup: pair each sample with a partner of similar label, then mix.

    One mixing weight ``lam ~ Beta(beta_param, beta_param)`` is drawn per
    batch unless ``lam`` is given.
    """
    x, y, squeeze = _check_xy(batch_x, batch_y)
    n = x.shape[0]
    if n < 2:
        raise DataError("C-Mixup needs at least two samples per batch")
    if not beta_param > 0:
        raise ConfigError(f"beta_param must be > 0, got {beta_param}")
    rng = np.random.default_rng() if rng is None else rng
    p = cmixup_partner_probs(y, bandwidth)
    u = rng.random(n)
    partners = np.minimum((p.cumsum(axis=1) < u[:, None]).sum(axis=1), n - 1)
    lam = _draw_lambda(beta_param, rng, lam)
    xm, ym = _mix(x, y, partners, lam)
    idx = np.arange(n) if source_indices is None else np.asarray(source_indices)
    return AugmentedBatch(xm[:, 0] if squeeze else xm, ym, 1.0, idx, lam, partners)


def mixup_minibatch(batch_x, batch_y, beta_param=2.0, rng=None, lam=None,
                    source_indices=None) -> AugmentedBatch:
    """Mixup with a uniformly random partner ``j != i`` for each sample."""
    x, y, squeeze = _check_xy(batch_x, batch_y)
    n = x.shape[0]
    if n < 2:
        raise DataError("Mixup needs at least two samples per batch")
    if not beta_param > 0:
        raise ConfigError(f"beta_param must be > 0, got {beta_param}")
    rng = np.random.default_rng() if rng is None else rng
    offs = rng.integers(1, n, size=n)
    partners = (np.arange(n) + offs) % n
    lam = _draw_lambda(beta_param, rng, lam)
    xm, ym = _mix(x, y, partners, lam)
    idx = np.arange(n) if source_indices is None else np.asarray(source_indices)
    return AugmentedBatch(xm[:, 0] if squeeze else xm, ym, 1.0, idx, lam, partners)


# Training-loop hooks. A hook is called as ``hook(batch_x, batch_y, index, rng)``
# where ``index`` are the batch rows' positions in the training set, and
# returns the batch to train on.


class ADAHook:
    def __init__(self, prior, assignment: AnchorAssignment):
        self.prior = prior
        self.assignment = assignment

    def __call__(self, bx, by, index, rng):
        out = ada_minibatch(bx, by, self.assignment.subset(index), self.prior, rng, index)
        return out.x, out.y


class CMixupHook:
    def __init__(self, bandwidth=1.0, beta_param=2.0, y_scale=1.0):
        self.bandwidth = bandwidth
        self.beta_param = beta_param
        self.y_scale = y_scale

    def __call__(self, bx, by, index, rng):
        if len(by) < 2:
            return bx, by
        # the kernel sees standardised labels; the mix uses the raw ones
        p = cmixup_partner_probs(np.asarray(by) / self.y_scale, self.bandwidth)
        n = len(by)
        u = rng.random(n)
        partners = np.minimum((p.cumsum(axis=1) < u[:, None]).sum(axis=1), n - 1)
        lam = _draw_lambda(self.beta_param, rng, None)
        return _mix(np.asarray(bx), np.asarray(by), partners, lam)


class MixupHook:
    def __init__(self, beta_param=2.0):
        self.beta_param = beta_param

    def __call__(self, bx, by, index, rng):
        if len(by) < 2:
            return bx, by
        out = mixup_minibatch(bx, by, self.beta_param, rng)
        return out.x, out.y


class AnchorAugmenter(BaseEstimator):
    """Anchor data augmentation as a reusable, scikit-learn style object.

    ``fit`` partitions the training set into anchor groups. The fitted object
    then either expands a dataset offline (:meth:`fit_resample`) or produces a
    per-minibatch hook for :class:`~anchoraug.regressors.MLPRegressor`
    (:meth:`make_hook`).

    Parameters
    ----------
    alpha : float, default=2.0
        Gamma range ``[1/alpha, alpha]``.
    n_groups : int, default=8
        Number of anchor groups ``q``.
    n_augmentations : int, default=10
        Even number of extra copies for offline augmentation.
    partition : {"kmeans", "equal_width", "equal_size"}, default="kmeans"
    feature : int, default=0
        Column for the binning schemes.
    include_target : bool, default=False
        Cluster on ``[X, y]``.
    random_state : int, default=0
    """

    def __init__(self, alpha=2.0, n_groups=8, n_augmentations=10, partition="kmeans",
                 feature=0, include_target=False, random_state=0):
        self.alpha = alpha
        self.n_groups = n_groups
        self.n_augmentations = n_augmentations
        self.partition = partition
        self.feature = feature
        self.include_target = include_target
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        self.partitioner_ = AnchorPartitioner(
            self.n_groups, self.partition, self.feature, self.include_target,
            random_state=self.random_state,
        ).fit(X, y)
        self.assignment_ = self.partitioner_.assignment_
        self.n_samples_fit_ = X.shape[0]
        return self

    def resample(self, X, y, return_meta=False):
        """Offline augmentation of the data the augmenter was fitted on."""
        check_is_fitted(self, "assignment_")
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        if X.shape[0] != self.n_samples_fit_:
            raise DataError(
                f"augmenter was fitted on {self.n_samples_fit_} samples, got {X.shape[0]}"
            )
        grid = gamma_grid(self.alpha, self.n_augmentations)
        return augment_dataset_offline(X, y, self.assignment_, grid, return_meta)

    def fit_resample(self, X, y, return_meta=False):
        return self.fit(X, y).resample(X, y, return_meta)

    def make_hook(self, X, y):
        """Fit on the training set and return a per-minibatch ADA hook."""
        self.fit(X, y)
        return ADAHook(GammaPrior(self.alpha), self.assignment_)


class CMixupAugmenter(BaseEstimator):
    def __init__(self, bandwidth=1.0, beta_param=2.0):
        self.bandwidth = bandwidth
        self.beta_param = beta_param

    def make_hook(self, X, y):
        sd = float(np.std(y))
        return CMixupHook(self.bandwidth, self.beta_param, sd if sd > 0 else 1.0)


class MixupAugmenter(BaseEstimator):
    def __init__(self, beta_param=2.0):
        self.beta_param = beta_param

    def make_hook(self, X, y):
        return MixupHook(self.beta_param)
