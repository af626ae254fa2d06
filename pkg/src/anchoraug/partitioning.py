"""Ways of turning data into an :class:`~anchoraug.anchors.AnchorAssignment`."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .anchors import AnchorAssignment, as_data_matrix
from .exceptions import ConfigError, DataError


@dataclass(frozen=True)
class KMeansConfig:
    q: int
    max_iter: int = 300
    tol: float = 1e-6
    seed: int = 0
    n_init: int = 10

    def __post_init__(self):
        if self.q < 1:
            raise ConfigError(f"q must be >= 1, got {self.q}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be > 0, got {self.tol}")
        if self.n_init < 1:
            raise ConfigError(f"n_init must be >= 1, got {self.n_init}")


@dataclass(frozen=True)
class KMeansResult:
    assignment: AnchorAssignment
    centroids: np.ndarray
    inertia: float
    iterations: int
    inertia_history: tuple = field(default=(), repr=False)


def _sq_dists(x, centers):
    # explicit differences rather than the |a|^2 - 2ab + |b|^2 expansion:
    # duplicates must come out at exactly zero distance
    diff = x[:, None, :] - centers[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _assign(x, centers):
    d2 = _sq_dists(x, centers)
    labels = np.argmin(d2, axis=1)  # first minimum = lowest centroid index
    return labels, d2[np.arange(x.shape[0]), labels]


def kmeans_plusplus(x, q, rng) -> np.ndarray:
    """k-means++ seeding by D^2 sampling."""
    n = x.shape[0]
    idx = [int(rng.integers(n))]
    closest = _sq_dists(x, x[idx])[:, 0]
    for _ in range(1, q):
        total = closest.sum()
        if total > 0:
            j = int(rng.choice(n, p=closest / total))
        else:
            # fewer distinct points than clusters: pick among unused rows
            unused = np.setdiff1d(np.arange(n), idx)
            j = int(rng.choice(unused))
        idx.append(j)
        closest = np.minimum(closest, _sq_dists(x, x[j : j + 1])[:, 0])
    return x[idx].copy()


def _update_centers(x, labels, mind2, q):
    counts = np.bincount(labels, minlength=q)
    sums = np.zeros((q, x.shape[1]))
    np.add.at(sums, labels, x)
    centers = sums / np.maximum(counts, 1)[:, None]
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        # reseed each empty centroid at the worst-served remaining point
        order = np.argsort(-mind2, kind="stable")
        for r, j in zip(empty, order):
            centers[r] = x[j]
    return centers


def lloyd(x, init_centers, max_iter=300, tol=1e-6):
    """Run Lloyd iterations from ``init_centers``.

    Returns ``(labels, centers, inertia, iterations, history)`` where
    ``history`` holds the inertia after every assignment step.
    """
    x = np.asarray(x, dtype=np.float64)
    centers = np.asarray(init_centers, dtype=np.float64).copy()
    q = centers.shape[0]
    labels, mind2 = _assign(x, centers)
    inertia = float(mind2.sum())
    history = [inertia]
    it = 0
    for it in range(1, max_iter + 1):
        centers = _update_centers(x, labels, mind2, q)
        new_labels, mind2 = _assign(x, centers)
        new_inertia = float(mind2.sum())
        history.append(new_inertia)
        same = np.array_equal(new_labels, labels)
        labels = new_labels
        small = inertia - new_inertia <= tol * inertia
        inertia = new_inertia
        if same or small:
            break
    return labels, centers, inertia, it, history


def kmeans(x, cfg: KMeansConfig) -> KMeansResult:
    """Best-of-``n_init`` k-means with k-means++ seeding.

    Restart ``r`` draws from its own stream spawned from ``cfg.seed``, so the
    result does not depend on the order restarts are evaluated in; ties in
    inertia go to the lower restart index.
    """
    x = as_data_matrix(x)
    n = x.shape[0]
    if cfg.q > n:
        raise ConfigError(f"cannot form q={cfg.q} clusters from n={n} samples")
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.n_init)
    best = None
    for ss in streams:
        rng = np.random.default_rng(ss)
        init = kmeans_plusplus(x, cfg.q, rng)
        run = lloyd(x, init, cfg.max_iter, cfg.tol)
        if best is None or run[2] < best[2]:
            best = run
    labels, centers, inertia, it, history = best
    return KMeansResult(
        AnchorAssignment(labels, cfg.q), centers, inertia, it, tuple(history)
    )


def _check_feature(g):
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 1:
        raise DataError(f"binning feature must be 1-D, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise DataError("binning feature contains non-finite values")
    return g


def equal_width_bins(g, q, lo=None, hi=None) -> AnchorAssignment:
    """Split ``[lo, hi]`` into ``q`` equal bins; bin r holds ((r-1)/q, r/q].

    Labels are 0-based and a value exactly at ``lo`` lands in bin 0.
    ``lo``/``hi`` default to the range of ``g``.
    """
    g = _check_feature(g)
    if q < 1:
        raise ConfigError(f"q must be >= 1, got {q}")
    from_data = lo is None and hi is None
    lo = float(g.min()) if lo is None else float(lo)
    hi = float(g.max()) if hi is None else float(hi)
    if not hi > lo:
        if q == 1 or from_data:
            # a constant feature carries no ordering: one populated bin
            return AnchorAssignment(np.zeros(g.size, dtype=np.int64), q)
        raise ConfigError(f"need hi > lo, got lo={lo}, hi={hi}")
    outside = np.flatnonzero((g < lo) | (g > hi))
    if outside.size:
        i = int(outside[0])
        raise DataError(f"sample {i} has value {g[i]} outside [{lo}, {hi}]")
    scaled = (g - lo) / (hi - lo)
    edges = np.arange(1, q + 1) / q
    labels = np.searchsorted(edges, scaled, side="left")
    return AnchorAssignment(np.minimum(labels, q - 1), q)


def equal_size_bins(g, q) -> AnchorAssignment:
    """Rank-based bins whose sizes differ by at most one.

    The sample with 1-based rank ``o`` (ties broken by sample index) gets
    label ``ceil(o * q / n) - 1``.
    """
    g = _check_feature(g)
    n = g.size
    if q < 1:
        raise ConfigError(f"q must be >= 1, got {q}")
    if q > n:
        raise ConfigError(f"cannot form q={q} bins from n={n} samples")
    order = np.argsort(g, kind="stable")
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(1, n + 1)
    labels = (rank * q + n - 1) // n - 1
    return AnchorAssignment(labels, q)


PARTITION_KINDS = ("kmeans", "equal_width", "equal_size")


class AnchorPartitioner(ClusterMixin, BaseEstimator):
    """Assign samples to ``n_groups`` anchor groups.

    Parameters
    ----------
    n_groups : int
        Number of groups ``q``.
    kind : {"kmeans", "equal_width", "equal_size"}
        k-means on the (optionally target-augmented) features, or binning on a
        single feature column.
    feature : int
        Column used by the binning schemes.
    include_target : bool
        Cluster on ``[X, y]`` instead of ``X`` alone (k-means only).
    n_init, max_iter, tol, random_state
        Passed to k-means.

    Attributes
    ----------
    labels_ : ndarray of shape (n_samples,)
    assignment_ : AnchorAssignment
    cluster_centers_ : ndarray of shape (n_groups, n_features), k-means only
    """

    def __init__(self, n_groups=8, kind="kmeans", feature=0, include_target=False,
                 n_init=10, max_iter=300, tol=1e-6, random_state=0):
        self.n_groups = n_groups
        self.kind = kind
        self.feature = feature
        self.include_target = include_target
        self.n_init = n_init
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def _features(self, X, y):
        if self.include_target:
            if y is None:
                raise ConfigError("include_target=True needs y")
            return np.column_stack([X, np.asarray(y, dtype=np.float64)])
        return X

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if self.kind == "kmeans":
            cfg = KMeansConfig(self.n_groups, self.max_iter, self.tol,
                               int(self.random_state or 0), self.n_init)
            res = kmeans(self._features(X, y), cfg)
            self.assignment_ = res.assignment
            self.cluster_centers_ = res.centroids
            self.inertia_ = res.inertia
        elif self.kind == "equal_width":
            g = X[:, self.feature]
            self.bin_range_ = (float(g.min()), float(g.max()))
            self.assignment_ = equal_width_bins(g, self.n_groups, *self.bin_range_)
        elif self.kind == "equal_size":
            self.assignment_ = equal_size_bins(X[:, self.feature], self.n_groups)
        else:
            raise ConfigError(
                f"unknown partition kind {self.kind!r}; expected one of {PARTITION_KINDS}"
            )
        self.labels_ = np.asarray(self.assignment_.labels)
        return self

    def predict(self, X, y=None):
        """Group labels for new samples (k-means and equal-width only)."""
        check_is_fitted(self, "assignment_")
        X = check_array(X, dtype=np.float64)
        if self.kind == "kmeans":
            return _assign(self._features(X, y), self.cluster_centers_)[0]
        if self.kind == "equal_width":
            lo, hi = self.bin_range_
            if hi == lo:
                return np.zeros(X.shape[0], dtype=np.int64)
            g = np.clip(X[:, self.feature], lo, hi)
            return equal_width_bins(g, self.n_groups, lo, hi).labels.copy()
        raise ConfigError("equal_size bins are rank based and cannot label new data")
