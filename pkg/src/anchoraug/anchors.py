"""Anchor matrices and the projection onto their column span.

For a one-hot anchor matrix ``A`` the projection ``A (A^T A)^+ A^T`` replaces
each row with the mean of its group. :class:`CompactProjection` applies it in
O(n) from the group labels; :class:`DenseProjection` materialises the n x n
matrix through a pseudo-inverse and serves as the reference implementation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataError, DimensionMismatchError, LabelRangeError


def as_data_matrix(x, name="x") -> np.ndarray:
    """Return ``x`` as a finite float64 array of shape (n, d), n, d >= 1."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise DataError(f"{name} must be a non-empty 2-D array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DataError(f"{name} contains non-finite entries")
    return x


def as_target_vector(y, n=None, name="y") -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 2 and y.shape[1] == 1:
        y = y[:, 0]
    if y.ndim != 1:
        raise DataError(f"{name} must be 1-D, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise DataError(f"{name} contains non-finite entries")
    if n is not None and y.shape[0] != n:
        raise DimensionMismatchError(f"x has {n} rows but {name} has length {y.shape[0]}")
    return y


@dataclass(frozen=True)
class CenteredDataset:
    """Column-centred predictors and target with the means that were removed."""

    x: np.ndarray
    y: np.ndarray
    x_mean: np.ndarray
    y_mean: float

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def center(self, x, y=None):
        """Centre new data with the stored (training) means."""
        xc = as_data_matrix(x) - self.x_mean
        if y is None:
            return xc
        return xc, as_target_vector(y, xc.shape[0]) - self.y_mean

    def uncenter(self, x=None, y=None):
        x = self.x if x is None else x
        y = self.y if y is None else y
        return x + self.x_mean, y + self.y_mean


def center_dataset(x, y) -> CenteredDataset:
    """Subtract column means from ``x`` and the mean from ``y``."""
    x = as_data_matrix(x)
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != x.shape[0]:
        raise DimensionMismatchError(
            f"x has {x.shape[0]} rows but y has length {y.shape[0]}"
        )
    y = as_target_vector(y, x.shape[0])
    x_mean = x.mean(axis=0)
    y_mean = float(y.mean())
    return CenteredDataset(x - x_mean, y - y_mean, x_mean, y_mean)


@dataclass(frozen=True)
class AnchorAssignment:
    """Partition labels in ``[0, q)`` with optional positive per-sample weights."""

    labels: np.ndarray
    q: int
    weights: np.ndarray | None = None
    _sizes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise ValueError("labels must be 1-D")
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise ValueError("labels must be integers")
        labels = labels.astype(np.int64)
        q = int(self.q)
        if q < 1:
            raise ValueError(f"q must be >= 1, got {q}")
        if labels.size and (labels.min() < 0 or labels.max() >= q):
            bad = int(np.flatnonzero((labels < 0) | (labels >= q))[0])
            raise LabelRangeError(
                f"label {labels[bad]} at index {bad} is outside [0, {q})"
            )
        weights = self.weights
        if weights is not None:
            weights = np.asarray(weights, dtype=np.float64)
            if weights.shape != labels.shape:
                raise DimensionMismatchError(
                    f"weights has length {weights.shape[0]} but labels has {labels.shape[0]}"
                )
            if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
                raise ValueError("weights must be finite and strictly positive")
            weights.setflags(write=False)
        labels.setflags(write=False)
        sizes = np.bincount(labels, minlength=q)
        sizes.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "_sizes", sizes)

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @property
    def group_sizes(self) -> np.ndarray:
        return self._sizes

    @property
    def weighted(self) -> bool:
        return self.weights is not None

    def subset(self, index) -> "AnchorAssignment":
        """Restrict to the rows in ``index``; group sizes are recomputed."""
        index = np.asarray(index)
        w = None if self.weights is None else self.weights[index]
        return AnchorAssignment(self.labels[index], self.q, w)


def build_anchor_matrix(assignment: AnchorAssignment) -> np.ndarray:
    """One-hot anchor matrix, scaled by the square root of weights if present."""
    n = assignment.n
    a = np.zeros((n, assignment.q))
    vals = 1.0 if assignment.weights is None else np.sqrt(assignment.weights)
    a[np.arange(n), assignment.labels] = vals
    return a


def project_group_mean(assignment: AnchorAssignment, m) -> np.ndarray:
    """Replace every row of ``m`` by the mean of the rows sharing its label.

    Group sums are accumulated sample by sample in ascending index order, so
    the result is reproducible bit for bit. Weighted assignments use the
    weighted projection ``sqrt(w_i) * sum_j sqrt(w_j) m_j / W_g``.
    """
    m = np.asarray(m, dtype=np.float64)
    squeeze = m.ndim == 1
    if squeeze:
        m = m[:, None]
    if m.shape[0] != assignment.n:
        raise DimensionMismatchError(
            f"assignment covers {assignment.n} samples but m has {m.shape[0]} rows"
        )
    labels = assignment.labels
    sums = np.zeros((assignment.q, m.shape[1]))
    if assignment.weights is None:
        np.add.at(sums, labels, m)
        # empty groups have no members to read them back, so 0/1 is harmless
        counts = np.maximum(assignment.group_sizes, 1).astype(np.float64)
        out = (sums / counts[:, None])[labels]
    else:
        sw = np.sqrt(assignment.weights)
        np.add.at(sums, labels, sw[:, None] * m)
        wsum = np.zeros(assignment.q)
        np.add.at(wsum, labels, assignment.weights)
        wsum[wsum == 0] = 1.0
        out = sw[:, None] * (sums / wsum[:, None])[labels]
    return out[:, 0] if squeeze else out


class ProjectionOperator:
    """Common interface of the two projection representations."""

    n: int

    def apply(self, m) -> np.ndarray:
        raise NotImplementedError

    def row_sums(self) -> np.ndarray:
        raise NotImplementedError

    def to_dense(self) -> np.ndarray:
        raise NotImplementedError

    def row_sum(self, i: int) -> float:
        if not 0 <= i < self.n:
            raise IndexError(f"row {i} out of range for n={self.n}")
        return float(self.row_sums()[i])


class CompactProjection(ProjectionOperator):
    """Group-mean projection stored as labels and group sizes."""

    def __init__(self, assignment: AnchorAssignment):
        self.assignment = assignment
        self.n = assignment.n

    @property
    def group_sizes(self) -> np.ndarray:
        return self.assignment.group_sizes

    def apply(self, m) -> np.ndarray:
        return project_group_mean(self.assignment, m)

    def row_sums(self) -> np.ndarray:
        a = self.assignment
        if a.weights is None:
            return np.ones(a.n)
        sw = np.sqrt(a.weights)
        sw_sum = np.zeros(a.q)
        np.add.at(sw_sum, a.labels, sw)
        w_sum = np.zeros(a.q)
        np.add.at(w_sum, a.labels, a.weights)
        return sw * sw_sum[a.labels] / w_sum[a.labels]

    def to_dense(self) -> np.ndarray:
        return project_group_mean(self.assignment, np.eye(self.n))


class DenseProjection(ProjectionOperator):
    """Explicit n x n projection matrix."""

    def __init__(self, pi):
        pi = np.asarray(pi, dtype=np.float64)
        if pi.ndim != 2 or pi.shape[0] != pi.shape[1]:
            raise ValueError(f"projection must be square, got shape {pi.shape}")
        self.pi = pi
        self.n = pi.shape[0]

    def apply(self, m) -> np.ndarray:
        m = np.asarray(m, dtype=np.float64)
        if m.shape[0] != self.n:
            raise DimensionMismatchError(
                f"projection is {self.n}x{self.n} but m has {m.shape[0]} rows"
            )
        return self.pi @ m

    def row_sums(self) -> np.ndarray:
        return self.pi.sum(axis=1)

    def to_dense(self) -> np.ndarray:
        return self.pi


def projection_dense(a) -> DenseProjection:
    """``A (A^T A)^+ A^T``; the pseudo-inverse tolerates empty group columns."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("anchor matrix must be 2-D")
    if not np.all(np.isfinite(a)):
        raise ValueError("anchor matrix contains non-finite entries")
    pi = a @ np.linalg.pinv(a.T @ a) @ a.T
    # symmetrise away the rounding asymmetry of the triple product
    return DenseProjection(0.5 * (pi + pi.T))


def projection_compact(assignment: AnchorAssignment) -> CompactProjection:
    return CompactProjection(assignment)


def projection_row_sum(pi: ProjectionOperator, i: int) -> float:
    """Sum of row ``i`` of the projection."""
    return pi.row_sum(i)


def as_projection(pi_or_assignment) -> ProjectionOperator:
    if isinstance(pi_or_assignment, ProjectionOperator):
        return pi_or_assignment
    if isinstance(pi_or_assignment, AnchorAssignment):
        return CompactProjection(pi_or_assignment)
    raise TypeError(
        "expected a ProjectionOperator or AnchorAssignment, got "
        f"{type(pi_or_assignment).__name__}"
    )
