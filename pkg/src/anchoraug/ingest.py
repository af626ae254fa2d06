"""Loading small tabular regression datasets from local files.

Nothing here touches the network. ``scripts/fetch_datasets.py`` documents
where the Airfoil and NO2 files come from.
"""
from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .exceptions import ConfigError, DataError

log = logging.getLogger(__name__)

MISSING_TOKENS = frozenset({"", "?", "na", "nan", "null", "none"})


@dataclass(frozen=True)
class MinMax:
    lo: np.ndarray
    hi: np.ndarray


@dataclass(frozen=True)
class TabularDataset:
    x: np.ndarray
    y: np.ndarray
    feature_names: tuple
    normalization: MinMax | None = None
    missing: np.ndarray | None = field(default=None, repr=False)
    index: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def rows(self) -> np.ndarray:
        return np.arange(self.n) if self.index is None else self.index


def _is_missing(cell):
    return cell.strip().lower() in MISSING_TOKENS


def _read_rows(path, delimiter):
    with open(path, newline="") as fh:
        if delimiter in (None, "whitespace", "\\s+"):
            for lineno, line in enumerate(fh, start=1):
                if line.strip():
                    yield lineno, line.split()
        else:
            reader = csv.reader(fh, delimiter=delimiter)
            for row in reader:
                if row and any(c.strip() for c in row):
                    yield reader.line_num, row


def load_csv(path, target_column, delimiter=",", header=True, names=None) -> TabularDataset:
    """Parse a numeric table; the remaining columns become features.

    ``target_column`` is a column name or a 0-based position. Unparseable or
    empty feature cells are recorded as missing (NaN plus ``missing`` mask)
    for :func:`impute_mean`; the target must be numeric everywhere.
    """
    rows = _read_rows(path, delimiter)
    if header:
        try:
            _, cols = next(rows)
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        cols = [c.strip() for c in cols]
    else:
        cols = None
    if names is not None:
        cols = list(names)
    body = []
    width = None if cols is None else len(cols)
    for lineno, row in rows:
        if width is None:
            width = len(row)
        if len(row) != width:
            raise DataError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
        body.append((lineno, row))
    if not body:
        raise DataError(f"{path}: no data rows")
    if cols is None:
        cols = [f"c{i}" for i in range(width)]
    if isinstance(target_column, (int, np.integer)):
        t = int(target_column)
        if not -width <= t < width:
            raise DataError(f"{path}: target column {t} out of range for {width} columns")
        t %= width
    else:
        if target_column not in cols:
            raise DataError(f"{path}: target column {target_column!r} not in {cols}")
        t = cols.index(target_column)
    values = np.full((len(body), width), np.nan)
    for r, (lineno, row) in enumerate(body):
        for c, cell in enumerate(row):
            if c != t and _is_missing(cell):
                continue
            try:
                values[r, c] = float(cell)
            except ValueError:
                if c == t:
                    raise DataError(
                        f"{path}:{lineno}: non-numeric target value {cell!r}"
                    ) from None
                raise DataError(f"{path}:{lineno}: non-numeric value {cell!r} in column {cols[c]!r}") from None
        if not np.isfinite(values[r, t]):
            raise DataError(f"{path}:{lineno}: non-finite target value")
    feat = [c for c in range(width) if c != t]
    x = values[:, feat]
    missing = np.isnan(x)
    return TabularDataset(x, values[:, t].copy(), tuple(cols[c] for c in feat),
                          None, missing if missing.any() else None)


def impute_mean(ds: TabularDataset) -> TabularDataset:
    """Fill missing feature cells with the mean of the observed column values."""
    if ds.missing is None or not ds.missing.any():
        return ds
    x = ds.x.copy()
    for c in np.flatnonzero(ds.missing.any(axis=0)):
        obs = ~ds.missing[:, c]
        if not obs.any():
            raise DataError(f"column {ds.feature_names[c]!r} has no observed values")
        x[~obs, c] = x[obs, c].mean()
    return replace(ds, x=x, missing=None)


def minmax_normalize(ds: TabularDataset) -> TabularDataset:
    """Scale every feature to [0, 1]; constant columns become 0 with a warning."""
    if ds.missing is not None and ds.missing.any():
        raise DataError("impute missing values before normalising")
    lo = ds.x.min(axis=0)
    hi = ds.x.max(axis=0)
    span = hi - lo
    const = span == 0
    for c in np.flatnonzero(const):
        log.warning("feature %r is constant; mapped to 0", ds.feature_names[c])
    x = (ds.x - lo) / np.where(const, 1.0, span)
    # rounding can leave values a hair outside the unit interval
    np.clip(x, 0.0, 1.0, out=x)
    return replace(ds, x=x, normalization=MinMax(lo, hi))


def minmax_inverse(ds: TabularDataset) -> TabularDataset:
    if ds.normalization is None:
        return ds
    lo, hi = ds.normalization.lo, ds.normalization.hi
    span = np.where(hi == lo, 0.0, hi - lo)
    return replace(ds, x=ds.x * span + lo, normalization=None)


@dataclass(frozen=True)
class SplitSpec:
    """Train/validation/test sizes as counts or as fractions of ``n``."""

    train: float
    val: float
    test: float
    seed: int = 0
    ordered: bool = False

    def sizes(self, n):
        parts = (self.train, self.val, self.test)
        if any(p < 0 for p in parts):
            raise ConfigError(f"split sizes must be non-negative, got {parts}")
        if all(float(p) == int(p) and p >= 1 or p == 0 for p in parts) and sum(parts) > 1:
            sizes = tuple(int(p) for p in parts)
            if sum(sizes) != n:
                raise ConfigError(f"split counts {sizes} sum to {sum(sizes)}, dataset has {n} rows")
            return sizes
        total = sum(parts)
        if total > 1 + 1e-12:
            raise ConfigError(f"split fractions sum to {total} > 1")
        n_train = int(np.floor(self.train * n))
        n_val = int(np.floor(self.val * n))
        if abs(total - 1) <= 1e-12:
            n_test = n - n_train - n_val
        else:
            n_test = int(np.floor(self.test * n))
        return n_train, n_val, n_test


def split(ds: TabularDataset, spec: SplitSpec):
    """Disjoint train/val/test subsets, shuffled with ``spec.seed`` unless ordered."""
    n = ds.n
    n_train, n_val, n_test = spec.sizes(n)
    order = np.arange(n) if spec.ordered else np.random.default_rng(spec.seed).permutation(n)
    cuts = np.cumsum([0, n_train, n_val, n_test])
    rows = ds.rows()
    out = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        idx = order[a:b]
        out.append(replace(
            ds, x=ds.x[idx], y=ds.y[idx], index=rows[idx],
            missing=None if ds.missing is None else ds.missing[idx],
        ))
    return tuple(out)


@dataclass(frozen=True)
class DatasetDescriptor:
    """Where a dataset lives and how to prepare it.

    Read from a YAML/JSON file with keys ``path``, ``target_column`` and
    optionally ``delimiter``, ``header``, ``names``, ``normalize``
    (``"minmax"`` or ``null``) and ``split`` (``train``, ``val``, ``test``,
    ``seed``, ``ordered``). A relative ``path`` is resolved against the
    descriptor's directory; ``data_dir``, when given, replaces the directory
    part of ``path`` and keeps the file name.
    """

    path: str
    target_column: object
    delimiter: str | None = ","
    header: bool = True
    names: tuple | None = None
    normalize: str | None = "minmax"
    split: SplitSpec | None = None
    name: str = ""

    @classmethod
    def from_dict(cls, d, base_dir=None, data_dir=None):
        d = dict(d)
        unknown = set(d) - {"path", "target_column", "delimiter", "header", "names",
                            "normalize", "split", "name"}
        if unknown:
            raise ConfigError(f"unknown dataset descriptor keys: {sorted(unknown)}")
        for key in ("path", "target_column"):
            if key not in d:
                raise ConfigError(f"dataset descriptor needs {key!r}")
        path = Path(os.path.expandvars(str(d["path"])))
        if data_dir is not None:
            path = Path(data_dir) / path.name
        elif not path.is_absolute() and base_dir is not None:
            path = (Path(base_dir) / path).resolve()
        sp = d.get("split")
        return cls(
            path=str(path),
            target_column=d["target_column"],
            delimiter=d.get("delimiter", ","),
            header=bool(d.get("header", True)),
            names=tuple(d["names"]) if d.get("names") else None,
            normalize=d.get("normalize", "minmax"),
            split=SplitSpec(**sp) if sp else None,
            name=d.get("name", path.stem),
        )

    @classmethod
    def load(cls, path, data_dir=None):
        with open(path) as fh:
            d = yaml.safe_load(fh)
        return cls.from_dict(d, base_dir=Path(path).parent, data_dir=data_dir)

    def to_dict(self):
        out = {"name": self.name, "path": self.path, "target_column": self.target_column,
               "delimiter": self.delimiter, "header": self.header,
               "names": list(self.names) if self.names else None,
               "normalize": self.normalize}
        if self.split is not None:
            s = self.split
            out["split"] = {"train": s.train, "val": s.val, "test": s.test,
                            "seed": s.seed, "ordered": s.ordered}
        return out


def load_descriptor_dataset(desc: DatasetDescriptor) -> TabularDataset:
    """Load, impute and (optionally) normalise the dataset a descriptor points to."""
    if not Path(desc.path).exists():
        raise DataError(f"dataset file not found: {desc.path}")
    ds = impute_mean(load_csv(desc.path, desc.target_column, desc.delimiter,
                              desc.header, desc.names))
    if desc.normalize == "minmax":
        ds = minmax_normalize(ds)
    elif desc.normalize not in (None, "none"):
        raise ConfigError(f"unknown normalisation {desc.normalize!r}")
    return ds
