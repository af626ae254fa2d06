"""Run experiments, sweeps and plot-data extraction."""
from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from ..augment import AnchorAugmenter, CMixupAugmenter, MixupAugmenter, gamma_grid
from ..datagen import CosineConfig, gen_cosine, gen_linear_scm
from ..exceptions import ConfigError, ConfigHashMismatchError, TrainingDivergedError
from ..ingest import DatasetDescriptor, SplitSpec, load_descriptor_dataset, split
from ..partitioning import AnchorPartitioner
from ..regressors import MLPRegressor, fit_anchor_regression, fit_ols, fit_ridge, metrics
from .config import ExperimentConfig, config_hash

log = logging.getLogger(__name__)

METRICS = ("mse", "rmse", "mape")
SWEEP_HEADER = ["parameter", "value", "seed", "metric", "metric_value"]
SCATTER_HEADER = ["source_index", "group", "gamma", "x", "y", "x_aug", "y_aug"]
SWEEP_PARAMETERS = {"alpha": "alpha", "q": "q", "n_aug": "n_aug"}


def _derived_seed(seed, stream):
    return int(np.random.SeedSequence([seed, stream]).generate_state(1)[0])


def load_splits(dataset: dict, seed: int):
    """Return ``(train, val, test)`` as ``(x, y)`` pairs for one seed."""
    kind = dataset["kind"]
    if kind == "cosine":
        base = {k: dataset[k] for k in ("x_lo", "x_hi", "angular_freq", "noise_sd")}
        train = gen_cosine(CosineConfig(n=dataset["n"], grid=dataset["grid"], seed=seed, **base))
        held = gen_cosine(CosineConfig(n=dataset["n_val"] + dataset["n_test"],
                                       seed=_derived_seed(seed, 1), **base))
        nv = dataset["n_val"]
        return train, (held[0][:nv], held[1][:nv]), (held[0][nv:], held[1][nv:])
    if kind == "linear_scm":
        n, nv, nt = dataset["n"], dataset["n_val"], dataset["n_test"]
        x, y, _, _ = gen_linear_scm(n + nv + nt, dataset["d"], dataset["anchor_shift_strength"],
                                    dataset["noise_sd"], seed, dataset["q"])
        cut = np.cumsum([0, n, nv, nt])
        return tuple((x[a:b], y[a:b]) for a, b in zip(cut[:-1], cut[1:]))
    if kind == "csv":
        desc = DatasetDescriptor.load(dataset["descriptor"], data_dir=dataset.get("data_dir"))
        ds = load_descriptor_dataset(desc)
        spec = desc.split or SplitSpec(0.5, 0.25, 0.25)
        return tuple((part.x, part.y) for part in split(ds, spec))
    raise ConfigError(f"unknown dataset kind {kind!r}")


def _make_augmenter(method, seed):
    kind = method["kind"]
    if kind == "ada":
        return AnchorAugmenter(method["alpha"], method["q"], method["n_aug"],
                               method["partition"], method["feature"],
                               method["include_target"], random_state=seed)
    if kind == "cmixup":
        return CMixupAugmenter(method["bandwidth"], method["beta_param"])
    if kind == "mixup":
        return MixupAugmenter(method["beta_param"])
    return None


def _ridge_by_validation(x, y, lam, val):
    """Ridge with a fixed ``lam``, or the validation-best of a list of them."""
    if not isinstance(lam, (list, tuple)):
        return fit_ridge(x, y, float(lam)), float(lam)
    if not lam:
        raise ConfigError("model.lam list is empty")
    if not len(val[1]):
        raise ConfigError("selecting model.lam from a list needs a validation split")
    best = None
    for value in lam:
        fit = fit_ridge(x, y, float(value))
        err = metrics(fit.predict(val[0]), val[1])["mse"]
        # first value wins ties, so list order is the tie-break
        if best is None or err < best[0]:
            best = (err, fit, float(value))
    return best[1], best[2]


def _fit_predict(cfg: ExperimentConfig, seed, train, val, test):
    method, model = cfg.method, cfg.model
    xtr, ytr = train
    info = {}
    augmenter = _make_augmenter(method, seed)
    if method["kind"] == "ada" and method["mode"] == "offline":
        xtr, ytr = augmenter.fit_resample(xtr, ytr)
        augmenter = None
    kind = model["kind"]
    if kind == "mlp":
        est = MLPRegressor(tuple(model["layer_widths"]), model["activation"],
                           float(model["learning_rate"]), int(model["epochs"]),
                           int(model["batch_size"]), model["optimizer"], augmenter,
                           random_state=seed)
        est.fit(xtr, ytr, *val)
        info["best_epoch"] = est.report_.best_epoch
        info["val_mse"] = est.report_.final_val_mse
        predict = est.predict
    else:
        if kind == "ols":
            lin = fit_ols(xtr, ytr)
        elif kind == "ridge":
            lin, info["lam"] = _ridge_by_validation(xtr, ytr, model["lam"], val)
        else:
            part = AnchorPartitioner(model["q"], random_state=seed).fit(xtr)
            lin = fit_anchor_regression(xtr, ytr, part.assignment_, float(model["gamma"]))
        predict = lin.predict
        info["val_mse"] = metrics(predict(val[0]), val[1])["mse"] if len(val[1]) else float("nan")
    return predict, info


def run_seed(cfg: ExperimentConfig, seed: int, record_curve=True):
    """Train and evaluate one seed; single threaded BLAS for reproducibility."""
    with threadpool_limits(limits=1):
        start = time.perf_counter()
        train, val, test = load_splits(cfg.dataset, seed)
        row = {"seed": seed, "diverged": False}
        try:
            predict, info = _fit_predict(cfg, seed, train, val, test)
        except TrainingDivergedError as err:
            log.warning("seed %d diverged: %s", seed, err)
            row.update({m: float("nan") for m in METRICS}, diverged=True)
            return row, None, time.perf_counter() - start
        m = metrics(predict(test[0]), test[1])
        row.update({k: m[k] for k in METRICS}, **info)
        curve = None
        if record_curve and train[0].shape[1] == 1:
            grid = np.linspace(train[0].min(), train[0].max(), 200)[:, None]
            curve = {"x": grid[:, 0].tolist(), "pred": predict(grid).tolist()}
        return row, curve, time.perf_counter() - start


def _run_seed_star(args):
    return run_seed(*args)


@dataclass
class ExperimentResult:
    config: dict
    config_hash: str
    per_seed: list
    aggregate: dict
    n_diverged: int
    curves: dict = field(default_factory=dict)
    wall_times: dict = field(default_factory=dict)

    @property
    def all_diverged(self):
        return self.n_diverged == len(self.per_seed)

    def to_json(self):
        """Deterministic part of the result; wall times are kept separately."""
        return {"config": self.config, "config_hash": self.config_hash,
                "per_seed": self.per_seed, "aggregate": self.aggregate,
                "n_diverged": self.n_diverged, "curves": self.curves}


def aggregate(rows):
    ok = [r for r in rows if not r["diverged"]]
    out = {}
    for m in METRICS:
        vals = np.array([r[m] for r in ok], dtype=np.float64)
        if vals.size == 0:
            out[m] = {"mean": float("nan"), "sd": float("nan"), "n": 0}
            continue
        sd = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
        out[m] = {"mean": float(vals.mean()), "sd": sd, "n": int(vals.size)}
    return out


def run_experiment(cfg: ExperimentConfig, threads=1, record_curve=True) -> ExperimentResult:
    """Run every seed of ``cfg`` and aggregate over the non-diverged ones.

    With ``threads > 1`` seeds run in separate processes, each single
    threaded; results are ordered by seed either way.
    """
    seeds = sorted(cfg.seeds)
    if threads > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(_run_seed_star, [(cfg, s, record_curve) for s in seeds]))
    else:
        outs = [run_seed(cfg, s, record_curve) for s in seeds]
    rows = [o[0] for o in outs]
    curves = {str(s): o[1] for s, o in zip(seeds, outs) if o[1] is not None}
    times = {str(s): o[2] for s, o in zip(seeds, outs)}
    return ExperimentResult(cfg.to_dict(), cfg.hash(), rows, aggregate(rows),
                            sum(r["diverged"] for r in rows), curves, times)


def write_result(result: ExperimentResult, out_dir, name=None):
    """Write ``<name>.json`` (deterministic), ``<name>.csv`` and ``<name>.timing.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = name or result.config.get("name", "experiment")
    path = out_dir / f"{name}.json"
    path.write_text(json.dumps(result.to_json(), indent=1, sort_keys=True) + "\n")
    with open(out_dir / f"{name}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", *METRICS, "diverged"])
        for r in result.per_seed:
            w.writerow([r["seed"], *(repr(r[m]) for m in METRICS), int(r["diverged"])])
    (out_dir / f"{name}.timing.json").write_text(json.dumps(result.wall_times, indent=1) + "\n")
    return path


def read_result(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def verify_result(path, cfg: ExperimentConfig):
    """Raise if the results file at ``path`` was produced by a different config."""
    data = read_result(path)
    stored = data.get("config_hash")
    recomputed = config_hash(data.get("config", {}))
    if stored != recomputed:
        raise ConfigHashMismatchError(
            f"{path}: config hash mismatch, stored hash {stored} does not match its embedded config ({recomputed})"
        )
    if stored != cfg.hash():
        raise ConfigHashMismatchError(
            f"{path}: config hash mismatch, results were produced by config {stored}, current config is {cfg.hash()}"
        )
    return data


def _with_method_param(cfg: ExperimentConfig, parameter, value):
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"sweep parameter must be one of {sorted(SWEEP_PARAMETERS)}")
    if cfg.method["kind"] != "ada":
        raise ConfigError("sweeps vary ADA parameters and need method.kind ada")
    d = cfg.to_dict()
    if parameter == "n_aug" and d["method"]["mode"] != "offline":
        raise ConfigError("an n_aug sweep needs method.mode offline")
    v = float(value) if parameter == "alpha" else int(value)
    d["method"][SWEEP_PARAMETERS[parameter]] = v
    d["name"] = f"{cfg.name}_{parameter}_{value}"
    return ExperimentConfig.from_dict(d)


def sweep(cfg: ExperimentConfig, parameter, values, threads=1, csv_path=None):
    """One experiment per value; optionally append tidy rows to ``csv_path``."""
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    results = []
    for v in values:
        res = run_experiment(_with_method_param(cfg, parameter, v), threads, record_curve=False)
        results.append((v, res))
    if csv_path is not None:
        append_sweep_csv(csv_path, parameter, results)
    return [r for _, r in results]


def sweep_rows(parameter, results):
    for value, res in results:
        for r in res.per_seed:
            for m in METRICS:
                yield [parameter, value, r["seed"], m, repr(float(r[m]))]


def append_sweep_csv(path, parameter, results):
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(SWEEP_HEADER)
        w.writerows(sweep_rows(parameter, results))


def augment_config_data(cfg: ExperimentConfig, seed):
    """Offline ADA of a config's training split, with per-row provenance."""
    if cfg.method["kind"] != "ada":
        raise ConfigError("augment needs method.kind ada")
    m = cfg.method
    (x, y), _, _ = load_splits(cfg.dataset, seed)
    aug = AnchorAugmenter(m["alpha"], m["q"], m["n_aug"], m["partition"], m["feature"],
                          m["include_target"], random_state=seed)
    x_aug, y_aug, src, gam = aug.fit_resample(x, y, return_meta=True)
    labels = aug.assignment_.labels
    return {
        "config": cfg.to_dict(), "config_hash": cfg.hash(), "seed": seed,
        "gammas": gamma_grid(m["alpha"], m["n_aug"]).values.tolist(),
        "x": x.tolist(), "y": y.tolist(), "labels": labels.tolist(),
        "source_index": src.tolist(), "gamma": gam.tolist(),
        "x_aug": x_aug.tolist(), "y_aug": y_aug.tolist(),
    }


def scatter_rows(aug: dict, feature=0):
    x = np.asarray(aug["x"])
    y = np.asarray(aug["y"])
    x_aug = np.asarray(aug["x_aug"])
    labels = aug["labels"]
    for k, (i, g) in enumerate(zip(aug["source_index"], aug["gamma"])):
        yield [i, labels[i], g, x[i, feature], y[i], x_aug[k, feature], aug["y_aug"][k]]


def emit_plot_points(result_files, kind, out, feature=0):
    """Write long-format plot data for ``kind`` to the open text stream ``out``.

    ``fit_curve`` reads experiment results, ``augmented_scatter`` reads
    ``augment`` outputs and ``sweep_lines`` reads sweep CSVs.
    """
    w = csv.writer(out)
    if kind == "fit_curve":
        w.writerow(["result", "seed", "x", "pred"])
        for path in result_files:
            data = read_result(path)
            name = data["config"].get("name", Path(path).stem)
            for seed, curve in sorted(data.get("curves", {}).items(), key=lambda t: int(t[0])):
                for xv, pv in zip(curve["x"], curve["pred"]):
                    w.writerow([name, seed, repr(xv), repr(pv)])
    elif kind == "augmented_scatter":
        w.writerow(SCATTER_HEADER)
        for path in result_files:
            for row in scatter_rows(read_result(path), feature):
                w.writerow([row[0], row[1], *(repr(float(v)) for v in row[2:])])
    elif kind == "sweep_lines":
        w.writerow(["parameter", "value", "metric", "mean", "sd", "n"])
        groups = {}
        for path in result_files:
            with open(path, newline="") as fh:
                for r in csv.DictReader(fh):
                    key = (r["parameter"], r["value"], r["metric"])
                    groups.setdefault(key, []).append(float(r["metric_value"]))
        for (p, v, m), vals in groups.items():
            arr = np.array([a for a in vals if np.isfinite(a)])
            sd = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
            mean = float(arr.mean()) if arr.size else float("nan")
            w.writerow([p, v, m, repr(mean), repr(sd), arr.size])
    else:
        raise ConfigError(
            f"plot kind must be fit_curve, augmented_scatter or sweep_lines, got {kind!r}"
        )
