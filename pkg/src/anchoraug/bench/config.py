"""Experiment configuration: parsing, validation, overrides and hashing."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from ..exceptions import ConfigError

DATASET_KINDS = ("cosine", "linear_scm", "csv")
METHOD_KINDS = ("none", "ada", "cmixup", "mixup")
MODEL_KINDS = ("ols", "ridge", "anchor", "mlp")

DATASET_DEFAULTS = {
    "cosine": {"n": 20, "x_lo": -9.42477796076938, "x_hi": 9.42477796076938,
               "angular_freq": 1.0, "noise_sd": 0.1, "grid": False,
               "n_val": 100, "n_test": 1000},
    "linear_scm": {"n": 20, "d": 10, "anchor_shift_strength": 1.0, "noise_sd": 1.0,
                   "q": 4, "n_val": 100, "n_test": 1000},
    "csv": {"descriptor": None, "data_dir": None},
}
METHOD_DEFAULTS = {
    "none": {},
    "ada": {"alpha": 2.0, "q": 8, "partition": "kmeans", "feature": 0,
            "include_target": False, "mode": "minibatch", "n_aug": 10},
    "cmixup": {"bandwidth": 1.0, "beta_param": 2.0},
    "mixup": {"beta_param": 2.0},
}
MODEL_DEFAULTS = {
    "ols": {},
    "ridge": {"lam": 1.0},
    "anchor": {"gamma": 2.0, "q": 8},
    "mlp": {"layer_widths": [128, 128], "activation": "relu", "learning_rate": 1e-3,
            "epochs": 100, "batch_size": 32, "optimizer": "adam"},
}


def _section(raw, kinds, defaults, what):
    if raw is None:
        raw = {}
    if isinstance(raw, str):
        raw = {"kind": raw}
    raw = dict(raw)
    kind = raw.pop("kind", None)
    if kind not in kinds:
        raise ConfigError(f"{what}.kind must be one of {kinds}, got {kind!r}")
    params = copy.deepcopy(defaults[kind])
    unknown = set(raw) - set(params)
    if unknown:
        raise ConfigError(f"unknown {what} options for {kind!r}: {sorted(unknown)}")
    params.update(raw)
    return kind, params


@dataclass
class ExperimentConfig:
    """One experiment: dataset x augmentation method x model, over seeds."""

    dataset: dict
    method: dict
    model: dict
    seeds: list = field(default_factory=lambda: [0])
    name: str = "experiment"

    @classmethod
    def from_dict(cls, d, base_dir=None):
        d = dict(d)
        unknown = set(d) - {"dataset", "method", "model", "seeds", "name"}
        if unknown:
            raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
        dkind, dparams = _section(d.get("dataset"), DATASET_KINDS, DATASET_DEFAULTS, "dataset")
        mkind, mparams = _section(d.get("method", "none"), METHOD_KINDS, METHOD_DEFAULTS, "method")
        okind, oparams = _section(d.get("model"), MODEL_KINDS, MODEL_DEFAULTS, "model")
        if dkind == "csv":
            desc = dparams.get("descriptor")
            if not desc:
                raise ConfigError("dataset.kind csv needs a 'descriptor' path")
            if base_dir is not None and not Path(desc).is_absolute():
                candidate = Path(base_dir) / desc
                if candidate.exists():
                    dparams["descriptor"] = str(candidate)
        seeds = d.get("seeds", [0])
        if isinstance(seeds, int):
            seeds = [seeds]
        seeds = [int(s) for s in seeds]
        if not seeds:
            raise ConfigError("seeds must be non-empty")
        cfg = cls({"kind": dkind, **dparams}, {"kind": mkind, **mparams},
                  {"kind": okind, **oparams}, seeds, str(d.get("name", "experiment")))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            d = yaml.safe_load(fh)
        if not isinstance(d, dict):
            raise ConfigError(f"{path}: expected a mapping at the top level")
        return cls.from_dict(d, base_dir=Path(path).parent)

    def validate(self):
        m, o = self.method, self.model
        if m["kind"] in ("cmixup", "mixup") and o["kind"] != "mlp":
            raise ConfigError(f"method {m['kind']!r} is a minibatch method and needs model mlp")
        if m["kind"] == "ada":
            if m["mode"] not in ("offline", "minibatch"):
                raise ConfigError(f"method.mode must be offline or minibatch, got {m['mode']!r}")
            if m["mode"] == "minibatch" and o["kind"] != "mlp":
                raise ConfigError("minibatch ADA needs model mlp; use mode offline for linear models")
            if not float(m["alpha"]) > 1:
                raise ConfigError(f"method.alpha must be > 1, got {m['alpha']}")
            if m["mode"] == "offline" and (int(m["n_aug"]) < 2 or int(m["n_aug"]) % 2):
                raise ConfigError(f"method.n_aug must be even and >= 2, got {m['n_aug']}")
        return self

    def to_dict(self):
        return asdict(self)

    def with_overrides(self, assignments):
        """Apply ``section.key=value`` overrides; values are parsed as YAML."""
        d = self.to_dict()
        kinds = {sec: d[sec]["kind"] for sec in ("dataset", "method", "model")}
        for item in assignments or ():
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not of the form key=value")
            key, raw = item.split("=", 1)
            value = yaml.safe_load(raw)
            parts = key.strip().split(".")
            node = d
            for p in parts[:-1]:
                if not isinstance(node.get(p), dict):
                    raise ConfigError(f"override {key!r}: {p!r} is not a section")
                node = node[p]
            node[parts[-1]] = value
        defaults = {"dataset": DATASET_DEFAULTS, "method": METHOD_DEFAULTS,
                    "model": MODEL_DEFAULTS}
        for sec, old_kind in kinds.items():
            new_kind = d[sec]["kind"]
            if new_kind != old_kind and new_kind in defaults[sec]:
                # options of the previous kind do not carry over
                keep = set(defaults[sec][new_kind]) | {"kind"}
                d[sec] = {k: v for k, v in d[sec].items() if k in keep}
        return ExperimentConfig.from_dict(d)

    def hash(self) -> str:
        return config_hash(self.to_dict())


def config_hash(d) -> str:
    """SHA-256 of the canonical JSON form (sorted keys, no whitespace)."""
    blob = json.dumps(d, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()
