"""``anchoraug`` command line.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 training
diverged for every seed.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import yaml

from ..exceptions import ConfigError, DataError
from .config import ExperimentConfig
from .runner import (
    SCATTER_HEADER,
    append_sweep_csv,
    augment_config_data,
    emit_plot_points,
    run_experiment,
    scatter_rows,
    sweep,
    verify_result,
    write_result,
)

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3

log = logging.getLogger("anchoraug")


def _load_config(args):
    try:
        cfg = ExperimentConfig.load(args.config)
    except OSError as err:
        raise ConfigError(f"cannot read config {args.config}: {err}") from None
    except yaml.YAMLError as err:
        raise ConfigError(f"cannot parse config {args.config}: {err}") from None
    cfg = cfg.with_overrides(args.set)
    if args.seed is not None:
        cfg = cfg.with_overrides([f"seeds=[{args.seed}]"])
    return cfg


def _report(result):
    agg = result.aggregate
    parts = [f"{m}={agg[m]['mean']:.6g}±{agg[m]['sd']:.3g}" for m in ("mse", "rmse", "mape")]
    print(f"{result.config['name']}: " + " ".join(parts)
          + f" (seeds={len(result.per_seed)}, diverged={result.n_diverged})")


def cmd_augment(args):
    cfg = _load_config(args)
    seed = cfg.seeds[0]
    data = augment_config_data(cfg, seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{cfg.name}_augmented"
    (out / f"{stem}.json").write_text(json.dumps(data) + "\n")
    with open(out / f"{stem}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SCATTER_HEADER)
        for row in scatter_rows(data, args.feature):
            w.writerow([row[0], row[1], *(repr(float(v)) for v in row[2:])])
    print(f"wrote {len(data['source_index'])} augmented rows to {out / (stem + '.csv')}")
    return EXIT_OK


def _bench(cfg, args):
    out = Path(args.out)
    existing = out / f"{cfg.name}.json"
    if existing.exists() and not args.force:
        # refuse to silently overwrite results of a different config
        verify_result(existing, cfg)
    result = run_experiment(cfg, threads=args.threads)
    path = write_result(result, out, cfg.name)
    _report(result)
    print(f"results: {path}")
    return EXIT_DIVERGED if result.all_diverged else EXIT_OK


def cmd_fit(args):
    cfg = _load_config(args)
    cfg = cfg.with_overrides([f"seeds=[{cfg.seeds[0]}]"])
    return _bench(cfg, args)


def cmd_bench(args):
    return _bench(_load_config(args), args)


def cmd_sweep(args):
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = Path(args.csv) if args.csv else out / f"{cfg.name}_sweep_{args.parameter}.csv"
    results = sweep(cfg, args.parameter, args.values, threads=args.threads)
    append_sweep_csv(csv_path, args.parameter, list(zip(args.values, results)))
    for r in results:
        write_result(r, out)
        _report(r)
    print(f"sweep rows appended to {csv_path}")
    return EXIT_DIVERGED if all(r.all_diverged for r in results) else EXIT_OK


def cmd_plot_data(args):
    if args.output:
        with open(args.output, "w", newline="") as fh:
            emit_plot_points(args.files, args.kind, fh, args.feature)
    else:
        emit_plot_points(args.files, args.kind, sys.stdout, args.feature)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="anchoraug",
                                description="Anchor data augmentation experiments")
    p.add_argument("--seed", type=int, default=None,
                   help="run this single seed instead of the config's seeds")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--threads", type=int, default=1,
                   help="worker processes for independent seeds")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("config", help="experiment config (YAML or JSON)")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry, e.g. method.alpha=3")
        return sp

    sp = with_config(sub.add_parser("augment", help="write offline ADA samples"))
    sp.add_argument("--feature", type=int, default=0, help="feature column for the scatter CSV")
    sp.set_defaults(func=cmd_augment)

    sp = with_config(sub.add_parser("fit", help="train and evaluate one seed"))
    sp.add_argument("--force", action="store_true")
    sp.set_defaults(func=cmd_fit)

    sp = with_config(sub.add_parser("bench", help="run an experiment over its seeds"))
    sp.add_argument("--force", action="store_true",
                    help="overwrite results produced by a different config")
    sp.set_defaults(func=cmd_bench)

    sp = with_config(sub.add_parser("sweep", help="vary one ADA parameter"))
    sp.add_argument("--parameter", required=True, choices=["alpha", "q", "n_aug"])
    sp.add_argument("--values", required=True, nargs="+", type=float)
    sp.add_argument("--csv", default=None, help="sweep CSV to append to")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("plot-data", help="emit plot-ready CSV")
    sp.add_argument("kind", choices=["fit_curve", "augmented_scatter", "sweep_lines"])
    sp.add_argument("files", nargs="+")
    sp.add_argument("--output", "-o", default=None)
    sp.add_argument("--feature", type=int, default=0)
    sp.set_defaults(func=cmd_plot_data)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "values", None) is not None and args.parameter in ("q", "n_aug"):
        args.values = [int(v) for v in args.values]
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
