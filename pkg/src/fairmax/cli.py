"""``fairmax <synth|train|evaluate|compare|plot-data> [flags]``

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numerical divergence.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import artifacts, data
from .config import dump_config, load_config, parse_overrides, read_config_text
from .errors import ConfigError, DataError, FairmaxError
from .experiment import audit, median_summary, run_algorithm, score_table
from .metrics import evaluate
from .train import ALGORITHMS, pretrain_classifier

log = logging.getLogger("fairmax")

SUMMARY_COLUMNS = ("algo", "n_seeds", "accuracy_train", "statistical_rate_train",
                   "accuracy_test", "statistical_rate_test", "adversary_auc",
                   "passes_80_rule_train", "passes_80_rule_test")


def _default_seed() -> int:
    raw = os.environ.get("FAIRMAX_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"FAIRMAX_SEED is not an integer: {raw!r}") from None


def _add_data_source(p: argparse.ArgumentParser):
    g = p.add_argument_group("data source (one of --data / --csv)")
    g.add_argument("--data", help="dataset directory written by `fairmax synth`")
    g.add_argument("--csv", help="raw CSV file with header row")
    g.add_argument("--label-col", default="label")
    g.add_argument("--sensitive-col", default="sensitive")
    g.add_argument("--positive-label", default="1")
    g.add_argument("--protected-value", default="1")


def _add_config(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable)")
    p.add_argument("--lambda", dest="lam", help="adversary weight in the alternating trainer")
    p.add_argument("--model", choices=("logistic", "mlp"))
    p.add_argument("--epochs")


def _config_from_args(args):
    """File values, then flag overrides; seed falls back to FAIRMAX_SEED."""
    pairs = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        pairs[k.strip()] = v.strip()
    for key, attr in (("lambda", "lam"), ("model", "model"), ("epochs", "epochs"),
                      ("seed", "seed")):
        if getattr(args, attr, None) is not None:
            pairs[key] = str(getattr(args, attr))
    overrides = parse_overrides(pairs)
    file_values = {}
    if args.config:
        if not Path(args.config).is_file():
            raise ConfigError(f"config file not found: {args.config}")
        file_values = read_config_text(Path(args.config).read_text(), args.config)
    if "seed" not in overrides and "seed" not in file_values:
        overrides["seed"] = _default_seed()
    return load_config(args.config, **overrides)


def _load_source(args):
    if bool(args.data) == bool(args.csv):
        raise ConfigError("give exactly one of --data or --csv")
    if args.data:
        return data.load_dataset(args.data), data.fingerprint(args.data), str(Path(args.data).resolve())
    table = data.load_csv(args.csv, args.label_col, args.sensitive_col,
                          args.positive_label, args.protected_value)
    fp = hashlib.sha256(Path(args.csv).read_bytes()).hexdigest()
    return data.one_hot_encode(table), fp, str(Path(args.csv).resolve())


# -- commands -----------------------------------------------------------------

def cmd_synth(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    ds = data.synth_biased(args.n, args.bias, args.features, seed)
    out = Path(args.out)
    data.save_dataset(ds, out, seed=seed,
                      provenance=f"synth_biased(n={args.n}, bias={args.bias}, "
                                 f"n_features={args.features}, seed={seed})")
    artifacts.RunManifest("synth", None, data.fingerprint(out), seed, str(out),
                          data_source="synthetic").write(out)
    cfg = load_config(seed=seed)
    sp = data.split(ds, cfg.test_fraction, seed)
    clf = pretrain_classifier(sp.train, cfg)
    adv, reports = audit(clf, sp, cfg)
    print(f"wrote {out} ({ds.n_samples} rows, {ds.n_features} features)")
    print(f"sanity: baseline logistic statistical_rate = "
          f"{reports['test'].statistical_rate:.1f} (test split)")
    return 0


def _train_into(out: Path, algo: str, ds, cfg, fp: str, source: str, config_path) -> dict:
    artifacts.RunManifest("train", str(config_path) if config_path else None, fp, cfg.seed,
                          str(out), data_source=source, algo=algo).write(out)
    (out / "config.txt").write_text(dump_config(cfg))
    sp = data.split(ds, cfg.test_fraction, cfg.seed)
    outcome = run_algorithm(algo, sp, cfg)
    artifacts.write_result(outcome.result, out, outcome.reports, outcome.audit_adv,
                           score_table(outcome.result.selected_params, sp))
    return outcome.summary() | {"reports": outcome.reports}


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    ds, fp, source = _load_source(args)
    summary = _train_into(Path(args.out), args.algo, ds, cfg, fp, source, args.config)
    print(f"algo = {args.algo}  selected epoch = {summary['selected_epoch']}")
    for label, rep in summary["reports"].items():
        print(rep.to_text(label), end="")
    return 0


def cmd_evaluate(args) -> int:
    run = Path(args.run)
    manifest = artifacts.RunManifest.read(run)
    cfg = load_config(run / "config.txt")
    if args.data or args.csv:
        ds, _, _ = _load_source(args)
    else:
        src = Path(manifest.data_source)
        ds = data.load_dataset(src) if src.is_dir() else data.one_hot_encode(
            data.load_csv(src, args.label_col, args.sensitive_col,
                          args.positive_label, args.protected_value))
    sp = data.split(ds, cfg.test_fraction, cfg.seed)
    clf, adv = artifacts.load_run_params(run, args.which)
    for label, part in (("train", sp.train), ("test", sp.test)):
        print(evaluate(clf, adv, part).to_text(label), end="")
    return 0


def _compare_cell(job):
    out, algo, ds, cfg, fp, source, config_path = job
    s = _train_into(out, algo, ds, cfg, fp, source, config_path)
    s.pop("reports")
    return s


def cmd_compare(args) -> int:
    try:
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"--seeds must be a comma-separated integer list, got {args.seeds!r}")
    if not seeds:
        raise ConfigError("--seeds is empty")
    base = _config_from_args(args)
    ds, fp, source = _load_source(args)
    out = Path(args.out)
    artifacts.RunManifest("compare", args.config, fp, seeds[0], str(out),
                          data_source=source).write(out)
    jobs = [(out / f"seed_{s}" / algo, algo, ds, base.replace(seed=s), fp, source, args.config)
            for s in seeds for algo in ALGORITHMS]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(_compare_cell, jobs))
    else:
        rows = [_compare_cell(j) for j in jobs]

    with (out / "runs.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    table = []
    for algo in ALGORITHMS:
        med = median_summary([r for r in rows if r["algo"] == algo])
        table.append({"algo": algo, "n_seeds": len(seeds), **med,
                      "passes_80_rule_train": med["statistical_rate_train"] >= 80,
                      "passes_80_rule_test": med["statistical_rate_test"] >= 80})
    with (out / "compare.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(table)
    print(f"{'algo':14s} {'acc(tr)':>8s} {'rate(tr)':>9s} {'acc(te)':>8s} {'rate(te)':>9s} "
          f"{'adv_auc':>8s}  80%")
    for r in table:
        mark = "yes" if r["passes_80_rule_train"] else "no"
        print(f"{r['algo']:14s} {r['accuracy_train']:8.3f} {r['statistical_rate_train']:9.1f} "
              f"{r['accuracy_test']:8.3f} {r['statistical_rate_test']:9.1f} "
              f"{r['adversary_auc']:8.3f}  {mark}")
    return 0


def cmd_plot_data(args) -> int:
    run = Path(args.run)
    artifacts.RunManifest.read(run)
    trace_path = run / "trace.csv"
    if not trace_path.is_file():
        raise DataError(f"{run}: missing trace.csv (incomplete run?)")
    trace = artifacts.read_trace(trace_path)
    scores, z = artifacts.read_scores(run, args.split)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    edges, h1, h0 = artifacts.group_histograms(scores, z)
    artifacts.write_histogram_csv(out / "histogram.csv", edges, h1, h0)
    artifacts.write_metrics_csv(out / "metrics.csv", trace)
    (out / "plot.svg").write_text(artifacts.render_svg(edges, h1, h0, trace, title=str(run)))
    print(f"wrote histogram.csv, metrics.csv, plot.svg to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairmax", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a biased synthetic dataset")
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--bias", type=float, default=0.8)
    p.add_argument("--features", type=int, default=8)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train one algorithm")
    p.add_argument("--algo", required=True, choices=sorted(ALGORITHMS))
    _add_data_source(p)
    _add_config(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="re-evaluate a finished run")
    p.add_argument("--run", required=True)
    p.add_argument("--which", default="selected", choices=("selected", "final", "pretrained"))
    _add_data_source(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="run every algorithm over several seeds")
    _add_data_source(p)
    _add_config(p)
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.set_defaults(seed=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("plot-data", help="emit histogram/metric CSVs and an SVG for a run")
    p.add_argument("--run", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", default="test", choices=("train", "test", "all"))
    p.set_defaults(func=cmd_plot_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FairmaxError as exc:
        print(f"fairmax: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"fairmax: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
