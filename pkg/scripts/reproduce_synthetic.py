"""Median metrics of every trainer over several seeds on the biased synthetic family.

    python3 scripts/reproduce_synthetic.py --seeds 0 1 2 3 4 --out runs/repro.csv
"""
import argparse
import csv

from fairmax.config import load_config
from fairmax.data import split, synth_biased
from fairmax.experiment import audit, median_summary, run_algorithm
from fairmax.train import ALGORITHMS, pretrain_classifier

COLUMNS = ("accuracy_train", "statistical_rate_train", "accuracy_test",
           "statistical_rate_test", "adversary_auc")


def pretrained_row(sp, cfg):
    clf = pretrain_classifier(sp.train, cfg)
    _, rep = audit(clf, sp, cfg)
    return {"algo": "pretrained", "seed": cfg.seed,
            "accuracy_train": rep["train"].accuracy,
            "statistical_rate_train": rep["train"].statistical_rate,
            "accuracy_test": rep["test"].accuracy,
            "statistical_rate_test": rep["test"].statistical_rate,
            "adversary_auc": rep["test"].adversary_auc}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--bias", type=float, default=0.8)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--config", default=None)
    ap.add_argument("--out", default=None, help="optional CSV of per-seed rows")
    args = ap.parse_args()

    rows = []
    for seed in args.seeds:
        cfg = load_config(args.config, seed=seed)
        sp = split(synth_biased(args.n, args.bias, seed=seed), cfg.test_fraction, seed)
        rows.append(pretrained_row(sp, cfg))
        for algo in ALGORITHMS:
            rows.append(run_algorithm(algo, sp, cfg).summary())
        print(f"seed {seed} done")

    print("\n| algo | " + " | ".join(COLUMNS) + " |")
    print("|---" * (len(COLUMNS) + 1) + "|")
    for algo in ("pretrained", *ALGORITHMS):
        med = median_summary([r for r in rows if r["algo"] == algo])
        print(f"| {algo} | " + " | ".join(f"{med[k]:.3f}" for k in COLUMNS) + " |")

    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["algo", "seed", "selected_epoch", *COLUMNS])
            w.writeheader()
            w.writerows(rows)


if __name__ == "__main__":
    main()
