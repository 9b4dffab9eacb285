"""Sweep the injected bias and watch where the pretrained model drops below the 80% rule."""
import argparse

import numpy as np

from fairmax.config import load_config
from fairmax.data import split, synth_biased
from fairmax.experiment import audit, run_algorithm
from fairmax.train import pretrain_classifier


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--biases", type=float, nargs="+", default=[0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--algo", default="adversarial")
    args = ap.parse_args()

    print(f"{'bias':>5} {'pre_rate':>9} {'pre_auc':>8} {args.algo + '_rate':>18} "
          f"{args.algo + '_auc':>17} {'acc':>6}")
    for bias in args.biases:
        pre_r, pre_a, r, a, acc = [], [], [], [], []
        for seed in args.seeds:
            cfg = load_config(None, seed=seed)
            sp = split(synth_biased(args.n, bias, seed=seed), cfg.test_fraction, seed)
            _, rep = audit(pretrain_classifier(sp.train, cfg), sp, cfg)
            pre_r.append(rep["test"].statistical_rate)
            pre_a.append(rep["test"].adversary_auc)
            test = run_algorithm(args.algo, sp, cfg).reports["test"]
            r.append(test.statistical_rate)
            a.append(test.adversary_auc)
            acc.append(test.accuracy)
        med = [float(np.median(v)) for v in (pre_r, pre_a, r, a, acc)]
        print(f"{bias:5.2f} {med[0]:9.1f} {med[1]:8.3f} {med[2]:18.1f} {med[3]:17.3f} "
              f"{med[4]:6.3f}")


if __name__ == "__main__":
    main()
