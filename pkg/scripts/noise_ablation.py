"""GDA with and without the per-iteration feature noise scalar. Reports, does not judge."""
import argparse

import numpy as np

from fairmax.config import load_config
from fairmax.data import split, synth_biased
from fairmax.train import gda_modified, gda_normal


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--bias", type=float, default=0.8)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    args = ap.parse_args()

    for trainer in (gda_normal, gda_modified):
        for noise in (False, True):
            acc, rate, test_acc = [], [], []
            for seed in args.seeds:
                cfg = load_config(None, seed=seed, noise_enabled=noise)
                sp = split(synth_biased(args.n, args.bias, seed=seed), cfg.test_fraction, seed)
                rec = trainer(sp.train, cfg, sp.test).selected_record()
                acc.append(rec.train_accuracy)
                rate.append(rec.statistical_rate_train)
                test_acc.append(rec.test_accuracy)
            print(f"{trainer.__name__:13s} noise={str(noise):5s} "
                  f"train_acc={np.median(acc):.3f} train_rate={np.median(rate):.1f} "
                  f"test_acc={np.median(test_acc):.3f}")


if __name__ == "__main__":
    main()
