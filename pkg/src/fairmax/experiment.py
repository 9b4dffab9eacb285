"""Glue for running one algorithm on one split and summarising it."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import TrainConfig
from .data import Split
from .metrics import FairnessReport, evaluate
from .model import AdversaryParams, ModelParams, predict_scores
from .train import ALGORITHMS, TrainResult, pretrain_adversary


@dataclass
class RunOutcome:
    result: TrainResult
    audit_adv: AdversaryParams
    reports: dict[str, FairnessReport]

    def summary(self) -> dict:
        rec = self.result.selected_record()
        test = self.reports["test"]
        return {
            "algo": self.result.algo,
            "seed": self.result.seed,
            "selected_epoch": rec.epoch,
            "accuracy_train": rec.train_accuracy,
            "statistical_rate_train": rec.statistical_rate_train,
            "accuracy_test": test.accuracy,
            "statistical_rate_test": test.statistical_rate,
            "adversary_auc": test.adversary_auc,
        }


def audit(clf: ModelParams, split: Split, config: TrainConfig):
    """Fit a fresh adversary to a frozen classifier on train; report both splits."""
    adv = pretrain_adversary(clf, split.train, config)
    return adv, {"train": evaluate(clf, adv, split.train),
                 "test": evaluate(clf, adv, split.test)}


def run_algorithm(algo: str, split: Split, config: TrainConfig) -> RunOutcome:
    result = ALGORITHMS[algo](split.train, config, split.test)
    adv, reports = audit(result.selected_params, split, config)
    return RunOutcome(result, adv, reports)


def score_table(params: ModelParams, split: Split) -> dict[str, tuple]:
    return {name: (predict_scores(params, ds.features), ds.sensitive, ds.labels)
            for name, ds in (("train", split.train), ("test", split.test))}


def median_summary(rows: list[dict]) -> dict:
    keys = ("accuracy_train", "statistical_rate_train", "accuracy_test",
            "statistical_rate_test", "adversary_auc")
    return {k: float(np.median([r[k] for r in rows])) for k in keys}
