"""Statistical rate (p% rule), accuracy and ROC AUC."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from .model import AdversaryParams, ModelParams, adversary_scores, predict_scores

REPORT_THRESHOLD = 0.5
EIGHTY_PERCENT = 80.0


@dataclass(frozen=True)
class FairnessReport:
    statistical_rate: float
    group_positive_rates: tuple[float, float]   # (z=1, z=0)
    passes_80_rule: bool
    accuracy: float
    adversary_auc: float
    n_samples: int

    def as_record(self, prefix: str = "") -> dict:
        d = asdict(self)
        r1, r0 = d.pop("group_positive_rates")
        d["positive_rate_z1"], d["positive_rate_z0"] = r1, r0
        return {prefix + k: v for k, v in d.items()}

    def to_text(self, label: str = "") -> str:
        prefix = f"{label}." if label else ""
        return "".join(f"{k} = {v}\n" for k, v in self.as_record(prefix).items())


def group_positive_rates(predictions, sensitive) -> tuple[float, float]:
    p = np.asarray(predictions)
    z = np.asarray(sensitive)
    if p.shape != z.shape:
        raise ValueError("predictions and sensitive differ in length")
    if not (z == 1).any() or not (z == 0).any():
        raise ValueError("a sensitive group is absent")
    return float(p[z == 1].mean()), float(p[z == 0].mean())


def statistical_rate(predictions, sensitive) -> float:
    """100 * min(r1/r0, r0/r1) over the per-group positive rates.

    No positives in either group counts as 100 (nothing disparate to measure);
    positives in exactly one group count as 0.
    """
    r1, r0 = group_positive_rates(predictions, sensitive)
    if r1 == 0.0 and r0 == 0.0:
        return 100.0
    if r1 == 0.0 or r0 == 0.0:
        return 0.0
    return 100.0 * min(r1 / r0, r0 / r1)


def accuracy(predictions, labels) -> float:
    p = np.asarray(predictions)
    t = np.asarray(labels)
    if p.shape != t.shape:
        raise ValueError("predictions and labels differ in length")
    if p.size == 0:
        raise ValueError("empty input")
    return float(np.mean(p == t))


def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC with ties counted one half."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    n_pos = int((y == 1).sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs both classes present")
    ranks = rankdata(s)  # average ranks handle ties
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def threshold_scores(scores, threshold: float = REPORT_THRESHOLD) -> np.ndarray:
    return (np.asarray(scores) > threshold).astype(np.int64)


def evaluate(clf: ModelParams, adv: AdversaryParams, dataset) -> FairnessReport:
    scores = predict_scores(clf, dataset.features)
    return report_from_scores(scores, adversary_scores(adv, scores), dataset)


def report_from_scores(scores, adv_scores, dataset) -> FairnessReport:
    pred = threshold_scores(scores)
    rate = statistical_rate(pred, dataset.sensitive)
    return FairnessReport(
        statistical_rate=rate,
        group_positive_rates=group_positive_rates(pred, dataset.sensitive),
        passes_80_rule=rate >= EIGHTY_PERCENT,
        accuracy=accuracy(pred, dataset.labels),
        adversary_auc=roc_auc(adv_scores, dataset.sensitive),
        n_samples=dataset.n_samples,
    )
