"""Classifier loss, adversary loss and the fairness objective with gradients.

The fairness objective is

    fairness_loss = adversary cross-entropy - reg_weight * gap**2

where ``gap`` is the difference of mean classifier scores between the
protected (z=1) and other (z=0) groups. A classifier that *increases* this
quantity both confuses the adversary and closes the group gap, which is the
direction the GDA trainers push it in.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (AdversaryParams, ModelParams, adversary_scores,
                    grad_params, grad_params_logit, predict_scores)

EPS = 1e-12


@dataclass(frozen=True)
class LossValue:
    value: float
    n: int

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class FairRegConfig:
    reg_weight: float = 1.0
    epsilon: float = EPS

    def __post_init__(self):
        if not self.reg_weight >= 0:
            raise ValueError("reg_weight must be non-negative")


def bce(scores, targets, eps: float = EPS) -> LossValue:
    s = np.asarray(scores, dtype=float)
    t = np.asarray(targets, dtype=float)
    if s.shape != t.shape:
        raise ValueError("scores and targets differ in length")
    if s.size == 0:
        raise ValueError("empty input")
    s = np.clip(s, eps, 1.0 - eps)
    per_row = -(t * np.log(s) + (1.0 - t) * np.log(1.0 - s))
    return LossValue(float(per_row.mean()), s.size)


def adversary_loss(adv_scores, sensitive) -> LossValue:
    return bce(adv_scores, sensitive)


def group_gap(clf_scores, sensitive) -> float:
    s = np.asarray(clf_scores, dtype=float)
    z = np.asarray(sensitive)
    if not (z == 1).any() or not (z == 0).any():
        raise ValueError("both sensitive groups must be present")
    return float(s[z == 1].mean() - s[z == 0].mean())


def fairness_loss(clf_scores, sensitive, cfg: FairRegConfig,
                  adv: AdversaryParams) -> LossValue:
    gap = group_gap(clf_scores, sensitive)
    part = adversary_loss(adversary_scores(adv, clf_scores), sensitive)
    return LossValue(part.value - cfg.reg_weight * gap * gap, part.n)


def grad_LF_wrt_adv(clf_scores, sensitive, adv: AdversaryParams) -> np.ndarray:
    s = np.asarray(clf_scores, dtype=float)
    z = np.asarray(sensitive, dtype=float)
    r = adversary_scores(adv, s) - z
    return np.array([np.mean(r * s), np.mean(r)])


def dLF_dscores(clf_scores, sensitive, adv: AdversaryParams,
                cfg: FairRegConfig) -> np.ndarray:
    """Per-row derivative of the fairness objective w.r.t. classifier scores."""
    s = np.asarray(clf_scores, dtype=float)
    z = np.asarray(sensitive)
    n = s.size
    gap = group_gap(s, z)
    d_adv = (adversary_scores(adv, s) - z) * adv.u[0] / n
    n1, n0 = (z == 1).sum(), (z == 0).sum()
    d_gap = np.where(z == 1, 1.0 / n1, -1.0 / n0)
    return d_adv - 2.0 * cfg.reg_weight * gap * d_gap


def grad_LC_wrt_clf(params: ModelParams, X, y) -> np.ndarray:
    # d(mean bce)/d logit = (s - y)/n; routed through the logit to stay exact at saturation
    s = predict_scores(params, X)
    return grad_params_logit(params, X, (s - np.asarray(y, dtype=float)) / s.size)


def grad_LF_wrt_clf(params: ModelParams, X, z, adv: AdversaryParams,
                    cfg: FairRegConfig) -> np.ndarray:
    s = predict_scores(params, X)
    return grad_params(params, X, dLF_dscores(s, z, adv, cfg))


def grad_adv_part_wrt_clf(params: ModelParams, X, z, adv: AdversaryParams) -> np.ndarray:
    """Gradient of the adversary cross-entropy alone w.r.t. classifier parameters."""
    s = predict_scores(params, X)
    d = (adversary_scores(adv, s) - np.asarray(z, dtype=float)) * adv.u[0] / s.size
    return grad_params(params, X, d)
