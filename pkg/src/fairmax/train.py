"""Training algorithms: plain, alternating adversarial, and the two GDA variants.

All trainers share the same recipe: pre-train the classifier, pre-train the
adversary against it, then run ``config.epochs`` iterations, recording an
:class:`EpochRecord` and a parameter snapshot after each one.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .config import ALPHA_INV_SQRT, DEFAULT_CONSTANT_ALPHA, TrainConfig
from .data import Dataset
from .errors import DivergenceError
from .losses import (FairRegConfig, bce, fairness_loss,
                     grad_adv_part_wrt_clf, grad_LC_wrt_clf, grad_LF_wrt_adv,
                     grad_LF_wrt_clf)
from .metrics import accuracy, roc_auc, statistical_rate, threshold_scores
from .model import (AdversaryParams, ModelParams, adversary_scores, init_params,
                    predict_scores, zero_adversary)

log = logging.getLogger(__name__)

PROJECTION_GUARD = 1e-18
# The adversary minimises its cross-entropy (i.e. it ascends its log-likelihood),
# so u moves against the gradient of the cross-entropy part of the fairness loss.
ADVERSARY_STEP_SIGN = -1.0

TRACE_FIELDS = ("epoch", "train_accuracy", "test_accuracy", "statistical_rate_train",
                "statistical_rate_test", "adversary_auc", "loss_C", "loss_F",
                "snapshot_id")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_accuracy: float
    test_accuracy: float
    statistical_rate_train: float
    statistical_rate_test: float
    adversary_auc: float
    loss_C: float
    loss_F: float
    snapshot_id: int


@dataclass
class TrainResult:
    algo: str
    final_params: ModelParams
    final_adv: AdversaryParams
    selected_params: ModelParams
    selected_id: int
    pretrained_params: ModelParams
    trace: list[EpochRecord]
    config: TrainConfig
    seed: int
    snapshots: dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    def selected_record(self) -> EpochRecord:
        return next(r for r in self.trace if r.snapshot_id == self.selected_id)


def _streams(seed: int):
    """Independent generators for initialisation, batch sampling and noise."""
    init, batch, noise = np.random.SeedSequence(seed).spawn(3)
    return (np.random.default_rng(init), np.random.default_rng(batch),
            np.random.default_rng(noise))


def _check_finite(what: str, iteration: int, *values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise DivergenceError(f"{what} diverged at iteration {iteration}", iteration)


def project(g, f) -> np.ndarray:
    """Projection of ``g`` onto ``f``; zero when ``f`` is (numerically) zero."""
    g = np.asarray(g, dtype=float)
    f = np.asarray(f, dtype=float)
    if g.shape != f.shape:
        raise ValueError("projection operands differ in dimension")
    ff = float(f @ f)
    if ff < PROJECTION_GUARD:
        return np.zeros_like(f)
    return (float(g @ f) / ff) * f


def inject_noise(features, rng: np.random.Generator, per_sample: bool = False) -> np.ndarray:
    """Scale every input by a single draw from U[0, 1], or one draw per row."""
    X = np.asarray(features, dtype=float)
    if per_sample:
        return rng.uniform(0.0, 1.0, size=(X.shape[0], 1)) * X
    return rng.uniform(0.0, 1.0) * X


def pretrain_classifier(dataset: Dataset, config: TrainConfig,
                        params: ModelParams | None = None) -> ModelParams:
    """Full-batch gradient descent on cross-entropy, step ``eta2``.

    If the loss ever goes up the step is halved for the remaining epochs.
    """
    if params is None:
        params = init_params(config.model, dataset.n_features, _streams(config.seed)[0],
                             config.hidden)
    X, y = dataset.features, dataset.labels
    step = config.eta2
    theta = params.theta.copy()
    prev = bce(predict_scores(params, X), y).value
    for epoch in range(1, config.pretrain_clf_epochs + 1):
        theta = theta - step * grad_LC_wrt_clf(params, X, y)
        _check_finite("classifier pre-training", epoch, theta)
        params = params.replace(theta)
        loss = bce(predict_scores(params, X), y).value
        _check_finite("classifier pre-training loss", epoch, loss)
        if loss > prev * (1.0 + 1e-9):
            step /= 2.0
            log.warning("pre-training loss rose at epoch %d; halving step to %g", epoch, step)
        prev = loss
    return params


def _adversary_step(adv: AdversaryParams, scores, z, eta1: float) -> AdversaryParams:
    return AdversaryParams(adv.u + ADVERSARY_STEP_SIGN * eta1 * grad_LF_wrt_adv(scores, z, adv))


def pretrain_adversary(clf: ModelParams, dataset: Dataset, config: TrainConfig,
                       adv: AdversaryParams | None = None) -> AdversaryParams:
    adv = zero_adversary() if adv is None else adv
    scores = predict_scores(clf, dataset.features)
    for epoch in range(1, config.pretrain_adv_epochs + 1):
        adv = _adversary_step(adv, scores, dataset.sensitive, config.eta1)
        _check_finite("adversary pre-training", epoch, adv.u)
    return adv


def _sample_batch(rng, dataset: Dataset, size: int, iteration: int):
    """Indices of one mini-batch drawn with replacement; None if no usable batch."""
    for _ in range(2):
        idx = rng.integers(0, dataset.n_samples, size=size)
        z = dataset.sensitive[idx]
        if z.min() != z.max():
            return idx
    log.warning("iteration %d: mini-batch held a single sensitive group twice; skipped",
                iteration)
    return None


def _record(t, params, adv, train, test, reg) -> EpochRecord:
    s = predict_scores(params, train.features)
    pred = threshold_scores(s)
    if test is not None:
        pt = threshold_scores(predict_scores(params, test.features))
        test_acc = accuracy(pt, test.labels)
        test_rate = statistical_rate(pt, test.sensitive)
    else:
        test_acc = test_rate = float("nan")
    loss_c = bce(s, train.labels).value
    loss_f = fairness_loss(s, train.sensitive, reg, adv).value
    _check_finite("training loss", t, loss_c, loss_f)
    return EpochRecord(
        epoch=t,
        train_accuracy=accuracy(pred, train.labels),
        test_accuracy=test_acc,
        statistical_rate_train=statistical_rate(pred, train.sensitive),
        statistical_rate_test=test_rate,
        adversary_auc=roc_auc(adversary_scores(adv, s), train.sensitive),
        loss_C=loss_c,
        loss_F=loss_f,
        snapshot_id=t,
    )


def _finish(algo, params, adv, pretrained, trace, snapshots, config) -> TrainResult:
    sid = select_model(trace, config.fairness_floor)
    return TrainResult(algo=algo, final_params=params, final_adv=adv,
                       selected_params=params.replace(snapshots[sid]), selected_id=sid,
                       pretrained_params=pretrained, trace=trace, config=config,
                       seed=config.seed, snapshots=snapshots)


def _pretrain(train: Dataset, config: TrainConfig):
    clf = pretrain_classifier(train, config)
    adv = pretrain_adversary(clf, train, config)
    return clf, adv


def plain_train(train: Dataset, config: TrainConfig, test: Dataset | None = None) -> TrainResult:
    """Mini-batch cross-entropy training after pre-training; no fairness pressure.

    The adversary is still fitted each iteration so its AUC can be reported.
    """
    clf, adv = _pretrain(train, config)
    pretrained = clf
    _, rng, _ = _streams(config.seed)
    reg = FairRegConfig(config.reg_weight)
    trace, snapshots = [], {}
    for t in range(1, config.epochs + 1):
        if not config.freeze_adversary:
            adv = _adversary_step(adv, predict_scores(clf, train.features),
                                  train.sensitive, config.eta1)
        idx = _sample_batch(rng, train, config.batch_size, t)
        if idx is not None:
            g = grad_LC_wrt_clf(clf, train.features[idx], train.labels[idx])
            theta = clf.theta - config.eta2 * g
            _check_finite("classifier", t, theta)
            clf = clf.replace(theta)
        trace.append(_record(t, clf, adv, train, test, reg))
        snapshots[t] = clf.theta
    return _finish("baseline", clf, adv, pretrained, trace, snapshots, config)


def adversarial_train(train: Dataset, config: TrainConfig,
                      test: Dataset | None = None) -> TrainResult:
    """Alternating adversarial training.

    Each iteration fits the adversary for one full-data epoch with the
    classifier fixed, then takes one classifier step on a single sampled
    mini-batch for ``cross-entropy - lam * adversary cross-entropy``.
    """
    clf, adv = _pretrain(train, config)
    pretrained = clf
    _, rng, _ = _streams(config.seed)
    reg = FairRegConfig(config.reg_weight)
    trace, snapshots = [], {}
    for t in range(1, config.epochs + 1):
        if not config.freeze_adversary:
            adv = _adversary_step(adv, predict_scores(clf, train.features),
                                  train.sensitive, config.eta1)
            _check_finite("adversary", t, adv.u)
        idx = _sample_batch(rng, train, config.batch_size, t)
        if idx is not None:
            Xb, yb, zb = train.features[idx], train.labels[idx], train.sensitive[idx]
            g = grad_LC_wrt_clf(clf, Xb, yb)
            if config.lam != 0:
                g = g - config.lam * grad_adv_part_wrt_clf(clf, Xb, zb, adv)
            theta = clf.theta - config.eta2 * g
            _check_finite("classifier", t, theta)
            clf = clf.replace(theta)
        trace.append(_record(t, clf, adv, train, test, reg))
        snapshots[t] = clf.theta
    return _finish("adversarial", clf, adv, pretrained, trace, snapshots, config)


def gda_step(clf: ModelParams, adv: AdversaryParams, X, y, z, alpha: float,
             config: TrainConfig, modified: bool):
    """One simultaneous descent-ascent update; both gradients taken at (w_t, u_t).

    Returns the new (classifier, adversary) and the classifier direction used.
    """
    reg = FairRegConfig(config.reg_weight)
    g_c = grad_LC_wrt_clf(clf, X, y)
    g_f = grad_LF_wrt_clf(clf, X, z, adv, reg)
    g_u = grad_LF_wrt_adv(predict_scores(clf, X), z, adv)
    direction = g_c - alpha * g_f
    if modified:
        direction = direction - project(g_c, g_f)
    new_clf = clf.replace(clf.theta - config.eta2 * direction)
    if config.freeze_adversary:
        new_adv = adv
    else:
        new_adv = AdversaryParams(adv.u + ADVERSARY_STEP_SIGN * config.eta1 * g_u)
    return new_clf, new_adv, direction


def _gda(train, config, test, modified: bool) -> TrainResult:
    clf, adv = _pretrain(train, config)
    pretrained = clf
    _, rng_batch, rng_noise = _streams(config.seed)
    reg = FairRegConfig(config.reg_weight)
    default_alpha = ALPHA_INV_SQRT if modified else DEFAULT_CONSTANT_ALPHA
    trace, snapshots = [], {}
    for t in range(1, config.epochs + 1):
        if config.full_batch:
            X, y, z = train.features, train.labels, train.sensitive
        else:
            idx = _sample_batch(rng_batch, train, config.batch_size, t)
            if idx is None:
                trace.append(_record(t, clf, adv, train, test, reg))
                snapshots[t] = clf.theta
                continue
            X, y, z = train.features[idx], train.labels[idx], train.sensitive[idx]
        if config.noise_enabled:
            X = inject_noise(X, rng_noise, config.noise_per_sample)
        alpha = config.alpha_at(t, default_alpha)
        try:
            clf, adv, _ = gda_step(clf, adv, X, y, z, alpha, config, modified)
        except ValueError as exc:
            # ModelParams/AdversaryParams reject non-finite values
            raise DivergenceError(f"GDA diverged at iteration {t}: {exc}", t) from exc
        trace.append(_record(t, clf, adv, train, test, reg))
        snapshots[t] = clf.theta
    return _finish("gda-modified" if modified else "gda-normal", clf, adv, pretrained,
                   trace, snapshots, config)


def gda_normal(train: Dataset, config: TrainConfig, test: Dataset | None = None) -> TrainResult:
    return _gda(train, config, test, modified=False)


def gda_modified(train: Dataset, config: TrainConfig, test: Dataset | None = None) -> TrainResult:
    return _gda(train, config, test, modified=True)


def select_model(trace: list[EpochRecord], fairness_floor: float = 80.0) -> int:
    """Snapshot id of the most accurate epoch meeting the fairness floor.

    Without any qualifying epoch, fall back to the fairest one (then most
    accurate, then earliest).
    """
    if not trace:
        raise ValueError("empty trace")
    ok = [r for r in trace if r.statistical_rate_train >= fairness_floor]
    if ok:
        best = min(ok, key=lambda r: (-r.train_accuracy, r.epoch))
    else:
        best = min(trace, key=lambda r: (-r.statistical_rate_train, -r.train_accuracy, r.epoch))
    return best.snapshot_id


ALGORITHMS = {
    "baseline": plain_train,
    "adversarial": adversarial_train,
    "gda-normal": gda_normal,
    "gda-modified": gda_modified,
}
