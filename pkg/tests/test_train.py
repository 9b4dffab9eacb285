import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from fairmax.artifacts import write_trace
from fairmax.config import TrainConfig
from fairmax.data import Dataset, split, synth_biased
from fairmax.errors import DivergenceError
from fairmax.losses import FairRegConfig, bce, grad_LC_wrt_clf, grad_LF_wrt_clf
from fairmax.metrics import accuracy, evaluate, roc_auc, threshold_scores
from fairmax.model import (AdversaryParams, ModelParams, adversary_scores, init_params,
                           predict_scores)
from fairmax.train import (EpochRecord, adversarial_train, gda_modified, gda_normal,
                           gda_step, inject_noise, plain_train, pretrain_adversary,
                           pretrain_classifier, project, select_model)

SMALL = dict(epochs=20, pretrain_clf_epochs=50, pretrain_adv_epochs=50)


@pytest.fixture(scope="module")
def biased_split():
    return split(synth_biased(1000, 0.8, 5, seed=3), 0.3, 3)


# -- projection ---------------------------------------------------------------

def test_project_examples():
    np.testing.assert_array_equal(project([1.0, 2.0], [1.0, 0.0]), [1.0, 0.0])
    np.testing.assert_array_equal(project([1.0, 2.0, 0.0], [-2.0, 1.0, 5.0]), [0.0, 0.0, 0.0])
    f = np.array([1.0, -2.0, 4.0])
    np.testing.assert_array_equal(project(3 * f, f), 3 * f)
    np.testing.assert_array_equal(project([1.0, 2.0], [0.0, 1e-10]), [0.0, 0.0])
    with pytest.raises(ValueError):
        project([1.0], [1.0, 2.0])


vectors = arrays(np.float64, 6, elements=st.floats(-1e3, 1e3))


@given(vectors, vectors)
@settings(max_examples=200)
def test_project_properties(g, f):
    p = project(g, f)
    if f @ f < 1e-18:
        assert not p.any()
        return
    assert np.allclose(project(p, f), p, rtol=1e-12, atol=1e-12 * np.linalg.norm(p))
    resid = g - p
    assert abs(resid @ f) <= 1e-8 * np.linalg.norm(g) * np.linalg.norm(f) + 1e-300


# -- noise --------------------------------------------------------------------

class FixedDraw:
    def __init__(self, v):
        self.v = v

    def uniform(self, lo, hi):
        return self.v


def test_inject_noise():
    X = np.arange(6.0).reshape(3, 2)
    np.testing.assert_array_equal(inject_noise(X, FixedDraw(1.0)), X)
    assert not inject_noise(X, FixedDraw(0.0)).any()
    a = inject_noise(X, np.random.default_rng(4))
    np.testing.assert_array_equal(a, inject_noise(X, np.random.default_rng(4)))
    ratio = a.ravel()[1:] / X.ravel()[1:]
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-15)


def test_inject_noise_per_sample():
    X = np.ones((200, 3))
    a = inject_noise(X, np.random.default_rng(0), per_sample=True)
    assert (a[:, 0] == a[:, 2]).all()
    assert np.unique(a[:, 0]).size == 200
    assert 0 <= a.min() and a.max() <= 1
    assert abs(a.mean() - 0.5) < 0.05


def test_noise_changes_gda_but_stays_deterministic(biased_split):
    cfg = TrainConfig(noise_enabled=True, **SMALL)
    a = gda_normal(biased_split.train, cfg)
    b = gda_normal(biased_split.train, cfg)
    c = gda_normal(biased_split.train, cfg.replace(noise_enabled=False))
    assert all(a.snapshots[t].tobytes() == b.snapshots[t].tobytes() for t in a.snapshots)
    assert a.final_params.theta.tobytes() != c.final_params.theta.tobytes()


# -- model selection ----------------------------------------------------------

def rec(epoch, rate, acc):
    return EpochRecord(epoch, acc, float("nan"), rate, float("nan"), 0.5, 0.0, 0.0, epoch)


def test_select_model():
    assert select_model([rec(1, 10, 0.5)], 80) == 1
    trace = [rec(1, 85, 0.80), rec(2, 82, 0.88), rec(3, 60, 0.95)]
    assert select_model(trace, 80) == 2
    assert select_model([rec(1, 70, 0.9), rec(2, 95, 0.6), rec(3, 95, 0.7)], 100) == 3
    assert select_model([rec(1, 90, 0.8), rec(2, 90, 0.8)], 80) == 1
    with pytest.raises(ValueError):
        select_model([], 80)


# -- pre-training -------------------------------------------------------------

def perceptron_separates(X, y, max_epochs=1000):
    Xh = np.hstack([X, np.ones((len(X), 1))])
    t = 2 * y - 1
    w = np.zeros(Xh.shape[1])
    for _ in range(max_epochs):
        mistakes = 0
        for x, s in zip(Xh, t):
            if s * (w @ x) <= 0:
                w += s * x
                mistakes += 1
        if not mistakes:
            return True
    return False


def test_pretrain_separable_reaches_full_accuracy():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(120, 2))
    keep = np.abs(X[:, 0] + X[:, 1]) > 0.3
    X = X[keep]
    y = (X[:, 0] + X[:, 1] > 0).astype(int)
    z = np.arange(len(y)) % 2
    assert perceptron_separates(X, y)
    ds = Dataset(X, y, z)
    clf = pretrain_classifier(ds, TrainConfig(pretrain_clf_epochs=200))
    assert accuracy(threshold_scores(predict_scores(clf, X)), y) == 1.0


def test_pretrain_zero_epochs_is_identity(biased_split):
    cfg = TrainConfig(model="mlp", pretrain_clf_epochs=0, seed=5)
    init = init_params("mlp", 5, np.random.default_rng(1))
    assert pretrain_classifier(biased_split.train, cfg, init) is init


def test_pretrain_loss_monotone_small_step(biased_split, caplog):
    cfg = TrainConfig(eta2=1e-3, pretrain_clf_epochs=1)
    clf = init_params("logistic", 5)
    losses = []
    for _ in range(100):
        clf = pretrain_classifier(biased_split.train, cfg, clf)
        losses.append(bce(predict_scores(clf, biased_split.train.features),
                          biased_split.train.labels).value)
    assert all(b <= a for a, b in zip(losses, losses[1:]))
    assert "halving" not in caplog.text


def test_pretrain_biased_is_unfair(biased_split):
    cfg = TrainConfig()
    clf = pretrain_classifier(biased_split.train, cfg)
    rep = evaluate(clf, pretrain_adversary(clf, biased_split.train, cfg), biased_split.test)
    assert rep.statistical_rate < 80
    assert rep.adversary_auc > 0.5


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_pretrain_divergence_names_epoch():
    X = np.full((6, 1), 1e300)
    X[::2] *= -1
    ds = Dataset(X, [0, 1, 0, 1, 0, 1], [0, 1, 0, 1, 1, 0])
    with pytest.raises(DivergenceError, match="iteration 1") as err:
        pretrain_classifier(ds, TrainConfig(eta2=1e10, pretrain_clf_epochs=5))
    assert err.value.iteration == 1


def test_pretrain_adversary_constant_classifier(biased_split):
    const = ModelParams("logistic", (5, 1), [0, 0, 0, 0, 0, 0.8])
    adv = pretrain_adversary(const, biased_split.train, TrainConfig())
    s = adversary_scores(adv, predict_scores(const, biased_split.test.features))
    assert roc_auc(s, biased_split.test.sensitive) == 0.5


def test_pretrain_adversary_deterministic(biased_split):
    cfg = TrainConfig(seed=9)
    clf = pretrain_classifier(biased_split.train, cfg)
    a = pretrain_adversary(clf, biased_split.train, cfg)
    b = pretrain_adversary(clf, biased_split.train, cfg)
    assert a.u.tobytes() == b.u.tobytes()


# -- degeneracies -------------------------------------------------------------

def test_lambda_zero_matches_plain_training(biased_split):
    cfg = TrainConfig(lam=0.0, seed=11, **SMALL)
    a = adversarial_train(biased_split.train, cfg, biased_split.test)
    b = plain_train(biased_split.train, cfg, biased_split.test)
    for t in a.snapshots:
        assert a.snapshots[t].tobytes() == b.snapshots[t].tobytes()
    assert a.trace == b.trace


def test_lambda_positive_differs(biased_split):
    cfg = TrainConfig(seed=11, **SMALL)
    a = adversarial_train(biased_split.train, cfg)
    b = plain_train(biased_split.train, cfg)
    assert a.final_params.theta.tobytes() != b.final_params.theta.tobytes()


def test_gda_normal_alpha_zero_is_plain_gradient_descent(biased_split):
    cfg = TrainConfig(alpha=0.0, reg_weight=0.0, freeze_adversary=True,
                      pretrain_adv_epochs=0, **{k: v for k, v in SMALL.items()
                                                 if k != "pretrain_adv_epochs"})
    res = gda_normal(biased_split.train, cfg)
    assert (res.final_adv.u == 0).all()
    X, y = biased_split.train.features, biased_split.train.labels
    clf = pretrain_classifier(biased_split.train, cfg)
    for t in range(1, cfg.epochs + 1):
        clf = clf.replace(clf.theta - cfg.eta2 * grad_LC_wrt_clf(clf, X, y))
        assert clf.theta.tobytes() == res.snapshots[t].tobytes()


def orthogonal_instance():
    """Logistic model at w = 0 with features chosen so grad L_C is orthogonal to grad L_F."""
    rng = np.random.default_rng(8)
    n = 10
    y = rng.integers(0, 2, size=n)
    z = np.array([1, 0] * 5)
    adv = AdversaryParams([2.0, -0.5])
    # at w = 0 every score is 0.5, so the per-row logit gradients do not depend on X
    v_c = (0.5 - y) / n
    a = 1 / (1 + np.exp(-(2.0 * 0.5 - 0.5)))
    v_f = (a - z) * 2.0 / n * 0.25
    ones = np.ones(n)
    target = -(ones @ v_c) * (ones @ v_f)
    col1 = np.linalg.lstsq(np.vstack([v_c, v_f]), [1.0, target], rcond=None)[0]
    # remaining columns orthogonal to v_c so they contribute nothing to the inner product
    rest = rng.normal(size=(n, 2))
    rest -= np.outer(v_c, v_c @ rest) / (v_c @ v_c)
    X = np.column_stack([col1, rest])
    return X, y, z, adv


def test_orthogonal_instance_is_orthogonal():
    X, y, z, adv = orthogonal_instance()
    clf = init_params("logistic", 3)
    g_c = grad_LC_wrt_clf(clf, X, y)
    g_f = grad_LF_wrt_clf(clf, X, z, adv, FairRegConfig(0.0))
    assert abs(g_c @ g_f) <= 1e-14 * np.linalg.norm(g_c) * np.linalg.norm(g_f)
    assert np.linalg.norm(g_f) > 1e-3


def test_modified_step_equals_normal_step_when_orthogonal():
    X, y, z, adv = orthogonal_instance()
    clf = init_params("logistic", 3)
    cfg = TrainConfig(reg_weight=0.0)
    n_clf, n_adv, _ = gda_step(clf, adv, X, y, z, 0.7, cfg, modified=False)
    m_clf, m_adv, _ = gda_step(clf, adv, X, y, z, 0.7, cfg, modified=True)
    assert np.max(np.abs(n_clf.theta - m_clf.theta)) <= 1e-12
    assert n_adv.u.tobytes() == m_adv.u.tobytes()


def test_modified_residual_orthogonal_along_run(biased_split):
    cfg = TrainConfig()
    train = biased_split.train
    X, y, z = train.features, train.labels, train.sensitive
    clf = pretrain_classifier(train, cfg)
    adv = pretrain_adversary(clf, train, cfg)
    reg = FairRegConfig(cfg.reg_weight)
    for t in range(1, 31):
        g_c = grad_LC_wrt_clf(clf, X, y)
        g_f = grad_LF_wrt_clf(clf, X, z, adv, reg)
        resid = g_c - project(g_c, g_f)
        assert abs(resid @ g_f) <= 1e-8 * np.linalg.norm(g_c) * np.linalg.norm(g_f)
        clf, adv, _ = gda_step(clf, adv, X, y, z, 1 / np.sqrt(t), cfg, modified=True)


# -- trainers -----------------------------------------------------------------

@pytest.mark.parametrize("trainer", [plain_train, adversarial_train, gda_normal, gda_modified])
def test_trainers_deterministic(tmp_path, biased_split, trainer):
    cfg = TrainConfig(seed=21, **SMALL)
    a = trainer(biased_split.train, cfg, biased_split.test)
    b = trainer(biased_split.train, cfg, biased_split.test)
    write_trace(a.trace, tmp_path / "a.csv")
    write_trace(b.trace, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert len(a.trace) == cfg.epochs
    assert [r.epoch for r in a.trace] == list(range(1, cfg.epochs + 1))
    assert a.selected_id in a.snapshots


def test_trainer_mlp_runs(biased_split):
    cfg = TrainConfig(model="mlp", hidden=(8, 8), eta2=0.1, seed=2, **SMALL)
    res = gda_modified(biased_split.train, cfg, biased_split.test)
    assert res.final_params.sizes == (5, 8, 8, 1)
    assert len(res.trace) == cfg.epochs


def test_single_group_batches_are_skipped(caplog):
    rng = np.random.default_rng(0)
    n = 300
    z = np.zeros(n, dtype=int)
    z[0] = 1
    ds = Dataset(rng.normal(size=(n, 2)), rng.integers(0, 2, n), z)
    cfg = TrainConfig(batch_size=2, epochs=10, pretrain_clf_epochs=5, pretrain_adv_epochs=5)
    res = adversarial_train(ds, cfg)
    assert len(res.trace) == 10
    assert "single sensitive group" in caplog.text


def test_minibatch_gda_runs(biased_split):
    cfg = TrainConfig(full_batch=False, **SMALL)
    res = gda_normal(biased_split.train, cfg)
    assert len(res.trace) == cfg.epochs


def test_adversary_update_improves_adversary(biased_split):
    """The adversary step is a descent step on its own cross-entropy."""
    cfg = TrainConfig(pretrain_adv_epochs=1)
    clf = pretrain_classifier(biased_split.train, cfg)
    s = predict_scores(clf, biased_split.train.features)
    z = biased_split.train.sensitive
    adv0 = AdversaryParams([0.0, 0.0])
    adv1 = pretrain_adversary(clf, biased_split.train, cfg.replace(eta1=0.5), adv0)
    ce = [bce(adversary_scores(a, s), z).value for a in (adv0, adv1)]
    assert ce[1] < ce[0]
