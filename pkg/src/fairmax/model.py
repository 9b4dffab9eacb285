"""Logistic / MLP classifier and the score-only logistic adversary.

Parameters live in one flat float64 vector so that gradients, projections
and snapshots all work on plain arrays. Layer ``k`` occupies a weight block
(out x in, row-major) followed by its bias block.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

SNAPSHOT_MAGIC = "fairmax-params"
SNAPSHOT_VERSION = 1
HIDDEN_ACTIVATION = "relu"
DEFAULT_HIDDEN = (32, 32, 32)


def sigmoid(x):
    """Logistic function, evaluated without overflow for any finite input."""
    x = np.asarray(x, dtype=float)
    e = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ModelParams:
    kind: str
    sizes: tuple[int, ...]
    theta: np.ndarray

    def __post_init__(self):
        if self.kind not in ("logistic", "mlp"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.sizes[-1] != 1:
            raise ValueError("final layer must have a single output")
        if self.kind == "logistic" and len(self.sizes) != 2:
            raise ValueError("logistic model has no hidden layers")
        theta = np.array(self.theta, dtype=float)
        if theta.shape != (n_params(self.sizes),):
            raise ValueError(f"parameter vector has length {theta.size}, "
                             f"architecture needs {n_params(self.sizes)}")
        if not np.all(np.isfinite(theta)):
            raise ValueError("parameters contain non-finite values")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))

    @property
    def n_features(self) -> int:
        return self.sizes[0]

    def replace(self, theta) -> ModelParams:
        return ModelParams(self.kind, self.sizes, theta)

    def layers(self):
        """Yield (W, b) views per layer."""
        off = 0
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            W = self.theta[off:off + fan_out * fan_in].reshape(fan_out, fan_in)
            off += fan_out * fan_in
            b = self.theta[off:off + fan_out]
            off += fan_out
            yield W, b


@dataclass(frozen=True)
class AdversaryParams:
    u: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        if u.shape != (2,) or not np.all(np.isfinite(u)):
            raise ValueError("adversary weights must be two finite numbers")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)


def n_params(sizes) -> int:
    return sum(o * i + o for i, o in zip(sizes[:-1], sizes[1:]))


def init_params(kind: str, n_features: int, rng: np.random.Generator | None = None,
                hidden=DEFAULT_HIDDEN) -> ModelParams:
    """Logistic starts at zero; MLP layers draw from U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    if kind == "logistic":
        sizes = (n_features, 1)
        return ModelParams(kind, sizes, np.zeros(n_params(sizes)))
    sizes = (n_features, *hidden, 1)
    if rng is None:
        rng = np.random.default_rng(0)
    chunks = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        chunks.append(rng.uniform(-bound, bound, size=fan_out * fan_in + fan_out))
    return ModelParams(kind, sizes, np.concatenate(chunks))


def zero_adversary() -> AdversaryParams:
    return AdversaryParams(np.zeros(2))


def _check_width(params: ModelParams, X: np.ndarray):
    if X.ndim != 2 or X.shape[1] != params.n_features:
        raise ValueError(f"feature width {X.shape[-1]} does not match "
                         f"model input width {params.n_features}")


def _forward(params: ModelParams, X):
    """Return (logits, per-layer inputs, per-layer pre-activations)."""
    X = np.asarray(X, dtype=float)
    _check_width(params, X)
    inputs, pre = [], []
    h = X
    layers = list(params.layers())
    for k, (W, b) in enumerate(layers):
        inputs.append(h)
        a = h @ W.T + b
        pre.append(a)
        h = np.maximum(a, 0.0) if k < len(layers) - 1 else a
    return h[:, 0], inputs, pre


def predict_logits(params: ModelParams, X) -> np.ndarray:
    return _forward(params, X)[0]


def predict_scores(params: ModelParams, X) -> np.ndarray:
    return sigmoid(predict_logits(params, X))


def grad_params_logit(params: ModelParams, X, dlogit) -> np.ndarray:
    """Gradient of sum_i loss_i given d loss_i / d logit_i."""
    logits, inputs, pre = _forward(params, X)
    dlogit = np.asarray(dlogit, dtype=float)
    if dlogit.shape != logits.shape:
        raise ValueError("per-row gradient length does not match the number of rows")
    layers = list(params.layers())
    blocks = [None] * (2 * len(layers))
    delta = dlogit[:, None]
    for k in range(len(layers) - 1, -1, -1):
        W, _ = layers[k]
        blocks[2 * k] = (delta.T @ inputs[k]).ravel()
        blocks[2 * k + 1] = delta.sum(axis=0)
        if k:
            delta = (delta @ W) * (pre[k - 1] > 0)
    return np.concatenate(blocks)


def grad_params(params: ModelParams, X, dscore) -> np.ndarray:
    """Gradient of sum_i loss_i given d loss_i / d score_i (score = sigmoid output)."""
    s = predict_scores(params, X)
    dscore = np.asarray(dscore, dtype=float)
    if dscore.shape != s.shape:
        raise ValueError("per-row gradient length does not match the number of rows")
    return grad_params_logit(params, X, dscore * s * (1.0 - s))


def adversary_scores(adv: AdversaryParams, clf_scores) -> np.ndarray:
    s = np.asarray(clf_scores, dtype=float)
    return sigmoid(adv.u[0] * s + adv.u[1])


# -- snapshots ----------------------------------------------------------------

def save_params(params: ModelParams, path) -> None:
    lines = [f"{SNAPSHOT_MAGIC} v{SNAPSHOT_VERSION}",
             f"kind {params.kind}",
             "sizes " + " ".join(str(s) for s in params.sizes),
             f"count {params.theta.size}"]
    lines.extend(float(v).hex() for v in params.theta)
    Path(path).write_text("\n".join(lines) + "\n")


def load_params(path) -> ModelParams:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != f"{SNAPSHOT_MAGIC} v{SNAPSHOT_VERSION}":
        raise ValueError(f"{path}: not a v{SNAPSHOT_VERSION} parameter snapshot")
    kind = lines[1].split()[1]
    sizes = tuple(int(s) for s in lines[2].split()[1:])
    count = int(lines[3].split()[1])
    theta = np.array([float.fromhex(v) for v in lines[4:4 + count]])
    return ModelParams(kind, sizes, theta)


def save_adversary(adv: AdversaryParams, path) -> None:
    Path(path).write_text(f"{SNAPSHOT_MAGIC}-adversary v{SNAPSHOT_VERSION}\n"
                          + "\n".join(float(v).hex() for v in adv.u) + "\n")


def load_adversary(path) -> AdversaryParams:
    lines = Path(path).read_text().splitlines()
    return AdversaryParams([float.fromhex(v) for v in lines[1:3]])
