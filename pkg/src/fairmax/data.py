"""Tabular datasets with a binary label and a binary sensitive attribute."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

log = logging.getLogger(__name__)

MAX_SPLIT_ATTEMPTS = 100


@dataclass(frozen=True)
class RawTable:
    column_names: list[str]
    rows: list[list[str | float]]
    label_col: str
    sensitive_col: str
    positive_label: str
    protected_value: str

    def column(self, name: str) -> list[str | float]:
        j = self.column_names.index(name)
        return [r[j] for r in self.rows]


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    sensitive: np.ndarray
    feature_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim != 2:
            raise DataError("features must be a 2-d matrix")
        y = np.asarray(self.labels).astype(np.int64)
        z = np.asarray(self.sensitive).astype(np.int64)
        n = X.shape[0]
        if n < 1:
            raise DataError("dataset is empty")
        if y.shape != (n,) or z.shape != (n,):
            raise DataError("labels/sensitive length does not match features")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain non-finite values")
        if not (np.isin(y, (0, 1)).all() and np.isin(z, (0, 1)).all()):
            raise DataError("labels and sensitive must be 0/1")
        if z.min() == z.max():
            raise DataError("both sensitive groups must be non-empty")
        names = list(self.feature_names) or [f"x{j}" for j in range(X.shape[1])]
        if len(names) != X.shape[1]:
            raise DataError("feature_names length does not match features")
        for a in (X, y, z):
            a.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "sensitive", z)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> Dataset:
        return Dataset(self.features[idx], self.labels[idx], self.sensitive[idx],
                       self.feature_names)


@dataclass(frozen=True)
class Split:
    train: Dataset
    test: Dataset
    seed: int


def _to_number(cell: str) -> float | None:
    try:
        v = float(cell)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def load_csv(path, label_col: str, sensitive_col: str,
             positive_label: str, protected_value: str) -> RawTable:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: missing header row") from None
        raw_rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: ragged row "
                                f"({len(row)} cells, expected {len(header)})")
            if any(c.strip() == "" for c in row):
                raise DataError(f"{path}:{lineno}: missing cell")
            raw_rows.append([c.strip() for c in row])
    for col in (label_col, sensitive_col):
        if col not in header:
            raise DataError(f"missing column {col!r}")

    # a column is numeric only if every cell parses
    numeric = []
    for j in range(len(header)):
        vals = [_to_number(r[j]) for r in raw_rows]
        numeric.append(bool(raw_rows) and all(v is not None for v in vals))
    rows = [[float(c) if numeric[j] else c for j, c in enumerate(r)] for r in raw_rows]

    table = RawTable(header, rows, label_col, sensitive_col,
                     str(positive_label), str(protected_value))
    _check_binary(table, label_col, positive_label, "label")
    _check_binary(table, sensitive_col, protected_value, "sensitive")
    return table


def _cell_key(v) -> str:
    if isinstance(v, float):
        return repr(int(v)) if v.is_integer() else repr(v)
    return str(v)


def _check_binary(table: RawTable, col: str, designated: str, what: str):
    values = {_cell_key(v) for v in table.column(col)}
    if len(values) != 2:
        raise DataError(f"non-binary {what} column {col!r}: "
                        f"{len(values)} distinct values")
    if _cell_key(_to_number(designated) if _to_number(designated) is not None
                 else designated) not in values:
        raise DataError(f"{what} value {designated!r} not found in column {col!r}")


def one_hot_encode(table: RawTable, label_col: str | None = None,
                   sensitive_col: str | None = None) -> Dataset:
    """Standardize numeric columns and expand categorical ones to indicators.

    Statistics are taken over the whole table (before any split). Indicator
    columns are ordered by sorted category value.
    """
    label_col = label_col or table.label_col
    sensitive_col = sensitive_col or table.sensitive_col
    if not table.rows:
        raise DataError("empty table")

    def designated_key(v):
        num = _to_number(v)
        return _cell_key(num) if num is not None else str(v)

    pos = designated_key(table.positive_label)
    prot = designated_key(table.protected_value)
    y = np.array([_cell_key(v) == pos for v in table.column(label_col)], dtype=np.int64)
    z = np.array([_cell_key(v) == prot for v in table.column(sensitive_col)], dtype=np.int64)

    blocks, names = [], []
    for name in table.column_names:
        if name in (label_col, sensitive_col):
            continue
        col = table.column(name)
        if isinstance(col[0], float):
            v = np.array(col, dtype=float)
            sd = v.std(ddof=1) if len(v) > 1 else 0.0
            if sd == 0.0 or not np.isfinite(sd):
                log.warning("column %r is constant; emitting a zero column", name)
                blocks.append(np.zeros((len(v), 1)))
            else:
                blocks.append(((v - v.mean()) / sd)[:, None])
            names.append(name)
        else:
            cats = sorted(set(col))
            index = {c: k for k, c in enumerate(cats)}
            block = np.zeros((len(col), len(cats)))
            block[np.arange(len(col)), [index[c] for c in col]] = 1.0
            blocks.append(block)
            names.extend(f"{name}={c}" for c in cats)
    X = np.hstack(blocks) if blocks else np.zeros((len(table.rows), 0))
    return Dataset(X, y, z, names)


def split(dataset: Dataset, test_fraction: float, seed: int) -> Split:
    if not 0.0 < test_fraction < 1.0:
        raise DataError("test_fraction must lie in (0, 1)")
    n = dataset.n_samples
    n_test = math.ceil(n * test_fraction)
    if n_test >= n:
        raise DataError("split leaves the training part empty")
    rng = np.random.default_rng(seed)
    z = dataset.sensitive
    for _ in range(MAX_SPLIT_ATTEMPTS):
        perm = rng.permutation(n)
        test_idx, train_idx = np.sort(perm[:n_test]), np.sort(perm[n_test:])
        if len(np.unique(z[test_idx])) == 2 and len(np.unique(z[train_idx])) == 2:
            return Split(dataset.subset(train_idx), dataset.subset(test_idx), seed)
    raise DataError(f"could not produce a split with both groups in each part "
                    f"after {MAX_SPLIT_ATTEMPTS} attempts")


# Generator coefficients, frozen after checking the bias=0 / bias=0.8 targets.
LABEL_BIAS_SCALE = 2.0
PROXY_SCALE = 2.0
LABEL_NOISE = 0.5


def synth_biased(n: int, bias: float, n_features: int = 8, seed: int = 0) -> Dataset:
    """Synthetic biased data: z shifts the latent label score and leaks into x0.

    z ~ Bernoulli(0.5); x ~ N(0, I) with ``PROXY_SCALE * bias * z`` added to the
    first feature; score = x @ w + LABEL_BIAS_SCALE * bias * z + noise, with w
    fixed by the seed; y = 1 iff score exceeds its median.
    """
    if n < 20:
        raise DataError("n must be at least 20")
    if n_features < 2:
        raise DataError("n_features must be at least 2")
    if not 0.0 <= bias <= 1.0:
        raise DataError("bias must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    w = rng.normal(size=n_features) / math.sqrt(n_features)
    z = rng.integers(0, 2, size=n)
    X = rng.normal(size=(n, n_features))
    latent = X @ w + LABEL_BIAS_SCALE * bias * z + LABEL_NOISE * rng.normal(size=n)
    X[:, 0] += PROXY_SCALE * bias * z
    y = (latent > np.median(latent)).astype(np.int64)
    return Dataset(X, y, z, [f"x{j}" for j in range(n_features)])


# -- directory serialization ------------------------------------------------

def _write_column(path: Path, name: str, values: np.ndarray):
    with path.open("w", newline="") as fh:
        fh.write(name + "\n")
        fh.writelines(f"{int(v)}\n" for v in values)


def save_dataset(dataset: Dataset, directory, seed: int | None = None,
                 provenance: str = "") -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with (d / "features.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(dataset.feature_names)
        for row in dataset.features:
            w.writerow([repr(float(v)) for v in row])
    _write_column(d / "labels.csv", "label", dataset.labels)
    _write_column(d / "sensitive.csv", "sensitive", dataset.sensitive)
    meta = {"seed": seed, "provenance": provenance,
            "n_samples": dataset.n_samples, "n_features": dataset.n_features}
    (d / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return d


def load_dataset(directory) -> Dataset:
    d = Path(directory)
    for name in ("features.csv", "labels.csv", "sensitive.csv"):
        if not (d / name).is_file():
            raise DataError(f"{d}: missing {name}")
    with (d / "features.csv").open(newline="") as fh:
        rows = list(csv.reader(fh))
    names, body = rows[0], rows[1:]
    X = np.array([[float(c) for c in r] for r in body], dtype=float).reshape(len(body), len(names))
    y = np.loadtxt(d / "labels.csv", skiprows=1, dtype=np.int64, ndmin=1)
    z = np.loadtxt(d / "sensitive.csv", skiprows=1, dtype=np.int64, ndmin=1)
    return Dataset(X, y, z, names)


def fingerprint(directory) -> str:
    """sha256 over the dataset's three CSV files."""
    h = hashlib.sha256()
    for name in ("features.csv", "labels.csv", "sensitive.csv"):
        h.update((Path(directory) / name).read_bytes())
    return h.hexdigest()
