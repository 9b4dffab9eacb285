"""On-disk run directories: manifest, trace CSV, snapshots, reports, plot data."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import dump_config
from .errors import DataError
from .metrics import FairnessReport
from .model import (AdversaryParams, ModelParams, load_adversary, load_params,
                    save_adversary, save_params)
from .train import TRACE_FIELDS, EpochRecord, TrainResult

HIST_BINS = 50


@dataclass(frozen=True)
class RunManifest:
    command: str
    config_path: str | None
    dataset_fingerprint: str
    seed: int
    output_dir: str
    toolkit_version: str = __version__
    data_source: str = ""
    algo: str = ""

    def write(self, directory) -> Path:
        p = Path(directory) / "manifest.json"
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return p

    @classmethod
    def read(cls, directory) -> RunManifest:
        p = Path(directory) / "manifest.json"
        if not p.is_file():
            raise DataError(f"{directory}: no manifest.json (not a run directory?)")
        return cls(**json.loads(p.read_text()))


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_trace(trace: list[EpochRecord], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_FIELDS)
        for rec in trace:
            w.writerow([_fmt(getattr(rec, k)) for k in TRACE_FIELDS])


def read_trace(path) -> list[EpochRecord]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        out.append(EpochRecord(**{k: (int(r[k]) if k in ("epoch", "snapshot_id") else float(r[k]))
                                  for k in TRACE_FIELDS}))
    return out


def write_result(result: TrainResult, directory, reports: dict[str, FairnessReport],
                 audit_adv: AdversaryParams, scores: dict[str, tuple]) -> Path:
    """Persist a finished run: trace, snapshots, config echo, reports, scores."""
    d = Path(directory)
    snaps = d / "snapshots"
    snaps.mkdir(parents=True, exist_ok=True)
    write_trace(result.trace, d / "trace.csv")
    (d / "config.txt").write_text(dump_config(result.config))
    for sid, theta in result.snapshots.items():
        save_params(result.final_params.replace(theta), snaps / f"epoch_{sid:04d}.params")
    save_params(result.selected_params, d / "selected.params")
    save_params(result.final_params, d / "final.params")
    save_params(result.pretrained_params, d / "pretrained.params")
    save_adversary(result.final_adv, d / "final_adversary.params")
    save_adversary(audit_adv, d / "audit_adversary.params")
    text = f"algo = {result.algo}\nselected_epoch = {result.selected_id}\n"
    text += "".join(rep.to_text(label) for label, rep in reports.items())
    (d / "report.txt").write_text(text)
    with (d / "scores.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["split", "sensitive", "label", "score"])
        for name, (s, z, y) in scores.items():
            for a, b, c in zip(s, z, y):
                w.writerow([name, int(b), int(c), repr(float(a))])
    return d


def load_run_params(directory, which: str = "selected") -> tuple[ModelParams, AdversaryParams]:
    d = Path(directory)
    p = d / f"{which}.params"
    if not p.is_file():
        raise DataError(f"{d}: missing {p.name}")
    return load_params(p), load_adversary(d / "audit_adversary.params")


def read_scores(directory, split: str = "test"):
    p = Path(directory) / "scores.csv"
    if not p.is_file():
        raise DataError(f"{directory}: missing scores.csv (incomplete run?)")
    with p.open(newline="") as fh:
        rows = [r for r in csv.DictReader(fh) if split == "all" or r["split"] == split]
    if not rows:
        raise DataError(f"{directory}: no '{split}' rows in scores.csv")
    s = np.array([float(r["score"]) for r in rows])
    z = np.array([int(r["sensitive"]) for r in rows])
    return s, z


def group_histograms(scores, sensitive, bins: int = HIST_BINS):
    edges = np.linspace(0.0, 1.0, bins + 1)
    h1, _ = np.histogram(scores[sensitive == 1], bins=edges)
    h0, _ = np.histogram(scores[sensitive == 0], bins=edges)
    return edges, h1, h0


def write_histogram_csv(path, edges, h1, h0) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_lo", "bin_hi", "count_z1", "count_z0"])
        for k in range(len(h1)):
            w.writerow([repr(float(edges[k])), repr(float(edges[k + 1])), int(h1[k]), int(h0[k])])


def write_metrics_csv(path, trace: list[EpochRecord]) -> None:
    cols = ("epoch", "train_accuracy", "test_accuracy", "statistical_rate_train",
            "statistical_rate_test", "adversary_auc")
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for rec in trace:
            w.writerow([_fmt(getattr(rec, c)) for c in cols])


def render_svg(edges, h1, h0, trace: list[EpochRecord], title: str = "") -> str:
    """Two panels: per-group score histograms and metrics against epoch."""
    W, H, pad = 900, 360, 40
    pw = (W - 3 * pad) / 2
    ph = H - 2 * pad - 20
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'font-family="sans-serif" font-size="11">',
           '<rect width="100%" height="100%" fill="white"/>',
           f'<text x="{pad}" y="20" font-size="13">{title}</text>']

    def frame(x0):
        out.append(f'<rect x="{x0:.1f}" y="{pad}" width="{pw:.1f}" height="{ph:.1f}" '
                   f'fill="none" stroke="#444"/>')

    # histograms, normalised per group so unequal group sizes stay comparable
    x0 = pad
    frame(x0)
    d1 = h1 / max(h1.sum(), 1)
    d0 = h0 / max(h0.sum(), 1)
    top = max(d1.max(initial=0), d0.max(initial=0)) or 1.0
    bw = pw / len(h1)
    for dens, colour in ((d1, "#3b6fd4"), (d0, "#e58fb4")):
        for k, v in enumerate(dens):
            if v <= 0:
                continue
            h = ph * v / top
            out.append(f'<rect x="{x0 + k * bw:.1f}" y="{pad + ph - h:.1f}" width="{bw:.1f}" '
                       f'height="{h:.1f}" fill="{colour}" fill-opacity="0.55"/>')
    out.append(f'<text x="{x0}" y="{pad + ph + 15:.1f}">score 0</text>')
    out.append(f'<text x="{x0 + pw - 30:.1f}" y="{pad + ph + 15:.1f}">1</text>')
    out.append(f'<text x="{x0 + 5}" y="{pad + 14}" fill="#3b6fd4">z=1</text>')
    out.append(f'<text x="{x0 + 40}" y="{pad + 14}" fill="#e58fb4">z=0</text>')

    # metric traces on a shared [0, 1] axis (statistical rate divided by 100)
    x0 = 2 * pad + pw
    frame(x0)
    if trace:
        n = max(trace[-1].epoch, 2)
        series = (("train_accuracy", 1.0, "#222"), ("statistical_rate_train", 100.0, "#2a9d3f"),
                  ("adversary_auc", 1.0, "#c0392b"))
        for key, scale, colour in series:
            pts = " ".join(
                f"{x0 + pw * (r.epoch - 1) / (n - 1):.1f},"
                f"{pad + ph * (1 - min(max(getattr(r, key) / scale, 0), 1)):.1f}"
                for r in trace)
            out.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="1.5"/>')
        for k, (key, _, colour) in enumerate(series):
            out.append(f'<text x="{x0 + 5}" y="{pad + 14 + 13 * k}" fill="{colour}">{key}</text>')
    out.append(f'<text x="{x0}" y="{pad + ph + 15:.1f}">epoch</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
