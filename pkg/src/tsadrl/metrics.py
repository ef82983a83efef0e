"""Point-wise detection metrics, report emission, and reference baselines.

Counts are taken per decision step. Zero-denominator conventions: a metric
whose denominator is zero is reported as 0.0 rather than raising, so empty
or all-negative slices stay comparable.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .data import Series
from .errors import InvalidArgs, LengthMismatch

# Reference point-wise results on two public benchmark suites (Yahoo A1 and
# the server-machine dataset), kept for sanity-checking our own numbers and
# for the precision/recall/F1 arithmetic consistency test.
REFERENCE_BASELINES: dict[str, dict[str, tuple[float, float, float]]] = {
    "yahoo_a1": {
        "THOC": (0.1495, 0.8326, 0.2534),
        "TranAD": (0.4185, 0.8712, 0.5654),
        "TS2Vec": (0.3929, 0.6305, 0.4841),
        "DCdetector": (0.0598, 0.9434, 0.1124),
        "TimesNet": (0.3808, 0.7883, 0.5135),
        "CARLA": (0.5747, 0.9755, 0.7233),
        "GPT-3.5": (0.0742, 0.9130, 0.1372),
        "Llama-2": (0.6051, 0.9565, 0.7413),
        "Phi-2": (0.6666, 0.4761, 0.5555),
    },
    "smd": {
        "THOC": (0.0997, 0.5307, 0.1679),
        "TranAD": (0.2649, 0.5661, 0.3609),
        "TS2Vec": (0.1033, 0.5295, 0.1728),
        "DCdetector": (0.0432, 0.9967, 0.0828),
        "TimesNet": (0.2450, 0.5474, 0.3385),
        "CARLA": (0.4276, 0.6362, 0.5114),
        "GPT-3.5": (0.5370, 0.4061, 0.4625),
        "Llama-2": (0.3813, 0.8685, 0.5300),
        "Phi-2": (0.8461, 0.2541, 0.3908),
    },
}


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def _as_binary(arr, name: str) -> np.ndarray:
    a = np.asarray(arr)
    if a.ndim != 1:
        raise InvalidArgs(f"{name} must be 1-D, got shape {a.shape}")
    if a.size and not np.isin(a, (0, 1)).all():
        raise InvalidArgs(f"{name} must contain only 0/1 values")
    return a.astype(np.int64)


def confusion(truth, pred) -> ConfusionCounts:
    t = _as_binary(truth, "truth")
    p = _as_binary(pred, "pred")
    if t.shape != p.shape:
        raise LengthMismatch(f"truth has {t.size} entries, pred has {p.size}")
    return ConfusionCounts(
        tp=int(np.sum((t == 1) & (p == 1))),
        fp=int(np.sum((t == 0) & (p == 1))),
        tn=int(np.sum((t == 0) & (p == 0))),
        fn=int(np.sum((t == 1) & (p == 0))),
    )


def prf1(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def f1_from_pr(precision: float, recall: float) -> float:
    if precision + recall <= 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def point_adjust(truth, pred) -> np.ndarray:
    """Segment-level credit: one hit inside a true anomaly run marks the whole run.

    A common benchmark convention; kept off by default because it inflates
    recall on long anomalies.
    """
    t = _as_binary(truth, "truth")
    p = _as_binary(pred, "pred").copy()
    if t.shape != p.shape:
        raise LengthMismatch(f"truth has {t.size} entries, pred has {p.size}")
    n = t.size
    i = 0
    while i < n:
        if t[i] == 1:
            j = i
            while j < n and t[j] == 1:
                j += 1
            if p[i:j].any():
                p[i:j] = 1
            i = j
        else:
            i += 1
    return p


@dataclass(frozen=True)
class EvalResult:
    counts: ConfusionCounts
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        out = self.counts.to_dict()
        out.update(precision=self.precision, recall=self.recall, f1=self.f1)
        return out


def evaluate(truth, pred, adjusted: bool = False) -> EvalResult:
    p = point_adjust(truth, pred) if adjusted else pred
    counts = confusion(truth, p)
    precision, recall, f1 = prf1(counts.tp, counts.fp, counts.fn)
    return EvalResult(counts=counts, precision=precision, recall=recall, f1=f1)


@dataclass(frozen=True)
class SeriesEval:
    """Predictions over one series' decision steps."""

    series: Series
    t_values: np.ndarray
    predictions: np.ndarray

    def __post_init__(self):
        if self.t_values.shape != self.predictions.shape:
            raise LengthMismatch(
                f"{self.t_values.size} decision steps vs {self.predictions.size} predictions"
            )

    @property
    def truth(self) -> np.ndarray:
        return self.series.labels[self.t_values]


def write_predictions_csv(path: str, ev: SeriesEval) -> None:
    """Rows are (t, value, truth, prediction); value is the channel mean."""
    values = ev.series.values[ev.t_values].mean(axis=1)
    truth = ev.truth
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "value", "truth", "prediction"])
        for i in range(ev.t_values.size):
            writer.writerow(
                [int(ev.t_values[i]), repr(float(values[i])),
                 int(truth[i]), int(ev.predictions[i])]
            )


def emit_report(run_dir: str, evals: list[SeriesEval], provenance_counts: dict | None = None,
                extra: dict | None = None, adjusted: bool = False) -> dict:
    """Write metrics.json plus one predictions CSV per series; returns the payload.

    Overall numbers pool the confusion counts across series before computing
    precision/recall/F1 (micro averaging).
    """
    pred_dir = os.path.join(run_dir, "predictions")
    os.makedirs(pred_dir, exist_ok=True)
    per_series = {}
    all_truth, all_pred = [], []
    for ev in evals:
        result = evaluate(ev.truth, ev.predictions, adjusted=adjusted)
        per_series[ev.series.id] = result.to_dict()
        all_truth.append(ev.truth)
        all_pred.append(ev.predictions)
        write_predictions_csv(os.path.join(pred_dir, f"{ev.series.id}.csv"), ev)
    if all_truth:
        overall = evaluate(np.concatenate(all_truth), np.concatenate(all_pred),
                           adjusted=adjusted).to_dict()
    else:
        overall = EvalResult(ConfusionCounts(0, 0, 0, 0), 0.0, 0.0, 0.0).to_dict()
    payload = {
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "point_adjusted": adjusted,
        "overall": overall,
        "per_series": per_series,
    }
    if provenance_counts is not None:
        payload["label_provenance"] = dict(provenance_counts)
    if extra:
        payload.update(extra)
    with open(os.path.join(run_dir, "metrics.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return payload


def read_predictions_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    """(truth, prediction) columns back out of a predictions CSV."""
    truth, pred = [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            truth.append(int(row["truth"]))
            pred.append(int(row["prediction"]))
    return np.array(truth, dtype=np.int64), np.array(pred, dtype=np.int64)
