"""Active labeling: margin-ranked queries, a precedence-aware label store,
and Gaussian-kernel label propagation.

Labels carry a provenance tag. Human answers outrank ground-truth oracle
answers, which outrank propagated guesses; a lower-ranked write never
replaces a higher-ranked record for the same step.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass

import numpy as np

from .agent import QNet, batch_q_values
from .data import Series, all_windows, decided_indices
from .errors import InvalidArgs, InvalidSigma, MalformedRow, OracleTimeout
from .potential import MAD_EPS, MAD_TO_SIGMA

PROVENANCE_RANK = {"propagated": 0, "ground_truth": 1, "human": 2}


@dataclass(frozen=True)
class LabelRecord:
    series: str
    t: int
    label: int
    provenance: str
    confidence: float

    def __post_init__(self):
        if self.label not in (0, 1):
            raise InvalidArgs(f"label must be 0 or 1, got {self.label}")
        if self.provenance not in PROVENANCE_RANK:
            raise InvalidArgs(f"unknown provenance {self.provenance!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise InvalidArgs(f"confidence must be in [0, 1], got {self.confidence}")

    def to_dict(self) -> dict:
        return {
            "series": self.series,
            "t": self.t,
            "label": self.label,
            "provenance": self.provenance,
            "confidence": self.confidence,
        }


class LabelStore:
    """Thread-safe map of (series, t) -> LabelRecord with provenance precedence.

    Same-rank writes overwrite (latest wins) so a human can revise a human
    label; a propagated guess can never displace an oracle or human answer.
    """

    def __init__(self):
        self._lock = threading.RLock()
        self._records: dict[tuple[str, int], LabelRecord] = {}

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def get(self, series: str, t: int) -> LabelRecord | None:
        with self._lock:
            return self._records.get((series, int(t)))

    def put(self, record: LabelRecord) -> bool:
        """Insert if allowed by precedence; returns True when stored."""
        key = (record.series, int(record.t))
        with self._lock:
            existing = self._records.get(key)
            if existing is not None and (
                PROVENANCE_RANK[record.provenance] < PROVENANCE_RANK[existing.provenance]
            ):
                return False
            self._records[key] = record
            return True

    def records(self) -> list[LabelRecord]:
        with self._lock:
            return sorted(self._records.values(), key=lambda r: (r.series, r.t))

    def known_steps(self, series: str) -> dict[int, LabelRecord]:
        with self._lock:
            return {t: r for (sid, t), r in self._records.items() if sid == series}

    def counts_by_provenance(self) -> dict[str, int]:
        out = {name: 0 for name in PROVENANCE_RANK}
        with self._lock:
            for rec in self._records.values():
                out[rec.provenance] += 1
        return out

    def clear_propagated(self, series: str | None = None) -> int:
        """Drop propagated records (for one series or all); returns the count.

        Propagated labels are derived data: they are wiped and re-computed
        from authoritative answers each round rather than accumulating.
        """
        with self._lock:
            doomed = [
                key for key, rec in self._records.items()
                if rec.provenance == "propagated" and (series is None or key[0] == series)
            ]
            for key in doomed:
                del self._records[key]
            return len(doomed)

    def save_jsonl(self, path: str) -> None:
        with self._lock:
            lines = [json.dumps(r.to_dict()) for r in self.records()]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))

    @classmethod
    def load_jsonl(cls, path: str) -> "LabelStore":
        store = cls()
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                    record = LabelRecord(
                        series=row["series"],
                        t=int(row["t"]),
                        label=int(row["label"]),
                        provenance=row["provenance"],
                        confidence=float(row["confidence"]),
                    )
                except (KeyError, TypeError, ValueError, InvalidArgs) as exc:
                    raise MalformedRow(line_no, f"bad label row: {exc}") from exc
                store.put(record)
        return store


class StoreLabelView:
    """Adapter feeding the training loop labels only where the store has them."""

    def __init__(self, store: LabelStore, series_id: str):
        self._store = store
        self._series_id = series_id

    def label_for(self, t: int) -> tuple[bool, int | None]:
        rec = self._store.get(self._series_id, t)
        if rec is None:
            return False, None
        return True, rec.label


def margin(q0: float, q1: float) -> float:
    return abs(q0 - q1)


@dataclass(frozen=True)
class Query:
    series: str
    t: int
    margin: float

    def to_dict(self) -> dict:
        return {"series": self.series, "t": self.t, "margin": self.margin}


def select_queries(net: QNet, series_list: list[Series], n_steps: int,
                   store: LabelStore, k: int) -> list[Query]:
    """The k unlabeled steps the net is least sure about.

    Candidates are ranked by ascending |Q(s,0) - Q(s,1)|; exact ties break
    by (series id, t) so the selection is reproducible.
    """
    if k < 0:
        raise InvalidArgs(f"k must be >= 0, got {k}")
    candidates: list[Query] = []
    for series in series_list:
        ts = decided_indices(series, n_steps)
        if ts.size == 0:
            continue
        q0, q1 = batch_q_values(net, all_windows(series, n_steps))
        margins = np.abs(q0 - q1)
        for i, t in enumerate(ts):
            if store.get(series.id, int(t)) is None:
                candidates.append(Query(series.id, int(t), float(margins[i])))
    candidates.sort(key=lambda q: (q.margin, q.series, q.t))
    return candidates[:k]


class GroundTruthOracle:
    """Answers queries from the stored ground-truth labels."""

    provenance = "ground_truth"

    def __init__(self, series_list: list[Series]):
        self._by_id = {s.id: s for s in series_list}

    def answer(self, query: Query) -> int | None:
        series = self._by_id.get(query.series)
        if series is None or not 0 <= query.t < series.length:
            return None
        return int(series.labels[query.t])


class StoreBackedOracle:
    """Answers from labels some external annotator already wrote to a store.

    Used when a labeling service collects human answers out of band: queries
    whose step has a human-provenance record are answered, the rest time out.
    """

    provenance = "human"

    def __init__(self, store: LabelStore):
        self._store = store

    def answer(self, query: Query) -> int | None:
        rec = self._store.get(query.series, query.t)
        if rec is None or rec.provenance != "human":
            raise OracleTimeout(f"no human label yet for ({query.series}, {query.t})")
        return rec.label


def apply_oracle(store: LabelStore, queries: list[Query], oracle) -> list[LabelRecord]:
    """Ask the oracle each query; store answers, skip None, tolerate timeouts.

    A timing-out query is simply left pending for a later round.
    """
    applied: list[LabelRecord] = []
    for query in queries:
        try:
            label = oracle.answer(query)
        except OracleTimeout:
            continue
        if label is None:
            continue
        record = LabelRecord(
            series=query.series,
            t=query.t,
            label=int(label),
            provenance=oracle.provenance,
            confidence=1.0,
        )
        if store.put(record):
            applied.append(record)
    return applied


def kernel_weight(xi: np.ndarray, xj: np.ndarray, sigma: float) -> float:
    """Gaussian similarity exp(-||xi - xj||^2 / (2 sigma^2))."""
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise InvalidSigma(f"sigma must be positive and finite, got {sigma}")
    diff = np.asarray(xi, dtype=np.float64).ravel() - np.asarray(xj, dtype=np.float64).ravel()
    return float(np.exp(-float(diff @ diff) / (2.0 * sigma * sigma)))


def median_pairwise_sigma(features: np.ndarray) -> float:
    """Median Euclidean distance over all point pairs; the kernel bandwidth default."""
    X = np.asarray(features, dtype=np.float64)
    n = X.shape[0]
    if n < 2:
        raise InvalidSigma("need at least two points for a pairwise median")
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    iu = np.triu_indices(n, k=1)
    med = float(np.median(np.sqrt(np.maximum(d2[iu], 0.0))))
    if not med > 0.0:
        raise InvalidSigma(f"median pairwise distance is {med}; kernel would be degenerate")
    return med


@dataclass(frozen=True)
class PropagatedLabel:
    index: int
    label: int
    confidence: float


TAIL_Z_CLIP = 12.0


def anomaly_scores(values: np.ndarray, cap: float = TAIL_Z_CLIP) -> np.ndarray:
    """Per-step deviation from the locally smooth signal, in noise units.

    Raw distances between windows are dominated by the slow signal, which
    puts a window ending in a spike nearer to ordinary windows than to other
    spike windows. Instead each point is compared to the median of its two
    nearest neighbours on each side, which tracks the local trend, shrugs
    off one spiked neighbour, and leaves the additive residual plus noise.
    Scaling by a robust estimate of that noise and folding the sign gives a
    score near zero on smooth regions and near the signal-to-noise ratio on
    isolated spikes, regardless of spike direction. Output is (T, d),
    clipped at ``cap``.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim == 1:
        v = v[:, None]
    T, d = v.shape
    if T < 5:
        return np.zeros((T, d))
    neighbours = np.stack([v[:-4], v[1:-3], v[3:-1], v[4:]])
    s = np.empty_like(v)
    s[2:-2] = v[2:-2] - np.median(neighbours, axis=0)
    # Series ends use the four nearest points available. Their median sits
    # off-centre, so under a drifting signal it must be slid back by the
    # robust global slope (offsets {1,2,3,4} centre at 2.5, {-1,1,2,3} at 1.5).
    slope = np.median(np.diff(v, axis=0), axis=0)
    s[0] = v[0] - (np.median(v[1:5], axis=0) - 2.5 * slope)
    s[1] = v[1] - (np.median(np.stack([v[0], v[2], v[3], v[4]]), axis=0) - 1.5 * slope)
    s[-1] = v[-1] - (np.median(v[-5:-1], axis=0) + 2.5 * slope)
    s[-2] = v[-2] - (np.median(np.stack([v[-5], v[-4], v[-3], v[-1]]), axis=0) + 1.5 * slope)
    core = s[2:-2]
    med = np.median(core, axis=0)
    scale = MAD_TO_SIGMA * np.median(np.abs(core - med), axis=0) + MAD_EPS
    return np.clip(np.abs(s) / scale, 0.0, cap)


def propagate(features: np.ndarray, seed_labels: dict[int, int], sigma: float | None = None,
              top_k: int = 20, conf_threshold: float = 0.9, iters: int = 50,
              tol: float = 1e-12, mass_floor: float = 0.2) -> list[PropagatedLabel]:
    """Spread seed labels to unlabeled points through the Gaussian kernel graph.

    Iterates F <- row_norm(W) F with labeled rows clamped to one-hot; with a
    strictly positive kernel this converges to the harmonic solution. Returns
    at most top_k unlabeled points whose class confidence clears the
    threshold, ranked by confidence (ties by index). Needs seeds from both
    classes; otherwise there is nothing to separate and the result is empty.

    mass_floor guards isolated clusters: a point whose accumulated label mass
    after the fixed iteration budget is still below the floor has no labeled
    structure near it, and guessing from far-away majority mass would poison
    exactly the rare states worth querying instead.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidArgs(f"features must be 2-D, got shape {X.shape}")
    n = X.shape[0]
    labeled = sorted(seed_labels)
    if any(not 0 <= i < n for i in labeled):
        raise InvalidArgs("seed index out of range")
    if any(seed_labels[i] not in (0, 1) for i in labeled):
        raise InvalidArgs("seed labels must be 0 or 1")
    classes = {seed_labels[i] for i in labeled}
    if classes != {0, 1}:
        return []
    unlabeled = [i for i in range(n) if i not in seed_labels]
    if not unlabeled:
        return []
    if sigma is None:
        sigma = median_pairwise_sigma(X)
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise InvalidSigma(f"sigma must be positive and finite, got {sigma}")

    sq = np.sum(X * X, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (X @ X.T), 0.0)
    W = np.exp(-d2 / (2.0 * sigma * sigma))
    np.fill_diagonal(W, 0.0)
    row_sums = W.sum(axis=1, keepdims=True)
    row_sums[row_sums == 0.0] = 1.0
    P = W / row_sums

    F = np.zeros((n, 2))
    for i in labeled:
        F[i, seed_labels[i]] = 1.0
    clamp = F[labeled].copy()
    for _ in range(iters):
        F_new = P @ F
        F_new[labeled] = clamp
        if float(np.max(np.abs(F_new - F))) < tol:
            F = F_new
            break
        F = F_new

    out: list[PropagatedLabel] = []
    for i in unlabeled:
        mass = float(F[i, 0] + F[i, 1])
        if mass <= 0.0 or mass < mass_floor:
            continue
        p1 = float(F[i, 1]) / mass
        p0 = 1.0 - p1
        if p0 == p1:
            conf, label = 0.5, 0
        elif p1 > p0:
            conf, label = p1, 1
        else:
            conf, label = p0, 0
        if conf >= conf_threshold:
            out.append(PropagatedLabel(index=i, label=label, confidence=conf))
    out.sort(key=lambda r: (-r.confidence, r.index))
    return out[:top_k]


def propagate_into_store(store: LabelStore, series: Series, n_steps: int,
                         sigma: float | None = None, top_k: int = 20,
                         conf_threshold: float = 0.9, iters: int = 50,
                         score_fn=anomaly_scores) -> list[LabelRecord]:
    """Re-derive this series' propagated labels from its authoritative ones.

    Seeds are oracle and human answers only; previous propagated records are
    wiped first and recomputed, so a guess made under sparse evidence never
    hardens into a seed for later rounds.
    """
    ts = decided_indices(series, n_steps)
    if ts.size == 0:
        return []
    known = store.known_steps(series.id)
    t_to_row = {int(t): i for i, t in enumerate(ts)}
    seeds = {
        t_to_row[t]: rec.label
        for t, rec in known.items()
        if t in t_to_row and rec.provenance != "propagated"
    }
    store.clear_propagated(series.id)
    if not seeds:
        return []
    features = np.asarray(score_fn(series.values), dtype=np.float64)[ts]
    try:
        results = propagate(features, seeds, sigma=sigma, top_k=top_k,
                            conf_threshold=conf_threshold, iters=iters)
    except InvalidSigma:
        return []
    applied: list[LabelRecord] = []
    for res in results:
        record = LabelRecord(
            series=series.id,
            t=int(ts[res.index]),
            label=res.label,
            provenance="propagated",
            confidence=res.confidence,
        )
        if store.put(record):
            applied.append(record)
    return applied
