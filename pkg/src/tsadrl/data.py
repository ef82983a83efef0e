"""Time-series ingestion, normalization, splitting, and windowing.

Supported on-disk formats:
  * univariate CSV: ``timestamp,value,is_anomaly`` per row, optional header
  * multivariate matrix: one row per timestep (comma or whitespace delimited)
    plus a label file with one 0/1 per line

All functions are pure over immutable inputs.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    EmptySeries,
    InvalidArgs,
    MalformedRow,
    MissingFile,
    OutOfRange,
    ShapeMismatch,
)
from .nn import STREAM_SYNTH, rng_for


@dataclass(frozen=True)
class Series:
    """One time series with per-step ground-truth labels.

    values has shape (T, d); labels has shape (T,) with entries in {0, 1}.
    """

    id: str
    values: np.ndarray
    labels: np.ndarray
    split: str = "train"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        labels = np.asarray(self.labels, dtype=np.int64)
        if values.ndim != 2 or values.shape[1] < 1:
            raise ShapeMismatch(f"values must be (T, d), got {values.shape}")
        if labels.shape != (values.shape[0],):
            raise ShapeMismatch(
                f"labels length {labels.shape} does not match T={values.shape[0]}"
            )
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise InvalidArgs("labels must be 0/1")
        if self.split not in ("train", "test"):
            raise InvalidArgs(f"split must be 'train' or 'test', got {self.split!r}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def dims(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class DatasetStats:
    n_series: int
    dims: int
    anomaly_rate: float


@dataclass(frozen=True)
class NormStats:
    """Per-dimension mean and population std fitted on a train split."""

    mean: np.ndarray
    std: np.ndarray


def dataset_stats(series_list: list[Series]) -> DatasetStats:
    if not series_list:
        raise EmptySeries("no series")
    dims = {s.dims for s in series_list}
    if len(dims) != 1:
        raise ShapeMismatch(f"inconsistent dimensionality across series: {sorted(dims)}")
    total = sum(s.length for s in series_list)
    anomalous = sum(int(s.labels.sum()) for s in series_list)
    return DatasetStats(
        n_series=len(series_list),
        dims=dims.pop(),
        anomaly_rate=anomalous / total,
    )


def _detect_header(first_row: list[str]) -> bool:
    for cell in first_row:
        try:
            float(cell)
        except ValueError:
            return True
    return False


def load_csv_univariate(path: str, min_len: int = 1) -> Series:
    """Load a ``timestamp,value,is_anomaly`` CSV into a univariate Series.

    Rows are re-ordered by timestamp. A non-numeric first row is treated as a
    header and skipped.
    """
    if not os.path.isfile(path):
        raise MissingFile(path)
    rows: list[tuple[float, float, int]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for line_no, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if line_no == 1 and _detect_header(row):
                continue
            if len(row) != 3:
                raise MalformedRow(line_no, f"expected 3 fields, got {len(row)}")
            try:
                ts = float(row[0])
                value = float(row[1])
                label = int(float(row[2]))
            except ValueError as exc:
                raise MalformedRow(line_no, str(exc)) from None
            if label not in (0, 1):
                raise MalformedRow(line_no, f"label must be 0/1, got {row[2]}")
            rows.append((ts, value, label))
    if len(rows) < max(1, min_len):
        raise EmptySeries(f"{path}: {len(rows)} rows, need at least {max(1, min_len)}")
    rows.sort(key=lambda r: r[0])
    values = np.array([r[1] for r in rows], dtype=np.float64)[:, None]
    labels = np.array([r[2] for r in rows], dtype=np.int64)
    name = os.path.splitext(os.path.basename(path))[0]
    return Series(id=name, values=values, labels=labels)


def _parse_matrix_line(line: str, line_no: int) -> list[float]:
    parts = line.replace(",", " ").split()
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise MalformedRow(line_no, str(exc)) from None


def load_matrix_multivariate(data_path: str, label_path: str) -> Series:
    """Load a one-row-per-timestep matrix plus a one-label-per-line file."""
    for p in (data_path, label_path):
        if not os.path.isfile(p):
            raise MissingFile(p)
    values_rows: list[list[float]] = []
    with open(data_path) as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            row = _parse_matrix_line(line, line_no)
            if values_rows and len(row) != len(values_rows[0]):
                raise MalformedRow(line_no, "inconsistent column count")
            values_rows.append(row)
    labels_list: list[int] = []
    with open(label_path) as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                lab = int(float(line.strip().split(",")[0]))
            except ValueError as exc:
                raise MalformedRow(line_no, str(exc)) from None
            labels_list.append(lab)
    if not values_rows:
        raise EmptySeries(data_path)
    if len(values_rows) != len(labels_list):
        raise ShapeMismatch(
            f"{len(values_rows)} data rows vs {len(labels_list)} labels"
        )
    name = os.path.splitext(os.path.basename(data_path))[0]
    return Series(
        id=name,
        values=np.array(values_rows, dtype=np.float64),
        labels=np.array(labels_list, dtype=np.int64),
    )


def fit_norm_stats(series) -> NormStats:
    """Per-dimension mean and population std (ddof=0) over one or more series."""
    series_list = [series] if isinstance(series, Series) else list(series)
    if not series_list:
        raise InvalidArgs("need at least one series to fit normalization")
    values = np.concatenate([s.values for s in series_list], axis=0)
    if values.shape[0] < 2:
        raise InvalidArgs("need at least 2 timesteps to normalize")
    return NormStats(mean=values.mean(axis=0), std=values.std(axis=0))


def normalize(series: Series, stats: NormStats | None = None) -> Series:
    """Z-score each dimension.

    When ``stats`` is omitted they are fitted on this series (the train-split
    case); pass the train stats to transform a test split. Zero-variance
    dimensions map to all zeros. Labels are untouched.
    """
    if stats is None:
        stats = fit_norm_stats(series)
    std = np.where(stats.std > 0, stats.std, 1.0)
    scaled = (series.values - stats.mean) / std
    scaled[:, stats.std == 0] = 0.0
    return replace(series, values=scaled)


def split_series(series: Series, train_frac: float = 0.5) -> tuple[Series, Series]:
    """Temporal split: the first ``train_frac`` of timesteps become train."""
    if not 0.0 < train_frac < 1.0:
        raise InvalidArgs(f"train_frac must be in (0, 1), got {train_frac}")
    cut = int(round(series.length * train_frac))
    if cut < 1 or cut >= series.length:
        raise InvalidArgs(f"split at {cut} leaves an empty side (T={series.length})")
    train = Series(
        id=series.id,
        values=series.values[:cut],
        labels=series.labels[:cut],
        split="train",
        meta=dict(series.meta),
    )
    test = Series(
        id=series.id,
        values=series.values[cut:],
        labels=series.labels[cut:],
        split="test",
        meta=dict(series.meta, offset=cut),
    )
    return train, test


def synth_spike_series(
    T: int,
    d: int,
    n_anomalies: int,
    seed: int,
    noise_sigma: float = 0.1,
    guard_band: int = 25,
    min_gap: int = 3,
) -> Series:
    """Sine-plus-noise series with additive spikes of at least 6 sigma.

    Deterministic per seed. Spike positions avoid the first ``guard_band``
    steps (which never receive a full window at the default window length)
    and keep ``min_gap`` steps between each other.
    """
    if T < guard_band + n_anomalies or d < 1 or n_anomalies < 0:
        raise InvalidArgs(
            f"T={T}, d={d}, n_anomalies={n_anomalies} violates T >= guard+n, d >= 1"
        )
    base_rng = rng_for(seed, STREAM_SYNTH)
    spike_rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, STREAM_SYNTH, 1)))

    t = np.arange(T, dtype=np.float64)
    phases = np.linspace(0.0, np.pi, d, endpoint=False)
    periods = 50.0 + 13.0 * np.arange(d)
    values = np.sin(2.0 * np.pi * t[:, None] / periods[None, :] + phases[None, :])
    values += noise_sigma * base_rng.standard_normal((T, d))

    labels = np.zeros(T, dtype=np.int64)
    if n_anomalies > 0:
        candidates = np.arange(guard_band, T)
        while True:
            pos = np.sort(spike_rng.choice(candidates, size=n_anomalies, replace=False))
            if n_anomalies == 1 or np.diff(pos).min() >= min_gap:
                break
        amplitudes = spike_rng.uniform(6.0, 9.0, size=n_anomalies) * noise_sigma
        signs = spike_rng.choice((-1.0, 1.0), size=n_anomalies)
        dims = spike_rng.integers(0, d, size=n_anomalies)
        for p, a, s, dim in zip(pos, amplitudes, signs, dims):
            values[p, dim] += s * a
        labels[pos] = 1

    return Series(
        id=f"synth-{seed}",
        values=values,
        labels=labels,
        meta={"noise_sigma": noise_sigma, "spike_min_z": 6.0},
    )


def window_at(series: Series, t: int, n_steps: int) -> np.ndarray:
    """Rows values[t-n_steps+1 .. t], shape (n_steps, d)."""
    if n_steps < 1:
        raise InvalidArgs(f"n_steps must be >= 1, got {n_steps}")
    if t < n_steps - 1 or t >= series.length:
        raise OutOfRange(
            f"t={t} outside [{n_steps - 1}, {series.length - 1}] for n_steps={n_steps}"
        )
    return series.values[t - n_steps + 1 : t + 1]


def decided_indices(series: Series, n_steps: int) -> np.ndarray:
    """All t with a full window: n_steps-1 .. T-1."""
    if series.length < n_steps:
        raise EmptySeries(
            f"series of length {series.length} shorter than window {n_steps}"
        )
    return np.arange(n_steps - 1, series.length)


def all_windows(series: Series, n_steps: int) -> np.ndarray:
    """Stacked windows for every decided index, shape (T-n_steps+1, n_steps, d)."""
    idx = decided_indices(series, n_steps)
    out = np.empty((idx.size, n_steps, series.dims), dtype=np.float64)
    for i, t in enumerate(idx):
        out[i] = series.values[t - n_steps + 1 : t + 1]
    return out


def write_series_csv(series: Series, path: str) -> None:
    """Write a univariate series in the loader's CSV format."""
    if series.dims != 1:
        raise ShapeMismatch("CSV format is univariate; use write_series_matrix")
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["timestamp", "value", "is_anomaly"])
    for i in range(series.length):
        writer.writerow([i + 1, repr(float(series.values[i, 0])), int(series.labels[i])])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def write_series_matrix(series: Series, data_path: str, label_path: str) -> None:
    """Write a multivariate series as matrix + label files."""
    with open(data_path, "w") as fh:
        for row in series.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    with open(label_path, "w") as fh:
        for lab in series.labels:
            fh.write(f"{int(lab)}\n")
