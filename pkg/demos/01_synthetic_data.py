"""
Synthetic spike series: generation, windows, normalization
==========================================================

Walks through the data layer: build a seeded sine-plus-noise series with
injected spikes, slice it into fixed windows, and z-score it with stats
fitted on the train half only.
"""

import numpy as np

from tsadrl.data import (
    synth_spike_series,
    split_series,
    fit_norm_stats,
    normalize,
    window_at,
    all_windows,
    dataset_stats,
    write_series_csv,
)

# A 600-step univariate series with 8 spikes. Same seed, same series.
series = synth_spike_series(T=600, d=1, n_anomalies=8, seed=42)
print(f"series id: {series.id}")
print(f"length={series.length} dims={series.dims} anomalies={int(series.labels.sum())}")
print(f"anomaly steps: {np.flatnonzero(series.labels).tolist()}")

stats = dataset_stats([series])
print(f"{stats.n_series} series, {stats.dims}-dim, anomaly rate {stats.anomaly_rate:.4f}")
print(f"value range: [{series.values.min():.3f}, {series.values.max():.3f}]")

# Chronological split. Labels travel with their half.
train, test = split_series(series, train_frac=0.5)
print(f"\ntrain: {train.length} steps, {int(train.labels.sum())} anomalies")
print(f"test:  {test.length} steps, {int(test.labels.sum())} anomalies")

# Normalization stats come from the train half and are reused verbatim on test,
# so the test half is scored in the train half's units.
norm = fit_norm_stats(train)
train_n = normalize(train, norm)
test_n = normalize(test, norm)
print(f"\nnorm stats: mean={norm.mean.ravel()} std={norm.std.ravel()}")
print(f"train half after scaling: mean={train_n.values.mean():+.4f} std={train_n.values.std():.4f}")
print(f"test half after scaling:  mean={test_n.values.mean():+.4f} std={test_n.values.std():.4f}")

# The agent only ever sees windows: n_steps rows ending at the decision step.
n_steps = 25
w = window_at(train_n, t=100, n_steps=n_steps)
print(f"\nwindow at t=100: shape {w.shape}, last value {w[-1, 0]:+.3f}")

W = all_windows(train_n, n_steps)
print(f"all train windows: shape {W.shape} (one per decided step)")

# A spike window sticks out even after global scaling.
spike_t = int(np.flatnonzero(train.labels)[0])
if spike_t >= n_steps - 1:
    ws = window_at(train_n, spike_t, n_steps)
    print(f"spike window at t={spike_t}: |last value| = {abs(ws[-1, 0]):.2f}"
          f" vs window median {np.median(np.abs(ws)):.2f}")

# Round trip through the CSV format used by the command line tools.
out = "/tmp/demo_series.csv"
write_series_csv(series, out)
print(f"\nwrote {out} (timestamp,value,is_anomaly rows)")
