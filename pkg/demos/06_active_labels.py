"""
Active learning: margin queries, the label store, propagation
=============================================================

A fresh Q-network is least sure where |Q(s,0) - Q(s,1)| is smallest.
Those steps become queries, an oracle answers a handful, and label
propagation spreads the answers to nearby points in feature space.
"""

import numpy as np

from tsadrl.data import synth_spike_series, split_series, fit_norm_stats, normalize
from tsadrl.agent import QNet
from tsadrl.active import (
    LabelStore,
    LabelRecord,
    select_queries,
    GroundTruthOracle,
    apply_oracle,
    kernel_weight,
    propagate,
    propagate_into_store,
    anomaly_scores,
)

series = synth_spike_series(T=400, d=1, n_anomalies=6, seed=3)
train, _ = split_series(series, 0.5)
train = normalize(train, fit_norm_stats(train))
n_steps = 12

# Rank every unlabeled step by Q-margin; smallest margin = most informative.
# Per-step input is the value plus the action-indicator flag, hence dims + 1.
net = QNet(input_dim=train.dims + 1, hidden=16, seed=0)
store = LabelStore()
queries = select_queries(net, [train], n_steps, store, k=5)
print("five most uncertain steps:")
for q in queries:
    print(f"  t={q.t:>3}  margin={q.margin:.5f}")

# A ground-truth oracle answers them (a human would via the annotation UI).
oracle = GroundTruthOracle([train])
added = apply_oracle(store, queries, oracle)
print(f"\noracle answered {len(added)} queries")
print(f"store counts: {store.counts_by_provenance()}")

# Human answers outrank machine ones and are never overwritten silently.
t0 = added[0].t
store.put(LabelRecord(series=train.id, t=t0, label=1 - added[0].label,
                      provenance="human", confidence=1.0))
print(f"human relabel at t={t0}: store now says label "
      f"{store.get(train.id, t0).label} ({store.get(train.id, t0).provenance})")

# The kernel that carries labels between points: distance 1 at sigma 1
# weighs exp(-0.5) ~ 0.607, and the weight decays smoothly from there.
for dist in (0.0, 1.0, 2.0):
    w = kernel_weight(np.array([0.0]), np.array([dist]), sigma=1.0)
    print(f"kernel weight at distance {dist}: {w:.5f}")

# Toy propagation: two tight blobs, one seed each, everything else inferred.
blob = np.vstack([np.random.default_rng(1).normal(0.0, 0.05, (10, 2)),
                  np.random.default_rng(2).normal(3.0, 0.05, (10, 2))])
out = propagate(blob, seed_labels={0: 0, 10: 1}, sigma=1.0, top_k=20,
                conf_threshold=0.9)
got = {p.index: p.label for p in out}
print(f"\npropagated {len(out)} of 18 unlabeled blob points")
print(f"all label-0 blob points got 0: {all(got[i] == 0 for i in range(1, 10))}")
print(f"all label-1 blob points got 1: {all(got[i] == 1 for i in range(11, 20))}")
print(f"confidences: min {min(p.confidence for p in out):.4f}")

# On a real series the features are robust spike scores per step, and
# propagate_into_store rebuilds machine labels from scratch each round so
# stale guesses never seed later rounds.
scores = anomaly_scores(train.values)
print(f"\nspike score range on train half: [{scores.min():.2f}, {scores.max():.2f}]")
recs = propagate_into_store(store, train, n_steps, top_k=50, conf_threshold=0.8,
                            iters=500)
print(f"propagated {len(recs)} records into the store")
print(f"final store counts: {store.counts_by_provenance()}")
