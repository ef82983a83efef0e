"""End-to-end runs: data prep, reconstruction model, episode loop with active
labeling, and final evaluation on the held-out half.

A run directory is self-contained: config.json, both checkpoints (with the
normalization statistics in their metadata), run.log.jsonl with one event per
line, labels.jsonl, metrics.json, and per-series prediction CSVs.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass

import numpy as np

from . import checkpoint
from .active import (
    GroundTruthOracle,
    LabelStore,
    StoreLabelView,
    apply_oracle,
    propagate_into_store,
    select_queries,
)
from .agent import AgentConfig, DqnTrainer, EpisodeReport, EpsilonSchedule, FullLabelView, greedy_actions
from .config import RunConfig, save_config
from .data import (
    NormStats,
    Series,
    all_windows,
    decided_indices,
    fit_norm_stats,
    load_csv_univariate,
    load_matrix_multivariate,
    normalize,
    split_series,
)
from .env import SeriesEnv
from .errors import ConfigError
from .metrics import SeriesEval, emit_report
from .potential import (
    ConstantPotential,
    HeuristicPotential,
    LlmClientConfig,
    LlmPotential,
    PotentialCache,
    PotentialProvider,
)
from .vae import LambdaController, VaeModel, train_vae

logger = logging.getLogger(__name__)


def load_dataset(config: RunConfig) -> Series:
    if not config.data_path:
        raise ConfigError("no data_path configured")
    if config.label_path:
        return load_matrix_multivariate(config.data_path, config.label_path)
    return load_csv_univariate(config.data_path)


def make_provider(config: RunConfig, run_dir: str | None = None) -> PotentialProvider:
    if config.potential == "constant":
        return ConstantPotential(config.constant_potential)
    if config.potential == "heuristic":
        return HeuristicPotential()
    cache = PotentialCache()
    cache_path = config.llm_cache_path
    if cache_path is None and run_dir is not None:
        cache_path = os.path.join(run_dir, "potential_cache.jsonl")
    if cache_path and os.path.exists(cache_path):
        cache = PotentialCache.load(cache_path)
    client_config = LlmClientConfig(base_url=config.llm_base_url, model=config.llm_model)
    return LlmPotential(client_config, cache=cache, cache_path=cache_path)


def agent_config(config: RunConfig) -> AgentConfig:
    return AgentConfig(
        hidden=config.hidden,
        lr=config.lr,
        gamma=config.gamma,
        buffer_capacity=config.buffer_capacity,
        batch_size=config.batch_size,
        epsilon=EpsilonSchedule(
            eps_start=config.eps_start,
            eps_end=config.eps_end,
            decay_steps=config.eps_decay_steps,
        ),
        target_sync_every=config.target_sync_every,
        update_every=config.update_every,
        warmup_steps=config.warmup_steps,
    )


class RunLog:
    """Append-only JSONL event stream for one run."""

    def __init__(self, path: str | None):
        self._fh = open(path, "a", encoding="utf-8") if path else None

    def event(self, kind: str, **fields) -> None:
        if self._fh is None:
            return
        row = {"event": kind, "wall_time": time.time()}
        row.update(fields)
        self._fh.write(json.dumps(row) + "\n")
        self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


@dataclass
class TrainResult:
    config: RunConfig
    run_dir: str | None
    reports: list[EpisodeReport]
    metrics: dict
    store: LabelStore
    trainer: DqnTrainer
    vae: VaeModel
    norm: NormStats


def _evaluate_series(trainer_net, series_list: list[Series], n_steps: int) -> list[SeriesEval]:
    evals = []
    for series in series_list:
        ts = decided_indices(series, n_steps)
        if ts.size == 0:
            continue
        preds = greedy_actions(trainer_net, all_windows(series, n_steps))
        evals.append(SeriesEval(series=series, t_values=ts, predictions=preds))
    return evals


def train_run(config: RunConfig, run_dir: str | None = None,
              series: Series | list[Series] | None = None,
              oracle=None, provider: PotentialProvider | None = None,
              store: LabelStore | None = None) -> TrainResult:
    """Full training run; pass series/oracle/provider to bypass file loading.

    The oracle defaults to answering queries from stored ground truth, which
    stands in for an annotator during scripted runs.
    """
    t_start = time.time()
    if run_dir is not None:
        os.makedirs(os.path.join(run_dir, "predictions"), exist_ok=True)
        save_config(config, os.path.join(run_dir, "config.json"))
    log = RunLog(os.path.join(run_dir, "run.log.jsonl") if run_dir else None)

    if series is None:
        series = load_dataset(config)
    raw_list = [series] if isinstance(series, Series) else list(series)
    raw_list.sort(key=lambda s: s.id)

    splits = [split_series(s, train_frac=config.train_frac) for s in raw_list]
    norm = fit_norm_stats([tr for tr, _ in splits])
    train_series = [normalize(tr, norm) for tr, _ in splits]
    test_series = [normalize(te, norm) for _, te in splits]
    d = train_series[0].dims
    n_steps = config.n_steps
    log.event("start", series=[s.id for s in raw_list], dim=d,
              train_lengths=[s.length for s in train_series],
              test_lengths=[s.length for s in test_series])

    # reconstruction model learns the normal regime from the training half;
    # rare contaminating anomalies are tolerated rather than filtered
    vae = VaeModel(input_dim=n_steps * d, hidden=config.vae_hidden,
                   latent=config.vae_latent, seed=config.seed)
    vae_windows = np.concatenate(
        [all_windows(s, n_steps).reshape(-1, n_steps * d) for s in train_series], axis=0
    )
    curve = train_vae(vae, vae_windows, epochs=config.vae_epochs, lr=config.vae_lr,
                      seed=config.seed, batch_size=config.vae_batch_size)
    log.event("vae_trained", epochs=len(curve), final_loss=curve[-1] if curve else None)

    if provider is None:
        provider = make_provider(config, run_dir)
    trainer = DqnTrainer(input_dim=d + 1, config=agent_config(config), seed=config.seed)

    max_r1 = float(np.mean([SeriesEnv(s, n_steps).max_episode_r1() for s in train_series]))
    ctrl = LambdaController(
        lam=config.lambda_init,
        alpha=config.lambda_alpha,
        r_target=config.r_target_frac * max_r1,
        lam_min=config.lambda_min,
        lam_max=config.lambda_max,
    )
    log.event("reward_target", max_r1=max_r1, r_target=ctrl.r_target)

    if store is None:
        store = LabelStore()
    if oracle is None:
        oracle = GroundTruthOracle(train_series)

    reports: list[EpisodeReport] = []
    for episode in range(config.episodes):
        for s in train_series:
            if config.mode == "full":
                view = FullLabelView(s)
            else:
                view = StoreLabelView(store, s.id)
            report, ctrl = trainer.run_episode(s, n_steps, vae, ctrl, provider,
                                               label_view=view)
            reports.append(report)
            log.event("episode", index=episode, **report.to_dict())
        if config.mode == "active":
            queries = select_queries(trainer.net, train_series, n_steps, store,
                                     config.queries_per_round)
            applied = apply_oracle(store, queries, oracle)
            spread = []
            for s in train_series:
                spread.extend(
                    propagate_into_store(
                        store, s, n_steps,
                        sigma=config.propagate_sigma,
                        top_k=config.propagate_top_k,
                        conf_threshold=config.propagate_conf_threshold,
                        iters=config.propagate_iters,
                    )
                )
            log.event("labels", index=episode,
                      queried=[q.to_dict() for q in queries],
                      answered=len(applied), propagated=len(spread),
                      known=len(store))

    provider.flush()
    norm_meta = {"norm_mean": norm.mean.tolist(), "norm_std": norm.std.tolist(),
                 "n_steps": n_steps}
    evals = _evaluate_series(trainer.net, test_series, n_steps)
    provenance = store.counts_by_provenance() if config.mode == "active" else None
    if run_dir is not None:
        vae.save(os.path.join(run_dir, "vae.ckpt"), extra_meta=norm_meta)
        trainer.net.save(os.path.join(run_dir, "qnet.ckpt"), extra_meta=norm_meta)
        store.save_jsonl(os.path.join(run_dir, "labels.jsonl"))
        metrics = emit_report(run_dir, evals, provenance_counts=provenance,
                              extra={"split": "test", "seed": config.seed,
                                     "episodes": config.episodes,
                                     "wall_time_s": time.time() - t_start},
                              adjusted=config.point_adjusted)
    else:
        from .metrics import evaluate as _ev
        if evals:
            truth = np.concatenate([e.truth for e in evals])
            preds = np.concatenate([e.predictions for e in evals])
            metrics = {"overall": _ev(truth, preds, adjusted=config.point_adjusted).to_dict()}
        else:
            metrics = {"overall": {}}
    log.event("done", overall=metrics.get("overall"), wall_time_s=time.time() - t_start)
    log.close()
    return TrainResult(config=config, run_dir=run_dir, reports=reports, metrics=metrics,
                       store=store, trainer=trainer, vae=vae, norm=norm)


def eval_run(run_dir: str, data_path: str | None = None, label_path: str | None = None,
             out_dir: str | None = None, split: str = "test") -> dict:
    """Greedy evaluation using a finished run's checkpoints.

    By default re-evaluates the configured data's held-out half; pass a
    different data_path to score new series, or split="all" to score every
    decision step.
    """
    from .agent import QNet
    from .config import load_config

    config = load_config(os.path.join(run_dir, "config.json"))
    if data_path is not None:
        config = config.with_overrides(data_path=data_path, label_path=label_path)
    qnet_path = os.path.join(run_dir, "qnet.ckpt")
    _, meta = checkpoint.load_params(qnet_path)
    net = QNet.load(qnet_path)
    norm = NormStats(mean=np.asarray(meta["norm_mean"], dtype=np.float64),
                     std=np.asarray(meta["norm_std"], dtype=np.float64))
    n_steps = int(meta.get("n_steps", config.n_steps))

    raw = load_dataset(config)
    if split == "all":
        target = [normalize(raw, norm)]
    elif split == "train":
        target = [normalize(split_series(raw, config.train_frac)[0], norm)]
    elif split == "test":
        target = [normalize(split_series(raw, config.train_frac)[1], norm)]
    else:
        raise ConfigError(f"split must be one of all/train/test, got {split!r}")

    evals = _evaluate_series(net, target, n_steps)
    if out_dir is None:
        out_dir = run_dir
    os.makedirs(out_dir, exist_ok=True)
    return emit_report(out_dir, evals, extra={"split": split},
                       adjusted=config.point_adjusted)
