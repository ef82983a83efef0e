"""End-to-end run orchestration: artifacts, determinism, modes, re-evaluation."""

import json
import os

import numpy as np
import pytest

from tsadrl.active import LabelRecord, LabelStore
from tsadrl.config import RunConfig
from tsadrl.data import synth_spike_series
from tsadrl.errors import ConfigError
from tsadrl.pipeline import eval_run, load_dataset, train_run

SMALL = dict(
    mode="active",
    episodes=2,
    n_steps=8,
    train_frac=0.5,
    hidden=8,
    lr=1e-3,
    gamma=0.9,
    buffer_capacity=500,
    batch_size=16,
    eps_start=1.0,
    eps_end=0.1,
    eps_decay_steps=100,
    target_sync_every=50,
    update_every=4,
    warmup_steps=20,
    vae_epochs=2,
    vae_hidden=(8, 4),
    vae_latent=2,
    queries_per_round=4,
    propagate_top_k=5,
    potential="constant",
)


def small_config(**overrides) -> RunConfig:
    merged = dict(SMALL)
    merged.update(overrides)
    return RunConfig(seed=overrides.pop("seed", merged.pop("seed", 0)), **merged)


@pytest.fixture(scope="module")
def tiny_series():
    return synth_spike_series(T=120, d=1, n_anomalies=3, seed=11, guard_band=8)


class TestArtifacts:
    def test_run_dir_layout(self, tiny_series, tmp_path):
        run_dir = str(tmp_path / "run")
        train_run(small_config(seed=0), run_dir=run_dir, series=tiny_series)
        for name in ("config.json", "qnet.ckpt", "vae.ckpt", "labels.jsonl",
                     "metrics.json", "run.log.jsonl"):
            assert os.path.isfile(os.path.join(run_dir, name)), name
        preds = os.listdir(os.path.join(run_dir, "predictions"))
        assert preds and all(p.endswith(".csv") for p in preds)

    def test_metrics_json_structure(self, tiny_series, tmp_path):
        run_dir = str(tmp_path / "run")
        res = train_run(small_config(seed=0), run_dir=run_dir, series=tiny_series)
        with open(os.path.join(run_dir, "metrics.json")) as fh:
            on_disk = json.load(fh)
        overall = on_disk["overall"]
        for key in ("precision", "recall", "f1"):
            assert 0.0 <= overall[key] <= 1.0
        assert on_disk["overall"] == res.metrics["overall"]
        assert on_disk["split"] == "test"
        assert on_disk["seed"] == 0
        # active-mode reports carry label provenance tallies
        assert "label_provenance" in on_disk
        assert set(on_disk["label_provenance"]) >= {"human", "ground_truth", "propagated"}

    def test_run_log_event_stream(self, tiny_series, tmp_path):
        run_dir = str(tmp_path / "run")
        cfg = small_config(seed=0)
        train_run(cfg, run_dir=run_dir, series=tiny_series)
        with open(os.path.join(run_dir, "run.log.jsonl")) as fh:
            events = [json.loads(line) for line in fh]
        kinds = [e["event"] for e in events]
        assert kinds[0] == "start"
        assert kinds[-1] == "done"
        assert kinds.count("episode") == cfg.episodes
        assert kinds.count("labels") == cfg.episodes
        assert "vae_trained" in kinds and "reward_target" in kinds

    def test_no_run_dir_writes_nothing(self, tiny_series, tmp_path):
        before = set(os.listdir(tmp_path))
        res = train_run(small_config(seed=0), run_dir=None, series=tiny_series)
        assert set(os.listdir(tmp_path)) == before
        assert "f1" in res.metrics["overall"]

    def test_checkpoint_meta_records_normalization(self, tiny_series, tmp_path):
        from tsadrl import checkpoint

        run_dir = str(tmp_path / "run")
        res = train_run(small_config(seed=0), run_dir=run_dir, series=tiny_series)
        _, meta = checkpoint.load_params(os.path.join(run_dir, "qnet.ckpt"))
        np.testing.assert_allclose(meta["norm_mean"], res.norm.mean)
        np.testing.assert_allclose(meta["norm_std"], res.norm.std)
        assert meta["n_steps"] == small_config(seed=0).n_steps


class TestDeterminism:
    def test_same_seed_same_run(self, tiny_series):
        a = train_run(small_config(seed=3), series=tiny_series)
        b = train_run(small_config(seed=3), series=tiny_series)
        assert a.metrics == b.metrics
        for name, param in a.trainer.net.params.items():
            np.testing.assert_array_equal(param, b.trainer.net.params[name])
        assert [r.r1_sum for r in a.reports] == [r.r1_sum for r in b.reports]

    def test_different_seed_diverges(self, tiny_series):
        a = train_run(small_config(seed=3), series=tiny_series)
        b = train_run(small_config(seed=4), series=tiny_series)
        assert any(
            not np.array_equal(param, b.trainer.net.params[name])
            for name, param in a.trainer.net.params.items()
        )


class TestModes:
    def test_full_mode_skips_labeling(self, tiny_series):
        res = train_run(small_config(seed=0, mode="full"), series=tiny_series)
        assert len(res.store) == 0
        assert "provenance" not in res.metrics

    def test_active_mode_fills_store(self, tiny_series):
        cfg = small_config(seed=0)
        res = train_run(cfg, series=tiny_series)
        counts = res.store.counts_by_provenance()
        assert counts["ground_truth"] >= 1
        assert counts["ground_truth"] <= cfg.episodes * cfg.queries_per_round
        assert len(res.store) == counts["ground_truth"] + counts["propagated"]

    def test_episode_reports_one_per_series_per_episode(self, tiny_series):
        cfg = small_config(seed=0, episodes=3)
        res = train_run(cfg, series=tiny_series)
        assert len(res.reports) == 3
        assert all(r.series_id == tiny_series.id for r in res.reports)
        # env_steps is the trainer's cumulative counter, sampled per episode
        decisions = tiny_series.length // 2 - cfg.n_steps + 1
        assert [r.env_steps for r in res.reports] == [
            decisions, 2 * decisions, 3 * decisions]
        assert all(len(r.steps) == decisions for r in res.reports)

    def test_lambda_chains_across_episodes(self, tiny_series):
        res = train_run(small_config(seed=0, episodes=3), series=tiny_series)
        for prev, cur in zip(res.reports, res.reports[1:]):
            assert cur.lambda_before == prev.lambda_after

    def test_preseeded_human_labels_survive(self, tiny_series):
        store = LabelStore()
        store.put(LabelRecord(series=tiny_series.id, t=9, label=1,
                              provenance="human", confidence=1.0))
        res = train_run(small_config(seed=0), series=tiny_series, store=store)
        rec = res.store.get(tiny_series.id, 9)
        assert rec.provenance == "human" and rec.label == 1

    def test_two_series_sorted_and_reported(self, tmp_path):
        s1 = synth_spike_series(T=100, d=1, n_anomalies=2, seed=5, guard_band=8)
        s2 = synth_spike_series(T=100, d=1, n_anomalies=2, seed=6, guard_band=8)
        s2 = type(s2)(id="zz_" + s2.id, values=s2.values, labels=s2.labels)
        run_dir = str(tmp_path / "run")
        res = train_run(small_config(seed=0, episodes=1), run_dir=run_dir,
                        series=[s2, s1])
        ids = [r.series_id for r in res.reports]
        assert ids == sorted([s1.id, s2.id])
        with open(os.path.join(run_dir, "metrics.json")) as fh:
            per_series = json.load(fh)["per_series"]
        assert set(per_series) == {s1.id, s2.id}


def write_series_csv(series, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("timestamp,value,is_anomaly\n")
        for t in range(series.length):
            fh.write(f"{t},{float(series.values[t, 0])!r},{int(series.labels[t])}\n")


class TestEvalRun:
    @pytest.fixture()
    def finished_run(self, tiny_series, tmp_path):
        data_path = str(tmp_path / "series.csv")
        write_series_csv(tiny_series, data_path)
        cfg = small_config(seed=0, data_path=data_path)
        run_dir = str(tmp_path / "run")
        res = train_run(cfg, run_dir=run_dir)
        return run_dir, res

    def test_reproduces_training_metrics(self, finished_run, tmp_path):
        run_dir, res = finished_run
        out_dir = str(tmp_path / "eval")
        report = eval_run(run_dir, out_dir=out_dir)
        assert report["overall"]["f1"] == pytest.approx(res.metrics["overall"]["f1"])
        assert report["overall"]["tp"] == res.metrics["overall"]["tp"]
        assert os.path.isfile(os.path.join(out_dir, "metrics.json"))

    def test_split_all_scores_every_decision(self, finished_run, tiny_series, tmp_path):
        run_dir, _ = finished_run
        report = eval_run(run_dir, out_dir=str(tmp_path / "eval_all"), split="all")
        counted = sum(report["overall"][k] for k in ("tp", "fp", "fn", "tn"))
        assert counted == tiny_series.length - small_config(seed=0).n_steps + 1

    def test_unknown_split_rejected(self, finished_run):
        run_dir, _ = finished_run
        with pytest.raises(ConfigError, match="split"):
            eval_run(run_dir, split="validation")

    def test_new_data_path_overrides(self, finished_run, tmp_path):
        run_dir, _ = finished_run
        other = synth_spike_series(T=90, d=1, n_anomalies=2, seed=7, guard_band=8)
        data_path = str(tmp_path / "other.csv")
        write_series_csv(other, data_path)
        report = eval_run(run_dir, data_path=data_path,
                          out_dir=str(tmp_path / "eval_other"), split="all")
        counted = sum(report["overall"][k] for k in ("tp", "fp", "fn", "tn"))
        assert counted == other.length - small_config(seed=0).n_steps + 1


def test_load_dataset_requires_path():
    with pytest.raises(ConfigError, match="data_path"):
        load_dataset(small_config(seed=0))
