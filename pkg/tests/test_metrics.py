"""Point-wise detection metrics, reporting, and published baseline numbers."""

import json
import os

import numpy as np
import pytest

from tsadrl.data import Series
from tsadrl.errors import InvalidArgs, LengthMismatch
from tsadrl.metrics import (
    REFERENCE_BASELINES,
    ConfusionCounts,
    SeriesEval,
    confusion,
    evaluate,
    emit_report,
    f1_from_pr,
    point_adjust,
    prf1,
    read_predictions_csv,
    write_predictions_csv,
)


class TestConfusion:
    def test_counts(self):
        truth = [1, 1, 0, 0, 1, 0]
        pred = [1, 0, 1, 0, 1, 0]
        c = confusion(truth, pred)
        assert (c.tp, c.fp, c.tn, c.fn) == (2, 1, 2, 1)
        assert c.total == 6

    def test_empty_inputs(self):
        c = confusion([], [])
        assert c.total == 0

    def test_non_binary_rejected(self):
        with pytest.raises(InvalidArgs):
            confusion([0, 2], [0, 1])
        with pytest.raises(InvalidArgs):
            confusion([[0], [1]], [[0], [1]])

    def test_length_mismatch_rejected(self):
        with pytest.raises(LengthMismatch):
            confusion([0, 1], [0, 1, 1])


class TestPrf1:
    def test_perfect(self):
        assert prf1(5, 0, 0) == (1.0, 1.0, 1.0)

    def test_zero_denominators_give_zero(self):
        assert prf1(0, 0, 0) == (0.0, 0.0, 0.0)
        assert prf1(0, 3, 0) == (0.0, 0.0, 0.0)
        assert prf1(0, 0, 3) == (0.0, 0.0, 0.0)

    def test_hand_case(self):
        p, r, f1 = prf1(3, 1, 2)
        assert p == pytest.approx(0.75)
        assert r == pytest.approx(0.6)
        assert f1 == pytest.approx(2 * 0.75 * 0.6 / 1.35)

    def test_f1_from_pr(self):
        assert f1_from_pr(0.0, 0.0) == 0.0
        assert f1_from_pr(1.0, 1.0) == 1.0
        assert f1_from_pr(0.5, 0.5) == pytest.approx(0.5)


class TestPointAdjust:
    def test_one_hit_credits_whole_segment(self):
        truth = [0, 1, 1, 1, 0, 1, 1]
        pred = [0, 0, 1, 0, 0, 0, 0]
        adjusted = point_adjust(truth, pred)
        assert adjusted.tolist() == [0, 1, 1, 1, 0, 0, 0]

    def test_missed_segment_stays_missed(self):
        truth = [1, 1, 0, 1, 1]
        pred = [0, 0, 1, 0, 0]
        assert point_adjust(truth, pred).tolist() == [0, 0, 1, 0, 0]

    def test_false_positives_untouched(self):
        truth = [0, 0, 0]
        pred = [1, 0, 1]
        assert point_adjust(truth, pred).tolist() == [1, 0, 1]

    def test_input_not_mutated(self):
        pred = np.array([0, 1, 0, 0])
        point_adjust(np.array([1, 1, 0, 0]), pred)
        assert pred.tolist() == [0, 1, 0, 0]

    def test_evaluate_adjusted_flag(self):
        truth = [1, 1, 1, 0]
        pred = [1, 0, 0, 0]
        plain = evaluate(truth, pred)
        adj = evaluate(truth, pred, adjusted=True)
        assert plain.recall == pytest.approx(1 / 3)
        assert adj.recall == 1.0


class TestReferenceBaselines:
    def test_datasets_present(self):
        assert set(REFERENCE_BASELINES) == {"yahoo_a1", "smd"}
        for dataset in REFERENCE_BASELINES.values():
            assert len(dataset) == 9

    def test_f1_consistent_with_precision_recall(self):
        # Every published (P, R, F1) triple must satisfy the harmonic-mean
        # identity to rounding limits.
        for dataset, methods in REFERENCE_BASELINES.items():
            for method, (p, r, f1) in methods.items():
                recomputed = f1_from_pr(p, r)
                assert f1 == pytest.approx(recomputed, abs=5e-4), (
                    f"{dataset}/{method}: {f1} vs {recomputed:.4f}"
                )

    def test_values_are_rates(self):
        for methods in REFERENCE_BASELINES.values():
            for p, r, f1 in methods.values():
                for v in (p, r, f1):
                    assert 0.0 <= v <= 1.0


def make_eval(sid, labels, preds, n_steps=3):
    labels = np.asarray(labels, dtype=np.int64)
    values = np.arange(labels.size, dtype=np.float64)[:, None]
    series = Series(id=sid, values=values, labels=labels)
    t_values = np.arange(n_steps - 1, labels.size)
    return SeriesEval(series=series, t_values=t_values,
                      predictions=np.asarray(preds, dtype=np.int64))


class TestSeriesEval:
    def test_truth_slices_labels(self):
        ev = make_eval("a", [0, 0, 1, 0, 1], [1, 0, 1])
        assert ev.truth.tolist() == [1, 0, 1]

    def test_shape_mismatch_rejected(self):
        with pytest.raises(LengthMismatch):
            make_eval("a", [0, 0, 1, 0], [1, 0, 1, 0, 0])


class TestReporting:
    def test_emit_report_layout_and_micro_average(self, tmp_path):
        run_dir = str(tmp_path)
        evals = [
            make_eval("a", [0, 0, 1, 0, 1], [1, 1, 1]),   # truth 1,0,1 -> tp=2 fp=1
            make_eval("b", [0, 0, 0, 1, 0], [0, 0, 0]),   # truth 0,1,0 -> fn=1 tn=2
        ]
        payload = emit_report(run_dir, evals, provenance_counts={"human": 2},
                              extra={"split": "test"})
        assert os.path.exists(os.path.join(run_dir, "metrics.json"))
        assert os.path.exists(os.path.join(run_dir, "predictions", "a.csv"))
        assert os.path.exists(os.path.join(run_dir, "predictions", "b.csv"))
        on_disk = json.load(open(os.path.join(run_dir, "metrics.json")))
        assert on_disk["overall"] == payload["overall"]
        # micro average pools counts: tp=2 fp=1 fn=1 -> P=2/3 R=2/3
        assert payload["overall"]["tp"] == 2
        assert payload["overall"]["precision"] == pytest.approx(2 / 3)
        assert payload["overall"]["recall"] == pytest.approx(2 / 3)
        assert payload["per_series"]["a"]["precision"] == pytest.approx(2 / 3)
        assert payload["per_series"]["b"]["recall"] == 0.0
        assert payload["label_provenance"] == {"human": 2}
        assert payload["split"] == "test"
        assert payload["point_adjusted"] is False

    def test_empty_eval_list(self, tmp_path):
        payload = emit_report(str(tmp_path), [])
        assert payload["overall"]["f1"] == 0.0

    def test_predictions_csv_round_trip_recomputes_f1(self, tmp_path):
        ev = make_eval("a", [0, 1, 1, 0, 1, 0, 0, 1], [1, 1, 0, 1, 0, 1])
        direct = evaluate(ev.truth, ev.predictions)
        path = str(tmp_path / "a.csv")
        write_predictions_csv(path, ev)
        truth, pred = read_predictions_csv(path)
        from_csv = evaluate(truth, pred)
        assert from_csv.f1 == direct.f1
        assert from_csv.counts == direct.counts

    def test_csv_value_column_is_exact(self, tmp_path):
        ev = make_eval("a", [0, 0, 1, 0], [0, 1])
        path = str(tmp_path / "a.csv")
        write_predictions_csv(path, ev)
        import csv as csvmod

        rows = list(csvmod.DictReader(open(path)))
        # channel-mean of the t-th row of values; values are arange
        assert float(rows[0]["value"]) == 2.0
        assert [r["t"] for r in rows] == ["2", "3"]


class TestConfusionCounts:
    def test_to_dict(self):
        c = ConfusionCounts(tp=1, fp=2, tn=3, fn=4)
        assert c.to_dict() == {"tp": 1, "fp": 2, "tn": 3, "fn": 4}
