import numpy as np
import pytest

from tsadrl.data import (
    Series,
    all_windows,
    dataset_stats,
    decided_indices,
    fit_norm_stats,
    load_csv_univariate,
    load_matrix_multivariate,
    normalize,
    split_series,
    synth_spike_series,
    window_at,
    write_series_csv,
    write_series_matrix,
)
from tsadrl.errors import (
    EmptySeries,
    InvalidArgs,
    MalformedRow,
    MissingFile,
    OutOfRange,
    ShapeMismatch,
)


def make_series(T=50, d=1, anomalies=(10, 30)):
    values = np.arange(T * d, dtype=np.float64).reshape(T, d)
    labels = np.zeros(T, dtype=np.int64)
    for a in anomalies:
        if a < T:
            labels[a] = 1
    return Series(id="s", values=values, labels=labels)


class TestSeries:
    def test_univariate_input_promoted_to_column(self):
        s = Series(id="a", values=np.arange(5.0), labels=np.zeros(5, dtype=int))
        assert s.values.shape == (5, 1)
        assert s.dims == 1 and s.length == 5

    def test_label_length_mismatch(self):
        with pytest.raises(ShapeMismatch):
            Series(id="a", values=np.zeros((5, 1)), labels=np.zeros(4, dtype=int))

    def test_nonbinary_labels_rejected(self):
        with pytest.raises(InvalidArgs):
            Series(id="a", values=np.zeros(3), labels=np.array([0, 2, 0]))

    def test_stats(self):
        stats = dataset_stats([make_series(), make_series()])
        assert stats.n_series == 2
        assert stats.anomaly_rate == pytest.approx(4 / 100)


class TestCsvLoader:
    def test_round_trip(self, tmp_path):
        s = make_series(T=40)
        path = tmp_path / "s.csv"
        write_series_csv(s, str(path))
        loaded = load_csv_univariate(str(path))
        np.testing.assert_array_equal(loaded.values, s.values)
        np.testing.assert_array_equal(loaded.labels, s.labels)

    def test_rows_sorted_by_timestamp(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text(
            "timestamp,value,is_anomaly\n3,30.0,0\n1,10.0,1\n2,20.0,0\n"
        )
        s = load_csv_univariate(str(path))
        np.testing.assert_array_equal(s.values[:, 0], [10.0, 20.0, 30.0])
        np.testing.assert_array_equal(s.labels, [1, 0, 0])

    def test_headerless(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("1,10.0,0\n2,20.0,1\n")
        s = load_csv_univariate(str(path))
        assert s.length == 2 and s.labels[1] == 1

    def test_malformed_row_reports_line(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("timestamp,value,is_anomaly\n1,1.0,0\n2,not-a-number,0\n")
        with pytest.raises(MalformedRow) as err:
            load_csv_univariate(str(path))
        assert err.value.line_no == 3

    def test_missing_file(self):
        with pytest.raises(MissingFile):
            load_csv_univariate("/nonexistent/nope.csv")

    def test_empty(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("timestamp,value,is_anomaly\n")
        with pytest.raises(EmptySeries):
            load_csv_univariate(str(path))


class TestMatrixLoader:
    def test_round_trip(self, tmp_path):
        s = make_series(T=30, d=3)
        dp, lp = tmp_path / "d.txt", tmp_path / "l.txt"
        write_series_matrix(s, str(dp), str(lp))
        loaded = load_matrix_multivariate(str(dp), str(lp))
        np.testing.assert_array_equal(loaded.values, s.values)
        np.testing.assert_array_equal(loaded.labels, s.labels)

    def test_length_mismatch(self, tmp_path):
        dp, lp = tmp_path / "d.txt", tmp_path / "l.txt"
        dp.write_text("1.0 2.0\n3.0 4.0\n")
        lp.write_text("0\n")
        with pytest.raises(ShapeMismatch):
            load_matrix_multivariate(str(dp), str(lp))

    def test_ragged_rows_name_the_line(self, tmp_path):
        dp, lp = tmp_path / "d.txt", tmp_path / "l.txt"
        dp.write_text("1.0 2.0\n3.0\n")
        lp.write_text("0\n0\n")
        with pytest.raises(MalformedRow) as err:
            load_matrix_multivariate(str(dp), str(lp))
        assert err.value.line_no == 2


class TestNormalize:
    def test_z_scores(self):
        s = make_series(T=20)
        out = normalize(s)
        assert abs(out.values.mean()) < 1e-12
        assert out.values.std() == pytest.approx(1.0)
        np.testing.assert_array_equal(out.labels, s.labels)

    def test_zero_variance_dim_maps_to_zero(self):
        values = np.column_stack([np.arange(10.0), np.full(10, 7.0)])
        s = Series(id="a", values=values, labels=np.zeros(10, dtype=int))
        out = normalize(s)
        np.testing.assert_array_equal(out.values[:, 1], np.zeros(10))

    def test_train_stats_applied_to_test(self):
        s = make_series(T=40)
        train, test = split_series(s, 0.5)
        stats = fit_norm_stats(train)
        out = normalize(test, stats)
        expected = (test.values - stats.mean) / stats.std
        np.testing.assert_allclose(out.values, expected)


class TestSplit:
    def test_even_split_is_temporal(self):
        s = make_series(T=40)
        train, test = split_series(s, 0.5)
        assert train.length == test.length == 20
        np.testing.assert_array_equal(train.values, s.values[:20])
        np.testing.assert_array_equal(test.values, s.values[20:])
        assert train.split == "train" and test.split == "test"
        assert test.meta["offset"] == 20

    def test_degenerate_fraction_rejected(self):
        with pytest.raises(InvalidArgs):
            split_series(make_series(T=40), 1.0)


class TestSynth:
    def test_deterministic_per_seed(self):
        a = synth_spike_series(T=300, d=1, n_anomalies=5, seed=9)
        b = synth_spike_series(T=300, d=1, n_anomalies=5, seed=9)
        np.testing.assert_array_equal(a.values, b.values)
        np.testing.assert_array_equal(a.labels, b.labels)
        c = synth_spike_series(T=300, d=1, n_anomalies=5, seed=10)
        assert not np.array_equal(a.values, c.values)

    def test_anomaly_count_and_guard_band(self):
        s = synth_spike_series(T=500, d=2, n_anomalies=12, seed=3)
        assert int(s.labels.sum()) == 12
        assert s.labels[:25].sum() == 0

    def test_base_noise_identical_with_and_without_spikes(self):
        clean = synth_spike_series(T=300, d=1, n_anomalies=0, seed=4)
        spiky = synth_spike_series(T=300, d=1, n_anomalies=6, seed=4)
        mask = spiky.labels == 0
        np.testing.assert_array_equal(clean.values[mask], spiky.values[mask])

    def test_spikes_are_large(self):
        s = synth_spike_series(T=800, d=1, n_anomalies=10, seed=5, noise_sigma=0.1)
        clean = synth_spike_series(T=800, d=1, n_anomalies=0, seed=5, noise_sigma=0.1)
        deltas = np.abs(s.values - clean.values)[s.labels == 1]
        assert (deltas >= 6 * 0.1 - 1e-12).all()
        assert (deltas <= 9 * 0.1 + 1e-12).all()


class TestWindows:
    def test_window_contents(self):
        s = make_series(T=50)
        w = window_at(s, 10, 4)
        np.testing.assert_array_equal(w[:, 0], [7, 8, 9, 10])

    def test_bounds(self):
        s = make_series(T=50)
        with pytest.raises(OutOfRange):
            window_at(s, 2, 4)
        with pytest.raises(OutOfRange):
            window_at(s, 50, 4)
        window_at(s, 3, 4)
        window_at(s, 49, 4)

    def test_all_windows_matches_window_at(self):
        s = make_series(T=30, d=2)
        ws = all_windows(s, 5)
        ts = decided_indices(s, 5)
        assert ws.shape == (26, 5, 2)
        for i, t in enumerate(ts):
            np.testing.assert_array_equal(ws[i], window_at(s, int(t), 5))

    def test_decided_indices_range(self):
        s = make_series(T=30)
        ts = decided_indices(s, 25)
        np.testing.assert_array_equal(ts, np.arange(24, 30))
