import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfdesign.data import Bounds, DEFAULT_BOUNDS, Spectrum
from mfdesign.errors import GridMismatchError
from mfdesign.metrics import EvalReport, batch_rmse, nepd, nepd_stats, spectrum_rmse

GRID = np.linspace(2.5, 12.0, 20)


def spec(values):
    return Spectrum(GRID, np.asarray(values, dtype=float))


class TestSpectrumRmse:
    def test_identical_is_zero(self):
        s = spec(np.full(20, 0.4))
        assert spectrum_rmse(s, s) == 0.0

    def test_constant_offset(self):
        a = spec(np.full(20, 0.4))
        b = spec(np.full(20, 0.5))
        assert abs(spectrum_rmse(a, b) - 10.0) < 1e-12

    def test_alternating_offset(self):
        base = np.full(20, 0.5)
        delta = 0.1 * (-1.0) ** np.arange(20)
        assert abs(spectrum_rmse(spec(base), spec(base + delta)) - 10.0) < 1e-12

    def test_symmetry_and_positivity(self, rng):
        a = spec(rng.uniform(0, 1, 20))
        b = spec(rng.uniform(0, 1, 20))
        assert spectrum_rmse(a, b) == spectrum_rmse(b, a) > 0

    def test_grid_mismatch(self):
        a = spec(np.full(20, 0.4))
        b = Spectrum(np.linspace(2.5, 12.0, 21), np.full(21, 0.4))
        with pytest.raises(GridMismatchError):
            spectrum_rmse(a, b)


class TestBatchRmse:
    def test_zero_and_ten_percent_pair(self):
        a = spec(np.full(20, 0.5))
        b = spec(np.full(20, 0.6))
        pooled, worst = batch_rmse([a, a], [a, b])
        assert abs(worst - 10.0) < 1e-12
        assert abs(pooled - np.sqrt(0.005) * 100.0) < 1e-12

    def test_all_identical(self):
        a = spec(np.full(20, 0.5))
        assert batch_rmse([a, a], [a, a]) == (0.0, 0.0)

    def test_against_double_sum_oracle(self, rng):
        true = [spec(rng.uniform(0, 1, 20)) for _ in range(7)]
        pred = [spec(rng.uniform(0, 1, 20)) for _ in range(7)]
        pooled, worst = batch_rmse(true, pred)
        total = 0.0
        worst_ref = 0.0
        for t, p in zip(true, pred):
            inst = 0.0
            for j in range(20):
                d = t.values[j] - p.values[j]
                total += d * d
                inst += d * d
            worst_ref = max(worst_ref, np.sqrt(inst / 20) * 100)
        pooled_ref = np.sqrt(total / (7 * 20)) * 100
        assert abs(pooled - pooled_ref) < 1e-12
        assert abs(worst - worst_ref) < 1e-12

    def test_pooled_never_exceeds_maximum(self, rng):
        true = [spec(rng.uniform(0, 1, 20)) for _ in range(5)]
        pred = [spec(rng.uniform(0, 1, 20)) for _ in range(5)]
        pooled, worst = batch_rmse(true, pred)
        assert pooled <= worst + 1e-12

    def test_empty_error(self):
        with pytest.raises(ValueError):
            batch_rmse([], [])


class TestNepd:
    def test_identical(self):
        p = (0.5, 100.0, 20.0)
        assert nepd(p, p) == 0.0

    def test_full_range_difference_is_one(self):
        assert abs(nepd((0.2, 10.0, 15.0), (1.3, 700.0, 28.0)) - 1.0) < 1e-12

    def test_power_only_difference(self):
        a = (0.2, 100.0, 20.0)
        b = (1.3, 100.0, 20.0)
        assert abs(nepd(a, b) - 1.0 / np.sqrt(3.0)) < 1e-12

    def test_degenerate_bounds(self):
        with pytest.raises(ValueError):
            Bounds(lower=np.array([0.2, 10.0, 15.0]), upper=np.array([0.2, 700.0, 28.0]))

    def test_out_of_bounds_warns_and_exceeds_one(self):
        with pytest.warns(UserWarning, match="exceeds 1"):
            value = nepd((0.2, 10.0, 15.0), (3.0, 700.0, 28.0))
        assert value > 1.0

    @given(st.lists(st.floats(0.0, 1.0), min_size=6, max_size=6))
    @settings(max_examples=50, deadline=None)
    def test_symmetry_and_triangle(self, raw):
        lo, hi = DEFAULT_BOUNDS.lower, DEFAULT_BOUNDS.upper
        a = lo + np.array(raw[:3]) * (hi - lo)
        b = lo + np.array(raw[3:]) * (hi - lo)
        c = (a + b) / 2.0
        assert nepd(a, b) == nepd(b, a)
        assert nepd(a, b) <= nepd(a, c) + nepd(c, b) + 1e-12

    def test_normalization_invariance(self):
        a = np.array([0.5, 100.0, 20.0])
        b = np.array([0.9, 400.0, 25.0])
        scaled = Bounds(
            lower=DEFAULT_BOUNDS.lower * 10.0, upper=DEFAULT_BOUNDS.upper * 10.0
        )
        assert abs(nepd(a, b) - nepd(a * 10.0, b * 10.0, scaled)) < 1e-12


class TestNepdStats:
    def test_identical_pairs(self):
        p = (0.5, 100.0, 20.0)
        assert nepd_stats([(p, p), (p, p)]) == (0.0, 0.0)

    def test_zero_one_mix(self):
        lo = (0.2, 10.0, 15.0)
        hi = (1.3, 700.0, 28.0)
        avg, worst = nepd_stats([(lo, lo), (lo, hi)])
        assert abs(avg - 0.5) < 1e-12 and abs(worst - 1.0) < 1e-12

    def test_against_loop_oracle(self, rng):
        lo, hi = DEFAULT_BOUNDS.lower, DEFAULT_BOUNDS.upper
        pairs = [
            (lo + rng.uniform(0, 1, 3) * (hi - lo), lo + rng.uniform(0, 1, 3) * (hi - lo))
            for _ in range(11)
        ]
        avg, worst = nepd_stats(pairs)
        vals = []
        for t, p in pairs:
            acc = 0.0
            for k in range(3):
                d = (t[k] - p[k]) / (hi[k] - lo[k])
                acc += d * d
            vals.append(np.sqrt(acc / 3.0))
        assert abs(avg - np.mean(vals)) < 1e-12
        assert abs(worst - np.max(vals)) < 1e-12

    def test_empty_error(self):
        with pytest.raises(ValueError):
            nepd_stats([])


class TestEvalReport:
    def test_aggregates_and_serialization(self, tmp_path):
        report = EvalReport(rmse=[1.0, 3.0], nepd=[0.1, 0.5])
        assert report.avg_rmse == 2.0 and report.max_rmse == 3.0
        assert report.avg_nepd == 0.3 and report.max_nepd == 0.5
        payload = report.summary()
        assert payload["n_instances"] == 2
        path = tmp_path / "rows.csv"
        report.write_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "instance,rmse_pct,nepd"
        assert len(lines) == 3
