import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfdesign.data import (
    DEFAULT_BOUNDS,
    Dataset,
    POWER_VALUES,
    SPACING_VALUES,
    SPEED_VALUES,
    Spectrum,
    SplitSpec,
    default_wavelength_grid,
    kfold_indices,
    load_dataset,
    load_target,
    make_step_target,
    shuffle_split,
    synth_generate,
    synthetic_emissivity,
    write_dataset,
    write_target,
)
from mfdesign.errors import DataFormatError


def oracle_reference(power, speed, spacing, wl):
    """Independent transcription of the synthetic surface for one point."""
    dose = power / (speed * spacing * 1e-3)
    depth = 1.0 - np.exp(-40.0 * dose)
    tilt = 0.55 * np.exp(-3.0 * dose)
    return 0.14 + 0.86 * depth * (1.0 - tilt * (wl - 2.5) / 9.5)


class TestCsvRoundTrip:
    def test_small_csv_parses(self, tmp_path):
        path = tmp_path / "small.csv"
        header = "power_w,speed_mm_s,spacing_um," + ",".join(
            f"eps_{w:.4f}" for w in [3.0, 4.0, 5.0, 6.0, 7.0]
        )
        lines = [header] + [
            f"0.5,100,20,{i*0.1},{i*0.1},{i*0.1},{i*0.1},{i*0.1}" for i in range(4)
        ]
        path.write_text("\n".join(lines) + "\n")
        ds = load_dataset(path)
        assert len(ds) == 4
        assert ds.grid.size == 5
        assert ds.params[0].tolist() == [0.5, 100.0, 20.0]

    def test_missing_cell_names_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "power_w,speed_mm_s,spacing_um,eps_3.0000,eps_4.0000\n"
            "0.5,100,20,0.3,0.4\n"
            "0.5,100,20,0.3\n"
        )
        with pytest.raises(DataFormatError, match="row 3"):
            load_dataset(path)

    def test_non_numeric_cell_names_row_and_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "power_w,speed_mm_s,spacing_um,eps_3.0000\n0.5,oops,20,0.3\n"
        )
        with pytest.raises(DataFormatError, match="row 2.*speed_mm_s"):
            load_dataset(path)

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("power,speed,spacing,eps_3.0\n0.5,100,20,0.3\n")
        with pytest.raises(DataFormatError, match="leading columns"):
            load_dataset(path)

    def test_write_load_write_is_bit_identical(self, tmp_path):
        ds = synth_generate(25, default_wavelength_grid(11), noise_sd=0.01, seed=9)
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        write_dataset(ds, first)
        write_dataset(load_dataset(first), second)
        assert first.read_bytes() == second.read_bytes()

    def test_target_round_trip(self, tmp_path):
        target = make_step_target(default_wavelength_grid(21), 4.6)
        path = tmp_path / "t.csv"
        write_target(target, path)
        loaded = load_target(path)
        assert np.array_equal(loaded.values, target.values)

    def test_bounds_validation(self, tmp_path):
        grid = default_wavelength_grid(5)
        ds = Dataset(grid, [[5.0, 100.0, 20.0]], [[0.5] * 5])
        path = tmp_path / "oob.csv"
        write_dataset(ds, path)
        load_dataset(path)  # fine without validation
        with pytest.raises(ValueError, match="exceed bounds"):
            load_dataset(path, bounds=DEFAULT_BOUNDS)


class TestSplits:
    def test_split_counts(self):
        ds = synth_generate(100, default_wavelength_grid(5), seed=1)
        train, test = shuffle_split(ds, SplitSpec(train_count=70, seed=0))
        assert (len(train), len(test)) == (70, 30)

    def test_split_is_exact_partition(self):
        ds = synth_generate(10, default_wavelength_grid(5), seed=1)
        train, test = shuffle_split(ds, SplitSpec(train_count=7, seed=5))
        merged = np.vstack([train.emissivity, test.emissivity])
        assert (len(train), len(test)) == (7, 3)
        # every original row appears exactly once
        key = lambda arr: {tuple(row) for row in arr}
        assert key(merged) == key(ds.emissivity)

    def test_split_deterministic(self):
        ds = synth_generate(50, default_wavelength_grid(5), seed=1)
        a1, b1 = shuffle_split(ds, SplitSpec(30, seed=2))
        a2, b2 = shuffle_split(ds, SplitSpec(30, seed=2))
        assert np.array_equal(a1.params, a2.params)
        assert np.array_equal(b1.emissivity, b2.emissivity)

    def test_split_range_error(self):
        ds = synth_generate(10, default_wavelength_grid(5), seed=1)
        with pytest.raises(ValueError):
            shuffle_split(ds, SplitSpec(train_count=10, seed=0))

    def test_kfold_leave_one_out_shape(self):
        folds = kfold_indices(10, 10, seed=0)
        assert len(folds) == 10
        assert all(len(val) == 1 for _, val in folds)

    def test_kfold_validation_error(self):
        with pytest.raises(ValueError):
            kfold_indices(5, 6, seed=0)

    @given(
        n=st.integers(min_value=4, max_value=60),
        k=st.integers(min_value=2, max_value=8),
        seed=st.integers(min_value=0, max_value=1000),
    )
    @settings(max_examples=40, deadline=None)
    def test_kfold_partition_properties(self, n, k, seed):
        if k > n:
            return
        folds = kfold_indices(n, k, seed)
        all_val = np.concatenate([val for _, val in folds])
        assert sorted(all_val.tolist()) == list(range(n))
        sizes = [len(val) for _, val in folds]
        assert max(sizes) - min(sizes) <= 1
        for train, val in folds:
            assert not set(train) & set(val)
            assert len(train) + len(val) == n


class TestSyntheticSurface:
    def test_min_dose_matches_reference_formula(self):
        grid = default_wavelength_grid(101)
        ds = synth_generate(1, grid, noise_sd=0.0, seed=0)
        ds.params[0] = [0.2, 700.0, 28.0]
        values = synthetic_emissivity(ds.params[0], grid)
        expected = oracle_reference(0.2, 700.0, 28.0, grid)
        np.testing.assert_allclose(values, expected, atol=1e-13)
        # lowest-dose processing stays closest to the pristine baseline
        assert values.mean() < 0.4
        assert values.min() > 0.14

    def test_max_dose_average_above_09(self):
        grid = default_wavelength_grid(101)
        values = synthetic_emissivity(np.array([1.3, 10.0, 15.0]), grid)
        assert values.mean() > 0.9
        np.testing.assert_allclose(
            values, oracle_reference(1.3, 10.0, 15.0, grid), atol=1e-13
        )

    def test_equal_dose_gives_identical_spectra(self):
        grid = default_wavelength_grid(31)
        a = synthetic_emissivity(np.array([0.2, 10.0, 15.0]), grid)
        b = synthetic_emissivity(np.array([0.4, 20.0, 15.0]), grid)
        np.testing.assert_array_equal(a, b)

    def test_monotone_in_speed_and_power(self):
        grid = default_wavelength_grid(31)
        spacing = 20.0
        for power in (0.3, 0.8, 1.3):
            avgs = [
                synthetic_emissivity(np.array([power, v, spacing]), grid).mean()
                for v in SPEED_VALUES
            ]
            assert np.all(np.diff(avgs) <= 1e-12)
        for speed in (10.0, 200.0, 700.0):
            avgs = [
                synthetic_emissivity(np.array([p, speed, spacing]), grid).mean()
                for p in POWER_VALUES
            ]
            assert np.all(np.diff(avgs) >= -1e-12)

    def test_one_to_many_on_fabrication_grid(self):
        # enumerate the full factorial grid and look for exact dose collisions
        doses = {}
        duplicates = 0
        for p in POWER_VALUES:
            for v in SPEED_VALUES:
                for s in SPACING_VALUES:
                    key = p / (v * s * 1e-3)
                    if key in doses:
                        duplicates += 1
                    else:
                        doses[key] = (p, v, s)
        assert duplicates >= 1
        grid = default_wavelength_grid(11)
        # spot-check one collision produces identical spectra
        a = synthetic_emissivity(np.array([0.2, 100.0, 20.0]), grid)
        b = synthetic_emissivity(np.array([0.4, 200.0, 20.0]), grid)
        np.testing.assert_array_equal(a, b)

    def test_generator_determinism_and_clipping(self):
        grid = default_wavelength_grid(11)
        a = synth_generate(50, grid, noise_sd=0.05, seed=12)
        b = synth_generate(50, grid, noise_sd=0.05, seed=12)
        assert np.array_equal(a.emissivity, b.emissivity)
        assert a.emissivity.min() >= 0.0 and a.emissivity.max() <= 1.0
        for column, allowed in zip(a.params.T, (POWER_VALUES, SPEED_VALUES, SPACING_VALUES)):
            assert set(np.round(column, 6)) <= set(np.round(allowed, 6))

    def test_generator_argument_errors(self):
        with pytest.raises(ValueError):
            synth_generate(0, default_wavelength_grid(5))
        with pytest.raises(ValueError):
            synth_generate(5, np.array([]))
        with pytest.raises(ValueError):
            synth_generate(5, default_wavelength_grid(5), noise_sd=-1)


class TestStepTarget:
    def test_tpv_step(self):
        grid = default_wavelength_grid(96)  # 0.1 um steps: 4.6 lies between points
        target = make_step_target(grid, 4.6)
        assert np.array_equal(target.values, (grid < 4.6).astype(float))
        assert target.values[0] == 1.0 and target.values[-1] == 0.0

    def test_near_max_cutoff_all_ones_except_tail(self):
        grid = default_wavelength_grid(20)
        target = make_step_target(grid, grid[-1] - 1e-9)
        assert np.all(target.values[:-1] == 1.0)
        assert target.values[-1] == 0.0

    def test_blackbody_via_cutoff_at_grid_max(self):
        grid = default_wavelength_grid(20)
        target = make_step_target(grid, grid[-1])
        assert np.all(target.values == 1.0)

    def test_cutoff_outside_grid(self):
        grid = default_wavelength_grid(20)
        with pytest.raises(ValueError):
            make_step_target(grid, 99.0)


class TestSpectrumType:
    def test_grid_must_increase(self):
        with pytest.raises(ValueError):
            Spectrum(np.array([3.0, 2.0]), np.array([0.1, 0.2]))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            Spectrum(np.array([2.5, 3.0]), np.array([0.1]))

    def test_is_physical(self):
        grid = np.array([2.5, 3.0])
        assert Spectrum(grid, np.array([0.0, 1.0])).is_physical
        assert not Spectrum(grid, np.array([-0.1, 0.5])).is_physical
