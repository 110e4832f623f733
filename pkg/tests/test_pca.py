import numpy as np
import pytest
import scipy.linalg
from sklearn.exceptions import NotFittedError

from mfdesign.data import Spectrum, default_wavelength_grid
from mfdesign.errors import GridMismatchError
from mfdesign.pca import SpectrumPCA


class TestFit:
    def test_full_rank_reconstruction(self, rng):
        X = rng.uniform(0, 1, size=(3, 8))
        model = SpectrumPCA(n_components=2).fit(X)
        rec = model.inverse_transform(model.transform(X))
        np.testing.assert_allclose(rec, X, atol=1e-10)

    def test_rank_one_component_direction(self, rng):
        direction = rng.normal(size=12)
        direction /= np.linalg.norm(direction)
        t = rng.normal(size=(9, 1))
        X = 0.5 + t * direction
        model = SpectrumPCA(n_components=1).fit(X)
        cosine = abs(model.components_[0] @ direction)
        assert cosine > 1.0 - 1e-8

    def test_reconstruction_error_matches_dense_svd_oracle(self, rng):
        X = rng.normal(size=(20, 100))
        model = SpectrumPCA(n_components=5).fit(X)
        rec = model.inverse_transform(model.transform(X))
        err = np.linalg.norm(X - rec)
        # independent oracle: discarded singular energy via a different driver
        s = scipy.linalg.svd(
            X - X.mean(axis=0), compute_uv=False, lapack_driver="gesvd"
        )
        expected = np.sqrt(np.sum(s[5:] ** 2))
        assert abs(err - expected) < 1e-8

    def test_components_orthonormal(self, rng):
        X = rng.normal(size=(30, 40))
        model = SpectrumPCA(n_components=7).fit(X)
        gram = model.components_ @ model.components_.T
        np.testing.assert_allclose(gram, np.eye(7), atol=1e-8)

    def test_component_count_validation(self, rng):
        X = rng.normal(size=(5, 10))
        with pytest.raises(ValueError):
            SpectrumPCA(n_components=0).fit(X)
        with pytest.raises(ValueError):
            SpectrumPCA(n_components=6).fit(X)
        with pytest.raises(ValueError):
            SpectrumPCA(n_components=2).fit(X[:1])

    def test_degenerate_identical_data(self):
        X = np.tile(np.linspace(0.2, 0.8, 10), (4, 1))
        model = SpectrumPCA(n_components=2).fit(X)
        assert model.zero_variance_
        rec = model.inverse_transform(model.transform(X))
        np.testing.assert_allclose(rec, X, atol=1e-12)

    def test_fit_deterministic(self, rng):
        X = rng.normal(size=(15, 20))
        a = SpectrumPCA(n_components=4).fit(X)
        b = SpectrumPCA(n_components=4).fit(X.copy())
        assert np.array_equal(a.components_, b.components_)
        assert np.array_equal(a.mean_, b.mean_)


class TestTransform:
    def test_mean_maps_to_zero(self, rng):
        X = rng.uniform(0, 1, size=(10, 12))
        model = SpectrumPCA(n_components=3).fit(X)
        np.testing.assert_allclose(model.transform(model.mean_), 0.0, atol=1e-12)

    def test_component_maps_to_unit_vector(self, rng):
        X = rng.uniform(0, 1, size=(10, 12))
        model = SpectrumPCA(n_components=3).fit(X)
        coeffs = model.transform(model.mean_ + model.components_[0])
        np.testing.assert_allclose(coeffs, [1.0, 0.0, 0.0], atol=1e-10)

    def test_matches_direct_multiply_oracle(self, rng):
        X = rng.uniform(0, 1, size=(10, 12))
        model = SpectrumPCA(n_components=3).fit(X)
        s = rng.uniform(0, 1, 12)
        direct = np.array(
            [model.components_[i] @ (s - model.mean_) for i in range(3)]
        )
        np.testing.assert_allclose(model.transform(s), direct, atol=1e-12)

    def test_grid_checked_through_compress(self, rng):
        grid = default_wavelength_grid(12)
        X = rng.uniform(0, 1, size=(10, 12))
        model = SpectrumPCA(n_components=3).fit(X, grid=grid)
        other = Spectrum(default_wavelength_grid(13), np.full(13, 0.5))
        with pytest.raises(GridMismatchError):
            model.compress(other)

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            SpectrumPCA().transform(np.zeros(5))


class TestInverseTransform:
    def test_zero_gives_mean(self, rng):
        X = rng.uniform(0, 1, size=(10, 12))
        model = SpectrumPCA(n_components=3).fit(X)
        np.testing.assert_array_equal(model.inverse_transform(np.zeros(3)), model.mean_)

    def test_projection_idempotent(self, rng):
        X = rng.uniform(0, 1, size=(15, 30))
        model = SpectrumPCA(n_components=4).fit(X)
        once = model.inverse_transform(model.transform(X))
        twice = model.inverse_transform(model.transform(once))
        np.testing.assert_allclose(twice, once, atol=1e-10)

    def test_length_mismatch(self, rng):
        model = SpectrumPCA(n_components=3).fit(rng.normal(size=(10, 12)))
        with pytest.raises(ValueError):
            model.inverse_transform(np.zeros(4))
        with pytest.raises(ValueError):
            model.transform(np.zeros(11))

    def test_error_non_increasing_in_components(self, rng):
        X = rng.normal(size=(25, 40))
        errors = []
        for c in (1, 3, 6, 12, 20):
            model = SpectrumPCA(n_components=c).fit(X)
            rec = model.inverse_transform(model.transform(X))
            errors.append(np.linalg.norm(X - rec))
        assert all(a >= b - 1e-9 for a, b in zip(errors, errors[1:]))

    def test_reconstructions_not_clipped(self, rng):
        X = rng.uniform(0, 1, size=(8, 10))
        model = SpectrumPCA(n_components=2).fit(X)
        # a large coefficient must push the raw reconstruction above 1:
        # the sign convention makes each component's anchor entry positive
        rec = model.inverse_transform(np.array([50.0, 0.0]))
        assert rec.max() > 1.0


class TestSerialization:
    def test_round_trip(self, rng):
        grid = default_wavelength_grid(12)
        X = rng.uniform(0, 1, size=(10, 12))
        model = SpectrumPCA(n_components=3).fit(X, grid=grid)
        clone = SpectrumPCA.from_dict(model.to_dict())
        s = rng.uniform(0, 1, 12)
        np.testing.assert_array_equal(model.transform(s), clone.transform(s))
        np.testing.assert_array_equal(clone.grid_, grid)
