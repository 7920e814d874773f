"""Estimator facade conformance with the fit/transform idiom."""
import numpy as np
import pytest
from sklearn.base import clone

from srnz import DataGrid, GridCompressor
from srnz.errors import ConfigError
from srnz.synth import FieldSpec, generate


def sample_grid():
    return generate(FieldSpec("t", "advected_vortex", (65, 65), 3))


class TestParams:
    def test_get_params_round_trip(self):
        est = GridCompressor(epsilon=1e-2, mode="sr", zstd_level=7)
        params = est.get_params()
        assert params["epsilon"] == 1e-2
        assert params["mode"] == "sr"
        assert params["zstd_level"] == 7
        rebuilt = GridCompressor(**params)
        assert rebuilt.get_params() == params

    def test_set_params(self):
        est = GridCompressor()
        est.set_params(epsilon=5e-4, anchor_stride=16)
        assert est.epsilon == 5e-4
        assert est.anchor_stride == 16

    def test_clone(self):
        est = GridCompressor(epsilon=2e-3, domain="climate")
        cloned = clone(est)
        assert cloned is not est
        assert cloned.get_params() == est.get_params()

    def test_constructor_stores_verbatim(self):
        # No validation or coercion may happen before fit.
        est = GridCompressor(epsilon="bogus")
        assert est.epsilon == "bogus"
        with pytest.raises((ConfigError, ValueError)):
            est.fit()


class TestFit:
    def test_fit_returns_self_and_sets_n_features(self):
        grid = sample_grid()
        est = GridCompressor()
        assert est.fit(grid.values) is est
        assert est.n_features_in_ == 2

    def test_fit_validates_mode(self):
        with pytest.raises(ConfigError):
            GridCompressor(eb_mode="percentile").fit()


class TestTransform:
    def test_round_trip_array(self):
        # An f32 input array keeps its dtype through the round trip.
        source = sample_grid().to_source()
        est = GridCompressor(epsilon=1e-3)
        blob = est.fit(source).transform(source)
        assert isinstance(blob, bytes)
        recon = est.inverse_transform(blob)
        assert recon.shape == source.shape
        assert recon.dtype == np.float32
        from srnz import inspect

        bound = inspect(blob).resolved_e
        err = np.abs(source.astype(np.float64) - recon.astype(np.float64))
        assert float(err.max()) <= bound

    def test_transform_without_fit(self):
        grid = sample_grid()
        blob = GridCompressor().transform(grid.values)
        assert isinstance(blob, bytes)

    def test_accepts_datagrid(self):
        grid = sample_grid()
        blob = GridCompressor().transform(grid)
        assert isinstance(blob, bytes)

    def test_f64_array_keeps_dtype(self):
        arr = np.random.default_rng(0).normal(size=(33, 33))
        est = GridCompressor(epsilon=1e-4)
        recon = est.inverse_transform(est.transform(arr))
        assert recon.dtype == np.float64

    def test_matches_functional_api(self):
        from srnz import CompressionOptions, ErrorBoundSpec, compress

        grid = sample_grid()
        est_blob = GridCompressor(epsilon=1e-3).transform(grid)
        fn_blob = compress(grid, CompressionOptions(ErrorBoundSpec("rel", 1e-3)))
        assert est_blob == fn_blob

    def test_inverse_transform_type_checked(self):
        with pytest.raises(ConfigError):
            GridCompressor().inverse_transform("not bytes")

    def test_registry_path_param(self, tmp_path):
        from srnz.bundle import write_bundle

        from bundle_stubs import duplication_graph, duplication_tensors

        bundle_path = tmp_path / "dup.srnb"
        write_bundle(bundle_path, "weak", duplication_graph(), duplication_tensors())
        from srnz.registry import ModelRegistry

        ModelRegistry(tmp_path / "reg").add(bundle_path)

        grid = generate(FieldSpec("t", "advected_vortex", (129, 129), 4))
        est = GridCompressor(epsilon=1e-3, mode="sr", registry_path=str(tmp_path / "reg"))
        blob = est.transform(grid)
        from srnz import inspect

        assert inspect(blob).levels[-1].kind == "sr"
        recon = est.inverse_transform(blob)
        assert recon.shape == (129, 129)
