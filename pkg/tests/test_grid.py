"""Grid container, error bounds, normalization, raw file round trips."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from srnz.errors import ConfigError, IngestionError
from srnz.grid import (
    DataGrid,
    ErrorBoundSpec,
    NormalizationParams,
    denormalize,
    normalize,
    read_raw,
    vrange,
    write_raw,
)


class TestDataGrid:
    def test_values_are_float64_and_readonly(self):
        g = DataGrid(np.arange(6, dtype=np.float32).reshape(2, 3), "f32")
        assert g.values.dtype == np.float64
        assert not g.values.flags.writeable
        assert g.shape == (2, 3) and g.ndims == 2 and g.size == 6

    def test_f32_to_source_round_trip_exact(self):
        arr = np.array([0.1, 2.5, -3.75, 1e-30], dtype=np.float32)
        g = DataGrid(arr, "f32")
        assert np.array_equal(g.to_source(), arr)
        # float32 -> float64 is exact, so values carry the f32 data losslessly
        assert np.array_equal(g.values, arr.astype(np.float64))

    def test_rejects_bad_precision(self):
        with pytest.raises(ConfigError):
            DataGrid(np.zeros(3), "f16")

    def test_rejects_empty_and_high_rank(self):
        with pytest.raises(ConfigError):
            DataGrid(np.zeros((0, 3)))
        with pytest.raises(ConfigError):
            DataGrid(np.zeros((2, 2, 2, 2)))
        with pytest.raises(ConfigError):
            DataGrid(np.float64(3.0))  # 0-d

    def test_rejects_non_finite(self):
        with pytest.raises(IngestionError, match="non-finite"):
            DataGrid(np.array([1.0, np.nan]))
        with pytest.raises(IngestionError):
            DataGrid(np.array([np.inf, 0.0]))

    def test_rejects_non_numeric(self):
        with pytest.raises(IngestionError):
            DataGrid(np.array(["a", "b"]))

    def test_accepts_integer_input(self):
        g = DataGrid(np.arange(4, dtype=np.int32))
        assert g.values.dtype == np.float64


class TestErrorBound:
    def test_absolute_resolve_is_identity(self):
        g = DataGrid(np.linspace(0, 10, 5))
        eb = ErrorBoundSpec.absolute(0.25).resolve(g)
        assert eb.resolved_e == 0.25

    def test_relative_scales_by_range(self):
        # range = 8 - (-2) = 10, so rel 1e-2 resolves to 0.1
        g = DataGrid(np.array([-2.0, 0.0, 8.0]))
        eb = ErrorBoundSpec.relative(1e-2).resolve(g)
        assert eb.resolved_e == pytest.approx(0.1, rel=1e-15)

    def test_relative_on_constant_resolves_to_zero(self):
        g = DataGrid(np.full(5, 3.0))
        assert ErrorBoundSpec.relative(1e-3).resolve(g).resolved_e == 0.0

    def test_rejects_bad_mode_and_epsilon(self):
        with pytest.raises(ConfigError):
            ErrorBoundSpec("relative", 1e-3)
        with pytest.raises(ConfigError):
            ErrorBoundSpec("abs", -1.0)
        with pytest.raises(ConfigError):
            ErrorBoundSpec("rel", float("nan"))


class TestNormalize:
    def test_worked_example(self):
        g = DataGrid(np.array([2.0, 4.0, 6.0, 10.0]))
        norm_grid, params = normalize(g)
        assert params == NormalizationParams(2.0, 8.0)
        assert np.allclose(norm_grid.values, [0.0, 0.25, 0.5, 1.0])
        # dyadic values divide exactly
        assert np.array_equal(norm_grid.values, np.array([0.0, 0.25, 0.5, 1.0]))

    def test_output_stays_in_unit_interval(self):
        rng = np.random.default_rng(3)
        g = DataGrid(rng.normal(size=(50, 50)) * 1e6)
        out, _ = normalize(g)
        assert out.values.min() >= 0.0 and out.values.max() <= 1.0

    def test_constant_grid_rejected(self):
        with pytest.raises(ConfigError, match="constant"):
            normalize(DataGrid(np.full((4, 4), 7.0)))

    @given(
        st.lists(
            st.floats(-1e12, 1e12, allow_nan=False, allow_infinity=False),
            min_size=2,
            max_size=40,
        ).filter(lambda v: max(v) > min(v))
    )
    @settings(max_examples=120, deadline=None)
    def test_round_trip_error_bounded_by_eps_of_range(self, vals):
        g = DataGrid(np.array(vals, dtype=np.float64))
        out, params = normalize(g)
        back = denormalize(out, params)
        rng = params.vrange
        # straight affine maps round-trip to within a few ulps of the range
        assert np.abs(back.values - g.values).max() <= 4 * np.finfo(np.float64).eps * rng

    def test_denormalize_plain_array(self):
        params = NormalizationParams(-1.0, 4.0)
        back = denormalize(np.array([0.0, 0.5, 1.0]), params)
        assert np.array_equal(back.values, [-1.0, 1.0, 3.0])


class TestVrange:
    def test_examples(self):
        assert vrange(DataGrid(np.array([1.0, 5.0]))) == 4.0
        assert vrange(np.array([[2.0, 2.0], [2.0, 2.0]])) == 0.0


class TestRawIO:
    def test_round_trip_f32(self, tmp_path):
        arr = np.random.default_rng(0).normal(size=(7, 9)).astype(np.float32)
        g = DataGrid(arr, "f32")
        p = tmp_path / "grid.raw"
        write_raw(g, p)
        assert p.stat().st_size == 7 * 9 * 4
        back = read_raw(p, "f32", (7, 9))
        assert np.array_equal(back.to_source(), arr)

    def test_round_trip_f64(self, tmp_path):
        arr = np.random.default_rng(1).normal(size=(5, 3, 2))
        p = tmp_path / "grid.raw"
        write_raw(DataGrid(arr, "f64"), p)
        back = read_raw(p, "f64", (5, 3, 2))
        assert np.array_equal(back.values, arr)

    def test_size_mismatch_reports_both_counts(self, tmp_path):
        p = tmp_path / "short.raw"
        p.write_bytes(b"\0" * 100)
        with pytest.raises(IngestionError, match="100 bytes.*144 bytes"):
            read_raw(p, "f32", (6, 6))

    def test_rejects_bad_precision_and_shape(self, tmp_path):
        p = tmp_path / "x.raw"
        p.write_bytes(b"\0" * 16)
        with pytest.raises(ConfigError):
            read_raw(p, "f16", (4,))
        with pytest.raises(ConfigError):
            read_raw(p, "f32", (0, 4))
