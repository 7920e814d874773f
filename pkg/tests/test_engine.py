"""End-to-end compression engine behavior.

Round trips check three separate promises: the pointwise error bound on
every element, bit-exact anchors, and deterministic reconstruction. The
corruption cases rebuild payload sections by hand so the consistency
checks fire individually rather than hiding behind the payload digest.
"""
import numpy as np
import pytest

from srnz import (
    CompressionOptions,
    DataGrid,
    ErrorBoundSpec,
    compress,
    decompress,
    inspect,
    plan_levels,
    select_model_tier,
)
from srnz.container import (
    ArtifactHeader,
    LevelRecord,
    encode_outliers,
    pack_sections,
    read_artifact,
    unpack_sections,
    write_artifact,
)
from srnz.engine import SR_MIN_EXTENT, PlannedStep
from srnz.entropy import decode_symbol_section, encode_symbol_section
from srnz.errors import (
    ConfigError,
    CorruptArtifactError,
    ModelNotFoundError,
)
from srnz.interpolation import INTERP_METHODS, MULTIDIM
from srnz.synth import FieldSpec, generate


def rel_opts(eps=1e-3, **kw):
    return CompressionOptions(ErrorBoundSpec("rel", eps), **kw)


def bumps(shape, seed=101, precision="f32"):
    return generate(FieldSpec("t", "gaussian_mixture_bumps", shape, seed, precision))


def max_abs_err(grid, recon):
    return float(np.abs(grid.values - recon.values).max())


# ---------------------------------------------------------------------------
# planning


class TestPlanning:
    def test_stride_schedule_129(self):
        plan = plan_levels((129, 129), 32)
        assert [s.stride for s in plan] == [32, 16, 8, 4, 2]
        assert all(s.kind == "interp" for s in plan)
        # Coarse extents per stride for n=129: (n-1)//t + 1.
        assert [(129 - 1) // s.stride + 1 for s in plan] == [5, 9, 17, 33, 65]

    def test_sr_activates_only_on_large_levels_2d(self):
        plan = plan_levels((129, 129), 32, "sr")
        assert [s.kind for s in plan] == ["interp"] * 4 + ["sr"]

    def test_sr_activates_only_on_large_levels_3d(self):
        plan = plan_levels((129, 129, 129), 32, "sr")
        assert [s.kind for s in plan] == ["interp"] * 4 + ["sr"]
        # 127 is the smallest extent whose stride-2 lattice reaches 64.
        assert (127 - 1) // 2 + 1 == SR_MIN_EXTENT

    def test_sr_never_in_1d(self):
        plan = plan_levels((100001,), 32, "sr")
        assert all(s.kind == "interp" for s in plan)

    def test_sr_skipped_on_small_grids(self):
        plan = plan_levels((65, 65), 32, "sr")
        assert all(s.kind == "interp" for s in plan)

    def test_sr_threshold_override(self):
        plan = plan_levels((65, 65), 32, "sr", sr_min_extent=8)
        assert [(s.stride, s.kind) for s in plan] == [
            (32, "interp"),
            (16, "interp"),
            (8, "sr"),
            (4, "sr"),
            (2, "sr"),
        ]

    def test_single_level(self):
        assert plan_levels((9,), 2) == [PlannedStep(2, "interp")]

    @pytest.mark.parametrize("stride", [0, 1, 3, 24, 33])
    def test_stride_must_be_power_of_two(self, stride):
        with pytest.raises(ConfigError):
            plan_levels((65, 65), stride)


class TestTierSelection:
    @pytest.mark.parametrize(
        "eps,tier",
        [
            (5e-2, "strong"),
            (2e-2, "strong"),
            (1.01e-2, "strong"),
            (1e-2, "weak"),
            (1e-3, "weak"),
            (1e-4, "weak"),
            (9.9e-5, "none"),
            (1e-5, "none"),
        ],
    )
    def test_boundaries(self, eps, tier):
        assert select_model_tier(eps) == tier


# ---------------------------------------------------------------------------
# interpolation-mode round trips


class TestRoundTrip:
    @pytest.mark.parametrize("precision", ["f32", "f64"])
    @pytest.mark.parametrize("shape", [(77,), (33, 45), (17, 19, 23)])
    def test_bound_and_anchors(self, precision, shape):
        grid = bumps(shape, seed=len(shape), precision=precision)
        blob = compress(grid, rel_opts(1e-3))
        header = inspect(blob)
        recon = decompress(blob)
        assert recon.shape == shape
        assert recon.source_precision == precision
        assert max_abs_err(grid, recon) <= header.resolved_e
        # Anchor lattice is carried losslessly.
        sl = tuple(slice(None, None, 32) for _ in shape)
        np.testing.assert_array_equal(recon.to_source()[sl], grid.to_source()[sl])

    def test_compress_and_decompress_are_deterministic(self):
        grid = bumps((65, 65))
        opts = rel_opts(1e-3)
        blob = compress(grid, opts)
        assert blob == compress(grid, opts)
        a = decompress(blob)
        b = decompress(blob)
        assert a.to_source().tobytes() == b.to_source().tobytes()

    def test_abs_mode(self):
        grid = bumps((65, 33))
        blob = compress(grid, CompressionOptions(ErrorBoundSpec("abs", 0.05)))
        header = inspect(blob)
        assert header.eb_mode == "abs"
        assert header.resolved_e == 0.05
        assert max_abs_err(grid, decompress(blob)) <= 0.05

    def test_tighter_bound_on_same_field(self):
        grid = bumps((65, 65))
        loose = decompress(compress(grid, rel_opts(1e-2)))
        tight = decompress(compress(grid, rel_opts(1e-5)))
        e_loose = inspect(compress(grid, rel_opts(1e-2))).resolved_e
        e_tight = inspect(compress(grid, rel_opts(1e-5))).resolved_e
        assert max_abs_err(grid, loose) <= e_loose
        assert max_abs_err(grid, tight) <= e_tight
        assert e_tight < e_loose

    @pytest.mark.parametrize("shape", [(1,), (1, 1), (2, 3), (5,), (2, 2, 2), (33,)])
    def test_tiny_grids(self, shape):
        rng = np.random.default_rng(7)
        grid = DataGrid(rng.normal(size=shape), "f64")
        blob = compress(grid, rel_opts(1e-3))
        recon = decompress(blob)
        assert max_abs_err(grid, recon) <= inspect(blob).resolved_e

    def test_interp_methods_recorded_per_level(self):
        blob = compress(bumps((129, 129)), rel_opts())
        header = inspect(blob)
        assert len(header.levels) == 5
        for lv in header.levels:
            assert lv.kind == "interp"
            assert lv.method in INTERP_METHODS
            assert lv.model_hash == bytes(32)

    def test_constant_grid(self):
        grid = DataGrid(np.full((65, 129), 7.25), "f64")
        blob = compress(grid, rel_opts())
        assert len(blob) < 200
        header = inspect(blob)
        assert header.constant and header.levels == ()
        np.testing.assert_array_equal(decompress(blob).values, grid.values)

    def test_zero_error_bound_rejected(self):
        with pytest.raises(ConfigError):
            compress(bumps((33, 33)), CompressionOptions(ErrorBoundSpec("abs", 0.0)))

    def test_small_radius_forces_outliers(self):
        grid = bumps((65, 65))
        blob = compress(grid, rel_opts(1e-4, quant_radius=4))
        _, payload = read_artifact(blob)
        _, _, outliers_b = unpack_sections(payload)
        from srnz.container import decode_outliers

        ordinals, _ = decode_outliers(outliers_b)
        assert ordinals.size > 0
        assert max_abs_err(grid, decompress(blob)) <= inspect(blob).resolved_e

    def test_smaller_epsilon_never_shrinks_the_artifact(self):
        grid = bumps((129, 65))
        sizes = [len(compress(grid, rel_opts(e))) for e in (1e-2, 1e-3, 1e-4)]
        assert sizes[0] <= sizes[1] <= sizes[2]


# ---------------------------------------------------------------------------
# SR mode


class TestSuperResolution:
    def test_sr_round_trip_2d(self, dup_registry):
        grid = bumps((129, 129))
        opts = rel_opts(1e-3, mode="sr", registry=dup_registry)
        blob = compress(grid, opts)
        header = inspect(blob)
        assert not header.degraded
        assert header.levels[-1].kind == "sr"
        assert header.levels[-1].method is None
        assert header.levels[-1].noise_tier == "weak"
        entry = dup_registry.resolve("general", "weak")
        assert header.levels[-1].model_hash.hex() == entry.hash_hex

        recon = decompress(blob, dup_registry)
        assert max_abs_err(grid, recon) <= header.resolved_e
        again = decompress(blob, dup_registry)
        assert recon.to_source().tobytes() == again.to_source().tobytes()

    def test_decode_without_registry_names_the_env_var(self, dup_registry):
        blob = compress(bumps((129, 129)), rel_opts(mode="sr", registry=dup_registry))
        with pytest.raises(ModelNotFoundError, match="SRNZ_MODELS"):
            decompress(blob)

    def test_registry_via_environment(self, dup_registry, monkeypatch):
        monkeypatch.setenv("SRNZ_MODELS", str(dup_registry.root))
        blob = compress(bumps((129, 129)), rel_opts(mode="sr"))
        assert inspect(blob).levels[-1].kind == "sr"
        recon = decompress(blob)
        assert max_abs_err(bumps((129, 129)), recon) <= inspect(blob).resolved_e

    def test_strict_policy_raises_without_model(self, empty_registry):
        opts = rel_opts(mode="sr", registry=empty_registry, policy="strict")
        with pytest.raises(ModelNotFoundError):
            compress(bumps((129, 129)), opts)

    def test_degrade_policy_matches_interp_mode(self, empty_registry):
        grid = bumps((129, 129))
        degraded_blob = compress(grid, rel_opts(mode="sr", registry=empty_registry))
        header = inspect(degraded_blob)
        assert header.degraded
        assert all(lv.kind == "interp" for lv in header.levels)

        # Decoding needs no model, and the reconstruction is identical to
        # what plain interpolation mode produces.
        recon = decompress(degraded_blob)
        plain = decompress(compress(grid, rel_opts()))
        np.testing.assert_array_equal(recon.to_source(), plain.to_source())

    def test_sr_mode_without_any_registry_degrades(self):
        blob = compress(bumps((129, 129)), rel_opts(mode="sr"))
        assert inspect(blob).degraded


# ---------------------------------------------------------------------------
# corrupted artifacts


def rebuild(blob, anchors=None, symbols=None, outliers=None):
    """Reassemble an artifact with selected payload sections replaced."""
    header, payload = read_artifact(blob)
    a, s, o = unpack_sections(payload)
    a = a if anchors is None else anchors
    s = s if symbols is None else symbols
    o = o if outliers is None else outliers
    return write_artifact(header, pack_sections(a, s, o))


class TestCorruption:
    def blob(self):
        return compress(bumps((33, 33)), rel_opts())

    def test_payload_flip(self):
        blob = bytearray(self.blob())
        blob[-5] ^= 0x10
        with pytest.raises(CorruptArtifactError):
            decompress(bytes(blob))

    def test_truncation(self):
        blob = self.blob()
        for cut in (0, 3, 11, len(blob) // 2, len(blob) - 1):
            with pytest.raises(CorruptArtifactError):
                decompress(blob[:cut])

    def test_garbage(self):
        with pytest.raises(CorruptArtifactError):
            decompress(b"certainly not an artifact")

    def test_anchor_section_length_checked(self):
        blob = self.blob()
        _, payload = read_artifact(blob)
        a, _, _ = unpack_sections(payload)
        with pytest.raises(CorruptArtifactError, match="anchor section"):
            decompress(rebuild(blob, anchors=a[:-4]))

    def test_symbol_count_checked(self):
        blob = self.blob()
        header, payload = read_artifact(blob)
        _, s, _ = unpack_sections(payload)
        symbols, _ = decode_symbol_section(s, 0)
        short = encode_symbol_section(symbols[:-5], 2 * header.quant_radius)
        with pytest.raises(CorruptArtifactError, match="symbol stream"):
            decompress(rebuild(blob, symbols=short))

    def test_outlier_ordinal_range_checked(self):
        blob = self.blob()
        total = 33 * 33 - 4  # elements minus the 2x2 anchor lattice
        bad = encode_outliers(np.array([total + 5]), np.array([1.0]))
        with pytest.raises(CorruptArtifactError, match="outlier ordinal"):
            decompress(rebuild(blob, outliers=bad))

    def test_conflicting_model_hashes_rejected(self):
        # A hand-built header whose two SR levels disagree on the model.
        shape = (129, 129)
        header = ArtifactHeader(
            precision="f32",
            shape=shape,
            eb_mode="rel",
            epsilon=1e-3,
            resolved_e=1e-3,
            anchor_stride=32,
            quant_radius=32768,
            norm_min=0.0,
            norm_range=1.0,
            levels=(
                LevelRecord(32, "interp", MULTIDIM),
                LevelRecord(16, "interp", MULTIDIM),
                LevelRecord(8, "interp", MULTIDIM),
                LevelRecord(4, "sr", None, b"\x01" * 32, "weak"),
                LevelRecord(2, "sr", None, b"\x02" * 32, "weak"),
            ),
        )
        anchors = np.zeros((5, 5), dtype="<f4").tobytes()
        total = 129 * 129 - 25
        symbols = encode_symbol_section(np.full(total, 32768, dtype=np.int64), 65536)
        outliers = encode_outliers(np.zeros(0, dtype=np.int64), np.zeros(0))
        blob = write_artifact(header, pack_sections(anchors, symbols, outliers))
        with pytest.raises(CorruptArtifactError, match="multiple models"):
            decompress(blob)


class TestInspect:
    def test_returns_header_fields(self):
        grid = bumps((65, 33))
        blob = compress(grid, rel_opts(1e-2))
        header = inspect(blob)
        assert header.shape == (65, 33)
        assert header.precision == "f32"
        assert header.eb_mode == "rel"
        assert header.epsilon == 1e-2
        assert header.anchor_stride == 32
        assert header.element_count == 65 * 33

    def test_rejects_tampered_blob(self):
        blob = bytearray(compress(bumps((33, 33)), rel_opts()))
        blob[-1] ^= 0x01
        with pytest.raises(CorruptArtifactError):
            inspect(bytes(blob))
