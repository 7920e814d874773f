"""Synthetic field generation: determinism, pinned checksums, field IO.

The sha256 pins freeze the generator outputs across numpy and platform
changes; evaluation results are only comparable between runs if the corpus
bytes never drift.
"""
import hashlib
import json

import numpy as np
import pytest

from srnz.errors import ConfigError, IngestionError
from srnz.synth import (
    FAMILIES,
    FieldSpec,
    band_limited_fourier,
    default_corpus,
    generate,
    read_field,
    spec_from_dict,
    spec_to_dict,
    write_field,
)


def field_digest(spec):
    return hashlib.sha256(generate(spec).to_source().tobytes()).hexdigest()


GOLDEN = [
    (
        FieldSpec("t", "gaussian_mixture_bumps", (33, 33), 12345),
        "cb4891b95e9e5707240cf36a21abc78b0cbc0b4862a324d334ab0a8c56098e0b",
    ),
    (
        FieldSpec("t", "band_limited_fourier", (17, 33), 777, params={"max_freq": 3}),
        "8ccb7ad4f0999e2fec9e02de13c6bf3ad63408bc26d1fe2131dec51a5a06581f",
    ),
    (
        FieldSpec("t", "advected_vortex", (33, 17, 9), 2024, precision="f64"),
        "43256c649ed1977263d457ab5bc67e5daf37ef5bd5ed5d2601adae69836c990f",
    ),
    (
        FieldSpec("t", "piecewise_fronts", (65,), 31),
        "e526894742a93db6823449fcf3ff49bc9c8beb578fbcd37c57c831c01d90d54e",
    ),
]


class TestDeterminism:
    @pytest.mark.parametrize("spec,digest", GOLDEN, ids=[s.family for s, _ in GOLDEN])
    def test_pinned_checksums(self, spec, digest):
        assert field_digest(spec) == digest

    def test_same_seed_same_bytes(self):
        spec = FieldSpec("x", "advected_vortex", (17, 17), 5)
        a = generate(spec).values
        b = generate(spec).values
        np.testing.assert_array_equal(a, b)

    def test_different_seeds_differ(self):
        a = generate(FieldSpec("x", "gaussian_mixture_bumps", (17, 17), 1)).values
        b = generate(FieldSpec("x", "gaussian_mixture_bumps", (17, 17), 2)).values
        assert not np.array_equal(a, b)


class TestFamilies:
    @pytest.mark.parametrize("family", sorted(FAMILIES))
    @pytest.mark.parametrize("shape", [(33,), (17, 19), (9, 11, 13)])
    def test_all_finite_in_any_rank(self, family, shape):
        grid = generate(FieldSpec("x", family, shape, 3))
        assert grid.values.shape == shape
        assert np.isfinite(grid.values).all()

    def test_zero_max_freq_is_constant(self):
        rng = np.random.default_rng(0)
        arr = band_limited_fourier((17, 17), rng, max_freq=0)
        assert np.ptp(arr) == 0.0

    def test_precision_cast(self):
        spec32 = FieldSpec("x", "piecewise_fronts", (33, 33), 9, precision="f32")
        grid = generate(spec32)
        # Values are stored as f64 but must sit exactly on the f32 lattice.
        assert grid.source_precision == "f32"
        np.testing.assert_array_equal(
            grid.values, grid.values.astype(np.float32).astype(np.float64)
        )

    def test_unknown_family_rejected(self):
        with pytest.raises(ConfigError):
            FieldSpec("x", "perlin_noise", (17,), 0)

    def test_unknown_precision_rejected(self):
        with pytest.raises(ConfigError):
            FieldSpec("x", "piecewise_fronts", (17,), 0, precision="f16")


class TestCorpus:
    def test_twenty_fields_across_all_families_and_ranks(self):
        corpus = default_corpus()
        assert len(corpus) == 20
        assert len({s.name for s in corpus}) == 20
        families = {s.family for s in corpus}
        assert families == set(FAMILIES)
        ranks = {len(s.shape) for s in corpus}
        assert ranks == {2, 3}
        for spec in corpus:
            assert spec.precision == "f32"

    def test_seeds_are_unique(self):
        seeds = [s.seed for s in default_corpus()]
        assert len(set(seeds)) == len(seeds)


class TestSpecSerialization:
    def test_dict_round_trip(self):
        spec = FieldSpec("a-b", "band_limited_fourier", (9, 9), 4, "f64", {"max_freq": 2})
        back = spec_from_dict(spec_to_dict(spec))
        assert back.name == spec.name
        assert back.family == spec.family
        assert back.shape == spec.shape
        assert back.seed == spec.seed
        assert back.precision == spec.precision
        assert back.params == spec.params

    def test_missing_key(self):
        with pytest.raises(IngestionError):
            spec_from_dict({"name": "x"})

    def test_defaults_fill_in(self):
        spec = spec_from_dict(
            {"name": "x", "family": "piecewise_fronts", "shape": [9], "seed": 1}
        )
        assert spec.precision == "f32"
        assert spec.params == {}


class TestFieldIO:
    def test_write_read_round_trip(self, tmp_path):
        spec = FieldSpec("demo", "advected_vortex", (17, 19), 77)
        json_path, raw_path = write_field(spec, tmp_path)
        back_spec, grid = read_field(json_path)
        assert back_spec.name == "demo"
        np.testing.assert_array_equal(grid.values, generate(spec).values)
        assert grid.source_precision == "f32"
        # Raw size is element count times four bytes for f32.
        assert (tmp_path / "demo.f32.raw").stat().st_size == 17 * 19 * 4

    def test_sidecar_names_data_file(self, tmp_path):
        spec = FieldSpec("demo", "piecewise_fronts", (33,), 1)
        json_path, _ = write_field(spec, tmp_path)
        doc = json.loads((tmp_path / "demo.json").read_text())
        assert doc["data_file"] == "demo.f32.raw"
        assert doc["shape"] == [33]
