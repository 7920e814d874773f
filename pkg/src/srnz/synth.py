"""Deterministic synthetic scalar-field families for testing and evaluation.

Every family is a pure function of (shape, seed, params): fields are
evaluated in float64 on the unit cube with per-axis coordinates
``linspace(0, 1, n)``, then cast once to the requested source precision.
Randomness comes from ``numpy.random.Generator(numpy.random.PCG64(seed))``
with a fixed draw order, so a spec JSON is enough to rebuild a field
bit-for-bit anywhere.

Families:

* ``gaussian_mixture_bumps``: sum of random isotropic Gaussian bumps over a
  gentle linear ramp.
* ``band_limited_fourier``: random cosine modes with integer wave vectors
  bounded by ``max_freq`` (``max_freq=0`` collapses to a constant field).
* ``advected_vortex``: Gaussian-envelope spiral patterns.
* ``piecewise_fronts``: smooth low-frequency base plus sharp tanh fronts.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, IngestionError
from .grid import SOURCE_DTYPES, DataGrid, read_raw

__all__ = [
    "FAMILIES",
    "FieldSpec",
    "generate",
    "default_corpus",
    "spec_to_dict",
    "spec_from_dict",
    "write_field",
    "read_field",
]


def _coords(shape: tuple[int, ...]) -> list[np.ndarray]:
    out = []
    for d, n in enumerate(shape):
        shp = [1] * len(shape)
        shp[d] = n
        out.append(np.linspace(0.0, 1.0, n).reshape(shp))
    return out


def gaussian_mixture_bumps(
    shape, rng, bumps: int = 8, width_lo=0.05, width_hi=0.25, ramp=0.1
) -> np.ndarray:
    xs = _coords(shape)
    d = len(shape)
    centers = rng.uniform(0.05, 0.95, size=(bumps, d))
    widths = rng.uniform(width_lo, width_hi, size=bumps)
    amps = rng.uniform(-1.0, 1.0, size=bumps)
    out = np.zeros(shape, dtype=np.float64)
    for x in xs:
        out = out + ramp * x
    for i in range(bumps):
        r2 = np.zeros(shape, dtype=np.float64)
        for a in range(d):
            r2 = r2 + (xs[a] - centers[i, a]) ** 2
        out += amps[i] * np.exp(-r2 / (2.0 * widths[i] ** 2))
    return out


def band_limited_fourier(shape, rng, max_freq: int = 4, modes: int = 12) -> np.ndarray:
    xs = _coords(shape)
    d = len(shape)
    if max_freq < 0:
        raise ConfigError(f"max_freq must be >= 0, got {max_freq}")
    waves = rng.integers(-max_freq, max_freq + 1, size=(modes, d))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=modes)
    amps = rng.normal(0.0, 1.0, size=modes) / (1.0 + (waves**2).sum(axis=1))
    out = np.zeros(shape, dtype=np.float64)
    for i in range(modes):
        arg = np.full(shape, phases[i])
        for a in range(d):
            arg = arg + (2.0 * np.pi * waves[i, a]) * xs[a]
        out += amps[i] * np.cos(arg)
    return out


def advected_vortex(shape, rng, vortices: int = 4) -> np.ndarray:
    xs = _coords(shape)
    d = len(shape)
    centers = rng.uniform(0.25, 0.75, size=(vortices, d))
    sigmas = rng.uniform(0.08, 0.22, size=vortices)
    strengths = rng.uniform(0.5, 1.5, size=vortices) * (
        2 * rng.integers(0, 2, size=vortices) - 1
    )
    arms = rng.integers(1, 4, size=vortices)
    radial = rng.uniform(8.0, 24.0, size=vortices)
    out = np.zeros(shape, dtype=np.float64)
    for i in range(vortices):
        deltas = [xs[a] - centers[i, a] for a in range(d)]
        r2 = np.zeros(shape, dtype=np.float64)
        for delta in deltas:
            r2 = r2 + delta**2
        envelope = np.exp(-r2 / (2.0 * sigmas[i] ** 2))
        if d >= 2:
            theta = np.arctan2(
                np.broadcast_to(deltas[1], shape), np.broadcast_to(deltas[0], shape)
            )
            swirl = np.sin(arms[i] * theta + radial[i] * np.sqrt(r2))
        else:
            swirl = np.sin(radial[i] * deltas[0])
        out += strengths[i] * envelope * swirl
    return out


def piecewise_fronts(shape, rng, fronts: int = 4, base_modes: int = 4) -> np.ndarray:
    xs = _coords(shape)
    d = len(shape)
    waves = rng.integers(-2, 3, size=(base_modes, d))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=base_modes)
    amps = 0.3 * rng.normal(0.0, 1.0, size=base_modes) / (1.0 + (waves**2).sum(axis=1))
    out = np.zeros(shape, dtype=np.float64)
    for i in range(base_modes):
        arg = np.full(shape, phases[i])
        for a in range(d):
            arg = arg + (2.0 * np.pi * waves[i, a]) * xs[a]
        out += amps[i] * np.cos(arg)
    for _ in range(fronts):
        direction = rng.normal(0.0, 1.0, size=d)
        norm = float(np.sqrt((direction**2).sum()))
        if norm < 1e-12:
            direction = np.eye(d)[0]
            norm = 1.0
        direction = direction / norm
        quantile = rng.uniform(0.25, 0.75)
        width = rng.uniform(0.012, 0.06)
        amp = rng.uniform(0.3, 1.0) * (2 * rng.integers(0, 2) - 1)
        proj = np.zeros(shape, dtype=np.float64)
        for a in range(d):
            proj = proj + direction[a] * xs[a]
        lo = float(np.minimum(direction, 0.0).sum())
        hi = float(np.maximum(direction, 0.0).sum())
        threshold = lo + quantile * (hi - lo)
        out += amp * np.tanh((proj - threshold) / width)
    return out


FAMILIES = {
    "gaussian_mixture_bumps": gaussian_mixture_bumps,
    "band_limited_fourier": band_limited_fourier,
    "advected_vortex": advected_vortex,
    "piecewise_fronts": piecewise_fronts,
}


@dataclass(frozen=True, eq=False)
class FieldSpec:
    """Everything needed to regenerate one synthetic field exactly."""

    name: str
    family: str
    shape: tuple[int, ...]
    seed: int
    precision: str = "f32"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(
                f"unknown field family {self.family!r}; expected one of {sorted(FAMILIES)}"
            )
        if self.precision not in SOURCE_DTYPES:
            raise ConfigError(f"unknown precision {self.precision!r}")
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))


def generate(spec: FieldSpec) -> DataGrid:
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    arr = FAMILIES[spec.family](spec.shape, rng, **spec.params)
    return DataGrid(arr.astype(SOURCE_DTYPES[spec.precision]), spec.precision)


def spec_to_dict(spec: FieldSpec) -> dict:
    return {
        "name": spec.name,
        "family": spec.family,
        "shape": list(spec.shape),
        "seed": spec.seed,
        "precision": spec.precision,
        "params": dict(spec.params),
    }


def spec_from_dict(doc: dict) -> FieldSpec:
    try:
        return FieldSpec(
            name=str(doc["name"]),
            family=doc["family"],
            shape=tuple(doc["shape"]),
            seed=int(doc["seed"]),
            precision=doc.get("precision", "f32"),
            params=dict(doc.get("params", {})),
        )
    except KeyError as exc:
        raise IngestionError(f"field spec is missing key {exc}") from None


def write_field(spec: FieldSpec, directory: str | os.PathLike) -> tuple[str, str]:
    """Generate and store one field: raw scalars plus a JSON sidecar.

    Returns (json_path, raw_path). The sidecar records the relative raw
    file name so a directory of fields is self-describing.
    """
    grid = generate(spec)
    raw_name = f"{spec.name}.{spec.precision}.raw"
    raw_path = os.path.join(directory, raw_name)
    grid.to_source().tofile(raw_path)
    doc = spec_to_dict(spec)
    doc["data_file"] = raw_name
    json_path = os.path.join(directory, f"{spec.name}.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return json_path, raw_path


def read_field(json_path: str | os.PathLike) -> tuple[FieldSpec, DataGrid]:
    """Load a stored field via its JSON sidecar."""
    with open(json_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    spec = spec_from_dict(doc)
    raw_name = doc.get("data_file", f"{spec.name}.{spec.precision}.raw")
    raw_path = os.path.join(os.path.dirname(os.fspath(json_path)), raw_name)
    grid = read_raw(raw_path, spec.precision, spec.shape)
    return spec, grid


def default_corpus() -> list[FieldSpec]:
    """The 20-field 2D/3D evaluation corpus used by the acceptance suite."""
    sp = FieldSpec
    return [
        sp("bumps-2d-a", "gaussian_mixture_bumps", (193, 193), 101),
        sp("bumps-2d-b", "gaussian_mixture_bumps", (257, 129), 102),
        sp("bumps-3d-a", "gaussian_mixture_bumps", (65, 65, 65), 103),
        sp("bumps-3d-b", "gaussian_mixture_bumps", (97, 97, 49), 104),
        sp("bumps-3d-c", "gaussian_mixture_bumps", (129, 129, 129), 105),
        sp("fourier-2d-a", "band_limited_fourier", (257, 257), 201, params={"max_freq": 3}),
        sp("fourier-2d-b", "band_limited_fourier", (129, 193), 202, params={"max_freq": 6}),
        sp("fourier-2d-c", "band_limited_fourier", (385, 385), 203, params={"max_freq": 4}),
        sp("fourier-3d-a", "band_limited_fourier", (65, 97, 65), 204, params={"max_freq": 3}),
        sp("fourier-3d-b", "band_limited_fourier", (97, 97, 97), 205, params={"max_freq": 5}),
        sp("vortex-2d-a", "advected_vortex", (193, 257), 301),
        sp("vortex-2d-b", "advected_vortex", (129, 129), 302),
        sp("vortex-2d-c", "advected_vortex", (257, 257), 303),
        sp("vortex-3d-a", "advected_vortex", (65, 65, 97), 304),
        sp("vortex-3d-b", "advected_vortex", (129, 129, 129), 305),
        sp("fronts-2d-a", "piecewise_fronts", (257, 193), 401),
        sp("fronts-2d-b", "piecewise_fronts", (129, 257), 402),
        sp("fronts-2d-c", "piecewise_fronts", (193, 193), 403),
        sp("fronts-3d-a", "piecewise_fronts", (65, 65, 65), 404),
        sp("fronts-3d-b", "piecewise_fronts", (97, 65, 97), 405),
    ]
