"""Hierarchical compression engine.

Compression keeps the anchor lattice losslessly, then halves the stride
level by level; each level predicts the newly refined points (by spline
interpolation or a 2x super-resolution model), quantizes the prediction
residuals under the level's error bound, and immediately applies the
corrected values so later predictions see exactly what the decompressor
will see. Decompression replays the identical walk from the header, so
reconstruction is bit-for-bit reproducible.

Non-final levels run at half the target bound; the last level (stride 2
to 1) uses the full bound, which is what the output guarantee is checked
against. Super-resolution steps require every coarse extent to reach
SR_MIN_EXTENT and a model resolved from the registry; under the
"degrade" policy a missing model turns those steps into interpolation
and flags the artifact, under "strict" it is an error.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .bundle import ModelBundle
from .container import (
    ArtifactHeader,
    LevelRecord,
    decode_outliers,
    encode_outliers,
    pack_sections,
    read_artifact,
    unpack_sections,
    write_artifact,
)
from .entropy import decode_symbol_section, encode_symbol_section
from .errors import ConfigError, CorruptArtifactError, InternalError, ModelNotFoundError
from .grid import SOURCE_DTYPES, DataGrid, ErrorBoundSpec, NormalizationParams, vrange
from .interpolation import (
    MULTIDIM,
    class_target_mask,
    level_parity_classes,
    oddcount_classes,
    predict_class,
    select_interpolator,
)
from .quantize import DEFAULT_RADIUS, alphabet_size, quantize_block, dequantize_block
from .registry import ModelRegistry, default_registry
from .sparsify import anchor_shape_for, anchor_slices, sparsify
from .srnet import (
    merge_orientation_predictions,
    orientation_prediction_3d,
    slice_orientations,
    sr_predict_2d,
)

__all__ = [
    "DEFAULT_ANCHOR_STRIDE",
    "SR_MIN_EXTENT",
    "CompressionOptions",
    "PlannedStep",
    "plan_levels",
    "select_model_tier",
    "compress",
    "decompress",
    "inspect",
]

DEFAULT_ANCHOR_STRIDE = 32
# every coarse extent must reach this for a level to run as SR
SR_MIN_EXTENT = 64


@dataclass(frozen=True)
class PlannedStep:
    stride: int  # coarse stride t; the step refines to t // 2
    kind: str  # "interp" | "sr"


@dataclass(frozen=True)
class CompressionOptions:
    error_bound: ErrorBoundSpec
    mode: str = "interp"  # "interp" | "sr"
    anchor_stride: int = DEFAULT_ANCHOR_STRIDE
    quant_radius: int = DEFAULT_RADIUS
    registry: ModelRegistry | None = None
    domain: str = "general"
    policy: str = "degrade"  # "strict" | "degrade"
    zstd_level: int = 3

    def __post_init__(self):
        if self.mode not in ("interp", "sr"):
            raise ConfigError(f"mode must be 'interp' or 'sr', got {self.mode!r}")
        if self.policy not in ("strict", "degrade"):
            raise ConfigError(f"policy must be 'strict' or 'degrade', got {self.policy!r}")


def plan_levels(
    shape: tuple[int, ...],
    anchor_stride: int,
    mode: str = "interp",
    sr_min_extent: int = SR_MIN_EXTENT,
) -> list[PlannedStep]:
    """Refinement schedule: strides halve from the anchor stride down to 2.

    A step runs as SR only when requested, the grid is 2D or 3D, and every
    coarse extent at that stride reaches ``sr_min_extent``.
    """
    steps = []
    t = int(anchor_stride)
    if t < 2 or t & (t - 1):
        raise ConfigError(f"anchor stride must be a power of two >= 2, got {anchor_stride}")
    while t >= 2:
        coarse = tuple((n - 1) // t + 1 for n in shape)
        kind = "interp"
        if mode == "sr" and len(shape) in (2, 3) and min(coarse) >= sr_min_extent:
            kind = "sr"
        steps.append(PlannedStep(t, kind))
        t //= 2
    return steps


def select_model_tier(rel_epsilon: float) -> str:
    """Noise tier for a range-relative error bound.

    Coarser bounds leave noisier reconstructions behind, so they route to
    models trained against stronger input noise.
    """
    if rel_epsilon > 1e-2:
        return "strong"
    if rel_epsilon >= 1e-4:
        return "weak"
    return "none"


def _strided(arr: np.ndarray, step: int) -> np.ndarray:
    return arr[tuple(slice(None, None, step) for _ in range(arr.ndim))]


def _level_bound(e: float, target_stride: int) -> float:
    return e if target_stride == 1 else e / 2.0


def _sr_merged_prediction(
    model: ModelBundle, view: np.ndarray, norm: NormalizationParams
) -> np.ndarray:
    """Network prediction for a level's refined lattice, cropped to it.

    For 2D the model output covers every point directly. For 3D the three
    slice orientations are merged: one-odd points average two covering
    orientations, two-odd points take their single covering orientation,
    and cube centers stay unpredicted here (they are splined from
    corrected values between classes).
    """
    nd = view.ndim
    lr = np.ascontiguousarray(_strided(view, 2))
    crop = tuple(slice(0, m) for m in view.shape)
    if nd == 2:
        return sr_predict_2d(model, lr, norm)[crop]
    parts = [
        orientation_prediction_3d(model, lr, norm, axes)[crop]
        for axes in slice_orientations(3)
    ]
    return merge_orientation_predictions(parts)


def _walk_levels(buffer, plan, methods, model, norm, handle_class):
    """Shared level walk: predict each parity class, hand the prediction to
    ``handle_class`` for (de)quantization, and apply the corrections.

    ``methods`` carries the interpolation method per step. handle_class
    receives (pred_vector, mask, level_index, level_target_stride) and
    returns the corrected values for the masked points.
    """
    nd = buffer.ndim
    for idx, step in enumerate(plan):
        u = step.stride // 2
        view = _strided(buffer, u)
        if step.kind == "interp":
            method = methods[idx]
            for descriptor in level_parity_classes(method, nd):
                mask = class_target_mask(view.shape, descriptor)
                pred_grid = np.full(view.shape, np.nan)
                predict_class(pred_grid, view, descriptor, method)
                view[mask] = handle_class(pred_grid[mask], mask, idx, u)
        else:
            merged = _sr_merged_prediction(model, view, norm)
            for descriptor in oddcount_classes(nd):
                mask = class_target_mask(view.shape, descriptor)
                if nd == 3 and descriptor[1] == 3:
                    pred_grid = np.full(view.shape, np.nan)
                    predict_class(pred_grid, view, descriptor, MULTIDIM)
                    pred = pred_grid[mask]
                else:
                    pred = merged[mask]
                view[mask] = handle_class(pred, mask, idx, u)


def compress(grid: DataGrid, options: CompressionOptions) -> bytes:
    eb = options.error_bound.resolve(grid)
    rng = vrange(grid)
    lo = float(grid.values.min())

    base_header = dict(
        precision=grid.source_precision,
        shape=grid.shape,
        eb_mode=eb.mode,
        epsilon=float(eb.epsilon),
        resolved_e=float(eb.resolved_e),
        anchor_stride=options.anchor_stride,
        quant_radius=options.quant_radius,
        norm_min=lo,
        norm_range=rng,
    )

    if rng == 0.0:
        header = ArtifactHeader(
            **base_header, constant=True, constant_value=float(grid.values.flat[0])
        )
        return write_artifact(header, b"", options.zstd_level)

    e = float(eb.resolved_e)
    if e <= 0.0:
        raise ConfigError("error bound resolves to zero; lossy compression needs e > 0")

    plan = plan_levels(grid.shape, options.anchor_stride, options.mode)
    norm = NormalizationParams(lo, rng)

    model = None
    degraded = False
    tier = "none"
    if any(s.kind == "sr" for s in plan):
        rel_eps = float(eb.epsilon) if eb.mode == "rel" else e / rng
        tier = select_model_tier(rel_eps)
        registry = options.registry if options.registry is not None else default_registry()
        try:
            if registry is None:
                raise ModelNotFoundError(
                    "super-resolution mode needs a model registry (set SRNZ_MODELS"
                    " or pass one explicitly)"
                )
            model = registry.resolve(options.domain, tier)
        except ModelNotFoundError:
            if options.policy == "strict":
                raise
            degraded = True
            plan = [replace(s, kind="interp") for s in plan]

    anchors = sparsify(grid, options.anchor_stride)
    buffer = np.full(grid.shape, np.nan, dtype=np.float64)
    buffer[anchor_slices(grid.ndims, options.anchor_stride)] = anchors.values

    check_cast = SOURCE_DTYPES["f32"] if grid.source_precision == "f32" else None
    radius = options.quant_radius

    symbol_chunks: list[np.ndarray] = []
    out_ordinals: list[np.ndarray] = []
    out_values: list[np.ndarray] = []
    emitted = 0

    original = grid.values

    def handle(pred, mask, idx, target_stride):
        nonlocal emitted
        actual = _strided(original, target_stride)[mask]
        syms, recon, opos, ovals = quantize_block(
            pred, actual, _level_bound(e, target_stride), radius, check_cast
        )
        symbol_chunks.append(syms)
        if opos.size:
            out_ordinals.append(opos + emitted)
            out_values.append(ovals)
        emitted += int(pred.size)
        return recon

    methods: list = [None] * len(plan)

    # interpolator choice must see the level's input state, so resolve it
    # lazily when the walk reaches each level
    class _LazyMethods:
        def __getitem__(self, idx):
            if methods[idx] is None:
                u = plan[idx].stride // 2
                methods[idx] = select_interpolator(
                    _strided(buffer, u), _strided(original, u)
                )
            return methods[idx]

    _walk_levels(buffer, plan, _LazyMethods(), model, norm, handle)

    expected = grid.size - anchors.count
    if emitted != expected:
        raise InternalError(
            f"emitted {emitted} codes but the lattice accounting expects {expected}"
        )

    symbols = (
        np.concatenate(symbol_chunks) if symbol_chunks else np.zeros(0, dtype=np.int64)
    )
    huff = (
        encode_symbol_section(symbols, alphabet_size(radius)) if symbols.size else b""
    )
    ordinals = (
        np.concatenate(out_ordinals) if out_ordinals else np.zeros(0, dtype=np.int64)
    )
    values = np.concatenate(out_values) if out_values else np.zeros(0, dtype=np.float64)
    payload = pack_sections(
        anchors.values.astype(grid.source_dtype).tobytes(),
        huff,
        encode_outliers(ordinals, values),
    )

    levels = []
    for idx, step in enumerate(plan):
        if step.kind == "sr":
            levels.append(
                LevelRecord(step.stride, "sr", None, model.content_hash, model.noise_tier)
            )
        else:
            levels.append(LevelRecord(step.stride, "interp", methods[idx]))
    header = ArtifactHeader(**base_header, levels=tuple(levels), degraded=degraded)
    return write_artifact(header, payload, options.zstd_level)


def decompress(blob: bytes, registry: ModelRegistry | None = None) -> DataGrid:
    header, payload = read_artifact(blob)
    dtype = SOURCE_DTYPES[header.precision]

    if header.constant:
        arr = np.full(header.shape, header.constant_value, dtype=dtype)
        return DataGrid(arr, header.precision)

    anchors_b, huff_b, outliers_b = unpack_sections(payload)

    ashape = anchor_shape_for(header.shape, header.anchor_stride)
    expect = int(np.prod(ashape, dtype=np.int64)) * dtype.itemsize
    if len(anchors_b) != expect:
        raise CorruptArtifactError(
            f"anchor section holds {len(anchors_b)} bytes, lattice needs {expect}"
        )
    anchor_vals = np.frombuffer(anchors_b, dtype=dtype).reshape(ashape).astype(np.float64)

    total = int(np.prod(header.shape, dtype=np.int64)) - int(np.prod(ashape, dtype=np.int64))
    if huff_b:
        symbols, _ = decode_symbol_section(huff_b, 0)
    else:
        symbols = np.zeros(0, dtype=np.int64)
    if symbols.size != total:
        raise CorruptArtifactError(
            f"symbol stream holds {symbols.size} codes, lattice accounting needs {total}"
        )
    ordinals, values = decode_outliers(outliers_b)
    if ordinals.size and (ordinals[0] < 0 or ordinals[-1] >= max(total, 1)):
        raise CorruptArtifactError("outlier ordinal outside the code stream")

    model = None
    sr_hashes = {lv.model_hash for lv in header.levels if lv.kind == "sr"}
    if sr_hashes:
        if len(sr_hashes) != 1:
            raise CorruptArtifactError("artifact references multiple models")
        reg = registry if registry is not None else default_registry()
        if reg is None:
            raise ModelNotFoundError(
                "artifact needs a super-resolution model; no registry configured"
                " (set SRNZ_MODELS or pass one explicitly)"
            )
        model = reg.find_by_hash(next(iter(sr_hashes)))

    plan = [PlannedStep(lv.stride, lv.kind) for lv in header.levels]
    methods = [lv.method for lv in header.levels]
    norm = NormalizationParams(header.norm_min, header.norm_range)
    e = header.resolved_e
    radius = header.quant_radius

    buffer = np.full(header.shape, np.nan, dtype=np.float64)
    buffer[anchor_slices(len(header.shape), header.anchor_stride)] = anchor_vals

    cursor = 0
    out_cursor = 0

    def handle(pred, mask, idx, target_stride):
        nonlocal cursor, out_cursor
        n = int(pred.size)
        syms = symbols[cursor : cursor + n]
        lo = out_cursor
        hi = lo
        while hi < ordinals.size and ordinals[hi] < cursor + n:
            hi += 1
        cursor += n
        out_cursor = hi
        return dequantize_block(
            pred, syms, _level_bound(e, target_stride), radius, values[lo:hi]
        )

    _walk_levels(buffer, plan, methods, model, norm, handle)

    if cursor != total:
        raise InternalError(f"consumed {cursor} of {total} codes")
    if np.isnan(buffer).any():
        raise InternalError("reconstruction left unfilled points")

    return DataGrid(buffer.astype(dtype), header.precision)


def inspect(blob: bytes) -> ArtifactHeader:
    """Parse and digest-check an artifact, returning only its header."""
    header, _ = read_artifact(blob)
    return header
