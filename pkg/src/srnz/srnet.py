"""Pure-numpy inference for super-resolution model bundles.

Runs the layer graph from :mod:`srnz.bundle` on float32 batches shaped
(N, C, H, W). Convolutions are im2col + one float32 matmul, pixel_shuffle
reproduces the channel-to-offset order used by the usual training
frameworks (channel c*r*r + di*r + dj lands at spatial offset (di, dj)),
and gelu uses the exact erf form. Results are deterministic for a given
process and BLAS build.

Value-space entry points normalize with the grid-wide affine map before
the network and undo it after, so models always see data in [0, 1] plus
whatever error the previous levels left behind. Large slices are tiled
with an overlap margin and center-cropped back together to bound memory.
"""
from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .bundle import ModelBundle
from .errors import ConfigError, InternalError
from .grid import NormalizationParams

__all__ = [
    "MIN_SR_EXTENT",
    "TILE_LIMIT",
    "TILE_OVERLAP",
    "conv2d",
    "pixel_shuffle",
    "channel_attention",
    "run_graph",
    "sr_predict_2d",
    "sr_predict_2d_batch",
    "sr_predict_3d_via_slices",
    "slice_orientations",
    "orientation_prediction_3d",
    "merge_orientation_predictions",
]

# SR applies only when every participating extent is at least this large;
# smaller subgrids fall back to spline interpolation.
MIN_SR_EXTENT = 8
TILE_LIMIT = 512
TILE_OVERLAP = 16

_erf = np.frompyfunc(math.erf, 1, 1)


def conv2d(x: np.ndarray, weight: np.ndarray, bias=None) -> np.ndarray:
    """Same-padded stride-1 convolution on an (N, C, H, W) float32 batch."""
    n, c, h, w = x.shape
    cout, cin, kh, kw = weight.shape
    if cin != c:
        raise InternalError(f"conv2d channel mismatch: input {c}, weight {cin}")
    ph, pw = (kh - 1) // 2, (kw - 1) // 2
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n, h, w, c * kh * kw)
    out = cols @ weight.reshape(cout, c * kh * kw).T
    out = np.ascontiguousarray(out.transpose(0, 3, 1, 2))
    if bias is not None:
        out += bias[None, :, None, None]
    return out


def pixel_shuffle(x: np.ndarray, factor: int) -> np.ndarray:
    """Rearrange (N, C*r*r, H, W) to (N, C, r*H, r*W)."""
    n, crr, h, w = x.shape
    r = factor
    if crr % (r * r):
        raise InternalError(f"pixel_shuffle: {crr} channels not divisible by {r * r}")
    c = crr // (r * r)
    y = x.reshape(n, c, r, r, h, w).transpose(0, 1, 4, 2, 5, 3)
    return np.ascontiguousarray(y.reshape(n, c, h * r, w * r))


def _gelu(x: np.ndarray) -> np.ndarray:
    e = _erf(x.astype(np.float64) / math.sqrt(2.0)).astype(np.float64)
    return (0.5 * x.astype(np.float64) * (1.0 + e)).astype(np.float32)


def channel_attention(x, w_down, b_down, w_up, b_up):
    pooled = x.mean(axis=(2, 3), dtype=np.float32)
    hidden = np.maximum(pooled @ w_down.T + b_down, np.float32(0.0))
    logits = hidden @ w_up.T + b_up
    gate = np.float32(1.0) / (np.float32(1.0) + np.exp(-logits, dtype=np.float32))
    return x * gate[:, :, None, None]


def run_graph(bundle: ModelBundle, x: np.ndarray) -> np.ndarray:
    """Execute the bundle's layer graph on an (N, 1, H, W) float32 batch."""
    if x.ndim != 4 or x.dtype != np.float32:
        raise InternalError("run_graph expects an (N, 1, H, W) float32 batch")
    t = bundle.tensors
    cur = x
    saved: dict[str, np.ndarray] = {}
    for layer in bundle.graph["layers"]:
        op = layer["op"]
        if op == "conv2d":
            bias_name = layer.get("bias")
            cur = conv2d(cur, t[layer["weight"]], None if bias_name is None else t[bias_name])
        elif op == "relu":
            cur = np.maximum(cur, np.float32(0.0))
        elif op == "leaky_relu":
            slope = np.float32(layer.get("negative_slope", 0.01))
            cur = np.where(cur >= 0, cur, cur * slope)
        elif op == "gelu":
            cur = _gelu(cur)
        elif op == "save":
            saved[layer["tag"]] = cur
        elif op == "add":
            cur = cur + saved[layer["tag"]]
        elif op == "channel_attention":
            cur = channel_attention(
                cur,
                t[layer["w_down"]],
                t[layer["b_down"]],
                t[layer["w_up"]],
                t[layer["b_up"]],
            )
        elif op == "pixel_shuffle":
            cur = pixel_shuffle(cur, layer["factor"])
        else:  # load-time validation makes this unreachable
            raise InternalError(f"unsupported op {op!r}")
    return cur


def _run_tiled(bundle: ModelBundle, batch: np.ndarray) -> np.ndarray:
    """run_graph with spatial tiling; batch is (N, 1, H, W) float32."""
    n, _, h, w = batch.shape
    if h <= TILE_LIMIT and w <= TILE_LIMIT:
        return run_graph(bundle, batch)
    step = TILE_LIMIT - 2 * TILE_OVERLAP
    out = np.empty((n, 1, 2 * h, 2 * w), dtype=np.float32)
    for a in range(0, h, step):
        a_hi = min(a + step, h)
        lo0, hi0 = max(0, a - TILE_OVERLAP), min(h, a_hi + TILE_OVERLAP)
        for b in range(0, w, step):
            b_hi = min(b + step, w)
            lo1, hi1 = max(0, b - TILE_OVERLAP), min(w, b_hi + TILE_OVERLAP)
            y = run_graph(bundle, np.ascontiguousarray(batch[:, :, lo0:hi0, lo1:hi1]))
            out[:, :, 2 * a : 2 * a_hi, 2 * b : 2 * b_hi] = y[
                :,
                :,
                2 * (a - lo0) : 2 * (a - lo0) + 2 * (a_hi - a),
                2 * (b - lo1) : 2 * (b - lo1) + 2 * (b_hi - b),
            ]
    return out


def _predict_batch_norm(bundle, lrs: np.ndarray, norm: NormalizationParams) -> np.ndarray:
    """Normalize, run (chunked to bound im2col memory), denormalize.

    lrs is (K, H, W) float64 in value space; returns (K, 2H, 2W) float64.
    """
    k, h, w = lrs.shape
    xn = ((lrs - norm.minimum) / norm.vrange).astype(np.float32)[:, None, :, :]
    # ~288 floats of im2col state per pixel for a 32-channel 3x3 layer;
    # cap chunks near 256 MB.
    per_image = max(1, h * w * 288 * 4)
    chunk = max(1, int(256e6) // per_image)
    pieces = []
    for start in range(0, k, chunk):
        pieces.append(_run_tiled(bundle, xn[start : start + chunk]))
    y = np.concatenate(pieces, axis=0) if len(pieces) > 1 else pieces[0]
    return y[:, 0].astype(np.float64) * norm.vrange + norm.minimum


def sr_predict_2d(bundle: ModelBundle, lr: np.ndarray, norm: NormalizationParams) -> np.ndarray:
    """Predict the 2x-refined grid for one 2D slice in value space.

    lr is float64 with both extents >= MIN_SR_EXTENT; the coarse points sit
    at the even indices of the (2H, 2W) output.
    """
    if lr.ndim != 2:
        raise ConfigError("sr_predict_2d expects a 2D array")
    if min(lr.shape) < MIN_SR_EXTENT:
        raise ConfigError(
            f"sr_predict_2d needs extents >= {MIN_SR_EXTENT}, got {lr.shape}"
        )
    return _predict_batch_norm(bundle, lr[None], norm)[0]


def sr_predict_2d_batch(bundle: ModelBundle, lrs: np.ndarray, norm: NormalizationParams) -> np.ndarray:
    """Vector form of sr_predict_2d over a (K, H, W) stack of equal slices."""
    if lrs.ndim != 3:
        raise ConfigError("sr_predict_2d_batch expects a (K, H, W) array")
    if lrs.shape[0] == 0:
        return np.empty((0, 2 * lrs.shape[1], 2 * lrs.shape[2]), dtype=np.float64)
    if min(lrs.shape[1:]) < MIN_SR_EXTENT:
        raise ConfigError(
            f"sr_predict_2d_batch needs extents >= {MIN_SR_EXTENT}, got {lrs.shape[1:]}"
        )
    return _predict_batch_norm(bundle, lrs, norm)


def slice_orientations(ndims: int) -> tuple[tuple[int, int], ...]:
    """Axis pairs that span the 2D slices of an n-D grid, in fixed order."""
    if ndims == 2:
        return ((0, 1),)
    if ndims == 3:
        return ((0, 1), (0, 2), (1, 2))
    raise ConfigError(f"super-resolution applies to 2D or 3D grids, not {ndims}D")


def orientation_prediction_3d(
    bundle: ModelBundle,
    lr: np.ndarray,
    norm: NormalizationParams,
    axes: tuple[int, int],
) -> np.ndarray:
    """SR every even-index slice of a 3D coarse grid along one orientation.

    lr is (m0, m1, m2) float64. The fixed axis is the one not in ``axes``;
    slices are taken at each coarse index of that axis, refined in-plane,
    and written back at even indices of the fixed axis of the (2m0, 2m1,
    2m2) output. Entries of planes not covered stay NaN.
    """
    fixed = ({0, 1, 2} - set(axes)).pop()
    stack = np.ascontiguousarray(np.moveaxis(lr, fixed, 0))
    hr = sr_predict_2d_batch(bundle, stack, norm)
    out_shape = [2 * s for s in lr.shape]
    out = np.full(out_shape, np.nan, dtype=np.float64)
    target = np.moveaxis(out, fixed, 0)
    target[:: 2][: lr.shape[fixed]] = hr[: lr.shape[fixed]]
    # moveaxis returns a view, so writes above landed in `out`
    return out


def merge_orientation_predictions(parts: list[np.ndarray]) -> np.ndarray:
    """Mean of per-orientation predictions where they cover, 0 elsewhere.

    Uncovered positions (all-NaN across orientations) are exactly the
    all-odd cube centers, which callers predict separately.
    """
    stack = np.stack(parts)
    valid = ~np.isnan(stack)
    covered = valid.sum(axis=0)
    return np.where(valid, stack, 0.0).sum(axis=0) / np.maximum(covered, 1)


def sr_predict_3d_via_slices(
    bundle: ModelBundle, lr: np.ndarray, norm: NormalizationParams
) -> np.ndarray:
    """Reference whole-grid 3D prediction assembled from 2D slice passes.

    Points with exactly one odd coordinate in the doubled grid are covered
    by two slice orientations and get the mean of both; points with two
    odd coordinates are covered by exactly one orientation. Cube centers
    (all-odd) take a multidimensional spline over the already-assembled
    prediction. The compression engine interleaves quantized corrections
    between those parity classes; this pure form exists for inspection and
    testing of the coverage rules.
    """
    from .interpolation import predict_multidim_spline

    if lr.ndim != 3:
        raise ConfigError("sr_predict_3d_via_slices expects a 3D array")
    preds = [
        orientation_prediction_3d(bundle, lr, norm, axes)
        for axes in slice_orientations(3)
    ]
    out = np.full([2 * s for s in lr.shape], np.nan, dtype=np.float64)
    even = (slice(0, None, 2),) * 3
    out[even] = lr
    idx = np.indices(out.shape)
    oddcount = (idx[0] % 2) + (idx[1] % 2) + (idx[2] % 2)
    mean = merge_orientation_predictions(preds)
    for k in (1, 2):
        sel = oddcount == k
        out[sel] = mean[sel]
    centers = np.argwhere(oddcount == 3)
    for point in centers:
        out[tuple(point)] = predict_multidim_spline(out, tuple(point), 1)
    return out
