"""Midpoint interpolation predictors for hierarchical grid expansion.

A level sees the refined subgrid as a strided view whose even indices are
already reconstructed. Points with at least one odd index are predicted in
parity classes:

* ``linear`` / ``cubic_1d`` run one pass per axis, slowest-varying first,
  covering points that are odd in the current axis and even in every later
  axis; stencils run along the pass axis.
* ``multidim_spline`` runs odd-coordinate-count classes (1, then 2, then 3);
  each point receives the mean of 1D cubic predictions along its odd axes.

The four-point cubic stencil degrades near boundaries: three-point
quadratic where one far neighbor is missing, then linear, then a copy of
the nearest known value. Class order and the row-major flattening inside a
class define the code emission order, so compressor and decompressor walk
points identically.
"""
from __future__ import annotations

from itertools import combinations

import numpy as np

from .errors import ConfigError, InternalError

__all__ = [
    "LINEAR",
    "CUBIC",
    "MULTIDIM",
    "INTERP_METHODS",
    "predict_linear_midpoint",
    "predict_cubic_midpoint",
    "predict_multidim_spline",
    "level_parity_classes",
    "oddcount_classes",
    "class_target_mask",
    "predict_class",
    "select_interpolator",
]

LINEAR = "linear"
CUBIC = "cubic_1d"
MULTIDIM = "multidim_spline"
# Tie-break preference order for dynamic selection.
INTERP_METHODS = (CUBIC, LINEAR, MULTIDIM)

SELECTION_SAMPLE = 4096  # deterministic error-sample cap per level


def predict_linear_midpoint(a, b):
    """Midpoint between two neighbors at offsets -s and +s."""
    return (a + b) / 2.0


def predict_cubic_midpoint(a, b, c, d):
    """Four-point midpoint cubic: nodes at -3s, -s, +s, +3s."""
    return (-a + 9.0 * b + 9.0 * c - d) / 16.0


def _quad_right(b, c, d):
    # nodes at -s, +s, +3s evaluated at 0
    return (3.0 * b + 6.0 * c - d) / 8.0


def _quad_left(a, b, c):
    # nodes at -3s, -s, +s evaluated at 0
    return (-a + 6.0 * b + 3.0 * c) / 8.0


# ---------------------------------------------------------------------------
# parity classes


def level_parity_classes(method: str, ndims: int) -> list[tuple[str, int]]:
    """Emission classes for an interpolation level, in order."""
    if method in (LINEAR, CUBIC):
        return [("axis", d) for d in range(ndims)]
    if method == MULTIDIM:
        return oddcount_classes(ndims)
    raise ConfigError(f"unknown interpolation method {method!r}")


def oddcount_classes(ndims: int) -> list[tuple[str, int]]:
    """Classes by number of odd coordinates: 1, then 2, then 3."""
    return [("oddcount", k) for k in range(1, ndims + 1)]


def _odd_axis_masks(shape: tuple[int, ...]) -> list[np.ndarray]:
    masks = []
    for d, m in enumerate(shape):
        shp = [1] * len(shape)
        shp[d] = m
        masks.append(((np.arange(m) & 1) == 1).reshape(shp))
    return masks


def class_target_mask(shape: tuple[int, ...], descriptor: tuple[str, int]) -> np.ndarray:
    """Boolean mask of the points a parity class predicts."""
    odd = _odd_axis_masks(shape)
    kind, arg = descriptor
    if kind == "axis":
        mask = np.broadcast_to(odd[arg], shape).copy()
        for later in range(arg + 1, len(shape)):
            mask &= ~odd[later]
        return mask
    if kind == "oddcount":
        counts = np.zeros(shape, dtype=np.int64)
        for m in odd:
            counts = counts + m
        return counts == arg
    raise ConfigError(f"unknown parity class {descriptor!r}")


# ---------------------------------------------------------------------------
# vectorized boundary-aware 1D fills


def _axis_midpoint_into(P: np.ndarray, V: np.ndarray, axis: int, base: list, method: str) -> None:
    """Write 1D midpoint predictions along ``axis`` into the view-shaped P.

    ``base`` fixes the slice pattern of the other axes; the axis entry is
    replaced zone by zone. ``method`` picks the linear or the cubic ladder.
    """
    M = V.shape[axis]

    def at(s):
        sel = list(base)
        sel[axis] = s
        return tuple(sel)

    if method == LINEAR:
        if M >= 3:
            t = at(slice(1, M - 1, 2))
            P[t] = predict_linear_midpoint(
                V[at(slice(0, M - 2, 2))], V[at(slice(2, M, 2))]
            )
        if M >= 2 and (M - 1) % 2 == 1:
            P[at(M - 1)] = V[at(M - 2)]
        return

    # cubic ladder
    lo, hi = 3, M - 4
    if hi >= lo:
        P[at(slice(lo, hi + 1, 2))] = predict_cubic_midpoint(
            V[at(slice(lo - 3, hi - 2, 2))],
            V[at(slice(lo - 1, hi, 2))],
            V[at(slice(lo + 1, hi + 2, 2))],
            V[at(slice(lo + 3, hi + 4, 2))],
        )
    if M >= 2:
        if M >= 5:
            P[at(1)] = _quad_right(V[at(0)], V[at(2)], V[at(4)])
        elif M >= 3:
            P[at(1)] = predict_linear_midpoint(V[at(0)], V[at(2)])
        else:
            P[at(1)] = V[at(0)]
    # first odd index past the interior zone: M-2 for odd M, M-3 for even M
    tail = M - 2 if M % 2 else M - 3
    for j in range(max(3, tail), M, 2):
        if j <= M - 2:
            P[at(j)] = _quad_left(V[at(j - 3)], V[at(j - 1)], V[at(j + 1)])
        else:
            P[at(j)] = V[at(j - 1)]


def predict_class(
    P: np.ndarray,
    V: np.ndarray,
    descriptor: tuple[str, int],
    method: str,
) -> None:
    """Fill P with this class's predictions computed from the live view V."""
    nd = V.ndim
    kind, arg = descriptor
    if kind == "axis":
        base: list = [slice(None)] * nd
        for later in range(arg + 1, nd):
            base[later] = slice(0, None, 2)
        _axis_midpoint_into(P, V, arg, base, method)
        return
    if kind != "oddcount":
        raise ConfigError(f"unknown parity class {descriptor!r}")
    for subset in combinations(range(nd), arg):
        base = [slice(0, None, 2)] * nd
        for d in subset:
            base[d] = slice(1, None, 2)
        slab = tuple(base)
        acc = None
        tmp = np.empty_like(P)
        for d in subset:
            _axis_midpoint_into(tmp, V, d, base, CUBIC)
            acc = tmp[slab].copy() if acc is None else acc + tmp[slab]
        P[slab] = acc / len(subset)


def predict_multidim_spline(grid: np.ndarray, point: tuple[int, ...], stride: int) -> float:
    """Mean of per-axis cubic-ladder predictions for an all-odd point.

    ``point`` indexes the full grid; ``stride`` is the fine stride of the
    current level, so axis neighbors sit at offsets +-stride and +-3*stride.
    """
    grid = np.asarray(grid, dtype=np.float64)
    s = int(stride)
    if s < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    total = 0.0
    for d in range(grid.ndim):
        j, n = point[d], grid.shape[d]
        if (j // s) % 2 != 1 or j % s:
            raise ConfigError(f"point {point} is not odd-parity on axis {d} at stride {s}")

        def val(offset):
            sel = list(point)
            sel[d] = j + offset
            return float(grid[tuple(sel)])

        has_l3 = j - 3 * s >= 0
        has_r1 = j + s <= n - 1
        has_r3 = j + 3 * s <= n - 1
        if has_l3 and has_r3:
            p = predict_cubic_midpoint(val(-3 * s), val(-s), val(s), val(3 * s))
        elif has_r3:
            p = _quad_right(val(-s), val(s), val(3 * s))
        elif has_l3 and has_r1:
            p = _quad_left(val(-3 * s), val(-s), val(s))
        elif has_r1:
            p = predict_linear_midpoint(val(-s), val(s))
        else:
            p = val(-s)
        total += p
    return total / grid.ndim


# ---------------------------------------------------------------------------
# dynamic per-level selection (compression side only)


def _level_sse(E: np.ndarray, reference: np.ndarray, method: str, sample_cap: int) -> float:
    preds = []
    refs = []
    for descriptor in level_parity_classes(method, E.ndim):
        P = np.full(E.shape, np.nan)
        predict_class(P, E, descriptor, method)
        mask = class_target_mask(E.shape, descriptor)
        preds.append(P[mask])
        refs.append(reference[mask])
    pred = np.concatenate(preds) if preds else np.zeros(0)
    ref = np.concatenate(refs) if refs else np.zeros(0)
    if pred.size > sample_cap:
        idx = np.linspace(0, pred.size - 1, sample_cap).astype(np.int64)
        pred, ref = pred[idx], ref[idx]
    if np.isnan(pred).any():
        raise InternalError("parity class left unpredicted points")
    err = pred - ref
    return float(np.dot(err, err))


def select_interpolator(
    view: np.ndarray,
    reference: np.ndarray,
    sample_cap: int = SELECTION_SAMPLE,
) -> str:
    """Pick the interpolation method with the lowest sampled squared error.

    ``view`` is the live reconstruction at this level's stride; ``reference``
    holds the original values on the same lattice. Candidates are scored
    against an evaluation grid that carries reconstructed values at known
    points and original values elsewhere, and ties keep the earliest method
    in the fixed preference order, so the outcome is deterministic.
    """
    if view.shape != reference.shape:
        raise ConfigError("view and reference shapes differ")
    E = reference.copy()
    known = (slice(0, None, 2),) * view.ndim
    E[known] = view[known]
    best_method = None
    best_sse = None
    for method in INTERP_METHODS:
        sse = _level_sse(E, reference, method, sample_cap)
        if best_sse is None or sse < best_sse:
            best_method, best_sse = method, sse
    return best_method
