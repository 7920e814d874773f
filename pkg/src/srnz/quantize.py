"""Linear error-bounded quantization of prediction residuals.

Residuals are mapped to integer bins of width 2e, so every non-outlier
reconstruction lands within e of the actual value. Bin index k becomes
symbol k + radius; symbol 0 is reserved for outliers, whose exact values
travel in a side channel. Rounding is half away from zero, and a safety
check re-verifies the bound on the actual reconstruction so pathological
magnitudes degrade to outliers instead of violating the bound.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigError, CorruptStreamError

__all__ = [
    "OUTLIER_SYMBOL",
    "alphabet_size",
    "quantize",
    "dequantize",
    "quantize_block",
    "dequantize_block",
]

OUTLIER_SYMBOL = 0
DEFAULT_RADIUS = 32768


def alphabet_size(radius: int) -> int:
    """Symbols span [0, 2 * radius): outlier 0 plus bins 1 .. 2*radius - 1."""
    return 2 * int(radius)


def _check_params(e: float, radius: int) -> tuple[float, int]:
    e = float(e)
    if not np.isfinite(e) or e <= 0.0:
        raise ConfigError(
            f"quantization requires a finite error bound > 0, got {e!r}"
            " (constant fields short-circuit before quantization)"
        )
    radius = int(radius)
    if radius < 2:
        raise ConfigError(f"quantizer radius must be >= 2, got {radius}")
    return e, radius


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.copysign(np.floor(np.abs(x) + 0.5), x)


def quantize_block(
    pred: np.ndarray,
    actual: np.ndarray,
    e: float,
    radius: int,
    check_cast: np.dtype | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Quantize a flat block of residuals.

    Returns (symbols int64, reconstruction float64, outlier positions,
    outlier values). When ``check_cast`` names a narrower output dtype, the
    bound is verified on the value that survives that cast, so casting the
    final reconstruction cannot break the bound.
    """
    e, radius = _check_params(e, radius)
    pred = np.asarray(pred, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    width = 2.0 * e
    k = _round_half_away((actual - pred) / width)
    in_range = np.isfinite(k) & (np.abs(k) < radius)
    k_safe = np.where(in_range, k, 0.0)
    recon = pred + width * k_safe
    if check_cast is None:
        survived = recon
    else:
        survived = recon.astype(check_cast).astype(np.float64)
    ok = in_range & (np.abs(actual - survived) <= e)
    symbols = np.where(ok, k_safe + radius, float(OUTLIER_SYMBOL)).astype(np.int64)
    recon = np.where(ok, recon, actual)
    outlier_pos = np.flatnonzero(~ok)
    return symbols, recon, outlier_pos, actual[outlier_pos].copy()


def dequantize_block(
    pred: np.ndarray,
    symbols: np.ndarray,
    e: float,
    radius: int,
    outlier_values: np.ndarray,
) -> np.ndarray:
    """Invert :func:`quantize_block`; outlier values are consumed in order."""
    e, radius = _check_params(e, radius)
    pred = np.asarray(pred, dtype=np.float64)
    symbols = np.asarray(symbols, dtype=np.int64)
    if symbols.size and (symbols.min() < 0 or symbols.max() >= alphabet_size(radius)):
        raise CorruptStreamError("quantizer symbol outside the alphabet")
    k = (symbols - radius).astype(np.float64)
    recon = pred + (2.0 * e) * k
    out_pos = np.flatnonzero(symbols == OUTLIER_SYMBOL)
    outlier_values = np.asarray(outlier_values, dtype=np.float64)
    if out_pos.size != outlier_values.size:
        raise CorruptStreamError(
            f"stream holds {out_pos.size} outlier slots but {outlier_values.size} values"
        )
    recon[out_pos] = outlier_values
    return recon


def quantize(pred: float, actual: float, e: float, radius: int = DEFAULT_RADIUS) -> tuple[int, float]:
    """Quantize one residual; returns (symbol, reconstructed value).

    Symbol 0 means outlier and the reconstruction is the actual value
    exactly; otherwise |actual - reconstructed| <= e.
    """
    symbols, recon, _, _ = quantize_block(
        np.array([pred]), np.array([actual]), e, radius
    )
    return int(symbols[0]), float(recon[0])


def dequantize(
    pred: float,
    symbol: int,
    outlier_value: float | None,
    e: float,
    radius: int = DEFAULT_RADIUS,
) -> float:
    """Reconstruct one value from its symbol (or stored outlier value)."""
    e, radius = _check_params(e, radius)
    symbol = int(symbol)
    if symbol < 0 or symbol >= alphabet_size(radius):
        raise CorruptStreamError(f"symbol {symbol} outside alphabet of radius {radius}")
    if symbol == OUTLIER_SYMBOL:
        if outlier_value is None:
            raise CorruptStreamError("outlier symbol without a stored value")
        return float(outlier_value)
    return float(pred + (2.0 * e) * (symbol - radius))
