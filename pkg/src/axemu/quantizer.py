"""Affine 8-bit quantization: r = scale * (code - zero_point).

Coefficients are derived from an observed value range that is first widened
to include 0, so real 0 always maps to the zero-point exactly. All
intermediate arithmetic runs in float64; the resulting code words are exact
8-bit integers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .tensor import Layout, Range, Tensor4

LEVELS = 256

# Values within this relative distance of an integer grid point snap to it
# before the round mode applies. Without the snap, truncation would knock
# float32-dequantized grid values (relative error ~2^-24) down one code and
# break quantize(dequantize(q)) == q.
_GRID_SNAP = 2.0**-16


class Signedness(enum.Enum):
    UNSIGNED = "unsigned"
    SIGNED = "signed"

    @property
    def bounds(self) -> tuple[int, int]:
        return (0, 255) if self is Signedness.UNSIGNED else (-128, 127)

    @property
    def code_dtype(self) -> np.dtype:
        return np.dtype(np.uint8) if self is Signedness.UNSIGNED else np.dtype(np.int8)

    @property
    def entry_dtype(self) -> np.dtype:
        """Dtype of 16-bit product words for this operand signedness."""
        return np.dtype(np.uint16) if self is Signedness.UNSIGNED else np.dtype(np.int16)


class RoundMode(enum.Enum):
    HALF_AWAY_FROM_ZERO = "half-away-from-zero"
    HALF_TO_EVEN = "half-to-even"
    TOWARD_ZERO = "toward-zero"


def _apply_round(x: np.ndarray, mode: RoundMode) -> np.ndarray:
    if mode is RoundMode.HALF_AWAY_FROM_ZERO:
        return np.copysign(np.floor(np.abs(x) + 0.5), x)
    if mode is RoundMode.HALF_TO_EVEN:
        return np.rint(x)
    return np.trunc(x)


@dataclass(frozen=True)
class QuantParams:
    """Scale, zero-point, signedness, and rounding of one quantized operand."""

    scale: float
    zero_point: int
    mode: Signedness
    round_mode: RoundMode = RoundMode.HALF_AWAY_FROM_ZERO

    def __post_init__(self) -> None:
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"scale must be positive and finite, got {self.scale}")
        lo, hi = self.mode.bounds
        if not lo <= self.zero_point <= hi:
            raise ValueError(f"zero point {self.zero_point} outside [{lo}, {hi}]")


@dataclass(frozen=True)
class QuantTensor:
    """8-bit code words plus the parameters that produced them."""

    data: np.ndarray
    layout: Layout
    params: QuantParams

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.data)
        if arr.dtype != self.params.mode.code_dtype:
            raise ValueError(
                f"code dtype {arr.dtype} does not match mode {self.params.mode.value}"
            )
        object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)


def compute_coeffs(
    rng: Range,
    mode: Signedness,
    round_mode: RoundMode = RoundMode.HALF_AWAY_FROM_ZERO,
) -> QuantParams:
    """Derive scale and zero-point from a value range.

    The range is widened to include 0 first; a degenerate (constant-zero)
    range yields scale 1 so the operator stays total. The zero-point is the
    rounded code of the widened minimum, clamped into the mode's bounds.
    """
    mn = min(rng.min, 0.0)
    mx = max(rng.max, 0.0)
    scale = (mx - mn) / (LEVELS - 1)
    if scale == 0.0:  # degenerate range, or a span so small the step underflows
        scale = 1.0
    lo, hi = mode.bounds
    zp_real = lo - mn / scale
    zp = int(np.clip(_apply_round(np.float64(zp_real), round_mode), lo, hi))
    return QuantParams(scale=scale, zero_point=zp, mode=mode, round_mode=round_mode)


def quantize_values(values: np.ndarray, params: QuantParams) -> np.ndarray:
    """Quantize a float array to 8-bit code words (array-level workhorse)."""
    values = np.asarray(values)
    if not np.isfinite(values).all():
        raise ValueError("cannot quantize non-finite values")
    x = values.astype(np.float64) / params.scale
    nearest = np.rint(x)
    snapped = np.abs(x - nearest) <= _GRID_SNAP * np.maximum(1.0, np.abs(x))
    rounded = np.where(snapped, nearest, _apply_round(x, params.round_mode))
    lo, hi = params.mode.bounds
    codes = np.clip(rounded + params.zero_point, lo, hi)
    return codes.astype(params.mode.code_dtype)


def dequantize_values(codes: np.ndarray, params: QuantParams) -> np.ndarray:
    """Map code words back to float32 reals."""
    r = (codes.astype(np.float64) - params.zero_point) * params.scale
    return r.astype(np.float32)


def quantize(t: Tensor4, params: QuantParams) -> QuantTensor:
    return QuantTensor(quantize_values(t.data, params), t.layout, params)


def dequantize(q: QuantTensor) -> Tensor4:
    return Tensor4(dequantize_values(q.data, q.params), q.layout)
