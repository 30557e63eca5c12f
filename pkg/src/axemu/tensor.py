"""Dense 4D tensors, layouts, value ranges, and convolution geometry.

Two layouts exist: NHWC (batch, height, width, channels) for activations
and HWCN (height, width, channels, filter count) for filter banks. Data is
always float32, row-major with the last index fastest. Tensors are
immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

# n*h*w*c must stay addressable with a 64-bit element count
MAX_ELEMENTS = 1 << 62


class Layout(enum.Enum):
    NHWC = "NHWC"
    HWCN = "HWCN"


@dataclass(frozen=True)
class Tensor4:
    """A dense 4D float32 tensor plus its layout tag."""

    data: np.ndarray
    layout: Layout = Layout.NHWC

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 4:
            raise ValueError(f"Tensor4 needs 4 dimensions, got {arr.ndim}")
        if arr.size > MAX_ELEMENTS:
            raise ValueError("tensor too large for 64-bit element addressing")
        if not isinstance(self.layout, Layout):
            raise TypeError(f"layout must be a Layout, got {type(self.layout).__name__}")
        object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return tuple(self.data.shape)  # type: ignore[return-value]

    @property
    def size(self) -> int:
        return int(self.data.size)


@dataclass(frozen=True)
class Range:
    """Closed interval of observed values; both ends must be finite."""

    min: float
    max: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.min) and math.isfinite(self.max)):
            raise ValueError(f"range must be finite, got ({self.min}, {self.max})")
        if self.min > self.max:
            raise ValueError(f"range min {self.min} exceeds max {self.max}")


@dataclass(frozen=True)
class ConvGeometry:
    """Strides, dilations, and padding policy of a 2D convolution.

    padding is "valid", "same", or explicit (top, bottom, left, right).
    """

    strides: tuple[int, int] = (1, 1)
    dilations: tuple[int, int] = (1, 1)
    padding: str | tuple[int, int, int, int] = "valid"

    def __post_init__(self) -> None:
        for name, pair in (("strides", self.strides), ("dilations", self.dilations)):
            if len(pair) != 2 or any(int(v) != v or v < 1 for v in pair):
                raise ValueError(f"{name} must be two positive integers, got {pair}")
        p = self.padding
        if isinstance(p, str):
            if p not in ("valid", "same"):
                raise ValueError(f"padding must be 'valid', 'same', or 4 integers, got {p!r}")
        else:
            if len(p) != 4 or any(int(v) != v or v < 0 for v in p):
                raise ValueError(f"explicit padding needs 4 non-negative integers, got {p}")


def dilated_extent(kernel: int, dilation: int) -> int:
    return (kernel - 1) * dilation + 1


def resolve_padding(
    geometry: ConvGeometry, in_h: int, in_w: int, kh: int, kw: int
) -> tuple[int, int, int, int]:
    """Concrete (top, bottom, left, right) padding for the given extents.

    "same" splits asymmetric padding with the extra cell on the bottom/right.
    """
    p = geometry.padding
    if isinstance(p, tuple):
        return p
    if p == "valid":
        return (0, 0, 0, 0)
    pads = []
    for size, k, s, d in (
        (in_h, kh, geometry.strides[0], geometry.dilations[0]),
        (in_w, kw, geometry.strides[1], geometry.dilations[1]),
    ):
        out = -(-size // s)  # ceil division
        total = max(0, (out - 1) * s + dilated_extent(k, d) - size)
        pads.append((total // 2, total - total // 2))
    (pt, pb), (pl, pr) = pads
    return (pt, pb, pl, pr)


def output_shape(
    input_shape: tuple[int, int, int, int],
    filter_shape: tuple[int, int, int, int],
    geometry: ConvGeometry,
) -> tuple[int, int, int, int]:
    """NHWC output shape of convolving an NHWC input with an HWCN filter bank."""
    n, h, w, c = input_shape
    kh, kw, fc, cout = filter_shape
    if fc != c:
        raise ValueError(f"filter channels {fc} do not match input channels {c}")
    pt, pb, pl, pr = resolve_padding(geometry, h, w, kh, kw)
    out = []
    for size, pad, k, s, d in (
        (h, pt + pb, kh, geometry.strides[0], geometry.dilations[0]),
        (w, pl + pr, kw, geometry.strides[1], geometry.dilations[1]),
    ):
        span = size + pad - dilated_extent(k, d)
        if span < 0:
            raise ValueError(
                f"kernel extent {dilated_extent(k, d)} exceeds padded input {size + pad}"
            )
        out.append(span // s + 1)
    return (n, out[0], out[1], cout)


def tensor_min_max(t: Tensor4) -> Range:
    """Exact elementwise min and max over the whole tensor."""
    if t.size == 0:
        raise ValueError("cannot take the range of an empty tensor")
    if not np.isfinite(t.data).all():
        raise ValueError("tensor contains non-finite values")
    return Range(float(t.data.min()), float(t.data.max()))


def flatten_index(idx: tuple[int, int, int, int], shape: tuple[int, int, int, int]) -> int:
    """Row-major flat offset of a 4D index (last index fastest)."""
    flat = 0
    for i, d in zip(idx, shape):
        if not 0 <= i < d:
            raise IndexError(f"index {idx} out of bounds for shape {shape}")
        flat = flat * d + i
    return flat


def unflatten_index(flat: int, shape: tuple[int, int, int, int]) -> tuple[int, int, int, int]:
    """Inverse of flatten_index."""
    total = shape[0] * shape[1] * shape[2] * shape[3]
    if not 0 <= flat < total:
        raise IndexError(f"flat offset {flat} out of bounds for shape {shape}")
    idx = []
    for d in reversed(shape):
        idx.append(flat % d)
        flat //= d
    return tuple(reversed(idx))  # type: ignore[return-value]
