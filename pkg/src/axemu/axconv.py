"""Approximate 2D convolution.

Two engines share one semantics:

* ``direct_conv`` — a plain nested-loop reference. Every tap accumulates
  ``lut(i, f) - zp2*i - zp1*f + zp1*zp2`` in exact integer arithmetic, the
  total is scaled by ``scale1*scale2`` in float64 and narrowed to float32.
  Single-threaded by contract; it is the oracle everything else must match
  bit for bit.

* ``axconv2d`` — the production pipeline: split the batch into chunks,
  rewrite each chunk as a patch matrix (image-to-columns) with per-patch
  integer code sums, multiply against the quantized filter matrix with the
  inner multiply replaced by a truth-table lookup, and undo quantization
  with the precomputed correction sums. All reductions are over integers,
  so any chunking, tiling, or worker count yields identical bits.

Padding positions hold the input zero-point code, so every patch has the
same length and the correction sums stay well defined.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numba import config as _numba_config
from numba import njit, prange, set_num_threads

from .axmult import MultLut
from .metering import PHASE_LUT, PHASE_QUANT, Meter
from .quantizer import QuantParams, RoundMode, quantize_values
from .tensor import ConvGeometry, Layout, Range, Tensor4, output_shape, resolve_padding

# Portable threading backend; skips the TBB/OpenMP probing at first parallel call.
_numba_config.THREADING_LAYER = "workqueue"

# Default patch-matrix budget; decouples memory use from convolution parameters.
PATCH_BUDGET_BYTES = 64 << 20
DEFAULT_CHUNK_IMAGES = 64

_INT32_MIN = -(1 << 31)
_INT32_MAX = (1 << 31) - 1


class Accumulator(enum.Enum):
    """Width emulation of the product accumulator.

    EXACT64 never overflows for realistic patch lengths. WRAP32 and
    SATURATE32 emulate a 32-bit accumulator; both are defined on the exact
    sum of products (wrapping commutes with addition, saturation is applied
    to the final sum) so results stay schedule-independent.
    """

    EXACT64 = "exact64"
    WRAP32 = "wrap32"
    SATURATE32 = "saturate32"


@dataclass(frozen=True)
class ConvConfig:
    geometry: ConvGeometry = ConvGeometry()
    chunk_size: int | None = None  # images per chunk; None picks a capped default
    accumulator: Accumulator = Accumulator.EXACT64
    round_mode: RoundMode = RoundMode.HALF_AWAY_FROM_ZERO
    workers: int | None = None  # None uses all available threads

    def __post_init__(self) -> None:
        if self.chunk_size is not None and self.chunk_size < 1:
            raise ValueError(f"chunk_size must be >= 1, got {self.chunk_size}")


@dataclass
class PatchMatrix:
    """Quantized image-to-columns matrix plus per-patch integer code sums."""

    codes: np.ndarray  # rows x K code words
    patch_sums: np.ndarray  # int32, one exact code sum per row

    @property
    def rows(self) -> int:
        return self.codes.shape[0]

    @property
    def cols(self) -> int:
        return self.codes.shape[1]


@dataclass
class QuantFilters:
    """Quantized filter matrix (K x Cout) plus per-filter integer code sums."""

    codes: np.ndarray
    filter_sums: np.ndarray  # int32, one exact code sum per column


def effective_workers(requested: int | None) -> int:
    """Clamp a requested worker count to what the runtime can provide."""
    available = _numba_config.NUMBA_NUM_THREADS
    if requested is None:
        return available
    return max(1, min(int(requested), available))


def conv_mac_count(
    input_shape: tuple[int, int, int, int],
    filter_shape: tuple[int, int, int, int],
    geometry: ConvGeometry,
) -> int:
    """Multiply-accumulate count: output positions x patch length x filters."""
    n, oh, ow, cout = output_shape(input_shape, filter_shape, geometry)
    kh, kw, cin, _ = filter_shape
    return n * oh * ow * kh * kw * cin * cout


def _check_operands(inputs: Tensor4, filters: Tensor4) -> None:
    if inputs.layout is not Layout.NHWC:
        raise ValueError("input tensor must be NHWC")
    if filters.layout is not Layout.HWCN:
        raise ValueError("filter tensor must be HWCN")
    if inputs.shape[3] != filters.shape[2]:
        raise ValueError(
            f"filter channels {filters.shape[2]} do not match input channels {inputs.shape[3]}"
        )


def _emulate_accumulator(acc: np.ndarray, accumulator: Accumulator) -> np.ndarray:
    if accumulator is Accumulator.EXACT64:
        return acc
    if accumulator is Accumulator.WRAP32:
        return ((acc + (1 << 31)) % (1 << 32)) - (1 << 31)
    return np.clip(acc, _INT32_MIN, _INT32_MAX)


@njit(parallel=True, cache=True)
def _lut_matmul(raw_patches, raw_filters_t, entries, out):  # pragma: no cover - compiled
    rows, depth = raw_patches.shape
    cout = raw_filters_t.shape[0]
    for r in prange(rows):
        for c in range(cout):
            acc = np.int64(0)
            for k in range(depth):
                idx = (np.int64(raw_patches[r, k]) << 8) | np.int64(raw_filters_t[c, k])
                acc += entries[idx]
            out[r, c] = acc


def _window_offsets(
    geometry: ConvGeometry, oh: int, ow: int, kh: int, kw: int
) -> tuple[np.ndarray, np.ndarray]:
    """Row/col gather offsets into the padded image: (oh,kh) and (ow,kw)."""
    sh, sw = geometry.strides
    dh, dw = geometry.dilations
    hh = np.arange(oh)[:, None] * sh + np.arange(kh)[None, :] * dh
    ww = np.arange(ow)[:, None] * sw + np.arange(kw)[None, :] * dw
    return hh, ww


def im2cols(
    chunk: Tensor4,
    params: QuantParams,
    geometry: ConvGeometry,
    kernel_hw: tuple[int, int],
    meter: Meter | None = None,
) -> PatchMatrix:
    """Quantize a chunk and lay its receptive-field windows out as matrix rows.

    Row r is the flattened (kh, kw, cin) window of output position r, taps
    outside the image filled with the zero-point code. Patch sums are exact
    integer sums over each row, padding included.
    """
    meter = meter or Meter()
    if chunk.size == 0:
        raise ValueError("chunk has no elements")
    kh, kw = kernel_hw
    n, h, w, cin = chunk.shape
    oh_ow = output_shape(chunk.shape, (kh, kw, cin, 1), geometry)
    _, oh, ow, _ = oh_ow

    with meter.phase(PHASE_QUANT):
        codes = quantize_values(chunk.data, params)

    pt, pb, pl, pr = resolve_padding(geometry, h, w, kh, kw)
    padded = np.pad(
        codes,
        ((0, 0), (pt, pb), (pl, pr), (0, 0)),
        constant_values=params.zero_point,
    )
    hh, ww = _window_offsets(geometry, oh, ow, kh, kw)
    windows = padded[:, hh[:, None, :, None], ww[None, :, None, :], :]
    mat = np.ascontiguousarray(windows.reshape(n * oh * ow, kh * kw * cin))
    sums = mat.astype(np.int64).sum(axis=1)
    if sums.size and (sums.max() > _INT32_MAX or sums.min() < _INT32_MIN):
        raise OverflowError("patch length too large for 32-bit code sums")
    return PatchMatrix(codes=mat, patch_sums=sums.astype(np.int32))


def quantize_filters(
    filters: Tensor4, params: QuantParams, meter: Meter | None = None
) -> QuantFilters:
    """Quantize an HWCN filter bank into a K x Cout code matrix with column sums."""
    meter = meter or Meter()
    kh, kw, cin, cout = filters.shape
    with meter.phase(PHASE_QUANT):
        codes = quantize_values(filters.data, params).reshape(kh * kw * cin, cout)
    sums = codes.astype(np.int64).sum(axis=0)
    if sums.size and (sums.max() > _INT32_MAX or sums.min() < _INT32_MIN):
        raise OverflowError("filter size too large for 32-bit code sums")
    return QuantFilters(codes=codes, filter_sums=sums.astype(np.int32))


def approx_gemm(
    patches: PatchMatrix,
    filters: QuantFilters,
    p1: QuantParams,
    p2: QuantParams,
    lut: MultLut,
    cfg: ConvConfig,
    meter: Meter | None = None,
) -> np.ndarray:
    """Patch matrix times filter matrix with the inner multiply looked up.

    out[r, c] = s1*s2 * (A - zp2*Sp[r] - zp1*Sf[c] + K*zp1*zp2) where A is
    the accumulated table lookup over the K taps. Integer accumulation makes
    the result independent of tiling and worker count.
    """
    meter = meter or Meter()
    if patches.cols != filters.codes.shape[0]:
        raise ValueError(
            f"patch length {patches.cols} does not match filter rows {filters.codes.shape[0]}"
        )
    rows, depth = patches.codes.shape
    cout = filters.codes.shape[1]

    raw_patches = patches.codes.view(np.uint8)
    raw_filters_t = np.ascontiguousarray(filters.codes.T).view(np.uint8)

    set_num_threads(effective_workers(cfg.workers))
    acc = np.empty((rows, cout), dtype=np.int64)
    with meter.phase(PHASE_LUT):
        _lut_matmul(raw_patches, raw_filters_t, lut.entries, acc)
        acc = _emulate_accumulator(acc, cfg.accumulator)
    meter.add_macs(rows * depth * cout)

    with meter.phase(PHASE_QUANT):
        zp1 = np.int64(p1.zero_point)
        zp2 = np.int64(p2.zero_point)
        corr = (
            acc
            - zp2 * patches.patch_sums.astype(np.int64)[:, None]
            - zp1 * filters.filter_sums.astype(np.int64)[None, :]
            + np.int64(depth) * zp1 * zp2
        )
        scale = p1.scale * p2.scale
        out = (scale * corr).astype(np.float32)
    return out


def _default_chunk(n: int, rows_per_image: int, depth: int) -> int:
    per_image = max(1, rows_per_image * depth)
    budget = max(1, PATCH_BUDGET_BYTES // per_image)
    return max(1, min(DEFAULT_CHUNK_IMAGES, budget, n))


def axconv2d(
    inputs: Tensor4,
    filters: Tensor4,
    in_range: Range,
    f_range: Range,
    lut: MultLut,
    cfg: ConvConfig,
    meter: Meter | None = None,
) -> Tensor4:
    """Chunked image-to-columns + LUT-GEMM convolution. Bit-identical to direct_conv."""
    meter = meter or Meter()
    _check_operands(inputs, filters)
    from .quantizer import compute_coeffs

    p1 = compute_coeffs(in_range, lut.mode, cfg.round_mode)
    p2 = compute_coeffs(f_range, lut.mode, cfg.round_mode)
    kh, kw, cin, cout = filters.shape
    n, oh, ow, _ = output_shape(inputs.shape, filters.shape, cfg.geometry)

    if n == 0:
        return Tensor4(np.zeros((0, oh, ow, cout), np.float32), Layout.NHWC)
    qf = quantize_filters(filters, p2, meter)
    chunk_images = cfg.chunk_size or _default_chunk(n, oh * ow, kh * kw * cin)

    pieces = []
    for start in range(0, n, chunk_images):
        stop = min(start + chunk_images, n)
        chunk = Tensor4(inputs.data[start:stop], Layout.NHWC)
        patches = im2cols(chunk, p1, cfg.geometry, (kh, kw), meter)
        flat = approx_gemm(patches, qf, p1, p2, lut, cfg, meter)
        pieces.append(flat.reshape(stop - start, oh, ow, cout))
    return Tensor4(np.concatenate(pieces, axis=0), Layout.NHWC)


def direct_conv(
    inputs: Tensor4,
    filters: Tensor4,
    in_range: Range,
    f_range: Range,
    lut: MultLut,
    cfg: ConvConfig,
    meter: Meter | None = None,
) -> Tensor4:
    """Reference nested-loop convolution; the bit-exact oracle for axconv2d.

    Deliberately scalar and single-threaded: every quantity is a plain
    Python integer until the final scaling.
    """
    meter = meter or Meter()
    _check_operands(inputs, filters)
    from .quantizer import compute_coeffs

    p1 = compute_coeffs(in_range, lut.mode, cfg.round_mode)
    p2 = compute_coeffs(f_range, lut.mode, cfg.round_mode)
    kh, kw, cin, cout = filters.shape
    n, oh, ow, _ = output_shape(inputs.shape, filters.shape, cfg.geometry)

    with meter.phase(PHASE_QUANT):
        icodes = quantize_values(inputs.data, p1)
        fcodes = quantize_values(filters.data, p2)

    pt, pb, pl, pr = resolve_padding(cfg.geometry, inputs.shape[1], inputs.shape[2], kh, kw)
    padded = np.pad(
        icodes, ((0, 0), (pt, pb), (pl, pr), (0, 0)), constant_values=p1.zero_point
    )
    sh, sw = cfg.geometry.strides
    dh, dw = cfg.geometry.dilations
    depth = kh * kw * cin

    entries = lut.entries.tolist()
    in_raw = padded.view(np.uint8).tolist()
    in_val = padded.astype(np.int64).tolist()
    fmat = fcodes.reshape(depth, cout)
    f_raw_cols = fmat.view(np.uint8).T.tolist()
    f_sums = [int(s) for s in fmat.astype(np.int64).sum(axis=0)]

    zp1, zp2 = p1.zero_point, p2.zero_point
    lut_sums = np.empty((n, oh, ow, cout), dtype=np.int64)
    patch_sums = np.empty((n, oh, ow), dtype=np.int64)
    with meter.phase(PHASE_LUT):
        for b in range(n):
            img_raw = in_raw[b]
            img_val = in_val[b]
            for r in range(oh):
                for q in range(ow):
                    window_raw = []
                    psum = 0
                    for y in range(kh):
                        row_raw = img_raw[r * sh + y * dh]
                        row_val = img_val[r * sh + y * dh]
                        for x in range(kw):
                            col = q * sw + x * dw
                            window_raw.extend(row_raw[col])
                            psum += sum(row_val[col])
                    patch_sums[b, r, q] = psum
                    for c in range(cout):
                        f_raw = f_raw_cols[c]
                        acc = 0
                        for k in range(depth):
                            acc += entries[(window_raw[k] << 8) | f_raw[k]]
                        lut_sums[b, r, q, c] = acc
    meter.add_macs(n * oh * ow * depth * cout)

    with meter.phase(PHASE_QUANT):
        acc = _emulate_accumulator(lut_sums, cfg.accumulator)
        corr = (
            acc
            - np.int64(zp2) * patch_sums[..., None]
            - np.int64(zp1) * np.asarray(f_sums, dtype=np.int64)
            + np.int64(depth) * np.int64(zp1) * np.int64(zp2)
        )
        scale = p1.scale * p2.scale
        out = (scale * corr).astype(np.float32)
    return Tensor4(out, Layout.NHWC)
