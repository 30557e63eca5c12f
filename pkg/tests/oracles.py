"""Independent reference implementations used as test oracles.

Everything here is deliberately written as plain loops or direct formula
evaluation, separate from the library's production code paths.
"""

from __future__ import annotations

import numpy as np


def ref_conv2d_f64(x, filters, strides=(1, 1), dilations=(1, 1), pad=(0, 0, 0, 0)):
    """Nested-loop float64 convolution with explicit padding."""
    x = np.asarray(x, dtype=np.float64)
    filters = np.asarray(filters, dtype=np.float64)
    n, h, w, c = x.shape
    kh, kw, cin, cout = filters.shape
    assert cin == c
    pt, pb, pl, pr = pad
    sh, sw = strides
    dh, dw = dilations
    padded = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
    dkh = (kh - 1) * dh + 1
    dkw = (kw - 1) * dw + 1
    oh = (h + pt + pb - dkh) // sh + 1
    ow = (w + pl + pr - dkw) // sw + 1
    out = np.zeros((n, oh, ow, cout))
    for b in range(n):
        for oy in range(oh):
            for ox in range(ow):
                win = padded[
                    b,
                    oy * sh : oy * sh + dkh : dh,
                    ox * sw : ox * sw + dkw : dw,
                    :,
                ]
                for co in range(cout):
                    out[b, oy, ox, co] = float((win * filters[:, :, :, co]).sum())
    return out


def scan_min_max(values) -> tuple[float, float]:
    """Sequential scan over the flattened values."""
    flat = np.asarray(values).ravel()
    mn = mx = float(flat[0])
    for v in flat[1:]:
        v = float(v)
        if v < mn:
            mn = v
        if v > mx:
            mx = v
    return mn, mx


def row_sums(matrix) -> list[int]:
    """Per-row integer re-summation."""
    out = []
    for row in np.asarray(matrix):
        s = 0
        for v in row:
            s += int(v)
        out.append(s)
    return out


def scan_lut_errors(entries, signed: bool):
    """Exhaustive 65,536-pair comparison against true products.

    Returns (max_abs, sum_abs, rel_sum, rel_n, mismatches).
    """
    max_abs = 0
    sum_abs = 0
    rel_sum = 0.0
    rel_n = 0
    mismatches = 0
    for a_byte in range(256):
        a = a_byte - 256 if (signed and a_byte >= 128) else a_byte
        for b_byte in range(256):
            b = b_byte - 256 if (signed and b_byte >= 128) else b_byte
            true = a * b
            got = int(entries[(a_byte << 8) | b_byte])
            err = abs(got - true)
            if err:
                mismatches += 1
            sum_abs += err
            if err > max_abs:
                max_abs = err
            if true != 0:
                rel_sum += err / abs(true)
                rel_n += 1
    return max_abs, sum_abs, rel_sum, rel_n, mismatches


def rel_err(got, want) -> float:
    """Max absolute difference normalized by the reference magnitude."""
    got = np.asarray(got, dtype=np.float64)
    want = np.asarray(want, dtype=np.float64)
    denom = max(float(np.abs(want).max(initial=0.0)), 1e-30)
    return float(np.abs(got - want).max(initial=0.0)) / denom


def quant_conv_error_bound(x, filters, scale1, scale2, strides, dilations, pad):
    """First-order per-element bound on |float conv - quantized conv|.

    Per tap |i*f - i_q*f_q| <= |f|*scale1/2 + |i|*scale2/2 + scale1*scale2/4,
    summed over the receptive field via an all-ones reference convolution.
    """
    kh, kw, cin, cout = filters.shape
    depth = kh * kw * cin
    abs_f_sum = np.abs(filters).sum(axis=(0, 1, 2))  # per output channel
    ones = np.ones((kh, kw, cin, 1))
    abs_x_sum = ref_conv2d_f64(np.abs(x), ones, strides, dilations, pad)[..., 0]
    bound = (
        scale1 / 2 * abs_f_sum[None, None, None, :]
        + scale2 / 2 * abs_x_sum[..., None]
        + depth * scale1 * scale2 / 4
    )
    return bound
