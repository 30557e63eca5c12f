"""Affine 8-bit quantization from the ground up.

Walks through coefficient computation from a value range, the zero-point
guarantee, the three rounding policies, and what the round trip costs.
"""

import numpy as np

from axemu import Range, RoundMode, Signedness, compute_coeffs, dequantize_values, quantize_values

# A tensor's range decides the scale: 256 code levels spread across it.
# The range is always widened to include 0 so that zero padding and zero
# activations are exactly representable.
rng = np.random.default_rng(0)
values = rng.normal(0.4, 1.0, 20_000)
observed = Range(float(values.min()), float(values.max()))
print(f"observed range: ({observed.min:+.3f}, {observed.max:+.3f})")

for mode in Signedness:
    p = compute_coeffs(observed, mode)
    print(f"\n{mode.value}: scale={p.scale:.6f} zero_point={p.zero_point}")

    codes = quantize_values(values, p)
    back = dequantize_values(codes, p)
    err = np.abs(back - values)
    print(f"  worst round-trip error  : {err.max():.6f} (half a step = {p.scale / 2:.6f})")
    print(f"  real 0.0 -> code {int(quantize_values(np.array([0.0]), p)[0])} -> "
          f"{dequantize_values(quantize_values(np.array([0.0]), p), p)[0]} exactly")

# Rounding policy only matters for values between grid points.
print("\nhow 2.5 scale-units round under each policy:")
p = compute_coeffs(Range(0.0, 25.5), Signedness.UNSIGNED)
for round_mode in RoundMode:
    p_r = compute_coeffs(Range(0.0, 25.5), Signedness.UNSIGNED, round_mode)
    code = int(quantize_values(np.array([2.5 * p.scale]), p_r)[0])
    print(f"  {round_mode.value:>22}: code {code}")

# Quantization is a projection: re-quantizing a dequantized tensor is a no-op.
p = compute_coeffs(Range(-1.0, 1.0), Signedness.SIGNED)
codes = np.arange(-128, 128, dtype=np.int8)
assert np.array_equal(quantize_values(dequantize_values(codes, p), p), codes)
print("\nall 256 codes survive dequantize -> quantize unchanged")
