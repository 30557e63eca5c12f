"""The two convolution engines and why they agree bit for bit.

The reference engine is a plain nested loop. The production engine
rewrites each batch chunk as a patch matrix, multiplies it against the
quantized filters with the inner multiply replaced by a table lookup, and
removes the zero-point bias afterwards using precomputed integer sums.
Because every reduction is an integer sum, chunking, tiling, and worker
count cannot change a single bit of the output.
"""

import time

import numpy as np

from axemu import (
    ConvConfig,
    ConvGeometry,
    Layout,
    Meter,
    Range,
    Signedness,
    Tensor4,
    axconv2d,
    direct_conv,
    exact_lut,
    float_conv2d,
    truncated_lut,
)

rng = np.random.default_rng(0)
x = Tensor4(rng.uniform(-1, 1, (8, 16, 16, 3)).astype(np.float32))
f = Tensor4(rng.normal(0, 0.4, (3, 3, 3, 8)).astype(np.float32), Layout.HWCN)
in_range, f_range = Range(-1, 1), Range(-1.5, 1.5)
geometry = ConvGeometry(strides=(1, 1), padding="same")

# 1. Oracle equivalence: the pipeline reproduces the nested loops exactly.
lut = exact_lut(Signedness.SIGNED)
cfg = ConvConfig(geometry=geometry)
t0 = time.perf_counter()
ref = direct_conv(x, f, in_range, f_range, lut, cfg)
t_direct = time.perf_counter() - t0
out = axconv2d(x, f, in_range, f_range, lut, cfg)  # includes JIT warmup
t0 = time.perf_counter()
out = axconv2d(x, f, in_range, f_range, lut, cfg)
t_gemm = time.perf_counter() - t0
same = np.array_equal(ref.data.view(np.uint32), out.data.view(np.uint32))
print(f"direct {t_direct * 1e3:7.1f} ms | gemm {t_gemm * 1e3:6.1f} ms | "
      f"bit-identical: {same}")

# 2. Chunking and worker count are free parameters, not semantics.
variants = [
    axconv2d(x, f, in_range, f_range, lut,
             ConvConfig(geometry=geometry, chunk_size=c, workers=w))
    for c, w in [(1, 1), (3, 2), (None, 8)]
]
print("chunk/worker sweeps identical:",
      all(np.array_equal(out.data, v.data) for v in variants))

# 3. With an exact table, the only deviation from float convolution is
#    quantization noise — bounded by half a step per operand.
accurate = float_conv2d(x.data, f.data, geometry)
err = np.abs(out.data - accurate).max() / np.abs(accurate).max()
print(f"exact-table vs float32 convolution: worst relative error {err:.2e}")

# 4. An approximate multiplier trades that error for hardware cost.
for drop in (2, 4, 6):
    ax = axconv2d(x, f, in_range, f_range,
                  truncated_lut(Signedness.SIGNED, drop), cfg)
    err = np.abs(ax.data - accurate).max() / np.abs(accurate).max()
    print(f"truncated(drop_bits={drop}): worst relative error {err:.2e}")

# 5. The engine accounts its multiply-accumulate work.
meter = Meter()
axconv2d(x, f, in_range, f_range, lut, cfg, meter)
print(f"MACs for this layer: {meter.mac_count:,} "
      f"(= 8 images x 16x16 positions x 27-tap patches x 8 filters)")
