"""Rewriting an inference graph to run on emulated approximate hardware.

Every accurate convolution becomes its approximate counterpart, fed by
Min and Max nodes so quantization ranges follow each batch. Filters are
constants, so their ranges fold at transform time. Everything else in the
graph is untouched.
"""

import numpy as np

from axemu import (
    Layout,
    NodeKind,
    Signedness,
    Tensor4,
    exact_lut,
    load_model,
    run,
    synthetic_cifar10,
    transform,
    truncated_lut,
)

g = load_model("assets/smallnet.json")
print("accurate graph:")
for node in g.nodes:
    print(f"  {node.id:<8} {node.kind.value:<8} <- {', '.join(node.inputs) or '-'}")

tg, report = transform(g, exact_lut(Signedness.SIGNED))
print(f"\nreplaced {report.replaced_count} conv layer(s), "
      f"inserted {report.inserted_min_max} range nodes; "
      f"untouched: {', '.join(report.untouched_kinds)}")
print("\ntransformed graph (conv sections only):")
for node in tg.nodes:
    if node.kind in (NodeKind.MIN, NodeKind.MAX, NodeKind.AXCONV2D):
        print(f"  {node.id:<15} {node.kind.value:<8} <- {', '.join(node.inputs)}")

# Ranges are recomputed once per batch by the inserted Min/Max nodes, so
# the transformed graph accepts any batch without calibration files.
images, labels = synthetic_cifar10(500, seed=42)
batch = Tensor4(images, Layout.NHWC)
accurate = run(g, batch).data.reshape(len(images), -1)
approx = run(tg, batch).data.reshape(len(images), -1)

agreement = (accurate.argmax(1) == approx.argmax(1)).mean()
drift = np.abs(accurate - approx).max()
print(f"\nexact-table emulation: top-1 agreement {agreement:.3f}, "
      f"worst probability drift {drift:.2e}")

# Swap in a rougher multiplier without touching the graph again.
tg6, _ = transform(g, truncated_lut(Signedness.SIGNED, 6))
rough = run(tg6, batch).data.reshape(len(images), -1)
print(f"truncated(6) multiplier:  top-1 agreement "
      f"{(accurate.argmax(1) == rough.argmax(1)).mean():.3f} "
      "(a bad circuit shows up immediately)")
