"""Benchmarking emulated inference: t_init + t_comp and where time goes.

t_init covers loading, allocation, and one warmup batch (JIT compilation
included); t_comp is the steady-state processing of every batch. Scoped
timers split t_comp into table lookups, quantize/dequantize/min-max work,
and the remaining patch/GEMM machinery. Compute time should scale
linearly with the multiply-accumulate count.
"""

import tempfile
from pathlib import Path

import numpy as np

from axemu import (
    LayerGraph,
    Node,
    NodeKind,
    Signedness,
    exact_lut,
    report_csv,
    run_benchmark,
    save_model,
    transform,
    write_synthetic_cifar10,
)
from axemu.metering import PHASES


def one_conv_model(cout: int, seed: int = 0) -> LayerGraph:
    rng = np.random.default_rng(seed)
    filters = rng.normal(0, 0.5, (3, 3, 3, cout)).astype(np.float32)
    return LayerGraph([
        Node("in", NodeKind.INPUT, [], {"shape": (32, 32, 3)}),
        Node("conv", NodeKind.CONV2D, ["in"],
             {"filters": filters, "strides": (1, 1), "dilations": (1, 1),
              "padding": "same"}),
    ])


with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    data = write_synthetic_cifar10(tmp / "images.bin", 1000, seed=0)
    lut = exact_lut(Signedness.SIGNED)

    print(f"{'model':>10} {'MACs':>12} {'t_init':>8} {'t_comp':>8}")
    macs, times, report = [], [], None
    for cout in (8, 16, 32):
        g, _ = transform(one_conv_model(cout, seed=cout), lut)
        path = tmp / f"conv{cout}.json"
        save_model(g, path)
        report, _ = run_benchmark(path, data, batch_size=250)
        macs.append(report.mac_count)
        times.append(report.t_comp)
        print(f"{f'conv-{cout}':>10} {report.mac_count:>12,} "
              f"{report.t_init:>8.3f} {report.t_comp:>8.3f}")

    a, b = np.polyfit(macs, times, 1)
    fit = a * np.asarray(macs) + b
    r2 = 1 - ((np.asarray(times) - fit) ** 2).sum() / ((times - np.mean(times)) ** 2).sum()
    print(f"\nt_comp vs MACs: {a * 1e9:.3f} ns/MAC + {b * 1e3:.1f} ms fixed "
          f"(R^2 = {r2:.4f})")

    print("\nphase breakdown of the largest run:")
    pct = report.phase_percentages()
    for name in PHASES:
        print(f"  {name:<22} {report.phase_seconds[name]:>7.3f} s  {pct[name]:>5.1f}%")

    csv_path = tmp / "report.csv"
    csv_path.write_text(report_csv(report))
    print(f"\nCSV export for plotting:\n{report_csv(report).splitlines()[0]}")
    print(f"... ({len(report_csv(report).splitlines())} rows)")
