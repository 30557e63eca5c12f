"""Wall-clock benchmark harness.

Reports times as t_init + t_comp: t_init covers artifact loading,
allocation, and one warmup batch (JIT compilation lands there), t_comp the
steady-state processing of every batch. Scoped timers inside the engines
attribute t_comp to table lookups, quantize/dequantize/min-max work, and
the remaining image-to-columns/GEMM machinery.
"""

from __future__ import annotations

import time
from pathlib import Path

import numpy as np

from .formats import RunReport, load_cifar10, load_model, load_tensor, make_report
from .graph import LayerGraph, run
from .metering import PHASE_LUT, PHASE_QUANT, Meter
from .tensor import Layout, Tensor4


def _load_images(data, seed: int, needed: int) -> np.ndarray:
    if data is None:
        from .datasets import synthetic_cifar10

        images, _ = synthetic_cifar10(needed, seed)
        return images
    if isinstance(data, np.ndarray):
        return data
    path = Path(data)
    if path.suffix == ".axt":
        return load_tensor(path).data
    return load_cifar10(path).images.data


def run_benchmark(
    model: LayerGraph | str | Path,
    data: np.ndarray | str | Path | None = None,
    engine: str = "gemm",
    batches: int | None = None,
    batch_size: int = 1000,
    workers: int | None = None,
    chunk_size: int | None = None,
    seed: int = 0,
) -> tuple[RunReport, np.ndarray]:
    """Benchmark a model over the dataset; returns (report, concatenated outputs).

    The first batch is processed once as warmup inside t_init and again in
    the timed loop, so t_comp covers every batch of the dataset.
    """
    t0 = time.perf_counter()
    g = load_model(model) if isinstance(model, (str, Path)) else model
    images = _load_images(data, seed, batch_size * (batches or 1))

    n = images.shape[0]
    if n == 0:
        raise ValueError("no input images to benchmark")
    available = -(-n // batch_size)
    n_batches = available if batches is None else min(batches, available)
    slices = [
        images[i * batch_size : min((i + 1) * batch_size, n)] for i in range(n_batches)
    ]

    meter = Meter()
    run(g, Tensor4(slices[0], Layout.NHWC), engine,
        workers=workers, chunk_size=chunk_size, meter=meter)
    t_init = time.perf_counter() - t0

    meter.reset()
    outputs = []
    t1 = time.perf_counter()
    for batch in slices:
        out = run(g, Tensor4(batch, Layout.NHWC), engine,
                  workers=workers, chunk_size=chunk_size, meter=meter)
        outputs.append(out.data)
    t_comp = time.perf_counter() - t1

    report = make_report(
        t_init=t_init,
        t_comp=t_comp,
        lut_s=meter.phase_seconds.get(PHASE_LUT, 0.0),
        quant_s=meter.phase_seconds.get(PHASE_QUANT, 0.0),
        mac_count=meter.mac_count,
        per_layer=meter.node_seconds,
    )
    return report, np.concatenate(outputs, axis=0)


def speedup(baseline: RunReport, current: RunReport) -> float:
    """How many times faster the current run is than the baseline (total time)."""
    if current.total <= 0:
        raise ValueError("current run has no measured time")
    return baseline.total / current.total
