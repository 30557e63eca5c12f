"""Scoped wall-clock timers and MAC accounting shared by the engines.

Timers wrap whole chunk- or node-level sections, never per-element work,
so instrumentation overhead stays negligible.
"""

from __future__ import annotations

import time
from contextlib import contextmanager

PHASE_INIT = "init"
PHASE_LUT = "lut_lookup"
PHASE_QUANT = "quant_dequant_minmax"
PHASE_OTHER = "im2cols_gemm_other"

PHASES = (PHASE_LUT, PHASE_QUANT, PHASE_INIT, PHASE_OTHER)


class Meter:
    """Accumulates per-phase seconds, per-node seconds, and MAC counts."""

    def __init__(self) -> None:
        self.phase_seconds: dict[str, float] = {}
        self.node_seconds: dict[str, float] = {}
        self.mac_count: int = 0

    @contextmanager
    def phase(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            dt = time.perf_counter() - t0
            self.phase_seconds[name] = self.phase_seconds.get(name, 0.0) + dt

    @contextmanager
    def node(self, node_id: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            dt = time.perf_counter() - t0
            self.node_seconds[node_id] = self.node_seconds.get(node_id, 0.0) + dt

    def add_macs(self, n: int) -> None:
        self.mac_count += int(n)

    def reset(self) -> None:
        self.phase_seconds.clear()
        self.node_seconds.clear()
        self.mac_count = 0
