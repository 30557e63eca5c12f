"""8x8-bit multiplier models as 65,536-entry truth tables.

A multiplier is fully described by one 16-bit word per operand pair — the
whole table is 128 KiB and fits in cache, which is the entire trick. The
table index stitches the raw operand bytes together with the first operand
in the high byte; signed operands index through their two's-complement bit
pattern, so the table stays a pure bit-level truth table.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantizer import Signedness

LUT_ENTRIES = 256 * 256
LUT_TABLE_BYTES = LUT_ENTRIES * 2  # 128 KiB


@dataclass(frozen=True)
class MultLut:
    """Truth table of an (approximate) 8-bit multiplier with 16-bit outputs."""

    mode: Signedness
    entries: np.ndarray  # indexed by (a_byte << 8) | b_byte

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.entries)
        if arr.shape != (LUT_ENTRIES,):
            raise ValueError(f"truth table needs {LUT_ENTRIES} entries, got shape {arr.shape}")
        if arr.dtype != self.mode.entry_dtype:
            raise ValueError(
                f"entries dtype {arr.dtype} does not match mode {self.mode.value} "
                f"(expected {self.mode.entry_dtype})"
            )
        object.__setattr__(self, "entries", arr)

    @property
    def raw(self) -> np.ndarray:
        """Entries as raw 16-bit patterns (what goes on disk)."""
        return self.entries.view(np.uint16)


@dataclass(frozen=True)
class LutErrorStats:
    """Deviation of a table from exact multiplication over all operand pairs."""

    max_abs_error: int
    mean_abs_error: float
    mean_rel_error: float  # pairs with exact product 0 excluded
    error_count: int


def stitch_index(a: int, b: int) -> int:
    """16-bit table index: first operand's raw byte high, second low."""
    return ((a & 0xFF) << 8) | (b & 0xFF)


def lookup(lut: MultLut, a: int, b: int) -> int:
    """Product of two 8-bit codes per the table (interpreted per mode)."""
    return int(lut.entries[stitch_index(a, b)])


def _operand_values(mode: Signedness) -> np.ndarray:
    """Value of each raw byte 0..255 under the mode's interpretation."""
    vals = np.arange(LUT_ENTRIES // 256, dtype=np.int32)
    if mode is Signedness.SIGNED:
        vals = vals.astype(np.int8).astype(np.int32)
    return vals


def exact_products(mode: Signedness) -> np.ndarray:
    """True products for every stitched operand pair, as int32."""
    vals = _operand_values(mode)
    return np.multiply.outer(vals, vals).ravel()


def exact_lut(mode: Signedness) -> MultLut:
    """Table of an exact multiplier (the accurate baseline)."""
    return MultLut(mode, exact_products(mode).astype(mode.entry_dtype))


def truncated_lut(mode: Signedness, drop_bits: int) -> MultLut:
    """Multiplier that zeroes the drop_bits low bits of each operand's magnitude.

    A representative approximate family: drop_bits=0 is exact, larger values
    trade accuracy for (hardware) area.
    """
    if not 0 <= drop_bits <= 7:
        raise ValueError(f"drop_bits must be in 0..7, got {drop_bits}")
    mask = (0xFF << drop_bits) & 0xFF
    vals = _operand_values(mode)
    masked = np.sign(vals) * (np.abs(vals) & mask)
    return MultLut(mode, np.multiply.outer(masked, masked).ravel().astype(mode.entry_dtype))


def error_stats(lut: MultLut) -> LutErrorStats:
    """Exhaustive error statistics of a table against exact multiplication."""
    exact = exact_products(lut.mode)
    got = lut.entries.astype(np.int32)
    diff = np.abs(got - exact)
    nonzero = exact != 0
    rel = diff[nonzero] / np.abs(exact[nonzero])
    return LutErrorStats(
        max_abs_error=int(diff.max()),
        mean_abs_error=float(diff.mean()),
        mean_rel_error=float(rel.mean()) if nonzero.any() else 0.0,
        error_count=int(np.count_nonzero(diff)),
    )
