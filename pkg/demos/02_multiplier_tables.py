"""Multipliers as 128 KiB truth tables.

An 8x8-bit multiplier is fully described by one 16-bit word per operand
pair. Any circuit — exact or approximate — becomes a flat array the
convolution engine can index, so swapping multiplier designs never touches
the compute code.
"""

import tempfile
from pathlib import Path

from axemu import (
    Signedness,
    error_stats,
    exact_lut,
    load_lut,
    lookup,
    save_lut,
    stitch_index,
    truncated_lut,
)

# The table index stitches the raw operand bytes: first operand high byte.
# Signed operands index through their two's-complement bit pattern.
print(f"stitch_index(0x03, 0x05) = {stitch_index(0x03, 0x05):#06x}")
print(f"stitch_index(-1,   0x02) = {stitch_index(-1, 0x02):#06x}  (-1 is byte 0xFF)")

exact = exact_lut(Signedness.SIGNED)
print(f"\nexact signed table: (-128)*(-128) -> {lookup(exact, -128, -128)}")
print(f"                    (-128)*( 127) -> {lookup(exact, -128, 127)}")

# A family of deliberately simplified multipliers: zero the low bits of
# each operand's magnitude before multiplying exactly.
print("\ntruncated multipliers vs exact, exhaustive over all 65,536 pairs:")
print(f"{'drop_bits':>9} {'max_abs':>8} {'mean_abs':>9} {'mean_rel':>9} {'wrong':>6}")
for drop in range(0, 8, 2):
    stats = error_stats(truncated_lut(Signedness.SIGNED, drop))
    print(f"{drop:>9} {stats.max_abs_error:>8} {stats.mean_abs_error:>9.2f} "
          f"{stats.mean_rel_error:>9.4f} {stats.error_count:>6}")

# Tables round-trip through a small headered file format; headerless
# 131,072-byte dumps from circuit tools import with an explicit mode.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "mul8s_drop3.axm"
    save_lut(truncated_lut(Signedness.SIGNED, 3), path)
    print(f"\nwrote {path.name}: {path.stat().st_size} bytes (16-byte header + 128 KiB)")
    again = load_lut(path)
    print(f"reloaded mode={again.mode.value}, "
          f"entries identical: {(again.entries == truncated_lut(Signedness.SIGNED, 3).entries).all()}")
