"""All persistence: truth-table files, raw tensors, models, CIFAR-10, reports.

Every multi-byte on-disk value is little-endian. Loaders reject wrong
magic or sizes with diagnostics that name the expected and actual byte
counts.

Truth-table file (.axm, 131,088 bytes):
    magic "AXM1" | mode byte (0=unsigned, 1=signed) | operand-order byte
    (0 = first operand in the high index byte) | 10 reserved zero bytes |
    65,536 x uint16 entries. A headerless 131,072-byte raw import is also
    supported for tables exported by circuit tools (mode supplied by the
    caller).

Tensor file (.axt, 24-byte header):
    magic "AXT1" | layout byte (0=NHWC, 1=HWCN) | 3 reserved zero bytes |
    4 x uint32 extents | float32 values in layout order.

Model: a JSON document holding nodes, kinds, attributes, and weight-blob
element offsets into a float32 sidecar; truth tables are referenced by
path. Reports: JSON plus a CSV export for plotting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .axmult import LUT_ENTRIES, LUT_TABLE_BYTES, MultLut
from .graph import LayerGraph, Node, NodeKind
from .metering import PHASE_INIT, PHASES
from .quantizer import Signedness
from .tensor import Layout, Tensor4

LUT_MAGIC = b"AXM1"
LUT_HEADER_BYTES = 16
LUT_FILE_BYTES = LUT_HEADER_BYTES + LUT_TABLE_BYTES  # 131,088

TENSOR_MAGIC = b"AXT1"
TENSOR_HEADER_BYTES = 24

CIFAR_RECORD_BYTES = 3073  # 1 label byte + 32*32*3 pixel bytes
CIFAR_MAX_RECORDS = 10_000

MODEL_FORMAT = "axemu-model"


class FormatError(ValueError):
    """A file failed structural validation."""


# ---------------------------------------------------------------------------
# truth-table files


def save_lut(lut: MultLut, path: str | Path) -> None:
    mode_byte = 0 if lut.mode is Signedness.UNSIGNED else 1
    header = LUT_MAGIC + bytes([mode_byte, 0]) + bytes(10)
    Path(path).write_bytes(header + lut.raw.astype("<u2").tobytes())


def load_lut(path: str | Path, mode: Signedness | None = None, raw: bool = False) -> MultLut:
    """Load a headered table, or a raw 128 KiB table when raw=True (mode required)."""
    blob = Path(path).read_bytes()
    if raw:
        if mode is None:
            raise ValueError("raw truth-table import needs an explicit mode")
        if len(blob) != LUT_TABLE_BYTES:
            raise FormatError(
                f"raw truth table must be {LUT_TABLE_BYTES} bytes, got {len(blob)}"
            )
        entries = np.frombuffer(blob, dtype="<u2")
    else:
        if len(blob) != LUT_FILE_BYTES:
            raise FormatError(
                f"truth-table file must be {LUT_FILE_BYTES} bytes, got {len(blob)}"
            )
        if blob[:4] != LUT_MAGIC:
            raise FormatError(f"bad magic {blob[:4]!r}, expected {LUT_MAGIC!r}")
        if blob[4] not in (0, 1):
            raise FormatError(f"unknown mode byte {blob[4]}")
        if blob[5] != 0:
            raise FormatError(f"unsupported operand-order byte {blob[5]}")
        file_mode = Signedness.UNSIGNED if blob[4] == 0 else Signedness.SIGNED
        if mode is not None and mode is not file_mode:
            raise FormatError(
                f"file declares {file_mode.value} but {mode.value} was requested"
            )
        mode = file_mode
        entries = np.frombuffer(blob, dtype="<u2", offset=LUT_HEADER_BYTES)
    assert len(entries) == LUT_ENTRIES
    return MultLut(mode, entries.copy().view(mode.entry_dtype))


# ---------------------------------------------------------------------------
# tensor files


def save_tensor(t: Tensor4, path: str | Path) -> None:
    layout_byte = 0 if t.layout is Layout.NHWC else 1
    header = TENSOR_MAGIC + bytes([layout_byte]) + bytes(3)
    header += np.asarray(t.shape, dtype="<u4").tobytes()
    Path(path).write_bytes(header + t.data.astype("<f4").tobytes())


def load_tensor(path: str | Path) -> Tensor4:
    blob = Path(path).read_bytes()
    if len(blob) < TENSOR_HEADER_BYTES:
        raise FormatError(
            f"tensor file needs at least {TENSOR_HEADER_BYTES} header bytes, got {len(blob)}"
        )
    if blob[:4] != TENSOR_MAGIC:
        raise FormatError(f"bad magic {blob[:4]!r}, expected {TENSOR_MAGIC!r}")
    if blob[4] not in (0, 1):
        raise FormatError(f"unknown layout byte {blob[4]}")
    layout = Layout.NHWC if blob[4] == 0 else Layout.HWCN
    shape = tuple(int(v) for v in np.frombuffer(blob, dtype="<u4", offset=8, count=4))
    expected = TENSOR_HEADER_BYTES + 4 * int(np.prod(shape))
    if len(blob) != expected:
        raise FormatError(
            f"tensor file for shape {shape} must be {expected} bytes, got {len(blob)}"
        )
    data = np.frombuffer(blob, dtype="<f4", offset=TENSOR_HEADER_BYTES).copy()
    return Tensor4(data.reshape(shape), layout)


# ---------------------------------------------------------------------------
# CIFAR-10 binary batches


@dataclass(frozen=True)
class Cifar10Batch:
    images: Tensor4  # (n, 32, 32, 3), values in [0, 1]
    labels: np.ndarray  # n labels in [0, 9]


def load_cifar10(path: str | Path) -> Cifar10Batch:
    """Decode the standard CIFAR-10 binary layout into NHWC floats in [0, 1]."""
    blob = Path(path).read_bytes()
    if len(blob) == 0 or len(blob) % CIFAR_RECORD_BYTES != 0:
        raise FormatError(
            f"CIFAR-10 file size must be a positive multiple of {CIFAR_RECORD_BYTES}, "
            f"got {len(blob)}"
        )
    n = len(blob) // CIFAR_RECORD_BYTES
    if n > CIFAR_MAX_RECORDS:
        raise FormatError(f"CIFAR-10 batch holds at most {CIFAR_MAX_RECORDS} records, got {n}")
    records = np.frombuffer(blob, dtype=np.uint8).reshape(n, CIFAR_RECORD_BYTES)
    labels = records[:, 0].copy()
    if labels.max(initial=0) > 9:
        raise FormatError(f"label byte {labels.max()} outside 0..9")
    # channel-planar (R plane, G plane, B plane) -> NHWC
    pixels = records[:, 1:].reshape(n, 3, 32, 32).transpose(0, 2, 3, 1)
    images = pixels.astype(np.float32) / 255.0
    return Cifar10Batch(Tensor4(images, Layout.NHWC), labels)


def save_cifar10(path: str | Path, images: np.ndarray, labels: np.ndarray) -> None:
    """Encode [0, 1] NHWC images back into the CIFAR-10 binary record layout."""
    n = images.shape[0]
    if images.shape != (n, 32, 32, 3):
        raise ValueError(f"images must be (n, 32, 32, 3), got {images.shape}")
    if n > CIFAR_MAX_RECORDS:
        raise ValueError(f"at most {CIFAR_MAX_RECORDS} records per file, got {n}")
    pixel_bytes = np.clip(np.rint(images * 255.0), 0, 255).astype(np.uint8)
    planar = pixel_bytes.transpose(0, 3, 1, 2).reshape(n, 3072)
    records = np.empty((n, CIFAR_RECORD_BYTES), dtype=np.uint8)
    records[:, 0] = np.asarray(labels, dtype=np.uint8)
    records[:, 1:] = planar
    Path(path).write_bytes(records.tobytes())


# ---------------------------------------------------------------------------
# run reports


@dataclass
class RunReport:
    """Benchmark outcome: one-time setup vs steady-state time plus accounting."""

    t_init: float = 0.0
    t_comp: float = 0.0
    phase_seconds: dict = field(default_factory=dict)
    mac_count: int = 0
    per_layer: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.t_init + self.t_comp

    def phase_percentages(self) -> dict:
        if self.total <= 0:
            return {name: 0.0 for name in self.phase_seconds}
        return {
            name: 100.0 * seconds / self.total
            for name, seconds in self.phase_seconds.items()
        }


def make_report(
    t_init: float, t_comp: float, lut_s: float, quant_s: float,
    mac_count: int, per_layer: dict,
) -> RunReport:
    """Assemble a report whose phases partition t_init + t_comp exactly."""
    other = max(0.0, t_comp - lut_s - quant_s)
    phases = {
        "lut_lookup": lut_s,
        "quant_dequant_minmax": quant_s,
        PHASE_INIT: t_init,
        "im2cols_gemm_other": other,
    }
    return RunReport(t_init, t_comp, phases, mac_count, dict(per_layer))


def save_report(report: RunReport, path: str | Path) -> None:
    pct = report.phase_percentages()
    doc = {
        "t_init": report.t_init,
        "t_comp": report.t_comp,
        "total": report.total,
        "phases": {
            name: {"seconds": s, "percent": pct.get(name, 0.0)}
            for name, s in report.phase_seconds.items()
        },
        "mac_count": report.mac_count,
        "per_layer": report.per_layer,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_report(path: str | Path) -> RunReport:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise FormatError(f"malformed report document: {e}") from e
    try:
        return RunReport(
            t_init=float(doc["t_init"]),
            t_comp=float(doc["t_comp"]),
            phase_seconds={k: float(v["seconds"]) for k, v in doc["phases"].items()},
            mac_count=int(doc["mac_count"]),
            per_layer={k: float(v) for k, v in doc["per_layer"].items()},
        )
    except (KeyError, TypeError) as e:
        raise FormatError(f"report document missing field: {e}") from e


def report_csv(report: RunReport) -> str:
    """Comma-separated phase/timing table for plotting."""
    pct = report.phase_percentages()
    lines = ["name,seconds,percent"]
    for name in PHASES:
        if name in report.phase_seconds:
            lines.append(f"{name},{report.phase_seconds[name]!r},{pct[name]!r}")
    lines.append(f"t_init,{report.t_init!r},")
    lines.append(f"t_comp,{report.t_comp!r},")
    lines.append(f"total,{report.total!r},100.0")
    lines.append(f"mac_count,{report.mac_count},")
    for layer, seconds in report.per_layer.items():
        lines.append(f"layer:{layer},{seconds!r},")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# model files


def _encode_attr(value, blobs: list, luts: list):
    if isinstance(value, np.ndarray):
        offset = sum(b.size for b in blobs)
        blobs.append(np.ascontiguousarray(value, dtype=np.float32))
        return {"__blob__": {"offset": offset, "shape": list(value.shape)}}
    if isinstance(value, MultLut):
        for i, existing in enumerate(luts):
            if existing is value:
                return {"__lut__": i}
        luts.append(value)
        return {"__lut__": len(luts) - 1}
    if isinstance(value, tuple):
        return list(value)
    return value


def _decode_attr(value, weights: np.ndarray, luts: list):
    if isinstance(value, dict) and "__blob__" in value:
        ref = value["__blob__"]
        shape = tuple(ref["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = int(ref["offset"])
        return weights[start : start + count].reshape(shape).copy()
    if isinstance(value, dict) and "__lut__" in value:
        return luts[int(value["__lut__"])]
    return value


def save_model(g: LayerGraph, path: str | Path, lut_path: str | Path | None = None) -> None:
    """Write model JSON plus a float32 weight sidecar next to it.

    Truth tables referenced by AxConv2D nodes are written to (or pointed at)
    sibling .axm files; paths in the document are relative to the model file.
    """
    path = Path(path)
    blobs: list[np.ndarray] = []
    luts: list[MultLut] = []
    nodes_doc = []
    for node in g.nodes:
        attrs_doc = {k: _encode_attr(v, blobs, luts) for k, v in node.attrs.items()}
        nodes_doc.append(
            {"id": node.id, "kind": node.kind.value, "inputs": list(node.inputs),
             "attrs": attrs_doc}
        )

    lut_names = []
    for i, lut in enumerate(luts):
        if lut_path is not None and i == 0:
            name = str(lut_path)
        else:
            name = path.stem + (f".{i}" if i else "") + ".axm"
            save_lut(lut, path.parent / name)
        lut_names.append(name)

    weights_name = path.stem + ".weights.bin"
    doc = {
        "format": MODEL_FORMAT,
        "version": 1,
        "weights_file": weights_name,
        "luts": lut_names,
        "nodes": nodes_doc,
    }
    blob = (
        np.concatenate([b.ravel() for b in blobs])
        if blobs
        else np.empty(0, dtype=np.float32)
    )
    (path.parent / weights_name).write_bytes(blob.astype("<f4").tobytes())
    path.write_text(json.dumps(doc, indent=1) + "\n")


def load_model(path: str | Path) -> LayerGraph:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise FormatError(f"malformed model document: {e}") from e
    if doc.get("format") != MODEL_FORMAT:
        raise FormatError(f"not a model file (format={doc.get('format')!r})")
    weights = np.frombuffer(
        (path.parent / doc["weights_file"]).read_bytes(), dtype="<f4"
    )
    luts = [load_lut(path.parent / name) for name in doc.get("luts", [])]
    kinds = {k.value: k for k in NodeKind}
    nodes = []
    for nd in doc["nodes"]:
        if nd["kind"] not in kinds:
            raise FormatError(f"unknown node kind {nd['kind']!r} in {nd['id']!r}")
        attrs = {k: _decode_attr(v, weights, luts) for k, v in nd["attrs"].items()}
        nodes.append(Node(nd["id"], kinds[nd["kind"]], list(nd["inputs"]), attrs))
    return LayerGraph(nodes)
