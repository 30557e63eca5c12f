"""Minimal inference graph and the accurate-to-approximate rewrite pass.

A graph is a topologically ordered list of nodes (every node's inputs come
earlier in the list). The transform pass replaces each accurate Conv2D by
its LUT-backed approximate counterpart and inserts Min and Max nodes over
the convolution's data input, so quantization ranges are recomputed once
per batch at run time; filter ranges are folded to constants because the
filters themselves are constants.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .axconv import Accumulator, ConvConfig, axconv2d, conv_mac_count, direct_conv
from .axmult import MultLut
from .metering import PHASE_QUANT, Meter
from .quantizer import RoundMode
from .tensor import ConvGeometry, Layout, Range, Tensor4, output_shape, resolve_padding


class NodeKind(enum.Enum):
    INPUT = "Input"
    CONV2D = "Conv2D"
    AXCONV2D = "AxConv2D"
    MIN = "Min"
    MAX = "Max"
    RELU = "ReLU"
    MAXPOOL = "MaxPool"
    AVGPOOL = "AvgPool"
    ADD = "Add"
    DENSE = "Dense"
    FLATTEN = "Flatten"
    SOFTMAX = "Softmax"


@dataclass
class Node:
    id: str
    kind: NodeKind
    inputs: list[str] = field(default_factory=list)
    attrs: dict = field(default_factory=dict)


@dataclass
class LayerGraph:
    nodes: list[Node]

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        seen: set[str] = set()
        for node in self.nodes:
            if not node.id:
                raise ValueError("node id must be non-empty")
            if node.id in seen:
                raise ValueError(f"duplicate node id {node.id!r}")
            if not isinstance(node.kind, NodeKind):
                raise ValueError(f"unknown node kind {node.kind!r}")
            for ref in node.inputs:
                if ref not in seen:
                    raise ValueError(
                        f"node {node.id!r} references {ref!r} which does not precede it"
                    )
            if node.kind is NodeKind.CONV2D:
                if not isinstance(node.attrs.get("filters"), np.ndarray):
                    raise ValueError(f"Conv2D node {node.id!r} has no constant filters")
            if node.kind is NodeKind.DENSE:
                if not isinstance(node.attrs.get("weights"), np.ndarray):
                    raise ValueError(f"Dense node {node.id!r} has no constant weights")
            if node.kind is NodeKind.AXCONV2D:
                if len(node.inputs) != 3:
                    raise ValueError(
                        f"AxConv2D node {node.id!r} needs data, min, and max inputs"
                    )
                for key in ("filters", "lut", "f_min", "f_max"):
                    if key not in node.attrs:
                        raise ValueError(f"AxConv2D node {node.id!r} missing {key!r}")
            seen.add(node.id)

    def node_map(self) -> dict[str, Node]:
        return {n.id: n for n in self.nodes}


@dataclass(frozen=True)
class TransformReport:
    replaced_count: int
    inserted_min_max: int
    untouched_kinds: list[str]


def _geometry_of(attrs: dict) -> ConvGeometry:
    padding = attrs.get("padding", "valid")
    if isinstance(padding, list):
        padding = tuple(padding)
    return ConvGeometry(
        strides=tuple(attrs.get("strides", (1, 1))),
        dilations=tuple(attrs.get("dilations", (1, 1))),
        padding=padding,
    )


def transform(g: LayerGraph, lut: MultLut) -> tuple[LayerGraph, TransformReport]:
    """Replace every Conv2D by AxConv2D fed by fresh batch Min/Max range nodes."""
    existing = {n.id for n in g.nodes}
    new_nodes: list[Node] = []
    replaced = 0
    untouched: set[str] = set()
    for node in g.nodes:
        if node.kind is not NodeKind.CONV2D:
            untouched.add(node.kind.value)
            new_nodes.append(node)
            continue
        filters = node.attrs.get("filters")
        if not isinstance(filters, np.ndarray):
            raise ValueError(f"Conv2D node {node.id!r} has non-constant filters")
        data_id = node.inputs[0]
        min_id, max_id = f"{node.id}.in_min", f"{node.id}.in_max"
        if min_id in existing or max_id in existing:
            raise ValueError(f"range node ids for {node.id!r} already taken")
        existing.update((min_id, max_id))
        new_nodes.append(Node(min_id, NodeKind.MIN, [data_id]))
        new_nodes.append(Node(max_id, NodeKind.MAX, [data_id]))
        attrs = dict(node.attrs)
        attrs["f_min"] = float(filters.min())
        attrs["f_max"] = float(filters.max())
        attrs["lut"] = lut
        new_nodes.append(
            Node(node.id, NodeKind.AXCONV2D, [data_id, min_id, max_id], attrs)
        )
        replaced += 1
    report = TransformReport(
        replaced_count=replaced,
        inserted_min_max=2 * replaced,
        untouched_kinds=sorted(untouched),
    )
    return LayerGraph(new_nodes), report


def _gather_windows(x: np.ndarray, geometry: ConvGeometry, kh: int, kw: int, fill: float):
    """(n, oh, ow, kh, kw, c) view of all receptive fields, padded with fill."""
    n, h, w, c = x.shape
    pt, pb, pl, pr = resolve_padding(geometry, h, w, kh, kw)
    padded = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)), constant_values=fill)
    sh, sw = geometry.strides
    dh, dw = geometry.dilations
    _, oh, ow, _ = output_shape((n, h, w, c), (kh, kw, c, 1), geometry)
    hh = np.arange(oh)[:, None] * sh + np.arange(kh)[None, :] * dh
    ww = np.arange(ow)[:, None] * sw + np.arange(kw)[None, :] * dw
    return padded[:, hh[:, None, :, None], ww[None, :, None, :], :]


def float_conv2d(
    x: np.ndarray,
    filters: np.ndarray,
    geometry: ConvGeometry,
    bias: np.ndarray | None = None,
    chunk_images: int = 64,
) -> np.ndarray:
    """Accurate float32 convolution (im2col + matmul), chunked over the batch."""
    kh, kw, cin, cout = filters.shape
    n = x.shape[0]
    fmat = filters.reshape(kh * kw * cin, cout)
    pieces = []
    for start in range(0, max(n, 1), chunk_images):
        stop = min(start + chunk_images, n)
        win = _gather_windows(x[start:stop], geometry, kh, kw, 0.0)
        rows = win.reshape(stop - start, -1, kh * kw * cin)
        pieces.append(rows @ fmat)
    out = np.concatenate(pieces, axis=0)
    _, oh, ow, _ = output_shape(x.shape, filters.shape, geometry)
    out = out.reshape(n, oh, ow, cout)
    if bias is not None:
        out = out + bias.astype(np.float32)
    return out.astype(np.float32)


def _pool2d(x: np.ndarray, attrs: dict, take_max: bool) -> np.ndarray:
    ph, pw = tuple(attrs.get("pool", (2, 2)))
    geometry = ConvGeometry(
        strides=tuple(attrs.get("strides", (ph, pw))),
        dilations=(1, 1),
        padding=attrs.get("padding", "valid"),
    )
    if take_max:
        win = _gather_windows(x, geometry, ph, pw, -np.inf)
        return win.max(axis=(3, 4)).astype(np.float32)
    # average over the taps that fall inside the image (padding excluded)
    win = _gather_windows(x, geometry, ph, pw, np.nan)
    n, h, w, _ = x.shape
    ones = np.ones((1, h, w, 1), dtype=np.float32)
    counts = _gather_windows(ones, geometry, ph, pw, np.nan)
    valid = np.isfinite(counts).sum(axis=(3, 4))
    total = np.nansum(win, axis=(3, 4))
    return (total / valid).astype(np.float32)


def run(
    g: LayerGraph,
    batch: Tensor4,
    engine: str = "gemm",
    *,
    workers: int | None = None,
    chunk_size: int | None = None,
    accumulator: Accumulator = Accumulator.EXACT64,
    round_mode: RoundMode = RoundMode.HALF_AWAY_FROM_ZERO,
    meter: Meter | None = None,
    trace: dict | None = None,
) -> Tensor4:
    """Evaluate the graph on a batch; returns the last node's output.

    engine selects the implementation behind AxConv2D nodes: "gemm" (the
    chunked pipeline) or "direct" (the reference loops). 2D results (e.g.
    logits after Dense) come back as (n, 1, 1, units). Passing a dict as
    trace captures every node's output by id.
    """
    if engine not in ("gemm", "direct"):
        raise ValueError(f"engine must be 'gemm' or 'direct', got {engine!r}")
    if batch.layout is not Layout.NHWC:
        raise ValueError("batch must be NHWC")
    meter = meter or Meter()
    conv_fn = axconv2d if engine == "gemm" else direct_conv

    values: dict[str, object] = {}
    out = None
    for node in g.nodes:
        with meter.node(node.id):
            ins = [values[i] for i in node.inputs]
            kind = node.kind
            if kind is NodeKind.INPUT:
                want = node.attrs.get("shape")
                if want is not None and tuple(want) != batch.shape[1:]:
                    raise ValueError(
                        f"input shape {batch.shape[1:]} does not match graph {tuple(want)}"
                    )
                out = batch.data
            elif kind is NodeKind.CONV2D:
                out = float_conv2d(
                    ins[0],
                    node.attrs["filters"],
                    _geometry_of(node.attrs),
                    node.attrs.get("bias"),
                )
            elif kind is NodeKind.AXCONV2D:
                with meter.phase(PHASE_QUANT):
                    in_range = Range(float(ins[1]), float(ins[2]))
                f_range = Range(node.attrs["f_min"], node.attrs["f_max"])
                cfg = ConvConfig(
                    geometry=_geometry_of(node.attrs),
                    chunk_size=chunk_size,
                    accumulator=accumulator,
                    round_mode=round_mode,
                    workers=workers,
                )
                y = conv_fn(
                    Tensor4(ins[0], Layout.NHWC),
                    Tensor4(node.attrs["filters"], Layout.HWCN),
                    in_range,
                    f_range,
                    node.attrs["lut"],
                    cfg,
                    meter,
                ).data
                bias = node.attrs.get("bias")
                out = y if bias is None else (y + bias.astype(np.float32)).astype(np.float32)
            elif kind in (NodeKind.MIN, NodeKind.MAX):
                with meter.phase(PHASE_QUANT):
                    arr = np.asarray(ins[0])
                    if not np.isfinite(arr).all():
                        raise ValueError(f"non-finite values reaching {node.id!r}")
                    out = float(arr.min() if kind is NodeKind.MIN else arr.max())
            elif kind is NodeKind.RELU:
                out = np.maximum(ins[0], np.float32(0.0))
            elif kind is NodeKind.MAXPOOL:
                out = _pool2d(ins[0], node.attrs, take_max=True)
            elif kind is NodeKind.AVGPOOL:
                out = _pool2d(ins[0], node.attrs, take_max=False)
            elif kind is NodeKind.ADD:
                a, b = ins
                if a.shape != b.shape:
                    raise ValueError(f"Add node {node.id!r} input shapes differ")
                out = (a + b).astype(np.float32)
            elif kind is NodeKind.FLATTEN:
                out = np.ascontiguousarray(ins[0]).reshape(ins[0].shape[0], -1)
            elif kind is NodeKind.DENSE:
                x = ins[0]
                if x.ndim != 2:
                    raise ValueError(f"Dense node {node.id!r} expects a flattened input")
                w = node.attrs["weights"]
                b = node.attrs.get("bias")
                out = x @ w
                if b is not None:
                    out = out + b
                out = out.astype(np.float32)
            elif kind is NodeKind.SOFTMAX:
                x = ins[0]
                z = x - x.max(axis=-1, keepdims=True)
                e = np.exp(z)
                out = (e / e.sum(axis=-1, keepdims=True)).astype(np.float32)
            else:  # pragma: no cover - kinds are exhaustive
                raise ValueError(f"unsupported node kind {kind!r}")
            values[node.id] = out
    if trace is not None:
        trace.update(values)

    result = np.asarray(out, dtype=np.float32)
    if result.ndim == 2:
        result = result.reshape(result.shape[0], 1, 1, result.shape[1])
    return Tensor4(result, Layout.NHWC)


def graph_mac_count(g: LayerGraph, batch_shape: tuple[int, int, int, int]) -> int:
    """Conv MAC count of one batch through the graph (shape inference pass)."""
    shapes: dict[str, tuple] = {}
    total = 0
    for node in g.nodes:
        kind = node.kind
        if kind is NodeKind.INPUT:
            shapes[node.id] = batch_shape
        elif kind in (NodeKind.CONV2D, NodeKind.AXCONV2D):
            x = shapes[node.inputs[0]]
            filters = node.attrs["filters"]
            geometry = _geometry_of(node.attrs)
            total += conv_mac_count(x, filters.shape, geometry)
            shapes[node.id] = output_shape(x, filters.shape, geometry)
        elif kind in (NodeKind.MIN, NodeKind.MAX):
            shapes[node.id] = ()
        elif kind in (NodeKind.RELU, NodeKind.SOFTMAX, NodeKind.ADD):
            shapes[node.id] = shapes[node.inputs[0]]
        elif kind in (NodeKind.MAXPOOL, NodeKind.AVGPOOL):
            x = shapes[node.inputs[0]]
            ph, pw = tuple(node.attrs.get("pool", (2, 2)))
            geometry = ConvGeometry(
                strides=tuple(node.attrs.get("strides", (ph, pw))),
                padding=node.attrs.get("padding", "valid"),
            )
            n, oh, ow, _ = output_shape(x, (ph, pw, x[3], 1), geometry)
            shapes[node.id] = (n, oh, ow, x[3])
        elif kind is NodeKind.FLATTEN:
            x = shapes[node.inputs[0]]
            shapes[node.id] = (x[0], int(np.prod(x[1:])))
        elif kind is NodeKind.DENSE:
            x = shapes[node.inputs[0]]
            shapes[node.id] = (x[0], node.attrs["weights"].shape[1])
    return total
