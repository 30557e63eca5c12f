"""axemu: emulate DNN accelerators built from approximate 8-bit multipliers.

Quantized 2D convolution whose inner multiply is a 65,536-entry truth
table, computed either by a reference nested-loop engine or a chunked
image-to-columns + GEMM pipeline with exact dequantization corrections;
plus a graph transform pass, persistence formats, and a benchmark harness.
"""

from .axconv import (
    Accumulator,
    ConvConfig,
    PatchMatrix,
    QuantFilters,
    approx_gemm,
    axconv2d,
    conv_mac_count,
    direct_conv,
    effective_workers,
    im2cols,
    quantize_filters,
)
from .axmult import (
    LUT_ENTRIES,
    LUT_TABLE_BYTES,
    LutErrorStats,
    MultLut,
    error_stats,
    exact_lut,
    exact_products,
    lookup,
    stitch_index,
    truncated_lut,
)
from .bench import run_benchmark, speedup
from .datasets import class_patterns, synthetic_cifar10, write_synthetic_cifar10
from .formats import (
    Cifar10Batch,
    FormatError,
    RunReport,
    load_cifar10,
    load_lut,
    load_model,
    load_report,
    load_tensor,
    make_report,
    report_csv,
    save_cifar10,
    save_lut,
    save_model,
    save_report,
    save_tensor,
)
from .graph import (
    LayerGraph,
    Node,
    NodeKind,
    TransformReport,
    float_conv2d,
    graph_mac_count,
    run,
    transform,
)
from .metering import Meter
from .quantizer import (
    QuantParams,
    QuantTensor,
    RoundMode,
    Signedness,
    compute_coeffs,
    dequantize,
    dequantize_values,
    quantize,
    quantize_values,
)
from .tensor import (
    ConvGeometry,
    Layout,
    Range,
    Tensor4,
    flatten_index,
    output_shape,
    resolve_padding,
    tensor_min_max,
    unflatten_index,
)

__version__ = "0.1.0"
