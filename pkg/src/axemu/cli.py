"""Command-line front end.

Subcommands: gen-lut, lut-stats, transform, run, bench. Results go to
stdout or files; diagnostics go to stderr as a single "error: ..." line
with a nonzero exit code. AXEMU_WORKERS provides the default --workers.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .axmult import error_stats, exact_lut, truncated_lut
from .formats import (
    FormatError,
    load_cifar10,
    load_lut,
    load_model,
    load_report,
    load_tensor,
    report_csv,
    save_lut,
    save_model,
    save_report,
    save_tensor,
)
from .graph import NodeKind, run, transform
from .metering import PHASES
from .quantizer import RoundMode, Signedness
from .tensor import Layout, Tensor4

_MODES = {m.value: m for m in Signedness}
_ROUNDS = {m.value: m for m in RoundMode}


def _workers_default() -> int | None:
    env = os.environ.get("AXEMU_WORKERS")
    return int(env) if env else None


def _add_engine_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--engine", choices=("gemm", "direct"), default="gemm")
    p.add_argument("--workers", type=int, default=_workers_default(),
                   help="engine worker count (default: AXEMU_WORKERS or all cores)")
    p.add_argument("--chunk-size", type=int, default=None,
                   help="images per convolution chunk (default: auto)")


def _load_images(path: str) -> np.ndarray:
    if Path(path).suffix == ".axt":
        return load_tensor(path).data
    return load_cifar10(path).images.data


def _cmd_gen_lut(args) -> int:
    mode = _MODES[args.mode]
    if args.from_raw:
        lut = load_lut(args.from_raw, mode=mode, raw=True)
    elif args.kind == "exact":
        lut = exact_lut(mode)
    else:
        lut = truncated_lut(mode, args.drop_bits)
    save_lut(lut, args.out)
    print(f"wrote {args.out} ({Path(args.out).stat().st_size} bytes, {mode.value})")
    return 0


def _cmd_lut_stats(args) -> int:
    mode = _MODES[args.mode] if args.mode else None
    lut = load_lut(args.lut, mode=mode, raw=args.raw)
    stats = error_stats(lut)
    print(f"mode={lut.mode.value}")
    print(f"max_abs_error={stats.max_abs_error}")
    print(f"mean_abs_error={stats.mean_abs_error:.6f}")
    print(f"mean_rel_error={stats.mean_rel_error:.6f}")
    print(f"error_count={stats.error_count}")
    return 0


def _cmd_transform(args) -> int:
    g = load_model(args.model)
    lut = load_lut(args.lut)
    transformed, report = transform(g, lut)
    save_model(transformed, args.out, lut_path=os.path.relpath(args.lut, Path(args.out).parent))
    print(
        f"{report.replaced_count} layer(s) replaced, "
        f"{report.inserted_min_max} range nodes inserted"
    )
    if report.untouched_kinds:
        print("untouched kinds: " + ", ".join(report.untouched_kinds))
    return 0


def _agreement(a: np.ndarray, b: np.ndarray) -> float:
    la = a.reshape(a.shape[0], -1).argmax(axis=1)
    lb = b.reshape(b.shape[0], -1).argmax(axis=1)
    return float((la == lb).mean())


def _cmd_run(args) -> int:
    g = load_model(args.model)
    images = _load_images(args.data)
    batch = Tensor4(images, Layout.NHWC)
    kinds = {n.kind for n in g.nodes}

    target = g
    if NodeKind.CONV2D in kinds and args.lut:
        target, _ = transform(g, load_lut(args.lut))
    out = run(target, batch, args.engine, workers=args.workers, chunk_size=args.chunk_size)

    if args.out:
        save_tensor(out, args.out)
        print(f"wrote {args.out}")
    labels = out.data.reshape(out.shape[0], -1).argmax(axis=1)
    if args.labels_out:
        Path(args.labels_out).write_text("\n".join(str(v) for v in labels) + "\n")
        print(f"wrote {args.labels_out}")

    if args.compare_accurate:
        if NodeKind.CONV2D not in kinds:
            raise ValueError(
                "--compare-accurate needs an untransformed model (accurate Conv2D source)"
            )
        if not args.lut:
            raise ValueError("--compare-accurate needs --lut for the approximate side")
        accurate = run(g, batch, args.engine, workers=args.workers, chunk_size=args.chunk_size)
        agreement = _agreement(out.data, accurate.data)
        print(f"top-1 agreement vs accurate: {agreement:.4f}")
    return 0


def _cmd_bench(args) -> int:
    report, outputs = bench_mod.run_benchmark(
        args.model,
        data=args.data,
        engine=args.engine,
        batches=args.batches,
        batch_size=args.batch_size,
        workers=args.workers,
        chunk_size=args.chunk_size,
        seed=args.seed,
    )
    print(f"time: {report.t_init:.3f} + {report.t_comp:.3f} = {report.total:.3f} s "
          f"(t_init + t_comp)")
    pct = report.phase_percentages()
    for name in PHASES:
        if name in report.phase_seconds:
            print(f"  {name}: {report.phase_seconds[name]:.3f} s ({pct[name]:.1f}%)")
    print(f"mac_count: {report.mac_count}")
    if args.baseline:
        base = load_report(args.baseline)
        print(f"speedup vs baseline: {bench_mod.speedup(base, report):.2f}x")
    if args.report_out:
        save_report(report, args.report_out)
        print(f"wrote {args.report_out}")
    if args.csv_out:
        Path(args.csv_out).write_text(report_csv(report))
        print(f"wrote {args.csv_out}")
    if args.save_output:
        save_tensor(Tensor4(outputs, Layout.NHWC), args.save_output)
        print(f"wrote {args.save_output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="axemu",
        description="Emulate DNN accelerators built from approximate 8-bit multipliers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-lut", help="generate or import a multiplier truth table")
    p.add_argument("--mode", choices=sorted(_MODES), required=True)
    p.add_argument("--kind", choices=("exact", "truncated"), default="exact")
    p.add_argument("--drop-bits", type=int, default=0,
                   help="low magnitude bits zeroed per operand (kind=truncated)")
    p.add_argument("--from-raw", metavar="PATH",
                   help="import a headerless 131072-byte table instead of generating")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_lut)

    p = sub.add_parser("lut-stats", help="error statistics of a truth table")
    p.add_argument("lut")
    p.add_argument("--raw", action="store_true", help="treat the file as headerless")
    p.add_argument("--mode", choices=sorted(_MODES), help="required with --raw")
    p.set_defaults(func=_cmd_lut_stats)

    p = sub.add_parser("transform", help="replace Conv2D layers by approximate ones")
    p.add_argument("--model", required=True)
    p.add_argument("--lut", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("run", help="single forward pass over a dataset or tensor file")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help=".axt tensor or CIFAR-10 binary")
    p.add_argument("--lut", help="transform an accurate model on the fly")
    p.add_argument("--out", help="output tensor file (.axt)")
    p.add_argument("--labels-out", help="write top-1 labels, one per line")
    p.add_argument("--compare-accurate", action="store_true",
                   help="also run the accurate graph and print top-1 agreement")
    _add_engine_opts(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("bench", help="timed inference with phase breakdown")
    p.add_argument("--model", required=True)
    p.add_argument("--data", help="dataset file; omitted = synthetic images (see --seed)")
    p.add_argument("--batches", type=int, default=None, help="limit on batch count")
    p.add_argument("--batch-size", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0, help="seed for synthetic input data")
    p.add_argument("--baseline", help="earlier report to compute speedup against")
    p.add_argument("--report-out", help="write the report as JSON")
    p.add_argument("--csv-out", help="write the report as CSV")
    p.add_argument("--save-output", help="write concatenated outputs as .axt")
    _add_engine_opts(p)
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, FormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
