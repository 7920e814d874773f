"""Command-line interface.

Subcommands: compress, decompress, info, eval, sweep, gen, and models
(add / list / verify). Raw grid files are headerless little-endian
row-major scalars; shapes are given as '129x129' or '129,129,65'.

Exit codes: 0 success, 2 configuration or usage problems, 3 corrupt
inputs (artifacts, streams, bundles), 4 internal invariant failures.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .engine import (
    DEFAULT_ANCHOR_STRIDE,
    CompressionOptions,
    compress,
    decompress,
    inspect,
)
from .errors import ConfigError, SrnzError
from .grid import DataGrid, ErrorBoundSpec, read_raw, write_raw
from .metrics import build_record, record_to_dict, write_records_csv
from .quantize import DEFAULT_RADIUS
from .registry import ModelRegistry, default_registry
from .synth import FAMILIES, FieldSpec, default_corpus, generate, read_field, write_field

DEFAULT_SWEEP_EPSILONS = (1e-2, 1e-3, 1e-4, 1e-5)


def _parse_shape(text: str) -> tuple[int, ...]:
    parts = [p for p in text.replace("x", ",").split(",") if p]
    try:
        shape = tuple(int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"cannot parse shape {text!r}; use forms like 129x129 or 65,65,65")
    if not 1 <= len(shape) <= 3 or any(s < 1 for s in shape):
        raise ConfigError(f"invalid shape {shape}: need 1-3 extents, all >= 1")
    return shape


def _registry_from(args) -> ModelRegistry | None:
    if getattr(args, "models", None):
        return ModelRegistry(args.models)
    return default_registry()


def _options_from(args) -> CompressionOptions:
    return CompressionOptions(
        error_bound=ErrorBoundSpec(args.eb, args.eps),
        mode=args.mode,
        anchor_stride=args.anchor_stride,
        quant_radius=args.quant_radius,
        registry=_registry_from(args),
        domain=args.domain,
        policy=args.policy,
        zstd_level=args.zstd_level,
    )


def _add_compress_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps", type=float, required=True, help="error bound value")
    p.add_argument("--eb", choices=("abs", "rel"), default="rel", help="bound mode (default rel)")
    p.add_argument("--mode", choices=("interp", "sr"), default="interp")
    p.add_argument("--anchor-stride", type=int, default=DEFAULT_ANCHOR_STRIDE, dest="anchor_stride")
    p.add_argument("--quant-radius", type=int, default=DEFAULT_RADIUS, dest="quant_radius")
    p.add_argument("--models", help="model registry directory (default: $SRNZ_MODELS)")
    p.add_argument("--domain", default="general")
    p.add_argument("--policy", choices=("strict", "degrade"), default="degrade")
    p.add_argument("--zstd-level", type=int, default=3, dest="zstd_level")


def _add_raw_input_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("-i", "--input", required=True, help="raw grid file")
    p.add_argument("--shape", required=True, help="grid extents, e.g. 129x129")
    p.add_argument("--precision", choices=("f32", "f64"), default="f32")


def _cmd_compress(args) -> int:
    grid = read_raw(args.input, args.precision, _parse_shape(args.shape))
    blob = compress(grid, _options_from(args))
    with open(args.output, "wb") as fh:
        fh.write(blob)
    print(f"{args.output}: {len(blob)} bytes ({grid.size} elements)")
    return 0


def _cmd_decompress(args) -> int:
    with open(args.input, "rb") as fh:
        blob = fh.read()
    grid = decompress(blob, _registry_from(args))
    write_raw(grid, args.output)
    shape = "x".join(str(s) for s in grid.shape)
    print(f"{args.output}: {shape} {grid.source_precision}")
    return 0


def _cmd_info(args) -> int:
    with open(args.input, "rb") as fh:
        header = inspect(fh.read())
    doc = {
        "precision": header.precision,
        "shape": list(header.shape),
        "eb_mode": header.eb_mode,
        "epsilon": header.epsilon,
        "resolved_e": header.resolved_e,
        "anchor_stride": header.anchor_stride,
        "quant_radius": header.quant_radius,
        "constant": header.constant,
        "degraded": header.degraded,
        "levels": [
            {
                "stride": lv.stride,
                "kind": lv.kind,
                "method": lv.method,
                "model": lv.model_hash.hex() if lv.kind == "sr" else None,
                "noise_tier": lv.noise_tier if lv.kind == "sr" else None,
            }
            for lv in header.levels
        ],
    }
    if args.json:
        print(json.dumps(doc, indent=2))
        return 0
    print(f"grid: {'x'.join(str(s) for s in header.shape)} {header.precision}")
    print(f"bound: {header.eb_mode} epsilon={header.epsilon:g} (absolute e={header.resolved_e:g})")
    print(f"anchor stride: {header.anchor_stride}, quantizer radius: {header.quant_radius}")
    if header.constant:
        print(f"constant grid, value {header.constant_value!r}")
    if header.degraded:
        print("degraded: super-resolution fell back to interpolation")
    for lv in header.levels:
        if lv.kind == "sr":
            print(f"  stride {lv.stride:>2} -> {lv.stride // 2:>2}: sr model={lv.model_hash.hex()[:12]} tier={lv.noise_tier}")
        else:
            print(f"  stride {lv.stride:>2} -> {lv.stride // 2:>2}: interp {lv.method}")
    return 0


def _evaluate_grid(name: str, grid: DataGrid, args, eps: float):
    opts = CompressionOptions(
        error_bound=ErrorBoundSpec(args.eb, eps),
        mode=args.mode,
        anchor_stride=args.anchor_stride,
        quant_radius=args.quant_radius,
        registry=_registry_from(args),
        domain=args.domain,
        policy=args.policy,
        zstd_level=args.zstd_level,
    )
    t0 = time.perf_counter()
    blob = compress(grid, opts)
    t1 = time.perf_counter()
    recon = decompress(blob, opts.registry)
    t2 = time.perf_counter()
    resolved = opts.error_bound.resolve(grid).resolved_e
    return build_record(name, grid, recon, len(blob), eps, resolved, t1 - t0, t2 - t1)


def _cmd_eval(args) -> int:
    grid = read_raw(args.input, args.precision, _parse_shape(args.shape))
    name = os.path.basename(args.input)
    record = _evaluate_grid(name, grid, args, args.eps)
    doc = record_to_dict(record)
    if args.json:
        print(json.dumps(doc, indent=2))
    else:
        for key, value in doc.items():
            print(f"{key}: {value}")
    if args.csv:
        write_records_csv([record], args.csv)
    return 0


def _sweep_one(payload):
    """Worker for sweep: regenerate the field and evaluate one epsilon."""
    spec_doc, eps, argdoc = payload
    from .synth import spec_from_dict

    spec = spec_from_dict(spec_doc)
    grid = generate(spec)
    args = argparse.Namespace(**argdoc)
    record = _evaluate_grid(spec.name, grid, args, eps)
    return record


def _cmd_sweep(args) -> int:
    if args.fields:
        specs = []
        for path in args.fields:
            spec, _ = read_field(path)
            specs.append(spec)
    else:
        specs = default_corpus()
    epsilons = (
        [float(x) for x in args.eps.split(",")] if args.eps else list(DEFAULT_SWEEP_EPSILONS)
    )
    argdoc = dict(
        eb=args.eb,
        mode=args.mode,
        anchor_stride=args.anchor_stride,
        quant_radius=args.quant_radius,
        models=args.models,
        domain=args.domain,
        policy=args.policy,
        zstd_level=args.zstd_level,
    )
    jobs = []
    from .synth import spec_to_dict

    for spec in specs:
        for eps in epsilons:
            jobs.append((spec_to_dict(spec), eps, argdoc))
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            records = list(pool.map(_sweep_one, jobs))
    else:
        records = [_sweep_one(job) for job in jobs]
    for record in records:
        doc = record_to_dict(record)
        print(
            f"{doc['name']}: eps={doc['epsilon']} cr={doc['cr']}"
            f" bit_rate={doc['bit_rate']} psnr={doc['psnr']} violations={doc['violations']}"
        )
    if args.csv:
        write_records_csv(records, args.csv)
        print(f"wrote {len(records)} rows to {args.csv}")
    return 0


def _cmd_gen(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    if args.family:
        if not args.shape or args.seed is None:
            raise ConfigError("custom generation needs --family, --shape, and --seed")
        name = args.name or f"{args.family}-{args.seed}"
        params = json.loads(args.params) if args.params else {}
        specs = [
            FieldSpec(
                name=name,
                family=args.family,
                shape=_parse_shape(args.shape),
                seed=args.seed,
                precision=args.precision,
                params=params,
            )
        ]
    else:
        specs = default_corpus()
    for spec in specs:
        json_path, raw_path = write_field(spec, args.out)
        print(f"{raw_path} ({'x'.join(str(s) for s in spec.shape)})")
    return 0


def _cmd_models(args) -> int:
    registry = ModelRegistry(args.registry)
    if args.models_cmd == "add":
        entry = registry.add(args.bundle, args.domain)
        print(f"added {entry.domain}/{entry.tier}: {entry.hash_hex}")
        return 0
    if args.models_cmd == "list":
        if not registry.entries:
            print("(registry is empty)")
        for e in sorted(registry.entries, key=lambda e: (e.domain, e.tier)):
            print(f"{e.domain:>12} {e.tier:>7} {e.hash_hex} {e.file}")
        return 0
    if args.models_cmd == "verify":
        problems = registry.verify()
        for p in problems:
            print(p, file=sys.stderr)
        if problems:
            return 3
        print(f"{len(registry.entries)} model(s) verified")
        return 0
    raise ConfigError(f"unknown models subcommand {args.models_cmd!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srnz",
        description="Error-bounded lossy compression for 1-3D scientific grids.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("compress", help="compress a raw grid file")
    _add_raw_input_opts(p)
    p.add_argument("-o", "--output", required=True, help="artifact path")
    _add_compress_opts(p)
    p.set_defaults(fn=_cmd_compress)

    p = sub.add_parser("decompress", help="reconstruct a raw grid from an artifact")
    p.add_argument("-i", "--input", required=True, help="artifact file")
    p.add_argument("-o", "--output", required=True, help="raw output path")
    p.add_argument("--models", help="model registry directory (default: $SRNZ_MODELS)")
    p.set_defaults(fn=_cmd_decompress)

    p = sub.add_parser("info", help="show an artifact's header")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_info)

    p = sub.add_parser("eval", help="compress + decompress one grid and report metrics")
    _add_raw_input_opts(p)
    _add_compress_opts(p)
    p.add_argument("--csv", help="also append the record to a CSV file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("sweep", help="evaluate a corpus across error bounds")
    p.add_argument("--fields", nargs="*", help="field spec JSON files (default: built-in corpus)")
    p.add_argument("--eps", help="comma-separated epsilons (default 1e-2,1e-3,1e-4,1e-5)")
    p.add_argument("--eb", choices=("abs", "rel"), default="rel")
    p.add_argument("--mode", choices=("interp", "sr"), default="interp")
    p.add_argument("--anchor-stride", type=int, default=DEFAULT_ANCHOR_STRIDE, dest="anchor_stride")
    p.add_argument("--quant-radius", type=int, default=DEFAULT_RADIUS, dest="quant_radius")
    p.add_argument("--models", help="model registry directory")
    p.add_argument("--domain", default="general")
    p.add_argument("--policy", choices=("strict", "degrade"), default="degrade")
    p.add_argument("--zstd-level", type=int, default=3, dest="zstd_level")
    p.add_argument("--csv", help="write records to this CSV file")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("gen", help="generate synthetic fields (raw + JSON spec)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--family", choices=sorted(FAMILIES))
    p.add_argument("--shape")
    p.add_argument("--seed", type=int)
    p.add_argument("--name")
    p.add_argument("--precision", choices=("f32", "f64"), default="f32")
    p.add_argument("--params", help="family parameters as a JSON object")
    p.set_defaults(fn=_cmd_gen)

    p = sub.add_parser("models", help="manage a model registry")
    p.add_argument("-r", "--registry", required=True, help="registry directory")
    msub = p.add_subparsers(dest="models_cmd", required=True)
    pa = msub.add_parser("add", help="copy a bundle into the registry")
    pa.add_argument("bundle")
    pa.add_argument("--domain", default="general")
    msub.add_parser("list", help="list registered models")
    msub.add_parser("verify", help="hash-check every registered bundle")
    p.set_defaults(fn=_cmd_models)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except SrnzError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
