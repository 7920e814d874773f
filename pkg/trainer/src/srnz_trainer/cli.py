"""Command line entry points: train a bundle, register it with the
compressor's model registry (by shelling out to the installed ``srnz``
command, the supported integration surface), and inspect bundle files."""
from __future__ import annotations

import argparse
import json
import subprocess
import sys

from .bundle_io import read_bundle, write_bundle
from .config import TIER_SIGMA, TrainConfig
from .errors import TrainerError
from .train import train


def _cmd_train(args) -> int:
    config = TrainConfig(
        data_dir=args.data,
        tier=args.tier,
        tile_size=args.tile,
        crop_size=args.crop,
        batch_size=args.batch,
        iterations=args.iterations,
        learning_rate=args.lr,
        init_bundle=args.init,
        seed=args.seed,
    )
    result = train(config, log_every=args.log_every)
    with open(args.out, "wb") as fh:
        fh.write(result.bundle)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(result.summary(), fh, indent=2)
            fh.write("\n")
    print(f"{args.out}: {result.tier} tier, {result.iterations} iterations, hash {result.hash_hex}")
    print(f"L1 first/last: {result.first_loss:.6f} / {result.last_loss:.6f} ({result.seconds:.0f}s)")
    return 0


def _cmd_register(args) -> int:
    cmd = [sys.executable, "-m", "srnz", "models", "-r", args.registry, "add", args.bundle]
    if args.domain:
        cmd += ["--domain", args.domain]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    sys.stdout.write(proc.stdout)
    sys.stderr.write(proc.stderr)
    return proc.returncode


def _cmd_inspect(args) -> int:
    tier, graph, tensors = read_bundle(args.bundle)
    total = sum(a.size for a in tensors.values())
    print(f"tier: {tier}")
    print(f"layers: {' '.join(layer['op'] for layer in graph['layers'])}")
    print(f"tensors: {len(tensors)} ({total} parameters, {total * 4} bytes)")
    return 0


def _cmd_reexport(args) -> int:
    tier, graph, tensors = read_bundle(args.bundle)
    write_bundle(args.out, tier, graph, tensors)
    print(f"{args.out}: re-exported {tier} bundle")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="srnz-train")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("train", help="train a model and export a bundle")
    p.add_argument("--data", required=True, help="directory of raw grids + JSON sidecars")
    p.add_argument("--out", required=True, help="bundle output path (.srnb)")
    p.add_argument("--tier", choices=sorted(TIER_SIGMA), default="weak")
    p.add_argument("--iterations", type=int, default=20_000)
    p.add_argument("--crop", type=int, default=48)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--tile", type=int, default=480)
    p.add_argument("--lr", type=float, default=2e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", help="bundle to fine-tune from")
    p.add_argument("--report", help="write a JSON training summary here")
    p.add_argument("--log-every", type=int, default=0, help="print loss every N iterations")
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("register", help="add a bundle to an srnz model registry")
    p.add_argument("bundle")
    p.add_argument("-r", "--registry", required=True)
    p.add_argument("--domain", default=None)
    p.set_defaults(fn=_cmd_register)

    p = sub.add_parser("inspect", help="summarize a bundle file")
    p.add_argument("bundle")
    p.set_defaults(fn=_cmd_inspect)

    p = sub.add_parser("reexport", help="round-trip a bundle (sanity check)")
    p.add_argument("bundle")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_reexport)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except TrainerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
