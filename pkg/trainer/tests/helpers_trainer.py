"""Shared helpers for the trainer suite.

The compressor is driven exclusively through ``python -m srnz``
subprocesses: these tests prove the two packages interoperate across
their file formats and CLIs, so nothing in this directory imports srnz.
"""
from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

TRAIN_FAMILY = "band_limited_fourier"
# near the coarse-grid Nyquist limit, where plain interpolation aliases
FAMILY_PARAMS = '{"max_freq": 24}'
TRAIN_SEEDS = tuple(range(1, 11))
HOLDOUT_SEEDS = (50, 51, 52)


def run_srnz(*argv, env=None):
    proc = subprocess.run(
        [sys.executable, "-m", "srnz", *(str(a) for a in argv)],
        capture_output=True,
        text=True,
        env=env,
    )
    return proc.returncode, proc.stdout, proc.stderr


def gen_field(out_dir, seed, family=TRAIN_FAMILY, shape="129x129", params=FAMILY_PARAMS):
    """Generate one synthetic field; returns (sidecar path, raw path)."""
    args = ["gen", "--out", out_dir, "--family", family, "--shape", shape, "--seed", seed]
    if params:
        args += ["--params", params]
    code, out, err = run_srnz(*args)
    assert code == 0, f"srnz gen failed: {err}"
    stem = f"{family}-{seed}"
    out_dir = Path(out_dir)
    return out_dir / f"{stem}.json", out_dir / f"{stem}.f32.raw"


def write_sidecar(directory, name, values, precision="f32"):
    """Hand-write a raw grid + sidecar pair (for malformed-input tests)."""
    import numpy as np

    directory = Path(directory)
    dtype = {"f32": "<f4", "f64": "<f8"}[precision]
    raw = directory / f"{name}.{precision}.raw"
    np.asarray(values, dtype=dtype).tofile(raw)
    doc = {
        "name": name,
        "shape": list(np.asarray(values).shape),
        "precision": precision,
        "data_file": raw.name,
    }
    side = directory / f"{name}.json"
    side.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return side, raw


def eval_record(raw_path, shape, eps, mode="interp", registry=None):
    """srnz eval --json, parsed; psnr/bit_rate/cr come back as floats."""
    args = [
        "eval",
        "-i",
        raw_path,
        "--shape",
        shape,
        "--eps",
        eps,
        "--mode",
        mode,
        "--json",
    ]
    if registry is not None:
        args += ["--models", registry]
    code, out, err = run_srnz(*args)
    assert code == 0, f"srnz eval failed: {err}"
    doc = json.loads(out)
    for key in ("psnr", "bit_rate", "cr", "max_err", "e"):
        doc[key] = float(doc[key])
    return doc
