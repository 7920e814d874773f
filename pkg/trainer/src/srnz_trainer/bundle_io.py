"""Reading and writing .srnb model bundles.

Layout (all little-endian): magic "SRNB", u16 format version (1), u8
noise tier (none=0, weak=1, strong=2), u32 graph length, the graph as
canonical JSON (sorted keys, no whitespace), every declared tensor as
raw float32 in declaration order, and a SHA-256 digest over everything
before it. The digest doubles as the model's identity, so serialization
must be byte-stable: same graph and tensors, same file.
"""
from __future__ import annotations

import hashlib
import json
import os
import struct

import numpy as np

from .errors import BundleError, ConfigError

MAGIC = b"SRNB"
VERSION = 1
TIER_BYTE = {"none": 0, "weak": 1, "strong": 2}
BYTE_TIER = {v: k for k, v in TIER_BYTE.items()}


def canonical_graph_bytes(graph: dict) -> bytes:
    return json.dumps(graph, sort_keys=True, separators=(",", ":")).encode("utf-8")


def bundle_bytes(tier: str, graph: dict, tensors: dict[str, np.ndarray]) -> bytes:
    if tier not in TIER_BYTE:
        raise ConfigError(f"unknown noise tier {tier!r}")
    gbytes = canonical_graph_bytes(graph)
    out = bytearray()
    out += MAGIC
    out += struct.pack("<H", VERSION)
    out.append(TIER_BYTE[tier])
    out += struct.pack("<I", len(gbytes))
    out += gbytes
    for decl in graph["tensors"]:
        arr = np.ascontiguousarray(tensors[decl["name"]], dtype="<f4")
        if list(arr.shape) != list(decl["shape"]):
            raise ConfigError(
                f"tensor {decl['name']!r} has shape {list(arr.shape)},"
                f" declared {decl['shape']}"
            )
        out += arr.tobytes()
    out += hashlib.sha256(bytes(out)).digest()
    return bytes(out)


def write_bundle(path, tier: str, graph: dict, tensors: dict[str, np.ndarray]) -> str:
    """Write a bundle file; returns the content hash as hex."""
    blob = bundle_bytes(tier, graph, tensors)
    with open(path, "wb") as fh:
        fh.write(blob)
    return blob[-32:].hex()


def read_bundle(path) -> tuple[str, dict, dict[str, np.ndarray]]:
    """Load (tier, graph, tensors) back from a bundle file.

    Verifies the trailing digest before trusting any field, so a
    truncated or bit-flipped file fails closed.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4 + 2 + 1 + 4 + 32:
        raise BundleError(f"{os.path.basename(str(path))}: too short to be a bundle")
    if blob[:4] != MAGIC:
        raise BundleError("bad magic; not a model bundle")
    (version,) = struct.unpack_from("<H", blob, 4)
    if version != VERSION:
        raise BundleError(f"unsupported bundle version {version}")
    tier_byte = blob[6]
    if tier_byte not in BYTE_TIER:
        raise BundleError(f"unknown tier byte {tier_byte}")
    (glen,) = struct.unpack_from("<I", blob, 7)
    body_end = len(blob) - 32
    if 11 + glen > body_end:
        raise BundleError("graph length exceeds the file")
    if hashlib.sha256(blob[:body_end]).digest() != blob[body_end:]:
        raise BundleError("content hash mismatch")
    try:
        graph = json.loads(blob[11 : 11 + glen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BundleError(f"graph is not valid JSON: {exc}") from None

    tensors: dict[str, np.ndarray] = {}
    pos = 11 + glen
    for decl in graph.get("tensors", []):
        shape = tuple(decl["shape"])
        nbytes = int(np.prod(shape)) * 4
        if pos + nbytes > body_end:
            raise BundleError("tensor section shorter than the declarations")
        tensors[decl["name"]] = (
            np.frombuffer(blob, dtype="<f4", count=int(np.prod(shape)), offset=pos)
            .reshape(shape)
            .copy()
        )
        pos += nbytes
    if pos != body_end:
        raise BundleError("tensor section holds trailing bytes")
    return BYTE_TIER[tier_byte], graph, tensors
