"""Serialized super-resolution model bundles.

Binary layout (all integers little-endian):

    4s   magic "SRNB"
    u16  format version (currently 1)
    u8   noise tier: 0 = none, 1 = weak, 2 = strong
    u32  byte length of the UTF-8 JSON layer graph
    ...  graph JSON
    ...  tensor data, concatenated float32 little-endian in declaration order
    32B  SHA-256 over every preceding byte

The graph document::

    {
      "input_channels": 1,
      "scale": 2,
      "tensors": [{"name": ..., "shape": [...]}, ...],
      "layers":  [{"op": ...}, ...]
    }

Supported layer ops: conv2d (weight/bias tensors; stride 1 and same-padding
so spatial extents survive), relu, gelu, leaky_relu (negative_slope),
channel_attention (squeeze-style: pooled means through a reduction MLP and
a sigmoid gate), save/add (elementwise residual links via named tags), and
exactly one trailing pixel_shuffle with factor 2. The graph is validated
symbolically: channel counts are tracked layer by layer, the input must be
single-channel, and the pre-shuffle width must be exactly 4 so the bundle
maps (N, 1, H, W) to (N, 1, 2H, 2W).
"""
from __future__ import annotations

import hashlib
import json
import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import CorruptModelError, InvalidModelError

__all__ = [
    "BUNDLE_MAGIC",
    "BUNDLE_VERSION",
    "NOISE_TIERS",
    "ModelBundle",
    "validate_graph",
    "build_bundle_bytes",
    "write_bundle",
    "load_bundle",
    "load_bundle_bytes",
]

BUNDLE_MAGIC = b"SRNB"
BUNDLE_VERSION = 1
NOISE_TIERS = ("none", "weak", "strong")

_ACTIVATIONS = ("relu", "gelu", "leaky_relu")


@dataclass(frozen=True, eq=False)
class ModelBundle:
    """A validated, hash-checked model ready for inference."""

    noise_tier: str
    graph: dict
    tensors: dict
    content_hash: bytes

    @property
    def hash_hex(self) -> str:
        return self.content_hash.hex()


def _invalid(msg: str) -> InvalidModelError:
    return InvalidModelError(f"invalid model graph: {msg}")


def validate_graph(graph: dict, tensor_shapes: dict[str, tuple[int, ...]]) -> None:
    """Symbolic shape check of the layer graph against declared tensors."""
    if not isinstance(graph, dict):
        raise _invalid("graph must be a JSON object")
    if graph.get("input_channels") != 1:
        raise _invalid("input_channels must be 1")
    if graph.get("scale") != 2:
        raise _invalid("scale must be 2")
    layers = graph.get("layers")
    if not isinstance(layers, list) or not layers:
        raise _invalid("layers must be a non-empty list")

    used: set[str] = set()

    def tensor(name, expect_shape, what):
        if not isinstance(name, str) or name not in tensor_shapes:
            raise _invalid(f"{what} references unknown tensor {name!r}")
        if tuple(tensor_shapes[name]) != tuple(expect_shape):
            raise _invalid(
                f"{what} tensor {name!r} has shape {tuple(tensor_shapes[name])},"
                f" expected {tuple(expect_shape)}"
            )
        used.add(name)

    channels = 1
    saved: dict[str, int] = {}
    shuffled = False
    for i, layer in enumerate(layers):
        if shuffled:
            raise _invalid("pixel_shuffle must be the final layer")
        if not isinstance(layer, dict) or "op" not in layer:
            raise _invalid(f"layer {i} is not an op object")
        op = layer["op"]
        if op == "conv2d":
            cin, cout = layer.get("in_channels"), layer.get("out_channels")
            k = layer.get("kernel")
            if cin != channels:
                raise _invalid(f"layer {i} conv2d expects {cin} input channels, stream has {channels}")
            if not isinstance(cout, int) or cout < 1:
                raise _invalid(f"layer {i} conv2d out_channels invalid")
            if not isinstance(k, int) or k < 1 or k % 2 == 0:
                raise _invalid(f"layer {i} conv2d kernel must be odd and >= 1")
            if layer.get("stride", 1) != 1:
                raise _invalid(f"layer {i} conv2d stride must be 1")
            if layer.get("padding", (k - 1) // 2) != (k - 1) // 2:
                raise _invalid(f"layer {i} conv2d padding must preserve spatial extents")
            tensor(layer.get("weight"), (cout, cin, k, k), f"layer {i} conv2d weight")
            if layer.get("bias") is not None:
                tensor(layer.get("bias"), (cout,), f"layer {i} conv2d bias")
            channels = cout
        elif op in _ACTIVATIONS:
            if op == "leaky_relu":
                slope = layer.get("negative_slope", 0.01)
                if not isinstance(slope, (int, float)):
                    raise _invalid(f"layer {i} leaky_relu slope invalid")
        elif op == "save":
            tag = layer.get("tag")
            if not isinstance(tag, str) or not tag:
                raise _invalid(f"layer {i} save needs a tag")
            saved[tag] = channels
        elif op == "add":
            tag = layer.get("tag")
            if tag not in saved:
                raise _invalid(f"layer {i} adds unsaved tag {tag!r}")
            if saved[tag] != channels:
                raise _invalid(
                    f"layer {i} adds tag {tag!r} with {saved[tag]} channels to a"
                    f" {channels}-channel stream"
                )
        elif op == "channel_attention":
            c, r = layer.get("channels"), layer.get("reduction")
            if c != channels:
                raise _invalid(f"layer {i} channel_attention expects {c} channels, stream has {channels}")
            if not isinstance(r, int) or r < 1 or c % r:
                raise _invalid(f"layer {i} channel_attention reduction must divide {c}")
            h = c // r
            tensor(layer.get("w_down"), (h, c), f"layer {i} attention w_down")
            tensor(layer.get("b_down"), (h,), f"layer {i} attention b_down")
            tensor(layer.get("w_up"), (c, h), f"layer {i} attention w_up")
            tensor(layer.get("b_up"), (c,), f"layer {i} attention b_up")
        elif op == "pixel_shuffle":
            if layer.get("factor") != 2:
                raise _invalid(f"layer {i} pixel_shuffle factor must be 2")
            if channels != 4:
                raise _invalid(
                    f"pixel_shuffle needs exactly 4 input channels for one output"
                    f" channel, stream has {channels}"
                )
            channels = 1
            shuffled = True
        else:
            raise _invalid(f"layer {i} has unsupported op {op!r}")
    if not shuffled:
        raise _invalid("graph must end with a pixel_shuffle layer")
    unused = set(tensor_shapes) - used
    if unused:
        raise _invalid(f"declared tensors never referenced: {sorted(unused)}")


def _declared_tensors(graph: dict) -> list[tuple[str, tuple[int, ...]]]:
    decls = graph.get("tensors")
    if not isinstance(decls, list):
        raise _invalid("tensors must be a list of declarations")
    out = []
    seen = set()
    for d in decls:
        name, shape = d.get("name"), d.get("shape")
        if not isinstance(name, str) or name in seen:
            raise _invalid(f"bad or duplicate tensor name {name!r}")
        if (
            not isinstance(shape, list)
            or not shape
            or any(not isinstance(s, int) or s < 1 for s in shape)
        ):
            raise _invalid(f"tensor {name!r} has invalid shape {shape!r}")
        seen.add(name)
        out.append((name, tuple(shape)))
    return out


def build_bundle_bytes(noise_tier: str, graph: dict, tensors: dict[str, np.ndarray]) -> bytes:
    """Serialize a bundle; validates the graph and tensor shapes first."""
    if noise_tier not in NOISE_TIERS:
        raise InvalidModelError(f"unknown noise tier {noise_tier!r}; expected one of {NOISE_TIERS}")
    decls = _declared_tensors(graph)
    shapes = dict(decls)
    if set(shapes) != set(tensors):
        raise _invalid("tensor declarations and provided arrays disagree")
    validate_graph(graph, shapes)
    gj = json.dumps(graph, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = bytearray(BUNDLE_MAGIC)
    body += struct.pack("<HB", BUNDLE_VERSION, NOISE_TIERS.index(noise_tier))
    body += struct.pack("<I", len(gj))
    body += gj
    for name, shape in decls:
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        if arr.shape != shape:
            raise _invalid(f"tensor {name!r} array shape {arr.shape} != declared {shape}")
        body += arr.tobytes()
    body += hashlib.sha256(bytes(body)).digest()
    return bytes(body)


def write_bundle(path: str | os.PathLike, noise_tier: str, graph: dict, tensors: dict) -> bytes:
    """Write a bundle file; returns its content hash."""
    blob = build_bundle_bytes(noise_tier, graph, tensors)
    with open(path, "wb") as fh:
        fh.write(blob)
    return blob[-32:]


def load_bundle_bytes(blob: bytes, what: str = "bundle") -> ModelBundle:
    if len(blob) < 4 + 3 + 4 + 32:
        raise CorruptModelError(f"{what}: too short to be a model bundle")
    if blob[:4] != BUNDLE_MAGIC:
        raise CorruptModelError(f"{what}: bad magic {blob[:4]!r}")
    version, tier_byte = struct.unpack_from("<HB", blob, 4)
    if version != BUNDLE_VERSION:
        raise InvalidModelError(f"{what}: unsupported bundle version {version}")
    if tier_byte >= len(NOISE_TIERS):
        raise CorruptModelError(f"{what}: unknown noise tier byte {tier_byte}")
    (glen,) = struct.unpack_from("<I", blob, 7)
    graph_end = 11 + glen
    if graph_end + 32 > len(blob):
        raise CorruptModelError(f"{what}: truncated graph section")
    stored = blob[-32:]
    recomputed = hashlib.sha256(blob[:-32]).digest()
    if stored != recomputed:
        raise CorruptModelError(f"{what}: content hash mismatch; bundle is corrupt")
    try:
        graph = json.loads(blob[11:graph_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptModelError(f"{what}: graph is not valid JSON: {exc}") from None
    decls = _declared_tensors(graph)
    expected = sum(int(np.prod(shape)) for _, shape in decls) * 4
    data = blob[graph_end:-32]
    if len(data) != expected:
        raise CorruptModelError(
            f"{what}: tensor section holds {len(data)} bytes, graph declares {expected}"
        )
    tensors = {}
    pos = 0
    for name, shape in decls:
        n = int(np.prod(shape))
        arr = np.frombuffer(data, dtype="<f4", count=n, offset=pos).reshape(shape)
        tensors[name] = arr.copy()
        pos += 4 * n
    validate_graph(graph, {name: shape for name, shape in decls})
    return ModelBundle(
        noise_tier=NOISE_TIERS[tier_byte],
        graph=graph,
        tensors=tensors,
        content_hash=stored,
    )


def load_bundle(path: str | os.PathLike) -> ModelBundle:
    with open(path, "rb") as fh:
        blob = fh.read()
    return load_bundle_bytes(blob, what=str(path))
