"""The miniature 2x super-resolution network and its bundle mapping.

Macro shape: shallow 3x3 feature extraction, four residual blocks
(conv-gelu-conv with channel attention on the branch), a global skip
from the shallow features, then a 3x3 conv to four channels and
pixel shuffle back to one channel at doubled resolution.

Initialization reproduces nearest-neighbor duplication exactly: feature
channel 0 carries the input, every residual branch starts at zero, and
the tail replicates channel 0 into all four shuffle phases (halved to
undo the global skip's doubling). Training therefore starts from a
sane upsampler instead of noise, which matters at smoke-run budgets.
"""
from __future__ import annotations

import numpy as np
import torch
from torch import nn

from .errors import ConfigError

CHANNELS = 32
BLOCKS = 4
REDUCTION = 4


class ResidualBlock(nn.Module):
    def __init__(self, ch: int = CHANNELS, reduction: int = REDUCTION):
        super().__init__()
        self.c1 = nn.Conv2d(ch, ch, 3, padding=1)
        self.c2 = nn.Conv2d(ch, ch, 3, padding=1)
        self.down = nn.Linear(ch, ch // reduction)
        self.up = nn.Linear(ch // reduction, ch)
        nn.init.zeros_(self.c2.weight)
        nn.init.zeros_(self.c2.bias)

    def forward(self, x):
        y = self.c2(nn.functional.gelu(self.c1(x)))
        gate = torch.sigmoid(self.up(torch.relu(self.down(y.mean(dim=(2, 3))))))
        return x + y * gate[:, :, None, None]


class SrNet(nn.Module):
    def __init__(self):
        super().__init__()
        self.head = nn.Conv2d(1, CHANNELS, 3, padding=1)
        self.body = nn.ModuleList(ResidualBlock() for _ in range(BLOCKS))
        self.tail = nn.Conv2d(CHANNELS, 4, 3, padding=1)
        with torch.no_grad():
            self.head.weight[0].zero_()
            self.head.weight[0, 0, 1, 1] = 1.0
            self.head.bias[0] = 0.0
            self.tail.weight.zero_()
            self.tail.bias.zero_()
            for phase in range(4):
                # 0.5: the global skip doubles channel 0 by the tail
                self.tail.weight[phase, 0, 1, 1] = 0.5

    def forward(self, x):
        feat = self.head(x)
        y = feat
        for block in self.body:
            y = block(y)
        return nn.functional.pixel_shuffle(self.tail(y + feat), 2)


def named_tensors(net: SrNet) -> dict[str, np.ndarray]:
    """Bundle tensors in declaration order (insertion order is the order)."""
    out: dict[str, np.ndarray] = {}

    def take(name, param):
        out[name] = param.detach().cpu().numpy().astype(np.float32)

    take("head.w", net.head.weight)
    take("head.b", net.head.bias)
    for i, block in enumerate(net.body):
        take(f"b{i}.c1.w", block.c1.weight)
        take(f"b{i}.c1.b", block.c1.bias)
        take(f"b{i}.c2.w", block.c2.weight)
        take(f"b{i}.c2.b", block.c2.bias)
        take(f"b{i}.ca.dw", block.down.weight)
        take(f"b{i}.ca.db", block.down.bias)
        take(f"b{i}.ca.uw", block.up.weight)
        take(f"b{i}.ca.ub", block.up.bias)
    take("tail.w", net.tail.weight)
    take("tail.b", net.tail.bias)
    return out


def build_graph(tensors: dict[str, np.ndarray]) -> dict:
    """Layer graph matching :func:`named_tensors`, in execution order."""
    decls = [{"name": n, "shape": list(a.shape)} for n, a in tensors.items()]
    layers: list[dict] = [
        {
            "op": "conv2d",
            "in_channels": 1,
            "out_channels": CHANNELS,
            "kernel": 3,
            "weight": "head.w",
            "bias": "head.b",
        },
        {"op": "save", "tag": "feat"},
    ]
    for i in range(BLOCKS):
        layers += [
            {"op": "save", "tag": f"blk{i}"},
            {
                "op": "conv2d",
                "in_channels": CHANNELS,
                "out_channels": CHANNELS,
                "kernel": 3,
                "weight": f"b{i}.c1.w",
                "bias": f"b{i}.c1.b",
            },
            {"op": "gelu"},
            {
                "op": "conv2d",
                "in_channels": CHANNELS,
                "out_channels": CHANNELS,
                "kernel": 3,
                "weight": f"b{i}.c2.w",
                "bias": f"b{i}.c2.b",
            },
            {
                "op": "channel_attention",
                "channels": CHANNELS,
                "reduction": REDUCTION,
                "w_down": f"b{i}.ca.dw",
                "b_down": f"b{i}.ca.db",
                "w_up": f"b{i}.ca.uw",
                "b_up": f"b{i}.ca.ub",
            },
            {"op": "add", "tag": f"blk{i}"},
        ]
    layers += [
        {"op": "add", "tag": "feat"},
        {
            "op": "conv2d",
            "in_channels": CHANNELS,
            "out_channels": 4,
            "kernel": 3,
            "weight": "tail.w",
            "bias": "tail.b",
        },
        {"op": "pixel_shuffle", "factor": 2},
    ]
    return {"input_channels": 1, "scale": 2, "tensors": decls, "layers": layers}


def load_tensors(net: SrNet, tensors: dict[str, np.ndarray]) -> None:
    """Copy bundle tensors back into the torch modules (fine-tune init)."""
    expected = named_tensors(net)
    missing = set(expected) - set(tensors)
    if missing:
        raise ConfigError(f"init bundle lacks tensors: {sorted(missing)}")
    lookup = {}
    lookup["head.w"], lookup["head.b"] = net.head.weight, net.head.bias
    for i, block in enumerate(net.body):
        lookup[f"b{i}.c1.w"], lookup[f"b{i}.c1.b"] = block.c1.weight, block.c1.bias
        lookup[f"b{i}.c2.w"], lookup[f"b{i}.c2.b"] = block.c2.weight, block.c2.bias
        lookup[f"b{i}.ca.dw"], lookup[f"b{i}.ca.db"] = block.down.weight, block.down.bias
        lookup[f"b{i}.ca.uw"], lookup[f"b{i}.ca.ub"] = block.up.weight, block.up.bias
    lookup["tail.w"], lookup["tail.b"] = net.tail.weight, net.tail.bias
    with torch.no_grad():
        for name, param in lookup.items():
            arr = np.asarray(tensors[name], dtype=np.float32)
            if tuple(arr.shape) != tuple(param.shape):
                raise ConfigError(
                    f"init tensor {name!r} has shape {tuple(arr.shape)},"
                    f" model expects {tuple(param.shape)}"
                )
            param.copy_(torch.from_numpy(arr))
