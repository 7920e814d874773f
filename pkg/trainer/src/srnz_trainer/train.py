"""The training loop: L1 regression from noisy LR crops to HR targets.

Adam at the configured rate, halved at the milestone fractions. The
network output (2m per axis) is trimmed to the 2m-1 target extents
before the loss. A non-finite loss aborts immediately rather than
exporting a poisoned model. Given a seed, runs are reproducible on a
fixed platform; bitwise reproducibility across BLAS/torch builds is not
promised.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import torch

from .bundle_io import bundle_bytes, read_bundle
from .config import TrainConfig
from .data import PairSampler, prepare_slices
from .errors import DivergenceError
from .model import SrNet, build_graph, load_tensors, named_tensors

CHECKPOINT_WINDOW = 50


@dataclass
class TrainResult:
    bundle: bytes
    tier: str
    hash_hex: str
    iterations: int
    first_loss: float
    last_loss: float
    seconds: float

    def summary(self) -> dict:
        return {
            "tier": self.tier,
            "hash": self.hash_hex,
            "iterations": self.iterations,
            "first_loss": self.first_loss,
            "last_loss": self.last_loss,
            "seconds": round(self.seconds, 3),
        }


def train(config: TrainConfig, log_every: int = 0) -> TrainResult:
    torch.manual_seed(config.seed)
    rng = np.random.Generator(np.random.PCG64(config.seed))

    store = prepare_slices(config.data_dir, config.tile_size)
    sampler = PairSampler(store, config.crop_size, config.sigma, rng)

    net = SrNet()
    if config.init_bundle:
        _, _, tensors = read_bundle(config.init_bundle)
        load_tensors(net, tensors)
    net.train()

    opt = torch.optim.Adam(net.parameters(), lr=config.learning_rate)
    sched = torch.optim.lr_scheduler.MultiStepLR(opt, config.milestones(), gamma=0.5)

    m = config.crop_size // 2
    window = min(CHECKPOINT_WINDOW, config.iterations)
    head: list[float] = []
    tail: list[float] = []
    t0 = time.perf_counter()
    for it in range(config.iterations):
        lr_np, hr_np = sampler.batch(config.batch_size)
        opt.zero_grad()
        out = net(torch.from_numpy(lr_np))[:, :, : 2 * m - 1, : 2 * m - 1]
        loss = (out - torch.from_numpy(hr_np)).abs().mean()
        value = float(loss.item())
        if not np.isfinite(value):
            raise DivergenceError(f"non-finite loss {value!r} at iteration {it}")
        loss.backward()
        opt.step()
        sched.step()
        if it < window:
            head.append(value)
        tail.append(value)
        if len(tail) > window:
            tail.pop(0)
        if log_every and it % log_every == 0:
            print(f"iter {it}: L1 {value:.6f}", flush=True)

    net.eval()
    tensors = named_tensors(net)
    blob = bundle_bytes(config.tier, build_graph(tensors), tensors)
    return TrainResult(
        bundle=blob,
        tier=config.tier,
        hash_hex=blob[-32:].hex(),
        iterations=config.iterations,
        first_loss=float(np.mean(head)),
        last_loss=float(np.mean(tail)),
        seconds=time.perf_counter() - t0,
    )
