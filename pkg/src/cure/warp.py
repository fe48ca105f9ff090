"""Backward warping of (C, H, W) feature maps by a pixel flow."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ops
from .motion import BilateralMotionSet
from .tensor import Tensor


@dataclass(frozen=True)
class WarpedQuartet:
    fw0: Tensor
    fw1: Tensor
    bw0: Tensor
    bw1: Tensor

    def ordered(self) -> list[Tensor]:
        """Members in fusion order: fw 0->t, fw 1->t, bw 0->t, bw 1->t."""
        return [self.fw0, self.fw1, self.bw0, self.bw1]


_GRID_CACHE: dict[tuple[int, int], np.ndarray] = {}


def pixel_grid(h: int, w: int) -> np.ndarray:
    """Row-major (H*W, 2) integer pixel coordinates as (x, y) floats."""
    key = (h, w)
    if key not in _GRID_CACHE:
        ys, xs = np.mgrid[0:h, 0:w]
        grid = np.stack([xs.reshape(-1), ys.reshape(-1)], axis=1).astype(np.float64)
        grid.setflags(write=False)
        _GRID_CACHE[key] = grid
    return _GRID_CACHE[key]


def backward_warp(target: Tensor, flow: np.ndarray) -> Tensor:
    """``out(x) = target(x + flow(x))`` with bilinear sampling and edge clamping."""
    c, h, w = target.shape
    flow = np.asarray(flow)
    if flow.shape != (h, w, 2):
        raise ValueError(f"flow shape {flow.shape} does not match feature map {h}x{w}")
    coords = pixel_grid(h, w) + flow.reshape(-1, 2).astype(np.float64)
    sampled = ops.grid_sample_bilinear(target, coords.astype(target.dtype))
    return ops.reshape(ops.transpose(sampled, (1, 0)), (c, h, w))


def warp_quartet(f0: Tensor, f1: Tensor, motions: BilateralMotionSet) -> WarpedQuartet:
    if f0.shape != f1.shape:
        raise ValueError(f"feature maps differ: {f0.shape} vs {f1.shape}")
    if f0.shape[1:] != motions.shape:
        raise ValueError(f"motion maps are {motions.shape}, features are {f0.shape[1:]}")
    return WarpedQuartet(
        fw0=backward_warp(f0, motions.fw_t0),
        fw1=backward_warp(f1, motions.fw_t1),
        bw0=backward_warp(f0, motions.bw_t0),
        bw1=backward_warp(f1, motions.bw_t1),
    )
