"""Spatiotemporal encoding: feature extraction, fusion and local-code gathering.

The encoder is a resolution-preserving residual network::

    conv3x3(3 -> C) + relu
    2 x [conv3x3 + relu + conv3x3, additive skip, relu]

and the fusion network a one-level U-Net over the four warped maps::

    a  = relu(conv3x3(4C -> 2C))
    b  = relu(conv3x3(2C -> 2C)) on avgpool2(a)
    xi = conv3x3(4C -> C) on [a, upsample2(b)]
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import ops
from .motion import bilateral_motion
from .optim import he_uniform, xavier_uniform
from .tensor import Tensor
from .warp import WarpedQuartet, warp_quartet

MIN_FRAME_SIZE = 8


@dataclass
class Conv:
    weight: Tensor
    bias: Tensor

    @classmethod
    def init(cls, rng, c_in, c_out, k=3, relu_follows=True, dtype=np.float32) -> Conv:
        fan_in, fan_out = c_in * k * k, c_out * k * k
        shape = (c_out, c_in, k, k)
        w = he_uniform(rng, shape, fan_in, dtype) if relu_follows else xavier_uniform(rng, shape, fan_in, fan_out, dtype)
        return cls(Tensor(w, requires_grad=True), Tensor(np.zeros(c_out, dtype=dtype), requires_grad=True))

    def __call__(self, x: Tensor) -> Tensor:
        k = self.weight.shape[-1]
        return ops.conv2d(x, self.weight, self.bias, stride=1, pad=k // 2)

    def named(self, prefix: str):
        return [(f"{prefix}.weight", self.weight), (f"{prefix}.bias", self.bias)]


@dataclass
class EncoderParams:
    head: Conv
    blocks: list[tuple[Conv, Conv]] = field(default_factory=list)

    @property
    def channels(self) -> int:
        return self.head.weight.shape[0]

    @classmethod
    def init(cls, rng, channels: int, n_blocks: int = 2, dtype=np.float32) -> EncoderParams:
        head = Conv.init(rng, 3, channels, dtype=dtype)
        blocks = [(Conv.init(rng, channels, channels, dtype=dtype), Conv.init(rng, channels, channels, dtype=dtype)) for _ in range(n_blocks)]
        return cls(head, blocks)

    def named_parameters(self, prefix: str = "encoder"):
        out = self.head.named(f"{prefix}.head")
        for i, (a, b) in enumerate(self.blocks):
            out += a.named(f"{prefix}.block{i}.conv0") + b.named(f"{prefix}.block{i}.conv1")
        return out


@dataclass
class FusionParams:
    down: Conv
    mid: Conv
    out: Conv

    @property
    def channels(self) -> int:
        return self.out.weight.shape[0]

    @classmethod
    def init(cls, rng, channels: int, dtype=np.float32) -> FusionParams:
        c = channels
        return cls(
            down=Conv.init(rng, 4 * c, 2 * c, dtype=dtype),
            mid=Conv.init(rng, 2 * c, 2 * c, dtype=dtype),
            out=Conv.init(rng, 4 * c, c, relu_follows=False, dtype=dtype),
        )

    def named_parameters(self, prefix: str = "fusion"):
        return self.down.named(f"{prefix}.down") + self.mid.named(f"{prefix}.mid") + self.out.named(f"{prefix}.out")


def frame_to_tensor(frame: np.ndarray, dtype) -> Tensor:
    return Tensor(np.ascontiguousarray(np.asarray(frame).transpose(2, 0, 1)), dtype=dtype)


def extract_features(frame: np.ndarray, params: EncoderParams) -> Tensor:
    """Map an HxWx3 frame to a (C, H, W) feature map."""
    frame = np.asarray(frame)
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError(f"expected an HxWx3 frame, got {frame.shape}")
    h, w = frame.shape[:2]
    if h < MIN_FRAME_SIZE or w < MIN_FRAME_SIZE:
        raise ValueError(f"frames must be at least {MIN_FRAME_SIZE}x{MIN_FRAME_SIZE}, got {h}x{w}")
    x = ops.relu(params.head(frame_to_tensor(frame, params.head.weight.dtype)))
    for conv_a, conv_b in params.blocks:
        y = conv_b(ops.relu(conv_a(x)))
        x = ops.relu(ops.add(x, y))
    return x


def fuse(quartet: WarpedQuartet, params: FusionParams) -> Tensor:
    """Concatenate the quartet in fusion order and run the U-Net; returns (C, H, W)."""
    stacked = ops.concat_channels(quartet.ordered())
    expected = params.down.weight.shape[1]
    if stacked.shape[0] != expected:
        raise ValueError(f"fusion expects {expected} input channels, quartet provides {stacked.shape[0]}")
    _, h, w = stacked.shape
    stacked = ops.pad_edge(stacked, h % 2, w % 2)
    a = ops.relu(params.down(stacked))
    b = ops.relu(params.mid(ops.avg_pool2(a)))
    merged = ops.concat_channels([a, ops.upsample_bilinear2(b)])
    return ops.crop(params.out(merged), h, w)


def encode(frame0, frame1, flow01, flow10, t: float, encoder: EncoderParams, fusion: FusionParams) -> Tensor:
    """Full encoding path from two frames and their flows to the time-``t`` feature map."""
    f0 = extract_features(frame0, encoder)
    f1 = extract_features(frame1, encoder)
    quartet = warp_quartet(f0, f1, bilateral_motion(flow01, flow10, t))
    return fuse(quartet, fusion)


# Row-major 3x3 neighbourhood, top-left first.
NEIGHBOR_OFFSETS = np.array([(dx, dy) for dy in (-1, 0, 1) for dx in (-1, 0, 1)], dtype=np.intp)


def neighbor_indices(pixels: np.ndarray, h: int, w: int) -> np.ndarray:
    """Flat row-major indices (N, 9) of each pixel's clamped 3x3 neighbourhood."""
    pixels = np.asarray(pixels, dtype=np.intp).reshape(-1, 2)
    if pixels.size and (pixels[:, 0].min() < 0 or pixels[:, 0].max() >= w or pixels[:, 1].min() < 0 or pixels[:, 1].max() >= h):
        raise ValueError(f"pixel coordinates outside the {h}x{w} frame")
    nx = np.clip(pixels[:, None, 0] + NEIGHBOR_OFFSETS[None, :, 0], 0, w - 1)
    ny = np.clip(pixels[:, None, 1] + NEIGHBOR_OFFSETS[None, :, 1], 0, h - 1)
    return ny * w + nx


def gather_local_codes(xi: Tensor, pixels: np.ndarray) -> Tensor:
    """Local codes for integer (x, y) pixels: (N, 9C), channels contiguous per neighbour."""
    c, h, w = xi.shape
    rows = ops.reshape(ops.transpose(xi, (1, 2, 0)), (h * w, c))
    idx = neighbor_indices(pixels, h, w)
    return ops.reshape(ops.take_rows(rows, idx), (idx.shape[0], 9 * c))


def gather_local_code(xi: Tensor, x) -> np.ndarray:
    """Local code of a single pixel ``x = (col, row)`` as a flat array of length 9C."""
    return gather_local_codes(xi, np.asarray([x])).data[0]
