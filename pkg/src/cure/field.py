"""Coordinate network mapping (x, y, t, local code) to RGB, and the ablation head."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ops
from .optim import he_uniform, xavier_uniform
from .stem import Conv
from .tensor import Tensor, as_tensor

VARIANTS = ("full", "no_rep", "no_crd")
N_LAYERS = 7
SKIP_LAYERS = (1, 3)  # zero-based: the second and fourth layers see the raw input again


def normalize_variant(name: str) -> str:
    v = name.replace("-", "_")
    if v not in VARIANTS:
        raise ValueError(f"unknown model variant {name!r}; expected one of {VARIANTS}")
    return v


@dataclass(frozen=True)
class QueryPoint:
    x: float
    y: float
    t: float

    def normalized(self, height: int, width: int) -> tuple[float, float, float]:
        return normalize_coords(self.x, self.y, self.t, height, width)


def normalize_coords(x, y, t, height: int, width: int):
    return 2 * np.asarray(x) / (width - 1) - 1, 2 * np.asarray(y) / (height - 1) - 1, 2 * np.asarray(t) - 1


def input_dim(channels: int, variant: str) -> int:
    variant = normalize_variant(variant)
    if variant == "no_rep":
        raise ValueError("the no_rep variant has no field network input")
    return 9 * channels + (3 if variant == "full" else 0)


def build_input(q: QueryPoint, code, variant: str, height: int, width: int) -> np.ndarray:
    """Single-query input vector: ``[x^, y^, t^, code]`` (full) or ``code`` (no_crd)."""
    variant = normalize_variant(variant)
    code = np.asarray(code)
    if code.ndim != 1 or code.size % 9:
        raise ValueError(f"local code must be a flat vector of length 9C, got shape {code.shape}")
    if variant == "no_rep":
        raise ValueError("the no_rep variant bypasses the field network")
    if variant == "no_crd":
        return code.copy()
    coords = np.asarray(q.normalized(height, width), dtype=code.dtype)
    return np.concatenate([coords, code])


def build_inputs(pixels: np.ndarray, t: float, codes: Tensor, variant: str, height: int, width: int) -> Tensor:
    """Batched :func:`build_input` for integer (x, y) pixels sharing one ``t``."""
    variant = normalize_variant(variant)
    if variant == "no_rep":
        raise ValueError("the no_rep variant bypasses the field network")
    if variant == "no_crd":
        return codes
    pixels = np.asarray(pixels)
    xn, yn, tn = normalize_coords(pixels[:, 0], pixels[:, 1], t, height, width)
    coords = np.stack([xn, yn, np.full_like(xn, tn, dtype=np.float64)], axis=1).astype(codes.dtype)
    return ops.concat([Tensor(coords, dtype=codes.dtype), codes], axis=1)


@dataclass
class FieldParams:
    """Seven fully-connected layers; ``weights[i]`` has shape (in_i, out_i)."""

    weights: list[Tensor]
    biases: list[Tensor]
    input_dim: int
    width: int
    skips: bool = True

    def __post_init__(self):
        if len(self.weights) != N_LAYERS or len(self.biases) != N_LAYERS:
            raise ValueError(f"field network needs exactly {N_LAYERS} layers")

    @classmethod
    def init(cls, rng, input_dim: int, width: int = 256, skips: bool = True, dtype=np.float32) -> FieldParams:
        weights, biases = [], []
        for i in range(N_LAYERS):
            fan_in = input_dim if i == 0 else width + (input_dim if skips and i in SKIP_LAYERS else 0)
            fan_out = 3 if i == N_LAYERS - 1 else width
            if i < N_LAYERS - 1:
                w = he_uniform(rng, (fan_in, fan_out), fan_in, dtype)
            else:
                w = xavier_uniform(rng, (fan_in, fan_out), fan_in, fan_out, dtype)
            weights.append(Tensor(w, requires_grad=True))
            biases.append(Tensor(np.zeros(fan_out, dtype=dtype), requires_grad=True))
        return cls(weights, biases, input_dim, width, skips)

    def named_parameters(self, prefix: str = "field"):
        out = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out += [(f"{prefix}.layer{i}.weight", w), (f"{prefix}.layer{i}.bias", b)]
        return out


def field_forward(inputs, params: FieldParams) -> Tensor:
    """Evaluate the network on an (N, D) batch (or one D-vector); returns RGB in (0, 1)."""
    x = as_tensor(inputs, dtype=params.weights[0].dtype)
    single = x.ndim == 1
    if single:
        x = ops.reshape(x, (1, -1))
    if x.shape[1] != params.input_dim:
        raise ValueError(f"field input has {x.shape[1]} features, network expects {params.input_dim}")
    h = x
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        if params.skips and i in SKIP_LAYERS:
            h = ops.concat([x, h], axis=1)
        h = ops.linear(h, w, b)
        h = ops.relu(h) if i < N_LAYERS - 1 else ops.sigmoid(h)
    return ops.reshape(h, (3,)) if single else h


@dataclass
class HeadParams:
    conv: Conv

    @classmethod
    def init(cls, rng, channels: int, dtype=np.float32) -> HeadParams:
        return cls(Conv.init(rng, channels, 3, relu_follows=False, dtype=dtype))

    def named_parameters(self, prefix: str = "head"):
        return self.conv.named(f"{prefix}.conv")


def no_rep_head(xi: Tensor, params: HeadParams) -> Tensor:
    """Direct RGB prediction from the fused map: (3, H, W) in (0, 1)."""
    return ops.sigmoid(params.conv(xi))
