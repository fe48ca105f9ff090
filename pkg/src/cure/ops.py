"""Differentiable operations on :class:`cure.tensor.Tensor`.

Each op computes its forward result eagerly with numpy and registers a
closure returning one gradient per parent (``None`` for parents that do not
need one).  Only the operations the interpolation pipeline uses are here.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import Tensor, as_tensor, make_node

# Row block for ``linear``.  BLAS kernels pick different accumulation paths
# for different row counts, so rows are always pushed through in zero-padded
# blocks of this size; a query's output then never depends on its batch.
LINEAR_ROW_BLOCK = 64


class ShapeError(ValueError):
    pass


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _coerce(a, like: Tensor | None = None) -> Tensor:
    if isinstance(a, Tensor):
        return a
    dtype = like.dtype if like is not None else None
    return Tensor(np.asarray(a), dtype=dtype)


def add(a, b) -> Tensor:
    a = _coerce(a, b if isinstance(b, Tensor) else None)
    b = _coerce(b, a)
    out = a.data + b.data

    def back(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return make_node(out, (a, b), back)


def sub(a, b) -> Tensor:
    a = _coerce(a, b if isinstance(b, Tensor) else None)
    b = _coerce(b, a)
    out = a.data - b.data

    def back(g):
        return _unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)

    return make_node(out, (a, b), back)


def mul(a, b) -> Tensor:
    a = _coerce(a, b if isinstance(b, Tensor) else None)
    b = _coerce(b, a)
    out = a.data * b.data

    def back(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return make_node(out, (a, b), back)


def power(x: Tensor, p: float) -> Tensor:
    out = x.data**p

    def back(g):
        return (g * p * x.data ** (p - 1),)

    return make_node(out, (x,), back)


def sum(x: Tensor) -> Tensor:  # noqa: A001 - mirrors numpy naming
    out = np.asarray(x.data.sum(), dtype=x.dtype)

    def back(g):
        return (np.broadcast_to(g, x.shape).astype(x.dtype),)

    return make_node(out, (x,), back)


def mean(x: Tensor) -> Tensor:
    n = x.size
    out = np.asarray(x.data.mean(), dtype=x.dtype)

    def back(g):
        return (np.full(x.shape, g / n, dtype=x.dtype),)

    return make_node(out, (x,), back)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    out = x.data.reshape(shape)

    def back(g):
        return (g.reshape(x.shape),)

    return make_node(out, (x,), back)


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    out = np.ascontiguousarray(x.data.transpose(axes))

    def back(g):
        return (np.ascontiguousarray(g.transpose(inverse)),)

    return make_node(out, (x,), back)


def _blocked_matmul(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    pad = (-n) % LINEAR_ROW_BLOCK
    if pad:
        x = np.concatenate([x, np.zeros((pad, x.shape[1]), dtype=x.dtype)])
    out = np.empty((x.shape[0], w.shape[1]), dtype=np.result_type(x, w))
    for start in range(0, x.shape[0], LINEAR_ROW_BLOCK):
        np.matmul(x[start : start + LINEAR_ROW_BLOCK], w, out=out[start : start + LINEAR_ROW_BLOCK])
    return out[:n]


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """``x @ weight + bias`` for ``x`` of shape (B, Din) and weight (Din, Dout)."""
    x = as_tensor(x)
    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[0]:
        raise ShapeError(f"linear: input {x.shape} incompatible with weight {weight.shape}")
    if bias is not None and bias.shape != (weight.shape[1],):
        raise ShapeError(f"linear: bias {bias.shape} does not match output width {weight.shape[1]}")
    out = _blocked_matmul(x.data, weight.data)
    if bias is not None:
        out += bias.data
    parents = (x, weight) if bias is None else (x, weight, bias)

    def back(g):
        gx = g @ weight.data.T if x.requires_grad else None
        gw = x.data.T @ g if weight.requires_grad else None
        if bias is None:
            return gx, gw
        return gx, gw, g.sum(axis=0)

    return make_node(out, parents, back)


def conv2d(x: Tensor, kernel: Tensor, bias: Tensor | None = None, stride: int = 1, pad: int = 0) -> Tensor:
    """Zero-padded 2-D cross-correlation of a (C_in, H, W) map."""
    x = as_tensor(x)
    if x.ndim != 3 or kernel.ndim != 4 or kernel.shape[1] != x.shape[0]:
        raise ShapeError(f"conv2d: input {x.shape} incompatible with kernel {kernel.shape}")
    c_out, c_in, k, k2 = kernel.shape
    if k != k2 or k % 2 == 0:
        raise ShapeError(f"conv2d: kernel must be square with odd size, got {k}x{k2}")
    if stride < 1 or pad < 0:
        raise ValueError(f"conv2d: need stride >= 1 and pad >= 0, got stride={stride}, pad={pad}")
    _, h, w = x.shape
    span_h, span_w = h + 2 * pad - k, w + 2 * pad - k
    if span_h < 0 or span_w < 0 or span_h % stride or span_w % stride:
        raise ShapeError(f"conv2d: {h}x{w} input with k={k}, pad={pad}, stride={stride} gives a non-integer output extent")
    ho, wo = span_h // stride + 1, span_w // stride + 1

    xp = np.pad(x.data, ((0, 0), (pad, pad), (pad, pad))) if pad else x.data
    win = sliding_window_view(xp, (k, k), axis=(1, 2))[:, ::stride, ::stride]
    cols = np.ascontiguousarray(win.transpose(0, 3, 4, 1, 2)).reshape(c_in * k * k, ho * wo)
    kmat = kernel.data.reshape(c_out, -1)
    out = kmat @ cols
    if bias is not None:
        out += bias.data[:, None]
    out = out.reshape(c_out, ho, wo)
    parents = (x, kernel) if bias is None else (x, kernel, bias)

    def back(g):
        g2 = g.reshape(c_out, ho * wo)
        gk = (g2 @ cols.T).reshape(kernel.shape) if kernel.requires_grad else None
        gx = None
        if x.requires_grad:
            dcols = (kmat.T @ g2).reshape(c_in, k, k, ho, wo)
            gxp = np.zeros(xp.shape, dtype=x.dtype)
            for i in range(k):
                for j in range(k):
                    gxp[:, i : i + stride * ho : stride, j : j + stride * wo : stride] += dcols[:, i, j]
            gx = gxp[:, pad : pad + h, pad : pad + w] if pad else gxp
        if bias is None:
            return gx, gk
        return gx, gk, g2.sum(axis=1)

    return make_node(out, parents, back)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    out = np.where(mask, x.data, 0).astype(x.dtype)

    def back(g):
        return (g * mask,)

    return make_node(out, (x,), back)


def sigmoid(x: Tensor) -> Tensor:
    # Split by sign so neither branch overflows.
    z = x.data
    e = np.exp(-np.abs(z))
    out = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(x.dtype)

    def back(g):
        return (g * out * (1.0 - out),)

    return make_node(out, (x,), back)


def apply_activation(x: Tensor, kind: str) -> Tensor:
    if kind == "relu":
        return relu(x)
    if kind == "sigmoid":
        return sigmoid(x)
    raise ValueError(f"unknown activation {kind!r}")


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    parts = list(parts)
    if not parts:
        raise ShapeError("concat needs at least one tensor")
    if len(parts) == 1:
        return parts[0]
    out = np.concatenate([p.data for p in parts], axis=axis)
    splits = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def back(g):
        return tuple(np.split(g, splits, axis=axis))

    return make_node(out, parents=parts, backward_fn=back)


def concat_channels(parts: Sequence[Tensor]) -> Tensor:
    """Stack (C_i, H, W) maps along the channel axis, in argument order."""
    parts = list(parts)
    if not parts:
        raise ShapeError("concat_channels needs at least one map")
    hw = parts[0].shape[1:]
    for p in parts:
        if p.ndim != 3 or p.shape[1:] != hw:
            raise ShapeError(f"concat_channels: spatial shapes differ ({p.shape[1:]} vs {hw})")
    return concat(parts, axis=0)


def take_rows(x: Tensor, index: np.ndarray) -> Tensor:
    """Gather rows of a 2-D tensor; result shape is ``index.shape + (cols,)``."""
    index = np.asarray(index, dtype=np.intp)
    out = x.data[index]

    def back(g):
        gx = np.zeros(x.shape, dtype=x.dtype)
        np.add.at(gx, index.reshape(-1), g.reshape(-1, x.shape[1]))
        return (gx,)

    return make_node(out, (x,), back)


def index_select(x: Tensor, index: np.ndarray, axis: int) -> Tensor:
    index = np.asarray(index, dtype=np.intp)
    out = np.take(x.data, index, axis=axis)

    def back(g):
        gx = np.zeros(x.shape, dtype=x.dtype)
        moved = np.moveaxis(gx, axis, 0)
        np.add.at(moved, index, np.moveaxis(g, axis, 0))
        return (gx,)

    return make_node(out, (x,), back)


def grid_sample_bilinear(fmap: Tensor, coords) -> Tensor:
    """Bilinearly sample a (C, H, W) map at N pixel coordinates.

    ``coords`` is (N, 2) as (x, y) with pixel centres on integers, x to the
    right and y downward.  Coordinates outside the map are clamped to the
    border.  Returns an (N, C) tensor, differentiable in both arguments.
    """
    coords = as_tensor(coords, dtype=fmap.dtype)
    if fmap.ndim != 3 or coords.ndim != 2 or coords.shape[1] != 2:
        raise ShapeError(f"grid_sample_bilinear: bad shapes map={fmap.shape} coords={coords.shape}")
    c, h, w = fmap.shape
    cx, cy = coords.data[:, 0], coords.data[:, 1]
    x = np.clip(cx, 0, w - 1)
    y = np.clip(cy, 0, h - 1)
    x0 = np.floor(x).astype(np.intp)
    y0 = np.floor(y).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    wx = (x - x0).astype(fmap.dtype)
    wy = (y - y0).astype(fmap.dtype)

    flat = fmap.data.reshape(c, h * w)
    i00, i01, i10, i11 = y0 * w + x0, y0 * w + x1, y1 * w + x0, y1 * w + x1
    v00, v01, v10, v11 = flat[:, i00], flat[:, i01], flat[:, i10], flat[:, i11]
    top = (1 - wx) * v00 + wx * v01
    bottom = (1 - wx) * v10 + wx * v11
    out = np.ascontiguousarray(((1 - wy) * top + wy * bottom).T)

    def back(g):
        gt = g.T  # (C, N)
        gmap = None
        if fmap.requires_grad:
            offsets = (np.arange(c, dtype=np.intp) * (h * w))[:, None]
            idx = np.concatenate([offsets + i for i in (i00, i01, i10, i11)], axis=1).reshape(-1)
            weights = np.concatenate(
                [gt * ((1 - wx) * (1 - wy)), gt * (wx * (1 - wy)), gt * ((1 - wx) * wy), gt * (wx * wy)], axis=1
            ).reshape(-1)
            gmap = np.bincount(idx, weights=weights, minlength=c * h * w).astype(fmap.dtype).reshape(c, h, w)
        gcoords = None
        if coords.requires_grad:
            inside_x = (cx >= 0) & (cx <= w - 1)
            inside_y = (cy >= 0) & (cy <= h - 1)
            dx = ((1 - wy) * (v01 - v00) + wy * (v11 - v10)) * gt
            dy = ((1 - wx) * (v10 - v00) + wx * (v11 - v01)) * gt
            gcoords = np.stack([dx.sum(axis=0) * inside_x, dy.sum(axis=0) * inside_y], axis=1).astype(coords.dtype)
        return gmap, gcoords

    return make_node(out, (fmap, coords), back)


def avg_pool2(x: Tensor) -> Tensor:
    """2x2 average pooling with stride 2 on an even-sized (C, H, W) map."""
    c, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"avg_pool2 needs even spatial size, got {h}x{w}")
    out = x.data.reshape(c, h // 2, 2, w // 2, 2).mean(axis=(2, 4))

    def back(g):
        return (np.repeat(np.repeat(g, 2, axis=1), 2, axis=2) * x.dtype.type(0.25),)

    return make_node(out.astype(x.dtype), (x,), back)


def upsample_bilinear2(x: Tensor) -> Tensor:
    """Double the spatial size with half-pixel-aligned bilinear sampling."""
    c, h, w = x.shape
    ox = (np.arange(2 * w) + 0.5) / 2 - 0.5
    oy = (np.arange(2 * h) + 0.5) / 2 - 0.5
    gx, gy = np.meshgrid(ox, oy)
    coords = np.stack([gx.reshape(-1), gy.reshape(-1)], axis=1)
    sampled = grid_sample_bilinear(x, coords)  # (4hw, C)
    return reshape(transpose(sampled, (1, 0)), (c, 2 * h, 2 * w))


def pad_edge(x: Tensor, bottom: int, right: int) -> Tensor:
    """Replicate the last row/column of a (C, H, W) map."""
    if not bottom and not right:
        return x
    _, h, w = x.shape
    rows = np.concatenate([np.arange(h), np.full(bottom, h - 1)])
    cols = np.concatenate([np.arange(w), np.full(right, w - 1)])
    return index_select(index_select(x, rows, axis=1), cols, axis=2)


def crop(x: Tensor, height: int, width: int) -> Tensor:
    """Keep the top-left ``height`` x ``width`` window of a (C, H, W) map."""
    if x.shape[1:] == (height, width):
        return x
    out = np.ascontiguousarray(x.data[:, :height, :width])

    def back(g):
        gx = np.zeros(x.shape, dtype=x.dtype)
        gx[:, :height, :width] = g
        return (gx,)

    return make_node(out, (x,), back)


def mse(pred: Tensor, target) -> Tensor:
    """Mean of squared differences; ``target`` is treated as a constant."""
    target = target.data if isinstance(target, Tensor) else np.asarray(target)
    if pred.shape != target.shape:
        raise ShapeError(f"mse: prediction {pred.shape} vs target {target.shape}")
    diff = pred.data - target.astype(pred.dtype)
    n = diff.size
    out = np.asarray(np.mean(diff * diff), dtype=pred.dtype)

    def back(g):
        return (diff * (2.0 * g / n),)

    return make_node(out, (pred,), back)
