"""Flow providers and the bilateral motion approximation.

A flow ``phi_ab`` is an (H, W, 2) array of (u, v) pixel displacements: the
content at ``x`` in frame ``a`` appears at ``x + phi_ab(x)`` in frame ``b``.
Flows are constants for the differentiable pipeline; no gradient reaches a
provider.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio.formats import read_flo
from .dataio.synthetic import SyntheticSceneSpec, induced_flow

PROVIDERS = ("analytic", "file", "constant")


@dataclass(frozen=True)
class BilateralMotionSet:
    """Four time-``t`` motion maps; ``*_t0`` point toward frame 0, ``*_t1`` toward frame 1."""

    fw_t0: np.ndarray
    fw_t1: np.ndarray
    bw_t0: np.ndarray
    bw_t1: np.ndarray
    t: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.fw_t0.shape[:2]


def bilateral_motion(flow01: np.ndarray, flow10: np.ndarray, t: float) -> BilateralMotionSet:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    flow01 = np.asarray(flow01)
    flow10 = np.asarray(flow10)
    if flow01.shape != flow10.shape or flow01.ndim != 3 or flow01.shape[2] != 2:
        raise ValueError(f"flows must share an HxWx2 shape, got {flow01.shape} and {flow10.shape}")
    return BilateralMotionSet(
        fw_t0=(-t) * flow01,
        fw_t1=(1 - t) * flow01,
        bw_t0=t * flow10,
        bw_t1=-(1 - t) * flow10,
        t=t,
    )


class ConstantFlowProvider:
    """Uniform motion ``(u, v)`` from frame 0 to frame 1, and its negation back."""

    def __init__(self, u: float, v: float):
        self.vector = (float(u), float(v))

    def flows(self, frame0, frame1, context=None):
        h, w = np.shape(frame0)[:2]
        fwd = np.empty((h, w, 2), dtype=np.float32)
        fwd[...] = self.vector
        return fwd, -fwd


class AnalyticFlowProvider:
    """Exact flows of a synthetic scene between frame indices ``context = (i0, i1)``."""

    def __init__(self, spec: SyntheticSceneSpec, default_span: tuple[float, float] = (0.0, 1.0)):
        self.spec = spec
        self.default_span = default_span

    def flows(self, frame0, frame1, context=None):
        i0, i1 = context if context is not None else self.default_span
        return induced_flow(self.spec, i0, i1), induced_flow(self.spec, i1, i0)


class FileFlowProvider:
    """Flows read from ``.flo`` files; ``context = (fwd_path, bwd_path)`` overrides the defaults."""

    def __init__(self, fwd_path=None, bwd_path=None):
        self.paths = (fwd_path, bwd_path)

    def flows(self, frame0, frame1, context=None):
        fwd_path, bwd_path = context if context is not None else self.paths
        if fwd_path is None or bwd_path is None:
            raise ValueError("file flow provider needs both a forward and a backward flow path")
        return read_flo(fwd_path), read_flo(bwd_path)


def make_provider(kind: str, **kwargs):
    if kind == "constant":
        return ConstantFlowProvider(*kwargs.get("vector", (0.0, 0.0)))
    if kind == "analytic":
        return AnalyticFlowProvider(kwargs["spec"], kwargs.get("span", (0.0, 1.0)))
    if kind == "file":
        return FileFlowProvider(kwargs.get("fwd_path"), kwargs.get("bwd_path"))
    raise ValueError(f"unknown flow provider {kind!r}; expected one of {PROVIDERS}")


def get_flows(provider, frame0, frame1, context=None) -> tuple[np.ndarray, np.ndarray]:
    """Ask ``provider`` for (phi_01, phi_10) and check them against the frames."""
    shape0, shape1 = np.shape(frame0)[:2], np.shape(frame1)[:2]
    if shape0 != shape1:
        raise ValueError(f"frames differ in size: {shape0} vs {shape1}")
    fwd, bwd = provider.flows(frame0, frame1, context)
    for label, f in (("forward", fwd), ("backward", bwd)):
        if f.shape != (*shape0, 2):
            raise ValueError(f"{label} flow has shape {f.shape}, frames are {shape0[0]}x{shape0[1]}")
        if not np.all(np.isfinite(f)):
            raise ValueError(f"{label} flow contains non-finite values")
    return fwd, bwd
