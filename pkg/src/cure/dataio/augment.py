from __future__ import annotations

import numpy as np

from .triplet import Triplet

FLIP_MODES = ("none", "horizontal", "vertical", "both")


def _flip_frame(frame: np.ndarray, horizontal: bool, vertical: bool) -> np.ndarray:
    if horizontal:
        frame = frame[:, ::-1]
    if vertical:
        frame = frame[::-1]
    return np.ascontiguousarray(frame)


def _flip_flow(flow: np.ndarray, horizontal: bool, vertical: bool) -> np.ndarray:
    flow = _flip_frame(flow, horizontal, vertical)
    if horizontal:
        flow[..., 0] = -flow[..., 0]
    if vertical:
        flow[..., 1] = -flow[..., 1]
    return flow


def flip_augment(triplet: Triplet, flows, mode: str):
    """Mirror a triplet and its flows so the flows stay exact for the mirrored frames."""
    if mode not in FLIP_MODES:
        raise ValueError(f"unknown flip mode {mode!r}; expected one of {FLIP_MODES}")
    if mode == "none":
        return triplet, tuple(flows)
    hor = mode in ("horizontal", "both")
    ver = mode in ("vertical", "both")
    flipped = Triplet(
        _flip_frame(triplet.first, hor, ver),
        _flip_frame(triplet.middle, hor, ver),
        _flip_frame(triplet.last, hor, ver),
        triplet.t_middle,
    )
    return flipped, tuple(_flip_flow(f, hor, ver) for f in flows)
