from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Triplet:
    """First, middle and last frames (HxWx3 in [0, 1]) and the middle's relative time."""

    first: np.ndarray
    middle: np.ndarray
    last: np.ndarray
    t_middle: float = 0.5

    def __post_init__(self):
        shapes = {self.first.shape, self.middle.shape, self.last.shape}
        if len(shapes) != 1:
            raise ValueError(f"triplet frames differ in shape: {sorted(shapes)}")
        if not 0.0 < self.t_middle < 1.0:
            raise ValueError(f"t_middle must lie in (0, 1), got {self.t_middle}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.first.shape[:2]


@dataclass(frozen=True)
class TripletSample:
    """A triplet with the flows between its outer frames (first->last, last->first)."""

    triplet: Triplet
    flow_fwd: np.ndarray
    flow_bwd: np.ndarray
    name: str = ""

    def __post_init__(self):
        h, w = self.triplet.shape
        for label, f in (("flow_fwd", self.flow_fwd), ("flow_bwd", self.flow_bwd)):
            if f.shape != (h, w, 2):
                raise ValueError(f"{label} has shape {f.shape}, expected {(h, w, 2)}")

    @property
    def flows(self) -> tuple[np.ndarray, np.ndarray]:
        return self.flow_fwd, self.flow_bwd
