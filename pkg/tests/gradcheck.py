"""Central finite differences, independent of the autodiff path under test."""
from __future__ import annotations

import numpy as np


def numeric_grad(loss_fn, array: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """d loss_fn() / d array by perturbing ``array`` in place, one entry at a time."""
    grad = np.zeros_like(array, dtype=np.float64)
    flat = array.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        up = float(loss_fn())
        flat[i] = orig - eps
        down = float(loss_fn())
        flat[i] = orig
        gflat[i] = (up - down) / (2 * eps)
    return grad


def rel_error(analytic, numeric) -> float:
    """||a - n|| / max(||a||, ||n||), zero when both vanish."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    scale = max(np.linalg.norm(a), np.linalg.norm(n))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(a - n) / scale)
