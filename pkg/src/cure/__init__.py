"""Conditional neural-field video frame interpolation on a small numpy autodiff core."""
from .model import CureModel, ModelConfig
from .tensor import Tensor, backward, no_grad, precision

__version__ = "0.1.0"

__all__ = ["CureModel", "ModelConfig", "Tensor", "backward", "no_grad", "precision"]
