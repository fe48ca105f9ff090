# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # The tensor core
#
# Every network in the package runs on a small reverse-mode autodiff
# library.  This notebook builds a tiny graph, checks its gradients against
# finite differences, and looks at the bilinear sampler that powers warping.

# %%
import numpy as np

from cure import ops
from cure.tensor import Tensor, precision

rng = np.random.default_rng(0)

# %% [markdown]
# ## A two-layer perceptron
#
# Gradient checks are run in 64-bit; training defaults to 32-bit.

# %%
with precision(64):
    x = Tensor(rng.standard_normal((5, 4)))
    w1 = Tensor(rng.standard_normal((4, 6)), requires_grad=True)
    w2 = Tensor(rng.standard_normal((6, 3)), requires_grad=True)
    target = rng.standard_normal((5, 3))

    def loss():
        return ops.mse(ops.linear(ops.relu(ops.linear(x, w1)), w2), target)

    loss().backward()

    eps = 1e-6
    numeric = np.zeros_like(w1.data)
    for idx in np.ndindex(w1.shape):
        orig = w1.data[idx]
        w1.data[idx] = orig + eps
        up = loss().item()
        w1.data[idx] = orig - eps
        down = loss().item()
        w1.data[idx] = orig
        numeric[idx] = (up - down) / (2 * eps)

print("max |analytic - numeric|:", np.abs(w1.grad - numeric).max())

# %% [markdown]
# ## Bilinear sampling
#
# Pixel centres sit on integer coordinates, x to the right and y down.
# Samples outside the map are clamped to the nearest edge.

# %%
fmap = Tensor(np.arange(12.0).reshape(1, 3, 4))
coords = np.array([[1.0, 1.0], [1.5, 1.0], [1.5, 1.5], [-3.0, 0.0], [9.0, 2.0]])
print(fmap.data[0])
print(ops.grid_sample_bilinear(fmap, coords).data.ravel())

# %% [markdown]
# The sampler is also differentiable with respect to the coordinates, which
# is what the gradient tests exercise even though flows themselves are
# treated as constants during training.

# %%
with precision(64):
    m = Tensor(rng.standard_normal((1, 4, 4)), requires_grad=True)
    c = Tensor(np.array([[1.3, 2.6]]), requires_grad=True)
    ops.sum(ops.grid_sample_bilinear(m, c)).backward()
print("d sample / d (x, y):", c.grad)
