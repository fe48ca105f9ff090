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
# # Training a model and interpolating at arbitrary times
#
# A single model is trained on frames 0, 2 and 4 of a five-frame scene,
# always at ``t = 0.5``.  Afterwards it is asked for ``t = 0.25`` and
# ``t = 0.75``, frames it never saw during training.

# %%
import os
import tempfile
from pathlib import Path

from cure.dataio import Sprite, SyntheticSceneSpec, psnr, render_frame, scene_triplet, ssim
from cure.pipeline import InterpolationRequest, evaluate, interpolate
from cure.trainer import TrainConfig, load_checkpoint, save_checkpoint, train

EPOCHS = int(os.environ.get("CURE_DEMO_EPOCHS", 300))

spec = SyntheticSceneSpec(
    32,
    32,
    (
        Sprite("disk", (0.9, 0.2, 0.1), (10.0, 12.0), (1.0, 1.0), (6.0, 6.0)),
        Sprite("rectangle", (0.1, 0.3, 0.9), (20.0, 20.0), (-1.0, 0.0), (5.0, 4.0)),
    ),
    frame_count=5,
)
sample = scene_triplet(spec, 0, 4, 0.5, name="wide")

# %% [markdown]
# The default configuration matches the full-size model (64 feature
# channels, 256-wide field network, decay 0.95 per epoch).  For a single
# triplet on a laptop we shrink the widths and decay more slowly.

# %%
config = TrainConfig(
    epochs=EPOCHS,
    initial_lr=2e-3,
    lr_decay_per_epoch=0.995,
    augmentation=False,
    channels=8,
    field_width=128,
)
losses = []
ckpt = train([sample], config, on_epoch=lambda e, lr, loss: losses.append(loss))
print(f"first epoch loss {losses[0]:.4f}, last {losses[-1]:.6f}")

# %%
tri = sample.triplet
req = InterpolationRequest(tri.first, tri.last, (0.25, 0.5, 0.75), flows=sample.flows)
for t, frame in zip(req.t_values, interpolate(ckpt.model, req)):
    truth = render_frame(spec, 4 * t)
    print(f"t={t:.2f}  PSNR {psnr(frame, truth):6.2f} dB  SSIM {ssim(frame, truth):.4f}")

# %% [markdown]
# Checkpoints are a versioned little-endian binary file and reload
# bit-exactly, optimizer state included.

# %%
path = Path(tempfile.mkdtemp()) / "model.ckpt"
save_checkpoint(path, ckpt)
report = evaluate(load_checkpoint(path).model, [sample])
print(report.variant, f"{report.mean_psnr:.2f} dB", f"{report.mean_ssim:.4f}")
