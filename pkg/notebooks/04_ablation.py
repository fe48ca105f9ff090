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
# # Ablation: what the coordinates and the field network buy
#
# Three variants share the encoder and fusion network:
#
# * ``full``: the field network sees normalised ``(x, y, t)`` plus the 3x3
#   local feature code.
# * ``no_crd``: the same network without the coordinates.
# * ``no_rep``: no field network at all; a 3x3 convolution head turns the
#   fused features straight into RGB.
#
# At this scale the ordering between variants is not guaranteed, so the
# harness reports numbers without ranking them.

# %%
import os
import tempfile
from pathlib import Path

from cure.dataio import random_scene, scene_triplet
from cure.pipeline import run_ablation
from cure.trainer import TrainConfig

EPOCHS = int(os.environ.get("CURE_DEMO_EPOCHS", 80))

dataset = [scene_triplet(random_scene(24, 24, n_sprites=2, seed=s), name=f"scene{s}") for s in range(3)]
config = TrainConfig(epochs=EPOCHS, initial_lr=2e-3, lr_decay_per_epoch=0.99, augmentation=True, channels=8, field_width=64, pixels_per_batch=512)
out = Path(tempfile.mkdtemp())
reports = run_ablation(dataset, config, out)

# %%
for variant, report in reports.items():
    print(f"{variant:7s} PSNR {report.mean_psnr:6.2f} dB  SSIM {report.mean_ssim:.4f}")
print((out / "ablation.csv").read_text())
