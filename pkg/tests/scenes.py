"""Scenes and configurations shared by the training-based tests."""
from cure.dataio import Sprite, SyntheticSceneSpec, random_scene, scene_triplet
from cure.trainer import TrainConfig

# Desk-scale test configuration: small widths, faster decay than the
# 0.95/epoch default so that one triplet at one step per epoch converges.
TEST_CONFIG = TrainConfig(
    epochs=300,
    initial_lr=2e-3,
    lr_decay_per_epoch=0.995,
    pixels_per_batch=1024,
    seed=0,
    augmentation=False,
    channels=8,
    field_width=128,
)

TINY_CONFIG = TrainConfig(epochs=3, initial_lr=1e-3, pixels_per_batch=32, seed=5, channels=4, field_width=16)


def overfit_scene() -> SyntheticSceneSpec:
    return SyntheticSceneSpec(
        32,
        32,
        (
            Sprite("disk", (0.9, 0.2, 0.1), (10.0, 14.0), (2.0, 1.0), (6.0, 6.0)),
            Sprite("rectangle", (0.1, 0.3, 0.9), (20.0, 20.0), (-1.0, 0.0), (5.0, 4.0)),
        ),
        seed=0,
    )


def five_frame_scene() -> SyntheticSceneSpec:
    return SyntheticSceneSpec(
        32,
        32,
        (
            Sprite("disk", (0.9, 0.2, 0.1), (10.0, 12.0), (1.0, 1.0), (6.0, 6.0)),
            Sprite("rectangle", (0.1, 0.3, 0.9), (20.0, 20.0), (-1.0, 0.0), (5.0, 4.0)),
        ),
        frame_count=5,
        seed=0,
    )


def overfit_sample():
    return scene_triplet(overfit_scene(), 0, 2, 0.5, name="overfit")


def wide_sample():
    """Frames 0 and 4 of the five-frame scene; the middle is frame 2."""
    return scene_triplet(five_frame_scene(), 0, 4, 0.5, name="wide")


def tiny_dataset(n=2, size=8):
    return [scene_triplet(random_scene(size, size, seed=s), name=f"s{s}") for s in range(n)]
