"""Frames, flows, synthetic scenes, augmentation and image-quality metrics."""
from .augment import FLIP_MODES, flip_augment
from .formats import FormatError, read_flo, read_ppm, write_flo, write_ppm
from .manifest import ManifestEntry, load_dataset, read_manifest, write_manifest
from .metrics import mean_finite, psnr, ssim
from .synthetic import (
    Sprite,
    SyntheticSceneSpec,
    generate_synthetic_sequence,
    induced_flow,
    random_scene,
    read_scene_spec,
    render_frame,
    scene_from_text,
    scene_to_text,
    scene_triplet,
    sprite_signed_distance,
    write_scene_spec,
)
from .triplet import Triplet, TripletSample

__all__ = [
    "FLIP_MODES",
    "FormatError",
    "ManifestEntry",
    "Sprite",
    "SyntheticSceneSpec",
    "Triplet",
    "TripletSample",
    "flip_augment",
    "generate_synthetic_sequence",
    "induced_flow",
    "load_dataset",
    "mean_finite",
    "psnr",
    "random_scene",
    "read_flo",
    "read_manifest",
    "read_ppm",
    "read_scene_spec",
    "render_frame",
    "scene_from_text",
    "scene_to_text",
    "scene_triplet",
    "sprite_signed_distance",
    "ssim",
    "write_flo",
    "write_manifest",
    "write_ppm",
    "write_scene_spec",
]
