"""Procedural translating-sprite videos with exactly known optical flow.

Sprites move with constant velocity (pixels per frame) over a static
background and are composited in list order, so later sprites occlude
earlier ones.  Edges are anti-aliased from the signed distance to the sprite
boundary, which makes integer-velocity motion an exact pixel shift.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .triplet import Triplet, TripletSample

SHAPES = ("rectangle", "disk")
BACKGROUNDS = ("flat", "gradient", "waves", "checker")


@dataclass(frozen=True)
class Sprite:
    shape: str
    color: tuple[float, float, float]
    position: tuple[float, float]
    velocity: tuple[float, float]
    size: tuple[float, float] = (4.0, 4.0)  # half-extents; a disk uses size[0] as radius

    def center(self, time: float) -> tuple[float, float]:
        return (self.position[0] + time * self.velocity[0], self.position[1] + time * self.velocity[1])


@dataclass(frozen=True)
class SyntheticSceneSpec:
    height: int
    width: int
    sprites: tuple[Sprite, ...] = ()
    frame_count: int = 3
    seed: int = 0
    background: str = "waves"
    background_params: tuple[float, ...] = ()

    def validate(self) -> None:
        if self.height < 1 or self.width < 1:
            raise ValueError(f"canvas must be positive, got {self.height}x{self.width}")
        if self.frame_count < 3:
            raise ValueError(f"frame_count must be >= 3, got {self.frame_count}")
        if self.background not in BACKGROUNDS:
            raise ValueError(f"unknown background {self.background!r}; expected one of {BACKGROUNDS}")
        limit = min(self.height, self.width) / 4
        for i, s in enumerate(self.sprites):
            if s.shape not in SHAPES:
                raise ValueError(f"sprite {i}: unknown shape {s.shape!r}")
            if np.hypot(*s.velocity) > limit:
                raise ValueError(f"sprite {i}: speed {np.hypot(*s.velocity):.3g} exceeds min(H, W)/4 = {limit:g}")
            if not all(0.0 <= c <= 1.0 for c in s.color):
                raise ValueError(f"sprite {i}: colour components must lie in [0, 1]")


def _pixel_grid(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    ys, xs = np.mgrid[0:h, 0:w]
    return xs.astype(np.float64), ys.astype(np.float64)


def render_background(spec: SyntheticSceneSpec) -> np.ndarray:
    h, w = spec.height, spec.width
    xs, ys = _pixel_grid(h, w)
    p = spec.background_params
    if spec.background == "flat":
        color = np.array(p[:3] if len(p) >= 3 else (0.5, 0.5, 0.5))
        return np.broadcast_to(color, (h, w, 3)).copy()
    if spec.background == "gradient":
        c0 = np.array(p[0:3] if len(p) >= 6 else (0.15, 0.2, 0.3))
        c1 = np.array(p[3:6] if len(p) >= 6 else (0.7, 0.6, 0.4))
        a = (xs / max(w - 1, 1))[..., None]
        return (1 - a) * c0 + a * c1
    if spec.background == "checker":
        cell = p[0] if p else 4.0
        parity = (np.floor(xs / cell) + np.floor(ys / cell)) % 2
        return np.repeat((0.3 + 0.4 * parity)[..., None], 3, axis=2)
    # waves: a few seeded low-frequency sinusoids per channel
    base = p[0] if len(p) > 0 else 0.5
    amp = p[1] if len(p) > 1 else 0.25
    rng = np.random.default_rng(spec.seed)
    out = np.empty((h, w, 3))
    for ch in range(3):
        acc = np.zeros((h, w))
        for _ in range(3):
            cycles = rng.uniform(0.5, 2.0)
            angle = rng.uniform(0, np.pi)
            phase = rng.uniform(0, 2 * np.pi)
            proj = (np.cos(angle) * xs / w + np.sin(angle) * ys / h) * 2 * np.pi * cycles
            acc += np.sin(proj + phase)
        out[..., ch] = base + amp * acc / 3
    return np.clip(out, 0.0, 1.0)


def sprite_signed_distance(sprite: Sprite, time: float, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    cx, cy = sprite.center(time)
    dx, dy = xs - cx, ys - cy
    if sprite.shape == "disk":
        return np.hypot(dx, dy) - sprite.size[0]
    qx = np.abs(dx) - sprite.size[0]
    qy = np.abs(dy) - sprite.size[1]
    outside = np.hypot(np.maximum(qx, 0), np.maximum(qy, 0))
    return outside + np.minimum(np.maximum(qx, qy), 0)


def sprite_coverage(sprite: Sprite, time: float, h: int, w: int) -> np.ndarray:
    xs, ys = _pixel_grid(h, w)
    return np.clip(0.5 - sprite_signed_distance(sprite, time, xs, ys), 0.0, 1.0)


def render_frame(spec: SyntheticSceneSpec, time: float) -> np.ndarray:
    """Render the scene at a (possibly fractional) frame index."""
    frame = render_background(spec)
    for sprite in spec.sprites:
        cov = sprite_coverage(sprite, time, spec.height, spec.width)[..., None]
        frame = frame * (1 - cov) + np.asarray(sprite.color) * cov
    return frame


def induced_flow(spec: SyntheticSceneSpec, t_from: float, t_to: float) -> np.ndarray:
    """Exact flow from frame ``t_from`` to ``t_to``: the top sprite's displacement, else zero."""
    flow = np.zeros((spec.height, spec.width, 2), dtype=np.float32)
    dt = t_to - t_from
    for sprite in spec.sprites:
        mask = sprite_coverage(sprite, t_from, spec.height, spec.width) >= 0.5
        flow[mask] = (sprite.velocity[0] * dt, sprite.velocity[1] * dt)
    return flow


def generate_synthetic_sequence(spec: SyntheticSceneSpec):
    """Render ``frame_count`` frames and the exact (forward, backward) flow per consecutive pair."""
    spec.validate()
    frames = [render_frame(spec, k) for k in range(spec.frame_count)]
    flows = [(induced_flow(spec, k, k + 1), induced_flow(spec, k + 1, k)) for k in range(spec.frame_count - 1)]
    return frames, flows


def random_scene(height: int, width: int, n_sprites: int = 2, frame_count: int = 3, seed: int = 0, max_speed: float | None = None) -> SyntheticSceneSpec:
    """Draw a scene with random sprites; integer velocities keep motion an exact shift."""
    rng = np.random.default_rng(seed)
    limit = int(max_speed if max_speed is not None else min(height, width) / 8)
    sprites = []
    for _ in range(n_sprites):
        shape = SHAPES[int(rng.integers(0, 2))]
        half = float(rng.uniform(0.12, 0.22) * min(height, width))
        vel = (float(rng.integers(-limit, limit + 1)), float(rng.integers(-limit, limit + 1)))
        pos = (float(rng.uniform(0.3, 0.7) * width), float(rng.uniform(0.3, 0.7) * height))
        color = tuple(float(c) for c in rng.uniform(0.05, 0.95, size=3))
        sprites.append(Sprite(shape, color, pos, vel, (half, half * float(rng.uniform(0.7, 1.3)))))
    return SyntheticSceneSpec(height, width, tuple(sprites), frame_count=frame_count, seed=seed)


# Scene spec text files: one ``key = value`` per line, '#' comments.
#   height, width, frame_count, seed     integers
#   background                           flat | gradient | waves | checker
#   background.params                    comma-separated floats
#   sprite.<i>.shape                     rectangle | disk
#   sprite.<i>.color                     r,g,b in [0, 1]
#   sprite.<i>.position                  x,y (pixels, frame 0)
#   sprite.<i>.velocity                  u,v (pixels per frame)
#   sprite.<i>.size                      half-width,half-height (disk: radius)


def parse_key_values(text: str, source: str = "<text>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ValueError(f"{source}:{lineno}: empty key")
        out[key] = value
    return out


def _floats(value: str) -> tuple[float, ...]:
    return tuple(float(v) for v in value.split(",") if v.strip())


def scene_from_text(text: str, source: str = "<text>") -> SyntheticSceneSpec:
    kv = parse_key_values(text, source)
    sprite_fields: dict[int, dict[str, str]] = {}
    for key, value in kv.items():
        if key.startswith("sprite."):
            parts = key.split(".")
            if len(parts) != 3 or not parts[1].isdigit():
                raise ValueError(f"{source}: malformed sprite key {key!r}")
            sprite_fields.setdefault(int(parts[1]), {})[parts[2]] = value
    known = {"height", "width", "frame_count", "seed", "background", "background.params"}
    unknown = [k for k in kv if not k.startswith("sprite.") and k not in known]
    if unknown:
        raise ValueError(f"{source}: unknown keys {unknown}")
    sprites = []
    for idx in sorted(sprite_fields):
        f = sprite_fields[idx]
        try:
            sprites.append(
                Sprite(
                    shape=f.get("shape", "rectangle"),
                    color=_floats(f["color"]),  # type: ignore[arg-type]
                    position=_floats(f["position"]),  # type: ignore[arg-type]
                    velocity=_floats(f.get("velocity", "0,0")),  # type: ignore[arg-type]
                    size=_floats(f.get("size", "4,4")),  # type: ignore[arg-type]
                )
            )
        except KeyError as exc:
            raise ValueError(f"{source}: sprite {idx} is missing {exc.args[0]!r}") from None
    try:
        spec = SyntheticSceneSpec(
            height=int(kv["height"]),
            width=int(kv["width"]),
            sprites=tuple(sprites),
            frame_count=int(kv.get("frame_count", 3)),
            seed=int(kv.get("seed", 0)),
            background=kv.get("background", "waves"),
            background_params=_floats(kv.get("background.params", "")),
        )
    except KeyError as exc:
        raise ValueError(f"{source}: missing required key {exc.args[0]!r}") from None
    spec.validate()
    return spec


def scene_to_text(spec: SyntheticSceneSpec) -> str:
    def fmt(vals):
        return ",".join(repr(float(v)) for v in vals)

    lines = [
        f"height = {spec.height}",
        f"width = {spec.width}",
        f"frame_count = {spec.frame_count}",
        f"seed = {spec.seed}",
        f"background = {spec.background}",
    ]
    if spec.background_params:
        lines.append(f"background.params = {fmt(spec.background_params)}")
    for i, s in enumerate(spec.sprites):
        lines += [
            f"sprite.{i}.shape = {s.shape}",
            f"sprite.{i}.color = {fmt(s.color)}",
            f"sprite.{i}.position = {fmt(s.position)}",
            f"sprite.{i}.velocity = {fmt(s.velocity)}",
            f"sprite.{i}.size = {fmt(s.size)}",
        ]
    return "\n".join(lines) + "\n"


def read_scene_spec(path) -> SyntheticSceneSpec:
    with open(path) as f:
        return scene_from_text(f.read(), os.fspath(path))


def write_scene_spec(path, spec: SyntheticSceneSpec) -> None:
    with open(path, "w") as f:
        f.write(scene_to_text(spec))


def scene_triplet(spec: SyntheticSceneSpec, start: float = 0.0, stop: float = 2.0, t_middle: float = 0.5, name: str = ""):
    """Triplet (frame ``start``, frame at ``t_middle``, frame ``stop``) with exact outer flows."""
    mid = start + t_middle * (stop - start)
    triplet = Triplet(render_frame(spec, start), render_frame(spec, mid), render_frame(spec, stop), t_middle)
    return TripletSample(triplet, induced_flow(spec, start, stop), induced_flow(spec, stop, start), name)
