"""Parameter bundle for one interpolation model and its shared forward path."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import ops
from .field import FieldParams, HeadParams, build_inputs, field_forward, input_dim, no_rep_head, normalize_variant
from .stem import EncoderParams, FusionParams, encode, gather_local_codes
from .tensor import Tensor, dtype_for, no_grad
from .warp import pixel_grid

RENDER_CHUNK = 4096


@dataclass(frozen=True)
class ModelConfig:
    channels: int = 64
    field_width: int = 256
    variant: str = "full"
    precision: int = 32
    skips: bool = True
    encoder_blocks: int = 2

    def __post_init__(self):
        object.__setattr__(self, "variant", normalize_variant(self.variant))
        if self.precision not in (32, 64):
            raise ValueError(f"precision must be 32 or 64, got {self.precision}")

    def to_dict(self) -> dict:
        return asdict(self)


class CureModel:
    def __init__(self, config: ModelConfig, encoder: EncoderParams, fusion: FusionParams, field: FieldParams | None = None, head: HeadParams | None = None):
        self.config = config
        self.encoder = encoder
        self.fusion = fusion
        self.field = field
        self.head = head

    @classmethod
    def init(cls, config: ModelConfig, seed: int = 0) -> CureModel:
        rng = np.random.default_rng(seed)
        dtype = dtype_for(config.precision)
        encoder = EncoderParams.init(rng, config.channels, config.encoder_blocks, dtype=dtype)
        fusion = FusionParams.init(rng, config.channels, dtype=dtype)
        if config.variant == "no_rep":
            return cls(config, encoder, fusion, head=HeadParams.init(rng, config.channels, dtype=dtype))
        dim = input_dim(config.channels, config.variant)
        field = FieldParams.init(rng, dim, config.field_width, skips=config.skips, dtype=dtype)
        return cls(config, encoder, fusion, field=field)

    @property
    def variant(self) -> str:
        return self.config.variant

    @property
    def dtype(self):
        return dtype_for(self.config.precision)

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        out = self.encoder.named_parameters() + self.fusion.named_parameters()
        if self.field is not None:
            out += self.field.named_parameters()
        if self.head is not None:
            out += self.head.named_parameters()
        return out

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def encode(self, frame0, frame1, flow01, flow10, t: float) -> Tensor:
        """Time-``t`` feature map (C, H, W); computed once per frame pair and ``t``."""
        return encode(frame0, frame1, flow01, flow10, t, self.encoder, self.fusion)

    def predict_pixels(self, xi: Tensor, pixels: np.ndarray, t: float) -> Tensor:
        """RGB predictions (N, 3) at integer (x, y) pixels of the time-``t`` frame."""
        _, h, w = xi.shape
        pixels = np.asarray(pixels, dtype=np.intp).reshape(-1, 2)
        if self.variant == "no_rep":
            img = no_rep_head(xi, self.head)
            rows = ops.reshape(ops.transpose(img, (1, 2, 0)), (h * w, 3))
            return ops.take_rows(rows, pixels[:, 1] * w + pixels[:, 0])
        codes = gather_local_codes(xi, pixels)
        return field_forward(build_inputs(pixels, t, codes, self.variant, h, w), self.field)

    def render(self, xi: Tensor, t: float, chunk: int = RENDER_CHUNK, workers: int = 1) -> np.ndarray:
        """Evaluate every pixel in row-major chunks; returns an HxWx3 array in [0, 1]."""
        _, h, w = xi.shape
        with no_grad():
            if self.variant == "no_rep":
                return no_rep_head(xi, self.head).data.transpose(1, 2, 0).astype(np.float64)
            grid = pixel_grid(h, w).astype(np.intp)
            out = np.empty((h * w, 3), dtype=np.float64)
            starts = list(range(0, h * w, chunk))

            def run(start):
                out[start : start + chunk] = self.predict_pixels(xi, grid[start : start + chunk], t).data

            if workers > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    list(pool.map(run, starts))
            else:
                for s in starts:
                    run(s)
        return out.reshape(h, w, 3)
