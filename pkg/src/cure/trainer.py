"""Joint optimisation of encoder, fusion and field parameters, and checkpoints."""
from __future__ import annotations

import json
import logging
import math
import os
import struct
import zlib
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import ops
from .dataio.augment import FLIP_MODES, flip_augment
from .dataio.synthetic import parse_key_values
from .dataio.triplet import TripletSample
from .field import no_rep_head, normalize_variant
from .model import CureModel, ModelConfig
from .optim import AdamState, adam_step
from .tensor import Tensor

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"CURECKPT"
CHECKPOINT_VERSION = 1


class DivergenceError(RuntimeError):
    def __init__(self, epoch: int, step: int, value: float):
        super().__init__(f"loss became non-finite ({value}) at epoch {epoch}, step {step}")
        self.epoch = epoch
        self.step = step
        self.value = value


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 70
    initial_lr: float = 1e-4
    lr_decay_per_epoch: float = 0.95
    pixels_per_batch: int = 1024
    seed: int = 0
    variant: str = "full"
    precision: int = 32
    augmentation: bool = True
    channels: int = 64
    field_width: int = 256
    t_train: float | None = None  # None: each triplet's own t_middle
    flow_provider: str = "file"
    log_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", normalize_variant(self.variant))
        if not 0 < self.lr_decay_per_epoch <= 1:
            raise ValueError(f"lr_decay_per_epoch must lie in (0, 1], got {self.lr_decay_per_epoch}")
        if self.pixels_per_batch < 1:
            raise ValueError(f"pixels_per_batch must be >= 1, got {self.pixels_per_batch}")
        if self.initial_lr <= 0:
            raise ValueError(f"initial_lr must be positive, got {self.initial_lr}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")

    def lr_at(self, epoch: int) -> float:
        return self.initial_lr * self.lr_decay_per_epoch**epoch

    def model_config(self) -> ModelConfig:
        return ModelConfig(channels=self.channels, field_width=self.field_width, variant=self.variant, precision=self.precision)

    def to_dict(self) -> dict:
        return asdict(self)


_CONFIG_KEYS = {f.name: f for f in fields(TrainConfig)}
_CONFIG_ALIASES = {"flow.provider": "flow_provider"}


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def config_from_text(text: str, source: str = "<text>", base: TrainConfig | None = None) -> TrainConfig:
    """Parse a flat ``key = value`` config whose keys mirror :class:`TrainConfig`."""
    values = {}
    for key, raw in parse_key_values(text, source).items():
        name = _CONFIG_ALIASES.get(key, key)
        if name not in _CONFIG_KEYS:
            raise ValueError(f"{source}: unknown config key {key!r}")
        default = getattr(TrainConfig, name, None)
        if name == "augmentation":
            values[name] = _parse_bool(raw)
        elif name == "t_train":
            values[name] = None if raw.lower() == "none" else float(raw)
        elif name in ("variant", "flow_provider", "log_path"):
            values[name] = raw
        elif isinstance(default, int):
            values[name] = int(raw)
        else:
            values[name] = float(raw)
    return replace(base or TrainConfig(), **values)


def read_config(path, base: TrainConfig | None = None) -> TrainConfig:
    with open(path) as f:
        return config_from_text(f.read(), os.fspath(path), base)


def config_to_text(config: TrainConfig) -> str:
    lines = []
    for key, value in config.to_dict().items():
        if value is None:
            continue
        if key == "flow_provider":
            key = "flow.provider"
        if isinstance(value, bool):
            value = "on" if value else "off"
        lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
    return "\n".join(lines) + "\n"


@dataclass
class Checkpoint:
    model: CureModel
    adam: AdamState
    config: TrainConfig
    epoch: int = 0
    epoch_losses: tuple[float, ...] = ()


def sample_pixels(rng: np.random.Generator, height: int, width: int, n: int) -> np.ndarray:
    """``n`` distinct pixels drawn uniformly (all of them when ``n >= H*W``), as (x, y)."""
    total = height * width
    flat = np.arange(total) if n >= total else rng.choice(total, size=n, replace=False)
    return np.stack([flat % width, flat // width], axis=1).astype(np.intp)


def pixel_batch_loss(model: CureModel, sample: TripletSample, pixels: np.ndarray, t: float | None = None, xi: Tensor | None = None) -> Tensor:
    """Mean squared colour error over ``pixels`` of the middle frame.

    The encoding pass runs once and is shared by every pixel; the ``no_rep``
    variant is scored on the full frame instead.
    """
    pixels = np.asarray(pixels, dtype=np.intp).reshape(-1, 2)
    if len(pixels) == 0:
        raise ValueError("pixel sample is empty")
    tri = sample.triplet
    t = tri.t_middle if t is None else t
    if xi is None:
        xi = model.encode(tri.first, tri.last, sample.flow_fwd, sample.flow_bwd, t)
    h, w = tri.shape
    if model.variant == "no_rep":
        pred = no_rep_head(xi, model.head)
        return ops.mse(pred, tri.middle.transpose(2, 0, 1))
    if pixels[:, 0].min() < 0 or pixels[:, 0].max() >= w or pixels[:, 1].min() < 0 or pixels[:, 1].max() >= h:
        raise ValueError(f"pixel sample leaves the {h}x{w} frame")
    pred = model.predict_pixels(xi, pixels, t)
    target = tri.middle[pixels[:, 1], pixels[:, 0]]
    return ops.mse(pred, target)


def new_checkpoint(config: TrainConfig) -> Checkpoint:
    model = CureModel.init(config.model_config(), seed=config.seed)
    return Checkpoint(model, AdamState.for_params(model.parameters()), config, epoch=0)


def train(dataset, config: TrainConfig, resume: Checkpoint | None = None, log_path=None, on_epoch=None) -> Checkpoint:
    """Train for ``config.epochs`` epochs (continuing from ``resume`` if given).

    Each epoch shuffles the triplets, optionally flips each one, and takes
    one Adam step per triplet on ``pixels_per_batch`` sampled pixels.  All
    randomness for epoch ``e`` comes from a generator seeded by
    ``(seed, e)``, so a resumed run replays the uninterrupted one exactly.
    """
    dataset = list(dataset)
    if not dataset:
        raise ValueError("training dataset is empty")
    ckpt = resume if resume is not None else new_checkpoint(config)
    ckpt.config = config
    model, adam = ckpt.model, ckpt.adam
    params = model.parameters()
    log_path = log_path or config.log_path
    losses = list(ckpt.epoch_losses)
    if log_path and ckpt.epoch == 0:
        open(log_path, "w").close()

    for epoch in range(ckpt.epoch, config.epochs):
        rng = np.random.default_rng([config.seed, epoch])
        lr = config.lr_at(epoch)
        order = rng.permutation(len(dataset))
        total = 0.0
        for step, idx in enumerate(order):
            sample = dataset[idx]
            if config.augmentation:
                mode = FLIP_MODES[int(rng.integers(len(FLIP_MODES)))]
                tri, flows = flip_augment(sample.triplet, sample.flows, mode)
                sample = TripletSample(tri, flows[0], flows[1], sample.name)
            h, w = sample.triplet.shape
            pixels = sample_pixels(rng, h, w, config.pixels_per_batch)
            model.zero_grad()
            loss = pixel_batch_loss(model, sample, pixels, config.t_train)
            value = loss.item()
            if not math.isfinite(value):
                raise DivergenceError(epoch, step, value)
            loss.backward()
            adam_step(params, [p.grad for p in params], adam, lr)
            total += value
        mean_loss = total / len(order)
        losses.append(mean_loss)
        ckpt.epoch = epoch + 1
        ckpt.epoch_losses = tuple(losses)
        log.debug("epoch %d lr %.6g loss %.6g", epoch, lr, mean_loss)
        if log_path:
            with open(log_path, "a") as f:
                f.write(f"{epoch},{lr!r},{mean_loss!r}\n")
        if on_epoch is not None:
            on_epoch(epoch, lr, mean_loss)
    model.zero_grad()
    return ckpt


# Checkpoint layout (all integers little-endian):
#   8 bytes   magic b"CURECKPT"
#   u32       format version
#   u64       header length N
#   N bytes   UTF-8 JSON header: configs, epoch, Adam scalars, blob CRC32 and
#             a tensor table [{name, dtype, shape, offset, nbytes}, ...]
#   blob      raw little-endian tensor data at the recorded offsets
# Tensor names: "param/<name>", "adam.m/<name>", "adam.v/<name>".


def _tensor_table(ckpt: Checkpoint):
    named = ckpt.model.named_parameters()
    entries = [(f"param/{n}", p.data) for n, p in named]
    entries += [(f"adam.m/{n}", m) for (n, _), m in zip(named, ckpt.adam.first_moment)]
    entries += [(f"adam.v/{n}", v) for (n, _), v in zip(named, ckpt.adam.second_moment)]
    return entries


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    table, chunks, offset = [], [], 0
    for name, arr in _tensor_table(ckpt):
        le = np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder("<"))
        raw = le.tobytes()
        table.append({"name": name, "dtype": le.dtype.str, "shape": list(arr.shape), "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    blob = b"".join(chunks)
    header = {
        "model_config": ckpt.model.config.to_dict(),
        "train_config": ckpt.config.to_dict(),
        "epoch": ckpt.epoch,
        "epoch_losses": list(ckpt.epoch_losses),
        "adam": {"step_count": ckpt.adam.step_count, "beta1": ckpt.adam.beta1, "beta2": ckpt.adam.beta2, "eps": ckpt.adam.eps},
        "blob_size": len(blob),
        "blob_crc32": zlib.crc32(blob),
        "tensors": table,
    }
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<IQ", CHECKPOINT_VERSION, len(hbytes)))
        f.write(hbytes)
        f.write(blob)


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as f:
        buf = f.read()
    src = os.fspath(path)
    if buf[:8] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{src}: not a checkpoint (bad magic at byte 0)")
    if len(buf) < 20:
        raise CheckpointError(f"{src}: truncated checkpoint preamble ({len(buf)} bytes)")
    version, hlen = struct.unpack("<IQ", buf[8:20])
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{src}: checkpoint format version {version}, expected {CHECKPOINT_VERSION}")
    if len(buf) < 20 + hlen:
        raise CheckpointError(f"{src}: truncated checkpoint header (need {20 + hlen} bytes, have {len(buf)})")
    try:
        header = json.loads(buf[20 : 20 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{src}: corrupt checkpoint header: {exc}") from None
    blob = buf[20 + hlen :]
    if len(blob) != header["blob_size"]:
        raise CheckpointError(f"{src}: truncated tensor data (expected {header['blob_size']} bytes, found {len(blob)})")
    if zlib.crc32(blob) != header["blob_crc32"]:
        raise CheckpointError(f"{src}: tensor data checksum mismatch")

    arrays = {}
    for e in header["tensors"]:
        raw = blob[e["offset"] : e["offset"] + e["nbytes"]]
        arrays[e["name"]] = np.frombuffer(raw, dtype=np.dtype(e["dtype"])).reshape(e["shape"]).astype(np.dtype(e["dtype"]).newbyteorder("="))

    model = CureModel.init(ModelConfig(**header["model_config"]))
    named = model.named_parameters()
    try:
        for name, p in named:
            arr = arrays[f"param/{name}"]
            if arr.shape != p.shape:
                raise CheckpointError(f"{src}: tensor {name} has shape {arr.shape}, model expects {p.shape}")
            p.data = arr.copy()
        a = header["adam"]
        adam = AdamState(
            first_moment=[arrays[f"adam.m/{n}"].copy() for n, _ in named],
            second_moment=[arrays[f"adam.v/{n}"].copy() for n, _ in named],
            step_count=a["step_count"],
            beta1=a["beta1"],
            beta2=a["beta2"],
            eps=a["eps"],
        )
    except KeyError as exc:
        raise CheckpointError(f"{src}: missing tensor {exc.args[0]!r}") from None
    config = TrainConfig(**header["train_config"])
    return Checkpoint(model, adam, config, epoch=header["epoch"], epoch_losses=tuple(header["epoch_losses"]))


def checkpoints_equal(a: Checkpoint, b: Checkpoint) -> bool:
    """Bit-level equality of parameters, optimizer moments and bookkeeping."""
    ta, tb = _tensor_table(a), _tensor_table(b)
    if [n for n, _ in ta] != [n for n, _ in tb]:
        return False
    if any(x.dtype != y.dtype or x.shape != y.shape or x.tobytes() != y.tobytes() for (_, x), (_, y) in zip(ta, tb)):
        return False
    sa, sb = a.adam, b.adam
    return (
        a.epoch == b.epoch
        and a.epoch_losses == b.epoch_losses
        and a.config == b.config
        and a.model.config == b.model.config
        and (sa.step_count, sa.beta1, sa.beta2, sa.eps) == (sb.step_count, sb.beta1, sb.beta2, sb.eps)
    )
