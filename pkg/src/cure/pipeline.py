"""Inference, evaluation and the ablation harness."""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dataio.metrics import mean_finite, psnr, ssim
from .dataio.triplet import TripletSample
from .field import VARIANTS, input_dim
from .model import CureModel
from .motion import bilateral_motion, get_flows
from .stem import extract_features, fuse
from .tensor import no_grad
from .trainer import TrainConfig, save_checkpoint, train
from .warp import warp_quartet


@dataclass
class InterpolationRequest:
    """Two frames, the times to synthesise, and where the flows come from.

    Either pass ``flows = (phi_01, phi_10)`` directly or a ``provider`` (plus
    optional ``context``) understood by :func:`cure.motion.get_flows`.
    """

    frame0: np.ndarray
    frame1: np.ndarray
    t_values: tuple[float, ...] = (0.5,)
    flows: tuple[np.ndarray, np.ndarray] | None = None
    provider: object = None
    context: object = None
    checkpoint_path: str | None = None

    def __post_init__(self):
        self.t_values = tuple(float(t) for t in self.t_values)
        if not self.t_values:
            raise ValueError("at least one t value is required")
        for t in self.t_values:
            _check_t(t)
        if np.shape(self.frame0) != np.shape(self.frame1):
            raise ValueError(f"frames differ in shape: {np.shape(self.frame0)} vs {np.shape(self.frame1)}")

    def resolve_flows(self) -> tuple[np.ndarray, np.ndarray]:
        if self.flows is not None:
            h, w = np.shape(self.frame0)[:2]
            for f in self.flows:
                if np.shape(f) != (h, w, 2):
                    raise ValueError(f"flow shape {np.shape(f)} does not match {h}x{w} frames")
            return self.flows
        if self.provider is None:
            raise ValueError("request has neither flows nor a flow provider")
        return get_flows(self.provider, self.frame0, self.frame1, self.context)


def _check_t(t: float) -> None:
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie strictly inside (0, 1), got {t}")


def interpolate(model: CureModel, req: InterpolationRequest, workers: int = 1) -> list[np.ndarray]:
    """Frames for every ``t`` in the request; features are extracted once per pair."""
    flow01, flow10 = req.resolve_flows()
    with no_grad():
        f0 = extract_features(req.frame0, model.encoder)
        f1 = extract_features(req.frame1, model.encoder)
        out = []
        for t in req.t_values:
            xi = fuse(warp_quartet(f0, f1, bilateral_motion(flow01, flow10, t)), model.fusion)
            out.append(model.render(xi, t, workers=workers))
    return out


def interpolate_frame(model: CureModel, req: InterpolationRequest, t: float, workers: int = 1) -> np.ndarray:
    _check_t(t)
    return interpolate(model, replace(req, t_values=(t,)), workers=workers)[0]


@dataclass
class EvalReport:
    variant: str
    names: list[str] = field(default_factory=list)
    psnr_db: list[float] = field(default_factory=list)
    ssim: list[float] = field(default_factory=list)

    def add(self, name: str, p: float, s: float) -> None:
        self.names.append(name)
        self.psnr_db.append(float(p))
        self.ssim.append(float(s))

    @property
    def mean_psnr(self) -> float:
        return mean_finite(self.psnr_db)[0]

    @property
    def infinite_count(self) -> int:
        return mean_finite(self.psnr_db)[1]

    @property
    def mean_ssim(self) -> float:
        return float(np.mean(self.ssim)) if self.ssim else math.nan

    def __eq__(self, other) -> bool:
        if not isinstance(other, EvalReport):
            return NotImplemented
        return (self.variant, self.names, self.psnr_db, self.ssim) == (other.variant, other.names, other.psnr_db, other.ssim)

    def write_csv(self, path) -> None:
        """Header ``frame,psnr_db,ssim``, one row per frame, then ``#`` summary lines."""
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["frame", "psnr_db", "ssim"])
            for n, p, s in zip(self.names, self.psnr_db, self.ssim):
                writer.writerow([n, repr(p), repr(s)])
            f.write(f"# variant={self.variant}\n")
            f.write(f"# mean_psnr_db={self.mean_psnr!r}\n")
            f.write(f"# mean_ssim={self.mean_ssim!r}\n")
            f.write(f"# infinite_psnr_count={self.infinite_count}\n")

    @classmethod
    def read_csv(cls, path) -> EvalReport:
        with open(path, newline="") as f:
            lines = f.read().splitlines()
        meta = dict(line[1:].strip().split("=", 1) for line in lines if line.startswith("#"))
        rows = list(csv.reader(line for line in lines if line and not line.startswith("#")))
        if not rows or rows[0] != ["frame", "psnr_db", "ssim"]:
            raise ValueError(f"{os.fspath(path)}: report header must be frame,psnr_db,ssim")
        report = cls(meta.get("variant", ""))
        for name, p, s in rows[1:]:
            report.add(name, float(p), float(s))
        return report


def evaluate(model: CureModel, dataset, t: float | None = None, oracle: bool = False, workers: int = 1) -> EvalReport:
    """Interpolate each middle frame and score it; ``oracle`` substitutes the ground truth."""
    report = EvalReport(model.variant)
    for i, sample in enumerate(dataset):
        tri = sample.triplet
        tt = tri.t_middle if t is None else t
        if oracle:
            pred = tri.middle
        else:
            req = InterpolationRequest(tri.first, tri.last, (tt,), flows=sample.flows)
            pred = interpolate(model, req, workers=workers)[0]
        report.add(sample.name or f"triplet{i:04d}", psnr(pred, tri.middle), ssim(pred, tri.middle))
    return report


ABLATION_FIELDS = ("variant", "mean_psnr_db", "mean_ssim", "infinite_psnr_count", "parameter_count", "field_input_dim")


def run_ablation(dataset: list[TripletSample], base_config: TrainConfig, out_dir=None) -> dict[str, EvalReport]:
    """Train and evaluate every variant with the same seed and budget.

    Writes one report and checkpoint per variant plus ``ablation.csv`` when
    ``out_dir`` is given.  No ordering between variants is asserted.
    """
    reports: dict[str, EvalReport] = {}
    rows = []
    for variant in VARIANTS:
        config = replace(base_config, variant=variant, log_path=None)
        log_path = os.path.join(out_dir, f"train_{variant}.log") if out_dir else None
        ckpt = train(dataset, config, log_path=log_path)
        report = evaluate(ckpt.model, dataset)
        reports[variant] = report
        dim = input_dim(config.channels, variant) if variant != "no_rep" else 0
        rows.append([variant, repr(report.mean_psnr), repr(report.mean_ssim), report.infinite_count, ckpt.model.parameter_count(), dim])
        if out_dir:
            report.write_csv(Path(out_dir) / f"report_{variant}.csv")
            save_checkpoint(Path(out_dir) / f"model_{variant}.ckpt", ckpt)
    if out_dir:
        with open(Path(out_dir) / "ablation.csv", "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(ABLATION_FIELDS)
            writer.writerows(rows)
    return reports
