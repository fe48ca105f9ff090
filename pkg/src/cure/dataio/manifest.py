"""Dataset manifests: one CSV row per triplet.

Header ``first,middle,last,flow_fwd,flow_bwd,t``; relative paths resolve
against the manifest's directory.  ``flow_fwd`` maps first -> last and
``flow_bwd`` maps last -> first.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path

from .formats import FormatError, read_flo, read_ppm
from .triplet import Triplet, TripletSample

MANIFEST_FIELDS = ("first", "middle", "last", "flow_fwd", "flow_bwd", "t")


@dataclass(frozen=True)
class ManifestEntry:
    first: str
    middle: str
    last: str
    flow_fwd: str
    flow_bwd: str
    t: float = 0.5


def write_manifest(path, entries) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(MANIFEST_FIELDS)
        for e in entries:
            writer.writerow([e.first, e.middle, e.last, e.flow_fwd, e.flow_bwd, repr(float(e.t))])


def read_manifest(path) -> list[ManifestEntry]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or tuple(c.strip() for c in rows[0]) != MANIFEST_FIELDS:
        raise FormatError(f"manifest header must be {','.join(MANIFEST_FIELDS)}", path, 0)
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(MANIFEST_FIELDS):
            raise FormatError(f"line {lineno}: expected {len(MANIFEST_FIELDS)} fields, got {len(row)}", path)
        try:
            t = float(row[5])
        except ValueError:
            raise FormatError(f"line {lineno}: bad t value {row[5]!r}", path) from None
        entries.append(ManifestEntry(*(c.strip() for c in row[:5]), t=t))
    if not entries:
        raise FormatError("manifest lists no triplets", path)
    return entries


def load_dataset(path) -> list[TripletSample]:
    base = Path(path).parent

    def resolve(p: str) -> Path:
        return Path(p) if os.path.isabs(p) else base / p

    samples = []
    for e in read_manifest(path):
        triplet = Triplet(read_ppm(resolve(e.first)), read_ppm(resolve(e.middle)), read_ppm(resolve(e.last)), e.t)
        samples.append(TripletSample(triplet, read_flo(resolve(e.flow_fwd)), read_flo(resolve(e.flow_bwd)), name=Path(e.middle).stem))
    return samples
