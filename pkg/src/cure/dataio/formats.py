"""Binary PPM (P6) frames and Middlebury-layout ``.flo`` flow files."""
from __future__ import annotations

import os
import struct

import numpy as np

FLO_MAGIC = b"PIEH"


class FormatError(ValueError):
    """Malformed or truncated file; ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, path=None, offset: int | None = None):
        where = f" at byte {offset}" if offset is not None else ""
        src = f"{os.fspath(path)}: " if path is not None else ""
        super().__init__(f"{src}{message}{where}")
        self.path = path
        self.offset = offset


def quantize(frame: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(frame, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_ppm(path, frame: np.ndarray) -> None:
    frame = np.asarray(frame)
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError(f"expected an HxWx3 frame, got shape {frame.shape}")
    h, w, _ = frame.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(quantize(frame).tobytes())


def _header_tokens(buf: bytes, path, count: int) -> tuple[list[bytes], int]:
    tokens: list[bytes] = []
    pos = 0
    n = len(buf)
    while len(tokens) < count:
        while pos < n and buf[pos : pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos : pos + 1] == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        if pos >= n:
            raise FormatError("truncated PPM header", path, pos)
        start = pos
        while pos < n and not buf[pos : pos + 1].isspace():
            pos += 1
        tokens.append(buf[start:pos])
    if pos >= n:
        raise FormatError("missing whitespace after PPM header", path, pos)
    return tokens, pos + 1


def read_ppm(path) -> np.ndarray:
    """Read a P6 / maxval 255 file into an HxWx3 float64 array in [0, 1]."""
    with open(path, "rb") as f:
        buf = f.read()
    if buf[:2] != b"P6":
        raise FormatError(f"bad PPM magic {buf[:2]!r}, expected b'P6'", path, 0)
    (w_tok, h_tok, max_tok), data_start = _header_tokens(buf[2:], path, 3)
    data_start += 2
    try:
        w, h, maxval = int(w_tok), int(h_tok), int(max_tok)
    except ValueError:
        raise FormatError("non-integer PPM header field", path, 2) from None
    if w <= 0 or h <= 0:
        raise FormatError(f"invalid PPM size {w}x{h}", path, 2)
    if maxval != 255:
        raise FormatError(f"unsupported PPM maxval {maxval} (only 255)", path, 2)
    need = w * h * 3
    payload = buf[data_start : data_start + need]
    if len(payload) < need:
        raise FormatError(f"truncated PPM payload: expected {need} bytes, found {len(payload)}", path, data_start + len(payload))
    return np.frombuffer(payload, dtype=np.uint8).reshape(h, w, 3).astype(np.float64) / 255.0


def write_flo(path, flow: np.ndarray) -> None:
    flow = np.asarray(flow)
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise ValueError(f"expected an HxWx2 flow, got shape {flow.shape}")
    h, w, _ = flow.shape
    with open(path, "wb") as f:
        f.write(FLO_MAGIC)
        f.write(struct.pack("<ii", w, h))
        f.write(np.ascontiguousarray(flow, dtype="<f4").tobytes())


def read_flo(path) -> np.ndarray:
    """Read a ``.flo`` file into an HxWx2 float32 array of (u, v)."""
    with open(path, "rb") as f:
        buf = f.read()
    if buf[:4] != FLO_MAGIC:
        raise FormatError(f"bad flow magic {buf[:4]!r}, expected {FLO_MAGIC!r}", path, 0)
    if len(buf) < 12:
        raise FormatError("truncated flow header", path, len(buf))
    w, h = struct.unpack("<ii", buf[4:12])
    if w <= 0 or h <= 0:
        raise FormatError(f"invalid flow size {w}x{h}", path, 4)
    need = w * h * 2 * 4
    if len(buf) - 12 < need:
        raise FormatError(f"truncated flow payload: expected {need} bytes, found {len(buf) - 12}", path, len(buf))
    return np.frombuffer(buf, dtype="<f4", count=w * h * 2, offset=12).reshape(h, w, 2).astype(np.float32)
