"""Binary PGM (P5) reading and writing for 8-bit grayscale images."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

_HEADER = re.compile(rb"P5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s")


class PgmError(ValueError):
    pass


def read_pgm(path) -> np.ndarray:
    """Return the image as float64 luminance in [0, 1] (pixel / maxval)."""
    data = Path(path).read_bytes()
    m = _HEADER.match(data)
    if not m:
        raise PgmError(f"{path}: not a binary PGM (P5) file")
    w, h, maxval = (int(g) for g in m.groups())
    if not 0 < maxval < 256:
        raise PgmError(f"{path}: only 8-bit PGM is supported (maxval={maxval})")
    body = data[m.end() : m.end() + w * h]
    if len(body) != w * h:
        raise PgmError(f"{path}: truncated pixel data")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w).astype(np.float64) / maxval


def write_pgm(path, image: np.ndarray) -> None:
    """Write luminance in [0, 1] as 8-bit P5 (clamped and rounded)."""
    img = np.asarray(image, dtype=np.float64)
    pix = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    h, w = pix.shape
    Path(path).write_bytes(b"P5\n%d %d\n255\n" % (w, h) + pix.tobytes())
