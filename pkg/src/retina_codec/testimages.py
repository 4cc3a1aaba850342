"""Deterministic synthetic test images with values in [0, 1]."""

from __future__ import annotations

import numpy as np

KINDS = ("impulse", "constant", "gradient", "noise", "natural")


def natural_scene(n: int = 256, seed: int = 0) -> np.ndarray:
    """Mid-contrast scene: 1/f texture under a few smooth-edged shapes.

    Stands in for a natural photograph: power spectrum roughly ``1/f^2``,
    piecewise-smooth regions and sharp occluding edges.
    """
    rng = np.random.default_rng(seed)
    fy = np.fft.fftfreq(n)[:, None]
    fx = np.fft.rfftfreq(n)[None, :]
    f = np.hypot(fy, fx)
    f[0, 0] = 1.0
    spec = (rng.standard_normal(f.shape) + 1j * rng.standard_normal(f.shape)) / f
    spec[0, 0] = 0.0
    tex = np.fft.irfft2(spec, s=(n, n))
    tex = (tex - tex.mean()) / tex.std()

    yy, xx = np.mgrid[0:n, 0:n] / n
    img = 0.45 + 0.08 * tex + 0.1 * (xx - 0.5)
    for _ in range(6):
        cy, cx = rng.uniform(0.15, 0.85, 2)
        r = rng.uniform(0.06, 0.2)
        level = rng.uniform(-0.25, 0.25)
        d = np.hypot(yy - cy, xx - cx) - r
        img += level / (1.0 + np.exp(d * n / 0.8))
    x0, x1 = sorted(rng.uniform(0.1, 0.9, 2))
    img[:, int(x0 * n) : int(x1 * n)] += rng.uniform(-0.15, 0.15) * (yy[:, int(x0 * n) : int(x1 * n)] > 0.6)
    return np.clip(img, 0.0, 1.0)


def synthetic(kind: str, n: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if kind == "impulse":
        img = np.zeros((n, n))
        img[tuple(rng.integers(0, n, 2))] = 1.0
        return img
    if kind == "constant":
        return np.full((n, n), float(rng.integers(0, 256)) / 255.0)
    if kind == "gradient":
        return np.tile(np.linspace(0.0, 1.0, n), (n, 1))
    if kind == "noise":
        return rng.random((n, n))
    if kind == "natural":
        return natural_scene(n, seed)
    raise ValueError(f"unknown synthetic image {kind!r}; choose from {', '.join(KINDS)}")
