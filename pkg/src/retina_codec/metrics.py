"""Rate (count entropy) and quality (PSNR, mean SSIM) measurements."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

__all__ = ["RateQuality", "shannon_entropy", "entropy_bpp", "psnr", "mean_ssim", "csv_header", "csv_row"]


@dataclass(frozen=True)
class RateQuality:
    t_obs: float
    bpp: float
    psnr_db: float
    mean_ssim: float


def shannon_entropy(symbols) -> float:
    """Per-symbol Shannon entropy (bits) of the empirical histogram."""
    _, counts = np.unique(np.asarray(symbols).ravel(), return_counts=True)
    if counts.size <= 1:
        return 0.0
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum())


def entropy_bpp(stream) -> float:
    """Entropy bound of the count population in bits per pixel.

    ``sum_k 4**k * H(band k) / N**2``; the DC count is a single symbol and
    contributes nothing, unreleased bands contribute nothing.
    """
    total = 0.0
    for band in stream.bands:
        if band is not None and band.size:
            total += band.size * shannon_entropy(band)
    return total / stream.N**2


def psnr(a, b, peak: float = 1.0) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def mean_ssim(a, b, data_range: float = 1.0, sigma: float = 1.5, k1: float = 0.01, k2: float = 0.03) -> float:
    """Mean SSIM with an 11x11 Gaussian window, averaged over the valid region."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    radius = 5
    if min(a.shape) < 2 * radius + 1 + 5:
        raise ValueError(f"image {a.shape} too small for the 11x11 SSIM window (need side >= 16)")
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2

    def blur(x):
        return gaussian_filter(x, sigma, truncate=radius / sigma)

    mu_a, mu_b = blur(a), blur(b)
    saa = blur(a * a) - mu_a**2
    sbb = blur(b * b) - mu_b**2
    sab = blur(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * sab + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (saa + sbb + c2)
    smap = num / den
    return float(smap[radius:-radius, radius:-radius].mean())


def csv_header() -> str:
    return "t_obs_ms,bpp,psnr_db,mean_ssim"


def csv_row(rq: RateQuality) -> str:
    return f"{rq.t_obs * 1e3:g},{rq.bpp:.6f},{rq.psnr_db:.4f},{rq.mean_ssim:.6f}"
