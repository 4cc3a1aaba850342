"""Leaky integrate-and-fire spike counting as a time-refining scalar quantizer.

With a constant input current the membrane equation
``c_l dV/dt + g_l V = I`` has a closed-form interspike interval, so counts
and the current thresholds between counts are computed exactly.  The
explicit-Euler simulation is kept for cross-checking only.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import _accel
from .dynamics import LutTable

__all__ = [
    "LifParams",
    "SpikeCount",
    "interspike_interval",
    "lif_count",
    "lif_threshold",
    "lif_simulate_counts",
    "build_lif_lut",
    "decode_count",
    "cell_bounds",
]


@dataclass(frozen=True)
class LifParams:
    delta: float = 2e-3
    g_l: float = 2e-9
    c_l: float = 1e-10
    v_reset: float = 0.0

    def __post_init__(self):
        if not (self.delta > 0 and self.g_l > 0 and self.c_l > 0):
            raise ValueError("delta, g_l and c_l must be strictly positive")
        if self.v_reset >= self.delta:
            raise ValueError("reset potential must lie below the threshold")

    @property
    def rheobase(self) -> float:
        """Smallest current whose steady-state potential exceeds the threshold."""
        return self.delta * self.g_l


@dataclass(frozen=True)
class SpikeCount:
    n: int
    sign: int
    k: int
    i: int
    j: int

    def __post_init__(self):
        if self.n < 0 or self.sign not in (-1, 1):
            raise ValueError("count must be non-negative and sign +-1")


def interspike_interval(i_r, p: LifParams = LifParams()):
    """Time from reset to threshold; ``inf`` at or below the rheobase."""
    i_r = np.asarray(i_r, dtype=np.float64)
    vinf = i_r / p.g_l
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (p.c_l / p.g_l) * np.log((vinf - p.v_reset) / (vinf - p.delta))
    return np.where(vinf > p.delta, t, np.inf)


def lif_count(i_r, duration, p: LifParams = LifParams()):
    """Spikes emitted in ``[0, duration]`` by a neuron starting at reset."""
    i_r = np.asarray(i_r, dtype=np.float64)
    duration = np.asarray(duration, dtype=np.float64)
    if np.any(duration < 0) or np.any(i_r < 0):
        raise ValueError("current and duration must be non-negative")
    t = interspike_interval(i_r, p)
    n = np.floor(duration / t).astype(np.int64)
    return n if n.ndim else int(n)


def lif_threshold(n, duration, p: LifParams = LifParams()):
    """Smallest current producing at least ``n`` spikes within ``duration``.

    Solves ``n * T(I) = duration`` for ``I``; 0 for ``n = 0`` and ``inf``
    when ``duration`` is zero.
    """
    n = np.asarray(n, dtype=np.float64)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.exp(duration * p.g_l / (np.maximum(n, 1) * p.c_l))
        thr = p.g_l * (a * p.delta - p.v_reset) / (a - 1.0)
    thr = np.where(n <= 0, 0.0, thr if duration > 0 else np.inf)
    return thr if thr.ndim else float(thr)


def lif_simulate_counts(i_r, duration, p: LifParams = LifParams(), dt: float = 1e-7):
    """Explicit-Euler reference simulation of the spike count."""
    i_r = np.atleast_1d(np.asarray(i_r, dtype=np.float64))
    steps = np.rint(np.broadcast_to(np.asarray(duration, dtype=np.float64), i_r.shape) / dt).astype(np.int64)
    return _accel.lif_euler_counts(i_r, steps, dt, p.delta, p.g_l, p.c_l, p.v_reset)


def build_lif_lut(duration: float, grid, p: LifParams = LifParams()) -> LutTable:
    """Step-function table of counts over a current grid."""
    grid = np.asarray(grid, dtype=np.float64)
    return LutTable(
        t=float(duration),
        xs=grid,
        ys=lif_count(grid, duration, p),
        label="lif",
        meta={"params": asdict(p)},
    )


def _params(lut: LutTable) -> LifParams:
    return LifParams(**lut.meta["params"]) if "params" in lut.meta else LifParams()


def cell_bounds(n, duration: float, lut: LutTable):
    """Current interval ``[lo, hi)`` mapping to count ``n`` (clamped to the table's range and top count)."""
    p = _params(lut)
    top = int(lut.ys.max())
    n = np.minimum(np.asarray(n, dtype=np.int64), top)
    lo = np.minimum(lif_threshold(n, duration, p), lut.xs[-1])
    hi = np.where(n >= top, lut.xs[-1], np.minimum(lif_threshold(n + 1, duration, p), lut.xs[-1]))
    return lo, hi


def decode_count(n, duration: float, lut: LutTable):
    """Midpoint of the current cell that produces count ``n`` at ``duration``."""
    if duration <= 0:
        raise ValueError("decoding needs a positive observation duration")
    lo, hi = cell_bounds(n, duration, lut)
    mid = 0.5 * (lo + hi)
    return mid if np.ndim(mid) else float(mid)
