"""Bipolar contrast-gain control, ganglionic rectification and their time cuts.

For a step input of constant magnitude the bipolar potential obeys

    c_b dV/dt + g_b(t) V = I,     g_b = E_tau_b * (g0_b + lambda_b V^2)

with a causal exponential kernel started at t = 0.  The convolution is
carried as its own state, ``tau_b dg/dt = Q(V) - g`` with ``g(0) = 0``, and
both are stepped with explicit Euler.  The ganglionic current is the
rectified output of a transient filter ``delta_0 - w_g E_tau_g``.

Sampling the family of trajectories at a fixed time gives a static map from
input magnitude to rectified current; :func:`build_cg_lut` tabulates it.
"""

from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _accel

__all__ = [
    "InnerParams",
    "Trajectory",
    "LutTable",
    "LutError",
    "SimulationError",
    "simulate_bipolar",
    "bipolar_family",
    "rectifier",
    "simulate_ganglionic",
    "ganglionic_family",
    "build_cg_lut",
    "build_cg_luts",
    "invert_lut",
    "step_index",
]

DEFAULT_DT = 1e-5


class SimulationError(RuntimeError):
    pass


class LutError(ValueError):
    pass


@dataclass(frozen=True)
class InnerParams:
    c_b: float = 1.5e-10
    g0_b: float = 8e-10
    lambda_b: float = 9e-7
    tau_b: float = 12e-3
    w_g: float = 0.8
    tau_g: float = 16e-3
    i0_g: float = 15e-12
    v0_g: float = 4e-3
    lambda_g: float = 12e-9

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value > 0:
                raise ValueError(f"{name} must be strictly positive, got {value}")


@dataclass(frozen=True)
class Trajectory:
    dt: float
    samples: np.ndarray
    t0: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.samples))

    def at(self, t: float) -> float:
        return float(self.samples[step_index(t - self.t0, self.dt)])


def step_index(t: float, dt: float) -> int:
    """Sample index of time ``t``; ``t`` must sit on the ``dt`` grid."""
    n = int(round(t / dt))
    if n < 0 or abs(n * dt - t) > 1e-6 * dt + 1e-15:
        raise ValueError(f"time {t!r} is not a non-negative multiple of dt={dt!r}")
    return n


def _check_dt(dt: float, tau: float, what: str) -> None:
    if not 0 < dt <= tau / 100 * (1 + 1e-12):
        raise ValueError(f"dt={dt} must be positive and at most {what}/100 = {tau / 100}")


def bipolar_family(i_mags, t_end: float, dt: float, p: InnerParams) -> np.ndarray:
    """V^b trajectories for a batch of step magnitudes, shape (len(i_mags), steps + 1)."""
    _check_dt(dt, p.tau_b, "tau_b")
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    i_mags = np.atleast_1d(np.asarray(i_mags, dtype=np.float64))
    if np.any(i_mags < 0):
        raise ValueError("input magnitudes must be non-negative")
    v = _accel.bipolar_euler(i_mags, step_index(t_end, dt), dt, p.c_b, p.g0_b, p.lambda_b, p.tau_b)
    if not np.all(np.isfinite(v)):
        bad = np.flatnonzero(~np.all(np.isfinite(v), axis=1))
        raise SimulationError(
            f"bipolar integration diverged for magnitudes {i_mags[bad][:5]} (dt={dt}, t_end={t_end})"
        )
    return v


def simulate_bipolar(i_mag: float, t_end: float, dt: float = DEFAULT_DT, p: InnerParams = InnerParams()) -> Trajectory:
    return Trajectory(dt, bipolar_family([i_mag], t_end, dt, p)[0])


def rectifier(v, p: InnerParams = InnerParams()):
    """Static rectification: linear above ``v0_g``, hyperbolic soft floor below.

    The lower branch is ``i0^2 / (i0 - lambda_g (v - v0))`` so that both
    branches meet at ``i0_g`` with matching slope.
    """
    v = np.asarray(v, dtype=np.float64)
    dv = v - p.v0_g
    below = dv < 0
    den = p.i0_g - p.lambda_g * np.where(below, dv, 0.0)
    assert np.all(den > 0)
    out = np.where(below, p.i0_g * p.i0_g / den, p.i0_g + p.lambda_g * dv)
    return out if out.ndim else float(out)


def ganglionic_family(vb: np.ndarray, dt: float, p: InnerParams) -> np.ndarray:
    _check_dt(dt, p.tau_g, "tau_g")
    return rectifier(_accel.transient_filter(np.atleast_2d(vb), dt, p.w_g, p.tau_g), p)


def simulate_ganglionic(vb: Trajectory, p: InnerParams = InnerParams()) -> Trajectory:
    return Trajectory(vb.dt, ganglionic_family(vb.samples[None, :], vb.dt, p)[0], vb.t0)


@dataclass
class LutTable:
    """Sampled monotone map ``xs -> ys`` tabulated at time argument ``t``.

    ``label`` names the stage (``"cg"`` or ``"lif"``); ``meta`` carries the
    parameters the table was built from.
    """

    t: float
    xs: np.ndarray
    ys: np.ndarray
    kind: str = "forward"
    label: str = "cg"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=np.float64)
        self.ys = np.asarray(self.ys, dtype=np.float64)
        if self.xs.shape != self.ys.shape or self.xs.ndim != 1 or len(self.xs) < 2:
            raise LutError("table needs matching 1-D xs and ys with at least two entries")
        if np.any(np.diff(self.xs) <= 0):
            raise LutError("table inputs must be strictly increasing")

    def __call__(self, x):
        return np.interp(x, self.xs, self.ys)

    @property
    def step(self) -> float:
        return float(np.max(np.diff(self.xs)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        head = {"label": self.label, "kind": self.kind, "t": self.t, **self.meta}
        buf.write("# " + json.dumps(head, sort_keys=True, default=str) + "\n")
        buf.write("x,y\n")
        for x, y in zip(self.xs, self.ys):
            buf.write(f"{float(x)!r},{float(y)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> LutTable:
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# "):
            raise LutError("missing table header line")
        head = json.loads(lines[0][2:])
        rows = np.array([[float(c) for c in ln.split(",")] for ln in lines[2:] if ln.strip()])
        label, kind, t = head.pop("label"), head.pop("kind"), head.pop("t")
        return cls(t=t, xs=rows[:, 0], ys=rows[:, 1], kind=kind, label=label, meta=head)


def _assert_monotone(ys: np.ndarray, xs: np.ndarray, t: float) -> None:
    drops = np.flatnonzero(np.diff(ys) < 0)
    if drops.size:
        m = drops[0]
        raise LutError(
            f"map at t={t} decreases on [{xs[m]!r}, {xs[m + 1]!r}]: {ys[m]!r} -> {ys[m + 1]!r}"
        )


def build_cg_luts(times, grid, p: InnerParams = InnerParams(), dt: float = DEFAULT_DT) -> list[LutTable]:
    """Transversal cuts of the ganglionic current at each of ``times`` from one simulation."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or len(grid) < 256 or np.any(np.diff(grid) <= 0) or grid[0] < 0:
        raise LutError("grid must be strictly increasing, non-negative, with at least 256 samples")
    times = [float(t) for t in times]
    idx = [step_index(t, dt) for t in times]
    vb = bipolar_family(grid, max(times), dt, p)
    ig = ganglionic_family(vb[:, : max(idx) + 1], dt, p)
    luts = []
    for t, n in zip(times, idx):
        ys = ig[:, n]
        _assert_monotone(ys, grid, t)
        luts.append(LutTable(t=t, xs=grid.copy(), ys=ys.copy(), label="cg", meta={"params": asdict(p), "dt": dt}))
    return luts


def build_cg_lut(t_k: float, grid, p: InnerParams = InnerParams(), dt: float = DEFAULT_DT) -> LutTable:
    return build_cg_luts([t_k], grid, p, dt)[0]


def invert_lut(lut: LutTable, y):
    """Piecewise-linear inverse of a non-decreasing table, clamped to its ends."""
    ys = lut.ys
    if np.any(np.diff(ys) < 0):
        raise LutError("cannot invert a non-monotone table")
    if ys[-1] == ys[0]:
        raise LutError("cannot invert a constant table")
    return np.interp(y, ys, lut.xs)
