"""Dyadic difference-of-Gaussians pyramid with time-delayed sub-bands.

Analysis filters every image with a bank of center-surround kernels, one
scale per level, and samples level ``k`` on a ``2**k x 2**k`` lattice.  A
single Gaussian low-pass coefficient carries the residue the zero-sum
kernels cannot see.  Reconstruction uses the canonical dual frame: the
frame operator ``S = A^T A`` is inverted by conjugate gradients, so the
dual atoms never need to be materialized for large images.

All convolutions use half-sample symmetric (mirror) extension.  Because
the Gaussians are separable, the mirror-extended filtering followed by
lattice sampling of one level collapses into two small dense matrices,
``band = P f P^T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg, eigsh

__all__ = [
    "DoGSpec",
    "DoGBank",
    "DelaySchedule",
    "Pyramid",
    "DualBank",
    "FrameError",
    "gaussian_taps",
    "fold_matrix",
    "lattice_centers",
    "build_dog_bank",
    "analyze",
    "adjoint",
    "frame_operator",
    "analysis_matrix",
    "compute_duals",
    "synthesize",
    "apply_delay",
    "coefficient_count",
]

# dense eigen-decomposition of the frame operator is used up to this many pixels
_DENSE_PIXELS = 32 * 32


class FrameError(ValueError):
    """The analysis family is not a frame (singular or near-singular operator)."""

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


def gaussian_taps(sigma: float, radius: int) -> np.ndarray:
    """Sampled 1-D Gaussian on ``[-radius, radius]`` normalized to unit sum."""
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-0.5 * (x / sigma) ** 2)
    return g / g.sum()


def _fold(p: np.ndarray, n: int) -> np.ndarray:
    # half-sample symmetric reflection about -0.5 and n - 0.5
    p = np.mod(p, 2 * n)
    return np.where(p >= n, 2 * n - 1 - p, p)


def fold_matrix(taps: np.ndarray, centers: np.ndarray, n: int) -> np.ndarray:
    """Matrix ``M`` with ``(M @ row)[a]`` = mirror-extended filtering at ``centers[a]``.

    Works for kernels wider than the signal (repeated reflection), and the
    rows keep the tap sum of ``taps`` exactly.
    """
    radius = (len(taps) - 1) // 2
    centers = np.asarray(centers, dtype=np.int64)
    offsets = np.arange(-radius, radius + 1)
    cols = _fold(centers[:, None] + offsets[None, :], n)
    rows = np.broadcast_to(np.arange(len(centers))[:, None], cols.shape)
    m = np.zeros((len(centers), n))
    np.add.at(m, (rows, cols), np.broadcast_to(taps, cols.shape))
    return m


def lattice_centers(n: int, k: int) -> np.ndarray:
    """Pixel positions of the ``2**k`` lattice points of level ``k`` along one axis."""
    stride = n >> k
    return np.arange(2**k) * stride + stride // 2


@dataclass(frozen=True)
class DoGSpec:
    k: int
    sigma_c: float
    sigma_s: float
    w_c: float
    w_s: float

    @property
    def radius(self) -> int:
        return int(math.ceil(3.0 * self.sigma_s))

    @property
    def taps_c(self) -> np.ndarray:
        return gaussian_taps(self.sigma_c, self.radius)

    @property
    def taps_s(self) -> np.ndarray:
        return gaussian_taps(self.sigma_s, self.radius)

    @property
    def kernel(self) -> np.ndarray:
        """2-D tap matrix ``w_c G_c - w_s G_s`` with odd side ``2 * radius + 1``."""
        gc, gs = self.taps_c, self.taps_s
        return self.w_c * np.outer(gc, gc) - self.w_s * np.outer(gs, gs)


@dataclass
class DoGBank:
    specs: list[DoGSpec]
    lowpass_sigma: float
    N: int
    include_dc: bool = True
    _pc: list[np.ndarray] = field(init=False, repr=False)
    _ps: list[np.ndarray] = field(init=False, repr=False)
    _lp: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.N
        self._pc = [fold_matrix(s.taps_c, lattice_centers(n, s.k), n) for s in self.specs]
        self._ps = [fold_matrix(s.taps_s, lattice_centers(n, s.k), n) for s in self.specs]
        self._lp = fold_matrix(self.lowpass_taps, np.array([n // 2]), n)[0]

    @property
    def K(self) -> int:
        return len(self.specs)

    @property
    def lowpass_radius(self) -> int:
        return int(math.ceil(3.0 * self.lowpass_sigma))

    @property
    def lowpass_taps(self) -> np.ndarray:
        return gaussian_taps(self.lowpass_sigma, self.lowpass_radius)

    @property
    def lowpass(self) -> np.ndarray:
        g = self.lowpass_taps
        return np.outer(g, g)

    def band_shape(self, k: int) -> tuple[int, int]:
        side = 2 ** self.specs[k].k
        return (side, side)

    def coefficient_bound(self, k: int | None = None) -> float:
        """Upper bound on |coefficient| for images with values in [0, 1].

        Mirror folding only merges taps, so the unfolded kernel's positive
        (or negative) mass bounds every lattice point.  ``k=None`` covers
        every band and the DC coefficient.
        """
        if k is None:
            bounds = [self.coefficient_bound(j) for j in range(self.K)]
            if self.include_dc:
                bounds.append(1.0)
            return max(bounds)
        w = self.specs[k].kernel
        return float(max(w[w > 0].sum(), -w[w < 0].sum()))


def build_dog_bank(
    N: int,
    base_sigma: float = 0.5,
    w_c: float = 1.0,
    w_s: float = 1.0,
    ratio: float = 3.0,
    include_dc: bool = True,
) -> DoGBank:
    """Build the ``K = log2(N) + 1`` level bank.

    Level ``K - 1`` is the finest (center sigma ``base_sigma``); each coarser
    level doubles both sigmas.  The low-pass scaling kernel uses the center
    sigma of level 0.
    """
    if N < 8 or N & (N - 1):
        raise ValueError(f"image side must be a power of two >= 8, got {N}")
    if ratio <= 1.0:
        raise ValueError("surround/center ratio must exceed 1")
    if base_sigma <= 0.0:
        raise ValueError("base_sigma must be positive")
    K = int(round(math.log2(N))) + 1
    specs = []
    for k in range(K):
        sc = base_sigma * 2.0 ** (K - 1 - k)
        specs.append(DoGSpec(k=k, sigma_c=sc, sigma_s=ratio * sc, w_c=w_c, w_s=w_s))
    return DoGBank(specs=specs, lowpass_sigma=specs[0].sigma_c, N=N, include_dc=include_dc)


def coefficient_count(N: int) -> int:
    K = int(round(math.log2(N))) + 1
    return sum(4**k for k in range(K)) + 1


@dataclass(frozen=True)
class DelaySchedule:
    """Release time (seconds) of each band; the DC coefficient ships with band 0."""

    times: tuple[float, ...]

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        if t.ndim != 1 or len(t) == 0:
            raise ValueError("delay schedule needs at least one band")
        if np.any(t < 0) or np.any(np.diff(t) <= 0):
            raise ValueError("delays must be non-negative and strictly increasing")

    @classmethod
    def default(cls, K: int, t0: float = 5e-3, step: float = 1e-3) -> DelaySchedule:
        return cls(tuple(t0 + k * step for k in range(K)))

    @property
    def dc_time(self) -> float:
        return self.times[0]

    def released(self, t: float) -> list[bool]:
        # tiny slack so that t_obs == t_k survives ms -> s float conversions
        return [t >= tk - 1e-12 for tk in self.times]


@dataclass
class Pyramid:
    """Sub-band coefficients; a ``None`` band (or ``dc``) is not yet available."""

    bands: list[np.ndarray | None]
    dc: float | None
    delays: DelaySchedule

    @property
    def K(self) -> int:
        return len(self.bands)

    def available(self) -> list[bool]:
        return [b is not None for b in self.bands]

    def filled(self) -> Pyramid:
        """Copy with unavailable entries replaced by zeros."""
        bands = [np.zeros((2**k, 2**k)) if b is None else b for k, b in enumerate(self.bands)]
        return Pyramid(bands, 0.0 if self.dc is None else self.dc, self.delays)

    def flat(self) -> np.ndarray:
        f = self.filled()
        return np.concatenate([b.ravel() for b in f.bands] + [np.array([f.dc])])

    @classmethod
    def from_flat(cls, v: np.ndarray, K: int, delays: DelaySchedule) -> Pyramid:
        bands, pos = [], 0
        for k in range(K):
            n = 4**k
            bands.append(np.asarray(v[pos : pos + n], dtype=np.float64).reshape(2**k, 2**k))
            pos += n
        return cls(bands, float(v[pos]), delays)


def analyze(image: np.ndarray, bank: DoGBank, delays: DelaySchedule | None = None) -> Pyramid:
    f = np.asarray(image, dtype=np.float64)
    if f.shape != (bank.N, bank.N):
        raise ValueError(f"image shape {f.shape} does not match bank side {bank.N}")
    bands = []
    for s, pc, ps in zip(bank.specs, bank._pc, bank._ps):
        bands.append(s.w_c * (pc @ f @ pc.T) - s.w_s * (ps @ f @ ps.T))
    lp = bank._lp
    dc = float(lp @ f @ lp) if bank.include_dc else 0.0
    return Pyramid(bands, dc, delays or DelaySchedule.default(bank.K))


def adjoint(pyr: Pyramid, bank: DoGBank) -> np.ndarray:
    """``A^T c``: spread coefficients back onto the image grid (missing bands count as zero)."""
    out = np.zeros((bank.N, bank.N))
    for s, pc, ps, b in zip(bank.specs, bank._pc, bank._ps, pyr.bands):
        if b is None:
            continue
        out += s.w_c * (pc.T @ b @ pc) - s.w_s * (ps.T @ b @ ps)
    if bank.include_dc and pyr.dc is not None:
        out += pyr.dc * np.outer(bank._lp, bank._lp)
    return out


def frame_operator(f: np.ndarray, bank: DoGBank) -> np.ndarray:
    return adjoint(analyze(f, bank), bank)


def analysis_matrix(bank: DoGBank) -> np.ndarray:
    """Dense ``A`` (coefficients x pixels); rows are the analysis atoms.  Small N only."""
    n = bank.N
    cols = []
    for p in range(n * n):
        e = np.zeros(n * n)
        e[p] = 1.0
        pyr = analyze(e.reshape(n, n), bank)
        cols.append(pyr.flat() if bank.include_dc else pyr.flat()[:-1])
    return np.array(cols).T


def _operator(bank: DoGBank) -> LinearOperator:
    n = bank.N
    return LinearOperator(
        (n * n, n * n), matvec=lambda v: frame_operator(v.reshape(n, n), bank).ravel(), dtype=np.float64
    )


def _frame_bounds(bank: DoGBank) -> tuple[float, float]:
    n = bank.N
    if n * n <= _DENSE_PIXELS:
        a = analysis_matrix(bank)
        w = np.linalg.eigvalsh(a.T @ a)
        return float(w[0]), float(w[-1])
    op = _operator(bank)
    hi = float(eigsh(op, k=1, which="LA", tol=1e-6, return_eigenvectors=False)[0])
    # smallest eigenvalue via the largest of (hi I - S)
    shifted = LinearOperator(op.shape, matvec=lambda v: hi * v - op.matvec(v), dtype=np.float64)
    top = float(eigsh(shifted, k=1, which="LA", tol=1e-8, return_eigenvectors=False)[0])
    return hi - top, hi


@dataclass
class DualBank:
    """Canonical dual frame of a bank, applied through an iterative solve of ``S x = A^T c``."""

    bank: DoGBank
    lower: float
    upper: float
    rtol: float = 1e-10
    maxiter: int = 10000

    @property
    def condition(self) -> float:
        return self.upper / self.lower

    def solve(self, rhs: np.ndarray, x0: np.ndarray | None = None) -> np.ndarray:
        n = self.bank.N
        b = rhs.ravel()
        if not np.any(b):
            return np.zeros((n, n))
        x, info = cg(_operator(self.bank), b, x0=None if x0 is None else x0.ravel(),
                     rtol=self.rtol, atol=0.0, maxiter=self.maxiter)
        if info != 0:
            raise FrameError(f"conjugate gradients did not converge ({info} iterations)", self.condition)
        return x.reshape(n, n)

    def atom(self, k: int, i: int, j: int) -> np.ndarray:
        """Dual atom paired with analysis atom ``(k, i, j)``; ``k = -1`` is the DC atom."""
        pyr = Pyramid([None] * self.bank.K, None, DelaySchedule.default(self.bank.K))
        if k < 0:
            pyr.dc = 1.0
        else:
            b = np.zeros(self.bank.band_shape(k))
            b[i, j] = 1.0
            pyr.bands[k] = b
        return self.solve(adjoint(pyr, self.bank))

    def atoms(self) -> np.ndarray:
        """All dual atoms as rows of a (coefficients x pixels) matrix, ordered like ``Pyramid.flat``."""
        rows = []
        for k in range(self.bank.K):
            side = self.bank.band_shape(k)[0]
            for i in range(side):
                for j in range(side):
                    rows.append(self.atom(k, i, j).ravel())
        if self.bank.include_dc:
            rows.append(self.atom(-1, 0, 0).ravel())
        return np.array(rows)


def compute_duals(bank: DoGBank, rtol: float = 1e-10) -> DualBank:
    """Check that the bank is a frame and return its dual-frame solver.

    Raises :class:`FrameError` carrying the condition estimate when the
    frame operator is singular to working precision.
    """
    lo, hi = _frame_bounds(bank)
    cond = hi / lo if lo > 0 else math.inf
    if not lo > hi * 1e-12:
        raise FrameError(
            f"frame operator is singular: lower bound {lo:.3e}, upper {hi:.3e}, condition ~{cond:.3e}",
            cond,
        )
    return DualBank(bank, lo, hi, rtol=rtol)


def synthesize(coeffs: Pyramid, duals: DualBank) -> np.ndarray:
    """``f~ = sum_kij c_kij * dual_kij``; unavailable bands contribute nothing."""
    if coeffs.K != duals.bank.K:
        raise ValueError(f"pyramid has {coeffs.K} bands, dual bank expects {duals.bank.K}")
    for k, b in enumerate(coeffs.bands):
        if b is not None and b.shape != duals.bank.band_shape(k):
            raise ValueError(f"band {k} has shape {b.shape}, expected {duals.bank.band_shape(k)}")
    return duals.solve(adjoint(coeffs, duals.bank))


def apply_delay(pyramid: Pyramid, t: float) -> Pyramid:
    """Bands whose delay exceeds ``t`` become unavailable (``None``)."""
    if t < 0:
        raise ValueError("time must be non-negative")
    rel = pyramid.delays.released(t)
    bands = [b if r else None for b, r in zip(pyramid.bands, rel)]
    dc = pyramid.dc if rel[0] else None
    return Pyramid(bands, dc, pyramid.delays)
