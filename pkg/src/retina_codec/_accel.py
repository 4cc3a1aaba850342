"""Hot time-stepping loops, compiled with numba when available.

Set ``RETINA_CODEC_NO_NUMBA=1`` to force the pure-numpy implementations
(vectorized over the batch, Python loop over time).  Both paths compute
the same recurrences step for step.  ``RETINA_CODEC_THREADS`` caps the
number of numba worker threads.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["BACKEND", "bipolar_euler", "transient_filter", "lif_euler_counts", "numpy_kernels"]


def _flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() not in ("", "0", "false", "no")


# ---------------------------------------------------------------- numpy path


def _bipolar_euler_np(i_mag, n_steps, dt, c_b, g0_b, lambda_b, tau_b):
    i_mag = np.asarray(i_mag, dtype=np.float64)
    out = np.empty((i_mag.shape[0], n_steps + 1))
    v = np.zeros_like(i_mag)
    g = np.zeros_like(i_mag)
    out[:, 0] = 0.0
    for n in range(n_steps):
        dv = (i_mag - g * v) / c_b
        dg = (g0_b + lambda_b * v * v - g) / tau_b
        v = v + dt * dv
        g = g + dt * dg
        out[:, n + 1] = v
    return out


def _transient_filter_np(v, dt, w_g, tau_g):
    v = np.asarray(v, dtype=np.float64)
    decay = np.exp(-dt / tau_g)
    gain = dt / tau_g
    out = np.empty_like(v)
    y = np.zeros(v.shape[0])
    prev = np.zeros(v.shape[0])
    for n in range(v.shape[1]):
        y = decay * y + 0.5 * gain * (decay * prev + v[:, n])
        prev = v[:, n]
        out[:, n] = v[:, n] - w_g * y
    return out


def _lif_euler_counts_np(i_r, n_steps, dt, delta, g_l, c_l, v_reset):
    i_r = np.asarray(i_r, dtype=np.float64)
    n_steps = np.asarray(n_steps, dtype=np.int64)
    v = np.full(i_r.shape, float(v_reset))
    counts = np.zeros(i_r.shape, dtype=np.int64)
    for n in range(int(n_steps.max(initial=0))):
        live = n < n_steps
        v = np.where(live, v + dt * (i_r - g_l * v) / c_l, v)
        fired = live & (v >= delta)
        counts += fired
        v = np.where(fired, v_reset, v)
    return counts


# ---------------------------------------------------------------- numba path


def _bipolar_euler_loop(i_mag, n_steps, dt, c_b, g0_b, lambda_b, tau_b):
    # time outside, batch inside: the inner loop has no carried dependency
    m = i_mag.shape[0]
    out = np.empty((n_steps + 1, m))
    v = np.zeros(m)
    g = np.zeros(m)
    out[0, :] = 0.0
    for n in range(n_steps):
        for a in range(m):
            dv = (i_mag[a] - g[a] * v[a]) / c_b
            dg = (g0_b + lambda_b * v[a] * v[a] - g[a]) / tau_b
            v[a] = v[a] + dt * dv
            g[a] = g[a] + dt * dg
            out[n + 1, a] = v[a]
    return out


def _transient_filter_loop(v, dt, w_g, tau_g):
    decay = np.exp(-dt / tau_g)
    gain = dt / tau_g
    out = np.empty_like(v)
    for a in prange(v.shape[0]):
        y = 0.0
        prev = 0.0
        for n in range(v.shape[1]):
            y = decay * y + 0.5 * gain * (decay * prev + v[a, n])
            prev = v[a, n]
            out[a, n] = v[a, n] - w_g * y
    return out


def _lif_euler_counts_loop(i_r, n_steps, dt, delta, g_l, c_l, v_reset):
    m = i_r.shape[0]
    counts = np.zeros(m, dtype=np.int64)
    v = np.full(m, v_reset)
    top = 0
    for a in range(m):
        top = max(top, n_steps[a])
    for n in range(top):
        for a in range(m):
            if n < n_steps[a]:
                x = v[a] + dt * (i_r[a] - g_l * v[a]) / c_l
                if x >= delta:
                    counts[a] += 1
                    x = v_reset
                v[a] = x
    return counts


prange = range
BACKEND = "numpy"
numpy_kernels = {
    "bipolar_euler": _bipolar_euler_np,
    "transient_filter": _transient_filter_np,
    "lif_euler_counts": _lif_euler_counts_np,
}
bipolar_euler = _bipolar_euler_np
transient_filter = _transient_filter_np
lif_euler_counts = _lif_euler_counts_np

if not _flag("RETINA_CODEC_NO_NUMBA"):
    try:
        import numba
    except ImportError:  # pragma: no cover
        numba = None
    if numba is not None:
        if not os.environ.get("NUMBA_THREADING_LAYER"):
            # the bundled TBB is too old; OpenMP is thread-safe and quiet
            numba.config.THREADING_LAYER = "omp"
        prange = numba.prange
        _jit = numba.njit(cache=True, parallel=True)
        _serial = numba.njit(cache=True)
        _bip = _serial(_bipolar_euler_loop)
        _tf = _jit(_transient_filter_loop)
        _lif = _serial(_lif_euler_counts_loop)

        def bipolar_euler(i_mag, n_steps, dt, c_b, g0_b, lambda_b, tau_b):
            out = _bip(np.ascontiguousarray(i_mag, dtype=np.float64), int(n_steps),
                       float(dt), float(c_b), float(g0_b), float(lambda_b), float(tau_b))
            return np.ascontiguousarray(out.T)

        def transient_filter(v, dt, w_g, tau_g):
            return _tf(np.ascontiguousarray(v, dtype=np.float64), float(dt), float(w_g), float(tau_g))

        def lif_euler_counts(i_r, n_steps, dt, delta, g_l, c_l, v_reset):
            i_r = np.ascontiguousarray(i_r, dtype=np.float64)
            n_steps = np.ascontiguousarray(np.broadcast_to(n_steps, i_r.shape), dtype=np.int64)
            return _lif(i_r, n_steps, float(dt), float(delta), float(g_l), float(c_l), float(v_reset))

        threads = os.environ.get("RETINA_CODEC_THREADS")
        if threads:
            numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
        BACKEND = "numba"
