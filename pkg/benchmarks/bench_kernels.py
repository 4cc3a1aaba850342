"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Workloads match LUT construction: a 4096-point magnitude grid integrated
to 13 ms at dt = 1e-5, and 2000 LIF reference simulations.
"""

import argparse
import time

import numpy as np

from retina_codec import _accel
from retina_codec.dynamics import InnerParams


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    p = InnerParams()
    mags = np.linspace(0, 4.6e-9, 4096)
    vb = _accel.numpy_kernels["bipolar_euler"](mags, 1300, 1e-5, p.c_b, p.g0_b, p.lambda_b, p.tau_b)
    cur = np.random.default_rng(0).uniform(0, 500e-12, 2000)
    steps = np.full(cur.shape, 20000)

    cases = {
        "bipolar_euler": lambda k: k(mags, 1300, 1e-5, p.c_b, p.g0_b, p.lambda_b, p.tau_b),
        "transient_filter": lambda k: k(vb, 1e-5, p.w_g, p.tau_g),
        "lif_euler_counts": lambda k: k(cur, steps, 1e-6, 2e-3, 2e-9, 1e-10, 0.0),
    }
    print(f"backend: {_accel.BACKEND}")
    print(f"{'kernel':<18}{'numpy s':>10}{'active s':>10}{'speedup':>9}")
    for name, run in cases.items():
        slow = best_of(lambda: run(_accel.numpy_kernels[name]), args.repeat)
        fast = best_of(lambda: run(getattr(_accel, name)), args.repeat)
        print(f"{name:<18}{slow:>10.4f}{fast:>10.4f}{slow / fast:>8.1f}x")


if __name__ == "__main__":
    main()
