#!/usr/bin/env python3
"""Timing harness for the compiled kernels against their numpy fallbacks.

Run as a script:

    python3 benchmarks/bench_kernels.py --size 12 --repeat 3

The dispatch column times whatever ``numba_active()`` selects; set
``CHOQUARD_NO_NUMBA=1`` to force the fallback everywhere, in which case the
two columns coincide.
"""

import argparse
import time

import numpy as np

from choquard.grid import make_grid
from choquard.kernels import (direct_convolve, direct_convolve_np,
                              direct_convolve_vec, direct_convolve_vec_np,
                              numba_active, radial_monotone_defect,
                              radial_monotone_defect_np)


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        description="compare compiled kernels with their numpy fallbacks")
    ap.add_argument("--size", type=int, default=12,
                    help="cube edge for the convolution cases (default 12)")
    ap.add_argument("--repeat", type=int, default=3,
                    help="take the best of this many timings (default 3)")
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    M = args.size
    kern = rng.standard_normal((M, M, M))
    dens = rng.standard_normal((M, M, M))
    kern_axes = rng.standard_normal((3, M, M, M))

    r = make_grid(64, 8.0).r.ravel()
    v = np.exp(-(r ** 2))
    order = np.argsort(r)
    rs = np.ascontiguousarray(r[order])
    vs = np.ascontiguousarray(v[order])

    cases = [
        (f"direct_convolve {M}^3",
         lambda: direct_convolve(kern, dens),
         lambda: direct_convolve_np(kern, dens)),
        (f"direct_convolve_vec {M}^3",
         lambda: direct_convolve_vec(kern_axes, dens),
         lambda: direct_convolve_vec_np(kern_axes, dens)),
        ("radial_monotone_defect 64^3",
         lambda: radial_monotone_defect(r, v, 0.25),
         lambda: radial_monotone_defect_np(rs, vs, 0.25)),
    ]

    print(f"numba active: {numba_active()}")
    header = f"{'case':30s} {'dispatch':>12s} {'numpy':>12s} {'speedup':>9s}"
    print(header)
    print("-" * len(header))
    for name, fast, slow in cases:
        fast()  # warm-up; first call pays any JIT compilation cost
        t_fast = best_of(fast, args.repeat)
        t_slow = best_of(slow, args.repeat)
        ratio = t_slow / t_fast if t_fast > 0 else float("inf")
        print(f"{name:30s} {t_fast * 1e3:10.2f}ms {t_slow * 1e3:10.2f}ms "
              f"{ratio:8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
