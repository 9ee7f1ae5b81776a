#!/usr/bin/env python3
"""Times the compiled conversion kernels against the numpy fallback.

The hyperspherical round trip sits inside every geometric perturbation,
so the Monte Carlo benchmarks and the trainer spend most of their time
here.  Run after an editable install:

    python benchmarks/bench_backends.py
"""

import time

import numpy as np

from geodp import _convert_ref

try:
    from geodp import _convert_fast
except ImportError:
    _convert_fast = None

SHAPES = [(100_000, 3), (10_000, 100), (2_000, 1_000), (200, 10_000)]
REPEATS = 5


def best_of(fn, *args):
    best = float("inf")
    for _ in range(REPEATS):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    backends = [("numpy", _convert_ref)]
    if _convert_fast is not None:
        backends.append(("cython", _convert_fast))
    else:
        print("compiled backend unavailable; timing the fallback only")

    header = f"{'shape':>16} {'op':>12}" + "".join(f"{name:>12}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)

    rng = np.random.default_rng(0)
    for n, d in SHAPES:
        g = np.ascontiguousarray(rng.normal(size=(n, d)))
        mag, ang = _convert_ref.cart_to_sph(g)
        for op, args in (("cart_to_sph", (g,)), ("sph_to_cart", (mag, ang))):
            times = [best_of(getattr(impl, op), *args) for _, impl in backends]
            row = f"{f'{n}x{d}':>16} {op:>12}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times)
            if len(times) == 2:
                row += f"{times[0] / times[1]:>9.1f}x"
            print(row)


if __name__ == "__main__":
    main()
