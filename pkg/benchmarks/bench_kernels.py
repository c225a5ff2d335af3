"""Compare the compiled kernel backend against the numpy fallback.

Run: python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from contrastlab._fastkern import loss_rows as loss_rows_c, weighted_sum as ws_c
from contrastlab.kernels._numpy import loss_rows as loss_rows_n, weighted_sum as ws_n


def bench(fn, *args, repeats=20):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def main():
    rng = np.random.default_rng(0)
    for n, k in ((10_000, 4), (100_000, 8), (500_000, 2)):
        scores = rng.normal(size=(n, k)) * 5.0
        print(f"loss_rows n={n} k={k}")
        for fam, name in ((0, "hinge"), (1, "logistic")):
            tc = bench(loss_rows_c, scores, fam, 1.0)
            tn = bench(loss_rows_n, scores, fam, 1.0)
            print(f"  {name:9s} cython {tc*1e3:8.3f} ms   numpy {tn*1e3:8.3f} ms   x{tn/tc:.2f}")
    for n in (10_000, 1_000_000):
        v, w = rng.normal(size=n), rng.random(n)
        tc = bench(ws_c, v, w)
        tn = bench(ws_n, v, w)
        print(f"weighted_sum n={n}: cython {tc*1e3:8.3f} ms   numpy {tn*1e3:8.3f} ms   x{tn/tc:.2f}")


if __name__ == "__main__":
    main()
