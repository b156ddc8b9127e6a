"""Benchmark the compiled kernel core against the pure-numpy fallback.

Times the four hot per-row reductions (fused loss+gradient, Hessian
quadratic form, Hessian-vector product, fourth-order moments) over a grid
of problem sizes and prints the speedup of the compiled core.

Usage:  python benchmarks/bench_kernels.py [--repeats 7]
"""

import argparse
import time

import numpy as np

from prlandscape import _kernels_py

try:
    from prlandscape import _core
except ImportError:
    _core = None

SIZES = [(16, 444), (16, 5328), (16, 200_000), (64, 50_000), (256, 20_000)]


def _case(n, m, seed):
    g = np.random.Generator(np.random.Philox(key=seed))
    rows = np.ascontiguousarray(g.standard_normal((m, n)))
    x = g.standard_normal(n)
    x /= np.linalg.norm(x)
    y2 = np.ascontiguousarray((rows @ x) ** 2)
    z = g.standard_normal(n)
    v = g.standard_normal(n)
    xi = g.standard_normal(n)
    xi /= np.linalg.norm(xi)
    return rows, np.ascontiguousarray(x), y2, z, v, xi


def _best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()

    if _core is None:
        print("compiled core not built; only the numpy backend is available")
        return

    kernels = {
        "loss_gradient": lambda mod, c: mod.loss_gradient(c[0], c[2], c[3]),
        "quad_form": lambda mod, c: mod.quad_form(c[0], c[2], c[3], c[5]),
        "hvp": lambda mod, c: mod.hvp(c[0], c[2], c[3], c[4]),
        "moments": lambda mod, c: mod.moments(c[0], c[1], c[3] / np.linalg.norm(c[3])),
    }

    print(f"{'kernel':<14} {'n':>4} {'m':>8} {'numpy [ms]':>11} {'cython [ms]':>12} {'speedup':>8}")
    for n, m in SIZES:
        case = _case(n, m, seed=1234)
        for name, call in kernels.items():
            t_py = _best_of(lambda: call(_kernels_py, case), args.repeats)
            t_cy = _best_of(lambda: call(_core, case), args.repeats)
            print(f"{name:<14} {n:>4} {m:>8} {t_py * 1e3:>11.3f} {t_cy * 1e3:>12.3f} "
                  f"{t_py / t_cy:>7.2f}x")


if __name__ == "__main__":
    main()
