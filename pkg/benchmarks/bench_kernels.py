"""Compare the compiled Birkhoff kernel with the numpy fallback.

    python benchmarks/bench_kernels.py [--steps N] [--chains C] [--repeat R]
"""
import argparse
import time

import numpy as np

from orbitresponse import _fallback

try:
    from orbitresponse import _kernels
except ImportError:
    _kernels = None

A = np.array([[2.0, 1.0], [1.0, 1.0]])
P1 = np.array([[1.0, 0.0, 0.0, 1.0]])
EMPTY = np.zeros((0, 4))
G = np.array([[1.0, 0.0, 1.0, 0.0]])


def best_time(fn, args, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - start)
    return min(times), out


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=int, default=20000)
    p.add_argument("--chains", type=int, default=64)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()

    x0 = np.random.default_rng(0).random((args.chains, 2))
    call = (A, P1, 0.0, EMPTY, 0.0, G, 0.0, 0.01, x0, args.steps, 0)
    iterates = args.steps * args.chains

    rows = [("numpy", *best_time(_fallback.birkhoff_chains, call, args.repeat))]
    if _kernels is not None:
        rows.append(("cython", *best_time(_kernels.birkhoff_chains, call, args.repeat)))
    else:
        print("compiled extension not built; only the fallback is timed")

    print(f"{'backend':<8} {'seconds':>10} {'iterates/s':>14} {'mean g':>12}")
    for name, secs, sums in rows:
        print(f"{name:<8} {secs:>10.4f} {iterates / secs:>14.3e} {sums.sum() / iterates:>12.5f}")
    if len(rows) == 2:
        print(f"speedup: {rows[0][1] / rows[1][1]:.1f}x")


if __name__ == "__main__":
    main()
