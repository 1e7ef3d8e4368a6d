"""Compare the compiled kernels against the pure-NumPy fallback.

Run from the repo root after an editable install:

    python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import time

import numpy as np

from mergap.kernels import _pure

try:
    from mergap.kernels import _core
except ImportError:
    _core = None


def timeit(fn, *args, repeats: int = 5) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    rng = np.random.Generator(np.random.PCG64(0))
    print(f"{'kernel':<22} {'size':<16} {'pure (ms)':>10} {'compiled (ms)':>14} {'speedup':>8}")
    cases = []
    for n in (200, 800):
        x = rng.standard_normal((n, 64))
        centers = rng.standard_normal((8, 64))
        cases.append(("pairwise_sq_dists", f"{n}x64 vs {n}x64", (x, x)))
        cases.append(("kmeans_assign", f"{n}x64, k=8", (x, centers)))
        y = rng.standard_normal((n, 2))
        p = np.abs(rng.standard_normal((n, n)))
        p = (p + p.T) / (2.0 * p.sum())
        np.fill_diagonal(p, 0.0)
        cases.append(("tsne_grad", f"n={n}", (p, y)))
    for name, size, args in cases:
        pure_t = timeit(getattr(_pure, name), *args)
        if _core is not None:
            core_t = timeit(getattr(_core, name), *args)
            speedup = pure_t / core_t if core_t > 0 else float("inf")
            print(f"{name:<22} {size:<16} {pure_t * 1e3:>10.2f} {core_t * 1e3:>14.2f} {speedup:>7.1f}x")
        else:
            print(f"{name:<22} {size:<16} {pure_t * 1e3:>10.2f} {'(absent)':>14} {'--':>8}")


if __name__ == "__main__":
    main()
