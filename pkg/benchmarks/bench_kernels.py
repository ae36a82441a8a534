#!/usr/bin/env python3
"""Benchmark the compiled enumeration kernel against the NumPy fallback.

Times the single-strategy oracle at growing device counts and the batched
evaluation used by the randomized-search check, then prints the speedups.

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from attestgame import _core_py

try:
    from attestgame import _core
except ImportError:
    _core = None


def case(rng, n, n_classes):
    values = rng.normal(0.0, 10.0, size=n)
    class_index = rng.integers(0, n_classes, size=n).astype(np.int64)
    class_cost = rng.uniform(0.0, 20.0, size=n_classes)
    return values, class_index, class_cost


def timeit(fn, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    impls = [("python", _core_py)]
    if _core is not None:
        impls.append(("compiled", _core))
    else:
        print("compiled kernel unavailable; timing the fallback only\n")

    print(f"{'case':<28}" + "".join(f"{name:>12}" for name, _ in impls) + f"{'speedup':>10}")

    for n in (12, 16, 20):
        values, ci, cc = case(rng, n, 3)
        times = []
        for _, impl in impls:
            times.append(timeit(lambda impl=impl: impl.best_attack(values, ci, cc)))
        row = f"single 2^{n} masks"
        line = f"{row:<28}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times)
        if len(times) == 2:
            line += f"{times[0] / times[1]:>9.1f}x"
        print(line)

    for samples, n in ((20_000, 8), (20_000, 12)):
        values = rng.normal(0.0, 10.0, size=(samples, n))
        ci = rng.integers(0, 3, size=n).astype(np.int64)
        cc = rng.uniform(0.0, 20.0, size=3)
        times = []
        for _, impl in impls:
            times.append(timeit(lambda impl=impl: impl.best_attack_batch(values, ci, cc)))
        row = f"batch {samples}x2^{n}"
        line = f"{row:<28}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times)
        if len(times) == 2:
            line += f"{times[0] / times[1]:>9.1f}x"
        print(line)

    if _core is not None:
        values, ci, cc = case(rng, 10, 3)
        assert _core.best_attack(values, ci, cc) == _core_py.best_attack(values, ci, cc)
        print("\nagreement check: both kernels pick the same attack vector")


if __name__ == "__main__":
    main()
