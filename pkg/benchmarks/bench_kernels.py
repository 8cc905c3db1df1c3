#!/usr/bin/env python3
"""Benchmark: compiled kernels vs NumPy fallback.

Times the three hot kernels on representative workloads and a small
end-to-end forest fit. Run after building the extension:

    python benchmarks/bench_kernels.py
"""
import time

import numpy as np

from eventsig._kernels import _pyref

try:
    from eventsig._kernels import _native
except ImportError:
    _native = None


def timeit(fn, *args, repeat=5, number=1):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def bench_row(name, fn_name, args, number=1):
    t_py = timeit(getattr(_pyref, fn_name), *args, number=number)
    if _native is None:
        print(f"{name:<44} python {t_py*1e3:9.3f} ms   native: not built")
        return
    t_nat = timeit(getattr(_native, fn_name), *args, number=number)
    print(
        f"{name:<44} python {t_py*1e3:9.3f} ms   native {t_nat*1e3:9.3f} ms "
        f"  speedup {t_py/t_nat:6.1f}x"
    )


def bench_forest():
    from eventsig.forest import ForestParams, fit_survival_forest
    from eventsig.survival import SurvivalOutcome

    rng = np.random.default_rng(0)
    n = 1500
    X = rng.normal(size=(n, 5))
    outcomes = [
        SurvivalOutcome(bool(e), float(t))
        for e, t in zip(rng.random(n) > 0.4, rng.uniform(1, 60, size=n))
    ]
    params = ForestParams(n_trees=40)

    import eventsig._kernels as kernels

    original = kernels.logrank_scan
    results = {}
    for label, impl in [("python", _pyref)] + ([("native", _native)] if _native else []):
        kernels.logrank_scan = impl.logrank_scan  # forest looks this up per call
        t0 = time.perf_counter()
        fit_survival_forest(X, outcomes, params=params, seed=1)
        results[label] = time.perf_counter() - t0
    kernels.logrank_scan = original
    line = f"{'survival forest fit (n=1500, 40 trees)':<44}"
    line += f" python {results['python']:9.3f} s "
    if "native" in results:
        line += f"  native {results['native']:9.3f} s   speedup {results['python']/results['native']:6.1f}x"
    print(line)


def main():
    rng = np.random.default_rng(42)
    print(f"native extension: {'available' if _native else 'NOT BUILT (python fallback only)'}\n")

    inc_small = np.ascontiguousarray(rng.normal(size=(8, 2)))
    inc_wide = np.ascontiguousarray(rng.normal(size=(20, 8)))
    inc_deep = np.ascontiguousarray(rng.normal(size=(50, 4)))
    bench_row("signature fold d=2 L=4 (8 segments)", "chen_signature", (inc_small, 4), number=20)
    bench_row("signature fold d=8 L=2 (20 segments)", "chen_signature", (inc_wide, 2), number=20)
    bench_row("signature fold d=4 L=5 (50 segments)", "chen_signature", (inc_deep, 5), number=5)

    size = sum(4**k for k in range(6))
    a, b = rng.normal(size=size), rng.normal(size=size)
    bench_row("concat product d=4 L=5", "concat_product", (a, b, 4, 5), number=10)

    m = 2000
    times = np.sort(rng.uniform(1, 60, size=m))
    events = (rng.random(m) > 0.4).astype(np.uint8)
    values = rng.normal(size=m)
    thresholds = np.sort(rng.choice(values, size=10, replace=False))
    bench_row(
        "log-rank scan (node=2000, 10 thresholds)",
        "logrank_scan",
        (times, events, values, thresholds),
        number=20,
    )

    bench_forest()


if __name__ == "__main__":
    main()
