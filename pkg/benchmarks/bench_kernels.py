"""Compare the compiled and pure-Python kernels.

Usage::

    python benchmarks/bench_kernels.py [--repeat N]

Times downset enumeration on two-thread ladders and the oracle's strict-order
filter on antichains, for both backends, and checks that they agree.
"""

from __future__ import annotations

import argparse
import statistics
import time

from ccm import _pykernels

try:
    from ccm import _kernels
except ImportError:  # extension not built
    _kernels = None


def ladder(k: int) -> list[int]:
    """Two chains of length ``k`` joined by a final op."""
    n = 2 * k + 1
    pred = [0] * n
    for i in range(1, k):
        pred[i] = pred[i - 1] | 1 << (i - 1)
        pred[k + i] = pred[k + i - 1] | 1 << (k + i - 1)
    pred[n - 1] = (1 << (n - 1)) - 1
    return pred


def antichain_candidates(n: int):
    cand = [(a, b) for a in range(n) for b in range(n) if a != b]
    return [0] * n, [a for a, _ in cand], [b for _, b in cand], (1 << n) - 1


def timeit(fn, repeat: int) -> float:
    samples = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t)
    return statistics.median(samples)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [("python", _pykernels)] + ([("cython", _kernels)] if _kernels else [])
    if _kernels is None:
        print("compiled extension not available; timing the Python backend only")

    cases = []
    for k in (6, 10, 14):
        pred = ladder(k)
        topo = list(range(len(pred)))
        cases.append((f"downsets ladder k={k}", lambda m, p=pred, t=topo: m.downset_masks(p, t)))
    for n in (3, 4):
        base, ca, cb, carrier = antichain_candidates(n)
        cases.append((f"strict orders antichain n={n}", lambda m, a=(base, ca, cb, carrier): m.strict_orders(*a)))

    print(f"{'case':<32} " + " ".join(f"{name:>12}" for name, _ in backends) + ("   speedup" if len(backends) == 2 else ""))
    for label, fn in cases:
        results = [sorted(fn(mod)) for _, mod in backends]
        assert all(r == results[0] for r in results), f"backends disagree on {label}"
        times = [timeit(lambda mod=mod: fn(mod), args.repeat) for _, mod in backends]
        row = f"{label:<32} " + " ".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"   {times[0] / times[1]:>6.1f}x"
        print(row + f"   ({len(results[0])} results)")


if __name__ == "__main__":
    main()
