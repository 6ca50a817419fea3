"""Compare the compiled and numpy orbit kernels on the same workloads.

Usage: python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from bowenhit import kernels
from bowenhit.automaton import PatternAutomaton
from bowenhit.systems import SystemDescriptor, to_fixed
from bowenhit.tower import TowerPoint, TowerSpec, _kernel_args, sample_srb, tower_ball


def workloads():
    fair = SystemDescriptor.bernoulli((0.5, 0.5))
    aut = PatternAutomaton([(1, 0, 1, 1, 0, 1, 0, 0)], 2)
    shift = (fair.cdf0, fair.cdf, aut.delta, aut.accept.astype(np.uint8), 8)
    ids = np.arange(2000, dtype=np.uint64)
    yield "shift_hits (L=8, M=2000)", lambda k: k.shift_hits(ids, 1, *shift, 1, 20_000)
    yield "doubling_hits (mu=2^-10, M=2000)", lambda k: k.doubling_hits(
        ids, 1, to_fixed(0.3), 1 << 53, 1, 50_000)
    spec = TowerSpec(9.0, 10_000)
    centre = TowerPoint(3, 1, sample_srb(spec, 7, 0).address)
    ball = tower_ball(spec, centre, 0.25, 4)
    cmap, taut, pre = _kernel_args(spec, ball)
    tids = np.arange(500, dtype=np.uint64)
    yield f"tower_hits (mu={ball.mu:.1e}, M=500)", lambda k: k.tower_hits(
        tids, 1, spec.col_cdf, spec.srb_cdf, spec.heights, cmap, taut.delta,
        taut.accept.astype(np.uint8), pre, ball.level, 1, 200_000)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}")
    for label, fn in workloads():
        times, results = {}, {}
        for name, mod in backends.items():
            best = float("inf")
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                results[name] = fn(mod)
                best = min(best, time.perf_counter() - t0)
            times[name] = best
        same = all(np.array_equal(r, next(iter(results.values()))) for r in results.values())
        cols = "  ".join(f"{n} {t * 1e3:9.1f} ms" for n, t in times.items())
        speed = ""
        if "compiled" in times and "numpy" in times:
            speed = f"  speedup x{times['numpy'] / times['compiled']:.1f}"
        print(f"{label:38s} {cols}{speed}  identical={same}")


if __name__ == "__main__":
    main()
