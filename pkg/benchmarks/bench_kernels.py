"""Compare the compiled kernels with the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Prints microseconds per call for the victim scan and the mid-rank
percentile at several resident-set sizes, then wall time of a full
simulation with each backend (the backend is chosen in a subprocess via
LRCCACHE_PURE so the import-time switch is exercised for real).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from lrccache import _kernels_py

try:
    from lrccache import _kernels as _compiled
except ImportError:
    _compiled = None

SIM = (
    "import time;from lrccache import run, BACKEND;"
    "from lrccache.workloads import generate, GeneratorParams;"
    "d=generate(GeneratorParams(iterations=40, blocks_per_stage=32, seed=1));"
    "t=time.perf_counter();[run(d,p,d.total_bytes//3) for p in ('lru','lrc','min')];"
    "print(BACKEND, round(time.perf_counter()-t,3))"
)


def bench_kernels(repeat):
    rng = np.random.default_rng(0)
    backends = [("python", _kernels_py)] + ([("cython", _compiled)] if _compiled else [])
    print(f"{'kernel':<20}{'n':>8}" + "".join(f"{name + ' us':>14}" for name, _ in backends))
    for n in (64, 1024, 16384):
        primary = rng.integers(0, 10, n, dtype=np.int64)
        secondary = rng.permutation(n).astype(np.int64)
        slots = np.arange(n, dtype=np.int64)
        pinned = (rng.random(n) < 0.05).astype(np.uint8)
        row_v, row_m = [], []
        for _, mod in backends:
            t = timeit.timeit(lambda: mod.select_victim(primary, secondary, slots, n, pinned),
                              number=repeat)
            row_v.append(1e6 * t / repeat)
            t = timeit.timeit(lambda: mod.midrank_percentile(primary, slots, n, 5), number=repeat)
            row_m.append(1e6 * t / repeat)
        print(f"{'select_victim':<20}{n:>8}" + "".join(f"{x:>14.2f}" for x in row_v))
        print(f"{'midrank_percentile':<20}{n:>8}" + "".join(f"{x:>14.2f}" for x in row_m))


def bench_sim():
    for pure in ("1", "0"):
        env = dict(os.environ, LRCCACHE_PURE=pure)
        out = subprocess.run([sys.executable, "-c", SIM], env=env, capture_output=True,
                             text=True, check=True).stdout.strip()
        print("full simulation (backend, seconds):", out)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=2000)
    args = ap.parse_args()
    bench_kernels(args.repeat)
    bench_sim()


if __name__ == "__main__":
    main()
