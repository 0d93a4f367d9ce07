"""Time the systematic-scan Gibbs sweep kernel: compiled vs pure Python.

Both kernels consume identical (eta, init, uniforms) inputs and must return
identical states, so the comparison is purely about throughput. Run from
the repository root:

    python3 benchmarks/bench_gibbs.py --sweeps 20000
"""

import argparse
import time

import numpy as np

from lrfs import assoc
from lrfs._sgs_py import run_sweeps as python_sweeps

try:
    from lrfs._sgs import run_sweeps as compiled_sweeps
except ImportError:
    compiled_sweeps = None


def make_case(P, M, seed):
    rng = np.random.default_rng(seed)
    eta = np.ascontiguousarray(rng.uniform(0.05, 1.0, size=(P, M + 2)))
    init = np.zeros(P, dtype=np.int64)
    return eta, init


def run(fn, eta, init, uniforms, repeats):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = np.asarray(fn(eta, init, uniforms))
        best = min(best, time.perf_counter() - t0)
    return out, best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sweeps", type=int, default=20000)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"active kernel: {assoc.KERNEL}")
    if compiled_sweeps is None:
        print("compiled kernel unavailable; timing the fallback only")

    header = f"{'P':>4} {'M':>4} {'sweeps':>8} {'python':>12} {'compiled':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for P, M in [(2, 1), (5, 8), (10, 15), (20, 30)]:
        eta, init = make_case(P, M, args.seed)
        rng = np.random.default_rng(args.seed + 1)
        uniforms = rng.random((args.sweeps, P))
        py_out, py_t = run(python_sweeps, eta, init, uniforms, args.repeats)
        if compiled_sweeps is None:
            print(f"{P:>4} {M:>4} {args.sweeps:>8} {py_t:>11.4f}s {'-':>12} {'-':>9}")
            continue
        c_out, c_t = run(compiled_sweeps, eta, init, uniforms, args.repeats)
        if not np.array_equal(py_out, c_out):
            raise SystemExit(f"kernel outputs differ at P={P}, M={M}")
        print(
            f"{P:>4} {M:>4} {args.sweeps:>8} {py_t:>11.4f}s {c_t:>11.4f}s {py_t / c_t:>8.1f}x"
        )


if __name__ == "__main__":
    main()
