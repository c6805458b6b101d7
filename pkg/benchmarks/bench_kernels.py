"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--sizes 256 1024 2048] [--dim 32] [--repeat 5]
"""
import argparse
import os
import timeit

import numpy as np

from nsalign import _fallback, kernels


def backends():
    out = {"python": _fallback}
    if kernels.BACKEND == "compiled":
        out["compiled"] = kernels._impl
    return out


def bench(impl, n, dim, repeat, threads):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((n, dim))
    z = rng.standard_normal((n, 3))
    ref = impl.pairwise_distances(x, threads) / 5.0
    nz = float(np.linalg.norm(z, axis=1).max())
    t_dist = min(timeit.repeat(lambda: impl.pairwise_distances(x, threads), number=1, repeat=repeat))
    t_rows = min(timeit.repeat(lambda: impl.gnsa_rows(z, ref, nz, 1e-12, 0.0, threads), number=1, repeat=repeat))
    return t_dist, t_rows


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--sizes", type=int, nargs="+", default=[256, 1024, 2048])
    parser.add_argument("--dim", type=int, default=32)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--threads", type=int, default=int(os.environ.get("NSA_THREADS", "0")))
    args = parser.parse_args()
    impls = backends()
    if "compiled" not in impls:
        print("compiled extension not available; timing the python backend only")
    print(f"{'backend':<10}{'N':>6}{'pairwise (ms)':>16}{'gnsa_rows (ms)':>16}")
    rows = {}
    for n in args.sizes:
        for name, impl in impls.items():
            rows[name, n] = bench(impl, n, args.dim, args.repeat, args.threads)
            t_dist, t_rows = rows[name, n]
            print(f"{name:<10}{n:>6}{1e3 * t_dist:>16.2f}{1e3 * t_rows:>16.2f}")
    if "compiled" in impls:
        print("\nspeed-up of compiled over python")
        for n in args.sizes:
            (pd, pr), (cd, cr) = rows["python", n], rows["compiled", n]
            print(f"  N={n:<6} pairwise x{pd / cd:.2f}   gnsa_rows x{pr / cr:.2f}")


if __name__ == "__main__":
    main()
