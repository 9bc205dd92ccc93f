"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--sizes 33,65,129] [--repeat 5]

Both backends are imported directly, so the environment switch does not matter.
Results are printed as a table and checked for agreement.
"""

import argparse
import sys
import timeit

import numpy as np
import scipy.sparse as sp

from cdii import _kernels_py, kernels


def _cases(N, n, rng):
    dims = (N,) * n
    spacing = tuple([1.0 / (N - 1)] * n)
    a = rng.standard_normal(dims + (n, n)) * 0.1
    coef = np.eye(n) + 0.5 * (a + np.swapaxes(a, -1, -2))
    F = rng.standard_normal(dims + (n,))
    pts = rng.uniform(0, 1, size=(N ** n, n))
    targets = rng.uniform(0, 1, size=(min(N ** n, 4000), n))
    origin = (0.0,) * n
    return {
        "assemble_stencil": (lambda m: m.assemble_stencil(coef, spacing)),
        "interpolate": (lambda m: m.interpolate(F, origin, spacing, pts)),
        "integrate_segments": (lambda m: m.integrate_segments(F, origin, spacing, np.full(n, 0.5), targets)),
    }


def _agree(ref, out):
    # triplet order may differ between backends; compare the assembled matrix
    if isinstance(ref, tuple):
        a, b = (sp.coo_matrix((v, (r, c))).tocsr() for r, c, v in (ref, out))
        return a.shape == b.shape and abs(a - b).max() <= 1e-12 * max(abs(a).max(), 1.0)
    return np.allclose(ref, out, rtol=1e-12, atol=1e-12, equal_nan=True)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="33,65,129", help="2D node counts per axis")
    p.add_argument("--sizes3d", default="17,33", help="3D node counts per axis")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    fast = kernels.compiled()
    if fast is None:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':<20} {'grid':>10} {'python [s]':>12} {'cython [s]':>12} {'speedup':>8}")
    runs = [(int(s), 2) for s in args.sizes.split(",")] + [(int(s), 3) for s in args.sizes3d.split(",")]
    for N, n in runs:
        for name, fn in _cases(N, n, rng).items():
            if not _agree(fn(_kernels_py), fn(fast)):
                print(f"{name}: backends disagree", file=sys.stderr)
                return 1
            tp = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat))
            tc = min(timeit.repeat(lambda: fn(fast), number=1, repeat=args.repeat))
            print(f"{name:<20} {'x'.join([str(N)] * n):>10} {tp:12.4f} {tc:12.4f} {tp / tc:8.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
