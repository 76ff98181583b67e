"""Compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 20]

Prints one row per kernel and size with the best-of-repeat time of each
backend and the speedup. Outputs are checked for agreement before timing.
"""
import argparse
import timeit

import numpy as np

from qsqlearn import _pykernels

try:
    from qsqlearn import _ckernels
except ImportError:
    _ckernels = None


def _inplace(op, arr):
    out = arr.copy()
    op(out)
    return out


def cases(rng):
    for n in (8, 12, 16):
        vec = rng.standard_normal(1 << n)
        yield "fwht", n, lambda k, v=vec: _inplace(k.fwht_inplace, v)
    for n in (8, 12):
        rows = rng.standard_normal((64, 1 << n))
        yield "fwht_rows x64", n, lambda k, r=rows: _inplace(k.fwht_rows_inplace, r)
    for n in (10, 16):
        coeffs = rng.standard_normal(1 << n)
        ones, free = 0b1, (1 << n) - 2
        yield "pattern_mass", n, lambda k, c=coeffs, o=ones, f=free: k.pattern_mass(c, o, f)
        ones, free = 0b11, 0b1111 << 4
        yield "pattern_mass 16 members", n, lambda k, c=coeffs, o=ones, f=free: k.pattern_mass(c, o, f)


def best(fn, kernels, repeat):
    timer = timeit.Timer(lambda: fn(kernels))
    loops, _ = timer.autorange()
    return min(timer.repeat(repeat, loops)) / loops


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args()
    if _ckernels is None:
        raise SystemExit("compiled extension not built; run pip install -e . --no-build-isolation")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<26}{'n':>4}{'python (us)':>14}{'cython (us)':>14}{'speedup':>10}")
    for name, n, fn in cases(rng):
        a, b = fn(_pykernels), fn(_ckernels)
        assert np.allclose(a, b, atol=1e-9), name
        py = best(fn, _pykernels, args.repeat)
        cy = best(fn, _ckernels, args.repeat)
        print(f"{name:<26}{n:>4}{py * 1e6:>14.1f}{cy * 1e6:>14.1f}{py / cy:>10.1f}")


if __name__ == "__main__":
    main()
