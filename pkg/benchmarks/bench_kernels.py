"""Time the numba and numpy kernels on batched surface evaluations.

    python3 benchmarks/bench_kernels.py [--rows 100000] [--repeat 5]

StableSwap is the interesting case: each row needs a bracketed root solve,
which numba runs as a scalar loop and numpy runs as masked vector Newton.
"""

import argparse
import timeit

import numpy as np

from ammil import AmmSpec
from ammil import _kernels


def cases(rows, rng):
    specs = [
        ("constant-product n=3", AmmSpec.constant_product(3), 8.0),
        ("weighted-g3m n=3", AmmSpec.weighted_g3m([0.5, 0.3, 0.2]), 2.0),
        ("stableswap n=2", AmmSpec.stableswap(2, amp=1.0, d=1.0), 1.0),
        ("stableswap n=3", AmmSpec.stableswap(3, amp=50.0, d=3.0), 3.0),
    ]
    for name, spec, level in specs:
        Xhat = np.exp(rng.uniform(np.log(0.1), np.log(0.9), size=(rows, spec.n - 1)))
        yield name, spec, level, Xhat


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=100_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _kernels.numba_kernels is None:
        raise SystemExit("numba is not importable; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'case':<22}{'op':<12}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}")
    for name, spec, level, Xhat in cases(args.rows, rng):
        w = spec.weight_array
        X = np.column_stack([Xhat, np.ones(args.rows)])
        ops = {"solve_last": ("solve_last", Xhat), "gradient": ("gradient", X)}
        for label, (attr, data) in ops.items():
            times = {}
            for backend in (_kernels.numpy_kernels, _kernels.numba_kernels):
                fn = getattr(backend, attr)
                fn(spec.code, w, float(spec.amp or 0.0), level, data)  # warm up / compile
                t = min(timeit.repeat(lambda: fn(spec.code, w, float(spec.amp or 0.0), level, data),
                                      number=1, repeat=args.repeat))
                times[backend.name] = t * 1e3
            np.testing.assert_allclose(
                getattr(_kernels.numba_kernels, attr)(spec.code, w, float(spec.amp or 0.0), level, data),
                getattr(_kernels.numpy_kernels, attr)(spec.code, w, float(spec.amp or 0.0), level, data),
                rtol=1e-12, equal_nan=True)
            speedup = times["numpy"] / times["numba"]
            print(f"{name:<22}{label:<12}{times['numpy']:>10.2f}{times['numba']:>10.2f}{speedup:>8.1f}x")


if __name__ == "__main__":
    main()
