"""Time the numba kernels against their numpy fallbacks.

Run: python benchmarks/bench_kernels.py [--repeat N]
Sizes follow one default evaluation: 250 segments with 256-long envelope
vectors; MHD uses 100 sets of 128 points and the SVM 2000-dim inputs.
"""
import argparse
import time

import numpy as np

from mdgesture import kernels


def _cases(rng):
    env = rng.random((250, 256))
    sets = [np.column_stack([np.linspace(0, 1, 128), rng.random(128)]) for _ in range(100)]
    pts, off = kernels.pack_point_sets(sets)
    band = rng.random((433, 2048)) ** 4
    thr = band.sum(axis=1) * rng.uniform(0.5, 0.99, 433)
    active = np.ones(433, dtype=bool)
    cloud = rng.random((2000, 2))
    cents = rng.random((10, 2))
    Z = np.column_stack([rng.standard_normal((175, 2000)), np.ones(175)])
    Y = np.where(np.arange(5)[:, None] == rng.integers(0, 5, 175), 1.0, -1.0)
    order = rng.integers(0, 175, 175 * 20).astype(np.int64)
    return {
        "pairwise_l1": (env, env),
        "pairwise_l2": (env, env),
        "pairwise_mhd": (pts, off, pts, off),
        "edge_crossing": (band, thr, active),
        "assign": (cloud, cents),
        "pegasos": (Z, Y, order, 1e-3),
    }


def _best(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if kernels.numba_kernels is None:
        raise SystemExit("numba is not installed; nothing to compare")
    cases = _cases(np.random.default_rng(args.seed))
    print(f"{'kernel':<16}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}{'max |diff|':>12}")
    for name, cargs in cases.items():
        f_np = getattr(kernels.numpy_kernels, name)
        f_nb = getattr(kernels.numba_kernels, name)
        a, b = f_np(*cargs), f_nb(*cargs)  # second call also triggers compilation
        a = a if isinstance(a, tuple) else (a,)
        b = b if isinstance(b, tuple) else (b,)
        diff = max(float(np.max(np.abs(np.asarray(x, float) - np.asarray(y, float)))) for x, y in zip(a, b))
        t_np = _best(f_np, cargs, args.repeat)
        t_nb = _best(f_nb, cargs, args.repeat)
        print(f"{name:<16}{t_np * 1e3:>12.2f}{t_nb * 1e3:>12.2f}{t_np / t_nb:>9.1f}x{diff:>12.2e}", flush=True)


if __name__ == "__main__":
    main()
