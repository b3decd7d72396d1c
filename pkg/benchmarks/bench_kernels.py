"""Compiled vs pure-Python kernels: windowing, batch transition counts, split search, forest fit.

    python3 benchmarks/bench_kernels.py [--users 400] [--repeat 3]

Prints a table of best-of-N wall times per backend and checks the two backends
agree bit for bit on every workload.
"""
import argparse
import time

import numpy as np

from emotrans import kernels
from emotrans.models.forest import RandomForest

WINDOW = 1800


def make_timelines(n_users, rng):
    times, bits, offsets = [], [], [0]
    for _ in range(n_users):
        n = int(rng.integers(50, 400))
        t = 1_400_000_000 + np.sort(rng.integers(0, 500 * WINDOW, n))
        times.append(t)
        bits.append(rng.integers(0, 16, n).astype(np.int8))
        offsets.append(offsets[-1] + n)
    return np.concatenate(times), np.concatenate(bits), np.array(offsets, dtype=np.int64)


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--users", type=int, default=400)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--trees", type=int, default=50)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    times, bits, offsets = make_timelines(args.users, rng)
    one_t, one_b = times[offsets[0]:offsets[1]], bits[offsets[0]:offsets[1]]
    X = rng.random((280, 289))
    y = (X[:, :5].sum(axis=1) + 0.3 * rng.standard_normal(280) > 2.5).astype(np.int8)
    samples = np.arange(280)
    features = rng.permutation(289)

    workloads = {
        "tile_windows (1 user, overlapping)": lambda: kernels.tile_windows(one_t, one_b, 3 * WINDOW, WINDOW),
        f"batch_transition_counts ({args.users} users)":
            lambda: kernels.batch_transition_counts(times, bits, offsets, WINDOW, WINDOW),
        "best_split (280 x 289, all features)":
            lambda: kernels.best_split(X, y, samples, features, 289, 1),
        f"forest fit ({args.trees} trees, 280 x 289)":
            lambda: RandomForest(n_trees=args.trees, seed=1).fit(X, y).predict_proba(X),
    }
    if "compiled" not in kernels.BACKENDS:
        print("compiled extension not built; only the python backend is available")
    print(f"{'workload':45s} {'python s':>10s} {'compiled s':>11s} {'speedup':>8s}  match")
    for name, fn in workloads.items():
        with kernels.use_backend("python"):
            t_py, out_py = best_of(fn, args.repeat)
        if "compiled" in kernels.BACKENDS:
            with kernels.use_backend("compiled"):
                t_c, out_c = best_of(fn, args.repeat)
            print(f"{name:45s} {t_py:10.4f} {t_c:11.4f} {t_py / t_c:7.1f}x  {same(out_py, out_c)}")
        else:
            print(f"{name:45s} {t_py:10.4f} {'-':>11s} {'-':>8s}  -")


if __name__ == "__main__":
    main()
