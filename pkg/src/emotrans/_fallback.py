"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Used when the extension is not built, or when ``EMOTRANS_BACKEND=python``.
Outputs match the compiled versions exactly (same dtypes, same tie-breaks).
"""
from __future__ import annotations

import numpy as np

NO_ACT = 16
N_STATES = 17


def tile_windows(times, bits, window, step):
    times = np.asarray(times, dtype=np.int64)
    bits = np.asarray(bits, dtype=np.int8)
    if times.size == 0:
        return np.empty(0, dtype=np.int8)
    d = times - times[0]
    n_win = int(d[-1] // step) + 1
    w_hi = d // step
    if window == step:
        # each post lands in exactly one window
        acc = np.zeros(n_win, dtype=np.int8)
        np.bitwise_or.at(acc, w_hi, bits)
        seen = np.zeros(n_win, dtype=bool)
        seen[w_hi] = True
    else:
        w_lo = np.where(d < window, 0, (d - window) // step + 1)
        acc = np.zeros(n_win, dtype=np.int8)
        seen = np.zeros(n_win, dtype=bool)
        for lo, hi, b in zip(w_lo.tolist(), w_hi.tolist(), bits.tolist()):
            acc[lo:hi + 1] |= b
            seen[lo:hi + 1] = True
    return np.where(seen, acc, NO_ACT).astype(np.int8)


def batch_transition_counts(times, bits, offsets, window, step):
    times = np.asarray(times, dtype=np.int64)
    bits = np.asarray(bits, dtype=np.int8)
    offsets = np.asarray(offsets, dtype=np.int64)
    n_users = offsets.size - 1
    counts = np.zeros((n_users, N_STATES, N_STATES), dtype=np.int64)
    n_windows = np.zeros(n_users, dtype=np.int64)
    for u in range(n_users):
        lo, hi = offsets[u], offsets[u + 1]
        if hi <= lo:
            continue
        states = tile_windows(times[lo:hi], bits[lo:hi], window, step).astype(np.int64)
        n_windows[u] = states.size
        if states.size > 1:
            flat = np.bincount(states[:-1] * N_STATES + states[1:],
                               minlength=N_STATES * N_STATES)
            counts[u] = flat.reshape(N_STATES, N_STATES)
    return counts, n_windows


def best_split(X, y, samples, features, max_features, min_leaf=1):
    samples = np.asarray(samples, dtype=np.intp)
    ys = np.asarray(y, dtype=np.int64)[samples]
    n = samples.size
    n_pos = int(ys.sum())
    nl_all = np.arange(1, n, dtype=np.int64)
    best_f, best_crit, best_thr = -1, 0.0, 0.0
    visited = 0
    for f in features:
        if visited >= max_features:
            break
        v = X[samples, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        if vs[0] == vs[-1]:
            continue
        visited += 1
        pl_all = np.cumsum(ys[order])[:-1]
        ok = vs[1:] > vs[:-1]
        if min_leaf > 1:
            ok &= (nl_all >= min_leaf) & (n - nl_all >= min_leaf)
        if not ok.any():
            continue
        nl = nl_all[ok]
        pl = pl_all[ok]
        nr = n - nl
        pr = n_pos - pl
        num = pl * (nl - pl) * nr + pr * (nr - pr) * nl
        crit = num.astype(np.float64) / (nl * nr).astype(np.float64)
        k = int(np.argmin(crit))
        if best_f < 0 or crit[k] < best_crit:
            i = int(np.flatnonzero(ok)[k])
            thr = 0.5 * (vs[i] + vs[i + 1])
            if thr == vs[i + 1]:
                thr = vs[i]
            best_f, best_crit, best_thr = int(f), float(crit[k]), float(thr)
    if best_f < 0:
        return -1, float("nan")
    return best_f, best_thr
