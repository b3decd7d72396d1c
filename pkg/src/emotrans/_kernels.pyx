# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. ``emotrans._fallback`` mirrors every function here.

Both versions must return bit-identical results: split criteria are computed
as ``double(int numerator) / double(int denominator)`` in the same order so
tie-breaking never depends on the backend.
"""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free, qsort

cnp.import_array()

cdef enum:
    NO_ACT = 16
    N_STATES = 17


ctypedef struct Pair:
    double v
    int y


cdef int _cmp_pair(const void* a, const void* b) noexcept nogil:
    cdef double va = (<const Pair*>a).v
    cdef double vb = (<const Pair*>b).v
    if va < vb:
        return -1
    if va > vb:
        return 1
    return 0


cdef Py_ssize_t _tile(const long long[:] times, const signed char[:] bits,
                      Py_ssize_t lo, Py_ssize_t hi, long long window,
                      long long step, signed char* out) noexcept nogil:
    # out must hold n_windows entries; returns n_windows
    cdef long long t0 = times[lo]
    cdef Py_ssize_t n_win = <Py_ssize_t>((times[hi - 1] - t0) // step) + 1
    cdef Py_ssize_t i, w, w_lo, w_hi
    cdef long long d
    for w in range(n_win):
        out[w] = -1
    for i in range(lo, hi):
        d = times[i] - t0
        w_hi = <Py_ssize_t>(d // step)
        if d < window:
            w_lo = 0
        else:
            w_lo = <Py_ssize_t>((d - window) // step) + 1
        for w in range(w_lo, w_hi + 1):
            if out[w] < 0:
                out[w] = 0
            out[w] = out[w] | bits[i]
    for w in range(n_win):
        if out[w] < 0:
            out[w] = NO_ACT
    return n_win


def tile_windows(const long long[:] times, const signed char[:] bits,
                 long long window, long long step):
    """State sequence for one sorted timeline (see fingerprint.window_states)."""
    cdef Py_ssize_t n = times.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int8)
    cdef Py_ssize_t n_win = <Py_ssize_t>((times[n - 1] - times[0]) // step) + 1
    out = np.empty(n_win, dtype=np.int8)
    cdef signed char[:] ov = out
    with nogil:
        _tile(times, bits, 0, n, window, step, &ov[0])
    return out


def batch_transition_counts(const long long[:] times, const signed char[:] bits,
                            const long long[:] offsets, long long window,
                            long long step):
    """Counts and window totals for many users packed CSR-style by ``offsets``."""
    cdef Py_ssize_t n_users = offsets.shape[0] - 1
    counts = np.zeros((n_users, N_STATES, N_STATES), dtype=np.int64)
    n_windows = np.zeros(n_users, dtype=np.int64)
    cdef long long[:, :, :] cv = counts
    cdef long long[:] nv = n_windows
    cdef Py_ssize_t u, lo, hi, k, n_win, cap = 0
    cdef signed char* buf = NULL
    try:
        with nogil:
            for u in range(n_users):
                lo = offsets[u]
                hi = offsets[u + 1]
                if hi <= lo:
                    continue
                n_win = <Py_ssize_t>((times[hi - 1] - times[lo]) // step) + 1
                if n_win > cap:
                    free(buf)
                    buf = <signed char*>malloc(n_win * sizeof(signed char))
                    if buf == NULL:
                        with gil:
                            raise MemoryError()
                    cap = n_win
                _tile(times, bits, lo, hi, window, step, buf)
                nv[u] = n_win
                for k in range(n_win - 1):
                    cv[u, buf[k], buf[k + 1]] += 1
    finally:
        free(buf)
    return counts, n_windows


def best_split(const double[:, ::1] X, const signed char[:] y,
               const Py_ssize_t[:] samples, const Py_ssize_t[:] features,
               Py_ssize_t max_features, Py_ssize_t min_leaf=1):
    """Best Gini split over the first ``max_features`` non-constant features.

    Only thresholds leaving at least ``min_leaf`` samples on each side count.

    Returns ``(feature, threshold)`` or ``(-1, nan)`` when every candidate
    feature is constant on the node.
    """
    cdef Py_ssize_t n = samples.shape[0]
    cdef Py_ssize_t n_feat = features.shape[0]
    cdef Py_ssize_t i, fi, f, visited = 0, best_f = -1
    cdef long long n_pos = 0, pl, nl, nr, pr, num, den
    cdef double crit, best_crit = 0.0, thr, best_thr = 0.0
    cdef Pair* pairs = <Pair*>malloc(n * sizeof(Pair))
    if pairs == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(n):
                n_pos += y[samples[i]]
            for fi in range(n_feat):
                if visited >= max_features:
                    break
                f = features[fi]
                for i in range(n):
                    pairs[i].v = X[samples[i], f]
                    pairs[i].y = y[samples[i]]
                qsort(pairs, n, sizeof(Pair), _cmp_pair)
                if pairs[0].v == pairs[n - 1].v:
                    continue
                visited += 1
                pl = 0
                for i in range(n - 1):
                    pl += pairs[i].y
                    if not (pairs[i + 1].v > pairs[i].v):
                        continue
                    nl = i + 1
                    nr = n - nl
                    if nl < min_leaf or nr < min_leaf:
                        continue
                    pr = n_pos - pl
                    num = pl * (nl - pl) * nr + pr * (nr - pr) * nl
                    den = nl * nr
                    crit = <double>num / <double>den
                    if best_f < 0 or crit < best_crit:
                        thr = 0.5 * (pairs[i].v + pairs[i + 1].v)
                        if thr == pairs[i + 1].v:
                            thr = pairs[i].v
                        best_crit = crit
                        best_thr = thr
                        best_f = f
    finally:
        free(pairs)
    if best_f < 0:
        return -1, float("nan")
    return best_f, best_thr
