"""Sequential scan kernels (dead-time logic, correlation histograms).

All kernels take sorted int64 picosecond arrays. numba is used when present;
the same code runs as plain Python otherwise (slow but correct), which keeps
the package importable in minimal environments.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:        # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


@njit(cache=True)
def dead_time_filter(times, tau, busy_until):
    """Non-paralyzable dead-time acceptance: keep events >= busy, busy = t + tau."""
    n = times.shape[0]
    keep = np.zeros(n, np.bool_)
    for i in range(n):
        t = times[i]
        if t >= busy_until:
            keep[i] = True
            busy_until = t + tau
    return keep, busy_until


@njit(cache=True)
def sync_trigger_scan(i1, i2, busy1, busy2, last_store, last_ret,
                      t_star, tau_d1, tau_d2, insertion, store_delay,
                      ret_offset, pc_min):
    """One pass of the DDG-2 / Gate / DDG-1 / Buffer logic over sorted idler tags.

    ret_offset is the full idler-2 -> PC-2 delay (insertion + retrieval delay
    + trim). Returns accepted DDG-2 triggers, per-trial times, updated state,
    and the count of PC-1 spacing violations (must stay zero; the retrieval
    pulse is suppressed, ok=0, when PC-2 spacing would be violated or the
    Buffer is not yet armed at the trigger time).
    """
    n1 = i1.shape[0]
    n2 = i2.shape[0]
    trig2 = np.empty(n2, np.int64)
    n_t2 = 0
    tr_i1 = np.empty(n2, np.int64)
    tr_i2 = np.empty(n2, np.int64)
    tr_store = np.empty(n2, np.int64)
    tr_ret = np.empty(n2, np.int64)
    tr_ok = np.empty(n2, np.uint8)
    n_tr = 0
    pc1_violations = 0
    j = 0
    for k in range(n2):
        t2 = i2[k]
        if t2 < busy2:
            continue
        busy2 = t2 + tau_d2
        trig2[n_t2] = t2
        n_t2 += 1
        g0 = t2 + insertion
        g1 = g0 + t_star
        while j < n1 and i1[j] < g0:
            j += 1
        jj = j
        while jj < n1 and i1[jj] <= g1:
            t1 = i1[jj]
            if t1 >= busy1:
                busy1 = t1 + tau_d1
                st = t1 + insertion + store_delay
                rt = t2 + ret_offset
                if st - last_store < pc_min:
                    pc1_violations += 1
                last_store = st
                ok = np.uint8(1)
                if rt - last_ret < pc_min or t1 > rt:
                    ok = np.uint8(0)
                else:
                    last_ret = rt
                tr_i1[n_tr] = t1
                tr_i2[n_tr] = t2
                tr_store[n_tr] = st
                tr_ret[n_tr] = rt
                tr_ok[n_tr] = ok
                n_tr += 1
                break
            jj += 1
    return (trig2[:n_t2].copy(), tr_i1[:n_tr].copy(), tr_i2[:n_tr].copy(),
            tr_store[:n_tr].copy(), tr_ret[:n_tr].copy(), tr_ok[:n_tr].copy(),
            busy1, busy2, last_store, last_ret, pc1_violations)


@njit(cache=True)
def xcorr_hist(a, b, tmin, tmax, binw, counts):
    """Accumulate a histogram of (b - a) differences in [tmin, tmax).

    Linear-time merge over the sorted streams; counts is preallocated with
    (tmax - tmin) // binw bins. Returns the number of pairs binned.
    """
    nb = b.shape[0]
    total = 0
    j0 = 0
    for i in range(a.shape[0]):
        lo = a[i] + tmin
        hi = a[i] + tmax
        while j0 < nb and b[j0] < lo:
            j0 += 1
        j = j0
        while j < nb and b[j] < hi:
            counts[(b[j] - a[i] - tmin) // binw] += 1
            total += 1
            j += 1
    return total


@njit(cache=True)
def match_pairs(c1, c2, window):
    """Greedy one-to-one nearest matching of two sorted center arrays.

    Returns, for each entry of c1, the paired index in c2 or -1.
    """
    n1 = c1.shape[0]
    n2 = c2.shape[0]
    out = np.full(n1, -1, np.int64)
    j = 0
    last_used = -1
    for i in range(n1):
        while j < n2 - 1 and (c2[j] < c1[i]
                              and abs(c2[j + 1] - c1[i]) <= abs(c2[j] - c1[i])):
            j += 1
        k = j
        if k <= last_used:
            k = last_used + 1
        if k < n2 and abs(c2[k] - c1[i]) <= window:
            out[i] = k
            last_used = k
    return out
