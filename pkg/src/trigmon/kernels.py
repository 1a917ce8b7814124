"""Inner loops shared by the rank test, the change-point scan and the KS metric.

Every kernel exists twice: a numpy version (``*_np``) and a loop version that
numba compiles. The module-level names point at the compiled version when
numba is usable and at the numpy version otherwise; ``BACKEND`` says which.
All kernels take contiguous float64 arrays.
"""
import math

import numpy as np

from ._accel import HAVE_NUMBA, njit_or_none

__all__ = [
    "BACKEND",
    "rank_ties",
    "u_and_variance",
    "split_profile",
    "ks_sorted",
    "numpy_kernels",
    "numba_kernels",
]


# --- numpy reference path ---------------------------------------------------

def rank_ties_np(x):
    n = x.shape[0]
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    change = np.empty(n, dtype=np.bool_)
    change[0] = True
    change[1:] = xs[1:] != xs[:-1]
    starts = np.flatnonzero(change)
    ends = np.append(starts[1:], n)
    counts = ends - starts
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = np.repeat((starts + ends + 1) / 2.0, counts)
    c = counts.astype(np.float64)
    return ranks, float(np.sum(c * c * c - c))


def u_and_variance_np(a, b):
    n1 = a.shape[0]
    n2 = b.shape[0]
    n = n1 + n2
    ranks, ties = rank_ties_np(np.concatenate((a, b)))
    u = float(ranks[:n1].sum()) - n1 * (n1 + 1) / 2.0
    var = (n1 * n2 / 12.0) * ((n + 1) - ties / (n * (n - 1.0)))
    return u, var


def split_profile_np(values, min_seg):
    n = values.shape[0]
    ranks, ties = rank_ties_np(values)
    s = np.arange(min_seg, n - min_seg + 1, dtype=np.float64)
    r1 = np.cumsum(ranks)[min_seg - 1 : n - min_seg]
    u = r1 - s * (s + 1) / 2.0
    var = (s * (n - s) / 12.0) * ((n + 1) - ties / (n * (n - 1.0)))
    z = np.zeros_like(s)
    ok = var > 0
    z[ok] = (u[ok] - s[ok] * (n - s[ok]) / 2.0) / np.sqrt(var[ok])
    return z


def ks_sorted_np(a, b):
    pooled = np.concatenate((a, b))
    fa = np.searchsorted(a, pooled, side="right") / a.shape[0]
    fb = np.searchsorted(b, pooled, side="right") / b.shape[0]
    return float(np.max(np.abs(fa - fb)))


# --- loop path (compiled by numba) -----------------------------------------

def _rank_ties_loop(x):
    n = x.shape[0]
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(n, dtype=np.float64)
    ties = 0.0
    i = 0
    while i < n:
        j = i + 1
        v = x[order[i]]
        while j < n and x[order[j]] == v:
            j += 1
        r = (i + j + 1) / 2.0
        for k in range(i, j):
            ranks[order[k]] = r
        t = float(j - i)
        ties += t * t * t - t
        i = j
    return ranks, ties


_rank_ties_nb = njit_or_none(_rank_ties_loop)


def _u_and_variance_loop(a, b):
    n1 = a.shape[0]
    n2 = b.shape[0]
    n = n1 + n2
    pooled = np.empty(n, dtype=np.float64)
    pooled[:n1] = a
    pooled[n1:] = b
    ranks, ties = _rank_ties_nb(pooled)
    r1 = 0.0
    for i in range(n1):
        r1 += ranks[i]
    u = r1 - n1 * (n1 + 1) / 2.0
    var = (n1 * n2 / 12.0) * ((n + 1) - ties / (n * (n - 1.0)))
    return u, var


def _split_profile_loop(values, min_seg):
    n = values.shape[0]
    ranks, ties = _rank_ties_nb(values)
    m = n - 2 * min_seg + 1
    z = np.zeros(m, dtype=np.float64)
    corr = (n + 1) - ties / (n * (n - 1.0))
    r1 = 0.0
    for i in range(min_seg - 1):
        r1 += ranks[i]
    for k in range(m):
        s = min_seg + k
        r1 += ranks[s - 1]
        u = r1 - s * (s + 1) / 2.0
        var = (s * (n - s) / 12.0) * corr
        if var > 0:
            z[k] = (u - s * (n - s) / 2.0) / math.sqrt(var)
    return z


def _ks_sorted_loop(a, b):
    na = a.shape[0]
    nb = b.shape[0]
    i = 0
    j = 0
    d = 0.0
    while i < na and j < nb:
        x = min(a[i], b[j])
        while i < na and a[i] <= x:
            i += 1
        while j < nb and b[j] <= x:
            j += 1
        gap = abs(i / na - j / nb)
        if gap > d:
            d = gap
    return d


if HAVE_NUMBA:
    _u_and_variance_nb = njit_or_none(_u_and_variance_loop)
    _split_profile_nb = njit_or_none(_split_profile_loop)
    _ks_sorted_nb = njit_or_none(_ks_sorted_loop)

numpy_kernels = {
    "rank_ties": rank_ties_np,
    "u_and_variance": u_and_variance_np,
    "split_profile": split_profile_np,
    "ks_sorted": ks_sorted_np,
}

if HAVE_NUMBA:
    numba_kernels = {
        "rank_ties": _rank_ties_nb,
        "u_and_variance": _u_and_variance_nb,
        "split_profile": _split_profile_nb,
        "ks_sorted": _ks_sorted_nb,
    }
    BACKEND = "numba"
else:
    numba_kernels = None
    BACKEND = "numpy"

_active = numba_kernels if numba_kernels is not None else numpy_kernels
rank_ties = _active["rank_ties"]
u_and_variance = _active["u_and_variance"]
split_profile = _active["split_profile"]
ks_sorted = _active["ks_sorted"]
