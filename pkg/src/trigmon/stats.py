"""Nonparametric statistics: midranks, the Mann-Whitney U test, empirical
CDFs, KS distance and a rank-based change-point scan.

Everything here is a pure function of its inputs.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from . import kernels

__all__ = [
    "EmpiricalCdf",
    "UStatResult",
    "ChangePointEstimate",
    "midranks",
    "mann_whitney_u",
    "exact_permutation_p",
    "ecdf",
    "ks_distance",
    "change_point_scan",
    "normal_two_sided_p",
    "EXACT_ENUMERATION_LIMIT",
]

EXACT_ENUMERATION_LIMIT = 14
_P_FLOOR = sys.float_info.min


def _as_sample(values) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError("empty sample")
    return arr


@dataclass(frozen=True)
class UStatResult:
    u: float
    z: float
    p_two_sided: float


@dataclass(frozen=True)
class ChangePointEstimate:
    """Best split of a sequence.

    ``split_index`` is the first index of the post-change segment and
    ``p_value`` is already Bonferroni-adjusted over all candidate splits.
    """

    split_index: int
    z_abs: float
    p_value: float


class EmpiricalCdf:
    """Right-continuous step CDF of a finite sample.

    Calling the object evaluates ``#{v <= x} / n``; it accepts scalars or arrays.
    """

    __slots__ = ("sorted_values",)

    def __init__(self, sorted_values):
        arr = np.asarray(sorted_values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("empty sample")
        if arr.size > 1 and np.any(arr[1:] < arr[:-1]):
            raise ValueError("sorted_values must be non-decreasing")
        arr.setflags(write=False)
        self.sorted_values = arr

    @property
    def n(self) -> int:
        return int(self.sorted_values.size)

    def __call__(self, x):
        counts = np.searchsorted(self.sorted_values, x, side="right")
        if np.ndim(counts) == 0:
            return int(counts) / self.n
        return counts / self.n

    def breakpoints(self) -> np.ndarray:
        return np.unique(self.sorted_values)

    def __eq__(self, other):
        if not isinstance(other, EmpiricalCdf):
            return NotImplemented
        return np.array_equal(self.sorted_values, other.sorted_values)

    def __hash__(self):
        return hash(self.sorted_values.tobytes())

    def __repr__(self):
        return f"EmpiricalCdf(n={self.n})"


def normal_two_sided_p(z: float) -> float:
    """``2 * (1 - Phi(|z|))`` clamped into (0, 1]."""
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return min(1.0, max(p, _P_FLOOR))


def midranks(values: Sequence[float]) -> np.ndarray:
    """Ranks 1..n, with tied values sharing the mean of their rank positions.

    >>> midranks([7, 3, 7, 1]).tolist()
    [3.5, 2.0, 3.5, 1.0]
    """
    ranks, _ = kernels.rank_ties(_as_sample(values))
    return ranks


def mann_whitney_u(sample_a, sample_b) -> UStatResult:
    """Two-sided Mann-Whitney U test with midranks and tie-corrected variance.

    ``u`` counts pairs with ``a > b`` plus half the tied pairs. The p-value is
    the normal approximation without continuity correction. A pooled sample
    with no spread has zero variance and yields ``z = 0, p = 1``.
    """
    a = _as_sample(sample_a)
    b = _as_sample(sample_b)
    u, var = kernels.u_and_variance(a, b)
    if var <= 0.0:
        return UStatResult(u=u, z=0.0, p_two_sided=1.0)
    z = (u - a.size * b.size / 2.0) / math.sqrt(var)
    return UStatResult(u=u, z=z, p_two_sided=normal_two_sided_p(z))


@lru_cache(maxsize=256)
def _label_matrix(n: int, n1: int) -> np.ndarray:
    combos = np.array(list(combinations(range(n), n1)), dtype=np.intp)
    return combos.reshape(-1, n1)


def exact_permutation_p(sample_a, sample_b) -> float:
    """Exact two-sided permutation p-value of U by full relabelling.

    Counts relabellings of the pooled sample whose ``|U - n1*n2/2|`` is at
    least the observed one. Limited to pooled sizes of 14.
    """
    a = _as_sample(sample_a)
    b = _as_sample(sample_b)
    n1, n = a.size, a.size + b.size
    if n > EXACT_ENUMERATION_LIMIT:
        raise ValueError("too large for exact enumeration")
    ranks, _ = kernels.rank_ties(np.concatenate((a, b)))
    centre = n1 * b.size / 2.0
    offset = n1 * (n1 + 1) / 2.0
    observed = abs(ranks[:n1].sum() - offset - centre)
    u_all = ranks[_label_matrix(n, n1)].sum(axis=1) - offset
    extreme = np.abs(u_all - centre) >= observed - 1e-9
    return float(np.count_nonzero(extreme)) / u_all.size


def ecdf(values) -> EmpiricalCdf:
    return EmpiricalCdf(np.sort(_as_sample(values)))


def ks_distance(cdf_a, cdf_b) -> float:
    """Supremum distance between two step CDFs.

    Works for any objects exposing ``breakpoints()`` and vectorised
    evaluation; two :class:`EmpiricalCdf` instances take the compiled merge path.
    """
    if isinstance(cdf_a, EmpiricalCdf) and isinstance(cdf_b, EmpiricalCdf):
        return float(kernels.ks_sorted(cdf_a.sorted_values, cdf_b.sorted_values))
    points = np.union1d(cdf_a.breakpoints(), cdf_b.breakpoints())
    if points.size == 0:
        return 0.0
    fa = np.asarray(cdf_a(points), dtype=np.float64)
    fb = np.asarray(cdf_b(points), dtype=np.float64)
    return float(np.max(np.abs(fa - fb)))


def change_point_scan(values, min_seg: int, alpha: float) -> Optional[ChangePointEstimate]:
    """Locate a single change by maximising the two-sample U |z| over splits.

    Candidate splits are ``min_seg..n-min_seg``. The earliest split wins ties.
    Returns None when the sequence is too short or the Bonferroni-adjusted
    p-value of the best split is not below ``alpha``.
    """
    if min_seg < 2:
        raise ValueError("segment too small")
    x = np.ascontiguousarray(values, dtype=np.float64).ravel()
    n = x.size
    if n < 2 * min_seg:
        return None
    z = np.abs(kernels.split_profile(x, min_seg))
    top = float(z.max())
    if top == 0.0:
        return None
    # earliest split within rounding of the maximum
    k = int(np.flatnonzero(z >= top - 1e-12 * top)[0])
    p = min(1.0, normal_two_sided_p(top) * z.size)
    if p >= alpha:
        return None
    return ChangePointEstimate(split_index=min_seg + k, z_abs=top, p_value=p)
