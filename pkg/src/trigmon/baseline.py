"""Periodic-summary comparison scheme.

Each agent fills a data buffer D; every time D is full its nearest-rank
quantiles are blended into a running quantile summary Q and D is emptied.
Q is published on a fixed schedule and the collector averages summaries.
The blend is an exponentially weighted update, a stand-in for an incremental
quantile estimator rather than any particular published one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .messages import Message

__all__ = [
    "DataBuffer",
    "QuantileBuffer",
    "QuantileCurveCdf",
    "nearest_rank_index",
    "nearest_rank_quantiles",
    "isotonic",
    "buffer_push",
    "publish_summary",
    "aggregate_summaries",
]


def nearest_rank_index(p: float, n: int) -> int:
    """Zero-based index of the ``ceil(p*n)``-th order statistic (the minimum at p=0)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    # round away representation noise such as 0.3*10 = 3.0000000000000004
    k = math.ceil(round(p * n, 9))
    return max(k, 1) - 1


def nearest_rank_quantiles(values, probes: Sequence[float]) -> np.ndarray:
    xs = np.sort(np.asarray(values, dtype=np.float64))
    return xs[[nearest_rank_index(p, xs.size) for p in probes]]


def isotonic(y, weights=None) -> np.ndarray:
    """Weighted least-squares non-decreasing fit (pool adjacent violators)."""
    y = np.asarray(y, dtype=np.float64)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=np.float64)
    if y.size < 2 or np.all(np.diff(y) >= 0):
        return y.copy()
    means: List[float] = []
    wts: List[float] = []
    sizes: List[int] = []
    for yi, wi in zip(y, w):
        means.append(yi)
        wts.append(wi)
        sizes.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            tw = wts[-2] + wts[-1]
            means[-2] = (means[-2] * wts[-2] + means[-1] * wts[-1]) / tw
            wts[-2] = tw
            sizes[-2] += sizes[-1]
            del means[-1], wts[-1], sizes[-1]
    return np.repeat(means, sizes)


@dataclass
class DataBuffer:
    capacity: int
    values: List[float] = field(default_factory=list)

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("data buffer capacity must be positive")


@dataclass(frozen=True)
class QuantileBuffer:
    """Quantile estimates at fixed probes; ``weight`` counts absorbed fills."""

    probes: Tuple[float, ...]
    estimates: Tuple[float, ...] = ()
    weight: int = 0

    def __post_init__(self):
        probes = tuple(float(p) for p in self.probes)
        if not probes or any(not 0.0 < p < 1.0 for p in probes):
            raise ValueError("probes must be non-empty and lie in (0, 1)")
        if any(b <= a for a, b in zip(probes, probes[1:])):
            raise ValueError("probes must be strictly increasing")
        object.__setattr__(self, "probes", probes)
        est = tuple(float(e) for e in self.estimates)
        object.__setattr__(self, "estimates", est)
        if self.weight > 0 and len(est) != len(probes):
            raise ValueError("estimates and probes differ in length")
        if any(b < a for a, b in zip(est, est[1:])):
            raise ValueError("estimates must be non-decreasing")


def buffer_push(d: DataBuffer, q: QuantileBuffer, value: float, w: float):
    if not math.isfinite(value):
        raise ValueError("invalid observation")
    if not 0.0 < w <= 1.0:
        raise ValueError("blend weight must lie in (0, 1]")
    d.values.append(float(value))
    if len(d.values) < d.capacity:
        return d, q
    fill = nearest_rank_quantiles(d.values, q.probes)
    if q.weight == 0:
        est = fill
    else:
        old = np.asarray(q.estimates)
        est = isotonic(old + w * (fill - old))
    d.values = []
    return d, QuantileBuffer(q.probes, tuple(est.tolist()), q.weight + 1)


def publish_summary(q: QuantileBuffer, agent_id: int, seq: int) -> Message:
    if q.weight < 1:
        raise ValueError("no summary available")
    return Message(agent_id, seq, "baseline_summary", summary=q)


def aggregate_summaries(summaries: Sequence[QuantileBuffer]) -> QuantileBuffer:
    """Per-probe mean of estimates weighted by each summary's fill count."""
    if not summaries:
        raise ValueError("no summaries to aggregate")
    probes = summaries[0].probes
    if any(s.probes != probes for s in summaries):
        raise ValueError("mismatched probe vectors")
    live = [s for s in summaries if s.weight > 0]
    if not live:
        raise ValueError("no summary available")
    if len(live) == 1:
        return live[0]
    est = np.array([s.estimates for s in live])
    w = np.array([s.weight for s in live], dtype=np.float64)
    merged = isotonic((w[:, None] * est).sum(axis=0) / w.sum())
    return QuantileBuffer(probes, tuple(merged.tolist()), int(w.sum()))


class QuantileCurveCdf:
    """Step CDF implied by a quantile summary.

    The estimate at probe j carries the probability between the midpoints of
    its neighbouring probes, so the curve rises to 1 at the top estimate.
    """

    def __init__(self, q: QuantileBuffer):
        if q.weight < 1:
            raise ValueError("no summary available")
        p = np.asarray(q.probes)
        self.xs = np.asarray(q.estimates)
        self.levels = np.append((p[:-1] + p[1:]) / 2.0, 1.0)

    def breakpoints(self) -> np.ndarray:
        return np.unique(self.xs)

    def __call__(self, x):
        idx = np.searchsorted(self.xs, x, side="right") - 1
        out = np.where(idx >= 0, self.levels[np.maximum(idx, 0)], 0.0)
        return float(out) if np.ndim(out) == 0 else out
