"""Central collector: per-agent time-ordered sample stores, sliding-window
eviction and merged CDF / quantile queries over the last ``window_seconds``.

The window is the closed interval ``[now - window_seconds, now]``; eviction
runs lazily at ingest and at query time.
"""
from __future__ import annotations

import bisect
from typing import Dict, List, Tuple

import numpy as np

from .baseline import QuantileBuffer, QuantileCurveCdf, aggregate_summaries, nearest_rank_index
from .messages import Message
from .stats import EmpiricalCdf, ecdf

__all__ = [
    "CollectorState",
    "StaleMessageError",
    "EmptyWindowError",
    "ingest",
    "window_cdf",
    "summary_cdf",
    "quantile",
    "Message",
]


class StaleMessageError(ValueError):
    pass


class EmptyWindowError(LookupError):
    pass


class CollectorState:
    def __init__(self, window_seconds: float):
        if not window_seconds > 0:
            raise ValueError("window_seconds must be positive")
        self.window_seconds = float(window_seconds)
        self.per_agent: Dict[int, List[Tuple[float, float]]] = {}
        self.per_agent_seq: Dict[int, int] = {}
        self.summaries: Dict[int, Tuple[float, QuantileBuffer]] = {}
        self.rejected = 0
        self.latest = float("-inf")

    def evict(self, now: float) -> None:
        cutoff = now - self.window_seconds
        for store in self.per_agent.values():
            k = bisect.bisect_left(store, (cutoff, float("-inf")))
            if k:
                del store[:k]
        for aid in [a for a, (t, _) in self.summaries.items() if t < cutoff]:
            del self.summaries[aid]

    def agents_in_window(self, now: float) -> set:
        lo = now - self.window_seconds
        live = {a for a, s in self.per_agent.items() if any(lo <= t <= now for t, _ in s)}
        live.update(a for a, (t, _) in self.summaries.items() if lo <= t <= now)
        return live


def ingest(state: CollectorState, msg: Message, now: float) -> CollectorState:
    last = state.per_agent_seq.get(msg.agent_id)
    if last is not None and msg.seq <= last:
        state.rejected += 1
        raise StaleMessageError("duplicate or reordered message")
    state.per_agent_seq[msg.agent_id] = msg.seq
    state.latest = max(state.latest, now)
    if msg.summary is not None:
        state.summaries[msg.agent_id] = (now, msg.summary)
    else:
        store = state.per_agent.setdefault(msg.agent_id, [])
        for p in msg.pairs:
            item = (float(p[0]), float(p[1]))
            if not store or item >= store[-1]:
                store.append(item)
            else:
                bisect.insort(store, item)
    state.evict(now)
    return state


def _window_values(state: CollectorState, now: float) -> np.ndarray:
    lo = now - state.window_seconds
    chunks = []
    for aid in sorted(state.per_agent):
        store = state.per_agent[aid]
        i = bisect.bisect_left(store, (lo, float("-inf")))
        j = bisect.bisect_right(store, (now, float("inf")))
        chunks.extend(v for _, v in store[i:j])
    return np.asarray(chunks, dtype=np.float64)


def window_cdf(state: CollectorState, now: float) -> EmpiricalCdf:
    state.evict(now)
    values = _window_values(state, now)
    if values.size == 0:
        raise EmptyWindowError("no data in window")
    return ecdf(values)


def summary_cdf(state: CollectorState, now: float) -> QuantileCurveCdf:
    """CDF implied by the aggregate of the summaries published inside the window."""
    state.evict(now)
    live = [q for t, q in state.summaries.values() if t <= now and q.weight > 0]
    if not live:
        raise EmptyWindowError("no data in window")
    return QuantileCurveCdf(aggregate_summaries(live))


def quantile(cdf: EmpiricalCdf, p: float) -> float:
    """Nearest-rank quantile: the ``ceil(p*n)``-th smallest value, minimum at p=0."""
    return float(cdf.sorted_values[nearest_rank_index(p, cdf.n)])
