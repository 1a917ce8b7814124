"""Agent side: keep the last N observations, decide when they justify a
transmission, choose what to send and track what the collector already knows.

Operations mutate the state they are given (one owner per agent) and return it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError
from .messages import Message, TimeValuePair, check_pair
from .stats import change_point_scan, mann_whitney_u

__all__ = [
    "POLICIES",
    "AgentConfig",
    "AgentState",
    "TransmissionDecision",
    "observe",
    "evaluate_trigger",
    "select_payload",
    "commit_report",
    "even_spacing",
]

POLICIES = ("send_all", "full_resample", "post_change_only")


@dataclass(frozen=True)
class AgentConfig:
    buffer_capacity: int = 100
    max_transmit: int = 20
    alpha: float = 0.05
    policy: str = "full_resample"
    min_seg: int = 10
    eval_stride: int = 1

    def __post_init__(self):
        if not isinstance(self.buffer_capacity, int) or self.buffer_capacity < 1:
            raise ConfigError("buffer_capacity must be a positive integer", ["buffer_capacity"])
        if not isinstance(self.max_transmit, int) or self.max_transmit < 1:
            raise ConfigError("max_transmit must be a positive integer", ["max_transmit"])
        if self.max_transmit > self.buffer_capacity:
            raise ConfigError(
                f"max_transmit ({self.max_transmit}) exceeds buffer_capacity ({self.buffer_capacity})",
                ["max_transmit", "buffer_capacity"],
            )
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)", ["alpha"])
        if self.policy not in POLICIES:
            raise ConfigError(f"policy must be one of {POLICIES}", ["policy"])
        if not isinstance(self.min_seg, int) or self.min_seg < 2:
            raise ConfigError("min_seg must be an integer >= 2", ["min_seg"])
        if not isinstance(self.eval_stride, int) or self.eval_stride < 1:
            raise ConfigError("eval_stride must be a positive integer", ["eval_stride"])


class RingBuffer:
    """Fixed-capacity FIFO of (timestamp, value) with contiguous ordered views.

    Each slot is written twice, ``capacity`` apart, so the live window is always
    one contiguous slice of the backing arrays.
    """

    __slots__ = ("capacity", "_t", "_v", "_start", "_size")

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._t = np.zeros(2 * capacity)
        self._v = np.zeros(2 * capacity)
        self._start = 0
        self._size = 0

    def __len__(self):
        return self._size

    @property
    def full(self) -> bool:
        return self._size == self.capacity

    def append(self, t: float, v: float) -> None:
        cap = self.capacity
        if self._size < cap:
            pos = (self._start + self._size) % cap
            self._size += 1
        else:
            pos = self._start
            self._start = (self._start + 1) % cap
        self._t[pos] = self._t[pos + cap] = t
        self._v[pos] = self._v[pos + cap] = v

    @property
    def times(self) -> np.ndarray:
        return self._t[self._start : self._start + self._size]

    @property
    def values(self) -> np.ndarray:
        return self._v[self._start : self._start + self._size]

    def pair(self, i: int) -> TimeValuePair:
        j = self._start + i
        return TimeValuePair(float(self._t[j]), float(self._v[j]))

    def last_timestamp(self) -> Optional[float]:
        if not self._size:
            return None
        return float(self._t[self._start + self._size - 1])

    def pairs(self):
        return [self.pair(i) for i in range(self._size)]


class AgentState:
    """Mutable per-agent state.

    ``last_reported_*`` hold the collector's view of this agent: the values
    (and timestamps) most recently sent.
    """

    def __init__(self, agent_id: int, buffer_capacity: int):
        self.agent_id = agent_id
        self.buffer = RingBuffer(buffer_capacity)
        self.last_reported_times = np.empty(0)
        self.last_reported_values = np.empty(0)
        self.seq = 0
        self.n_observed = 0
        self.sent_through = 0
        self.epoch_start: Optional[float] = None

    @classmethod
    def for_config(cls, agent_id: int, config: AgentConfig) -> "AgentState":
        return cls(agent_id, config.buffer_capacity)

    @property
    def has_report(self) -> bool:
        return self.last_reported_values.size > 0


@dataclass(frozen=True)
class TransmissionDecision:
    kind: str
    selected: tuple = ()
    trigger_p: Optional[float] = None
    split_index: Optional[int] = None
    bootstrap: bool = False

    @property
    def transmit(self) -> bool:
        return self.kind != "none"


NO_SEND = TransmissionDecision("none")


def observe(state: AgentState, pair: TimeValuePair) -> AgentState:
    pair = TimeValuePair(float(pair[0]), float(pair[1]))
    check_pair(pair)
    last = state.buffer.last_timestamp()
    if last is not None and pair.timestamp < last:
        raise ValueError("time regression")
    state.buffer.append(pair.timestamp, pair.value)
    state.n_observed += 1
    return state


def even_spacing(n: int, m: int) -> list:
    """``m`` buffer indices spread evenly over ``0..n-1``, always ending at ``n-1``."""
    if m >= n:
        return list(range(n))
    return [((k + 1) * n + m - 1) // m - 1 for k in range(m)]


def _payload_indices(n: int, kind: str, split_index: Optional[int], config: AgentConfig) -> list:
    m = config.max_transmit
    if config.policy == "send_all":
        return [n - 1]
    if kind == "post_change":
        return list(range(max(split_index, n - m), n))
    return even_spacing(n, m)


def _decision(state, config, kind, trigger_p=None, split_index=None, bootstrap=False):
    idx = _payload_indices(len(state.buffer), kind, split_index, config)
    selected = tuple(state.buffer.pair(i) for i in idx)
    return TransmissionDecision(kind, selected, trigger_p, split_index, bootstrap)


def evaluate_trigger(state: AgentState, config: AgentConfig) -> TransmissionDecision:
    """The trigger function: map the buffer to an (often empty) payload.

    Transmission requires the U test of buffer against the last report to
    reject at ``alpha``; under ``post_change_only`` a located change point
    then narrows the payload to post-change pairs.
    """
    buf = state.buffer
    if config.policy == "send_all":
        if state.n_observed > state.sent_through and len(buf):
            return _decision(state, config, "full_resample")
        return NO_SEND
    if not state.has_report:
        if buf.full:
            return _decision(state, config, "full_resample", bootstrap=True)
        return NO_SEND
    values, reference, first = buf.values, state.last_reported_values, 0
    if config.policy == "post_change_only" and state.epoch_start is not None:
        # after a reported change only the post-change stretch is compared
        first = int(np.searchsorted(buf.times, state.epoch_start, side="left"))
        values = values[first:]
        reference = reference[state.last_reported_times >= state.epoch_start]
        if values.size < config.min_seg:
            return NO_SEND
    if values.size < 2:
        return NO_SEND
    p = mann_whitney_u(values, reference).p_two_sided
    if p >= config.alpha:
        return TransmissionDecision("none", trigger_p=p)
    if config.policy == "post_change_only":
        cp = change_point_scan(values, config.min_seg, config.alpha)
        if cp is not None:
            return _decision(state, config, "post_change", p, first + cp.split_index)
    return _decision(state, config, "full_resample", p)


def select_payload(state: AgentState, decision: TransmissionDecision, config: AgentConfig) -> Message:
    if decision.kind == "none":
        raise ValueError("nothing to send")
    idx = _payload_indices(len(state.buffer), decision.kind, decision.split_index, config)
    pairs = tuple(state.buffer.pair(i) for i in idx)
    kind = "send_all" if config.policy == "send_all" else decision.kind
    return Message(state.agent_id, state.seq + 1, kind, pairs=pairs)


def commit_report(state: AgentState, message: Message, capacity: Optional[int] = None) -> AgentState:
    """Record that ``message`` reached the collector.

    A full resample replaces the reported snapshot; incremental messages are
    appended and the snapshot keeps its newest ``capacity`` values. A
    post-change message also opens a new epoch at its oldest pair, after which
    ``post_change_only`` compares only data from that epoch.
    """
    t = np.array([p.timestamp for p in message.pairs])
    v = np.array([p.value for p in message.pairs])
    if message.kind == "full_resample":
        state.last_reported_times, state.last_reported_values = t, v
        state.epoch_start = None
    else:
        cap = capacity or state.buffer.capacity
        times = np.concatenate((state.last_reported_times, t))
        values = np.concatenate((state.last_reported_values, v))
        order = np.argsort(times, kind="stable")[-cap:]
        state.last_reported_times, state.last_reported_values = times[order], values[order]
        if message.kind == "post_change":
            state.epoch_start = float(t[0])
    state.seq = message.seq
    state.sent_through = state.n_observed
    return state
