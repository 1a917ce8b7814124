"""Deterministic discrete-event simulation of agents, channel and collector.

Events are processed in ``(time, agent_id, kind)`` order with kind precedence
observe < trigger < publish < deliver < sample. Metric samples carry
``agent_id = num_agents`` so they run after every agent at the same instant.

Randomness: each agent draws from ``numpy.random.PCG64`` seeded with
``SeedSequence([seed, agent_id])``, so agents are independent sub-streams of
one master seed and runs replay exactly.
"""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import agent as ag
from . import baseline as bl
from .collector import CollectorState, EmptyWindowError, StaleMessageError, ingest, summary_cdf, window_cdf
from .errors import ConfigError
from .messages import Message, TimeValuePair
from .stats import EmpiricalCdf, ecdf, ks_distance

__all__ = [
    "FAMILIES",
    "CHANGE_KINDS",
    "StreamSpec",
    "ChangeSpec",
    "BaselineSpec",
    "ScenarioConfig",
    "MetricsReport",
    "MessageRecord",
    "RunLog",
    "Oracle",
    "agent_rng",
    "stream_arrays",
    "generate_stream",
    "oracle_window_cdf",
    "run_scenario",
    "compute_metrics",
    "null_trigger_calibration",
]

FAMILIES = {
    "normal": {"mean": 0.0, "sd": 1.0},
    "lognormal": {"mu": 0.0, "sigma": 1.0},
    "uniform": {"low": 0.0, "high": 1.0},
    "pareto": {"shape": 3.0, "scale": 1.0},
}
CHANGE_KINDS = ("level_shift", "scale_change", "drift")
DRIFT_CAP_SD = 100.0

OBSERVE, TRIGGER, PUBLISH, DELIVER, SAMPLE = range(5)


@dataclass(frozen=True)
class StreamSpec:
    """Stationary generator family.

    ``pareto`` is the Lomax form ``scale * Pareto(shape)`` shifted to start at
    zero; ``shape`` must exceed 2 so the standard deviation is finite.
    """

    family: str = "normal"
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}", ["generator.family"])
        unknown = set(self.params) - set(FAMILIES[self.family])
        if unknown:
            raise ConfigError(f"unknown {self.family} parameter(s) {sorted(unknown)}",
                              [f"generator.params.{k}" for k in sorted(unknown)])
        merged = {**FAMILIES[self.family], **{k: float(v) for k, v in self.params.items()}}
        object.__setattr__(self, "params", merged)
        p = merged
        bad = None
        if any(not math.isfinite(v) for v in p.values()):
            bad = [k for k, v in p.items() if not math.isfinite(v)]
        elif self.family == "normal" and p["sd"] <= 0:
            bad = ["sd"]
        elif self.family == "lognormal" and p["sigma"] <= 0:
            bad = ["sigma"]
        elif self.family == "uniform" and p["high"] <= p["low"]:
            bad = ["low", "high"]
        elif self.family == "pareto" and (p["shape"] <= 2 or p["scale"] <= 0):
            bad = ["shape", "scale"]
        if bad:
            raise ConfigError(f"invalid {self.family} parameters", [f"generator.params.{k}" for k in bad])

    @property
    def mean(self) -> float:
        p = self.params
        if self.family == "normal":
            return p["mean"]
        if self.family == "lognormal":
            return math.exp(p["mu"] + p["sigma"] ** 2 / 2)
        if self.family == "uniform":
            return (p["low"] + p["high"]) / 2
        return p["scale"] / (p["shape"] - 1)

    @property
    def sd(self) -> float:
        p = self.params
        if self.family == "normal":
            return p["sd"]
        if self.family == "lognormal":
            s2 = p["sigma"] ** 2
            return math.sqrt((math.exp(s2) - 1) * math.exp(2 * p["mu"] + s2))
        if self.family == "uniform":
            return (p["high"] - p["low"]) / math.sqrt(12)
        a = p["shape"]
        return p["scale"] * math.sqrt(a / ((a - 1) ** 2 * (a - 2)))

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        p = self.params
        if self.family == "normal":
            return p["mean"] + p["sd"] * rng.standard_normal(n)
        if self.family == "lognormal":
            return np.exp(p["mu"] + p["sigma"] * rng.standard_normal(n))
        if self.family == "uniform":
            return p["low"] + (p["high"] - p["low"]) * rng.random(n)
        return p["scale"] * rng.pareto(p["shape"], n)


@dataclass(frozen=True)
class ChangeSpec:
    """Distribution change from ``at_seconds`` on.

    ``magnitude`` is in pre-change standard deviations for ``level_shift``,
    a factor on the deviation from the mean for ``scale_change`` and a slope
    in standard deviations per second for ``drift``.
    """

    at_seconds: float
    kind: str
    magnitude: float
    affected_agents: Tuple[int, ...]

    def __post_init__(self):
        if self.kind not in CHANGE_KINDS:
            raise ConfigError(f"unknown change kind {self.kind!r}", ["changes.kind"])
        if not math.isfinite(self.magnitude):
            raise ConfigError("change magnitude must be finite", ["changes.magnitude"])
        object.__setattr__(self, "affected_agents", tuple(sorted(set(int(a) for a in self.affected_agents))))
        if not self.affected_agents:
            raise ConfigError("change must affect at least one agent", ["changes.affected_agents"])


@dataclass(frozen=True)
class BaselineSpec:
    data_capacity: int = 100
    probes: Tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    blend_weight: float = 0.5
    period_seconds: float = 30.0

    def __post_init__(self):
        object.__setattr__(self, "probes", tuple(float(p) for p in self.probes))
        if not isinstance(self.data_capacity, int) or self.data_capacity < 1:
            raise ConfigError("data_capacity must be a positive integer", ["baseline.data_capacity"])
        try:
            bl.QuantileBuffer(self.probes)
        except ValueError as exc:
            raise ConfigError(str(exc), ["baseline.probes"]) from None
        if not 0.0 < self.blend_weight <= 1.0:
            raise ConfigError("blend_weight must lie in (0, 1]", ["baseline.blend_weight"])
        if not self.period_seconds > 0:
            raise ConfigError("period_seconds must be positive", ["baseline.period_seconds"])


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulated deployment.

    When ``baseline`` is set every agent runs the periodic-summary scheme and
    ``agent_config`` is unused; otherwise agents run the trigger policy.
    ``obs_interval_seconds`` is a single interval or one per agent.
    """

    num_agents: int = 20
    duration_seconds: float = 600.0
    obs_interval_seconds: Union[float, Tuple[float, ...]] = 1.0
    agent_config: ag.AgentConfig = field(default_factory=ag.AgentConfig)
    window_seconds: float = 60.0
    generator: StreamSpec = field(default_factory=StreamSpec)
    changes: Tuple[ChangeSpec, ...] = ()
    baseline: Optional[BaselineSpec] = None
    seed: int = 0
    sample_interval_seconds: float = 10.0
    channel_delay_seconds: float = 0.0
    byte_weights: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        def fail(msg, *fields):
            raise ConfigError(msg, fields)

        if not isinstance(self.num_agents, int) or self.num_agents < 1:
            fail("num_agents must be a positive integer", "num_agents")
        for name in ("duration_seconds", "window_seconds", "sample_interval_seconds"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                fail(f"{name} must be positive", name)
        if not (math.isfinite(self.channel_delay_seconds) and self.channel_delay_seconds >= 0):
            fail("channel_delay_seconds must be non-negative", "channel_delay_seconds")
        iv = self.obs_interval_seconds
        if isinstance(iv, (list, tuple)):
            iv = tuple(float(x) for x in iv)
            if len(iv) != self.num_agents:
                fail("obs_interval_seconds needs one entry per agent", "obs_interval_seconds", "num_agents")
            object.__setattr__(self, "obs_interval_seconds", iv)
        else:
            iv = (float(iv),)
        if any(not (math.isfinite(x) and x > 0) for x in iv):
            fail("obs_interval_seconds must be positive", "obs_interval_seconds")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            fail("seed must be an integer in [0, 2**64)", "seed")
        object.__setattr__(self, "changes", tuple(self.changes))
        for c in self.changes:
            if not 0 <= c.at_seconds <= self.duration_seconds:
                fail("change time outside [0, duration_seconds]", "changes.at_seconds", "duration_seconds")
            if max(c.affected_agents) >= self.num_agents or min(c.affected_agents) < 0:
                fail("affected agent id out of range", "changes.affected_agents", "num_agents")
        if self.byte_weights is not None:
            bw = tuple(float(w) for w in self.byte_weights)
            if len(bw) != self.num_agents or any(not (math.isfinite(w) and w >= 0) for w in bw):
                fail("byte_weights needs one non-negative weight per agent", "byte_weights", "num_agents")
            object.__setattr__(self, "byte_weights", bw)

    def interval(self, agent_id: int) -> float:
        iv = self.obs_interval_seconds
        return iv[agent_id] if isinstance(iv, tuple) else float(iv)

    def schedule(self, agent_id: int) -> np.ndarray:
        iv = self.interval(agent_id)
        k = math.floor(self.duration_seconds / iv + 1e-9)
        return np.arange(k + 1) * iv

    def first_change(self, agent_id: int) -> float:
        times = [c.at_seconds for c in self.changes if agent_id in c.affected_agents]
        return min(times) if times else math.inf

    @property
    def scheme(self) -> str:
        return "baseline_periodic" if self.baseline is not None else self.agent_config.policy


# --- streams ---------------------------------------------------------------

def agent_rng(seed: int, agent_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(agent_id)])))


def stream_arrays(spec: StreamSpec, changes: Sequence[ChangeSpec], agent_id: int,
                  schedule, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    times = np.asarray(schedule, dtype=np.float64)
    x = spec.draw(agent_rng(seed, agent_id), times.size)
    mu, sd = spec.mean, spec.sd
    for c in sorted(changes, key=lambda c: c.at_seconds):
        if agent_id not in c.affected_agents:
            continue
        on = times >= c.at_seconds
        if c.kind == "level_shift":
            x[on] += c.magnitude * sd
        elif c.kind == "scale_change":
            x[on] = mu + c.magnitude * (x[on] - mu)
        else:
            offset = c.magnitude * (times[on] - c.at_seconds)
            x[on] += np.clip(offset, -DRIFT_CAP_SD, DRIFT_CAP_SD) * sd
    return times, x


def generate_stream(spec, changes, agent_id, schedule, seed) -> List[TimeValuePair]:
    times, values = stream_arrays(spec, changes, agent_id, schedule, seed)
    return [TimeValuePair(float(t), float(v)) for t, v in zip(times, values)]


class Oracle:
    """Every generated observation, per agent; the full-data reference."""

    def __init__(self, streams: Sequence[Tuple[np.ndarray, np.ndarray]]):
        self.streams = list(streams)

    @property
    def total(self) -> int:
        return sum(t.size for t, _ in self.streams)

    def window_values(self, now: float, window_seconds: float) -> np.ndarray:
        lo = now - window_seconds
        chunks = []
        for t, v in self.streams:
            i = np.searchsorted(t, lo, side="left")
            j = np.searchsorted(t, now, side="right")
            chunks.append(v[i:j])
        return np.concatenate(chunks) if chunks else np.empty(0)


def oracle_window_cdf(all_pairs, now: float, window_seconds: float) -> EmpiricalCdf:
    """ECDF of every observation with timestamp in ``[now - window, now]``.

    ``all_pairs`` is an :class:`Oracle` or any iterable of time-value pairs.
    """
    if isinstance(all_pairs, Oracle):
        values = all_pairs.window_values(now, window_seconds)
    else:
        lo = now - window_seconds
        values = np.array([v for t, v in all_pairs if lo <= t <= now], dtype=np.float64)
    if values.size == 0:
        raise EmptyWindowError("no data in window")
    return ecdf(values)


# --- run -------------------------------------------------------------------

@dataclass(frozen=True)
class MessageRecord:
    send_time: float
    ingest_time: float
    agent_id: int
    kind: str
    count: int
    nbytes: int
    evidence_time: float
    triggered: bool
    bootstrap: bool

    def to_dict(self):
        return {
            "time": self.send_time,
            "ingest_time": self.ingest_time,
            "agent_id": self.agent_id,
            "kind": self.kind,
            "pair_count": self.count,
            "bytes": self.nbytes,
            "evidence_time": self.evidence_time,
            "triggered": self.triggered,
            "bootstrap": self.bootstrap,
        }


@dataclass
class RunLog:
    messages: List[MessageRecord] = field(default_factory=list)
    evaluations: Dict[int, List[float]] = field(default_factory=dict)
    cdf_error_timeline: List[Tuple[float, Optional[float]]] = field(default_factory=list)
    rejected: int = 0
    silent_in_window_agents: int = 0

    def event_log_lines(self) -> List[str]:
        return [json.dumps(m.to_dict(), sort_keys=True) for m in self.messages]


@dataclass(frozen=True)
class MetricsReport:
    detection_latency_seconds: Tuple[Union[float, str], ...]
    false_alarms: int
    false_alarm_rate: float
    in_control_evaluations: int
    bytes_total: int
    bytes_per_agent: Tuple[int, ...]
    weighted_bytes_total: float
    cdf_error_timeline: Tuple[Tuple[float, Optional[float]], ...]
    messages_total: int
    messages_rejected: int
    silent_in_window_agents: int
    observations_total: int

    def to_dict(self) -> dict:
        return {
            "detection_latency_seconds": list(self.detection_latency_seconds),
            "false_alarms": self.false_alarms,
            "false_alarm_rate": self.false_alarm_rate,
            "in_control_evaluations": self.in_control_evaluations,
            "bytes_total": self.bytes_total,
            "bytes_per_agent": list(self.bytes_per_agent),
            "weighted_bytes_total": self.weighted_bytes_total,
            "cdf_error_timeline": [list(x) for x in self.cdf_error_timeline],
            "messages_total": self.messages_total,
            "messages_rejected": self.messages_rejected,
            "silent_in_window_agents": self.silent_in_window_agents,
            "observations_total": self.observations_total,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def latencies(self) -> np.ndarray:
        """Latencies as floats with ``inf`` for missed changes."""
        return np.array([math.inf if x == "missed" else x for x in self.detection_latency_seconds])


METRIC_FIELDS = tuple(MetricsReport.__dataclass_fields__)


class _Simulation:
    def __init__(self, config: ScenarioConfig):
        self.cfg = config
        K = config.num_agents
        self.oracle = Oracle([
            stream_arrays(config.generator, config.changes, a, config.schedule(a), config.seed)
            for a in range(K)
        ])
        self.collector = CollectorState(config.window_seconds)
        self.log = RunLog(evaluations={a: [] for a in range(K)})
        self.events: list = []
        self._tick = 0
        self.cursor = [0] * K
        if config.baseline is None:
            self.agents = [ag.AgentState.for_config(a, config.agent_config) for a in range(K)]
        else:
            b = config.baseline
            self.data = [bl.DataBuffer(b.data_capacity) for _ in range(K)]
            self.summaries = [bl.QuantileBuffer(b.probes) for _ in range(K)]
            self.fill_time = [-math.inf] * K
            self.seq = [0] * K

    def push(self, t, agent_id, kind, payload=None):
        self._tick += 1
        heapq.heappush(self.events, (t, agent_id, kind, self._tick, payload))

    def send(self, msg: Message, now: float, evidence_time: float, decision=None):
        arrive = now + self.cfg.channel_delay_seconds
        self.log.messages.append(MessageRecord(
            send_time=now, ingest_time=arrive, agent_id=msg.agent_id, kind=msg.kind,
            count=msg.count, nbytes=msg.nbytes, evidence_time=evidence_time,
            triggered=decision is not None and decision.trigger_p is not None,
            bootstrap=decision is not None and decision.bootstrap,
        ))
        if arrive == now:
            self.deliver(msg, now)
        else:
            self.push(arrive, msg.agent_id, DELIVER, msg)

    def deliver(self, msg, now):
        try:
            ingest(self.collector, msg, now)
        except StaleMessageError:
            self.log.rejected += 1

    def run(self) -> RunLog:
        cfg = self.cfg
        end = cfg.duration_seconds
        for a in range(cfg.num_agents):
            t, _ = self.oracle.streams[a]
            if t.size:
                self.push(float(t[0]), a, OBSERVE)
            if cfg.baseline is not None:
                self.push(cfg.baseline.period_seconds, a, PUBLISH)
        self.push(cfg.sample_interval_seconds, cfg.num_agents, SAMPLE)

        while self.events:
            now, aid, kind, _, payload = heapq.heappop(self.events)
            if now > end:
                break
            if kind == OBSERVE:
                self.on_observe(now, aid)
            elif kind == TRIGGER:
                self.on_trigger(now, aid)
            elif kind == PUBLISH:
                self.on_publish(now, aid)
            elif kind == DELIVER:
                self.deliver(payload, now)
            else:
                self.on_sample(now)
        return self.log

    def on_observe(self, now, aid):
        t, v = self.oracle.streams[aid]
        i = self.cursor[aid]
        self.cursor[aid] = i + 1
        if i + 1 < t.size:
            self.push(float(t[i + 1]), aid, OBSERVE)
        if self.cfg.baseline is None:
            state = ag.observe(self.agents[aid], (float(t[i]), float(v[i])))
            if state.n_observed % self.cfg.agent_config.eval_stride == 0:
                self.push(now, aid, TRIGGER)
        else:
            b = self.cfg.baseline
            before = self.summaries[aid].weight
            self.data[aid], self.summaries[aid] = bl.buffer_push(
                self.data[aid], self.summaries[aid], float(v[i]), b.blend_weight)
            if self.summaries[aid].weight != before:
                self.fill_time[aid] = float(t[i])

    def on_trigger(self, now, aid):
        state = self.agents[aid]
        ac = self.cfg.agent_config
        decision = ag.evaluate_trigger(state, ac)
        if decision.trigger_p is not None:
            self.log.evaluations[aid].append(now)
        if not decision.transmit:
            return
        msg = ag.select_payload(state, decision, ac)
        # lossless channel: the agent may commit as soon as it sends
        ag.commit_report(state, msg)
        self.send(msg, now, evidence_time=now, decision=decision)

    def on_publish(self, now, aid):
        self.push(now + self.cfg.baseline.period_seconds, aid, PUBLISH)
        q = self.summaries[aid]
        if q.weight < 1:
            return
        self.seq[aid] += 1
        msg = bl.publish_summary(q, aid, self.seq[aid])
        self.send(msg, now, evidence_time=self.fill_time[aid])

    def on_sample(self, now):
        cfg = self.cfg
        self.push(now + cfg.sample_interval_seconds, cfg.num_agents, SAMPLE)
        truth = self.oracle.window_values(now, cfg.window_seconds)
        try:
            est = window_cdf(self.collector, now) if cfg.baseline is None else summary_cdf(self.collector, now)
        except EmptyWindowError:
            est = None
        if truth.size == 0 or est is None:
            err = None
        else:
            err = ks_distance(est, ecdf(truth))
        self.log.cdf_error_timeline.append((now, err))
        live = self.collector.agents_in_window(now)
        self.log.silent_in_window_agents = cfg.num_agents - len(live)


def compute_metrics(event_log: RunLog, oracle: Oracle, config: ScenarioConfig) -> MetricsReport:
    K = config.num_agents
    per_agent = [0] * K
    for m in event_log.messages:
        per_agent[m.agent_id] += m.nbytes
    weights = config.byte_weights or (1.0,) * K

    latencies: List[Union[float, str]] = []
    for c in config.changes:
        hits = [m.ingest_time for m in event_log.messages
                if m.agent_id in c.affected_agents and m.evidence_time >= c.at_seconds
                and m.ingest_time <= config.duration_seconds]
        latencies.append(min(hits) - c.at_seconds if hits else "missed")

    first = [config.first_change(a) for a in range(K)]
    false_alarms = sum(1 for m in event_log.messages if m.triggered and m.send_time < first[m.agent_id])
    in_control = sum(sum(1 for t in ts if t < first[a]) for a, ts in event_log.evaluations.items())
    return MetricsReport(
        detection_latency_seconds=tuple(latencies),
        false_alarms=false_alarms,
        false_alarm_rate=false_alarms / in_control if in_control else 0.0,
        in_control_evaluations=in_control,
        bytes_total=sum(per_agent),
        bytes_per_agent=tuple(per_agent),
        weighted_bytes_total=float(sum(b * w for b, w in zip(per_agent, weights))),
        cdf_error_timeline=tuple(event_log.cdf_error_timeline),
        messages_total=len(event_log.messages),
        messages_rejected=event_log.rejected,
        silent_in_window_agents=event_log.silent_in_window_agents,
        observations_total=oracle.total,
    )


def run_scenario(config: ScenarioConfig, return_log: bool = False):
    """Simulate ``config`` and return its :class:`MetricsReport`.

    With ``return_log=True`` the report comes back with the raw
    :class:`RunLog` and :class:`Oracle` as a 3-tuple.
    """
    sim = _Simulation(config)
    log = sim.run()
    report = compute_metrics(log, sim.oracle, config)
    if return_log:
        return report, log, sim.oracle
    return report


def null_trigger_calibration(agent_config: ag.AgentConfig, num_agents: int,
                             evaluations_per_agent: int, generator: StreamSpec = StreamSpec(),
                             seed: int = 0) -> Tuple[int, int]:
    """Count trigger firings over disjoint in-control evaluations.

    Each evaluation starts a fresh agent, fills its buffer, lets it send the
    bootstrap report, refills the buffer with new observations and asks the
    trigger once. Returns ``(fired, evaluations)``.
    """
    n = agent_config.buffer_capacity
    fired = 0
    total = 0
    for a in range(num_agents):
        steps = 2 * n * evaluations_per_agent
        times, values = stream_arrays(generator, (), a, np.arange(steps, dtype=np.float64), seed)
        pos = 0
        for _ in range(evaluations_per_agent):
            state = ag.AgentState.for_config(a, agent_config)
            for _ in range(n):
                ag.observe(state, (times[pos], values[pos]))
                pos += 1
            boot = ag.evaluate_trigger(state, agent_config)
            ag.commit_report(state, ag.select_payload(state, boot, agent_config))
            for _ in range(n):
                ag.observe(state, (times[pos], values[pos]))
                pos += 1
            fired += ag.evaluate_trigger(state, agent_config).transmit
            total += 1
    return fired, total
