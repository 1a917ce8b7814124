"""Observation pairs, agent-to-collector messages and their wire format.

Layout (little-endian)::

    header   24 bytes  agent_id u32 | seq u64 | kind u8 | count u32 | 7 reserved zero bytes
    pairs    16 bytes each: timestamp f64 | value f64
    summary  16 bytes per probe: estimate f64 | weight f64   (baseline_summary only)

``count`` is the number of pairs, or the number of probes for a summary.
Probe probabilities are not transmitted; the collector is configured with them.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

HEADER = struct.Struct("<IQBI7x")
PAIR = struct.Struct("<dd")
HEADER_BYTES = HEADER.size
PAIR_BYTES = PAIR.size
PROBE_BYTES = 16

KINDS = ("full_resample", "post_change", "send_all", "baseline_summary")
KIND_CODES = {kind: code for code, kind in enumerate(KINDS, start=1)}
KIND_NAMES = {code: kind for kind, code in KIND_CODES.items()}


class TimeValuePair(NamedTuple):
    timestamp: float
    value: float


def check_pair(pair: TimeValuePair) -> None:
    t, v = pair
    if not (math.isfinite(t) and math.isfinite(v)) or t < 0:
        raise ValueError("invalid observation")


@dataclass(frozen=True)
class Message:
    agent_id: int
    seq: int
    kind: str
    pairs: tuple = ()
    summary: Optional[object] = None

    def __post_init__(self):
        if self.kind not in KIND_CODES:
            raise ValueError(f"unknown message kind {self.kind!r}")
        if bool(self.pairs) == (self.summary is not None):
            raise ValueError("message needs pairs or a summary, not both")
        if (self.summary is not None) != (self.kind == "baseline_summary"):
            raise ValueError("only baseline_summary messages carry a summary")

    @property
    def count(self) -> int:
        if self.summary is not None:
            return len(self.summary.probes)
        return len(self.pairs)

    @property
    def nbytes(self) -> int:
        return message_bytes(self.kind, self.count)


def message_bytes(kind: str, count: int) -> int:
    if kind == "baseline_summary":
        return HEADER_BYTES + PROBE_BYTES * count
    return HEADER_BYTES + PAIR_BYTES * count


def encode(msg: Message) -> bytes:
    parts = [HEADER.pack(msg.agent_id, msg.seq, KIND_CODES[msg.kind], msg.count)]
    if msg.summary is not None:
        q = msg.summary
        body = np.empty((len(q.probes), 2), dtype="<f8")
        body[:, 0] = q.estimates
        body[:, 1] = float(q.weight)
        parts.append(body.tobytes())
    else:
        parts.append(np.asarray(msg.pairs, dtype="<f8").reshape(-1, 2).tobytes())
    data = b"".join(parts)
    assert len(data) == msg.nbytes
    return data


def decode(data: bytes, probes: Optional[Sequence[float]] = None) -> Message:
    if len(data) < HEADER_BYTES:
        raise ValueError("truncated header")
    agent_id, seq, code, count = HEADER.unpack_from(data)
    if code not in KIND_NAMES:
        raise ValueError(f"unknown kind code {code}")
    kind = KIND_NAMES[code]
    if len(data) != message_bytes(kind, count):
        raise ValueError("length does not match header count")
    body = np.frombuffer(data, dtype="<f8", offset=HEADER_BYTES).reshape(-1, 2)
    if kind == "baseline_summary":
        from .baseline import QuantileBuffer

        if probes is None or len(probes) != count:
            raise ValueError("probe vector required to decode a summary")
        weight = int(body[0, 1]) if count else 0
        summary = QuantileBuffer(tuple(probes), tuple(body[:, 0].tolist()), weight)
        return Message(agent_id, seq, kind, summary=summary)
    pairs = tuple(TimeValuePair(float(t), float(v)) for t, v in body)
    return Message(agent_id, seq, kind, pairs=pairs)
