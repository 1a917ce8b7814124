"""Scenario and sweep files.

Both are YAML documents. A scenario mirrors :class:`ScenarioConfig` field for
field (see ``scenarios/scenario.yaml``); a sweep has a ``base`` scenario, a list
of ``axes`` (``path`` + ``values``) and a ``replications`` count. Paths are
dotted field names, with integers indexing lists, e.g. ``changes.0.magnitude``.
"""
from __future__ import annotations

import copy
import itertools
from dataclasses import dataclass
from typing import Any, Dict, List, Tuple

import yaml

from .agent import AgentConfig
from .errors import ConfigError
from .sim import BaselineSpec, ChangeSpec, ScenarioConfig, StreamSpec

__all__ = [
    "SweepSpec",
    "Cell",
    "load_document",
    "is_sweep",
    "scenario_from_dict",
    "scenario_to_dict",
    "sweep_from_dict",
    "expand_sweep",
]

_SCENARIO_KEYS = set(ScenarioConfig.__dataclass_fields__)
_AGENT_KEYS = set(AgentConfig.__dataclass_fields__)
_CHANGE_KEYS = set(ChangeSpec.__dataclass_fields__)
_BASELINE_KEYS = set(BaselineSpec.__dataclass_fields__)
_FLOAT_FIELDS = {
    "duration_seconds", "window_seconds", "sample_interval_seconds", "channel_delay_seconds",
    "alpha", "at_seconds", "magnitude", "blend_weight", "period_seconds",
}


def load_document(path) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", ["file"]) from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}", ["file"]) from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a mapping at top level", ["file"])
    return doc


def is_sweep(doc: Dict[str, Any]) -> bool:
    return "base" in doc or "axes" in doc


def _check_keys(d, allowed, prefix):
    if not isinstance(d, dict):
        raise ConfigError(f"{prefix or 'scenario'} must be a mapping", [prefix or "scenario"])
    unknown = sorted(set(d) - allowed)
    if unknown:
        names = [f"{prefix}.{k}" if prefix else k for k in unknown]
        raise ConfigError(f"unknown field(s): {', '.join(names)}", names)


def _coerce(d, prefix):
    out = {}
    for k, v in d.items():
        if k in _FLOAT_FIELDS and isinstance(v, (str, int)) and not isinstance(v, bool):
            try:
                v = float(v)
            except ValueError:
                name = f"{prefix}.{k}" if prefix else k
                raise ConfigError(f"{name} must be a number", [name]) from None
        out[k] = v
    return out


def _build(cls, d, prefix):
    try:
        return cls(**d)
    except ConfigError as exc:
        fields = [f if f.startswith(prefix) or not prefix else f"{prefix}.{f}" for f in exc.fields]
        raise ConfigError(str(exc), fields) from None
    except TypeError as exc:
        raise ConfigError(f"{prefix or 'scenario'}: {exc}", [prefix or "scenario"]) from None


def scenario_from_dict(doc: Dict[str, Any]) -> ScenarioConfig:
    _check_keys(doc, _SCENARIO_KEYS, "")
    d = _coerce(doc, "")
    num_agents = d.get("num_agents", ScenarioConfig.__dataclass_fields__["num_agents"].default)
    if "agent_config" in d:
        _check_keys(d["agent_config"], _AGENT_KEYS, "agent_config")
        d["agent_config"] = _build(AgentConfig, _coerce(d["agent_config"], "agent_config"), "agent_config")
    if "generator" in d:
        g = d["generator"]
        _check_keys(g, {"family", "params"}, "generator")
        d["generator"] = StreamSpec(g.get("family", "normal"), dict(g.get("params") or {}))
    if "changes" in d:
        changes = []
        for i, c in enumerate(d["changes"] or []):
            _check_keys(c, _CHANGE_KEYS, f"changes.{i}")
            c = _coerce(c, f"changes.{i}")
            if c.get("affected_agents") == "all" and isinstance(num_agents, int):
                c["affected_agents"] = tuple(range(num_agents))
            changes.append(_build(ChangeSpec, c, ""))
        d["changes"] = tuple(changes)
    if d.get("baseline") is not None:
        _check_keys(d["baseline"], _BASELINE_KEYS, "baseline")
        d["baseline"] = _build(BaselineSpec, _coerce(d["baseline"], "baseline"), "")
    iv = d.get("obs_interval_seconds")
    if isinstance(iv, list):
        d["obs_interval_seconds"] = tuple(iv)
    elif isinstance(iv, int) and not isinstance(iv, bool):
        d["obs_interval_seconds"] = float(iv)
    return _build(ScenarioConfig, d, "")


def scenario_to_dict(cfg: ScenarioConfig) -> Dict[str, Any]:
    ac = cfg.agent_config
    iv = cfg.obs_interval_seconds
    return {
        "num_agents": cfg.num_agents,
        "duration_seconds": cfg.duration_seconds,
        "obs_interval_seconds": list(iv) if isinstance(iv, tuple) else iv,
        "agent_config": {k: getattr(ac, k) for k in AgentConfig.__dataclass_fields__},
        "window_seconds": cfg.window_seconds,
        "generator": {"family": cfg.generator.family, "params": dict(cfg.generator.params)},
        "changes": [
            {"at_seconds": c.at_seconds, "kind": c.kind, "magnitude": c.magnitude,
             "affected_agents": list(c.affected_agents)}
            for c in cfg.changes
        ],
        "baseline": None if cfg.baseline is None else {
            "data_capacity": cfg.baseline.data_capacity,
            "probes": list(cfg.baseline.probes),
            "blend_weight": cfg.baseline.blend_weight,
            "period_seconds": cfg.baseline.period_seconds,
        },
        "seed": cfg.seed,
        "sample_interval_seconds": cfg.sample_interval_seconds,
        "channel_delay_seconds": cfg.channel_delay_seconds,
        "byte_weights": None if cfg.byte_weights is None else list(cfg.byte_weights),
    }


@dataclass(frozen=True)
class SweepSpec:
    base: ScenarioConfig
    axes: Tuple[Tuple[str, Tuple[Any, ...]], ...]
    replications: int = 1


@dataclass(frozen=True)
class Cell:
    index: int
    seed: int
    axes: Dict[str, Any]
    config: Dict[str, Any]


def _split(path: str) -> List[Any]:
    return [int(p) if p.isdigit() else p for p in path.split(".")]


def _set_path(d, path, value):
    keys = _split(path)
    node = d
    for k in keys[:-1]:
        node = node[k]
    node[keys[-1]] = value


def _has_path(d, path) -> bool:
    node = d
    for k in _split(path):
        if isinstance(node, dict) and isinstance(k, str) and k in node:
            node = node[k]
        elif isinstance(node, list) and isinstance(k, int) and 0 <= k < len(node):
            node = node[k]
        else:
            return False
    return True


def sweep_from_dict(doc: Dict[str, Any]) -> SweepSpec:
    _check_keys(doc, {"base", "axes", "replications"}, "")
    if "base" not in doc:
        raise ConfigError("sweep needs a base scenario", ["base"])
    base = scenario_from_dict(doc["base"] or {})
    full = scenario_to_dict(base)
    axes = []
    for i, ax in enumerate(doc.get("axes") or []):
        _check_keys(ax, {"path", "values"}, f"axes.{i}")
        path, values = ax.get("path"), ax.get("values")
        if not isinstance(path, str) or not _has_path(full, path):
            raise ConfigError(f"axes.{i}.path {path!r} does not name a config field", [f"axes.{i}.path"])
        if not isinstance(values, list) or not values:
            raise ConfigError(f"axes.{i}.values must be a non-empty list", [f"axes.{i}.values"])
        axes.append((path, tuple(values)))
    reps = doc.get("replications", 1)
    if not isinstance(reps, int) or reps < 1:
        raise ConfigError("replications must be a positive integer", ["replications"])
    spec = SweepSpec(base, tuple(axes), reps)
    for cell in expand_sweep(spec):
        scenario_from_dict(cell.config)
    return spec


def expand_sweep(spec: SweepSpec) -> List[Cell]:
    """Cross product of axis values, replications innermost.

    Replication ``r`` runs with seed ``base.seed + r``.
    """
    base = scenario_to_dict(spec.base)
    cells = []
    grids = [vals for _, vals in spec.axes]
    for combo in itertools.product(*grids):
        for r in range(spec.replications):
            d = copy.deepcopy(base)
            for (path, _), value in zip(spec.axes, combo):
                _set_path(d, path, value)
            seed = spec.base.seed + r
            d["seed"] = seed
            axes = {path: value for (path, _), value in zip(spec.axes, combo)}
            cells.append(Cell(len(cells), seed, axes, d))
    return cells
