"""Change-triggered distributed monitoring with rank-test triggers."""
from .agent import AgentConfig, AgentState, TransmissionDecision, commit_report, evaluate_trigger, observe, select_payload
from .baseline import QuantileBuffer, aggregate_summaries, buffer_push, publish_summary
from .collector import CollectorState, ingest, quantile, window_cdf
from .kernels import BACKEND
from .messages import Message, TimeValuePair
from .sim import ChangeSpec, MetricsReport, ScenarioConfig, StreamSpec, run_scenario
from .stats import change_point_scan, ecdf, exact_permutation_p, ks_distance, mann_whitney_u, midranks

__version__ = "0.1.0"

__all__ = [
    "AgentConfig",
    "AgentState",
    "BACKEND",
    "ChangeSpec",
    "CollectorState",
    "Message",
    "MetricsReport",
    "QuantileBuffer",
    "ScenarioConfig",
    "StreamSpec",
    "TimeValuePair",
    "TransmissionDecision",
    "aggregate_summaries",
    "buffer_push",
    "change_point_scan",
    "commit_report",
    "ecdf",
    "evaluate_trigger",
    "exact_permutation_p",
    "ingest",
    "ks_distance",
    "mann_whitney_u",
    "midranks",
    "observe",
    "publish_summary",
    "quantile",
    "run_scenario",
    "select_payload",
    "window_cdf",
]
