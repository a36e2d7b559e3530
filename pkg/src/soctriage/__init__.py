"""Deterministic, auditable SOC alert triage over fixture-backed tools."""

from __future__ import annotations

from .alert_model import (
    AlertTrace,
    GroundTruthLabel,
    Subclass,
    TraceError,
    TriggeredRule,
    Verdict,
    parse_alert,
    serialize_trace,
    validate_trace,
)
from .corpus import LabeledCorpus, generate, load_corpus
from .eval import MetricsSummary, efficiency, score
from .orchestrator import TriageConfig, TriageOutcome, triage, triage_batch
from .router import RoutingTable, WorkflowId, route
from .synthesizer import TriageReport, render_report, synthesize
from .tool_fabric import FixtureBundle, ToolConfig, ToolFabric
from .workflows import PolicyConfig, WorkflowReport

__all__ = [
    "AlertTrace", "GroundTruthLabel", "Subclass", "TraceError", "TriggeredRule", "Verdict",
    "parse_alert", "serialize_trace", "validate_trace",
    "LabeledCorpus", "generate", "load_corpus",
    "MetricsSummary", "efficiency", "score",
    "TriageConfig", "TriageOutcome", "triage", "triage_batch",
    "RoutingTable", "WorkflowId", "route",
    "TriageReport", "render_report", "synthesize",
    "FixtureBundle", "ToolConfig", "ToolFabric",
    "PolicyConfig", "WorkflowReport",
]
__version__ = "0.1.0"
