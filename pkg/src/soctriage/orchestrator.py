"""Per-alert triage sessions: validate, route, run workflows, synthesize."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .alert_model import AlertTrace, validate_trace
from .corpus import LabeledCorpus
from .router import RoutingTable, WorkflowId, route
from .synthesizer import TriageReport, render_report, synthesize
from .tool_fabric import AuditTrail, FixtureBundle, ToolConfig, ToolFabric
from .workflows import EXECUTORS, PolicyConfig, WorkflowReport


class Stage(str, Enum):
    Orchestrate = "Orchestrate"
    Classify = "Classify"
    Analyze = "Analyze"
    Synthesize = "Synthesize"
    Done = "Done"


class ConsistencyError(RuntimeError):
    """A workflow emitted fields that do not match its declared schema."""


@dataclass(frozen=True)
class TriageConfig:
    routing: RoutingTable = field(default_factory=RoutingTable)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    tools: ToolConfig = field(default_factory=ToolConfig)
    write_back: bool = False


@dataclass(frozen=True)
class TriageMetrics:
    tool_calls: int
    wall_time: float  # seconds
    workflows_run: tuple[WorkflowId, ...]


@dataclass(frozen=True)
class TriageOutcome:
    report: TriageReport
    audit: AuditTrail
    metrics: TriageMetrics

    @property
    def rendered(self) -> str:
        return render_report(self.report)


class Session:
    """Ephemeral per-alert context. Stages only move forward."""

    def __init__(self, alert_id: str, fabric: ToolFabric):
        self.session_id = f"session-{alert_id}"
        self.alert_id = alert_id
        self.tools = fabric.open_session(self.session_id)
        self.audit = self.tools.trail
        self.started = time.perf_counter()
        self.stage: Stage | None = None

    def advance(self, stage: Stage) -> None:
        order = list(Stage)
        if self.stage is not None and order.index(stage) <= order.index(self.stage):
            raise RuntimeError(f"stage {stage.value} does not follow {self.stage.value}")
        self.stage = stage
        self.audit.append_stage(stage.value)


def _check(report: WorkflowReport) -> WorkflowReport:
    if not report.schema_ok():
        raise ConsistencyError(f"{report.workflow.value} emitted fields {list(report.report_fields)}")
    return report


def triage(trace: AlertTrace, fixtures: FixtureBundle | None = None,
           config: TriageConfig | None = None) -> TriageOutcome:
    config = config or TriageConfig()
    # fresh fabric per alert: no state survives across alerts
    fabric = ToolFabric(fixtures, config.tools)
    s = Session(trace.id, fabric)

    s.advance(Stage.Orchestrate)
    violations = validate_trace(trace)

    s.advance(Stage.Classify)
    workflows = route(trace, config.routing)

    s.advance(Stage.Analyze)
    reports = [_check(EXECUTORS[wf](trace, s.tools, config.policy, config.routing))
               for wf in workflows]

    s.advance(Stage.Synthesize)
    report = synthesize(trace, reports, violations)
    if config.write_back:
        status = "escalated" if report.actionable else "closed"
        s.tools.update_incident_record(trace.id, status, render_report(report))

    s.advance(Stage.Done)
    metrics = TriageMetrics(len(s.audit.tool_records), time.perf_counter() - s.started, workflows)
    return TriageOutcome(report, s.audit, metrics)


def triage_batch(entries: LabeledCorpus | Sequence[tuple[AlertTrace, FixtureBundle | None]],
                 config: TriageConfig | None = None, parallelism: int = 1) -> list[TriageOutcome]:
    """Triage many alerts; results come back in input order."""
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    if isinstance(entries, LabeledCorpus):
        entries = entries.pairs()
    config = config or TriageConfig()
    if parallelism == 1:
        return [triage(t, f, config) for t, f in entries]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(lambda e: triage(e[0], e[1], config), entries))
