"""Reconcile workflow reports into one triage verdict and render the final report."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable, Sequence

from .alert_model import AlertTrace, Subclass, Verdict, Violation
from .router import WorkflowId
from .workflows import (
    DATA_ERROR,
    INSUFFICIENT_EVIDENCE,
    PREMISE_CONTRADICTED,
    REQUIRES_ADDITIONAL_INFO,
    UNKNOWN_EVIDENCE,
    WorkflowReport,
)


class EmptyReports(ValueError):
    pass


class ObservableKind(str, Enum):
    User = "User"
    IP = "IP"
    Host = "Host"
    File = "File"
    Account = "Account"
    ARN = "ARN"


@dataclass(frozen=True)
class Observable:
    kind: ObservableKind
    value: str
    source: str

    def to_dict(self) -> dict[str, str]:
        return {"kind": self.kind.value, "value": self.value, "source": self.source}


@dataclass(frozen=True)
class TriageReport:
    verdict: Verdict
    subclass: Subclass | None
    workflow_reports: tuple[WorkflowReport, ...]
    reasoning: str
    summary: str
    observables: tuple[Observable, ...] = ()
    followups: tuple[str, ...] = ()
    alert_id: str = ""

    @property
    def actionable(self) -> bool:
        return self.verdict is Verdict.Actionable


ATTRIBUTE_KINDS = {
    "Username": ObservableKind.User,
    "TargetUser": ObservableKind.User,
    "ClientIP": ObservableKind.IP,
    "ActorIP": ObservableKind.IP,
    "Hostname": ObservableKind.Host,
    "FileName": ObservableKind.File,
    "ExploitPath": ObservableKind.File,
    "ARN": ObservableKind.ARN,
}

FOLLOWUPS = {
    WorkflowId.AddUser: "Was the privileged provisioning of {targets} approved through change management?",
    WorkflowId.AuthChange: "Did {entity} personally change their authentication methods at {time}?",
    WorkflowId.Coro: "Has the Coro detection for {entity} been contained on the affected device?",
    WorkflowId.Generic: "What other activity from {entity} surrounds {time}?",
    WorkflowId.MultipleISP: "Was the user travelling or on VPN at {time}?",
    WorkflowId.O365Guest: "Who invited guest {entity}, and is the admin role assignment expected?",
    WorkflowId.O365Login: "Did {entity} perform the login at {time}, and are the recent high-risk activities related?",
    WorkflowId.PowerShell: "Which parent process launched the PowerShell command on {host}, and has persistence been removed?",
    WorkflowId.SalesforceAbnormalLogin: "Do the repeated abnormal Salesforce logins for {entity} come from a known device?",
    WorkflowId.SharePointFile: "Is the file access by {entity} consistent with their role?",
}


def classify_nonactionable(reports: Sequence[WorkflowReport],
                           violations: Sequence[Violation] = ()) -> Subclass:
    """Priority order, first match wins: data error > missing evidence > flawed rule > benign."""
    flags = set().union(*(r.flags for r in reports)) if reports else set()
    if violations or DATA_ERROR in flags:
        return Subclass.FalsePositiveData
    if UNKNOWN_EVIDENCE in flags or INSUFFICIENT_EVIDENCE in flags or any(
        v == "Unknown" or v == REQUIRES_ADDITIONAL_INFO
        for r in reports for v in r.report_fields.values()
    ):
        return Subclass.Undetermined
    if PREMISE_CONTRADICTED in flags:
        return Subclass.FalsePositiveLogic
    return Subclass.BenignPositive


def _entity_kind(entity: str) -> ObservableKind:
    if "@" in entity:
        return ObservableKind.User
    if entity.lower().startswith("arn:"):
        return ObservableKind.Account
    return ObservableKind.Host


def _harvest(attrs: dict[str, Any], source: str) -> Iterable[Observable]:
    for key, value in attrs.items():
        kind = ATTRIBUTE_KINDS.get(key)
        if kind is None or not isinstance(value, str):
            continue
        parts = value.split(",") if key == "TargetUser" else [value]
        for part in (p.strip() for p in parts):
            if part:
                yield Observable(kind, part, source)


def extract_observables(trace: AlertTrace, reports: Sequence[WorkflowReport]) -> list[Observable]:
    found: list[Observable] = []
    if trace.entity:
        found.append(Observable(_entity_kind(trace.entity), trace.entity, "entity"))
    for rule in trace.rules:
        found.extend(_harvest(rule.attributes, f"properties.{rule.key}.attributes"))
    for report in reports:
        for row in report.evidence.get("rows", ()):
            found.extend(_harvest(row, f"{report.workflow.value}.tool_result"))
    seen: set[tuple[ObservableKind, str]] = set()
    out = []
    for obs in found:
        if (obs.kind, obs.value) not in seen:
            seen.add((obs.kind, obs.value))
            out.append(obs)
    return out


def _followups(trace: AlertTrace, reports: Sequence[WorkflowReport]) -> list[str]:
    host = next((r.attributes["Hostname"] for r in trace.rules if "Hostname" in r.attributes),
                trace.entity or "the host")
    targets = ", ".join(next((r.evidence.get("targets") for r in reports
                              if r.workflow is WorkflowId.AddUser), None) or ["the target user"])
    ctx = {"entity": trace.entity or "the entity", "time": trace.time_iso, "host": host,
           "targets": targets}
    out: list[str] = []
    for r in reports:
        if r.actionable:
            q = FOLLOWUPS[r.workflow].format(**ctx)
            if q not in out:
                out.append(q)
    return out


def synthesize(trace: AlertTrace, reports: Sequence[WorkflowReport],
               violations: Sequence[Violation] = ()) -> TriageReport:
    if not reports:
        raise EmptyReports("at least one workflow report is required")
    actionable = any(r.actionable for r in reports)
    verdict = Verdict.Actionable if actionable else Verdict.NonActionable
    subclass = None if actionable else classify_nonactionable(reports, violations)
    reasoning = " ".join(r.reasoning for r in reports)
    chosen = [r for r in reports if r.actionable] if actionable else list(reports)
    summary = " ".join(r.summary for r in chosen)
    return TriageReport(
        verdict=verdict,
        subclass=subclass,
        workflow_reports=tuple(reports),
        reasoning=reasoning,
        summary=summary,
        observables=tuple(extract_observables(trace, reports)),
        followups=tuple(_followups(trace, reports)) if actionable else (),
        alert_id=trace.id,
    )


def report_to_dict(report: TriageReport) -> dict[str, Any]:
    wrs = report.workflow_reports
    if len(wrs) == 1:
        block: dict[str, Any] = dict(wrs[0].report_fields)
    else:
        block = {r.workflow.value: dict(r.report_fields) for r in wrs}
    return {
        "report": block,
        "actionable": report.actionable,
        "reasoning": report.reasoning,
        "summary": report.summary,
        "alert_id": report.alert_id,
        "verdict": report.verdict.value,
        "subclass": report.subclass.value if report.subclass else None,
        "workflows": [r.to_dict() for r in wrs],
        "observables": [o.to_dict() for o in report.observables],
        "followups": list(report.followups),
    }


def render_report(report: TriageReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, ensure_ascii=False) + "\n"


def report_from_dict(doc: dict[str, Any]) -> TriageReport:
    wrs = tuple(
        WorkflowReport(WorkflowId(w["workflow"]), dict(w["report"]), w["actionable"],
                       w["reasoning"], w["summary"])
        for w in doc["workflows"]
    )
    return TriageReport(
        verdict=Verdict(doc["verdict"]),
        subclass=Subclass(doc["subclass"]) if doc.get("subclass") else None,
        workflow_reports=wrs,
        reasoning=doc["reasoning"],
        summary=doc["summary"],
        observables=tuple(Observable(ObservableKind(o["kind"]), o["value"], o["source"])
                          for o in doc.get("observables", ())),
        followups=tuple(doc.get("followups", ())),
        alert_id=doc.get("alert_id", ""),
    )


def parse_report(text: str) -> TriageReport:
    return report_from_dict(json.loads(text))
