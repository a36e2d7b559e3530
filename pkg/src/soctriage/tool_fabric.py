"""Typed investigation tools served from fixture data, with a per-session audit log.

Every tool call, successful or not, appends exactly one ToolCallRecord to the
calling session's trail. Tools return ``None`` or empty results for missing
data; they only raise for malformed arguments.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable, Mapping

from .alert_model import AnyKey, parse_iso, render_attribute_key


class ToolError(Exception):
    pass


class ArgumentSchemaViolation(ToolError):
    def __init__(self, tool: str, argument: str, reason: str):
        super().__init__(f"{tool}({argument}): {reason}")
        self.tool, self.argument, self.reason = tool, argument, reason


class InvalidWindow(ToolError):
    pass


class UnknownSession(KeyError):
    pass


class QueryKind(str, Enum):
    GetRecentLoginActivity = "GetRecentLoginActivity"
    GetRecentHighRiskActivity = "GetRecentHighRiskActivity"
    GetRecentRuleActivity = "GetRecentRuleActivity"


@dataclass(frozen=True)
class UserRecord:
    email: str
    created: str
    roles: tuple[str, ...] = ()
    user_type: str = "Member"
    display_name: str = ""
    enabled: bool = True

    def __post_init__(self):
        object.__setattr__(self, "roles", tuple(self.roles))
        if not self.email:
            raise ValueError("UserRecord.email must be non-empty")
        if self.user_type not in ("Member", "Guest"):
            raise ValueError(f"bad user_type {self.user_type!r}")
        parse_iso(self.created)

    def to_dict(self) -> dict[str, Any]:
        return {
            "email": self.email,
            "created": self.created,
            "roles": list(self.roles),
            "user_type": self.user_type,
            "display_name": self.display_name,
            "enabled": self.enabled,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "UserRecord":
        return cls(
            d["email"], d["created"], tuple(d.get("roles", ())),
            d.get("user_type", "Member"), d.get("display_name", ""), d.get("enabled", True),
        )


@dataclass(frozen=True)
class AssetRecord:
    hostname: str
    os: str
    owner: str | None = None
    criticality: str = "Medium"

    def __post_init__(self):
        if not self.hostname:
            raise ValueError("AssetRecord.hostname must be non-empty")
        if self.criticality not in ("Low", "Medium", "High"):
            raise ValueError(f"bad criticality {self.criticality!r}")

    def to_dict(self) -> dict[str, Any]:
        return {"hostname": self.hostname, "os": self.os, "owner": self.owner,
                "criticality": self.criticality}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "AssetRecord":
        return cls(d["hostname"], d.get("os", ""), d.get("owner"), d.get("criticality", "Medium"))


@dataclass(frozen=True)
class QueryResult:
    rows: tuple[dict[str, Any], ...] = ()

    @property
    def row_count(self) -> int:
        return len(self.rows)

    def to_dict(self) -> dict[str, Any]:
        return {"rows": [dict(r) for r in self.rows], "rowCount": self.row_count}


@dataclass
class FixtureBundle:
    """Everything the tools can see for one alert."""

    users: dict[str, UserRecord] = field(default_factory=dict)
    assets: dict[str, AssetRecord] = field(default_factory=dict)
    events: list[dict[str, Any]] = field(default_factory=list)
    query_tables: dict[tuple[QueryKind, str], list[dict[str, Any]]] = field(default_factory=dict)
    incident_states: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "users": [u.to_dict() for u in self.users.values()],
            "assets": [a.to_dict() for a in self.assets.values()],
            "events": [dict(e) for e in self.events],
            "query_tables": [
                {"kind": kind.value, "key": key, "rows": [dict(r) for r in rows]}
                for (kind, key), rows in self.query_tables.items()
            ],
            "incident_states": dict(self.incident_states),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "FixtureBundle":
        users = [UserRecord.from_dict(u) for u in d.get("users", ())]
        assets = [AssetRecord.from_dict(a) for a in d.get("assets", ())]
        tables: dict[tuple[QueryKind, str], list[dict[str, Any]]] = {}
        for t in d.get("query_tables", ()):
            tables.setdefault((QueryKind(t["kind"]), t["key"]), []).extend(t["rows"])
        return cls(
            users={u.email: u for u in users},
            assets={a.hostname: a for a in assets},
            events=[dict(e) for e in d.get("events", ())],
            query_tables=tables,
            incident_states=dict(d.get("incident_states", {})),
        )


@dataclass(frozen=True)
class ToolConfig:
    login_lookback_s: int = 8 * 3600
    high_risk_lookback_s: int = 7 * 86400
    rule_lookback_s: int = 7 * 86400
    high_risk_threshold: int = 2000

    def lookback(self, kind: QueryKind) -> int:
        return {
            QueryKind.GetRecentLoginActivity: self.login_lookback_s,
            QueryKind.GetRecentHighRiskActivity: self.high_risk_lookback_s,
            QueryKind.GetRecentRuleActivity: self.rule_lookback_s,
        }[kind]


# -- audit ------------------------------------------------------------------

@dataclass(frozen=True)
class ToolCallRecord:
    sequence_no: int
    session_id: str
    tool: str
    arguments: dict[str, Any]
    ok: bool
    detail: str  # result digest on success, reason on failure
    elapsed_ms: float

    def to_dict(self) -> dict[str, Any]:
        outcome = {"status": "success", "digest": self.detail} if self.ok else \
            {"status": "failure", "reason": self.detail}
        return {"sequence_no": self.sequence_no, "session_id": self.session_id,
                "tool": self.tool, "arguments": self.arguments, "outcome": outcome,
                "elapsed_ms": round(self.elapsed_ms, 3)}


@dataclass(frozen=True)
class StageRecord:
    sequence_no: int
    session_id: str
    stage: str
    elapsed_ms: float

    def to_dict(self) -> dict[str, Any]:
        return {"sequence_no": self.sequence_no, "session_id": self.session_id,
                "tool": "stage", "arguments": {"stage": self.stage},
                "outcome": {"status": "transition"}, "elapsed_ms": round(self.elapsed_ms, 3)}


class AuditTrail:
    """Append-only, ordered record of tool calls and stage transitions."""

    def __init__(self, session_id: str):
        self.session_id = session_id
        self.started = time.perf_counter()
        self._entries: list[ToolCallRecord | StageRecord] = []
        self._lock = threading.Lock()

    def _elapsed_ms(self) -> float:
        return (time.perf_counter() - self.started) * 1000.0

    def append_tool(self, tool: str, arguments: dict[str, Any], ok: bool, detail: str) -> ToolCallRecord:
        with self._lock:
            rec = ToolCallRecord(len(self._entries) + 1, self.session_id, tool, arguments,
                                 ok, detail, self._elapsed_ms())
            self._entries.append(rec)
        return rec

    def append_stage(self, stage: str) -> StageRecord:
        with self._lock:
            rec = StageRecord(len(self._entries) + 1, self.session_id, stage, self._elapsed_ms())
            self._entries.append(rec)
        return rec

    @property
    def entries(self) -> list[ToolCallRecord | StageRecord]:
        with self._lock:
            return list(self._entries)

    @property
    def tool_records(self) -> list[ToolCallRecord]:
        return [e for e in self.entries if isinstance(e, ToolCallRecord)]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict(), sort_keys=True) + "\n" for e in self.entries)


def digest(result: Any) -> str:
    if hasattr(result, "to_dict"):
        result = result.to_dict()
    blob = json.dumps(result, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# -- tools ------------------------------------------------------------------

@dataclass(frozen=True)
class IncidentAck:
    incident_id: str
    status: str
    written: bool


def _matches(event: Mapping[str, Any], predicate: Mapping[str, str]) -> bool:
    return all(k in event and str(event[k]) == str(v) for k, v in predicate.items())


def _by_time(rows: Iterable[Mapping[str, Any]]) -> tuple[dict[str, Any], ...]:
    return tuple(dict(r) for r in sorted(rows, key=lambda r: r.get("timestamp", 0)))


class ToolFabric:
    """Fixture-backed tool provider. One instance per alert keeps state isolated."""

    def __init__(self, fixtures: FixtureBundle | None = None, config: ToolConfig | None = None):
        self.fixtures = fixtures or FixtureBundle()
        self.config = config or ToolConfig()
        self.incident_states = dict(self.fixtures.incident_states)
        self.incident_writes: list[tuple[str, str, str]] = []
        self._sessions: dict[str, AuditTrail] = {}
        self._lock = threading.Lock()

    def open_session(self, session_id: str) -> "ToolSession":
        with self._lock:
            trail = self._sessions.setdefault(session_id, AuditTrail(session_id))
        return ToolSession(self, trail)

    def audit_trail(self, session_id: str) -> AuditTrail:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise UnknownSession(session_id) from None

    def audit_log(self, session_id: str) -> list[ToolCallRecord]:
        return self.audit_trail(session_id).tool_records


def _need_str(tool: str, name: str, value: Any, nonempty: bool = True) -> None:
    if not isinstance(value, str):
        raise ArgumentSchemaViolation(tool, name, "must be a string")
    if nonempty and not value:
        raise ArgumentSchemaViolation(tool, name, "must be non-empty")


def _need_window(tool: str, window: Any) -> tuple[int, int]:
    try:
        start, end = window
    except (TypeError, ValueError):
        raise ArgumentSchemaViolation(tool, "window", "must be a (start, end) pair") from None
    if not all(isinstance(x, int) and not isinstance(x, bool) for x in (start, end)):
        raise ArgumentSchemaViolation(tool, "window", "bounds must be integer epoch seconds")
    if start > end:
        raise InvalidWindow(f"window start {start} is after end {end}")
    return start, end


def _need_predicate(tool: str, predicate: Any) -> dict[str, str]:
    if not isinstance(predicate, Mapping):
        raise ArgumentSchemaViolation(tool, "filter", "must be a mapping")
    return {render_attribute_key(k): v for k, v in predicate.items()}


class ToolSession:
    """Tool handle bound to one audit trail."""

    def __init__(self, fabric: ToolFabric, trail: AuditTrail):
        self.fabric = fabric
        self.trail = trail

    @property
    def session_id(self) -> str:
        return self.trail.session_id

    def _invoke(self, tool: str, arguments: dict[str, Any], fn: Callable[[], Any]) -> Any:
        try:
            result = fn()
        except ToolError as e:
            self.trail.append_tool(tool, arguments, False, f"{type(e).__name__}: {e}")
            raise
        self.trail.append_tool(tool, arguments, True, digest(result))
        return result

    def get_user_record(self, email: str, account: str, tenant: str) -> UserRecord | None:
        def run():
            _need_str("getUserRecord", "email", email)
            return self.fabric.fixtures.users.get(email)
        return self._invoke("getUserRecord",
                            {"email": email, "account": account, "tenant": tenant}, run)

    def get_asset_record(self, hostname: str, account: str, tenant: str) -> AssetRecord | None:
        def run():
            _need_str("getAssetRecord", "hostname", hostname)
            return self.fabric.fixtures.assets.get(hostname)
        return self._invoke("getAssetRecord",
                            {"hostname": hostname, "account": account, "tenant": tenant}, run)

    def search_behavior_events(self, filter: Mapping[AnyKey | str, str],
                               window: tuple[int, int]) -> QueryResult:
        def run():
            pred = _need_predicate("searchBehaviorEvents", filter)
            start, end = _need_window("searchBehaviorEvents", window)
            hits = [e for e in self.fabric.fixtures.events
                    if start <= e.get("timestamp", start - 1) <= end and _matches(e, pred)]
            return QueryResult(_by_time(hits))
        args = {"filter": {render_attribute_key(k): v for k, v in dict(filter).items()}
                if isinstance(filter, Mapping) else filter,
                "window": list(window) if isinstance(window, (tuple, list)) else window}
        return self._invoke("searchBehaviorEvents", args, run)

    def search_behavior_summaries(self, group_by: AnyKey | str, filter: Mapping[AnyKey | str, str],
                                  window: tuple[int, int]) -> QueryResult:
        def run():
            key = render_attribute_key(group_by)
            _need_str("searchBehaviorSummaries", "group_by", key)
            pred = _need_predicate("searchBehaviorSummaries", filter)
            start, end = _need_window("searchBehaviorSummaries", window)
            counts: dict[str, int] = {}
            for e in self.fabric.fixtures.events:
                if start <= e.get("timestamp", start - 1) <= end and _matches(e, pred) and key in e:
                    counts[str(e[key])] = counts.get(str(e[key]), 0) + 1
            return QueryResult(tuple({key: v, "count": counts[v]} for v in sorted(counts)))
        args = {"group_by": render_attribute_key(group_by),
                "filter": {render_attribute_key(k): v for k, v in dict(filter).items()}
                if isinstance(filter, Mapping) else filter,
                "window": list(window) if isinstance(window, (tuple, list)) else window}
        return self._invoke("searchBehaviorSummaries", args, run)

    def run_structured_query(self, kind: QueryKind | str, account: str, tenant: str, key: str,
                             as_of: str, rule: str | None = None) -> QueryResult:
        def run():
            try:
                qk = QueryKind(kind)
            except ValueError:
                raise ArgumentSchemaViolation("runStructuredQuery", "kind", f"unknown kind {kind!r}") from None
            _need_str("runStructuredQuery", "key", key)
            _need_str("runStructuredQuery", "as_of", as_of)
            try:
                end = parse_iso(as_of)
            except ValueError:
                raise ArgumentSchemaViolation("runStructuredQuery", "as_of", "not ISO-8601") from None
            start = end - self.fabric.config.lookback(qk)
            rows = [r for r in self.fabric.fixtures.query_tables.get((qk, key), ())
                    if start <= r.get("timestamp", start - 1) <= end]
            if qk is QueryKind.GetRecentHighRiskActivity:
                rows = [r for r in rows if r.get("riskScore", 0) > self.fabric.config.high_risk_threshold]
            elif qk is QueryKind.GetRecentRuleActivity and rule is not None:
                rows = [r for r in rows if r.get("behaviorRule") == rule]
            return QueryResult(_by_time(rows))
        args = {"kind": str(getattr(kind, "value", kind)), "account": account, "tenant": tenant,
                "key": key, "as_of": as_of}
        if rule is not None:
            args["rule"] = rule
        return self._invoke("runStructuredQuery", args, run)

    def update_incident_record(self, incident_id: str, status: str, report: Any) -> IncidentAck:
        """Set the incident status. ``report`` is the rendered triage report (or any
        JSON-able object); repeating an identical write is a no-op."""
        def run():
            _need_str("updateIncidentRecord", "id", incident_id)
            _need_str("updateIncidentRecord", "status", status)
            fab = self.fabric
            write = (incident_id, status, digest(report))
            with fab._lock:
                last = next((w for w in reversed(fab.incident_writes) if w[0] == incident_id), None)
                if last == write:
                    return IncidentAck(incident_id, status, False)
                fab.incident_writes.append(write)
                fab.incident_states[incident_id] = status
            return IncidentAck(incident_id, status, True)
        return self._invoke("updateIncidentRecord",
                            {"id": incident_id, "status": status, "report_digest": digest(report)}, run)
