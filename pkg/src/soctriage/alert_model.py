"""Alert trace types and the strict JSON decoder for the trace interchange format.

One trace document looks like::

    {"id": "...", "entity": "...", "account": "...", "tenant": "...",
     "timestamp": 1717236300, "time_iso": "2024-06-01T10:45:00Z",
     "riskScore": 1200,
     "properties": {"<rule key>": {"behaviorRule": "...", "description": "...",
                                   "attributes": {"ClientIP": "..."},
                                   "riskScore": 900, "risks": ["..."]}}}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Iterable, Mapping, Union

TIMESTAMP_TOLERANCE_S = 1


class AttributeKey(str, Enum):
    Username = "Username"
    ARN = "ARN"
    UserType = "UserType"
    ClientIP = "ClientIP"
    ActorIP = "ActorIP"
    City = "City"
    Country = "Country"
    ISP = "ISP"
    OS = "OS"
    BrowserType = "BrowserType"
    Hostname = "Hostname"
    Workload = "Workload"
    Operation = "Operation"
    EventName = "EventName"
    CmdLine = "CmdLine"
    ParentProcess = "ParentProcess"
    FileName = "FileName"
    ExploitPath = "ExploitPath"
    MFA = "MFA"
    Severity = "Severity"
    Remediation = "Remediation"
    Verdict = "Verdict"
    TargetUser = "TargetUser"


@dataclass(frozen=True)
class UnknownKey:
    """Attribute key outside the known vocabulary, kept verbatim."""

    name: str

    def __str__(self) -> str:
        return self.name


AnyKey = Union[AttributeKey, UnknownKey]


def parse_attribute_key(name: str) -> AnyKey:
    try:
        return AttributeKey(name)
    except ValueError:
        return UnknownKey(name)


def render_attribute_key(key: AnyKey | str) -> str:
    if isinstance(key, AttributeKey):
        return key.value
    if isinstance(key, UnknownKey):
        return key.name
    return key


class Verdict(str, Enum):
    Actionable = "Actionable"
    NonActionable = "NonActionable"


class Subclass(str, Enum):
    BenignPositive = "BenignPositive"
    FalsePositiveLogic = "FalsePositiveLogic"
    FalsePositiveData = "FalsePositiveData"
    Undetermined = "Undetermined"


@dataclass(frozen=True)
class GroundTruthLabel:
    verdict: Verdict
    subclass: Subclass | None = None

    def __post_init__(self):
        if (self.verdict is Verdict.NonActionable) != (self.subclass is not None):
            raise ValueError("subclass must be set exactly when verdict is NonActionable")

    def to_dict(self) -> dict[str, Any]:
        return {
            "verdict": self.verdict.value,
            "subclass": self.subclass.value if self.subclass else None,
        }

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any]) -> "GroundTruthLabel":
        sub = obj.get("subclass")
        return cls(Verdict(obj["verdict"]), Subclass(sub) if sub else None)


@dataclass(frozen=True)
class TriggeredRule:
    behavior_rule: str
    description: str
    attributes: dict[str, str]
    risk_score: int
    risks: tuple[str, ...] | None = None
    # key under "properties"; defaults to the rule name
    key: str = ""

    def __post_init__(self):
        object.__setattr__(self, "attributes", dict(self.attributes))
        if self.risks is not None:
            object.__setattr__(self, "risks", tuple(self.risks))
        if not self.key:
            object.__setattr__(self, "key", self.behavior_rule)


@dataclass(frozen=True)
class AlertTrace:
    id: str
    entity: str
    account: str
    tenant: str
    timestamp: int
    time_iso: str
    risk_score: int
    rules: tuple[TriggeredRule, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))


@dataclass(frozen=True)
class Violation:
    field: str
    reason: str
    where: str = field(default="", compare=False)


class TraceError(ValueError):
    """Base class for trace decoding failures. ``line`` is set by corpus loaders."""

    line: int | None = None

    def with_line(self, line: int) -> "TraceError":
        self.line = line
        return self

    def __str__(self) -> str:
        msg = super().__str__()
        return f"line {self.line}: {msg}" if self.line is not None else msg


class MalformedDocument(TraceError):
    pass


class SchemaViolation(TraceError):
    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


class TimestampMismatch(TraceError):
    def __init__(self, timestamp: int, time_iso: str, delta: int):
        super().__init__(f"time_iso {time_iso!r} is {delta}s away from timestamp {timestamp}")
        self.delta = delta


# -- time helpers -----------------------------------------------------------

def parse_iso(text: str) -> int:
    """ISO-8601 string to integer epoch seconds. Naive values are taken as UTC."""
    s = text.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def format_iso(epoch: int) -> str:
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


# -- decoding ---------------------------------------------------------------

_REQUIRED_STR = ("id", "entity", "account", "tenant")


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


class _Decoder:
    """Collects schema problems while building a trace with defaults filled in."""

    def __init__(self, strict: bool):
        self.strict = strict
        self.problems: list[Violation] = []

    def fail(self, fld: str, reason: str, where: str = ""):
        if self.strict:
            raise SchemaViolation(where or fld, reason)
        self.problems.append(Violation(fld, reason, where))

    def get(self, obj: Mapping, name: str, check, default, fld: str | None = None, where: str = ""):
        fld = fld or name
        if name not in obj:
            self.fail(fld, "missing", where)
            return default
        value = obj[name]
        if not check(value):
            self.fail(fld, "ill-typed", where)
            return default
        return value

    def rule(self, key: str, obj: Any) -> TriggeredRule:
        where = f"properties.{key}"
        if not isinstance(obj, dict):
            self.fail("rules", "ill-typed", where)
            obj = {}
        name = self.get(obj, "behaviorRule", lambda v: isinstance(v, str), "",
                        "behavior_rule", where)
        desc = self.get(obj, "description", lambda v: isinstance(v, str), "",
                        "description", where)
        attrs = self.get(obj, "attributes", lambda v: isinstance(v, dict), {},
                         "attributes", where)
        clean = {}
        for k, v in attrs.items():
            if isinstance(v, str):
                clean[k] = v
            else:
                self.fail("attributes", "ill-typed", f"{where}.attributes.{k}")
        score = self.get(obj, "riskScore", _is_int, 0, "risk_score", where)
        risks = None
        if obj.get("risks") is not None:
            raw = obj["risks"]
            if isinstance(raw, list) and all(isinstance(r, str) for r in raw):
                risks = tuple(raw)
            else:
                self.fail("risks", "ill-typed", where)
        return TriggeredRule(name, desc, clean, score, risks, key)

    def trace(self, obj: Any) -> AlertTrace:
        if not isinstance(obj, dict):
            raise MalformedDocument("trace document must be a JSON object")
        vals = {name: self.get(obj, name, lambda v: isinstance(v, str), "") for name in _REQUIRED_STR}
        ts = self.get(obj, "timestamp", _is_int, 0)
        iso = self.get(obj, "time_iso", lambda v: isinstance(v, str), "")
        if iso:
            try:
                parse_iso(iso)
            except ValueError:
                self.fail("time_iso", "unparseable")
        risk = self.get(obj, "riskScore", _is_int, 0, "risk_score")
        props = self.get(obj, "properties", lambda v: isinstance(v, dict), {}, "rules")
        rules = [self.rule(k, v) for k, v in props.items()]
        return AlertTrace(timestamp=ts, time_iso=iso, risk_score=risk, rules=tuple(rules), **vals)


def _load_json(text: str | bytes) -> Any:
    try:
        return json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise MalformedDocument(f"not a JSON document: {e}") from None


def trace_from_dict(obj: Any, *, check_timestamp: bool = True) -> AlertTrace:
    trace = _Decoder(strict=True).trace(obj)
    if check_timestamp:
        delta = parse_iso(trace.time_iso) - trace.timestamp
        if abs(delta) > TIMESTAMP_TOLERANCE_S:
            raise TimestampMismatch(trace.timestamp, trace.time_iso, delta)
    return trace


def parse_alert(text: str | bytes, *, check_timestamp: bool = True) -> AlertTrace:
    """Decode one trace document.

    Raises MalformedDocument, SchemaViolation or TimestampMismatch. With
    ``check_timestamp=False`` a disagreeing ``time_iso`` is kept and left for
    :func:`validate_trace` to report.
    """
    return trace_from_dict(_load_json(text), check_timestamp=check_timestamp)


def force_parse(text: str | bytes) -> tuple[AlertTrace, list[Violation]]:
    """Best-effort decode: missing or ill-typed fields get defaults and are reported."""
    dec = _Decoder(strict=False)
    trace = dec.trace(_load_json(text))
    return trace, dec.problems + validate_trace(trace)


def validate_trace(trace: AlertTrace) -> list[Violation]:
    out: list[Violation] = []
    if not trace.id:
        out.append(Violation("id", "empty"))
    if not trace.entity:
        out.append(Violation("entity", "empty"))
    if trace.risk_score < 0:
        out.append(Violation("risk_score", "negative"))
    try:
        delta = parse_iso(trace.time_iso) - trace.timestamp
    except ValueError:
        out.append(Violation("time_iso", "unparseable"))
    else:
        if abs(delta) > TIMESTAMP_TOLERANCE_S:
            out.append(Violation("timestamp", "mismatch"))
    for rule in trace.rules:
        where = f"properties.{rule.key}"
        if not rule.behavior_rule:
            out.append(Violation("behavior_rule", "empty", where))
        if rule.risk_score < 0:
            out.append(Violation("risk_score", "negative", where))
    return out


# -- encoding ---------------------------------------------------------------

def rule_to_dict(rule: TriggeredRule) -> dict[str, Any]:
    d: dict[str, Any] = {
        "behaviorRule": rule.behavior_rule,
        "description": rule.description,
        "attributes": dict(rule.attributes),
        "riskScore": rule.risk_score,
    }
    if rule.risks is not None:
        d["risks"] = list(rule.risks)
    return d


def trace_to_dict(trace: AlertTrace) -> dict[str, Any]:
    return {
        "id": trace.id,
        "entity": trace.entity,
        "account": trace.account,
        "tenant": trace.tenant,
        "timestamp": trace.timestamp,
        "time_iso": trace.time_iso,
        "riskScore": trace.risk_score,
        "properties": {r.key: rule_to_dict(r) for r in trace.rules},
    }


def serialize_trace(trace: AlertTrace) -> str:
    return json.dumps(trace_to_dict(trace), ensure_ascii=False, separators=(",", ":"))


def get_attribute(rule: TriggeredRule, key: AnyKey | str) -> str | None:
    return rule.attributes.get(render_attribute_key(key))


def iter_attribute(rules: Iterable[TriggeredRule], key: AnyKey | str):
    """Yield (rule, value) for every rule carrying ``key``."""
    name = render_attribute_key(key)
    for rule in rules:
        if name in rule.attributes:
            yield rule, rule.attributes[name]
