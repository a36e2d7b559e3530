"""Evidence-acquisition executors, one per workflow.

Each executor gathers evidence through a :class:`ToolSession`, applies its
workflow's decision policy, and returns a :class:`WorkflowReport` whose
``report_fields`` keys match the workflow's output schema exactly.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterable

from .alert_model import (
    AlertTrace,
    AttributeKey,
    TriggeredRule,
    format_iso,
    get_attribute,
    iter_attribute,
    parse_iso,
    validate_trace,
)
from .geo import KM_PER_MILE, GeoPoint, haversine_miles, resolve_city
from .powershell import Indicator, classify_powershell
from .router import (
    RoutingTable,
    WorkflowId,
    invokes_shell,
    is_o365_login_rule,
    is_sharepoint_rule,
)
from .tool_fabric import QueryKind, ToolError, ToolSession, UserRecord

# WorkflowReport.flags: evidence conditions the synthesizer uses for subclassing
DATA_ERROR = "data_error"
UNKNOWN_EVIDENCE = "unknown_evidence"
INSUFFICIENT_EVIDENCE = "insufficient_evidence"
PREMISE_CONTRADICTED = "premise_contradicted"

SCHEMAS: dict[WorkflowId, tuple[str, ...]] = {
    WorkflowId.AddUser: ("target_user_record", "target_user_admin", "reasoning_target_user_admin"),
    WorkflowId.AuthChange: ("user_record", "new_user", "reasoning_new_user"),
    WorkflowId.Coro: ("user_email", "behavior_rules"),
    WorkflowId.Generic: ("validation", "validation_reasoning", "recommendation"),
    WorkflowId.MultipleISP: ("impossible_travel", "impossible_travel_reasoning"),
    WorkflowId.O365Guest: ("guest_user_record", "guest_user_admin", "reasoning_guest_user_admin"),
    WorkflowId.O365Login: ("user_email", "recent_activity_riskScore_greater_than_2000_count",
                           "high_risk_activity_raw_json_row"),
    WorkflowId.PowerShell: ("powerShell_Malicious", "reasoning", "dis_Infect_Detection",
                            "reasoning_Dis_Infect"),
    WorkflowId.SalesforceAbnormalLogin: ("user_email", "recent_rule_count"),
    WorkflowId.SharePointFile: ("sharepoint_risk_score",),
}

CLOSE_TICKET = "CLOSE_TICKET"
ESCALATE_TO_TIER_TWO = "ESCALATE_TO_TIER_TWO"
REQUIRES_ADDITIONAL_INFO = "REQUIRES_ADDITIONAL_INFO"

IDENTITY_KEYS = (AttributeKey.Username, AttributeKey.ARN, AttributeKey.Hostname)
CONTEXT_KEYS = (AttributeKey.ClientIP, AttributeKey.ActorIP, AttributeKey.Operation,
                AttributeKey.EventName, AttributeKey.CmdLine, AttributeKey.FileName)


@dataclass(frozen=True)
class PolicyConfig:
    """Decision thresholds. Defaults are the calibrated workflow criteria."""

    risk_threshold: int = 1000
    salesforce_min_triggers: int = 3
    new_user_days: int = 30
    travel_min_miles: float = 500.0
    travel_min_mph: float = 600.0
    admin_roles: frozenset[str] = frozenset({"GlobalAdmin", "PrivilegedRoleAdmin", "UserAdmin", "Admin"})
    removal_pattern: str = "Remove_Authentication_Method"
    salesforce_rule: str = "Fluency_Salesforce_Login_Status_Abnormal"
    generic_lookback_s: int = 86400

    def __post_init__(self):
        object.__setattr__(self, "admin_roles", frozenset(self.admin_roles))

    @classmethod
    def from_file(cls, path: str | Path) -> "PolicyConfig":
        raw = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown policy keys: {sorted(unknown)}")
        return cls(**raw)


@dataclass(frozen=True)
class WorkflowReport:
    workflow: WorkflowId
    report_fields: dict[str, Any]
    actionable: bool
    reasoning: str
    summary: str
    flags: frozenset[str] = field(default=frozenset(), compare=False)
    # context not in the output schema: tool rows seen, policy inputs
    evidence: dict[str, Any] = field(default_factory=dict, compare=False)

    def schema_ok(self) -> bool:
        return tuple(self.report_fields) == SCHEMAS[self.workflow]

    def to_dict(self) -> dict[str, Any]:
        return {
            "workflow": self.workflow.value,
            "report": dict(self.report_fields),
            "actionable": self.actionable,
            "reasoning": self.reasoning,
            "summary": self.summary,
        }


# -- shared helpers ---------------------------------------------------------

def admin_role(record: UserRecord | None, policy: PolicyConfig) -> str | None:
    if record is None:
        return None
    wanted = {r.lower() for r in policy.admin_roles}
    return next((r for r in record.roles if r.lower() in wanted), None)


def humanize(name: str) -> str:
    """``GlobalAdmin`` -> ``Global Admin``."""
    return re.sub(r"(?<=[a-z0-9])(?=[A-Z])", " ", name)


def _event_time(trace: AlertTrace) -> int:
    try:
        return parse_iso(trace.time_iso)
    except ValueError:
        return trace.timestamp


def _as_of(trace: AlertTrace) -> str:
    try:
        parse_iso(trace.time_iso)
        return trace.time_iso
    except ValueError:
        return format_iso(trace.timestamp)


def _first_attr(rules: Iterable[TriggeredRule], name: str) -> str | None:
    return next((v for _, v in iter_attribute(rules, name)), None)


def _attr_ci(rule: TriggeredRule, names: Iterable[str]) -> list[str]:
    wanted = {n.lower() for n in names}
    return [v for k, v in rule.attributes.items() if k.lower() in wanted]


class _Calls:
    """Wraps tool calls so a ToolError degrades to a default and marks a data error."""

    def __init__(self, tools: ToolSession):
        self.tools = tools
        self.flags: set[str] = set()

    def __call__(self, fn: Callable[..., Any], *args, default=None, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ToolError:
            self.flags.add(DATA_ERROR)
            return default


def _rows_json(rows) -> str:
    return json.dumps([dict(r) for r in rows], sort_keys=True, separators=(",", ":"))


# -- executors --------------------------------------------------------------

_ADD_USER_EVENTS = (
    ("user_added", "New user provisioned"),
    ("user_updated", "User account updated"),
    ("add_member_to_group", "User added to group"),
)


def run_add_user(trace: AlertTrace, tools: ToolSession, policy: PolicyConfig | None = None,
                 routing: RoutingTable | None = None) -> WorkflowReport:
    policy = policy or PolicyConfig()
    calls = _Calls(tools)
    names = " ".join(r.behavior_rule.lower() for r in trace.rules)
    event = next((label for key, label in _ADD_USER_EVENTS if key in names), "User change")

    targets: list[str] = []
    for _, value in iter_attribute(trace.rules, AttributeKey.TargetUser):
        for email in (v.strip() for v in value.split(",")):
            if email and email not in targets:
                targets.append(email)

    if not targets:
        fields_ = {"target_user_record": "Unknown", "target_user_admin": "Unknown",
                   "reasoning_target_user_admin": "No TargetUser attribute in the alert; target user cannot be resolved."}
        return WorkflowReport(WorkflowId.AddUser, fields_, False,
                              "Target user privileges could not be verified; not escalated under policy.",
                              f"{event}; target user missing from alert data, not escalated.",
                              frozenset({DATA_ERROR, UNKNOWN_EVIDENCE}), {"targets": []})

    statuses = []
    for email in targets:
        rec = calls(tools.get_user_record, email, trace.account, trace.tenant)
        role = admin_role(rec, policy)
        statuses.append((email, rec, role))

    found_all = all(rec is not None for _, rec, _ in statuses)
    admins = [(e, role) for e, _, role in statuses if role]
    unknown = [e for e, rec, _ in statuses if rec is None]
    many = len(targets) > 1

    if admins:
        email, role = admins[0]
        level = "Admin"
        who = f"Target user {email}" if many else "Target user"
        why = f"{who} roles include {role} in the retrieved user record."
        reasoning = "Admin privilege assignment is actionable under policy."
        summary = f"{event} with {humanize(role)} privileges; escalate for immediate review."
    elif unknown:
        level = "Unknown"
        why = f"No directory record found for {', '.join(unknown)}."
        reasoning = "Target user privileges could not be verified; not escalated under policy."
        summary = f"{event}; target user record unavailable, not escalated."
    else:
        level = "User"
        why = "Target user record shows no admin roles." if not many else \
            "No target user record shows admin roles."
        reasoning = "Target user holds no admin privileges under policy."
        summary = f"{event} without admin privileges; not actionable."

    flags = set(calls.flags)
    if unknown:
        flags.add(UNKNOWN_EVIDENCE)
    fields_ = {"target_user_record": "Found" if found_all else "Unknown",
               "target_user_admin": level, "reasoning_target_user_admin": why}
    return WorkflowReport(WorkflowId.AddUser, fields_, level == "Admin", reasoning, summary,
                          frozenset(flags), {"targets": targets})


def run_auth_change(trace: AlertTrace, tools: ToolSession, policy: PolicyConfig | None = None,
                    routing: RoutingTable | None = None) -> WorkflowReport:
    policy = policy or PolicyConfig()
    calls = _Calls(tools)
    removal = any(policy.removal_pattern.lower() in r.behavior_rule.lower() for r in trace.rules)
    method = "an authentication method"
    for r in trace.rules:
        hit = _attr_ci(r, ("AuthenticationMethod", "AuthMethod", "Method"))
        if hit:
            method = hit[0]
            break

    rec = calls(tools.get_user_record, trace.entity, trace.account, trace.tenant)
    flags = set(calls.flags)
    if rec is None:
        record, new_user = "Unknown", "Unknown"
        why = "No directory record found for the user; account age unknown."
        flags.add(UNKNOWN_EVIDENCE)
    else:
        record = "Found"
        created = parse_iso(rec.created)
        age_days = (_event_time(trace) - created) / 86400
        if age_days < policy.new_user_days:
            new_user = "Yes"
            why = f"User account created {max(0, int(age_days))} days before the event (within {policy.new_user_days} days)."
        else:
            new_user = "No"
            year = datetime.fromtimestamp(created, tz=timezone.utc).year
            why = f"User account created in {year} (older than {policy.new_user_days} days)."

    actionable = removal or new_user in ("No", "Unknown")
    if removal:
        reasoning = "Removal of an authentication method is always actionable."
    elif new_user == "Yes":
        reasoning = "Authentication method added by a new user is expected onboarding; not actionable."
    elif new_user == "No":
        reasoning = "Authentication method added by an established user is actionable under policy."
    else:
        reasoning = "Authentication method added by a user with no directory record is actionable under policy."
    who = {"No": "Established user", "Yes": "New user", "Unknown": "Unverified user"}[new_user]
    verb = "removed" if removal else "added"
    if actionable:
        summary = f"{who} {verb} {method}; flagged for potential account compromise."
    else:
        summary = f"{who} {verb} {method} during onboarding; not actionable."
    fields_ = {"user_record": record, "new_user": new_user, "reasoning_new_user": why}
    return WorkflowReport(WorkflowId.AuthChange, fields_, actionable, reasoning, summary,
                          frozenset(flags), {"removal": removal})


CORO_REASONING = "Escalated per Coro vendor policy."


def run_coro(trace: AlertTrace, tools: ToolSession, policy: PolicyConfig | None = None,
             routing: RoutingTable | None = None) -> WorkflowReport:
    names = [r.behavior_rule for r in trace.rules]
    coro = [n for n in names if n.lower().startswith("coro_")] or names
    fields_ = {"user_email": trace.entity, "behavior_rules": names}
    summary = f"Coro vendor detection ({', '.join(coro)}) for {trace.entity or 'unknown entity'}; escalate."
    return WorkflowReport(WorkflowId.Coro, fields_, True, CORO_REASONING, summary)


def has_direct_evidence(rule: TriggeredRule) -> bool:
    return any(k.value in rule.attributes for k in IDENTITY_KEYS) and \
        any(k.value in rule.attributes for k in CONTEXT_KEYS)


def run_generic(trace: AlertTrace, tools: ToolSession, policy: PolicyConfig | None = None,
                routing: RoutingTable | None = None) -> WorkflowReport:
    policy = policy or PolicyConfig()
    calls = _Calls(tools)
    thr = policy.risk_threshold
    violations = validate_trace(trace)
    flags: set[str] = set()
    evidence: dict[str, Any] = {}
    n = len(trace.rules)

    if violations:
        listed = "; ".join(f"{v.field} {v.reason}" for v in violations)
        validation, recommendation = False, REQUIRES_ADDITIONAL_INFO
        why = f"Trace failed validation ({listed})."
        reasoning = "Alert data is inconsistent; additional information required before a decision."
        flags.add(DATA_ERROR)
    else:
        lacking = [r.behavior_rule for r in trace.rules if not has_direct_evidence(r)]
        sufficient = n > 0 and not lacking
        source = "alert attributes"
        if not sufficient:
            end = trace.timestamp
            res = calls(tools.search_behavior_events, {AttributeKey.Username: trace.entity},
                        (end - policy.generic_lookback_s, end))
            if res is not None:
                evidence["rows"] = [dict(r) for r in res.rows]
            if res is not None and res.row_count > 0:
                sufficient = True
                source = f"{res.row_count} supporting raw event(s)"
        if not sufficient:
            validation, recommendation = False, REQUIRES_ADDITIONAL_INFO
            missing = ", ".join(lacking) if lacking else "no behavior rules"
            why = f"Direct evidence incomplete ({missing}) and no supporting raw events found."
            reasoning = "Evidence is insufficient to decide; additional information required."
            flags.add(INSUFFICIENT_EVIDENCE)
        elif trace.risk_score > thr:
            validation, recommendation = True, ESCALATE_TO_TIER_TWO
            why = f"Evidence validated from {source}."
            reasoning = f"Validated alert with ticket risk {trace.risk_score} above {thr}; escalate to tier two."
        else:
            validation, recommendation = True, CLOSE_TICKET
            why = f"Evidence validated from {source}."
            reasoning = f"Validated alert with ticket risk {trace.risk_score} at or below {thr}; close."

    flags |= calls.flags
    actionable = recommendation == ESCALATE_TO_TIER_TWO
    outcome = {ESCALATE_TO_TIER_TWO: "escalated to tier two", CLOSE_TICKET: "closed",
               REQUIRES_ADDITIONAL_INFO: "needs additional information"}[recommendation]
    summary = f"Generic triage of {n} behavior rule(s) for {trace.entity or 'unknown entity'}: {outcome}."
    fields_ = {"validation": validation, "validation_reasoning": why, "recommendation": recommendation}
    return WorkflowReport(WorkflowId.Generic, fields_, actionable, reasoning, summary,
                          frozenset(flags), evidence)


# -- impossible travel ------------------------------------------------------

@dataclass(frozen=True)
class Login:
    timestamp: int
    point: GeoPoint
    place: str
    short: str
    isp: str | None
    ip: str | None


@dataclass(frozen=True)
class TravelPair:
    first: Login
    second: Login
    miles: float
    hours: float

    @property
    def mph(self) -> float:
        if self.hours > 0:
            return self.miles / self.hours
        return float("inf") if self.miles > 0 else 0.0


def is_infeasible(miles: float, hours: float, policy: PolicyConfig | None = None) -> bool:
    policy = policy or PolicyConfig()
    mph = miles / hours if hours > 0 else (float("inf") if miles > 0 else 0.0)
    return miles > policy.travel_min_miles and mph > policy.travel_min_mph


def login_from_row(row: dict[str, Any]) -> Login | None:
    city = resolve_city(row.get("City"))
    lat, lon = row.get("latitude"), row.get("longitude")
    if lat is not None and lon is not None:
        point = GeoPoint(float(lat), float(lon))
    elif city is not None:
        point = city.point
    else:
        return None
    place = row.get("City") or f"{point.latitude:.2f},{point.longitude:.2f}"
    short = city.label if city else place
    return Login(int(row["timestamp"]), point, place, short, row.get("ISP"), row.get("ClientIP"))


def _clock(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%H:%M UTC")


def _span(hours: float) -> str:
    minutes = round(hours * 60)
    if minutes < 1:
        return "under a minute"
    if minutes < 60:
        return f"{minutes} minute" + ("s" if minutes != 1 else "")
    return f"{hours:.1f} hours"


def _approx_km(miles: float) -> str:
    return f"{int(round(miles * KM_PER_MILE / 500.0)) * 500:,}"


def travel_pairs(logins: list[Login], window_s: int) -> list[TravelPair]:
    ordered = sorted(logins, key=lambda x: x.timestamp)
    out = []
    for i, a in enumerate(ordered):
        for b in ordered[i + 1:]:
            dt = b.timestamp - a.timestamp
            if dt <= window_s:
                out.append(TravelPair(a, b, haversine_miles(a.point, b.point), dt / 3600.0))
    return out


def run_multiple_isp(trace: AlertTrace, tools: ToolSession, policy: PolicyConfig | None = None,
                     routing: RoutingTable | None = None) -> WorkflowReport:
    policy = policy or PolicyConfig()
    calls = _Calls(tools)
    res = calls(tools.run_structured_query, QueryKind.GetRecentLoginActivity, trace.account,
                trace.tenant, trace.entity, _as_of(trace))
    rows = [dict(r) for r in res.rows] if res is not None else []
    flags = set(calls.flags)
    window_s = tools.fabric.config.login_lookback_s
    window_h = window_s // 3600
    isps = sorted({r["ISP"] for r in rows if r.get("ISP")})
    evidence: dict[str, Any] = {"rows": rows, "isps": isps}

    logins = [lg for lg in (login_from_row(r) for r in rows) if lg is not None]
    if len(rows) < 2:
        impossible = False
        why = f"Insufficient login history: fewer than two logins in the {window_h}-hour window."
        reasoning = "Insufficient login history; impossible travel cannot be established."
        summary = "Multiple-ISP alert without corroborating login history; not actionable."
        flags.add(PREMISE_CONTRADICTED)
    elif len(logins) < 2:
        impossible = False
        why = "Login locations could not be resolved for distance evaluation."
        reasoning = "Login geolocation unavailable; impossible travel cannot be established."
        summary = "Login locations unresolved; not escalated."
        flags.add(UNKNOWN_EVIDENCE)
    else:
        pairs = travel_pairs(logins, window_s)
        bad = [p for p in pairs if is_infeasible(p.miles, p.hours, policy)]
        impossible = bool(bad)
        if bad:
            p = max(bad, key=lambda q: q.mph)
            why = (f"Logins at {_clock(p.first.timestamp)} ({p.first.place}) and "
                   f"{_clock(p.second.timestamp)} ({p.second.place}) are ~{_approx_km(p.miles)} km "
                   f"apart within {_span(p.hours)}, exceeding feasible travel limits.")
            reasoning = "Pattern reflects impossible travel within the evaluation window."
            summary = (f"User exhibited impossible travel ({p.first.short} to {p.second.short} "
                       f"within {_span(p.hours)}); escalate.")
        else:
            p = max(pairs, key=lambda q: (q.mph, q.miles))
            why = (f"Fastest login transition ({p.first.place} at {_clock(p.first.timestamp)} to "
                   f"{p.second.place} at {_clock(p.second.timestamp)}) covers {p.miles:.0f} miles over "
                   f"{_span(p.hours)}, within feasible travel limits.")
            if len(isps) > 1:
                why += f" ISPs observed: {', '.join(isps)}."
            reasoning = "Login pattern is consistent with feasible travel within the evaluation window."
            summary = "User logins are geographically feasible; not actionable."
        evidence["pair"] = {"miles": p.miles, "hours": p.hours}

    fields_ = {"impossible_travel": impossible, "impossible_travel_reasoning": why}
    return WorkflowReport(WorkflowId.MultipleISP, fields_, impossible, reasoning, summary,
                          frozenset(flags), evidence)


def run_o365_guest(trace: AlertTrace, tools: ToolSession, policy: PolicyConfig | None = None,
                   routing: RoutingTable | None = None) -> WorkflowReport:
    policy = policy or PolicyConfig()
    calls = _Calls(tools)
    rec = calls(tools.get_user_record, trace.entity, trace.account, trace.tenant)
    flags = set(calls.flags)
    groups = [v for r in trace.rules for v in _attr_ci(r, ("GroupName", "TargetGroup", "Group"))]
    context = f"Guest added to {groups[0]} group" if groups else "Guest user activity"
    role = admin_role(rec, policy)
    if rec is None:
        record, level = "Unknown", "Unknown"
        why = "No directory record found for the guest user."
        reasoning = "Guest privileges could not be verified; not escalated under policy."
        summary = f"{context}; guest record unavailable, not escalated."
        flags.add(UNKNOWN_EVIDENCE)
    elif role:
        record, level = "Found", "Admin"
        why = f"Guest user record shows admin role {role}; guest holds elevated privileges."
        reasoning = "Guest holds admin privileges; actionable under policy."
        summary = f"{context} with admin privileges; escalate."
    else:
        record, level = "Found", "User"
        why = "Guest user record shows no admin roles; roles indicate standard user access."
        reasoning = "Guest does not hold admin privileges under policy."
        summary = f"{context} with no admin privileges; not actionable."
    fields_ = {"guest_user_record": record, "guest_user_admin": level,
               "reasoning_guest_user_admin": why}
    return WorkflowReport(WorkflowId.O365Guest, fields_, level == "Admin", reasoning, summary,
                          frozenset(flags))


def _gated_rule(trace: AlertTrace, pred) -> TriggeredRule | None:
    return next((r for r in trace.rules if pred(r)), None)


def run_o365_login(trace: AlertTrace, tools: ToolSession, policy: PolicyConfig | None = None,
                   routing: RoutingTable | None = None) -> WorkflowReport:
    policy = policy or PolicyConfig()
    routing = routing or RoutingTable()
    calls = _Calls(tools)
    rule = _gated_rule(trace, lambda r: is_o365_login_rule(r, routing))
    risk = rule.risk_score if rule else 0
    res = calls(tools.run_structured_query, QueryKind.GetRecentHighRiskActivity, trace.account,
                trace.tenant, trace.entity, _as_of(trace))
    rows = list(res.rows) if res is not None else []
    count = len(rows)
    flags = set(calls.flags)
    if rule is None:
        flags.add(DATA_ERROR)
    elif risk == 0:
        flags.add(PREMISE_CONTRADICTED)
    thr = policy.risk_threshold
    actionable = risk > thr and count > 0
    if risk <= thr:
        reasoning = f"O365 login rule risk {risk} does not exceed {thr}; not actionable."
    elif count == 0:
        reasoning = f"O365 login rule risk {risk} exceeds {thr} but there is no recent high-risk activity; not actionable."
    else:
        reasoning = f"O365 login rule risk {risk} exceeds {thr} with {count} recent high-risk activities; actionable."
    if actionable:
        summary = f"Risky O365 login for {trace.entity} with recent high-risk activity; escalate."
    else:
        summary = f"O365 login for {trace.entity or 'unknown entity'} below escalation criteria; not actionable."
    fields_ = {"user_email": trace.entity,
               "recent_activity_riskScore_greater_than_2000_count": count,
               "high_risk_activity_raw_json_row": _rows_json(rows)}
    return WorkflowReport(WorkflowId.O365Login, fields_, actionable, reasoning, summary,
                          frozenset(flags), {"risk": risk, "rows": [dict(r) for r in rows]})


_DISINFECTED = re.compile(r"(?i)\bdisinfect(?:ed|ion\s+(?:completed|succeeded))?\b")
_NOT_DISINFECTED = re.compile(r"(?i)\b(?:not|failed|pending|unable)\b")


def is_disinfected(values: Iterable[str]) -> bool:
    return any(_DISINFECTED.search(v) and not _NOT_DISINFECTED.search(v) for v in values)


def run_powershell(trace: AlertTrace, tools: ToolSession, policy: PolicyConfig | None = None,
                   routing: RoutingTable | None = None) -> WorkflowReport:
    policy = policy or PolicyConfig()
    routing = routing or RoutingTable()
    calls = _Calls(tools)
    flags: set[str] = set()
    cmd_rules = [(r, v) for r, v in iter_attribute(trace.rules, AttributeKey.CmdLine)
                 if invokes_shell(v, routing)]
    cmd_rules = cmd_rules or list(iter_attribute(trace.rules, AttributeKey.CmdLine))
    if not cmd_rules:
        flags.add(DATA_ERROR)

    verdicts = [classify_powershell(cmd) for _, cmd in cmd_rules]
    malicious = any(v.malicious for v in verdicts)
    indicators = [i for i in Indicator if any(i in v.indicators for v in verdicts)]
    if verdicts:
        shown = next((v for v in verdicts if v.malicious), None) or \
            max(verdicts, key=lambda v: len(v.indicators))
        rationale = shown.rationale
    else:
        rationale = "No command line present in the alert."

    status_values = [v for r in trace.rules
                     for v in _attr_ci(r, ("Remediation", "status", "actionTaken"))]
    disinfected = is_disinfected(status_values)

    admin = False
    if malicious:
        preferred = [r for r, _ in cmd_rules] + list(trace.rules)
        user = _first_attr(preferred, AttributeKey.Username.value)
        if user:
            rec = calls(tools.get_user_record, user, trace.account, trace.tenant)
            if rec is None:
                flags.add(UNKNOWN_EVIDENCE)
            admin = admin_role(rec, policy) is not None
    flags |= calls.flags

    actionable = malicious and admin
    if actionable:
        reasoning = "Malicious PowerShell executed by an Admin meets escalation policy."
        tail = "disinfected but escalated" if disinfected else "escalated"
        extra = " with persistence" if Indicator.RunKeyPersistence in indicators else ""
        summary = f"Admin executed malicious PowerShell{extra}; {tail} for follow-up."
    elif malicious and UNKNOWN_EVIDENCE in flags:
        reasoning = "Malicious PowerShell executed by a user whose admin status could not be verified; not escalated under policy."
        summary = "Malicious PowerShell by an unverified user; not escalated pending user context."
    elif malicious:
        reasoning = "Malicious PowerShell executed by a non-admin user does not meet escalation policy."
        summary = "Malicious PowerShell by a non-admin user; not actionable under policy."
    else:
        reasoning = "PowerShell command is not malicious; not actionable."
        host = _first_attr(trace.rules, AttributeKey.Hostname.value) or trace.entity or "endpoint"
        summary = f"PowerShell execution on {host} shows no malicious behavior; not actionable."
    fields_ = {
        "powerShell_Malicious": malicious,
        "reasoning": rationale,
        "dis_Infect_Detection": "Disinfect" if disinfected else "Non-Disinfect",
        "reasoning_Dis_Infect": "Endpoint telemetry indicates disinfection completed." if disinfected
        else "Endpoint telemetry shows no completed disinfection.",
    }
    return WorkflowReport(WorkflowId.PowerShell, fields_, actionable, reasoning, summary,
                          frozenset(flags),
                          {"user_has_admin": admin, "indicators": [i.value for i in indicators]})


def run_salesforce(trace: AlertTrace, tools: ToolSession, policy: PolicyConfig | None = None,
                   routing: RoutingTable | None = None) -> WorkflowReport:
    policy = policy or PolicyConfig()
    calls = _Calls(tools)
    res = calls(tools.run_structured_query, QueryKind.GetRecentRuleActivity, trace.account,
                trace.tenant, trace.entity, _as_of(trace), rule=policy.salesforce_rule)
    count = res.row_count if res is not None else 0
    need = policy.salesforce_min_triggers
    actionable = count >= need
    if actionable:
        reasoning = f"{count} recent abnormal Salesforce login triggers meet the threshold of {need}; actionable."
        summary = f"Repeated abnormal Salesforce logins for {trace.entity}; escalate."
    else:
        reasoning = f"{count} recent abnormal Salesforce login triggers are below the threshold of {need}; not actionable."
        summary = f"Isolated abnormal Salesforce login for {trace.entity or 'unknown entity'}; not actionable."
    fields_ = {"user_email": trace.entity, "recent_rule_count": count}
    return WorkflowReport(WorkflowId.SalesforceAbnormalLogin, fields_, actionable, reasoning, summary,
                          frozenset(calls.flags), {"rows": [dict(r) for r in res.rows] if res else []})


def run_sharepoint(trace: AlertTrace, tools: ToolSession, policy: PolicyConfig | None = None,
                   routing: RoutingTable | None = None) -> WorkflowReport:
    policy = policy or PolicyConfig()
    routing = routing or RoutingTable()
    rule = _gated_rule(trace, lambda r: is_sharepoint_rule(r, routing))
    risk = rule.risk_score if rule else 0
    flags = set()
    if rule is None:
        flags.add(DATA_ERROR)
    elif risk == 0:
        flags.add(PREMISE_CONTRADICTED)
    thr = policy.risk_threshold
    actionable = risk > thr
    fname = (get_attribute(rule, AttributeKey.FileName) if rule else None) or "file"
    if actionable:
        reasoning = f"SharePoint file rule risk {risk} exceeds {thr}; actionable."
        summary = f"High-risk SharePoint access to {fname}; escalate."
    else:
        reasoning = f"SharePoint file rule risk {risk} does not exceed {thr}; not actionable."
        summary = f"SharePoint access to {fname} below risk threshold; not actionable."
    return WorkflowReport(WorkflowId.SharePointFile, {"sharepoint_risk_score": risk}, actionable,
                          reasoning, summary, frozenset(flags), {"risk": risk})


EXECUTORS: dict[WorkflowId, Callable[..., WorkflowReport]] = {
    WorkflowId.AddUser: run_add_user,
    WorkflowId.AuthChange: run_auth_change,
    WorkflowId.Coro: run_coro,
    WorkflowId.Generic: run_generic,
    WorkflowId.MultipleISP: run_multiple_isp,
    WorkflowId.O365Guest: run_o365_guest,
    WorkflowId.O365Login: run_o365_login,
    WorkflowId.PowerShell: run_powershell,
    WorkflowId.SalesforceAbnormalLogin: run_salesforce,
    WorkflowId.SharePointFile: run_sharepoint,
}

# upper bound on tool calls per workflow; AddUser is bounded by its target count
TOOL_BUDGET: dict[WorkflowId, int | None] = {
    WorkflowId.AddUser: None,
    WorkflowId.AuthChange: 1,
    WorkflowId.Coro: 0,
    WorkflowId.Generic: 1,
    WorkflowId.MultipleISP: 1,
    WorkflowId.O365Guest: 1,
    WorkflowId.O365Login: 1,
    WorkflowId.PowerShell: 1,
    WorkflowId.SalesforceAbnormalLogin: 1,
    WorkflowId.SharePointFile: 0,
}


def policy_decision(report: WorkflowReport, trace: AlertTrace,
                    policy: PolicyConfig | None = None) -> bool:
    """Recompute ``actionable`` from a report's fields plus the policy inputs it recorded."""
    policy = policy or PolicyConfig()
    f, ev = report.report_fields, report.evidence
    wf = report.workflow
    if wf is WorkflowId.AddUser:
        return f["target_user_admin"] == "Admin"
    if wf is WorkflowId.AuthChange:
        return bool(ev.get("removal")) or f["new_user"] in ("No", "Unknown")
    if wf is WorkflowId.Coro:
        return True
    if wf is WorkflowId.Generic:
        return f["recommendation"] == ESCALATE_TO_TIER_TWO
    if wf is WorkflowId.MultipleISP:
        return bool(f["impossible_travel"])
    if wf is WorkflowId.O365Guest:
        return f["guest_user_admin"] == "Admin"
    if wf is WorkflowId.O365Login:
        return ev.get("risk", 0) > policy.risk_threshold and \
            f["recent_activity_riskScore_greater_than_2000_count"] > 0
    if wf is WorkflowId.PowerShell:
        return bool(f["powerShell_Malicious"]) and bool(ev.get("user_has_admin"))
    if wf is WorkflowId.SalesforceAbnormalLogin:
        return f["recent_rule_count"] >= policy.salesforce_min_triggers
    if wf is WorkflowId.SharePointFile:
        return f["sharepoint_risk_score"] > policy.risk_threshold
    raise ValueError(wf)
