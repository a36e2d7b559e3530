"""Map an alert trace to the investigation workflows that should run on it."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable

from .alert_model import AlertTrace, AttributeKey, TriggeredRule, get_attribute


class WorkflowId(str, Enum):
    AddUser = "AddUser"
    AuthChange = "AuthChange"
    Coro = "Coro"
    MultipleISP = "MultipleISP"
    O365Guest = "O365Guest"
    O365Login = "O365Login"
    PowerShell = "PowerShell"
    SalesforceAbnormalLogin = "SalesforceAbnormalLogin"
    SharePointFile = "SharePointFile"
    Generic = "Generic"


DEFAULT_PATTERNS: dict[WorkflowId, tuple[str, ...]] = {
    WorkflowId.AddUser: ("User_Added", "User_Updated", "Add_Member_To_Group"),
    WorkflowId.AuthChange: ("Add_Authentication_Method", "Remove_Authentication_Method"),
    WorkflowId.Coro: ("Coro_",),
    WorkflowId.MultipleISP: ("Multiple_ISPs",),
    WorkflowId.O365Guest: (r"^[^#@\s]+#ext#@[^@\s]+\.onmicrosoft\.com$",),
    WorkflowId.O365Login: ("O365_Login",),
    WorkflowId.PowerShell: (r"(?:^|[\s\\/\"'(])(?:powershell(?:_ise)?|pwsh|cmd|bash|zsh|sh|wscript|cscript)(?:\.exe)?(?=$|[\s\"')])",),
    WorkflowId.SalesforceAbnormalLogin: ("Fluency_Salesforce_Login_Status_Abnormal",),
    WorkflowId.SharePointFile: ("SharePoint_File",),
}


@dataclass(frozen=True)
class RoutingTable:
    """Match patterns per workflow.

    Rule-name patterns are case-insensitive substrings, except Coro (prefix) and
    Salesforce (exact name). O365Guest and PowerShell patterns are regexes over
    the entity and CmdLine values respectively.
    """

    patterns: dict[WorkflowId, tuple[str, ...]] = field(
        default_factory=lambda: dict(DEFAULT_PATTERNS))

    def of(self, wf: WorkflowId) -> tuple[str, ...]:
        return self.patterns.get(wf, DEFAULT_PATTERNS.get(wf, ()))

    @classmethod
    def from_file(cls, path: str | Path) -> "RoutingTable":
        """Load ``{"<WorkflowId>": ["pattern", ...]}``; unlisted workflows keep defaults."""
        raw = json.loads(Path(path).read_text())
        merged = dict(DEFAULT_PATTERNS)
        for name, pats in raw.items():
            merged[WorkflowId(name)] = tuple(pats)
        return cls(merged)

    def to_dict(self) -> dict[str, list[str]]:
        return {wf.value: list(p) for wf, p in self.patterns.items()}


def _name_contains(rule: TriggeredRule, patterns: Iterable[str]) -> bool:
    name = rule.behavior_rule.lower()
    return any(p.lower() in name for p in patterns)


def is_o365_login_rule(rule: TriggeredRule, table: RoutingTable) -> bool:
    return _name_contains(rule, table.of(WorkflowId.O365Login))


def is_sharepoint_rule(rule: TriggeredRule, table: RoutingTable) -> bool:
    return _name_contains(rule, table.of(WorkflowId.SharePointFile))


def invokes_shell(cmdline: str, table: RoutingTable) -> bool:
    return any(re.search(p, cmdline, re.IGNORECASE) for p in table.of(WorkflowId.PowerShell))


def is_guest_entity(entity: str, table: RoutingTable) -> bool:
    return any(re.match(p, entity, re.IGNORECASE) for p in table.of(WorkflowId.O365Guest))


def _matchers(table: RoutingTable):
    def add_user(t: AlertTrace) -> bool:
        return any(_name_contains(r, table.of(WorkflowId.AddUser)) for r in t.rules)

    def auth_change(t: AlertTrace) -> bool:
        return any(_name_contains(r, table.of(WorkflowId.AuthChange)) for r in t.rules)

    def coro(t: AlertTrace) -> bool:
        prefixes = [p.lower() for p in table.of(WorkflowId.Coro)]
        return any(r.behavior_rule.lower().startswith(tuple(prefixes)) for r in t.rules)

    def multiple_isp(t: AlertTrace) -> bool:
        if any(_name_contains(r, table.of(WorkflowId.MultipleISP)) for r in t.rules):
            return True
        isps = {get_attribute(r, AttributeKey.ISP) for r in t.rules if is_o365_login_rule(r, table)}
        isps.discard(None)
        return len(isps) >= 2

    def guest(t: AlertTrace) -> bool:
        return is_guest_entity(t.entity, table)

    def o365_login(t: AlertTrace) -> bool:
        return any(is_o365_login_rule(r, table) for r in t.rules)

    def powershell(t: AlertTrace) -> bool:
        return any(invokes_shell(v, table) for r in t.rules
                   if (v := get_attribute(r, AttributeKey.CmdLine)) is not None)

    def salesforce(t: AlertTrace) -> bool:
        names = {p.lower() for p in table.of(WorkflowId.SalesforceAbnormalLogin)}
        return any(r.behavior_rule.lower() in names for r in t.rules)

    def sharepoint(t: AlertTrace) -> bool:
        return any(is_sharepoint_rule(r, table) for r in t.rules)

    return [
        (WorkflowId.AddUser, add_user),
        (WorkflowId.AuthChange, auth_change),
        (WorkflowId.Coro, coro),
        (WorkflowId.MultipleISP, multiple_isp),
        (WorkflowId.O365Guest, guest),
        (WorkflowId.O365Login, o365_login),
        (WorkflowId.PowerShell, powershell),
        (WorkflowId.SalesforceAbnormalLogin, salesforce),
        (WorkflowId.SharePointFile, sharepoint),
    ]


def route(trace: AlertTrace, table: RoutingTable | None = None) -> tuple[WorkflowId, ...]:
    """Workflows to run, in canonical order. Never empty: Generic is the fallback."""
    table = table or RoutingTable()
    hits = tuple(wf for wf, pred in _matchers(table) if pred(trace))
    return hits or (WorkflowId.Generic,)
