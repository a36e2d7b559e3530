from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from soctriage.alert_model import Subclass, Verdict, Violation, parse_alert
from soctriage.orchestrator import triage
from soctriage.router import WorkflowId
from soctriage.synthesizer import (
    EmptyReports,
    Observable,
    ObservableKind,
    classify_nonactionable,
    extract_observables,
    parse_report,
    render_report,
    synthesize,
)
from soctriage.workflows import (
    DATA_ERROR,
    INSUFFICIENT_EVIDENCE,
    PREMISE_CONTRADICTED,
    UNKNOWN_EVIDENCE,
    WorkflowReport,
)

from conftest import load_golden, make_trace, rule


def wr(actionable=False, flags=(), fields=None, wf=WorkflowId.SharePointFile):
    return WorkflowReport(wf, fields or {"sharepoint_risk_score": 5}, actionable, "r.", "s.", frozenset(flags))


def test_escalate_on_any_examples():
    t = make_trace(rule("X"))
    assert synthesize(t, [wr(False), wr(True)]).verdict is Verdict.Actionable
    r = synthesize(t, [wr(False)])
    assert (r.verdict, r.subclass) == (Verdict.NonActionable, Subclass.BenignPositive)
    with pytest.raises(EmptyReports):
        synthesize(t, [])


def test_subclass_priority():
    unknown = wr(fields={"user_record": "Unknown"}, wf=WorkflowId.AuthChange)
    assert classify_nonactionable([unknown]) is Subclass.Undetermined
    assert classify_nonactionable([wr()], [Violation("timestamp", "mismatch")]) is Subclass.FalsePositiveData
    assert classify_nonactionable([wr()]) is Subclass.BenignPositive
    assert classify_nonactionable([wr(flags={PREMISE_CONTRADICTED})]) is Subclass.FalsePositiveLogic
    assert classify_nonactionable([wr(flags={INSUFFICIENT_EVIDENCE, PREMISE_CONTRADICTED})]) is Subclass.Undetermined
    assert classify_nonactionable([wr(flags={UNKNOWN_EVIDENCE}), wr(flags={DATA_ERROR})]) is Subclass.FalsePositiveData


FLAGS = [DATA_ERROR, UNKNOWN_EVIDENCE, INSUFFICIENT_EVIDENCE, PREMISE_CONTRADICTED]


@given(st.lists(st.sets(st.sampled_from(FLAGS)), min_size=1, max_size=4), st.booleans())
def test_subclass_priority_table(flag_sets, violated):
    reports = [wr(flags=f) for f in flag_sets]
    union = set().union(*flag_sets)
    if violated or DATA_ERROR in union:
        want = Subclass.FalsePositiveData
    elif UNKNOWN_EVIDENCE in union or INSUFFICIENT_EVIDENCE in union:
        want = Subclass.Undetermined
    elif PREMISE_CONTRADICTED in union:
        want = Subclass.FalsePositiveLogic
    else:
        want = Subclass.BenignPositive
    vs = [Violation("entity", "empty")] if violated else []
    assert classify_nonactionable(reports, vs) is want


def test_observables_case3():
    text, fixtures, _ = load_golden("case3_multiple_isp")
    out = triage(parse_alert(text), fixtures)
    obs = [(o.kind, o.value) for o in out.report.observables]
    assert obs == [(ObservableKind.User, "alex.chen@corp.com"),
                   (ObservableKind.IP, "81.2.69.142"), (ObservableKind.IP, "72.229.28.185")]


def test_observables_minimal_and_dedupe():
    t = make_trace(rule("X"), entity="ws-01")
    assert extract_observables(t, []) == [Observable(ObservableKind.Host, "ws-01", "entity")]
    t = make_trace(rule("A", ClientIP="192.0.2.1"), rule("B", ClientIP="192.0.2.1"))
    ips = [o for o in extract_observables(t, []) if o.kind is ObservableKind.IP]
    assert len(ips) == 1


def test_render_case1_and_round_trip():
    text, fixtures, expected = load_golden("case1_add_user")
    report = triage(parse_alert(text), fixtures).report
    doc = render_report(report)
    assert doc == render_report(report)
    again = parse_report(doc)
    assert again == report
    assert render_report(again) == doc
    import json
    d = json.loads(doc)
    assert {k: d[k] for k in expected} == expected


def test_multi_workflow_report_block():
    t = make_trace(rule("SharePoint_File_Download", risk=10), rule("Coro_X"))
    r = triage(t)
    d = __import__("json").loads(r.rendered)
    assert set(d["report"]) == {"Coro", "SharePointFile"}
    assert d["actionable"] is True and d["summary"].startswith("Coro")
    assert parse_report(r.rendered) == r.report
