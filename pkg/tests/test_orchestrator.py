from __future__ import annotations

import json
import random

from soctriage.alert_model import Verdict, parse_alert
from soctriage.corpus import LabeledCorpus, generate
from soctriage.orchestrator import Stage, TriageConfig, triage, triage_batch
from soctriage.router import WorkflowId
from soctriage.tool_fabric import StageRecord

from conftest import load_golden, make_trace, rule


def test_case2_end_to_end():
    text, fixtures, expected = load_golden("case2_auth_change")
    out = triage(parse_alert(text), fixtures)
    d = json.loads(out.rendered)
    assert {k: d[k] for k in expected} == expected
    assert out.report.verdict is Verdict.Actionable


def test_coro_makes_no_tool_calls():
    out = triage(make_trace(rule("Coro_Malware")))
    assert out.metrics.tool_calls == 0
    stages = [e.stage for e in out.audit.entries if isinstance(e, StageRecord)]
    assert stages == [s.value for s in Stage]


def test_deterministic():
    text, fixtures, _ = load_golden("case5_powershell")
    a = triage(parse_alert(text), fixtures)
    b = triage(parse_alert(text), fixtures)
    assert a.rendered == b.rendered


def test_write_back_is_last_tool_call():
    text, fixtures, _ = load_golden("case1_add_user")
    out = triage(parse_alert(text), fixtures, TriageConfig(write_back=True))
    recs = out.audit.tool_records
    assert recs[-1].tool == "updateIncidentRecord"
    assert recs[-1].arguments["status"] == "escalated"
    assert out.metrics.tool_calls == len(recs) == 2
    seq = [e.sequence_no for e in out.audit.entries]
    assert seq == list(range(1, len(seq) + 1))


def test_batch_order_and_parallelism():
    corpus = generate(WorkflowId.O365Login, 11, 100)
    seq = triage_batch(corpus, parallelism=1)
    par = triage_batch(corpus, parallelism=8)
    assert len(seq) == len(corpus)
    assert [o.rendered for o in seq] == [o.rendered for o in par]
    assert triage_batch(LabeledCorpus()) == []
    assert triage_batch([]) == []


def test_isolation_under_reordering():
    corpus = generate(WorkflowId.AddUser, 4, 40)
    base = {e.trace.id: o.rendered for e, o in zip(corpus, triage_batch(corpus))}
    pairs = corpus.pairs()
    random.Random(0).shuffle(pairs)
    for (t, _), o in zip(pairs, triage_batch(pairs, parallelism=4)):
        assert o.rendered == base[t.id]
