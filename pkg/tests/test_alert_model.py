from __future__ import annotations

import json

import pytest
from hypothesis import given, strategies as st

from soctriage.alert_model import (
    AttributeKey,
    GroundTruthLabel,
    MalformedDocument,
    SchemaViolation,
    Subclass,
    TimestampMismatch,
    UnknownKey,
    Verdict,
    Violation,
    force_parse,
    format_iso,
    get_attribute,
    parse_alert,
    parse_attribute_key,
    parse_iso,
    serialize_trace,
    trace_from_dict,
    validate_trace,
)

from conftest import T0, make_trace, rule
from oracles import epoch_of


def doc(**over):
    d = {"id": "a1", "entity": "u@corp.com", "account": "acct", "tenant": "corp",
         "timestamp": T0, "time_iso": format_iso(T0), "riskScore": 0, "properties": {}}
    d.update(over)
    return d


def test_o365_login_trace_keeps_geo_attributes():
    attrs = {"ClientIP": "81.2.69.142", "City": "London", "Country": "GB", "ISP": "BT UK",
             "OS": "Windows 11", "FirstSeenIP": "true"}
    text = json.dumps(doc(properties={"O365_Login_Anomaly": {
        "behaviorRule": "O365_Login_Anomaly", "description": "login", "attributes": attrs,
        "riskScore": 1200, "risks": ["geo"]}}))
    trace = parse_alert(text)
    assert len(trace.rules) == 1
    r = trace.rules[0]
    for k in ("ClientIP", "City", "Country", "ISP", "OS"):
        assert get_attribute(r, AttributeKey(k)) == attrs[k]
    assert r.risks == ("geo",)


def test_minimal_document_has_no_rules():
    trace = parse_alert(json.dumps(doc()))
    assert trace.rules == ()
    assert validate_trace(trace) == []


def test_time_iso_an_hour_ahead_is_rejected():
    iso = "2025-03-14T11:45:00Z"
    assert epoch_of(iso) - T0 == 3600
    with pytest.raises(TimestampMismatch):
        parse_alert(json.dumps(doc(time_iso=iso)))
    # deferred check reports it as a violation instead
    trace = parse_alert(json.dumps(doc(time_iso=iso)), check_timestamp=False)
    assert Violation("timestamp", "mismatch") in validate_trace(trace)


@pytest.mark.parametrize("text", ["", "{", "[1, 2]", "null"])
def test_malformed(text):
    with pytest.raises(MalformedDocument):
        parse_alert(text)


@pytest.mark.parametrize("field,value", [("id", 3), ("timestamp", "x"), ("riskScore", 1.5),
                                         ("properties", []), ("timestamp", True)])
def test_ill_typed_fields(field, value):
    with pytest.raises(SchemaViolation) as e:
        parse_alert(json.dumps(doc(**{field: value})))
    assert e.value.reason == "ill-typed"


def test_missing_field():
    d = doc()
    del d["tenant"]
    with pytest.raises(SchemaViolation) as e:
        trace_from_dict(d)
    assert (e.value.field, e.value.reason) == ("tenant", "missing")


def test_force_parse_collects_problems():
    d = doc(riskScore="high")
    del d["entity"]
    trace, problems = force_parse(json.dumps(d))
    fields = {(p.field, p.reason) for p in problems}
    assert ("entity", "missing") in fields
    assert ("risk_score", "ill-typed") in fields
    assert ("entity", "empty") in fields
    assert trace.risk_score == 0


def test_validate_negative_rule_risk():
    t = make_trace(rule("X", risk=-5), risk=0)
    assert validate_trace(t) == [Violation("risk_score", "negative")]


def test_validate_empty_entity():
    assert validate_trace(make_trace(rule("X"), entity="")) == [Violation("entity", "empty")]


def test_get_attribute_known_unknown_absent():
    r = rule("Multiple_ISPs", ISP="BT UK", CustomField="x")
    assert get_attribute(r, AttributeKey.ISP) == "BT UK"
    assert get_attribute(r, AttributeKey.City) is None
    key = parse_attribute_key("CustomField")
    assert isinstance(key, UnknownKey)
    assert get_attribute(r, key) == "x"


def test_label_invariant():
    with pytest.raises(ValueError):
        GroundTruthLabel(Verdict.Actionable, Subclass.BenignPositive)
    with pytest.raises(ValueError):
        GroundTruthLabel(Verdict.NonActionable)
    lab = GroundTruthLabel(Verdict.NonActionable, Subclass.Undetermined)
    assert GroundTruthLabel.from_dict(lab.to_dict()) == lab


@given(st.integers(min_value=0, max_value=4_000_000_000))
def test_iso_round_trip(epoch):
    iso = format_iso(epoch)
    assert parse_iso(iso) == epoch == epoch_of(iso)


names = st.text(st.characters(whitelist_categories=("L", "N"), whitelist_characters="_-"), min_size=1, max_size=12)
values = st.text(max_size=20)


@given(st.lists(st.tuples(names, st.dictionaries(names, values, max_size=5), st.integers(0, 10_000)),
                max_size=4, unique_by=lambda x: x[0]),
       st.integers(0, 100_000))
def test_serialize_parse_round_trip(rule_specs, risk):
    t = make_trace(*(rule(n, r, **a) for n, a, r in rule_specs), risk=risk)
    again = parse_alert(serialize_trace(t))
    assert again == t
    assert serialize_trace(again) == serialize_trace(t)
