from __future__ import annotations

import json

from soctriage.cli import main

from conftest import GOLDEN


def test_triage_golden(tmp_path, capsys):
    d = GOLDEN / "case4_o365_guest"
    audit = tmp_path / "audit.jsonl"
    rc = main(["triage", str(d / "trace.json"), "--fixtures", str(d / "fixtures.json"),
               "--audit", str(audit)])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    expected = json.loads((d / "expected.json").read_text())
    assert {k: out[k] for k in expected} == expected
    tools = [json.loads(line)["tool"] for line in audit.read_text().splitlines()]
    # write-back is on by default for single-alert runs
    assert tools.count("updateIncidentRecord") == 1


def test_exit_codes(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"id": 1}')
    assert main(["triage", str(bad)]) == 2
    assert main(["triage", str(tmp_path / "missing.json")]) == 3
    assert main(["validate", str(tmp_path / "nowhere")]) == 3
    pol = tmp_path / "policy.json"
    pol.write_text('{"nope": 1}')
    assert main(["triage", str(GOLDEN / "case1_add_user" / "trace.json"), "--policy", str(pol)]) == 2


def test_gen_batch_score(tmp_path, capsys):
    corpus, out = tmp_path / "c", tmp_path / "out"
    assert main(["gen", "--scenario", "SharePointFile", "--seed", "1", "--n", "40", "--out", str(corpus)]) == 0
    assert main(["validate", str(corpus)]) == 0
    assert main(["validate", str(corpus), "--strict"]) == 2
    assert main(["batch", str(corpus), "--parallelism", "4", "--out", str(out)]) == 0
    assert len(list((out / "reports").glob("*.json"))) == 40
    capsys.readouterr()
    assert main(["score", "--pred", str(out), "--labels", str(corpus / "labels.jsonl")]) == 0
    printed = capsys.readouterr().out
    assert "Act. F1" in printed and "Tool Calls" in printed
    summary = json.loads((out / "summary.json").read_text())
    assert summary["Act. F1"] == 1.0 and summary["FPR (%)"] == 0.0 and summary["Tokens"] is None
    assert summary["Tool Calls"] == 0.0


def test_routing_override(tmp_path, capsys):
    routing = tmp_path / "routing.json"
    routing.write_text(json.dumps({"AddUser": ["Never_Matches"]}))
    d = GOLDEN / "case1_add_user"
    assert main(["triage", str(d / "trace.json"), "--no-write-back", "--routing", str(routing)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["workflows"][0]["workflow"] == "Generic"
