from __future__ import annotations

import random
from dataclasses import dataclass

import pytest
from hypothesis import given, strategies as st

from soctriage.alert_model import GroundTruthLabel, Subclass, Verdict
from soctriage.eval import EmptyInput, IdMismatch, efficiency, format_tables, score
from soctriage.synthesizer import TriageReport

from oracles import brute_force_metrics

SUBS = list(Subclass)


def report(v: Verdict, s: Subclass | None, i: str = "") -> TriageReport:
    return TriageReport(v, s, (), "", "", alert_id=i)


def random_pair(rng: random.Random):
    def one():
        if rng.random() < 0.4:
            return Verdict.Actionable, None
        return Verdict.NonActionable, rng.choice(SUBS)
    return one(), one()


def compare(pairs):
    preds = [(f"a{i}", report(*p)) for i, (p, _) in enumerate(pairs)]
    labels = [(f"a{i}", GroundTruthLabel(*g)) for i, (_, g) in enumerate(pairs)]
    got = score(preds, labels)
    want = brute_force_metrics([(p[0].value, p[1] and p[1].value) for p, _ in pairs],
                               [(g[0].value, g[1] and g[1].value) for _, g in pairs])
    for name, attr in (("act", "actionable_f1"), ("non", "nonactionable_f1"), ("macro", "macro_f1"),
                       ("sub", "subclass_macro_f1"), ("fpr", "fpr"), ("recall", "recall_actionable")):
        assert abs(getattr(got, attr) - want[name]) <= 1e-12, name
    return got


def test_perfect():
    rng = random.Random(1)
    pairs = [(g, g) for _, g in (random_pair(rng) for _ in range(50))]
    got = compare(pairs)
    assert got.macro_f1 == 1.0 and got.fpr == 0.0


def test_all_nonactionable_predictor():
    rng = random.Random(2)
    gold = [random_pair(rng)[1] for _ in range(40)]
    pairs = [((Verdict.NonActionable, Subclass.BenignPositive), g) for g in gold]
    a = sum(g[0] is Verdict.Actionable for g in gold)
    got = compare(pairs)
    assert got.fpr == pytest.approx(a / len(gold))
    assert got.recall_actionable == 0


def test_random_200_against_oracle():
    rng = random.Random(200)
    compare([random_pair(rng) for _ in range(200)])


def test_id_mismatch():
    with pytest.raises(IdMismatch):
        score([("a", report(Verdict.Actionable, None))], [("b", GroundTruthLabel(Verdict.Actionable))])


def test_no_nonactionable_gold_gives_zero_subclass_f1():
    got = score([("a", report(Verdict.Actionable, None))], [("a", GroundTruthLabel(Verdict.Actionable))])
    assert got.subclass_macro_f1 == 0.0 and got.subclass_coverage == ()


@given(st.lists(st.tuples(st.booleans(), st.sampled_from(SUBS), st.booleans(), st.sampled_from(SUBS)),
                min_size=1, max_size=40), st.randoms())
def test_permutation_invariance_and_monotonicity(rows, rnd):
    pairs = [((Verdict.Actionable, None) if pa else (Verdict.NonActionable, ps),
              (Verdict.Actionable, None) if ga else (Verdict.NonActionable, gs)) for pa, ps, ga, gs in rows]
    base = compare(pairs)
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    assert compare(shuffled) == base
    wrong = [i for i, (p, g) in enumerate(pairs) if p[0] is not g[0]]
    if wrong:
        fixed = list(pairs)
        i = wrong[0]
        fixed[i] = (pairs[i][1], pairs[i][1])
        assert compare(fixed).macro_f1 >= base.macro_f1 - 1e-12


@dataclass
class _M:
    tool_calls: int
    wall_time: float


@dataclass
class _O:
    metrics: _M


def test_efficiency():
    mean, median = efficiency([_O(_M(0, 0.3)), _O(_M(1, 0.1)), _O(_M(3, 0.2))])
    assert mean == pytest.approx(4 / 3) and median == 0.2
    assert efficiency([_O(_M(2, 0.5))]) == (2, 0.5)
    assert efficiency([_O(_M(0, 0.1)), _O(_M(0, 0.4))])[1] == 0.1
    with pytest.raises(EmptyInput):
        efficiency([])


def test_table_columns():
    got = score([("a", report(Verdict.Actionable, None))], [("a", GroundTruthLabel(Verdict.Actionable))])
    text = format_tables(got)
    assert "| Act. F1 | Non-act. F1 | Subclass F1 | FPR (%)" in text
    assert "| Tokens | Tool Calls | Latency (s)" in text
    keys = list(got.to_dict())
    assert keys[:2] == ["Act. F1", "Non-act. F1"] and "FPR (%)" in keys and "Latency (s)" in keys
