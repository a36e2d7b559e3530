"""Decision-quality and efficiency metrics for triage runs."""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from .alert_model import GroundTruthLabel, Subclass, Verdict
from .synthesizer import TriageReport


class IdMismatch(ValueError):
    pass


class EmptyInput(ValueError):
    pass


@dataclass
class ClassCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def f1(self) -> float:
        p = self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0
        r = self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0
        return 2 * p * r / (p + r) if p + r else 0.0


@dataclass
class ConfusionCounts:
    binary: dict[Verdict, ClassCounts] = field(
        default_factory=lambda: {v: ClassCounts() for v in Verdict})
    subclass: dict[Subclass, ClassCounts] = field(
        default_factory=lambda: {s: ClassCounts() for s in Subclass})
    total: int = 0
    subclass_total: int = 0


@dataclass(frozen=True)
class MetricsSummary:
    actionable_f1: float
    nonactionable_f1: float
    macro_f1: float
    subclass_macro_f1: float
    fpr: float
    recall_actionable: float
    subclass_coverage: tuple[Subclass, ...] = ()
    mean_tool_calls: float | None = None
    median_wall_time: float | None = None
    n: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "Act. F1": self.actionable_f1,
            "Non-act. F1": self.nonactionable_f1,
            "Macro F1": self.macro_f1,
            "Subclass F1": self.subclass_macro_f1,
            "FPR (%)": 100.0 * self.fpr,
            "Recall (Act.)": self.recall_actionable,
            "Subclass coverage": [s.value for s in self.subclass_coverage],
            "Tokens": None,
            "Tool Calls": self.mean_tool_calls,
            "Latency (s)": self.median_wall_time,
            "n": self.n,
        }


def _pair_up(predictions, labels) -> list[tuple[TriageReport, GroundTruthLabel]]:
    pred = dict(predictions)
    gold = dict(labels)
    if len(pred) != len(predictions) or len(gold) != len(labels):
        raise IdMismatch("duplicate ids")
    if pred.keys() != gold.keys():
        missing = sorted(gold.keys() - pred.keys())[:5]
        extra = sorted(pred.keys() - gold.keys())[:5]
        raise IdMismatch(f"id sets differ (missing predictions {missing}, unlabeled {extra})")
    return [(pred[k], gold[k]) for k in sorted(gold)]


def confusion(pairs: Iterable[tuple[TriageReport, GroundTruthLabel]]) -> ConfusionCounts:
    c = ConfusionCounts()
    for report, label in pairs:
        c.total += 1
        for v, counts in c.binary.items():
            if report.verdict is v and label.verdict is v:
                counts.tp += 1
            elif report.verdict is v:
                counts.fp += 1
            elif label.verdict is v:
                counts.fn += 1
        if label.verdict is not Verdict.NonActionable:
            continue
        c.subclass_total += 1
        for s, counts in c.subclass.items():
            if report.subclass is s and label.subclass is s:
                counts.tp += 1
            elif report.subclass is s:
                counts.fp += 1
            elif label.subclass is s:
                counts.fn += 1
    return c


def score(predictions: Sequence[tuple[str, TriageReport]],
          labels: Sequence[tuple[str, GroundTruthLabel]],
          outcomes: Sequence[Any] | None = None) -> MetricsSummary:
    """Decision-quality metrics for one set of predictions.

    Subclass F1 only looks at items labeled non-actionable and averages over the
    subclasses present among them. FPR's denominator is the number of
    non-actionable predictions. Empty denominators give 0.
    """
    pairs = _pair_up(list(predictions), list(labels))
    c = confusion(pairs)
    act = c.binary[Verdict.Actionable]
    non = c.binary[Verdict.NonActionable]
    present = tuple(s for s in Subclass if c.subclass[s].tp + c.subclass[s].fn > 0)
    sub_f1 = sum(c.subclass[s].f1() for s in present) / len(present) if present else 0.0
    predicted_non = non.tp + non.fp
    # non.fp: predicted non-actionable, labeled actionable
    fpr = non.fp / predicted_non if predicted_non else 0.0
    labeled_act = act.tp + act.fn
    recall = act.tp / labeled_act if labeled_act else 0.0
    mean_calls = median_wall = None
    if outcomes:
        mean_calls, median_wall = efficiency(outcomes)
    return MetricsSummary(
        actionable_f1=act.f1(),
        nonactionable_f1=non.f1(),
        macro_f1=(act.f1() + non.f1()) / 2,
        subclass_macro_f1=sub_f1,
        fpr=fpr,
        recall_actionable=recall,
        subclass_coverage=present,
        mean_tool_calls=mean_calls,
        median_wall_time=median_wall,
        n=c.total,
    )


def efficiency(outcomes: Sequence[Any]) -> tuple[float, float]:
    """Mean tool calls and lower-median wall time (seconds)."""
    if not outcomes:
        raise EmptyInput("no outcomes")
    calls = [o.metrics.tool_calls for o in outcomes]
    walls = [o.metrics.wall_time for o in outcomes]
    return statistics.fmean(calls), statistics.median_low(walls)


def _fmt(v: float | None, digits: int = 2) -> str:
    return "n/a" if v is None else f"{v:.{digits}f}"


def format_tables(summary: MetricsSummary, model: str = "soctriage") -> str:
    """Decision and efficiency tables with the usual column headings."""
    w = max(len(model), len("Model"))
    lines = [
        f"{'Model':<{w}} | Act. F1 | Non-act. F1 | Subclass F1 | FPR (%)",
        f"{'-' * w}-+---------+-------------+-------------+--------",
        f"{model:<{w}} | {_fmt(summary.actionable_f1):>7} | {_fmt(summary.nonactionable_f1):>11} | "
        f"{_fmt(summary.subclass_macro_f1):>11} | {_fmt(100 * summary.fpr, 1):>7}",
        "",
        f"{'Model':<{w}} | Tokens | Tool Calls | Latency (s)",
        f"{'-' * w}-+--------+------------+------------",
        f"{model:<{w}} | {'n/a':>6} | {_fmt(summary.mean_tool_calls, 1):>10} | "
        f"{_fmt(summary.median_wall_time, 4):>11}",
        "",
        f"macro F1 {_fmt(summary.macro_f1, 4)}  recall (actionable) {_fmt(summary.recall_actionable, 4)}"
        f"  n={summary.n}  subclass coverage: {', '.join(s.value for s in summary.subclass_coverage) or 'none'}",
    ]
    return "\n".join(lines) + "\n"
