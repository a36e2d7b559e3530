"""Command-line entry point: ``soctriage {triage,batch,validate,gen,score}``.

Exit codes: 0 success, 2 schema/data errors, 3 I/O errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .alert_model import GroundTruthLabel, TraceError, parse_alert, validate_trace
from .corpus import IoFailure, generate, load_corpus
from .eval import format_tables, score
from .orchestrator import TriageConfig, triage, triage_batch
from .router import RoutingTable, WorkflowId
from .synthesizer import parse_report, render_report
from .tool_fabric import FixtureBundle
from .workflows import PolicyConfig

EXIT_OK, EXIT_SCHEMA, EXIT_IO = 0, 2, 3


class _SchemaError(Exception):
    pass


def _read(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"{path}: {e.strerror or e}") from e


def _config(args, write_back: bool = False) -> TriageConfig:
    try:
        policy = PolicyConfig.from_file(args.policy) if args.policy else PolicyConfig()
        routing = RoutingTable.from_file(args.routing) if args.routing else RoutingTable()
    except OSError as e:
        raise IoFailure(str(e)) from e
    except (ValueError, TypeError) as e:
        raise _SchemaError(f"bad config: {e}") from e
    return TriageConfig(routing=routing, policy=policy, write_back=write_back)


def cmd_triage(args) -> int:
    trace = parse_alert(_read(args.trace), check_timestamp=False)
    fixtures = FixtureBundle()
    if args.fixtures:
        try:
            fixtures = FixtureBundle.from_dict(json.loads(_read(args.fixtures)))
        except (ValueError, KeyError, TypeError) as e:
            raise _SchemaError(f"{args.fixtures}: {e}") from e
    outcome = triage(trace, fixtures, _config(args, args.write_back))
    text = outcome.rendered
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.audit:
        Path(args.audit).write_text(outcome.audit.to_jsonl(), encoding="utf-8")
    return EXIT_OK


def cmd_batch(args) -> int:
    corpus = load_corpus(args.corpus)
    outcomes = triage_batch(corpus, _config(args), args.parallelism)
    out = Path(args.out) if args.out else None
    if out:
        (out / "reports").mkdir(parents=True, exist_ok=True)
    audit_lines, metrics_lines = [], []
    for entry, o in zip(corpus, outcomes):
        rid = entry.trace.id
        if out:
            (out / "reports" / f"{rid}.json").write_text(o.rendered, encoding="utf-8")
            audit_lines.append(o.audit.to_jsonl())
            metrics_lines.append(json.dumps({
                "id": rid, "tool_calls": o.metrics.tool_calls, "wall_time": o.metrics.wall_time,
                "workflows": [w.value for w in o.metrics.workflows_run]}))
        else:
            sub = o.report.subclass.value if o.report.subclass else "-"
            print(f"{rid}\t{o.report.verdict.value}\t{sub}")
    if out:
        (out / "audit.jsonl").write_text("".join(audit_lines), encoding="utf-8")
        (out / "metrics.jsonl").write_text("\n".join(metrics_lines) + ("\n" if metrics_lines else ""),
                                           encoding="utf-8")
        print(f"wrote {len(outcomes)} reports to {out / 'reports'}")
    return EXIT_OK


def cmd_validate(args) -> int:
    corpus = load_corpus(args.corpus)
    bad = 0
    for entry in corpus:
        for v in validate_trace(entry.trace):
            print(f"{entry.trace.id}\t{v.field}\t{v.reason}")
        bad += bool(validate_trace(entry.trace))
    print(f"{len(corpus)} traces loaded, {bad} with violations")
    return EXIT_SCHEMA if (args.strict and bad) else EXIT_OK


def cmd_gen(args) -> int:
    corpus = generate(WorkflowId(args.scenario), args.seed, args.n, args.actionable_rate)
    corpus.write(args.out)
    print(f"wrote {len(corpus)} entries to {args.out}")
    return EXIT_OK


def _load_predictions(pred_dir: Path):
    reports_dir = pred_dir / "reports" if (pred_dir / "reports").is_dir() else pred_dir
    if not reports_dir.is_dir():
        raise IoFailure(f"{pred_dir}: not a directory")
    preds = []
    for f in sorted(reports_dir.glob("*.json")):
        if f.name == "summary.json":
            continue
        try:
            report = parse_report(_read(f))
        except (ValueError, KeyError, TypeError) as e:
            raise _SchemaError(f"{f}: {e}") from e
        preds.append((report.alert_id or f.stem, report))
    return preds


class _Timing:
    def __init__(self, tool_calls: int, wall_time: float):
        self.metrics = self
        self.tool_calls = tool_calls
        self.wall_time = wall_time


def cmd_score(args) -> int:
    pred_dir = Path(args.pred)
    preds = _load_predictions(pred_dir)
    labels = []
    for no, line in enumerate(_read(args.labels).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            labels.append((obj["id"], GroundTruthLabel.from_dict(obj)))
        except (ValueError, KeyError, TypeError) as e:
            raise _SchemaError(f"{args.labels}:{no}: {e}") from e
    timings = []
    if (pred_dir / "metrics.jsonl").exists():
        for line in _read(pred_dir / "metrics.jsonl").splitlines():
            if line.strip():
                m = json.loads(line)
                timings.append(_Timing(m["tool_calls"], m["wall_time"]))
    summary = score(preds, labels, timings or None)
    sys.stdout.write(format_tables(summary, args.model))
    out = Path(args.summary) if args.summary else pred_dir / "summary.json"
    out.write_text(json.dumps(summary.to_dict(), indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="soctriage", description="Deterministic SOC alert triage")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--policy", help="JSON file overriding decision thresholds")
    common.add_argument("--routing", help="JSON file overriding routing patterns")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("triage", parents=[common], help="triage one alert trace")
    t.add_argument("trace")
    t.add_argument("--fixtures", help="fixture bundle JSON")
    t.add_argument("--write-back", action=argparse.BooleanOptionalAction, default=True)
    t.add_argument("--out", help="write the report here instead of stdout")
    t.add_argument("--audit", help="write the audit trail (JSONL) here")
    t.set_defaults(fn=cmd_triage)

    b = sub.add_parser("batch", parents=[common], help="triage every trace in a corpus")
    b.add_argument("corpus")
    b.add_argument("--parallelism", type=int, default=1)
    b.add_argument("--out")
    b.set_defaults(fn=cmd_batch)

    v = sub.add_parser("validate", help="load a corpus and list per-trace violations")
    v.add_argument("corpus")
    v.add_argument("--strict", action="store_true", help="exit 2 if any trace has violations")
    v.set_defaults(fn=cmd_validate)

    g = sub.add_parser("gen", help="generate a labeled synthetic corpus")
    g.add_argument("--scenario", required=True, choices=[w.value for w in WorkflowId])
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--actionable-rate", type=float, default=0.2)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_gen)

    s = sub.add_parser("score", help="score batch reports against labels")
    s.add_argument("--pred", required=True, help="batch --out directory")
    s.add_argument("--labels", required=True, help="labels.jsonl")
    s.add_argument("--summary", help="summary JSON path (default <pred>/summary.json)")
    s.add_argument("--model", default="soctriage")
    s.set_defaults(fn=cmd_score)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (IoFailure, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (TraceError, _SchemaError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    raise SystemExit(main())
