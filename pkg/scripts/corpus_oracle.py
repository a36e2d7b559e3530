"""Run the pipeline over generated corpora and compare against construction-time labels.

    python3 scripts/corpus_oracle.py --seeds 1 2 3 4 5 --n 200
    python3 scripts/corpus_oracle.py --scenario MultipleISP --parallelism 8 --tables
"""

from __future__ import annotations

import argparse
import time

from soctriage import WorkflowId, generate, score, triage_batch
from soctriage.eval import format_tables


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", choices=[w.value for w in WorkflowId], action="append")
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--actionable-rate", type=float, default=0.2)
    ap.add_argument("--parallelism", type=int, default=1)
    ap.add_argument("--tables", action="store_true", help="print eval tables over all corpora")
    args = ap.parse_args()

    scenarios = [WorkflowId(s) for s in args.scenario] if args.scenario else list(WorkflowId)
    preds, labels, outcomes = [], [], []
    start = time.perf_counter()
    print(f"{'scenario':<24} {'n':>5} {'binary':>8} {'subclass':>9} {'calls':>6}")
    for sc in scenarios:
        n = ok = sub_n = sub_ok = calls = 0
        for seed in args.seeds:
            corpus = generate(sc, seed, args.n, args.actionable_rate)
            outs = triage_batch(corpus, parallelism=args.parallelism)
            for e, o in zip(corpus, outs):
                n += 1
                ok += o.report.verdict is e.label.verdict
                calls += o.metrics.tool_calls
                if e.label.subclass is not None:
                    sub_n += 1
                    sub_ok += o.report.subclass is e.label.subclass
                preds.append((e.trace.id, o.report))
                labels.append((e.trace.id, e.label))
            outcomes.extend(outs)
        sub = f"{sub_ok / sub_n:>9.4f}" if sub_n else f"{'n/a':>9}"
        print(f"{sc.value:<24} {n:>5} {ok / n:>8.4f} {sub} {calls / n:>6.2f}")
    print(f"elapsed {time.perf_counter() - start:.2f}s")
    if args.tables:
        print()
        print(format_tables(score(preds, labels, outcomes)), end="")


if __name__ == "__main__":
    main()
