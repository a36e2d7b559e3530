"""Sweep a decision threshold and report how the actionable rate responds.

Generates one corpus per scenario, then re-triages it under a range of
``risk_threshold`` values (or travel speed limits) and prints the fraction
escalated. Useful for seeing how sensitive each workflow is to calibration.

    python3 scripts/threshold_sweep.py --knob risk_threshold --values 500 1000 1500 2000
    python3 scripts/threshold_sweep.py --knob travel_min_mph --values 300 600 900 --scenario MultipleISP
"""

from __future__ import annotations

import argparse
from dataclasses import replace

from soctriage import PolicyConfig, TriageConfig, WorkflowId, generate, triage_batch


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--knob", default="risk_threshold",
                    choices=["risk_threshold", "salesforce_min_triggers", "new_user_days",
                             "travel_min_miles", "travel_min_mph"])
    ap.add_argument("--values", type=float, nargs="+", default=[500, 1000, 1500, 2000])
    ap.add_argument("--scenario", action="append",
                    default=None, choices=[w.value for w in WorkflowId])
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--n", type=int, default=300)
    args = ap.parse_args()

    scenarios = [WorkflowId(s) for s in args.scenario] if args.scenario else \
        [WorkflowId.O365Login, WorkflowId.SharePointFile, WorkflowId.Generic]
    header = f"{'scenario':<24}" + "".join(f"{v:>10g}" for v in args.values)
    print(f"{args.knob}: fraction escalated")
    print(header)
    for sc in scenarios:
        corpus = generate(sc, args.seed, args.n)
        row = f"{sc.value:<24}"
        for v in args.values:
            cast = int(v) if args.knob in ("risk_threshold", "salesforce_min_triggers", "new_user_days") else v
            cfg = TriageConfig(policy=replace(PolicyConfig(), **{args.knob: cast}))
            outs = triage_batch(corpus, cfg)
            row += f"{sum(o.report.actionable for o in outs) / len(outs):>10.3f}"
        print(row)


if __name__ == "__main__":
    main()
