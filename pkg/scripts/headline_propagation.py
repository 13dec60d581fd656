"""Run the rough-coefficient propagation experiment at N and 2N and write both reports."""

import argparse
import json
from pathlib import Path

from microlab.lab import WaveScenario, emit_report, experiment_propagation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=4096)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("-o", "--output", default="propagation_out")
    args = ap.parse_args()
    base = WaveScenario.from_config({"grid": {"n": args.n}, "coeff": {"seed": args.seed}})
    for sc in (base, base.refined()):
        rep = experiment_propagation(sc, workers=args.workers)
        emit_report(rep, Path(args.output) / f"n{sc.n}")
        print(json.dumps({"n": sc.n, "passed": rep.passed, "mismatch_cells": round(rep.mismatch_cells, 3),
                          "violations": rep.confinement_violations, "energy_drift": rep.energy_drift,
                          "runtime_s": round(rep.runtime_s, 1)}))


if __name__ == "__main__":
    main()
