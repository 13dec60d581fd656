"""``microlab`` command line."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


from . import bicharacteristics as bc
from .function_spaces import NORMS, RegularityBudget, synthesize_regular
from .grid import Grid, load_field, save_field
from .littlewood_paley import build_partition
from .paradiff import decompose, mapping_norm_probe, quantize
from .symbols import CoefficientSymbol, principal_symbol
from .wavefront import ProbeLattice, wf_scan


def _dump(obj, path=None):
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_partition_check(args):
    shape = (args.n,) * args.dim
    P = build_partition(Grid(shape), args.sharpness)
    if args.csv:
        P.dump_csv(args.csv)
    report = P.check()
    _dump(report)
    return 0 if report["partition_error"] <= 1e-12 and report["support_leak"] == 0 else 1


def cmd_norm(args):
    f = load_field(args.file)
    print(repr(NORMS[args.space](f, args.order)))
    return 0


def cmd_synth(args):
    grid = Grid((args.n,) * args.dim)
    f = synthesize_regular(grid, RegularityBudget(args.r, args.scale, args.seed, args.kind))
    save_field(args.output, f)
    return 0


def _refine_symbol(p: CoefficientSymbol) -> CoefficientSymbol:
    return CoefficientSymbol(p.grid.refined(), {a: c.refined() for a, c in p.terms.items()},
                             p.complex_terms, p.principally_real)


def cmd_decompose(args):
    p = CoefficientSymbol.load(args.symbol)
    sharp, flat = decompose(p, args.delta)
    prefix = Path(args.output)
    for part in (sharp, flat):
        shells = []
        for k, coeffs in enumerate(part.shells):
            terms = []
            for alpha, c in coeffs.items():
                name = f"{prefix.name}.{part.kind}.k{k}.a{'_'.join(map(str, alpha))}.field"
                save_field(prefix.parent / name, c)
                terms.append({"alpha": list(alpha), "field": name})
            shells.append({"k": k, "terms": terms})
        _dump({"kind": part.kind, "delta": part.delta, "m": p.order, "J": part.partition.J,
               "shells": shells}, prefix.parent / f"{prefix.name}.{part.kind}.json")
    return 0


def cmd_quantize(args):
    p = CoefficientSymbol.load(args.symbol)
    save_field(args.output, quantize(p, load_field(args.field)))
    return 0


def cmd_probe_bound(args):
    p = CoefficientSymbol.load(args.symbol)
    m = p.order if args.m is None else args.m
    pairs = []
    current = p
    results = []
    for level in range(args.refinements + 1):
        target = current
        order = m
        if args.r is not None:
            target = decompose(current)[1]
            order = m - args.r
        res = mapping_norm_probe(target, order, args.s, args.trials, args.seed)
        results.append((current.grid.shape[0], res))
        if level < args.refinements:
            current = _refine_symbol(current)
    for (n0, r0), (n1, r1) in zip(results, results[1:]):
        pairs.append({"n_coarse": n0, "n_fine": n1, "max_coarse": r0.max_ratio,
                      "max_fine": r1.max_ratio, "ratio": r1.max_ratio / r0.max_ratio if r0.max_ratio else None})
    base = results[0][1]
    _dump({"max_ratio": base.max_ratio, "quantiles": base.quantiles(), "ratios": base.ratios,
           "refinement_pairs": pairs, "s": args.s, "m": m, "r": args.r}, args.output)
    return 0


def _parse_start(text: str, dim: int) -> bc.PhasePoint:
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 2 * dim:
        raise SystemExit(f"--start needs {2 * dim} comma separated numbers")
    return bc.PhasePoint(vals[:dim], vals[dim:])


def cmd_flow(args):
    p = CoefficientSymbol.load(args.symbol)
    ph = principal_symbol(p)
    tr = bc.integrate(ph, _parse_start(args.start, p.dim), args.t, args.tol)
    tr.to_csv(args.output)
    print(json.dumps({"status": tr.status, "samples": len(tr.times), "drift": tr.drift()}))
    return 0 if tr.status == "ok" else 2


def cmd_funnel(args):
    if args.family != "mechanical":
        raise SystemExit("only the mechanical family is available")
    sym = bc.mechanical_symbol(args.alpha)
    f = bc.funnel(sym, bc.PhasePoint([0.0], [0.0]), args.t, args.ensemble, args.jitter,
                  tuple(args.levels), seed=args.seed, jitter_in=("xi",))
    out = f.to_dict()
    out["alpha"] = args.alpha
    if 0 < args.alpha < 1:
        K = bc.power_solution_constant(args.alpha)
        out["power_solution"] = {"K": K, "exponent": 2 / (1 - args.alpha),
                                 "envelope_ratio_at_end": float(f.envelope[-1] / (K * f.times[-1] ** (2 / (1 - args.alpha))))}
    _dump(out, args.output)
    return 0


def cmd_wavefront(args):
    u = load_field(args.field)
    P = build_partition(u.grid)
    h = args.h if args.h is not None else max(8, u.grid.shape[0] // 32, 2 * args.stride)
    jmin = args.jmin if args.jmin is not None else P.J - 4
    jmax = args.jmax if args.jmax is not None else P.J - 1
    est = wf_scan(u, args.s, ProbeLattice(h, args.stride, jmin, jmax, args.margin), P)
    est.write_json(args.output)
    if args.svg:
        est.write_svg(args.svg)
    print(json.dumps({"singular": len(est.singular()), "probes": len(est.entries),
                      "indeterminate_rate": est.indeterminate_rate()}))
    return 0


def cmd_wave_experiment(args):
    from .lab import WaveScenario, emit_report, experiment_propagation

    cfg = json.loads(Path(args.config).read_text())
    report = experiment_propagation(WaveScenario.from_config(cfg), workers=args.workers)
    emit_report(report, args.output)
    print(json.dumps({"passed": report.passed, "mismatch_cells": report.mismatch_cells,
                      "confinement_violations": report.confinement_violations,
                      "diagnostics": report.diagnostics}))
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="microlab", description="Computational microlocal analysis lab")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("partition-check", help="verify the dyadic partition of unity")
    s.add_argument("--n", type=int, default=1024)
    s.add_argument("--dim", type=int, default=1, choices=(1, 2))
    s.add_argument("--sharpness", type=float, default=1.0)
    s.add_argument("--csv", help="write the radial profiles as CSV")
    s.set_defaults(func=cmd_partition_check)

    s = sub.add_parser("norm", help="print a function-space norm of a field file")
    s.add_argument("--space", required=True, choices=sorted(NORMS))
    s.add_argument("--order", type=float, default=0.0)
    s.add_argument("file")
    s.set_defaults(func=cmd_norm)

    s = sub.add_parser("synth", help="synthesize a field of prescribed regularity")
    s.add_argument("--kind", default="lacunary", choices=("lacunary", "piecewise_polynomial", "mollified_noise"))
    s.add_argument("--r", type=float, default=1.5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--scale", type=float, default=1.0)
    s.add_argument("--n", type=int, default=1024)
    s.add_argument("--dim", type=int, default=1, choices=(1, 2))
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("decompose", help="sharp/flat split of a coefficient symbol")
    s.add_argument("symbol")
    s.add_argument("--delta", type=float, default=1.0)
    s.add_argument("-o", "--output", required=True, help="output prefix")
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("quantize", help="apply p(x,D) to a field")
    s.add_argument("symbol")
    s.add_argument("field")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_quantize)

    s = sub.add_parser("probe-bound", help="empirical Sobolev mapping norm")
    s.add_argument("symbol")
    s.add_argument("--s", type=float, default=0.0)
    s.add_argument("--m", type=float, default=None, help="operator order (default: symbol order)")
    s.add_argument("--r", type=float, default=None, help="probe the flat part at order m-r")
    s.add_argument("--trials", type=int, default=50)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--refinements", type=int, default=1)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_probe_bound)

    s = sub.add_parser("flow", help="integrate the Hamilton flow of the principal symbol")
    s.add_argument("symbol")
    s.add_argument("--start", required=True, help="x...,xi... comma separated")
    s.add_argument("--t", type=float, default=1.0)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_flow)

    s = sub.add_parser("funnel", help="Peano funnel of the mechanical family")
    s.add_argument("--family", default="mechanical")
    s.add_argument("--alpha", type=float, default=0.5)
    s.add_argument("--jitter", type=float, default=1e-6)
    s.add_argument("--ensemble", type=int, default=64)
    s.add_argument("--t", type=float, default=1.0)
    s.add_argument("--levels", type=int, nargs="*", default=[2, 4, 8])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_funnel)

    s = sub.add_parser("wavefront", help="scan the wavefront set of a field")
    s.add_argument("field")
    s.add_argument("--s", type=float, default=1.0)
    s.add_argument("--stride", type=int, default=16)
    s.add_argument("--h", type=float, default=None, help="window width in cells (default max(n/32, 2*stride))")
    s.add_argument("--jmin", type=int, default=None)
    s.add_argument("--jmax", type=int, default=None)
    s.add_argument("--margin", type=float, default=0.1)
    s.add_argument("--svg")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_wavefront)

    s = sub.add_parser("wave-experiment", help="propagation-of-singularities experiment")
    s.add_argument("config")
    s.add_argument("-o", "--output", required=True, help="output directory")
    s.add_argument("--workers", type=int, default=1, help="threads for per-snapshot scans")
    s.set_defaults(func=cmd_wave_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return int(args.func(args) or 0)
    except (ValueError, FileNotFoundError) as exc:
        print(f"microlab {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
