"""Mismatch and farthest singular probe of the propagation experiment across probe windows."""

import argparse

from microlab.lab import ProbeSpec, WaveScenario, experiment_propagation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=4096)
    ap.add_argument("--windows", type=float, nargs="+", default=[16, 24, 32, 48, 64])
    ap.add_argument("--stride", type=int, default=2)
    args = ap.parse_args()
    print("h     mismatch  farthest  violations  passed")
    for h in args.windows:
        sc = WaveScenario(n=args.n, probe=ProbeSpec(h=h, stride=args.stride))
        rep = experiment_propagation(sc)
        farthest = max(s["farthest_singular_cells"] for s in rep.snapshots)
        print(f"{h:<5g} {rep.mismatch_cells:<9.2f} {farthest:<9.1f} {rep.confinement_violations:<11d} {rep.passed}")


if __name__ == "__main__":
    main()
