"""Ensemble widths of the mechanical family for several exponents, next to the power solution."""

import argparse

import numpy as np

from microlab.bicharacteristics import PhasePoint, funnel, mechanical_symbol, power_solution_constant


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.25, 0.5, 0.75, 1.0])
    ap.add_argument("--jitter", type=float, default=1e-6)
    ap.add_argument("--ensemble", type=int, default=64)
    args = ap.parse_args()
    print("alpha  width(1)     envelope(1)  K            envelope/K")
    for alpha in args.alphas:
        f = funnel(mechanical_symbol(alpha), PhasePoint([0.0], [0.0]), 1.0, args.ensemble, args.jitter,
                   jitter_in=("xi",))
        K = power_solution_constant(alpha) if alpha < 1 else np.nan
        print(f"{alpha:<6} {f.width[-1]:<12.4e} {f.envelope[-1]:<12.4e} {K:<12.4e} {f.envelope[-1] / K:.4f}")


if __name__ == "__main__":
    main()
