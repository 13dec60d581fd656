"""Empirical flat-part constants under grid refinement, with the rough negative control."""

import argparse

from microlab.function_spaces import lacunary_field, piecewise_quadratic_field
from microlab.grid import Grid
from microlab.littlewood_paley import build_partition
from microlab.paradiff import flat_endpoint_check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[512, 1024, 2048, 4096])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--trials", type=int, default=14)
    args = ap.parse_args()
    print("s    n      C(spline)  C(control)")
    for s in (0.0, 1.0, 2.0):
        for n in args.sizes:
            g = Grid((n,))
            P = build_partition(g)
            pos = max(flat_endpoint_check(piecewise_quadratic_field(g, k), 2.0, s, args.trials, k, P=P).constant
                      for k in range(args.seeds))
            neg = max(flat_endpoint_check(lacunary_field(g, 1.5, k), 2.0, s, args.trials, k, "zygmund", 1.5, P).constant
                      for k in range(args.seeds))
            print(f"{s:<4} {n:<6} {pos:<10.4f} {neg:.4f}")


if __name__ == "__main__":
    main()
