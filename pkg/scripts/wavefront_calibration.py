"""Fitted decay exponent of a sawtooth jump across resolutions and window widths."""

import argparse

import numpy as np

from microlab.grid import Grid, SampledField
from microlab.littlewood_paley import build_partition
from microlab.wavefront import MicrolocalProbe, wf_classify


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[1024, 2048, 4096, 8192])
    ap.add_argument("--windows", type=int, nargs="+", default=[16, 32])
    args = ap.parse_args()
    print("n      h      s*(+)   s*(-)")
    for n in args.sizes:
        g = Grid((n,))
        P = build_partition(g)
        x = g.axes()[0]
        step = SampledField(g, np.mod(x - np.pi, 2 * np.pi) - np.pi)
        for div in args.windows:
            h = n // div
            vals = [wf_classify(step, 1.0, MicrolocalProbe((np.pi,), h, (d,), P.J - 4, P.J - 1), P).s_star
                    for d in (1.0, -1.0)]
            print(f"{n:<6} {h:<6} {vals[0]:<7.3f} {vals[1]:.3f}")


if __name__ == "__main__":
    main()
