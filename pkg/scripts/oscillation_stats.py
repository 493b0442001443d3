"""Zero spacing and partial-energy growth for profiles that oscillate about
a level with g'(k pi) < 0, over a range of initial slopes."""

import argparse

import numpy as np

from vortexlab.analyze import TooFewZeros, interleaved, oscillation_report, partial_energy_growth
from vortexlab.integrate import SolverConfig, integrate
from vortexlab.model import ModelParams


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lambda", dest="lam", type=float, default=0.0)
    ap.add_argument("--omega", type=float, default=1.0)
    ap.add_argument("--m", type=int, default=1)
    ap.add_argument("--k", type=int, default=1)
    ap.add_argument("--r-max", type=float, default=200.0)
    ap.add_argument("--slopes", default="0.1,0.3,1,3,10")
    args = ap.parse_args(argv)

    p = ModelParams(args.lam, args.omega, args.m)
    cfg = SolverConfig(r_max=args.r_max, stop_on_oscillation=False)
    print(f"{'a':>6} {'zeros':>6} {'spacing':>9} {'pi/alpha':>9} {'interleaved':>11} {'dJ/dlog2R':>10} diverging")
    for a in (float(s) for s in args.slopes.split(",")):
        prof = integrate(p, a, cfg)
        try:
            rep = oscillation_report(p, prof, args.k)
        except TooFewZeros as exc:
            print(f"{a:>6g} {'-':>6} {exc}")
            continue
        growth = partial_energy_growth(rep)
        print(f"{a:>6g} {len(rep.zeros):>6d} {rep.mean_late_spacing:>9.5f} {np.pi / rep.alpha:>9.5f} "
              f"{str(interleaved(rep)):>11} {growth['slope_per_log2']:>10.3f} {growth['diverging']}")


if __name__ == "__main__":
    main()
