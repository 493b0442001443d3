"""Print the case-label map over a (lambda, omega) grid, optionally with a
shooting search per cell.

    python3 scripts/phase_map.py --n 5
    python3 scripts/phase_map.py --n 3 --empirical --jobs 1
"""

import argparse
import json
import sys

import numpy as np

from vortexlab.cli import empirical_level
from vortexlab.model import ModelParams, classify_params
from vortexlab.shoot import NoBracketFound, find_a

SHORT = {"CaseI": "I", "CaseII": "II", "CaseIII": "III", "CaseIV": "IV", "CaseV": "V",
         "NoFiniteEnergyVortex": "."}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lo", type=float, default=-1.0)
    ap.add_argument("--hi", type=float, default=1.0)
    ap.add_argument("--n", type=int, default=9)
    ap.add_argument("--line-tol", type=float, default=1e-12)
    ap.add_argument("--empirical", action="store_true")
    ap.add_argument("--json", action="store_true", help="emit the grid as JSON instead of a table")
    args = ap.parse_args(argv)

    axis = np.linspace(args.lo, args.hi, args.n)
    cells = []
    for om in axis[::-1]:
        for lam in axis:
            label = classify_params(float(lam), float(om), args.line_tol)
            cell = {"lambda": float(lam), "omega": float(om), "tag": label.tag.value}
            if args.empirical:
                k = empirical_level(label)
                try:
                    res = find_a(ModelParams(float(lam), float(om), 1), k, (0.1, 10.0))
                    cell["a_star"] = res.a_star
                except NoBracketFound as exc:
                    cell["a_star"] = None
                    cell["reason"] = exc.reason
            cells.append(cell)

    if args.json:
        json.dump(cells, sys.stdout, indent=1)
        print()
        return
    print("omega \\ lambda " + " ".join(f"{x:>6.2f}" for x in axis))
    for i, om in enumerate(axis[::-1]):
        row = cells[i * args.n:(i + 1) * args.n]
        marks = []
        for c in row:
            m = SHORT[c["tag"]]
            if args.empirical:
                m += "*" if c.get("a_star") is not None else ""
            marks.append(f"{m:>6}")
        print(f"{om:>14.2f} " + " ".join(marks))
    if args.empirical:
        print("* : shooting search found a profile with the expected limit")


if __name__ == "__main__":
    main()
