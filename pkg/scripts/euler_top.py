#!/usr/bin/env python3
"""Integrate the free rigid body as a Nambu system and print its diagnostics."""

import argparse
import json

from lcnambu.dynamics import HamiltonianSystem, integrate, run_diagnostics
from lcnambu.expr import parse
from lcnambu.multivector import basis_vector
from lcnambu.structures import StructureCandidate, fix_entries

COORDS = ("x", "y", "z")


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--inertia", type=float, nargs=3, default=[1.0, 2.0, 3.0])
    p.add_argument("--x0", type=float, nargs=3, default=[1.0, 0.1, 0.1])
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--csv", help="write the trajectory here")
    args = p.parse_args()

    i1, i2, i3 = args.inertia
    h1 = parse("(x^2 + y^2 + z^2)/2", COORDS)
    h2 = parse(f"(x^2/{i1} + y^2/{i2} + z^2/{i3})/2", COORDS)
    eta = basis_vector(3, 0, 1, 2)

    split = fix_entries(eta, h1, h2)
    system = HamiltonianSystem(StructureCandidate("np", eta), [h1, h2])
    traj = integrate(system, args.x0, args.t_end, args.h)
    diag = run_diagnostics(system, traj)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            traj.to_csv(fh)

    print(json.dumps({
        "poisson_pair": split.report.to_json(),
        "diagnostics": diag.to_json(),
        "final_state": [float(v) for v in traj.states[-1]],
    }, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
