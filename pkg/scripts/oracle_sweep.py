"""Compare the closed-form fringe visibility against the brute-force wave-optics oracle.

Sweeps the phase-grating argument xi by scaling the laser power at fixed velocity.
"""

import argparse

import numpy as np

from kdtl import GratingSet, MoleculeSpec, analytic_fringe, numerical_oracle_fringe
from kdtl.fringe import talbot_argument


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--velocity", type=float, default=110.0, help="m/s")
    p.add_argument("--points", type=int, default=9)
    p.add_argument("--xi-max", type=float, default=4.0)
    p.add_argument("--slits", type=int, default=40, help="G2 half-window in periods")
    p.add_argument("--samples", type=int, default=16384)
    args = p.parse_args()

    mol = MoleculeSpec("isomer1", 1592.0, 63.0, 63.0, 102.0)
    base = GratingSet()
    xi0 = abs(talbot_argument(mol, base, args.velocity))
    print(f"{'xi':>6} {'V_analytic':>11} {'V_oracle':>10} {'rel_err':>9}")
    for xi in np.linspace(0.25, args.xi_max, args.points):
        g = GratingSet(laser_power=base.laser_power * xi / xi0)
        a = analytic_fringe(mol, g, args.velocity).visibility_V
        o = numerical_oracle_fringe(mol, g, args.velocity, args.slits, args.samples).visibility_V
        print(f"{xi:6.3f} {a:11.6f} {o:10.6f} {abs(a - o) / max(o, 1e-300):9.2e}")


if __name__ == "__main__":
    main()
