"""Tabulate the gradient-balance constants over a q grid, as CSV on stdout.

For each q in (1, 2) this prints the critical and subcritical roots a, the
derived b_q and c_q, and the power-law boundary coefficient at β = q/(2-q).
"""
import argparse
import csv
import sys

import numpy as np

from blowup.constants import boundary_b, constant_set


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--q-min", type=float, default=1.05)
    ap.add_argument("--q-max", type=float, default=1.95)
    ap.add_argument("--n", type=int, default=19)
    ap.add_argument("--l", type=float, default=0.0, help="right-hand side parameter of the subcritical equation")
    args = ap.parse_args(argv)

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["q", "a_critical", "a_subcritical", "b_q", "c_q", "beta_boundary", "b_boundary"])
    for q in np.linspace(args.q_min, args.q_max, args.n):
        cs = constant_set(float(q), l=args.l)
        beta = q / (2.0 - q)
        w.writerow([f"{q:.4f}"] + [f"{v:.12g}" for v in (cs.a_critical, cs.a_subcritical, cs.b_q, cs.c_q)]
                   + [f"{beta:.6g}", f"{boundary_b(beta):.12g}"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
