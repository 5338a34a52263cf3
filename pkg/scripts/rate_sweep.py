"""Certified versus fitted contraction rates of the standard flow.

For each seeded quadratic program and each epsilon, prints the certified
rate, the fitted decay rate of trajectory pairs and their ratio as CSV.

    python3 scripts/rate_sweep.py --seeds 10 --eps 0.3 0.6 0.9 > sweep.csv
"""

import argparse
import sys

import numpy as np

from pdcontract.contraction import empirical_rate, standard_certificate
from pdcontract.dynamics import IntegratorConfig, default_step, pd_field
from pdcontract.instances import random_quadratic_problem


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--eps", type=float, nargs="+", default=[0.3, 0.6, 0.9])
    ap.add_argument("--horizon", type=float, default=10.0, help="horizon in units of 1/c")
    args = ap.parse_args(argv)

    w = sys.stdout
    w.write("seed,n,k,epsilon,c_certified,c_fitted,ratio\n")
    for seed in range(args.seeds):
        p = random_quadratic_problem(seed)
        F = pd_field(p)
        h = default_step(p.objective.ell_sup, p.constraint.sigma_max)
        rng = np.random.default_rng(seed)
        pairs = [(rng.standard_normal(F.dim), rng.standard_normal(F.dim)) for _ in range(2)]
        for eps in args.eps:
            cert = standard_certificate(p, eps)
            cfg = IntegratorConfig.from_horizon(args.horizon / cert.c, h)
            fitted = empirical_rate(F, cert.P, pairs, cfg)
            w.write(f"{seed},{p.n},{p.k},{eps},{cert.c:.6e},{fitted:.6e},{fitted / cert.c:.3f}\n")


if __name__ == "__main__":
    main()
