"""How often the closed-form augmented metric misses its stated rate.

Draws quadratic programs with singular PSD ``Q`` and counts instances where
``mu_{2,P^{1/2}}`` of the augmented Jacobian exceeds ``-c``. Two families:
``aligned`` puts the range of ``Q`` on the complement of the row space of
``A``; ``generic`` uses an arbitrary rank-deficient ``Q``.
"""

import argparse

import numpy as np

from pdcontract.contraction import augmented_certificate
from pdcontract.dynamics import augmented_pd_field
from pdcontract.errors import AssumptionViolation
from pdcontract.instances import random_convex_problem
from pdcontract.linalg import spectral_abscissa, weighted_matrix_measure
from pdcontract.problems import ConstrainedProblem, EqualityConstraint, QuadraticObjective


def generic(seed, n=4, k=2):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n - k, n))
    return ConstrainedProblem(QuadraticObjective(G.T @ G), EqualityConstraint(rng.standard_normal((k, n)), np.zeros(k)))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--draws", type=int, default=200)
    ap.add_argument("--rho", type=float, default=1.0)
    args = ap.parse_args(argv)
    for label, make in (("aligned", random_convex_problem), ("generic", generic)):
        misses, total, worst = 0, 0, -np.inf
        for seed in range(args.draws):
            p = make(seed)
            try:
                cert = augmented_certificate(p, args.rho)
            except AssumptionViolation:
                continue
            J = augmented_pd_field(p, args.rho).jacobian(np.zeros(p.n + p.k))
            excess = (weighted_matrix_measure(J, cert.P) + cert.c) / cert.c
            assert spectral_abscissa(J) < 0
            total += 1
            misses += excess > 0
            worst = max(worst, excess)
        print(f"{label}: {misses}/{total} draws violate mu <= -c; worst (mu + c)/c = {worst:.3f}")


if __name__ == "__main__":
    main()
