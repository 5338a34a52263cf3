"""Seeded instance generators shared by tests, demos and experiment scripts."""

import numpy as np

from .graphs import random_connected_graph
from .problems import (
    ConstrainedProblem,
    EqualityConstraint,
    LeastSquaresInstance,
    QuadraticObjective,
)


def _orthogonal(rng, n):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def spd_matrix(rng, n, lo=1.0, hi=3.0):
    """Random SPD matrix with spectrum drawn uniformly from ``[lo, hi]``."""
    U = _orthogonal(rng, n)
    return U @ np.diag(rng.uniform(lo, hi, n)) @ U.T


def full_row_rank_matrix(rng, k, n, lo=0.5, hi=1.5):
    """``k x n`` matrix with singular values drawn from ``[lo, hi]``."""
    U, V = _orthogonal(rng, k), _orthogonal(rng, n)
    S = np.zeros((k, n))
    S[:, :k] = np.diag(rng.uniform(lo, hi, k))
    return U @ S @ V.T


def random_quadratic_problem(seed, n=None, k=None, curvature=(1.0, 3.0), sigmas=(0.5, 1.5)):
    """Strongly convex quadratic program with controlled conditioning."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 7)) if n is None else n
    k = int(rng.integers(1, n)) if k is None else k
    Q = spd_matrix(rng, n, *curvature)
    A = full_row_rank_matrix(rng, k, n, *sigmas)
    return ConstrainedProblem(QuadraticObjective(Q, rng.standard_normal(n)),
                              EqualityConstraint(A, rng.standard_normal(k)))


def random_convex_problem(seed, n=4, k=2):
    """Quadratic program with singular PSD ``Q`` whose kernel misses ``ker(A)``.

    ``Q`` has rank ``n - k`` and acts on the orthogonal complement of the row
    space of ``A``, so ``Q + A^T A`` is positive definite.
    """
    rng = np.random.default_rng(seed)
    A = full_row_rank_matrix(rng, k, n)
    _, _, Vt = np.linalg.svd(A)
    N = Vt[k:].T
    Q = N @ np.diag(rng.uniform(1.0, 2.0, n - k)) @ N.T
    return ConstrainedProblem(QuadraticObjective(Q, rng.standard_normal(n)),
                              EqualityConstraint(A, rng.standard_normal(k)))


def random_least_squares(seed, N=6, n=2):
    rng = np.random.default_rng(seed)
    H = rng.standard_normal((N, n))
    while np.linalg.matrix_rank(H) < n:
        H = rng.standard_normal((N, n))
    return LeastSquaresInstance(H, rng.standard_normal(N))


def random_node_quadratics(seed, N, n, curvature=(1.0, 3.0)):
    rng = np.random.default_rng(seed)
    return [QuadraticObjective(spd_matrix(rng, n, *curvature), rng.standard_normal(n))
            for _ in range(N)]


def random_graph(seed, N):
    return random_connected_graph(N, p=0.35, seed=seed)
