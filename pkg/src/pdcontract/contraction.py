"""Closed-form contraction certificates, tracking bounds and their checks.

Certificates carry the weight ``P`` of the norm ``||v||_{2,P^{1/2}}`` in
which the flow contracts at rate ``c``. Checks never raise on a failed
inequality; they return the worst observed value so callers can compare it
against a threshold and report.
"""

from dataclasses import dataclass, field

import numpy as np

from .dynamics import integrate
from .errors import AssumptionViolation
from .linalg import matrix_measure_2, spd_factors, weighted_norm
from .problems import QuadraticObjective, ell_star

DEFAULT_EPSILON = 0.9


def _check_eps(eps):
    if not 0.0 < eps < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")


def _positive(**kw):
    for name, v in kw.items():
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")


# --- closed forms ------------------------------------------------------------

def alpha_eps(ell_inf, ell_sup, sigma_min, sigma_max, eps):
    """Off-diagonal weight of the metric for a strongly convex objective.

    ``eps * ell_inf / (sigma_max^2 + 3/4 sigma_max sigma_min^2 + ell_sup^2)``
    """
    _check_eps(eps)
    _positive(ell_inf=ell_inf, ell_sup=ell_sup, sigma_min=sigma_min, sigma_max=sigma_max)
    return eps * ell_inf / (sigma_max ** 2 + 0.75 * sigma_max * sigma_min ** 2 + ell_sup ** 2)


def alpha_bar_eps(rho, ell_sup, sigma_min, sigma_max, eps):
    """Metric weight for the augmented flow.

    ``eps rho sigma_min^2 / ((1 + rho) sigma_max^2 + 3/4 sigma_max sigma_min^2 + ell_sup^2)``;
    ``ell_sup = 0`` is allowed (affine objective).
    """
    _check_eps(eps)
    _positive(rho=rho, sigma_min=sigma_min, sigma_max=sigma_max)
    if ell_sup < 0:
        raise ValueError("ell_sup must be nonnegative")
    return eps * rho * sigma_min ** 2 / (
        (1 + rho) * sigma_max ** 2 + 0.75 * sigma_max * sigma_min ** 2 + ell_sup ** 2)


def rate_from_alpha(alpha, sigma_min, sigma_max):
    """``alpha * 3/4 * sigma_max sigma_min^2 / (sigma_max + 1)``."""
    return alpha * 0.75 * sigma_max * sigma_min ** 2 / (sigma_max + 1.0)


def metric_matrix(alpha, A):
    """``[[I_n, alpha A^T], [alpha A, I_k]]``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    k, n = A.shape
    return np.block([[np.eye(n), alpha * A.T], [alpha * A, np.eye(k)]])


def distributed_rate(ell_inf, ell_sup, lambda2, lambdaN, eps):
    """Exponential rate of the distributed primal-dual flow.

    Parameters
    ----------
    ell_inf, ell_sup : array_like
        Per-agent strong-convexity and smoothness constants.
    lambda2, lambdaN : float
        Smallest nonzero and largest Laplacian eigenvalues.
    """
    _check_eps(eps)
    ell_inf = np.atleast_1d(np.asarray(ell_inf, dtype=float))
    ell_sup = np.atleast_1d(np.asarray(ell_sup, dtype=float))
    if np.any(ell_inf <= 0):
        raise AssumptionViolation("A6", "every ell_inf,i must be positive")
    _positive(lambda2=lambda2, lambdaN=lambdaN)
    return (0.75 * eps * lambdaN * lambda2 ** 2 / (lambdaN + 1.0)
            * ell_inf.min() / (lambdaN ** 2 + 0.75 * lambdaN * lambda2 ** 2 + ell_sup.max() ** 2))


def distributed_ls_rate(ell_star_value, lambda2, lambdaN, rho, h_max_sq, eps):
    """Rate of the augmented distributed least-squares flow."""
    _check_eps(eps)
    if not ell_star_value > 0:
        raise AssumptionViolation("kernel overlap", "ell_star must be positive")
    _positive(lambda2=lambda2, lambdaN=lambdaN, rho=rho)
    return (eps * 0.75 * lambdaN * lambda2 ** 2 / (lambdaN + 1.0) * ell_star_value
            / (lambdaN ** 2 + 0.75 * lambdaN * lambda2 ** 2 + (lambdaN + rho * h_max_sq) ** 2))


def tv_tracking_rho(ell_inf, ell_sup, sigma_min, sigma_max, beta1, beta2, lambda_max_P):
    """Drift term of the centralized tracking bound (ultimate bound is ``rho / c``).

    Uses ``ell_sup`` where the smoothness constant of the frozen problems is
    needed.
    """
    _positive(ell_inf=ell_inf, ell_sup=ell_sup, sigma_min=sigma_min, sigma_max=sigma_max)
    if beta1 < 0 or beta2 < 0:
        raise ValueError("beta1 and beta2 must be nonnegative")
    dual_speed = ell_sup / sigma_min ** 2 * (beta1 + sigma_max / ell_inf * beta2)
    return lambda_max_P * (beta2 / ell_inf + (sigma_max / ell_inf + 1.0) * dual_speed)


def tv_distributed_tracking_rho(beta1, ell_inf, ell_sup, lambda2, N, lambda_max_P):
    """Drift term of the distributed tracking bound."""
    beta1 = np.atleast_1d(np.asarray(beta1, dtype=float))
    ell_inf = np.atleast_1d(np.asarray(ell_inf, dtype=float))
    ell_sup = np.atleast_1d(np.asarray(ell_sup, dtype=float))
    if np.any(beta1 < 0):
        raise ValueError("beta1 entries must be nonnegative")
    b1, li1 = beta1.sum(), ell_inf.sum()
    return (lambda_max_P * b1 / li1 * N
            + lambda_max_P * b1 / lambda2 * (ell_sup.max() / li1 + 1.0))


# --- certificates --------------------------------------------------------------

@dataclass
class MetricCertificate:
    """Weighted metric ``P`` and contraction rate ``c``."""

    kind: str
    epsilon: float
    alpha: float
    P: np.ndarray
    c: float
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"contraction rate must be positive, got {self.c}")

    @property
    def lambda_max_P(self):
        return float(np.linalg.eigvalsh(self.P)[-1])

    @property
    def lambda_min_P(self):
        return float(np.linalg.eigvalsh(self.P)[0])

    def to_dict(self):
        return {"kind": self.kind, "epsilon": self.epsilon, "alpha": self.alpha,
                "c": self.c, "lambda_max_P": self.lambda_max_P,
                "lambda_min_P": self.lambda_min_P,
                **{k: _plain(v) for k, v in self.constants.items()}}


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    return v


def _hessian_samples(objective, rng, n_samples=20):
    if isinstance(objective, QuadraticObjective):
        return [objective.Q]
    rng = np.random.default_rng(rng)
    return [np.asarray(objective.hess(rng.standard_normal(objective.dim))) for _ in range(n_samples)]


def standard_certificate(problem, eps=DEFAULT_EPSILON):
    """Certificate for the plain primal-dual flow of a strongly convex problem."""
    f, con = problem.objective, problem.constraint
    if not f.ell_inf > 0:
        raise AssumptionViolation(
            "A2", "objective is not strongly convex (ell_inf = 0); "
            "use the augmented dynamics and augmented_certificate instead")
    a = alpha_eps(f.ell_inf, f.ell_sup, con.sigma_min, con.sigma_max, eps)
    c = rate_from_alpha(a, con.sigma_min, con.sigma_max)
    return MetricCertificate("standard", eps, a, metric_matrix(a, con.A), c,
                             {"ell_inf": f.ell_inf, "ell_sup": f.ell_sup,
                              "sigma_min": con.sigma_min, "sigma_max": con.sigma_max})


def augmented_certificate(problem, rho, eps=DEFAULT_EPSILON, rng=None):
    """Certificate for the augmented flow; usable with a merely convex objective.

    The kernel condition ``ker(hess f) & ker(A) = {0}`` is checked as
    ``lambda_min(hess f + rho A^T A) > 0`` on sampled Hessians (the exact
    Hessian for quadratics).
    """
    f, con = problem.objective, problem.constraint
    A = con.A
    worst = np.inf
    for H in _hessian_samples(f, rng):
        worst = min(worst, float(np.linalg.eigvalsh(H + rho * A.T @ A)[0]))
    if worst <= 1e-10 * (1 + rho * con.sigma_max ** 2):
        raise AssumptionViolation("A4", f"ker(hess f) meets ker(A): lambda_min = {worst:.3e}")
    a = alpha_bar_eps(rho, f.ell_sup, con.sigma_min, con.sigma_max, eps)
    c = rate_from_alpha(a, con.sigma_min, con.sigma_max)
    return MetricCertificate("augmented", eps, a, metric_matrix(a, A), c,
                             {"rho": rho, "ell_sup": f.ell_sup,
                              "sigma_min": con.sigma_min, "sigma_max": con.sigma_max,
                              "augmented_curvature": worst})


def _reduced_metric(alpha, spec, n):
    return metric_matrix(alpha, spec.reduced_incidence(n))


def distributed_certificate(ell_inf, ell_sup, spec, n, eps=DEFAULT_EPSILON):
    """Certificate for the reduced state ``V (x, nu)`` of the distributed flow."""
    ell_inf = np.atleast_1d(np.asarray(ell_inf, dtype=float))
    ell_sup = np.atleast_1d(np.asarray(ell_sup, dtype=float))
    if np.any(ell_inf <= 0):
        raise AssumptionViolation("A6", "every ell_inf,i must be positive")
    l2, lN = spec.lambda2, spec.lambdaN
    a = alpha_eps(ell_inf.min(), ell_sup.max(), l2, lN, eps)
    c = distributed_rate(ell_inf, ell_sup, l2, lN, eps)
    return MetricCertificate("distributed", eps, a, _reduced_metric(a, spec, n), c,
                             {"lambda2": l2, "lambdaN": lN,
                              "ell_inf_min": float(ell_inf.min()),
                              "ell_sup_max": float(ell_sup.max())})


def distributed_ls_certificate(ls, spec, rho, eps=DEFAULT_EPSILON):
    """Certificate for augmented distributed least squares.

    The curvature constant uses the ``rho``-weighted Laplacian; the value with
    unit weight is reported alongside.
    """
    _check_eps(eps)
    l2, lN = spec.lambda2, spec.lambdaN
    ls_star = ell_star(ls, spec.L, rho)
    hmax = ls.h_max_sq
    a = eps * ls_star / (lN ** 2 + 0.75 * lN * l2 ** 2 + (lN + rho * hmax) ** 2)
    c = distributed_ls_rate(ls_star, l2, lN, rho, hmax, eps)
    try:
        unit = ell_star(ls, spec.L, 1.0)
    except AssumptionViolation:
        unit = 0.0
    return MetricCertificate("distributed-ls", eps, a, _reduced_metric(a, spec, ls.n), c,
                             {"rho": rho, "lambda2": l2, "lambdaN": lN,
                              "ell_star": ls_star, "ell_star_unit_gain": unit,
                              "h_max_sq": hmax})


def tv_distributed_certificate(tvd, eps=DEFAULT_EPSILON):
    """Metric and rate for the time-varying distributed flow.

    The rate is ``alpha * 3/4 * lambda2^2 / (lambdaN + 1)``, which is no
    larger than the static distributed rate since ``lambdaN >= 1``.
    """
    spec, n = tvd.spectrum, tvd.n
    l2, lN = spec.lambda2, spec.lambdaN
    a = alpha_eps(tvd.ell_inf.min(), tvd.ell_sup.max(), l2, lN, eps)
    c = a * 0.75 * l2 ** 2 / (lN + 1.0)
    return MetricCertificate("tv-distributed", eps, a, _reduced_metric(a, spec, n), c,
                             {"lambda2": l2, "lambdaN": lN,
                              "ell_inf_min": float(tvd.ell_inf.min()),
                              "ell_sup_max": float(tvd.ell_sup.max())})


# --- tracking bounds -----------------------------------------------------------

@dataclass(frozen=True)
class TrackingBound:
    """``t -> (delta0 - rho/c) exp(-c t) + rho/c``."""

    rho: float
    c: float
    delta0: float

    @property
    def ultimate(self):
        return self.rho / self.c

    def __call__(self, t):
        return bound_curve(self, t)


def bound_curve(bound, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("bound is defined for t >= 0")
    u = bound.ultimate
    out = (bound.delta0 - u) * np.exp(-bound.c * t) + u
    return float(out) if out.ndim == 0 else out


def tracking_bound(problem, cert, delta0):
    rho = tv_tracking_rho(problem.ell_inf, problem.ell_sup, problem.sigma_min,
                          problem.sigma_max, problem.beta1, problem.beta2, cert.lambda_max_P)
    return TrackingBound(rho, cert.c, delta0)


def tv_distributed_tracking_bound(tvd, cert, delta0):
    rho = tv_distributed_tracking_rho(tvd.beta1, tvd.ell_inf, tvd.ell_sup,
                                      tvd.spectrum.lambda2, tvd.N, cert.lambda_max_P)
    return TrackingBound(rho, cert.c, delta0)


# --- numerical checks ----------------------------------------------------------

def sampled_measure_check(field, P, samples, V=None):
    """Largest weighted measure of the (optionally projected) Jacobian.

    For each ``(z, t)`` in ``samples`` evaluates ``mu_{2,P^{1/2}}(J)`` with
    ``J = DF(z, t)`` or ``J = V DF(z, t) V^T``. A valid rate-``c`` certificate
    gives a value ``<= -c``.
    """
    S, S_inv = spd_factors(P)
    worst = -np.inf
    for z, t in samples:
        J = field.jacobian(z, t)
        if V is not None:
            J = V @ J @ V.T
        worst = max(worst, matrix_measure_2(S @ J @ S_inv))
    return float(worst)


def integral_contractivity_check(field, P, c, pairs):
    """Worst normalized slack of the pairwise contractivity inequality.

    For each pair computes ``eta = (x - y)^T P (F(x,t) - F(y,t)) + c ||x - y||_P^2``
    divided by ``||x - y||_P^2``; coincident points contribute 0. The value
    is ``<= 0`` exactly when every sampled pair satisfies the inequality.
    """
    worst = 0.0 if not pairs else -np.inf
    for x, y, t in pairs:
        x, y = np.asarray(x, float), np.asarray(y, float)
        d = x - y
        d2 = float(d @ P @ d)
        if d2 == 0.0:
            worst = max(worst, 0.0)
            continue
        eta = float(d @ P @ (field(x, t) - field(y, t))) + c * d2
        worst = max(worst, eta / d2)
    return float(worst)


def distance_series(traj_a, traj_b, P=None, V=None):
    D = traj_a.states - traj_b.states
    if V is not None:
        D = D @ V.T
    if P is None:
        return np.linalg.norm(D, axis=1)
    return np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", D, P, D), 0.0))


def fit_decay_rate(times, d, floor=1e-12, start_frac=0.1):
    """Least-squares slope of ``-log d(t)`` on ``[start_frac * T, T']``.

    ``T'`` is the first time ``d`` drops below ``floor``.
    """
    times = np.asarray(times, float)
    d = np.asarray(d, float)
    lo = times[0] + start_frac * (times[-1] - times[0])
    below = np.flatnonzero(d < floor)
    hi = times[below[0]] if below.size else times[-1]
    mask = (times >= lo) & (times <= hi) & (d > 0)
    if mask.sum() < 2:
        mask = (times <= hi) & (d > 0)
    if mask.sum() < 2:
        raise ValueError("not enough points above the floor to fit a rate")
    slope = np.polyfit(times[mask], -np.log(d[mask]), 1)[0]
    return float(slope)


def empirical_rate(field, P, pairs, cfg, V=None, floor=1e-12):
    """Smallest fitted exponential decay rate over trajectory pairs.

    Each pair of initial states is integrated with ``cfg`` and the distance
    ``||V (z1 - z2)||_{2,P^{1/2}}`` fitted on a log scale.
    """
    pairs = list(pairs)
    if len(pairs) < 1:
        raise ValueError("need at least one trajectory pair")
    rates = []
    for z1, z2 in pairs:
        if np.allclose(z1, z2, rtol=0, atol=1e-14):
            raise ValueError("degenerate pair: identical initial conditions")
        ta, tb = integrate(field, z1, cfg), integrate(field, z2, cfg)
        rates.append(fit_decay_rate(ta.times, distance_series(ta, tb, P, V), floor))
    return float(min(rates))


def nonexpansion_check(field, pairs, cfg):
    """Largest per-step increase of the Euclidean distance between paired runs."""
    worst = -np.inf
    for z1, z2 in pairs:
        d = distance_series(integrate(field, z1, cfg), integrate(field, z2, cfg))
        worst = max(worst, float(np.max(np.diff(d))))
    return worst


def envelope_violation(times, errors, c):
    """``max_t e(t) / (e(0) exp(-c t)) - 1``; ``<= 0`` when the envelope holds."""
    errors = np.asarray(errors, float)
    if errors[0] == 0.0:
        return 0.0 if np.all(errors == 0.0) else np.inf
    env = errors[0] * np.exp(-c * (np.asarray(times) - times[0]))
    return float(np.max(errors / env) - 1.0)


def weighted_errors(states, targets, P, V=None):
    """Row-wise ``||V (z - z*)||_{2,P^{1/2}}``."""
    D = np.atleast_2d(states) - np.atleast_2d(targets)
    if V is not None:
        D = D @ V.T
    return np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", D, P, D), 0.0))


def weighted_error(z, z_star, P):
    return weighted_norm(np.asarray(z) - np.asarray(z_star), P)


def tv_certificate(problem, eps=DEFAULT_EPSILON):
    """Certificate of the centralized time-varying flow (uniform constants)."""
    a = alpha_eps(problem.ell_inf, problem.ell_sup, problem.sigma_min, problem.sigma_max, eps)
    c = rate_from_alpha(a, problem.sigma_min, problem.sigma_max)
    return MetricCertificate("tv", eps, a, metric_matrix(a, problem.A), c,
                             {"ell_inf": problem.ell_inf, "ell_sup": problem.ell_sup,
                              "sigma_min": problem.sigma_min, "sigma_max": problem.sigma_max,
                              "beta1": problem.beta1, "beta2": problem.beta2})
