"""Scenario pipelines behind the command-line front end.

:func:`setup` turns a :class:`~pdcontract.scenarios.Scenario` into the field,
certificate and oracle it describes; ``rates``, ``simulate``, ``track`` and
``verify`` build on that.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import contraction as ct
from .dynamics import (
    IntegratorConfig,
    augmented_pd_field,
    consensus_equilibrium,
    default_step,
    distributed_ls_field,
    distributed_pd_field,
    dual_sums,
    integrate,
    pd_field,
    reduced_dual,
    tv_distributed_pd_field,
    tv_pd_field,
)
from .errors import AssumptionViolation
from .graphs import build_V
from .linalg import is_hurwitz, matrix_measure_2, saddle_matrix, singular_values
from .problems import distributed_optimum, kkt_solve, ls_solution
from .scenarios import (
    build_constrained,
    build_least_squares,
    build_node_objectives,
    build_tv,
    build_tv_distributed,
    spectrum_of,
)

DISTRIBUTED_T_CAP = 500.0
TV_DEFAULT_T = 100.0
ACCEPT = {"measure": 1e-8, "integral": 1e-8, "rate_ratio": 0.95, "identity": 1e-10,
          "dual_sum": 1e-9, "convergence": 1e-6, "envelope": 1e-6, "nonexpansion": 1e-8}


@dataclass
class Setup:
    kind: str
    field: object
    cert: Optional[ct.MetricCertificate]
    z_star: Callable[[float], np.ndarray]
    h: float
    T: float
    z0: np.ndarray
    V: Optional[np.ndarray] = None
    objects: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def P(self):
        if self.cert is not None:
            return self.cert.P
        return np.eye(self.field.dim if self.V is None else self.V.shape[0])

    @property
    def c(self):
        return self.cert.c if self.cert is not None else 0.0

    def project(self, states):
        states = np.atleast_2d(states)
        return states if self.V is None else states @ self.V.T

    def config(self, T=None):
        return IntegratorConfig.from_horizon(self.T if T is None else T, self.h)


def _initial(scenario, dim):
    if scenario.initial is not None:
        z0 = np.asarray(scenario.initial, dtype=float)
        if z0.size != dim:
            raise ValueError(f"initial state has length {z0.size}, expected {dim}")
        return z0
    return np.random.default_rng(scenario.seed).standard_normal(dim)


def _static(z):
    z = np.asarray(z, dtype=float)
    return lambda t: z


def setup(scenario):
    """Assemble everything a scenario describes; assumption violations propagate."""
    kind, eps, rho = scenario.kind, scenario.epsilon, scenario.rho
    notes = []
    if kind in ("standard", "augmented"):
        p = build_constrained(scenario.problem, kind)
        f, con = p.objective, p.constraint
        if kind == "standard":
            fld = pd_field(p)
            if f.ell_inf > 0:
                cert = ct.standard_certificate(p, eps)
            else:
                cert = None
                notes.append("objective only convex: weak contraction in the Euclidean norm, no rate")
            h = default_step(f.ell_sup, con.sigma_max)
        else:
            fld = augmented_pd_field(p, rho)
            cert = ct.augmented_certificate(p, rho, eps)
            h = default_step(f.ell_sup + rho * con.sigma_max ** 2, con.sigma_max)
        x, nu = kkt_solve(f, con)
        T = 20.0 / cert.c if cert is not None else 50.0
        return Setup(kind, fld, cert, _static(np.concatenate([x, nu])), scenario.h or h,
                     scenario.T or T, _initial(scenario, fld.dim), None, {"problem": p}, notes)

    if kind in ("distributed", "distributed-ls"):
        spec = spectrum_of(scenario)
        if kind == "distributed":
            objs = build_node_objectives(scenario.problem)
            n = objs[0].dim
            fld = distributed_pd_field(objs, spec, n)
            cert = ct.distributed_certificate([o.ell_inf for o in objs], [o.ell_sup for o in objs],
                                              spec, n, eps)
            v = distributed_optimum(objs)
            h = default_step(max(o.ell_sup for o in objs), spec.lambdaN)
            objects = {"objectives": objs, "spectrum": spec, "optimum": v}
        else:
            ls = build_least_squares(scenario.problem)
            n = ls.n
            objs = ls.node_objectives()
            fld = distributed_ls_field(ls, spec, rho)
            cert = ct.distributed_ls_certificate(ls, spec, rho, eps)
            v = ls_solution(ls)
            h = default_step(ls.h_max_sq + rho * spec.lambdaN, spec.lambdaN)
            objects = {"least_squares": ls, "spectrum": spec, "optimum": v}
        V = build_V(spec, n)
        z_star = consensus_equilibrium(objs, spec, n, v)
        T = min(20.0 / cert.c, DISTRIBUTED_T_CAP)
        if scenario.T is None and 20.0 / cert.c > DISTRIBUTED_T_CAP:
            notes.append(f"default horizon capped at {DISTRIBUTED_T_CAP:g} (20/c = {20.0 / cert.c:.4g})")
        return Setup(kind, fld, cert, _static(z_star), scenario.h or h, scenario.T or T,
                     _initial(scenario, fld.dim), V, objects, notes)

    if kind == "tv":
        tvp = build_tv(scenario.problem)
        fld = tv_pd_field(tvp)
        cert = ct.tv_certificate(tvp, eps)

        def z_star(t):
            return np.concatenate(tvp.optimizer(t))

        h = default_step(tvp.ell_sup, tvp.sigma_max)
        return Setup(kind, fld, cert, z_star, scenario.h or h, scenario.T or TV_DEFAULT_T,
                     _initial(scenario, fld.dim), None, {"problem": tvp}, notes)

    if kind == "tv-distributed":
        spec = spectrum_of(scenario)
        tvd = build_tv_distributed(scenario.problem, spec)
        n, N = tvd.n, tvd.N
        fld = tv_distributed_pd_field(tvd)
        cert = ct.tv_distributed_certificate(tvd, eps)
        V = build_V(spec, n)

        def z_star(t):
            X = np.tile(tvd.optimizer(t), N)
            return np.concatenate([X, reduced_dual(tvd.stacked_gradient(X, t), spec, n)])

        h = default_step(float(tvd.ell_sup.max()), spec.lambdaN)
        return Setup(kind, fld, cert, z_star, scenario.h or h, scenario.T or TV_DEFAULT_T,
                     _initial(scenario, fld.dim), V, {"problem": tvd, "spectrum": spec}, notes)

    raise ValueError(f"unknown kind {kind!r}")


def _target_states(s, times):
    """Oracle states in the coordinates errors are measured in."""
    if s.kind == "tv-distributed":
        return np.array([s.z_star(t) for t in times])
    return s.project(np.array([s.z_star(t) for t in times]))


# --- rates -------------------------------------------------------------------

def rates(scenario):
    s = setup(scenario)
    if s.cert is None:
        raise AssumptionViolation("A2", "objective is not strongly convex; run with kind 'augmented'")
    report = {"scenario": scenario.name, **s.cert.to_dict(), "notes": s.notes}
    if scenario.kind == "tv":
        b = ct.tracking_bound(s.objects["problem"], s.cert, 0.0)
        report.update(tracking_rho=b.rho, ultimate_bound=b.ultimate,
                      notes=s.notes + ["tracking drift uses ell_sup for the smoothness constant"])
    if scenario.kind == "tv-distributed":
        b = ct.tv_distributed_tracking_bound(s.objects["problem"], s.cert, 0.0)
        report.update(tracking_rho=b.rho, ultimate_bound=b.ultimate)
    return report


# --- simulate ------------------------------------------------------------------

def simulate(scenario):
    """Integrate from the scenario's initial state and tabulate error columns.

    Returns ``(header, rows, report)``.
    """
    s = setup(scenario)
    traj = integrate(s.field, s.z0, s.config())
    return _tabulate(s, traj, scenario)


def _tabulate(s, traj, scenario):
    times = traj.times
    targets = _target_states(s, times)
    Z = s.project(traj.states)
    D = Z - targets
    weighted = np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", D, s.P, D), 0.0))
    euclid = np.linalg.norm(D, axis=1)
    if s.field.affine is not None:
        M, c = s.field.affine
        residual = np.linalg.norm(traj.states @ M.T + c, axis=1)
    else:
        residual = np.array([np.linalg.norm(s.field(z, t)) for z, t in zip(traj.states, times)])
    cols = {"t": times, "weighted_error": weighted, "euclidean_error": euclid,
            "kkt_residual": residual}
    if s.V is not None:
        N, n = s.objects["spectrum"].N, s.field.meta["n"]
        sums = dual_sums(traj.states, N, n)
        cols["dual_sum_drift"] = np.max(np.abs(sums - sums[0]), axis=1)
    cols["envelope"] = weighted[0] * np.exp(-s.c * (times - times[0]))
    header = list(cols)
    rows = np.column_stack([cols[k] for k in header])
    report = {"scenario": scenario.name, "kind": s.kind,
              **(s.cert.to_dict() if s.cert else {"c": 0.0}),
              "h": s.h, "T": s.T, "steps": len(times) - 1,
              "final_weighted_error": float(weighted[-1]),
              "final_euclidean_error": float(euclid[-1]),
              "notes": s.notes}
    if s.V is not None:
        v = s.objects["optimum"]
        X = traj.final[:s.objects["spectrum"].N * len(v)].reshape(-1, len(v))
        report["max_node_error"] = float(np.max(np.linalg.norm(X - v, axis=1)))
        report["max_dual_sum_drift"] = float(cols["dual_sum_drift"].max())
    return header, rows, report


# --- track -------------------------------------------------------------------------

def track(scenario):
    """Tracking experiment for the time-varying kinds.

    Returns ``(header, rows, summary)`` where ``summary["pass"]`` says whether
    the measured error stayed under the bound up to the integrator slack
    ``10 h^4``.
    """
    if scenario.kind not in ("tv", "tv-distributed"):
        raise ValueError(f"track needs a time-varying scenario, got kind {scenario.kind!r}")
    s = setup(scenario)
    traj = integrate(s.field, s.z0, s.config())
    times = traj.times
    err = ct.weighted_errors(s.project(traj.states), _target_states(s, times), s.P)
    if s.kind == "tv":
        bound = ct.tracking_bound(s.objects["problem"], s.cert, err[0])
    else:
        bound = ct.tv_distributed_tracking_bound(s.objects["problem"], s.cert, err[0])
    curve = bound(times)
    slack = 10.0 * s.h ** 4
    violation = float(np.max(err - curve * (1 + 1e-6)))
    rows = np.column_stack([times, err, curve, curve - err])
    summary = {"scenario": scenario.name, "kind": s.kind, **s.cert.to_dict(),
               "tracking_rho": bound.rho, "ultimate_bound": bound.ultimate,
               "delta0": bound.delta0, "h": s.h, "T": s.T,
               "max_violation": violation, "slack": slack, "pass": violation <= slack,
               "max_error_last_tenth": float(err[times >= 0.9 * times[-1]].max())}
    return ["t", "weighted_error", "bound", "margin"], rows, summary


# --- verify ------------------------------------------------------------------------

def _check(name, value, threshold, sense="<="):
    ok = value <= threshold if sense == "<=" else value >= threshold
    return {"name": name, "value": float(value), "threshold": float(threshold),
            "sense": sense, "pass": bool(ok)}


def _skipped(name, reason):
    return {"name": name, "value": None, "threshold": None, "pass": True,
            "skipped": True, "reason": reason}


def _state_samples(rng, center, count, scale=3.0, t_range=None):
    out = []
    for _ in range(count):
        t = 0.0 if t_range is None else float(rng.uniform(*t_range))
        out.append((center + scale * rng.standard_normal(center.size), t))
    return out


def verify(scenario):
    """Run every applicable check for one scenario and return the report."""
    s = setup(scenario)
    rng = np.random.default_rng(scenario.seed + 1000)
    checks = []
    kind = s.kind
    z_eq = s.z_star(0.0) if kind != "tv-distributed" else None

    if kind in ("standard", "augmented"):
        p = s.objects["problem"]
        checks.append(_check("kkt_fixed_point", np.linalg.norm(s.field(z_eq)), 1e-9))
        if s.cert is None:
            samples = _state_samples(rng, z_eq, 200)
            worst = max(matrix_measure_2(s.field.jacobian(z, t)) for z, t in samples)
            checks.append(_check("euclidean_measure", worst, 1e-12))
            pairs = [(z_eq + rng.standard_normal(z_eq.size), z_eq + rng.standard_normal(z_eq.size))
                     for _ in range(10)]
            cfg = IntegratorConfig.from_horizon(50.0, s.h)
            checks.append(_check("nonexpansion", ct.nonexpansion_check(s.field, pairs, cfg),
                                 ACCEPT["nonexpansion"]))
            checks.append(_skipped("empirical_rate", "no certified rate for a merely convex objective"))
        else:
            c = s.c
            checks.append(_check("metric_lambda_min", s.cert.lambda_min_P, 0.0, ">="))
            checks.append(_check("alpha_times_sigma_max",
                                 s.cert.alpha * p.constraint.sigma_max, 1.0))
            samples = _state_samples(rng, z_eq, 200)
            checks.append(_check("sampled_measure", ct.sampled_measure_check(s.field, s.P, samples),
                                 -c + ACCEPT["measure"]))
            pairs = [(z_eq + 3 * rng.standard_normal(z_eq.size), z_eq + 3 * rng.standard_normal(z_eq.size), 0.0)
                     for _ in range(100)]
            checks.append(_check("integral_contractivity",
                                 ct.integral_contractivity_check(s.field, s.P, c, pairs), ACCEPT["integral"]))
            rpairs = [(z_eq + rng.standard_normal(z_eq.size), z_eq + rng.standard_normal(z_eq.size))
                      for _ in range(2)]
            fitted = ct.empirical_rate(s.field, s.P, rpairs, s.config(10.0 / c))
            checks.append(_check("empirical_rate_over_c", fitted / c, ACCEPT["rate_ratio"], ">="))
            J = s.field.jacobian(z_eq)
            checks.append(_check("hurwitz_margin", -max(np.linalg.eigvals(J).real), 0.0, ">="))
            traj = integrate(s.field, s.z0, s.config(20.0 / c))
            checks.append(_check("converged_weighted_error",
                                 ct.weighted_error(traj.final, z_eq, s.P), ACCEPT["convergence"]))

    elif kind in ("distributed", "distributed-ls"):
        spec, V, n = s.objects["spectrum"], s.V, s.field.meta["n"]
        checks += _spectral_checks(spec, V, n)
        samples = [(z_eq + 3 * rng.standard_normal(z_eq.size), 0.0) for _ in range(50)]
        checks.append(_check("projected_measure", ct.sampled_measure_check(s.field, s.P, samples, V),
                             -s.c + ACCEPT["measure"]))
        header, rows, rep = _tabulate(s, integrate(s.field, s.z0, s.config()), scenario)
        col = {k: rows[:, i] for i, k in enumerate(header)}
        checks.append(_check("dual_sum_drift", rep["max_dual_sum_drift"], ACCEPT["dual_sum"]))
        checks.append(_check("max_node_error", rep["max_node_error"], ACCEPT["convergence"]))
        checks.append(_check("envelope_violation",
                             ct.envelope_violation(col["t"], col["weighted_error"], s.c), ACCEPT["envelope"]))
        fit_T = min(s.T, 200.0)
        fitted = ct.fit_decay_rate(col["t"][col["t"] <= fit_T], col["weighted_error"][col["t"] <= fit_T])
        checks.append(_check("empirical_rate_over_c", fitted / s.c, ACCEPT["rate_ratio"], ">="))

    elif kind in ("tv", "tv-distributed"):
        prob = s.objects["problem"]
        if kind == "tv":
            z_c = s.z_star(0.0)
            samples = _state_samples(rng, z_c, 100, t_range=(0.0, s.T))
            checks.append(_check("sampled_measure", ct.sampled_measure_check(s.field, s.P, samples),
                                 -s.c + ACCEPT["measure"]))
            wb, wg = prob.check_bounds(np.linspace(0.0, min(s.T, 20.0), 41), rng=rng)
            checks.append(_check("bdot_over_beta1", wb - prob.beta1, 1e-8))
            checks.append(_check("dgrad_over_beta2", wg - prob.beta2, 1e-8))
        else:
            checks += _spectral_checks(s.objects["spectrum"], s.V, prob.n)
            dim = s.field.dim
            samples = [(3 * rng.standard_normal(dim), float(rng.uniform(0, s.T))) for _ in range(50)]
            checks.append(_check("projected_measure",
                                 ct.sampled_measure_check(s.field, s.P, samples, s.V),
                                 -s.c + ACCEPT["measure"]))
        _, _, summary = track(scenario)
        checks.append(_check("tracking_violation", summary["max_violation"], summary["slack"]))

    report = {"scenario": scenario.name, "kind": kind,
              **(s.cert.to_dict() if s.cert else {"c": 0.0}),
              "checks": checks, "notes": s.notes}
    if kind == "tv":
        report["notes"] = s.notes + ["tracking drift uses ell_sup for the smoothness constant"]
    report["pass"] = all(ch["pass"] for ch in checks)
    return report


def _spectral_checks(spec, V, n):
    res = spec.identity_residuals()
    out = [_check(k, v, ACCEPT["identity"]) for k, v in res.items()]
    out.append(_check("VVt_minus_I", np.linalg.norm(V @ V.T - np.eye(V.shape[0]), 2), ACCEPT["identity"]))
    sv = singular_values(spec.reduced_incidence(n))
    out.append(_check("sigma_min_minus_lambda2", abs(sv[0] - spec.lambda2), ACCEPT["identity"]))
    out.append(_check("sigma_max_minus_lambdaN", abs(sv[-1] - spec.lambdaN), ACCEPT["identity"]))
    return out


def hurwitz_suite(n_draws=100, seed=0):
    """Saddle matrices ``[[-B, -A^T], [A, 0]]`` with ``B`` SPD and ``A`` of full
    row rank; returns the number of draws reported Hurwitz and the least
    stability margin seen."""
    rng = np.random.default_rng(seed)
    hits, margin = 0, np.inf
    for _ in range(n_draws):
        n = int(rng.integers(2, 8))
        k = int(rng.integers(1, n))
        G = rng.standard_normal((n, n))
        B = G.T @ G + np.eye(n)
        A = rng.standard_normal((k, n))
        M = saddle_matrix(B, A)
        hits += is_hurwitz(M)
        margin = min(margin, -float(np.max(np.linalg.eigvals(M).real)))
    return hits, margin


def verify_saddle_suite(n_draws=100, seed=0):
    hits, margin = hurwitz_suite(n_draws, seed)
    return {"scenario": "saddle-hurwitz", "kind": "saddle-suite",
            "checks": [_check("hurwitz_count", hits, n_draws, ">="),
                       _check("min_stability_margin", margin, 1e-10, ">=")],
            "pass": hits == n_draws and margin >= 1e-10}
