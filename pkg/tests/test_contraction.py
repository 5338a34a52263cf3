import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdcontract.contraction import (
    MetricCertificate,
    TrackingBound,
    alpha_bar_eps,
    alpha_eps,
    augmented_certificate,
    distributed_certificate,
    distributed_ls_certificate,
    distributed_ls_rate,
    distributed_rate,
    empirical_rate,
    envelope_violation,
    fit_decay_rate,
    integral_contractivity_check,
    metric_matrix,
    rate_from_alpha,
    sampled_measure_check,
    standard_certificate,
    tracking_bound,
    tv_certificate,
    tv_distributed_tracking_rho,
    tv_tracking_rho,
)
from pdcontract.dynamics import IntegratorConfig, VectorField, augmented_pd_field, pd_field
from pdcontract.errors import AssumptionViolation
from pdcontract.graphs import complete_graph, graph_spectrum, path_graph, random_connected_graph
from pdcontract.instances import random_convex_problem, random_quadratic_problem
from pdcontract.linalg import is_hurwitz, spd_factors, weighted_matrix_measure
from pdcontract.problems import (
    ConstrainedProblem,
    EqualityConstraint,
    LeastSquaresInstance,
    QuadraticObjective,
    kkt_solve,
    moving_target_problem,
)

seeds = st.integers(0, 2**31 - 1)


def unit_problem():
    return ConstrainedProblem(QuadraticObjective(np.eye(2)), EqualityConstraint([[1, 0]], [1]))


# --- closed forms -----------------------------------------------------------------

def test_unit_constants():
    assert alpha_eps(1, 1, 1, 1, 0.5) == pytest.approx(2 / 11, abs=1e-15)
    cert = standard_certificate(unit_problem(), 0.5)
    assert cert.alpha == pytest.approx(2 / 11, abs=1e-12)
    assert cert.c == pytest.approx(3 / 44, abs=1e-12)
    assert cert.lambda_max_P == pytest.approx(13 / 11, abs=1e-12)
    assert np.array_equal(cert.P, [[1, 0, cert.alpha], [0, 1, 0], [cert.alpha, 0, 1]])


def test_alpha_linear_in_eps():
    assert alpha_eps(1.3, 2.0, 0.7, 1.1, 0.4) == pytest.approx(2 * alpha_eps(1.3, 2.0, 0.7, 1.1, 0.2))


def test_closed_form_validation():
    with pytest.raises(ValueError):
        alpha_eps(1, 1, 1, 1, 1.0)
    with pytest.raises(ValueError):
        alpha_eps(0, 1, 1, 1, 0.5)
    with pytest.raises(AssumptionViolation) as info:
        distributed_rate([1, 0], [1, 1], 2, 2, 0.5)
    assert info.value.assumption == "A6"


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.01, 0.99))
def test_alpha_sigma_below_one(li, ls, s1, s2, eps):
    li, ls = min(li, ls), max(li, ls)
    smin, smax = min(s1, s2), max(s1, s2)
    assert alpha_eps(li, ls, smin, smax, eps) * smax < 1
    assert alpha_bar_eps(1.0, ls, smin, smax, eps) * smax < 1


def test_augmented_closed_form():
    s = np.sqrt(2)
    a = alpha_bar_eps(1.0, 0.0, s, s, 0.5)
    assert a == pytest.approx(1 / (4 + 3 * s / 2), abs=1e-12)
    assert rate_from_alpha(a, s, s) == pytest.approx(a * 0.75 * s * 2 / (s + 1), abs=1e-12)
    assert alpha_bar_eps(1e-9, 0.0, s, s, 0.5) < 1e-9


def test_distributed_rate_examples():
    assert distributed_rate([1, 1], [1, 1], 2, 2, 0.5) == pytest.approx(1 / 11, abs=1e-12)
    spec = graph_spectrum(path_graph(2))
    cert = distributed_certificate([1, 1], [1, 1], spec, 1, 0.5)
    assert cert.c == pytest.approx(1 / 11, abs=1e-12)
    assert distributed_rate([1] * 6, [1] * 6, 6, 6, 0.5) > distributed_rate([1] * 6, [1] * 6, *_path_l(6), 0.5)


def _path_l(N):
    s = graph_spectrum(path_graph(N))
    return s.lambda2, s.lambdaN


def test_distributed_ls_rate_examples():
    # 3/4 * eps * (lambdaN lambda2^2 / (lambdaN + 1)) = 2 eps, denominator 4 + 6 + 9
    assert distributed_ls_rate(1.0, 2, 2, 1.0, 1.0, 0.5) == pytest.approx(1 / 19, abs=1e-12)
    assert distributed_ls_rate(1.0, 2, 2, 1.0, 1.0, 0.25) == pytest.approx(0.5 / 19, abs=1e-12)
    rates = [distributed_ls_rate(1.0, 2, 2, r, 1.0, 0.5) for r in (0.5, 1.0, 2.0)]
    assert rates[0] > rates[1] > rates[2]
    ls = LeastSquaresInstance.__new__(LeastSquaresInstance)
    ls.H, ls.z = np.array([[1.0], [1.0]]), np.array([0.3, -2.0])
    cert = distributed_ls_certificate(ls, graph_spectrum(path_graph(2)), 1.0, 0.5)
    assert cert.c == pytest.approx(1 / 19, abs=1e-12)


def test_tracking_rho_examples():
    assert tv_tracking_rho(1, 1, 1, 1, 0, 0, 13 / 11) == 0
    assert tv_tracking_rho(1, 1, 1, 1, 0, 0.1, 13 / 11) == pytest.approx(0.3 * 13 / 11, abs=1e-12)
    r = tv_tracking_rho(1.5, 2, 0.8, 1.2, 0.1, 0.2, 1.1)
    assert tv_tracking_rho(1.5, 2, 0.8, 1.2, 0.2, 0.4, 1.1) == pytest.approx(2 * r)
    assert tv_distributed_tracking_rho([0, 0], [1, 1], [1, 1], 2, 2, 1.2) == 0
    lam = 1.0909
    assert tv_distributed_tracking_rho([0.1, 0.1], [1, 1], [1, 1], 2, 2, lam) == pytest.approx(0.35 * lam)


def test_bound_curve():
    b = TrackingBound(rho=0.3, c=0.5, delta0=2.0)
    assert b(0.0) == pytest.approx(2.0)
    assert b(200.0) == pytest.approx(0.6)
    assert np.all(np.diff(b(np.linspace(0, 20, 50))) < 0)
    assert TrackingBound(0.0, 0.5, 2.0)(3.0) == pytest.approx(2 * np.exp(-1.5))
    assert np.allclose(TrackingBound(0.3, 0.5, 0.6)(np.linspace(0, 9, 10)), 0.6)
    with pytest.raises(ValueError):
        b(-1.0)


def test_certificate_requires_positive_rate():
    with pytest.raises(ValueError):
        MetricCertificate("standard", 0.5, 0.1, np.eye(2), 0.0)


def test_standard_rejects_convex():
    with pytest.raises(AssumptionViolation) as info:
        standard_certificate(random_convex_problem(0))
    assert info.value.assumption == "A2"
    assert "augmented" in str(info.value)


def test_augmented_kernel_overlap():
    p = ConstrainedProblem(QuadraticObjective(np.diag([1.0, 0.0, 0.0])),
                           EqualityConstraint([[0, 1, 0]], [0]))
    with pytest.raises(AssumptionViolation) as info:
        augmented_certificate(p, 1.0)
    assert info.value.assumption == "A4"


# --- certificates against the dynamics ---------------------------------------------

@settings(max_examples=25, deadline=None)
@given(seeds)
def test_standard_certificate_sound(seed):
    p = random_quadratic_problem(seed)
    cert = standard_certificate(p)
    F = pd_field(p)
    assert cert.lambda_min_P > 0
    assert weighted_matrix_measure(F.jacobian(np.zeros(F.dim)), cert.P) <= -cert.c + 1e-8


def test_sampled_measure_examples():
    p = random_convex_problem(1)
    F = pd_field(p)
    rng = np.random.default_rng(0)
    samples = [(rng.standard_normal(F.dim), 0.0) for _ in range(10)]
    assert sampled_measure_check(F, np.eye(F.dim), samples) == pytest.approx(0, abs=1e-12)


def test_integral_check_semantics():
    p = random_quadratic_problem(3)
    cert = standard_certificate(p)
    F = pd_field(p)
    rng = np.random.default_rng(0)
    z = rng.standard_normal(F.dim)
    assert integral_contractivity_check(F, cert.P, cert.c, [(z, z, 0.0)]) == 0.0
    pairs = [(rng.standard_normal(F.dim), rng.standard_normal(F.dim), 0.0) for _ in range(100)]
    assert integral_contractivity_check(F, cert.P, cert.c, pairs) <= 1e-8
    # along the least contracting direction an inflated rate shows up as positive slack
    S, S_inv = spd_factors(cert.P)
    M = S @ F.jacobian(z) @ S_inv
    w, U = np.linalg.eigh(0.5 * (M + M.T))
    worst = [(z + S_inv @ U[:, -1], z, 0.0)]
    assert integral_contractivity_check(F, cert.P, -w[-1], worst) == pytest.approx(0, abs=1e-12)
    assert integral_contractivity_check(F, cert.P, -2 * w[-1], worst) > 0


def test_empirical_rate_exact_exponential():
    F = VectorField(2, lambda z, t: -z, affine=(-np.eye(2), np.zeros(2)))
    rate = empirical_rate(F, np.eye(2), [([1.0, 0.0], [0.0, 1.0]), ([2.0, 2.0], [0.0, 0.0])],
                          IntegratorConfig(0.01, 10.0))
    assert rate == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(ValueError):
        empirical_rate(F, np.eye(2), [([1.0, 1.0], [1.0, 1.0])], IntegratorConfig(0.01, 1.0))


def test_fit_truncates_below_floor():
    t = np.linspace(0, 100, 1001)
    d = np.exp(-0.5 * t)
    d[t > 60] = 1e-16   # round-off plateau
    assert fit_decay_rate(t, d) == pytest.approx(0.5, rel=1e-6)


def test_envelope_violation():
    t = np.linspace(0, 5, 6)
    assert envelope_violation(t, np.exp(-t), 0.5) <= 0
    assert envelope_violation(t, np.exp(-0.1 * t), 0.5) > 0


def test_tracking_bound_uses_problem_constants():
    tvp = moving_target_problem(np.eye(2), [0, 0], [1, 0], [[1, 0]], [1], [1], amp_r=0.0, amp_b=0.0)
    cert = tv_certificate(tvp, 0.5)
    assert cert.c == pytest.approx(3 / 44)
    b = tracking_bound(tvp, cert, 1.0)
    assert b.rho == 0 and b.ultimate == 0


def test_augmented_certificate_on_complementary_kernels():
    for seed in range(20):
        p = random_convex_problem(seed)
        cert = augmented_certificate(p, 1.0)
        J = augmented_pd_field(p, 1.0).jacobian(np.zeros(p.n + p.k))
        assert weighted_matrix_measure(J, cert.P) <= -cert.c + 1e-8


def test_augmented_metric_not_universal():
    # Generic rank-deficient Q: the closed-form augmented metric need not
    # contract at the stated rate, although the flow itself is stable.
    rng = np.random.default_rng(4)
    G = rng.standard_normal((2, 4))
    A = rng.standard_normal((2, 4))
    p = ConstrainedProblem(QuadraticObjective(G.T @ G), EqualityConstraint(A, np.zeros(2)))
    cert = augmented_certificate(p, 1.0)
    J = augmented_pd_field(p, 1.0).jacobian(np.zeros(6))
    assert weighted_matrix_measure(J, cert.P) > -cert.c
    assert is_hurwitz(J)
    x, nu = kkt_solve(p.objective, p.constraint)
    assert np.allclose(x, 0) and np.allclose(nu, 0)


def test_rates_monotone_over_graphs():
    for seed in range(5):
        g = random_connected_graph(6, 0.4, seed)
        s = graph_spectrum(g)
        full = graph_spectrum(complete_graph(6))
        assert s.lambda2 <= full.lambda2 + 1e-12
        assert distributed_rate([1] * 6, [2] * 6, s.lambda2, s.lambdaN, 0.9) > 0
