"""Optimization problem containers and exact-solution oracles."""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    AssumptionViolation,
    ConvergenceError,
    DimensionError,
    SingularMatrixError,
)
from .linalg import is_symmetric, singular_values, solve_linear, sym_eig

RANK_TOL = 1e-10
DT_STEP = 1e-5


def _vec(v, name="vector"):
    v = np.asarray(v, dtype=float).ravel()
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def central_gradient(fun, x, h=1e-6):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


def central_jacobian(fun, x, h=1e-6):
    """Central finite-difference Jacobian of a vector function."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((np.asarray(fun(x + e)) - np.asarray(fun(x - e))) / (2 * h))
    return np.column_stack(cols)


@dataclass(frozen=True)
class SmoothObjective:
    """Twice-differentiable objective with declared curvature bounds.

    ``ell_inf`` is the strong-convexity constant (0 for merely convex) and
    ``ell_sup`` the Lipschitz constant of the gradient. They are inputs;
    :meth:`validate` spot-checks them against sampled Hessians.
    """

    dim: int
    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]
    ell_inf: float
    ell_sup: float

    def __post_init__(self):
        if self.ell_inf < 0 or self.ell_sup <= 0:
            raise ValueError("need ell_inf >= 0 and ell_sup > 0")
        if self.ell_inf > self.ell_sup:
            raise ValueError(f"ell_inf = {self.ell_inf} exceeds ell_sup = {self.ell_sup}")

    def validate(self, rng=None, n_samples=20, scale=1.0, tol=1e-8):
        """Check Hessian symmetry/spectrum and the gradient at random points.

        Returns the list of sampled points; raises ``AssumptionViolation``
        if the declared constants are contradicted.
        """
        rng = np.random.default_rng(rng)
        pts = [scale * rng.standard_normal(self.dim) for _ in range(n_samples)]
        for x in pts:
            H = np.asarray(self.hess(x), dtype=float)
            if not is_symmetric(H, rtol=1e-10):
                raise AssumptionViolation("smoothness", "sampled Hessian is not symmetric")
            w = np.linalg.eigvalsh(0.5 * (H + H.T))
            if w[0] < self.ell_inf - tol * (1 + abs(self.ell_inf)) or w[-1] > self.ell_sup + tol * (1 + self.ell_sup):
                raise AssumptionViolation(
                    "curvature",
                    f"Hessian spectrum [{w[0]:.4g}, {w[-1]:.4g}] outside "
                    f"[{self.ell_inf:.4g}, {self.ell_sup:.4g}]",
                )
            g = np.asarray(self.grad(x))
            g_fd = central_gradient(self.value, x, h=1e-5 * (1 + np.linalg.norm(x)))
            if np.linalg.norm(g - g_fd) > 1e-5 * (1 + np.linalg.norm(g)):
                raise AssumptionViolation("smoothness", "gradient disagrees with finite differences")
        return pts


class QuadraticObjective:
    """``f(x) = 1/2 x^T Q x + q^T x + const`` with ``Q`` symmetric PSD."""

    def __init__(self, Q, q=None, const=0.0):
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        if Q.shape[0] != Q.shape[1]:
            raise DimensionError(f"Q must be square, got {Q.shape}")
        if not is_symmetric(Q):
            raise ValueError("Q must be symmetric")
        n = Q.shape[0]
        q = np.zeros(n) if q is None else _vec(q, "q")
        if q.size != n:
            raise DimensionError(f"q has length {q.size}, expected {n}")
        self.Q = 0.5 * (Q + Q.T)
        self.q = q
        self.const = float(const)
        self.dim = n
        if self.spectrum[0] < -1e-10:
            raise ValueError(f"Q is not positive semidefinite (lambda_min = {self.spectrum[0]:.3e})")

    @cached_property
    def spectrum(self):
        return np.linalg.eigvalsh(self.Q)

    @property
    def ell_inf(self):
        return max(float(self.spectrum[0]), 0.0)

    @property
    def ell_sup(self):
        return float(self.spectrum[-1])

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.Q @ x + self.q @ x + self.const)

    def grad(self, x):
        return self.Q @ np.asarray(x, dtype=float) + self.q

    def hess(self, x=None):
        return self.Q

    def as_smooth(self):
        return SmoothObjective(self.dim, self.value, self.grad, self.hess,
                               self.ell_inf, max(self.ell_sup, 1e-300))

    def __repr__(self):
        return f"QuadraticObjective(dim={self.dim}, ell_inf={self.ell_inf:.4g}, ell_sup={self.ell_sup:.4g})"


class EqualityConstraint:
    """``A x = b`` with ``A`` (k x n), ``1 <= k < n`` and full row rank."""

    def __init__(self, A, b):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = _vec(b, "b")
        k, n = A.shape
        if k == 0:
            raise ValueError("unconstrained problems (k = 0) are not supported")
        if k >= n:
            raise DimensionError(f"need fewer constraints than variables, got A of shape {A.shape}")
        if b.size != k:
            raise DimensionError(f"b has length {b.size}, expected {k}")
        sv = singular_values(A)
        if sv[0] <= RANK_TOL:
            raise AssumptionViolation("full row rank", f"sigma_min(A) = {sv[0]:.3e}")
        self.A = A
        self.b = b
        self.sigma_min = float(sv[0])
        self.sigma_max = float(sv[-1])

    @property
    def shape(self):
        return self.A.shape


@dataclass(frozen=True)
class ConstrainedProblem:
    """``min f(x)  s.t.  A x = b``."""

    objective: object
    constraint: EqualityConstraint

    def __post_init__(self):
        if self.objective.dim != self.constraint.A.shape[1]:
            raise DimensionError(
                f"objective dimension {self.objective.dim} vs constraint {self.constraint.A.shape}"
            )

    @property
    def n(self):
        return self.constraint.A.shape[1]

    @property
    def k(self):
        return self.constraint.A.shape[0]


class LeastSquaresInstance:
    """Data ``(H, z)`` of ``min ||z - H x||^2`` with ``H`` of full column rank.

    Row ``i`` of ``H`` is the regressor ``h_i`` held by node ``i``.
    """

    def __init__(self, H, z):
        H = np.atleast_2d(np.asarray(H, dtype=float))
        z = _vec(z, "z")
        N, n = H.shape
        if z.size != N:
            raise DimensionError(f"z has length {z.size}, expected {N}")
        if n >= N:
            raise DimensionError(f"need more rows than columns, got H of shape {H.shape}")
        self.H = H
        self.z = z
        self.sigma_min = float(np.sqrt(max(np.linalg.eigvalsh(H.T @ H)[0], 0.0)))
        if self.sigma_min <= RANK_TOL:
            raise SingularMatrixError("H is not of full column rank")

    @property
    def N(self):
        return self.H.shape[0]

    @property
    def n(self):
        return self.H.shape[1]

    @property
    def h_max_sq(self):
        return float(np.max(np.sum(self.H ** 2, axis=1)))

    def node_objectives(self):
        """Per-node ``1/2 (h_i^T x - z_i)^2`` as quadratics."""
        return [QuadraticObjective(np.outer(h, h), -zi * h, 0.5 * zi * zi)
                for h, zi in zip(self.H, self.z)]

    def block_hessian(self):
        """``diag(h_1 h_1^T, ..., h_N h_N^T)``."""
        n = self.n
        D = np.zeros((self.N * n, self.N * n))
        for i, h in enumerate(self.H):
            D[i * n:(i + 1) * n, i * n:(i + 1) * n] = np.outer(h, h)
        return D


def kkt_solve(objective, constraint):
    """Exact primal-dual pair of a quadratic equality-constrained program.

    Solves ``Q x + q + A^T nu = 0``, ``A x = b`` as one saddle system.

    Returns
    -------
    x_star, nu_star : ndarray
    """
    Q, q = objective.Q, objective.q
    A, b = constraint.A, constraint.b
    k, n = A.shape
    K = np.block([[Q, A.T], [A, np.zeros((k, k))]])
    try:
        sol = solve_linear(K, np.concatenate([-q, b]))
    except SingularMatrixError as exc:
        raise SingularMatrixError(f"KKT matrix is singular: {exc}") from exc
    return sol[:n], sol[n:]


def ls_solution(ls):
    """``x* = (H^T H)^{-1} H^T z`` via the normal equations."""
    return solve_linear(ls.H.T @ ls.H, ls.H.T @ ls.z)


def distributed_optimum(objectives, x0=None, tol=1e-11, max_iter=100):
    """Minimizer of ``sum_i f_i`` over a shared variable.

    Quadratic node objectives are summed and solved in closed form; anything
    else goes through a damped Newton iteration on the aggregate.
    """
    objectives = list(objectives)
    if not objectives:
        raise ValueError("no objectives given")
    n = objectives[0].dim
    if any(o.dim != n for o in objectives):
        raise DimensionError("node objectives have different dimensions")
    if all(isinstance(o, QuadraticObjective) for o in objectives):
        Qs = sum(o.Q for o in objectives)
        if np.linalg.eigvalsh(Qs)[0] <= 1e-12 * (1 + np.abs(Qs).max()):
            raise AssumptionViolation("A5", "aggregate objective is not strongly convex")
        return solve_linear(Qs, -sum(o.q for o in objectives))

    def total(x):
        return sum(o.value(x) for o in objectives)

    def grad(x):
        return sum(np.asarray(o.grad(x)) for o in objectives)

    x = np.zeros(n) if x0 is None else _vec(x0).copy()
    for _ in range(max_iter):
        g = grad(x)
        if np.linalg.norm(g) <= tol:
            return x
        H = sum(np.asarray(o.hess(x)) for o in objectives)
        step = solve_linear(H, -g)
        f0, s = total(x), 1.0
        while total(x + s * step) > f0 + 1e-4 * s * (g @ step) and s > 1e-10:
            s *= 0.5
        x = x + s * step
    if np.linalg.norm(grad(x)) <= 1e-9:
        return x
    raise ConvergenceError(f"Newton did not converge in {max_iter} iterations")


def ell_star(ls, L, rho=1.0):
    """``lambda_min(diag(h_i h_i^T) + rho (L kron I_n))``.

    ``rho = 1`` gives the unit-gain constant; other gains give the curvature
    of the augmented least-squares dynamics with that gain.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    L = np.asarray(L, dtype=float)
    M = ls.block_hessian() + rho * np.kron(L, np.eye(ls.n))
    w, _ = sym_eig(M)
    if w[0] <= 1e-12:
        raise AssumptionViolation(
            "kernel overlap", f"ker(diag(h_i h_i^T)) meets ker(L kron I): lambda_min = {w[0]:.3e}"
        )
    return float(w[0])


# --- time-varying problems -------------------------------------------------

@dataclass
class TimeVaryingProblem:
    """``min f(x, t)  s.t.  A x = b(t)``.

    ``dgrad_dt`` is the time derivative of the gradient; when omitted a
    central difference in ``t`` is used. ``frozen_objective(t)``, when
    provided, returns the frozen objective as a :class:`QuadraticObjective`
    and enables the exact optimizer-trajectory oracle.
    """

    dim: int
    grad: Callable[[np.ndarray, float], np.ndarray]
    hess: Callable[[np.ndarray, float], np.ndarray]
    A: np.ndarray
    b: Callable[[float], np.ndarray]
    bdot: Callable[[float], np.ndarray]
    beta1: float
    beta2: float
    ell_inf: float
    ell_sup: float
    dgrad_dt_fn: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    frozen_objective: Optional[Callable[[float], QuadraticObjective]] = None
    label: str = "tv"
    constraint: EqualityConstraint = field(init=False, repr=False)

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.constraint = EqualityConstraint(self.A, self.b(0.0))
        if self.A.shape[1] != self.dim:
            raise DimensionError("A does not match the problem dimension")
        if self.ell_inf <= 0 or self.ell_sup < self.ell_inf:
            raise ValueError("need 0 < ell_inf <= ell_sup")
        if self.beta1 < 0 or self.beta2 < 0:
            raise ValueError("beta bounds must be nonnegative")

    @property
    def sigma_min(self):
        return self.constraint.sigma_min

    @property
    def sigma_max(self):
        return self.constraint.sigma_max

    def dgrad_dt(self, x, t):
        if self.dgrad_dt_fn is not None:
            return self.dgrad_dt_fn(x, t)
        return (self.grad(x, t + DT_STEP) - self.grad(x, t - DT_STEP)) / (2 * DT_STEP)

    def frozen(self, t):
        """The static problem at time ``t`` (quadratic families only)."""
        if self.frozen_objective is None:
            raise NotImplementedError("no frozen-objective oracle for this family")
        return ConstrainedProblem(self.frozen_objective(t), EqualityConstraint(self.A, self.b(t)))

    def optimizer(self, t):
        """Exact ``(x*(t), nu*(t))`` of the frozen problem."""
        p = self.frozen(t)
        return kkt_solve(p.objective, p.constraint)

    def check_bounds(self, times, rng=None, n_points=5, scale=1.0, tol=1e-8):
        """Sampled verification of ``||b'|| <= beta1``, ``||d/dt grad f|| <= beta2``
        and of ``dgrad_dt`` against a finite difference in ``t``.

        Returns the largest observed ``(||b'||, ||d/dt grad f||)``.
        """
        rng = np.random.default_rng(rng)
        worst_b, worst_g = 0.0, 0.0
        for t in times:
            worst_b = max(worst_b, float(np.linalg.norm(self.bdot(t))))
            for _ in range(n_points):
                x = scale * rng.standard_normal(self.dim)
                d = np.asarray(self.dgrad_dt(x, t))
                worst_g = max(worst_g, float(np.linalg.norm(d)))
                fd = (self.grad(x, t + DT_STEP) - self.grad(x, t - DT_STEP)) / (2 * DT_STEP)
                if np.linalg.norm(fd - d) > 1e-5 * (1 + np.linalg.norm(d)):
                    raise AssumptionViolation("time derivative", f"d/dt grad f inconsistent at t = {t}")
        if worst_b > self.beta1 + tol or worst_g > self.beta2 + tol:
            raise AssumptionViolation(
                "rate bounds", f"observed ({worst_b:.4g}, {worst_g:.4g}) exceed "
                f"(beta1, beta2) = ({self.beta1:.4g}, {self.beta2:.4g})")
        return worst_b, worst_g


def moving_target_problem(Q, r0, u, A, b0, w, amp_r=0.1, amp_b=0.1, omega=1.0):
    """``f(x,t) = 1/2 (x - r(t))^T Q (x - r(t))`` subject to ``A x = b(t)``.

    ``r(t) = r0 + amp_r sin(omega t) u`` and ``b(t) = b0 + amp_b sin(omega t) w``.
    The rate bounds are the exact suprema ``beta1 = amp_b omega ||w||`` and
    ``beta2 = ||Q|| amp_r omega ||u||``.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    r0, u, b0, w = (_vec(v) for v in (r0, u, b0, w))
    A = np.atleast_2d(np.asarray(A, dtype=float))
    quad = QuadraticObjective(Q)
    n = quad.dim

    def r(t):
        return r0 + amp_r * np.sin(omega * t) * u

    def rdot(t):
        return amp_r * omega * np.cos(omega * t) * u

    return TimeVaryingProblem(
        dim=n,
        grad=lambda x, t: Q @ (np.asarray(x) - r(t)),
        hess=lambda x, t: Q,
        A=A,
        b=lambda t: b0 + amp_b * np.sin(omega * t) * w,
        bdot=lambda t: amp_b * omega * np.cos(omega * t) * w,
        beta1=float(amp_b * abs(omega) * np.linalg.norm(w)),
        beta2=float(quad.ell_sup * amp_r * abs(omega) * np.linalg.norm(u)),
        ell_inf=quad.ell_inf,
        ell_sup=quad.ell_sup,
        dgrad_dt_fn=lambda x, t: -Q @ rdot(t),
        frozen_objective=lambda t: QuadraticObjective(Q, -Q @ r(t)),
        label="moving-target",
    )


@dataclass
class TVNodeObjective:
    """One agent's time-varying objective ``f_i(x, t)``."""

    dim: int
    grad: Callable[[np.ndarray, float], np.ndarray]
    hess: Callable[[np.ndarray, float], np.ndarray]
    dgrad_dt: Callable[[np.ndarray, float], np.ndarray]
    ell_inf: float
    ell_sup: float
    beta1: float
    frozen_objective: Optional[Callable[[float], QuadraticObjective]] = None


def moving_target_node(Q, r0, u, amp=0.1, omega=1.0, phase=0.0):
    """``f_i(x,t) = 1/2 (x - r_i(t))^T Q (x - r_i(t))``, ``r_i(t) = r0 + amp sin(omega t + phase) u``."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    r0, u = _vec(r0), _vec(u)
    quad = QuadraticObjective(Q)

    def r(t):
        return r0 + amp * np.sin(omega * t + phase) * u

    def rdot(t):
        return amp * omega * np.cos(omega * t + phase) * u

    return TVNodeObjective(
        dim=quad.dim,
        grad=lambda x, t: Q @ (np.asarray(x) - r(t)),
        hess=lambda x, t: Q,
        dgrad_dt=lambda x, t: -Q @ rdot(t),
        ell_inf=quad.ell_inf,
        ell_sup=quad.ell_sup,
        beta1=float(quad.ell_sup * amp * abs(omega) * np.linalg.norm(u)),
        frozen_objective=lambda t: QuadraticObjective(Q, -Q @ r(t)),
    )


@dataclass
class TVDistributedProblem:
    """``min sum_i f_i(x^i, t)`` subject to consensus over a fixed graph."""

    nodes: Sequence[TVNodeObjective]
    spectrum: object  # graphs.LaplacianSpectrum

    def __post_init__(self):
        self.nodes = list(self.nodes)
        if len(self.nodes) != self.spectrum.N:
            raise DimensionError(f"{len(self.nodes)} node objectives for a graph with {self.spectrum.N} nodes")
        if len({nd.dim for nd in self.nodes}) != 1:
            raise DimensionError("node objectives have different dimensions")
        if any(nd.ell_inf <= 0 for nd in self.nodes):
            raise AssumptionViolation("A6", "every node objective must be strongly convex")

    @property
    def n(self):
        return self.nodes[0].dim

    @property
    def N(self):
        return len(self.nodes)

    @property
    def ell_inf(self):
        return np.array([nd.ell_inf for nd in self.nodes])

    @property
    def ell_sup(self):
        return np.array([nd.ell_sup for nd in self.nodes])

    @property
    def beta1(self):
        return np.array([nd.beta1 for nd in self.nodes])

    def optimizer(self, t):
        """Frozen consensus optimizer ``x*(t)`` (quadratic node families)."""
        if any(nd.frozen_objective is None for nd in self.nodes):
            raise NotImplementedError("no frozen-objective oracle for these nodes")
        return distributed_optimum([nd.frozen_objective(t) for nd in self.nodes])

    def stacked_gradient(self, X, t):
        """Gradient of ``sum_i f_i(x^i, t)`` for a stacked state of length ``nN``."""
        n = self.n
        return np.concatenate([nd.grad(X[i * n:(i + 1) * n], t) for i, nd in enumerate(self.nodes)])
