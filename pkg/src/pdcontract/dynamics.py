"""Primal-dual vector fields and a fixed-step RK4 integrator.

State layout is always primal block first, dual block second. For the
distributed fields the primal block stacks the agents' copies
``x = (x^1, ..., x^N)`` and the dual block ``nu = (nu^1, ..., nu^N)``. All
distributed fields use the Laplacian form ``nu' = (L kron I_n) x``.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, DivergenceError
from .linalg import saddle_matrix
from .problems import QuadraticObjective, central_jacobian

DEFAULT_GUARD = 1e9


@dataclass(frozen=True)
class VectorField:
    """``z' = F(z, t)`` with optional analytic Jacobian.

    ``affine`` is set to ``(M, c)`` when ``F(z, t) = M z + c`` with constant
    ``M`` and ``c``; the integrator then uses the exact RK4 propagator of the
    linear system instead of four stage evaluations per step.
    """

    dim: int
    rhs: Callable[[np.ndarray, float], np.ndarray]
    jac: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    label: str = ""
    affine: Optional[tuple] = None
    meta: dict = field(default_factory=dict)

    def __call__(self, z, t=0.0):
        return self.rhs(np.asarray(z, dtype=float), t)

    def jacobian(self, z, t=0.0):
        z = np.asarray(z, dtype=float)
        if self.jac is not None:
            return self.jac(z, t)
        return fd_jacobian(self, z, t)


def fd_jacobian(field, z, t=0.0):
    """Central-difference Jacobian with step ``1e-6 (1 + ||z||)``."""
    z = np.asarray(z, dtype=float)
    h = 1e-6 * (1.0 + np.linalg.norm(z))
    return central_jacobian(lambda v: field.rhs(v, t), z, h=h)


@dataclass(frozen=True)
class IntegratorConfig:
    """Step ``h`` and horizon ``T`` with ``T / h`` integral."""

    h: float
    T: float
    guard: float = DEFAULT_GUARD
    t0: float = 0.0

    def __post_init__(self):
        if not (self.h > 0 and self.T > 0):
            raise ValueError("h and T must be positive")
        if self.h > self.T * (1 + 1e-12):
            raise ValueError(f"step h = {self.h} exceeds horizon T = {self.T}")
        n = self.T / self.h
        if abs(n - round(n)) > 1e-6 * max(1.0, n):
            raise ValueError(f"T / h = {n} is not an integer step count")

    @property
    def n_steps(self):
        return int(round(self.T / self.h))

    @classmethod
    def from_horizon(cls, T, h_max, **kw):
        """Largest step ``<= h_max`` that divides ``T`` evenly."""
        n = max(1, math.ceil(T / h_max - 1e-9))
        return cls(h=T / n, T=T, **kw)


def default_step(ell_sup, sigma_max, safety=0.1):
    """Step satisfying ``h (ell_sup + sigma_max^2 + 1) <= safety``."""
    return safety / (ell_sup + sigma_max ** 2 + 1.0)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    label: str = ""

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise DimensionError("times and states differ in length")

    @property
    def final(self):
        return self.states[-1]

    def __len__(self):
        return len(self.times)


def _rk4_propagator(M, c, h):
    m = M.shape[0]
    hM = h * M
    hM2 = hM @ hM
    hM3 = hM2 @ hM
    S = np.eye(m) + hM + hM2 / 2 + hM3 / 6 + hM3 @ hM / 24
    s = h * (c + hM @ c / 2 + hM2 @ c / 6 + hM3 @ c / 24)
    return S, s


def integrate(field, z0, cfg, store_every=1):
    """Classical fourth-order Runge-Kutta with fixed step.

    Raises
    ------
    DivergenceError
        When the state norm exceeds ``cfg.guard`` or turns non-finite; the
        partial trajectory is attached to the exception.
    """
    z = np.array(z0, dtype=float).ravel()
    if z.size != field.dim:
        raise DimensionError(f"initial state has length {z.size}, field expects {field.dim}")
    if store_every < 1:
        raise ValueError("store_every must be >= 1")
    if field.affine is not None:
        return _integrate_affine(field, z, cfg, store_every)
    h, n_steps = cfg.h, cfg.n_steps
    F = field.rhs
    times, states = [cfg.t0], [z.copy()]
    for j in range(n_steps):
        t = cfg.t0 + j * h
        k1 = F(z, t)
        k2 = F(z + 0.5 * h * k1, t + 0.5 * h)
        k3 = F(z + 0.5 * h * k2, t + 0.5 * h)
        k4 = F(z + h * k3, t + h)
        z_new = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        nrm = np.linalg.norm(z_new)
        if not np.isfinite(nrm) or nrm > cfg.guard:
            raise DivergenceError(
                f"state norm {nrm:.3e} exceeded guard {cfg.guard:.1e} at t = {t + h:.6g}",
                times=times, states=states)
        z = z_new
        if (j + 1) % store_every == 0 or j + 1 == n_steps:
            times.append(cfg.t0 + (j + 1) * h)
            states.append(z.copy())
    return Trajectory(np.array(times), np.array(states), field.label)


def _integrate_affine(field, z, cfg, store_every, block=512):
    # exact RK4 step of z' = M z + c, guard checked once per block
    S, s = _rk4_propagator(*field.affine, cfg.h)
    n_steps = cfg.n_steps
    out = np.empty((n_steps + 1, z.size))
    out[0] = z
    for start in range(0, n_steps, block):
        stop = min(start + block, n_steps)
        for j in range(start, stop):
            out[j + 1] = S @ out[j] + s
        seg = out[start + 1:stop + 1]
        norms = np.sqrt(np.einsum("ij,ij->i", seg, seg))
        bad = np.flatnonzero(~np.isfinite(norms) | (norms > cfg.guard))
        if bad.size:
            last = start + bad[0]
            t_bad = cfg.t0 + (last + 1) * cfg.h
            raise DivergenceError(
                f"state norm {norms[bad[0]]:.3e} exceeded guard {cfg.guard:.1e} at t = {t_bad:.6g}",
                times=cfg.t0 + cfg.h * np.arange(last + 1), states=out[:last + 1])
    idx = np.arange(0, n_steps + 1, store_every)
    if idx[-1] != n_steps:
        idx = np.append(idx, n_steps)
    return Trajectory(cfg.t0 + cfg.h * idx, out[idx], field.label)


# --- the six fields ----------------------------------------------------------

def pd_field(problem):
    """``x' = -grad f(x) - A^T nu``, ``nu' = A x - b``."""
    f = problem.objective
    A, b = problem.constraint.A, problem.constraint.b
    k, n = A.shape

    def rhs(z, t=0.0):
        x, nu = z[:n], z[n:]
        return np.concatenate([-f.grad(x) - A.T @ nu, A @ x - b])

    def jac(z, t=0.0):
        return saddle_matrix(np.asarray(f.hess(z[:n])), A)

    affine = None
    if isinstance(f, QuadraticObjective):
        affine = (saddle_matrix(f.Q, A), np.concatenate([-f.q, -b]))
    return VectorField(n + k, rhs, jac, "primal-dual", affine,
                       {"n": n, "k": k})


def augmented_pd_field(problem, rho):
    """Primal-dual flow of the augmented Lagrangian with gain ``rho``."""
    if rho <= 0:
        raise ValueError("augmentation gain must be positive")
    f = problem.objective
    A, b = problem.constraint.A, problem.constraint.b
    k, n = A.shape
    AtA, Atb = A.T @ A, A.T @ b

    def rhs(z, t=0.0):
        x, nu = z[:n], z[n:]
        return np.concatenate([-f.grad(x) - A.T @ nu - rho * (AtA @ x) + rho * Atb, A @ x - b])

    def jac(z, t=0.0):
        return saddle_matrix(np.asarray(f.hess(z[:n])) + rho * AtA, A)

    affine = None
    if isinstance(f, QuadraticObjective):
        affine = (saddle_matrix(f.Q + rho * AtA, A),
                  np.concatenate([-f.q + rho * Atb, -b]))
    return VectorField(n + k, rhs, jac, "augmented primal-dual", affine,
                       {"n": n, "k": k, "rho": rho})


def _stacked(objectives, n):
    objectives = list(objectives)
    for o in objectives:
        if o.dim != n:
            raise DimensionError(f"node objective of dimension {o.dim}, expected {n}")

    def grad(X):
        return np.concatenate([o.grad(X[i * n:(i + 1) * n]) for i, o in enumerate(objectives)])

    def hess(X):
        H = np.zeros((X.size, X.size))
        for i, o in enumerate(objectives):
            H[i * n:(i + 1) * n, i * n:(i + 1) * n] = o.hess(X[i * n:(i + 1) * n])
        return H

    return grad, hess


def _distributed(grad, hess, spec, n, rho, label, affine_parts, meta):
    N = spec.N
    if N < 2:
        raise DimensionError("distributed dynamics need at least two agents")
    Lk = np.kron(spec.L, np.eye(n))
    m = N * n

    def rhs(z, t=0.0):
        x, nu = z[:m], z[m:]
        dx = -grad(x, t) - Lk @ nu
        if rho:
            dx = dx - rho * (Lk @ x)
        return np.concatenate([dx, Lk @ x])

    def jac(z, t=0.0):
        H = hess(z[:m], t) + (rho * Lk if rho else 0.0)
        return np.block([[-H, -Lk], [Lk, np.zeros((m, m))]])

    affine = None
    if affine_parts is not None:
        Hq, gq = affine_parts
        H = Hq + (rho * Lk if rho else 0.0)
        affine = (np.block([[-H, -Lk], [Lk, np.zeros((m, m))]]),
                  np.concatenate([-gq, np.zeros(m)]))
    return VectorField(2 * m, rhs, jac, label, affine,
                       dict(meta, n=n, N=N, rho=rho, laplacian_kron=Lk))


def distributed_pd_field(objectives, spec, n):
    """``x' = -grad f(x) - (L kron I) nu``, ``nu' = (L kron I) x``."""
    objectives = list(objectives)
    if len(objectives) != spec.N:
        raise DimensionError(f"{len(objectives)} objectives for {spec.N} agents")
    grad, hess = _stacked(objectives, n)
    affine_parts = None
    if all(isinstance(o, QuadraticObjective) for o in objectives):
        Hq = hess(np.zeros(spec.N * n))
        affine_parts = (Hq, np.concatenate([o.q for o in objectives]))
    return _distributed(lambda x, t: grad(x), lambda x, t: hess(x), spec, n, 0.0,
                        "distributed primal-dual", affine_parts, {})


def distributed_ls_field(ls, spec, rho):
    """Augmented distributed least-squares flow with consensus penalty ``rho``."""
    if rho <= 0:
        raise ValueError("augmentation gain must be positive")
    if ls.N != spec.N:
        raise DimensionError(f"{ls.N} measurements for {spec.N} agents")
    objectives = ls.node_objectives()
    grad, hess = _stacked(objectives, ls.n)
    Hq = ls.block_hessian()
    gq = np.concatenate([o.q for o in objectives])
    return _distributed(lambda x, t: grad(x), lambda x, t: Hq, spec, ls.n, rho,
                        "distributed least squares", (Hq, gq), {})


def tv_pd_field(tvp):
    """``x' = -grad f(x, t) - A^T nu``, ``nu' = A x - b(t)``."""
    A = tvp.A
    k, n = A.shape

    def rhs(z, t):
        x, nu = z[:n], z[n:]
        return np.concatenate([-tvp.grad(x, t) - A.T @ nu, A @ x - tvp.b(t)])

    def jac(z, t):
        return saddle_matrix(np.asarray(tvp.hess(z[:n], t)), A)

    return VectorField(n + k, rhs, jac, "time-varying primal-dual", None, {"n": n, "k": k})


def tv_distributed_pd_field(tvd):
    """Time-varying version of :func:`distributed_pd_field`."""
    n = tvd.n

    def hess(X, t):
        H = np.zeros((X.size, X.size))
        for i, nd in enumerate(tvd.nodes):
            H[i * n:(i + 1) * n, i * n:(i + 1) * n] = nd.hess(X[i * n:(i + 1) * n], t)
        return H

    return _distributed(tvd.stacked_gradient, hess, tvd.spectrum, n, 0.0,
                        "time-varying distributed primal-dual", None, {})


def dual_sums(states, N, n):
    """``sum_k nu^k`` for every stored state, shape ``(len(states), n)``."""
    states = np.atleast_2d(states)
    nu = states[:, N * n:].reshape(len(states), N, n)
    return nu.sum(axis=1)


def consensus_equilibrium(objectives, spec, n, x_star):
    """Equilibrium ``(1 kron x*, nu*)`` of a distributed field.

    ``nu*`` is the minimum-norm solution of ``(L kron I) nu = -grad f(1 kron x*)``;
    every other equilibrium dual differs by ``1 kron a`` and has the same
    image under ``V``.
    """
    X = np.tile(np.asarray(x_star, dtype=float), spec.N)
    g = np.concatenate([o.grad(X[i * n:(i + 1) * n]) for i, o in enumerate(objectives)])
    return np.concatenate([X, reduced_dual(g, spec, n, lift=True)])


def reduced_dual(stacked_grad, spec, n, lift=False):
    """``y* = -(Lambda^{-1} R kron I) grad f``, or ``R^T y*`` when ``lift``."""
    Rk = np.kron(spec.R, np.eye(n))
    y = -np.kron(np.diag(1.0 / spec.eigenvalues[1:]), np.eye(n)) @ (Rk @ stacked_grad)
    return Rk.T @ y if lift else y
