"""Dense linear-algebra kernels.

Everything here works on small dense ``numpy`` arrays. Symmetric and general
eigenproblems are delegated to LAPACK through ``numpy.linalg``; a cyclic
Jacobi eigensolver is kept alongside as an independent reference that the
test-suite cross-checks against.
"""

import numpy as np

from .errors import (
    ConvergenceError,
    DefinitenessError,
    DimensionError,
    SingularMatrixError,
    SymmetryError,
)

HURWITZ_TOL = 1e-10
COND_LIMIT = 1e12


def _as_matrix(M, name="matrix"):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2:
        raise DimensionError(f"{name} must be two-dimensional, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def _as_square(M, name="matrix"):
    M = _as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    return M


def symmetry_defect(M):
    """Largest absolute asymmetry ``max |M_ij - M_ji|``."""
    M = np.asarray(M, dtype=float)
    return float(np.max(np.abs(M - M.T))) if M.size else 0.0


def is_symmetric(M, rtol=1e-12):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    scale = 1.0 + (float(np.max(np.abs(M))) if M.size else 0.0)
    return symmetry_defect(M) <= rtol * scale


def _check_symmetric(M, name="matrix"):
    M = _as_square(M, name)
    if not is_symmetric(M):
        raise SymmetryError(
            f"{name} is not symmetric (defect {symmetry_defect(M):.3e})"
        )
    return M


def _canonical_signs(U):
    # first nonzero component of each eigenvector made positive
    U = U.copy()
    for j in range(U.shape[1]):
        col = U[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            U[:, j] = -col
    return U


def sym_eig(M):
    """Eigendecomposition of a symmetric matrix.

    Returns
    -------
    w : ndarray
        Eigenvalues in ascending order.
    U : ndarray
        Orthonormal eigenvectors as columns, each with its first nonzero
        entry positive.

    Raises
    ------
    SymmetryError
        If ``M`` is not symmetric to ``1e-12 * (1 + max|M|)``.
    """
    M = _check_symmetric(M)
    w, U = np.linalg.eigh(0.5 * (M + M.T))
    return w, _canonical_signs(U)


def jacobi_eig(M, tol=1e-12, max_sweeps=100):
    """Cyclic Jacobi eigensolver for a symmetric matrix.

    Rotations are applied in row-major order of the strict upper triangle,
    so repeated calls on the same input give bit-identical results. The
    iteration stops once the off-diagonal Frobenius mass is below
    ``tol * ||M||_F``.
    """
    A = _check_symmetric(M).copy()
    n = A.shape[0]
    V = np.eye(n)
    scale = max(np.linalg.norm(A), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                Ap, Aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap, Aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                Vp, Vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
    else:
        raise ConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], _canonical_signs(V[:, order])


def singular_values(A):
    """Singular values of ``A`` in ascending order, as square roots of the
    eigenvalues of ``A A^T`` (tiny negative round-off is clipped to 0)."""
    A = _as_matrix(A, "A")
    w, _ = sym_eig(A @ A.T)
    return np.sqrt(np.clip(w, 0.0, None))


def matrix_measure_2(M):
    """Euclidean matrix measure, ``lambda_max((M + M^T) / 2)``."""
    M = _as_square(M)
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[-1])


def spd_factors(P):
    """Return ``(S, S_inv)`` with ``S`` the symmetric square root of ``P``."""
    P = _check_symmetric(P, "P")
    w, U = sym_eig(P)
    scale = 1.0 + float(np.max(np.abs(P)))
    if w[0] <= 1e-14 * scale:
        raise DefinitenessError(f"matrix is not positive definite (lambda_min = {w[0]:.3e})")
    r = np.sqrt(w)
    S = (U * r) @ U.T
    S_inv = (U / r) @ U.T
    return 0.5 * (S + S.T), 0.5 * (S_inv + S_inv.T)


def sqrt_spd(P):
    """Symmetric positive-definite square root of ``P``."""
    return spd_factors(P)[0]


def weighted_matrix_measure(M, P):
    """Matrix measure induced by ``||v||_{2,P^{1/2}} = ||P^{1/2} v||_2``.

    Evaluated as ``mu_2(P^{1/2} M P^{-1/2})``.
    """
    M = _as_square(M)
    P = np.asarray(P, dtype=float)
    if P.shape == M.shape and np.array_equal(P, np.eye(len(M))):
        return matrix_measure_2(M)
    S, S_inv = spd_factors(P)
    if S.shape != M.shape:
        raise DimensionError(f"weight {S.shape} does not match matrix {M.shape}")
    return matrix_measure_2(S @ M @ S_inv)


def weighted_norm(v, P):
    """``sqrt(v^T P v)``."""
    v = np.asarray(v, dtype=float).ravel()
    P = np.asarray(P, dtype=float)
    if P.shape != (v.size, v.size):
        raise DimensionError(f"vector of length {v.size} against weight {P.shape}")
    return float(np.sqrt(max(v @ P @ v, 0.0)))


def eigvals_general(M):
    """Complex spectrum of a general real square matrix.

    LAPACK ``geev`` (Hessenberg reduction followed by shifted QR); a failed
    QR iteration is reported as :class:`ConvergenceError`.
    """
    M = _as_square(M)
    try:
        return np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"QR iteration failed: {exc}") from exc


def spectral_abscissa(M):
    return float(np.max(eigvals_general(M).real))


def is_hurwitz(M, tol=HURWITZ_TOL):
    """True when every eigenvalue of ``M`` has real part below ``-tol``."""
    return spectral_abscissa(M) < -tol


def solve_linear(M, rhs):
    """Solve ``M x = rhs``.

    Raises :class:`SingularMatrixError` when the 2-norm condition number is
    above ``1e12`` or the residual check ``||Mx - rhs|| <= 1e-9 (1 + ||rhs||)``
    fails.
    """
    M = _as_square(M)
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != M.shape[0]:
        raise DimensionError(f"rhs of length {rhs.shape[0]} against {M.shape}")
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularMatrixError(f"matrix is singular or ill-conditioned (cond = {cond:.3e})")
    x = np.linalg.solve(M, rhs)
    res = np.linalg.norm(M @ x - rhs)
    if res > 1e-9 * (1.0 + np.linalg.norm(rhs)):
        raise SingularMatrixError(f"linear solve residual {res:.3e} too large")
    return x


def saddle_matrix(B, A):
    """Assemble ``[[-B, -A^T], [A, 0]]``."""
    B = _as_square(B, "B")
    A = _as_matrix(A, "A")
    k = A.shape[0]
    return np.block([[-B, -A.T], [A, np.zeros((k, k))]])
