import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pdcontract.errors import DefinitenessError, DimensionError, SingularMatrixError, SymmetryError
from pdcontract.linalg import (
    is_hurwitz,
    is_symmetric,
    jacobi_eig,
    matrix_measure_2,
    saddle_matrix,
    singular_values,
    solve_linear,
    spectral_abscissa,
    sqrt_spd,
    sym_eig,
    weighted_matrix_measure,
    weighted_norm,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def square(n_min=1, n_max=6):
    return st.integers(n_min, n_max).flatmap(lambda n: arrays(float, (n, n), elements=finite))


def symmetric(n_min=1, n_max=6):
    return square(n_min, n_max).map(lambda M: M + M.T)


# --- examples ---------------------------------------------------------------------

def test_sym_eig_examples():
    w, U = sym_eig(np.eye(3))
    assert np.allclose(w, 1) and np.allclose(U.T @ U, np.eye(3))
    w, _ = sym_eig([[0, 1], [1, 0]])
    assert np.allclose(w, [-1, 1], atol=1e-14)
    w, U = sym_eig(np.diag([3.0, 5.0]))
    assert np.allclose(w, [3, 5]) and np.allclose(np.abs(U), np.eye(2))


def test_sym_eig_rejects_nonsymmetric():
    with pytest.raises(SymmetryError):
        sym_eig([[1, 2], [0, 1]])
    assert is_symmetric([[1, 1e-14], [0, 1]])


def test_singular_value_examples():
    assert np.allclose(singular_values([[1, 0]]), [1])
    assert np.allclose(singular_values([[1, 1]]), [np.sqrt(2)])
    assert np.allclose(singular_values(np.diag([2.0, 3.0])), [2, 3])


def test_measure_examples():
    assert matrix_measure_2([[0, 1], [-1, 0]]) == pytest.approx(0, abs=1e-15)
    assert matrix_measure_2(np.diag([-1.0, -2.0])) == pytest.approx(-1)
    assert matrix_measure_2([[0, 2], [0, 0]]) == pytest.approx(1)


def test_weighted_measure_examples():
    M = np.array([[-1.0, 2.0], [0.0, -1.0]])
    assert weighted_matrix_measure(M, np.diag([4.0, 1.0])) == pytest.approx(1, abs=1e-12)
    assert weighted_matrix_measure(-np.eye(2), [[2, 1], [1, 2]]) == pytest.approx(-1, abs=1e-12)
    with pytest.raises(DefinitenessError):
        weighted_matrix_measure(M, np.diag([1.0, -1.0]))


def test_sqrt_spd_examples():
    assert np.allclose(sqrt_spd(np.eye(2)), np.eye(2))
    assert np.allclose(sqrt_spd(np.diag([4.0, 9.0])), np.diag([2, 3]))
    P = np.array([[2.0, 1.0], [1.0, 2.0]])
    S = sqrt_spd(P)
    assert np.linalg.norm(S @ S - P) <= 1e-10 and np.allclose(S, S.T)
    with pytest.raises(DefinitenessError):
        sqrt_spd(np.diag([1.0, 0.0]))


def test_weighted_norm_examples():
    assert weighted_norm([0, 0], np.eye(2)) == 0
    assert weighted_norm([3, 4], np.eye(2)) == pytest.approx(5)
    assert weighted_norm([1, 2], np.diag([4.0, 1.0])) == pytest.approx(np.sqrt(8))
    with pytest.raises(DimensionError):
        weighted_norm([1, 2, 3], np.eye(2))


def test_hurwitz_examples():
    assert is_hurwitz([[-1, 0, -1], [0, -1, 0], [1, 0, 0]])
    assert not is_hurwitz([[1.0]])
    assert not is_hurwitz([[0, 1], [-1, 0]])


def test_solve_linear_examples():
    b = np.array([1.0, -2.0])
    assert np.allclose(solve_linear(np.eye(2), b), b)
    assert np.allclose(solve_linear(np.diag([2.0, 4.0]), [2, 8]), [1, 2])
    K = [[1, 0, 1], [0, 1, 1], [1, 1, 0]]
    assert np.allclose(solve_linear(K, [0, 0, 2]), [1, 1, -1])
    with pytest.raises(SingularMatrixError):
        solve_linear([[1, 1], [1, 1]], [1, 2])


# --- properties -------------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(symmetric())
def test_sym_eig_reconstructs(M):
    w, U = sym_eig(M)
    assert np.all(np.diff(w) >= 0)
    assert np.linalg.norm(U.T @ U - np.eye(len(w))) <= 1e-10
    assert np.linalg.norm(M - U @ np.diag(w) @ U.T) <= 1e-10 * (1 + np.linalg.norm(M))


@settings(max_examples=60, deadline=None)
@given(symmetric())
def test_jacobi_agrees_with_lapack(M):
    w_j, U_j = jacobi_eig(M)
    w, _ = sym_eig(M)
    assert np.allclose(w_j, w, atol=1e-9 * (1 + np.abs(M).max()))
    assert np.linalg.norm(M - U_j @ np.diag(w_j) @ U_j.T) <= 1e-10 * (1 + np.linalg.norm(M))


def test_jacobi_is_deterministic(rng):
    M = rng.standard_normal((6, 6))
    M = M + M.T
    a, b = jacobi_eig(M), jacobi_eig(M)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


@settings(max_examples=80, deadline=None)
@given(square())
def test_measure_bounds_spectral_abscissa(M):
    assert matrix_measure_2(M) >= spectral_abscissa(M) - 1e-9 * (1 + np.abs(M).max())


@settings(max_examples=40, deadline=None)
@given(square())
def test_identity_weight_is_plain_measure(M):
    assert weighted_matrix_measure(M, np.eye(len(M))) == matrix_measure_2(M)


@settings(max_examples=40, deadline=None)
@given(square(), st.integers(0, 2**31 - 1))
def test_weighted_measure_is_similarity_invariant_form(M, seed):
    n = len(M)
    G = np.random.default_rng(seed).standard_normal((n, n))
    P = G @ G.T + np.eye(n)
    S = sqrt_spd(P)
    assert np.linalg.norm(S @ S - P) <= 1e-10 * np.linalg.norm(P)
    expected = matrix_measure_2(S @ M @ np.linalg.inv(S))
    assert weighted_matrix_measure(M, P) == pytest.approx(expected, abs=1e-8 * (1 + np.abs(M).max()))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4).flatmap(lambda k: st.tuples(st.just(k), st.integers(k, 6))),
       st.integers(0, 2**31 - 1))
def test_full_row_rank_singular_values_positive(kn, seed):
    k, n = kn
    A = np.random.default_rng(seed).standard_normal((k, n))
    s = singular_values(A)
    assert np.all(s > 0) and np.all(np.diff(s) >= 0)
    assert np.allclose(s, np.sort(np.linalg.svd(A, compute_uv=False)), atol=1e-10)


def test_saddle_matrices_are_hurwitz():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(2, 8))
        k = int(rng.integers(1, n))
        G = rng.standard_normal((n, n))
        A = rng.standard_normal((k, n))
        assert is_hurwitz(saddle_matrix(G.T @ G + np.eye(n), A))
