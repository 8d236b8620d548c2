import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mimoy import mathkit as mk
from mimoy.errors import DomainError

from conftest import cn


def test_null_space_coordinate_axis():
    b = mk.null_space_basis(np.array([[1.0, 0.0]]))
    assert b.dim == 1
    assert abs(abs(b.columns[1, 0]) - 1) < 1e-12 and abs(b.columns[0, 0]) < 1e-12


def test_null_space_zero_matrix_is_whole_space():
    b = mk.null_space_basis(np.zeros((2, 2)))
    assert b.dim == 2
    assert np.allclose(b.columns.conj().T @ b.columns, np.eye(2))


def test_null_space_random_against_svd(rng):
    A = cn(rng, 3, 4)
    b = mk.null_space_basis(A)
    assert b.dim == 1
    assert np.linalg.norm(A @ b.columns) < 1e-10
    # the full SVD's last right singular vector spans the same line
    v = np.linalg.svd(A)[2][-1].conj()
    assert abs(abs(np.vdot(v, b.columns[:, 0])) - 1) < 1e-10


def test_left_null_examples(rng):
    H = np.array([[1, 0], [0, 1], [0, 0]], dtype=complex)
    b = mk.left_null_basis(H)
    assert b.dim == 1 and abs(abs(b.columns[2, 0]) - 1) < 1e-12
    H = cn(rng, 6, 4)
    b = mk.left_null_basis(H)
    assert b.dim == 2
    assert np.linalg.norm(b.columns.conj().T @ H) < 1e-10
    u = cn(rng, 3, 1)
    b = mk.left_null_basis(u @ cn(rng, 1, 2))
    assert b.dim == 2


def test_null_space_residual_and_orthonormality_sweep(rng):
    for _ in range(2000):
        A = cn(rng, 3, 4)
        b = mk.null_space_basis(A)
        s = np.linalg.svd(A, compute_uv=False)
        assert np.linalg.norm(A @ b.columns) <= 10 * mk.DEFAULT_TOL * s[0]
        assert np.allclose(b.columns.conj().T @ b.columns, np.eye(b.dim), atol=1e-10)


def test_acute_angle_examples():
    a = np.array([1, 1j]) / np.sqrt(2)
    assert mk.acute_angle(a, a) == pytest.approx(0, abs=1e-7)
    assert mk.acute_angle(np.array([1, 0]), np.array([0, 1])) == pytest.approx(np.pi / 2)
    assert mk.acute_angle(np.array([1, 0]), np.array([1, 1]) / np.sqrt(2)) == pytest.approx(np.pi / 4)
    with pytest.raises(DomainError):
        mk.acute_angle(np.zeros(2), np.array([1, 0]))


def test_chordal_distance_examples(rng):
    A = mk.null_space_basis(cn(rng, 4, 6)).columns
    assert mk.chordal_distance(A, A) == pytest.approx(0, abs=1e-7)
    E = np.eye(4)
    assert mk.chordal_distance(E[:, :2], E[:, 2:]) == pytest.approx(np.sqrt(2))
    B = mk.null_space_basis(cn(rng, 4, 6)).columns
    cosines = np.linalg.svd(A.conj().T @ B, compute_uv=False)
    assert mk.chordal_distance(A, B) == pytest.approx(np.sqrt(np.sum(1 - cosines**2)), abs=1e-12)
    with pytest.raises(DomainError):
        mk.chordal_distance(E[:, :2], E[:, :1])


def test_chordal_symmetry_and_basis_invariance(rng):
    for _ in range(200):
        A = mk.null_space_basis(cn(rng, 4, 6)).columns
        B = mk.null_space_basis(cn(rng, 4, 6)).columns
        U = mk.haar_unitary(2, int(rng.integers(1 << 30)))
        d = mk.chordal_distance(A, B)
        assert abs(d - mk.chordal_distance(B, A)) < 1e-12
        assert abs(d - mk.chordal_distance(A @ U, B)) < 1e-12


def test_min_eigenvalue_examples(rng):
    assert mk.min_eigenvalue_hermitian(np.eye(3)) == pytest.approx(1)
    assert mk.min_eigenvalue_hermitian(np.diag([1.0, 2.0, 3.0])) == pytest.approx(1)
    H = cn(rng, 3, 3)
    G = H @ H.conj().T
    # inverse power iteration oracle
    x = np.ones(3, dtype=complex)
    Ginv = np.linalg.inv(G)
    for _ in range(500):
        x = Ginv @ x
        x /= np.linalg.norm(x)
    lam = np.real(np.vdot(x, G @ x))
    assert mk.min_eigenvalue_hermitian(G) == pytest.approx(lam, rel=1e-9)
    with pytest.raises(DomainError):
        mk.min_eigenvalue_hermitian(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_rayleigh_ritz_spot_check(rng):
    for _ in range(200):
        H = cn(rng, 3, 3)
        G = H @ H.conj().T
        x = cn(rng, 3)
        x /= np.linalg.norm(x)
        assert mk.min_eigenvalue_hermitian(G) <= np.real(np.vdot(x, G @ x)) + 1e-12


def test_haar_unitary_examples():
    u = mk.haar_unitary(1, 3)
    assert u.shape == (1, 1) and abs(abs(u[0, 0]) - 1) < 1e-12
    assert np.array_equal(mk.haar_unitary(3, 7), mk.haar_unitary(3, 7))
    U = mk.haar_unitary(6, 11)
    assert np.linalg.norm(U.conj().T @ U - np.eye(6)) < 1e-12


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), re=st.floats(-5, 5), im=st.floats(-5, 5))
def test_acute_angle_scale_invariant(seed, re, im):
    c = complex(re, im)
    if abs(c) < 1e-3:
        c = 1.0
    r = np.random.default_rng(seed)
    a, b = cn(r, 3), cn(r, 3)
    assert abs(mk.acute_angle(a, b) - mk.acute_angle(c * a, b)) < 1e-7


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), rows=st.integers(1, 6), cols=st.integers(1, 6))
def test_null_space_property(seed, rows, cols):
    A = cn(np.random.default_rng(seed), rows, cols)
    b = mk.null_space_basis(A)
    assert b.dim == max(cols - rows, 0)
    if b.dim:
        assert np.linalg.norm(A @ b.columns) < 1e-9
        assert np.allclose(b.columns.conj().T @ b.columns, np.eye(b.dim), atol=1e-10)
