import numpy as np
import pytest
import scipy.sparse as sp

from cutrom.errors import InvalidArgumentError, SingularMatrixError
from cutrom.linalg import SparseSystem, dense_solve, jacobi_eigh, sparse_solve, sym_eig


def test_identity_solve():
    b = np.array([3.0, -1.0, 2.0])
    assert np.allclose(sparse_solve(sp.identity(3), b), b)


def test_laplacian_1d():
    A = sp.diags([-np.ones(2), 2 * np.ones(3), -np.ones(2)], [-1, 0, 1])
    assert np.allclose(sparse_solve(A, np.ones(3)), [1.5, 2.0, 1.5])


def test_sparse_system_sums_duplicates_and_pins():
    s = SparseSystem(3)
    s.add([0, 0, 1, 2], [0, 0, 1, 2], [1.0, 1.0, 2.0, 3.0])
    s.add_rhs([0, 1, 2], [2.0, 2.0, 3.0])
    assert np.allclose(sparse_solve(s), [1, 1, 1])
    s.pin([2], 5.0)
    assert np.allclose(sparse_solve(s), [1, 1, 5])
    assert list(s.pinned) == [2]


def test_singular_sparse():
    A = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(SingularMatrixError) as info:
        sparse_solve(A, np.ones(2))
    assert info.value.row == 1


def test_dense_solve():
    assert np.allclose(dense_solve(np.eye(4), np.arange(4.0)), np.arange(4.0))
    assert np.allclose(dense_solve([[2, 0], [0, 4]], [2, 4]), [1, 1])
    rng = np.random.default_rng(0)
    X = rng.normal(size=(10, 10))
    A = X @ X.T + 10 * np.eye(10)
    b = rng.normal(size=10)
    assert np.linalg.norm(A @ dense_solve(A, b) - b) <= 1e-12 * np.linalg.norm(b)
    with pytest.raises(SingularMatrixError):
        dense_solve(np.ones((3, 3)), np.ones(3))
    with pytest.raises(InvalidArgumentError):
        dense_solve(np.ones((2, 3)), np.ones(2))


@pytest.mark.parametrize("method", ["jacobi", "lapack"])
def test_eig_examples(method):
    w, _ = sym_eig(np.array([[2.0, 1.0], [1.0, 2.0]]), method)
    assert np.allclose(w, [3, 1])
    assert np.allclose(sym_eig(np.eye(5), method)[0], 1.0)
    v = np.arange(1.0, 7.0)
    w, V = sym_eig(np.outer(v, v), method)
    assert np.isclose(w[0], v @ v)
    assert np.abs(w[1:]).max() <= 1e-12 * (v @ v)
    assert np.isclose(abs(V[:, 0] @ v), np.linalg.norm(v))


def test_asymmetric_rejected():
    with pytest.raises(InvalidArgumentError):
        sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(InvalidArgumentError):
        sym_eig(np.eye(2), method="power")


@pytest.mark.parametrize("n", [1, 2, 7, 40])
def test_jacobi_matches_lapack(n):
    rng = np.random.default_rng(n)
    X = rng.normal(size=(n, n))
    A = X + X.T
    w, V = jacobi_eigh(A)
    assert np.allclose(np.sort(w), np.linalg.eigvalsh(A), atol=1e-11 * np.abs(A).max())
    assert np.allclose(V.T @ V, np.eye(n), atol=1e-12)
    assert np.allclose(A @ V, V * w, atol=1e-10 * np.abs(A).max())


def test_jacobi_graded_spectrum():
    # POD-like spectrum spanning many orders of magnitude
    rng = np.random.default_rng(3)
    Q, _ = np.linalg.qr(rng.normal(size=(30, 30)))
    lam = 10.0 ** -np.arange(30)
    w, _ = sym_eig((Q * lam) @ Q.T)
    assert np.allclose(w[:8], lam[:8], rtol=1e-8)
