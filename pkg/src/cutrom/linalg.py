"""Sparse assembly and solves, dense symmetric eigenproblems and dense solves."""
import warnings

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidArgumentError, SingularMatrixError


class SparseSystem:
    """Triplet accumulator for a square sparse system.

    Duplicate entries are summed when the matrix is compressed.
    """

    def __init__(self, n, n_rhs=None):
        self.n = int(n)
        self._rows, self._cols, self._vals = [], [], []
        shape = (self.n,) if n_rhs is None else (self.n, n_rhs)
        self.rhs = np.zeros(shape)
        self.pinned = np.zeros(0, dtype=np.int64)
        self._matrix = None

    def add(self, rows, cols, values):
        self._rows.append(np.asarray(rows, dtype=np.int64).ravel())
        self._cols.append(np.asarray(cols, dtype=np.int64).ravel())
        self._vals.append(np.asarray(values, dtype=float).ravel())
        self._matrix = None

    def add_local(self, dofs, local):
        """Scatter a batch of dense local matrices ``local[e]`` on ``dofs[e]``."""
        dofs = np.asarray(dofs)
        k = dofs.shape[1]
        self.add(np.repeat(dofs, k, axis=1), np.tile(dofs, (1, k)), local)

    def add_rhs(self, dofs, values):
        np.add.at(self.rhs, np.asarray(dofs).ravel(), np.asarray(values).reshape((-1,) + self.rhs.shape[1:]))

    @property
    def matrix(self):
        if self._matrix is None:
            if self._rows:
                rows = np.concatenate(self._rows)
                cols = np.concatenate(self._cols)
                vals = np.concatenate(self._vals)
            else:
                rows = cols = np.zeros(0, dtype=np.int64)
                vals = np.zeros(0)
            self._matrix = sp.csr_matrix((vals, (rows, cols)), shape=(self.n, self.n))
            self._matrix.sum_duplicates()
        return self._matrix

    def pin(self, dofs, values):
        """Replace the rows of ``dofs`` by identity rows with ``values`` on the right."""
        dofs = np.asarray(dofs, dtype=np.int64)
        self._matrix = pin_rows(self.matrix, dofs)
        self.rhs[dofs] = values
        self.pinned = np.union1d(self.pinned, dofs)


def pin_rows(A, dofs):
    """CSR copy of ``A`` whose rows ``dofs`` are unit rows."""
    A = sp.csr_matrix(A)
    keep = np.ones(A.shape[0])
    keep[dofs] = 0.0
    D = sp.diags(keep)
    E = sp.csr_matrix((np.ones(len(dofs)), (dofs, dofs)), shape=A.shape)
    return (D @ A + E).tocsr()


class Factorization:
    """Reusable sparse LU factorization."""

    def __init__(self, A):
        A = sp.csc_matrix(A)
        if A.shape[0] != A.shape[1]:
            raise InvalidArgumentError(f"matrix must be square, got {A.shape}")
        _structural_check(A)
        with warnings.catch_warnings():
            warnings.simplefilter("error", spla.MatrixRankWarning)
            try:
                self._lu = spla.splu(A, permc_spec="COLAMD")
            except (RuntimeError, spla.MatrixRankWarning) as exc:
                raise SingularMatrixError(f"sparse LU failed: {exc}") from exc
        diag = np.abs(self._lu.U.diagonal())
        bad = np.flatnonzero(diag <= 1e-14 * max(diag.max(), 1e-300))
        if len(bad):
            row = int(self._lu.perm_r.argsort()[bad[0]]) if hasattr(self._lu, "perm_r") else int(bad[0])
            raise SingularMatrixError(f"zero pivot in sparse LU near row {row}", row=row)

    def solve(self, b):
        return self._lu.solve(np.asarray(b, dtype=float))


def _structural_check(A):
    empty_rows = np.flatnonzero(np.diff(sp.csr_matrix(A).indptr) == 0)
    if len(empty_rows):
        raise SingularMatrixError(f"row {empty_rows[0]} is empty", row=int(empty_rows[0]))
    empty_cols = np.flatnonzero(np.diff(A.indptr) == 0)
    if len(empty_cols):
        raise SingularMatrixError(f"column {empty_cols[0]} is empty", row=int(empty_cols[0]))


def sparse_solve(A, b=None):
    """Direct sparse LU solve of ``A x = b``; ``A`` may be a :class:`SparseSystem`."""
    if isinstance(A, SparseSystem):
        A, b = A.matrix, A.rhs if b is None else b
    return Factorization(A).solve(b)


def dense_solve(A, b):
    """LU with partial pivoting; raises :class:`SingularMatrixError` on a zero pivot."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidArgumentError(f"matrix must be square, got {A.shape}")
    with warnings.catch_warnings():
        warnings.simplefilter("error", la.LinAlgWarning)
        try:
            lu, piv = la.lu_factor(A, check_finite=True)
        except (la.LinAlgError, la.LinAlgWarning, ValueError) as exc:
            raise SingularMatrixError(f"dense LU failed: {exc}") from exc
    diag = np.abs(np.diag(lu))
    scale = max(np.abs(A).max(), 1e-300)
    bad = np.flatnonzero(diag <= 1e-15 * scale * A.shape[0])
    if len(bad):
        raise SingularMatrixError(f"zero pivot at row {bad[0]}", row=int(bad[0]))
    return la.lu_solve((lu, piv), np.asarray(b, dtype=float))


def _round_robin(n):
    """Pairings of a round-robin tournament: ``n - 1`` rounds of ``n / 2`` disjoint pairs."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        p = np.array(players[:half])
        q = np.array(players[half:][::-1])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(A, max_sweeps=50):
    """Cyclic Jacobi eigensolver for a dense symmetric matrix.

    Rotations are applied in round-robin order so that each round updates
    ``n / 2`` disjoint index pairs at once.  A pair is rotated only while
    ``|a_pq| > eps * max(sqrt(|a_pp a_qq|), ||A||_F)``; iteration stops after a sweep
    without rotations.  Returns ``(w, V)`` unsorted.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if n == 1:
        return A.diagonal().copy(), np.ones((1, 1))
    if n % 2:
        A = np.pad(A, ((0, 1), (0, 1)))
    m = A.shape[0]
    V = np.eye(m)
    rounds = _round_robin(m)
    norm = np.linalg.norm(A)
    if norm == 0.0:
        return np.zeros(n), np.eye(n)
    eps = np.finfo(float).eps
    floor = eps * norm
    for _ in range(max_sweeps):
        rotated = False
        for p, q in rounds:
            apq = A[p, q]
            app, aqq = A[p, p], A[q, q]
            act = np.abs(apq) > np.maximum(eps * np.sqrt(np.abs(app * aqq)), floor)
            if not act.any():
                continue
            rotated = True
            p, q, apq, app, aqq = p[act], q[act], apq[act], app[act], aqq[act]
            theta = (aqq - app) / (2.0 * apq)
            t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(1.0, theta))
            c = 1.0 / np.hypot(1.0, t)
            s = t * c
            Ap, Aq = A[p, :], A[q, :]
            A[p, :] = c[:, None] * Ap - s[:, None] * Aq
            A[q, :] = s[:, None] * Ap + c[:, None] * Aq
            Ap, Aq = A[:, p], A[:, q]
            A[:, p] = Ap * c - Aq * s
            A[:, q] = Ap * s + Aq * c
            Vp, Vq = V[:, p], V[:, q]
            V[:, p] = Vp * c - Vq * s
            V[:, q] = Vp * s + Vq * c
        if not rotated:
            break
    else:
        warnings.warn("Jacobi eigensolver hit the sweep limit", RuntimeWarning)
    return A.diagonal()[:n].copy(), V[:n, :n]


def sym_eig(A, method="jacobi"):
    """Eigenpairs of a symmetric matrix, eigenvalues sorted descending.

    ``method`` is ``"jacobi"`` (cyclic Jacobi, default) or ``"lapack"``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidArgumentError(f"matrix must be square, got {A.shape}")
    scale = max(np.abs(A).max(), 1e-300)
    if np.abs(A - A.T).max() > 1e-10 * scale:
        raise InvalidArgumentError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    if method == "jacobi":
        w, V = jacobi_eigh(A)
    elif method == "lapack":
        w, V = np.linalg.eigh(A)
    else:
        raise InvalidArgumentError(f"unknown eigen method {method!r}")
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]
