"""Compressed-row sparse matrices and the per-step linear solvers.

Storage is delegated to scipy.sparse CSR (canonical form: sorted, unique
column indices per row) behind a thin immutable wrapper. The solvers are
hand-rolled Krylov methods with Jacobi preconditioning so that the
residual contract is explicit: a returned vector always satisfies the
requested relative residual, otherwise SolverConvergenceError is raised
with the achieved residual attached. Iteration order is fixed, so results
are bitwise reproducible for identical inputs.
"""

import numpy as np
import scipy.sparse as sp

from .errors import SolverConvergenceError

DENSE_FALLBACK_SIZE = 200


class SparseMatrix:
    """Immutable CSR matrix.

    Row offsets, column indices and values are exposed read-only; column
    indices are sorted and unique within each row.
    """

    __slots__ = ("_csr",)

    def __init__(self, csr):
        csr = sp.csr_matrix(csr)
        csr.sum_duplicates()
        csr.sort_indices()
        csr.data.setflags(write=False)
        csr.indices.setflags(write=False)
        csr.indptr.setflags(write=False)
        object.__setattr__(self, "_csr", csr)

    def __setattr__(self, name, value):
        raise AttributeError("SparseMatrix is immutable")

    @classmethod
    def from_coo(cls, rows, cols, values, shape):
        return cls(sp.coo_matrix((values, (rows, cols)), shape=shape))

    @classmethod
    def from_dense(cls, a):
        return cls(sp.csr_matrix(np.asarray(a, dtype=float)))

    @classmethod
    def identity(cls, n):
        return cls(sp.identity(n, format="csr"))

    @property
    def n_rows(self):
        return self._csr.shape[0]

    @property
    def n_cols(self):
        return self._csr.shape[1]

    @property
    def offsets(self):
        return self._csr.indptr

    @property
    def indices(self):
        return self._csr.indices

    @property
    def values(self):
        return self._csr.data

    @property
    def nnz(self):
        return self._csr.nnz

    @property
    def csr(self):
        """Underlying scipy CSR matrix (treat as read-only)."""
        return self._csr

    def to_dense(self):
        return self._csr.toarray()

    def diagonal(self):
        return self._csr.diagonal()

    def transpose(self):
        return SparseMatrix(self._csr.T)

    def __add__(self, other):
        return SparseMatrix(self._csr + other._csr)

    def __sub__(self, other):
        return SparseMatrix(self._csr - other._csr)

    def __mul__(self, scalar):
        return SparseMatrix(self._csr * float(scalar))

    __rmul__ = __mul__

    def __matmul__(self, x):
        return spmv(self, x)

    def submatrix(self, row_idx, col_idx):
        """Rows then columns restricted to the given index arrays."""
        return SparseMatrix(self._csr[np.ix_(row_idx, col_idx)])

    def write_coo(self, path):
        """Debug export as text triplets: row col value."""
        coo = self._csr.tocoo()
        with open(path, "w") as fh:
            fh.write(f"# {self.n_rows} {self.n_cols} {self.nnz}\n")
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{r} {c} {float(v)!r}\n")

    def __repr__(self):
        return f"SparseMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


def spmv(A, x):
    """Matrix-vector product y = A x."""
    x = np.asarray(x, dtype=float)
    if x.shape != (A.n_cols,):
        raise ValueError(f"shape mismatch: {A.n_rows}x{A.n_cols} @ {x.shape}")
    return A.csr @ x


def _jacobi_inverse(A):
    d = A.diagonal().copy()
    d[d == 0.0] = 1.0
    return 1.0 / d


def _check_residual(A, x, b, tol, iterations, method):
    b_norm = float(np.linalg.norm(b))
    res = float(np.linalg.norm(b - A.csr @ x))
    if res > tol * b_norm:
        raise SolverConvergenceError(
            f"{method} stopped at relative residual {res / b_norm:.3e} "
            f"(target {tol:.1e}) after {iterations} iterations",
            residual=res / b_norm, iterations=iterations,
        )
    return x


def solve_nonsymmetric(A, b, tol=1e-10, max_iter=None):
    """Solve A x = b for general (nonsymmetric) square A.

    BiCGStab with Jacobi preconditioning; dense LU for small systems
    (n <= 200). Guarantees ||Ax - b|| <= tol * ||b|| or raises
    SolverConvergenceError.
    """
    b = np.asarray(b, dtype=float)
    n = A.n_rows
    if A.n_cols != n or b.shape != (n,):
        raise ValueError("solve_nonsymmetric needs square A and matching b")
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side contains nonfinite entries")
    if max_iter is None:
        max_iter = 10 * n

    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros(n)

    if n <= DENSE_FALLBACK_SIZE:
        x = np.linalg.solve(A.to_dense(), b)
        return _check_residual(A, x, b, tol, 0, "dense LU")

    return _bicgstab(A, b, tol, max_iter)


def _bicgstab(A, b, tol, max_iter):
    csr = A.csr
    minv = _jacobi_inverse(A)
    b_norm = float(np.linalg.norm(b))
    target = tol * b_norm

    x = np.zeros_like(b)
    r = b.copy()
    r_hat = r.copy()
    rho = alpha = omega = 1.0
    v = np.zeros_like(b)
    p = np.zeros_like(b)
    res = float(np.linalg.norm(r))
    it = 0

    while res > target and it < max_iter:
        rho_new = float(r_hat @ r)
        if rho_new == 0.0:
            raise SolverConvergenceError(
                f"BiCGStab breakdown (rho=0) at iteration {it}",
                residual=res / b_norm, iterations=it,
            )
        if it == 0:
            p = r.copy()
        else:
            beta = (rho_new / rho) * (alpha / omega)
            p = r + beta * (p - omega * v)
        rho = rho_new
        p_hat = minv * p
        v = csr @ p_hat
        denom = float(r_hat @ v)
        if denom == 0.0:
            raise SolverConvergenceError(
                f"BiCGStab breakdown (r_hat.v=0) at iteration {it}",
                residual=res / b_norm, iterations=it,
            )
        alpha = rho / denom
        s = r - alpha * v
        res = float(np.linalg.norm(s))
        if res <= target:
            x = x + alpha * p_hat
            it += 1
            break
        s_hat = minv * s
        t = csr @ s_hat
        tt = float(t @ t)
        if tt == 0.0:
            raise SolverConvergenceError(
                f"BiCGStab breakdown (t=0) at iteration {it}",
                residual=res / b_norm, iterations=it,
            )
        omega = float(t @ s) / tt
        if omega == 0.0:
            raise SolverConvergenceError(
                f"BiCGStab breakdown (omega=0) at iteration {it}",
                residual=res / b_norm, iterations=it,
            )
        x = x + alpha * p_hat + omega * s_hat
        r = s - omega * t
        res = float(np.linalg.norm(r))
        it += 1

    return _check_residual(A, x, b, tol, it, "BiCGStab")


def solve_spd(A, b, tol=1e-10, max_iter=None):
    """Solve A x = b for symmetric positive definite A.

    Jacobi-preconditioned conjugate gradients with the same residual
    contract as solve_nonsymmetric.
    """
    b = np.asarray(b, dtype=float)
    n = A.n_rows
    if A.n_cols != n or b.shape != (n,):
        raise ValueError("solve_spd needs square A and matching b")
    if max_iter is None:
        max_iter = 10 * n

    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros(n)

    csr = A.csr
    minv = _jacobi_inverse(A)
    target = tol * b_norm

    x = np.zeros_like(b)
    r = b.copy()
    z = minv * r
    p = z.copy()
    rz = float(r @ z)
    res = float(np.linalg.norm(r))
    it = 0

    while res > target and it < max_iter:
        Ap = csr @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise SolverConvergenceError(
                f"CG breakdown (p.Ap={pAp:.3e}); matrix not SPD?",
                residual=res / b_norm, iterations=it,
            )
        alpha = rz / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        res = float(np.linalg.norm(r))
        if res <= target:
            it += 1
            break
        z = minv * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
        it += 1

    return _check_residual(A, x, b, tol, it, "CG")
