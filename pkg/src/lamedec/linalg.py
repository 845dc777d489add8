"""Sparse symmetric linear algebra: CSR storage, MINRES, eigenpair estimation.

Triplet assembly canonicalizes (row, col, value) by lexicographic sort before
summing duplicates, so the resulting CSR is bit-identical under any
permutation of the input triplets. The iterative solver is MINRES with
symmetric Jacobi scaling; a dense LDL^T path is available for small systems
and serves as the independent oracle in the tests.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import SolverError, ValidationError

_EIG_SEED = 271828


@dataclass
class SparseSym:
    """CSR matrix with sorted, unique column indices per row."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    symmetric: bool = True
    _csr: scipy.sparse.csr_matrix = field(default=None, repr=False, compare=False)

    def to_scipy(self):
        if self._csr is None:
            self._csr = scipy.sparse.csr_matrix(
                (self.data, self.indices, self.indptr), shape=(self.n, self.n))
        return self._csr

    def matvec(self, x):
        return self.to_scipy() @ x

    def diagonal(self):
        return self.to_scipy().diagonal()

    @property
    def nnz(self):
        return int(self.data.size)

    def symmetry_error(self):
        """max |A - A^T|, for the symmetry audit."""
        a = self.to_scipy()
        d = a - a.T
        return 0.0 if d.nnz == 0 else float(np.abs(d.data).max())

    def scale(self, c):
        return SparseSym(self.n, self.indptr, self.indices, c * self.data, self.symmetric)


def csr_from_triplets(n, rows, cols, values):
    """Canonical CSR from (possibly duplicated) triplets.

    Duplicates are summed. Entries are sorted by (row, col, value) before
    summing, so the result is bit-identical for any input ordering.
    """
    rows = np.asarray(rows, dtype=np.int64).reshape(-1)
    cols = np.asarray(cols, dtype=np.int64).reshape(-1)
    values = np.asarray(values, dtype=float).reshape(-1)
    if not (rows.size == cols.size == values.size):
        raise ValidationError("triplet arrays must have equal length")
    if rows.size and (rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= n):
        raise ValidationError("triplet index out of range")

    if rows.size == 0:
        return SparseSym(n, np.zeros(n + 1, dtype=np.int64),
                         np.empty(0, dtype=np.int64), np.empty(0))

    order = np.lexsort((values, cols, rows))
    r, c, v = rows[order], cols[order], values[order]
    new_group = np.empty(r.size, dtype=bool)
    new_group[0] = True
    new_group[1:] = (r[1:] != r[:-1]) | (c[1:] != c[:-1])
    starts = np.nonzero(new_group)[0]
    data = np.add.reduceat(v, starts)
    out_r = r[starts]
    out_c = c[starts]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, out_r + 1, 1)
    np.cumsum(indptr, out=indptr)
    return SparseSym(n, indptr, out_c, data)


def add_scaled(a, b, ca=1.0, cb=1.0):
    """ca*A + cb*B as a canonical SparseSym (patterns may differ)."""
    s = (ca * a.to_scipy() + cb * b.to_scipy()).tocsr()
    s.sort_indices()
    return SparseSym(a.n, s.indptr.astype(np.int64), s.indices.astype(np.int64),
                     s.data.astype(float), a.symmetric and b.symmetric)


def dump_matrix_market(a, path):
    """Debug dump in Matrix Market coordinate format."""
    scipy.io.mmwrite(path, a.to_scipy().tocoo(),
                     symmetry="symmetric" if a.symmetric else "general")


@dataclass
class SolveResult:
    x: np.ndarray
    iterations: int
    residual: float          # final ||Ax - b||
    converged: bool


def _jacobi_scaling(a):
    d = np.abs(a.diagonal())
    floor = 1e-300 + d.max() * 1e-30 if d.size else 1.0
    return 1.0 / np.sqrt(np.maximum(d, floor))


def solve_sym(a, b, tol=1e-10, max_iter=None, jacobi=True):
    """MINRES for symmetric (possibly indefinite) systems.

    Returns a SolveResult with ||A x - b|| <= tol * ||b|| on success; raises
    SolverError carrying the best iterate's residual otherwise (stagnation
    near a resonance shows up here).
    """
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.size != a.n:
        raise ValidationError("right-hand side length does not match matrix")
    if not np.all(np.isfinite(b)):
        raise ValidationError("right-hand side contains non-finite entries")
    if max_iter is None:
        max_iter = 20 * a.n

    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return SolveResult(np.zeros(a.n), 0, 0.0, True)
    target = tol * norm_b

    acsr = a.to_scipy()
    if jacobi:
        d = _jacobi_scaling(a)
        dmat = scipy.sparse.diags(d)
        ahat = (dmat @ acsr @ dmat).tocsr()
        bhat = d * b
    else:
        d = None
        ahat = acsr
        bhat = b

    # MINRES (Paige & Saunders) on the scaled system, with the convergence
    # test made on the unscaled true residual.
    n = a.n
    x = np.zeros(n)
    r = bhat.copy()
    beta = np.linalg.norm(r)
    v_prev = np.zeros(n)
    v = r / beta
    eta = beta
    gamma, gamma_old = 1.0, 1.0
    sigma, sigma_old = 0.0, 0.0
    w = np.zeros(n)
    w_prev = np.zeros(n)

    best_x = x.copy()
    best_res = np.inf
    iterations = 0

    def true_residual(xh):
        xv = d * xh if d is not None else xh
        return xv, np.linalg.norm(b - acsr @ xv)

    for k in range(1, max_iter + 1):
        av = ahat @ v
        alpha = float(v @ av)
        rnext = av - alpha * v - beta * v_prev
        beta_next = np.linalg.norm(rnext)

        delta = gamma * alpha - gamma_old * sigma * beta
        rho1 = np.hypot(delta, beta_next)
        rho2 = sigma * alpha + gamma_old * gamma * beta
        rho3 = sigma_old * beta
        if rho1 == 0.0:
            break
        gamma_old, sigma_old = gamma, sigma
        gamma, sigma = delta / rho1, beta_next / rho1

        w_new = (v - rho3 * w_prev - rho2 * w) / rho1
        x = x + (gamma * eta) * w_new
        eta = -sigma * eta
        w_prev, w = w, w_new
        iterations = k

        if beta_next > 0.0:
            v_prev, v = v, rnext / beta_next
            beta = beta_next

        est = abs(eta)
        if est <= target or beta_next == 0.0 or k == max_iter or k % 100 == 0:
            xv, res = true_residual(x)
            if res < best_res:
                best_res = res
                best_x = xv
            if res <= target:
                return SolveResult(xv, k, res, True)
            if beta_next == 0.0:
                break

    raise SolverError(
        f"MINRES did not reach tol={tol:g} within {iterations} iterations "
        f"(best residual {best_res:.3e}, target {target:.3e})",
        iterations=iterations, residual=best_res)


def solve_dense(a, b):
    """Dense LDL^T solve (LAPACK sysv); fallback/oracle for n <= 2000."""
    if a.n > 2000:
        raise ValidationError("dense LDL^T fallback limited to n <= 2000")
    ad = a.to_scipy().toarray()
    ad = 0.5 * (ad + ad.T)
    return scipy.linalg.solve(ad, np.asarray(b, dtype=float), assume_a="sym")


@dataclass
class EigenResult:
    value: float
    vector: np.ndarray
    residual: float          # ||K x - value * M x||
    iterations: int
    shift: float


def _shifted_factor(kcsr, mcsr, sigma):
    """LU of K - sigma M, perturbing the shift on exact singularity."""
    shift = float(sigma)
    for attempt in range(4):
        try:
            lu = scipy.sparse.linalg.splu(
                (kcsr - shift * mcsr).tocsc(),
                permc_spec="MMD_AT_PLUS_A", options=dict(SymmetricMode=True))
            return lu, shift
        except RuntimeError:
            shift = sigma + (abs(sigma) + 1.0) * 1e-8 * (attempt + 1)
    raise SolverError(f"shifted factorization failed near sigma={sigma:g}")


def smallest_eigenpair(k_mat, m_mat, sigma, tol=1e-8, max_iter=200):
    """Generalized eigenvalue of (K, M) nearest to sigma via shift-and-invert.

    Inverse iteration on (K - sigma M)^{-1} M with a sparse LU inner solve;
    for clustered spectra the shift is moved to the running Rayleigh quotient
    (a few refactorizations) to restore fast convergence. A factorization
    breakdown (shift exactly on an eigenvalue) perturbs the shift and retries.
    """
    n = k_mat.n
    kcsr = k_mat.to_scipy()
    mcsr = m_mat.to_scipy()
    lu, shift = _shifted_factor(kcsr, mcsr, sigma)

    rng = np.random.default_rng(_EIG_SEED)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)

    value = shift
    residual = np.inf
    iterations = 0
    fixed_phase = min(40, max_iter)
    refactors = 0
    it_since_refactor = 0
    while iterations < max_iter:
        y = lu.solve(mcsr @ x)
        ny = np.linalg.norm(y)
        if not np.isfinite(ny) or ny == 0.0:
            raise SolverError(f"inverse iteration breakdown at sigma={sigma:g}")
        x = y / ny
        kx = kcsr @ x
        mx = mcsr @ x
        value = float(x @ kx) / float(x @ mx)
        residual = float(np.linalg.norm(kx - value * mx))
        iterations += 1
        it_since_refactor += 1
        denom = np.linalg.norm(kx)
        if denom > 0.0 and residual <= tol * denom:
            return EigenResult(value, x, residual, iterations, shift)
        if it_since_refactor >= fixed_phase and refactors < 6:
            lu, shift = _shifted_factor(kcsr, mcsr, value)
            refactors += 1
            it_since_refactor = 0
            fixed_phase = 10
    return EigenResult(value, x, residual, iterations, shift)
