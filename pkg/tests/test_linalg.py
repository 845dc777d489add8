import itertools

import numpy as np
import pytest
import scipy.io

from lamedec.errors import SolverError, ValidationError
from lamedec.linalg import (EigenResult, SparseSym, add_scaled, csr_from_triplets,
                            dump_matrix_market, smallest_eigenpair, solve_dense,
                            solve_sym)


def dense(a):
    return a.to_scipy().toarray()


def test_duplicate_triplets_summed():
    a = csr_from_triplets(2, [0, 0], [0, 0], [1.0, 2.0])
    assert a.nnz == 1
    assert dense(a)[0, 0] == 3.0


def test_empty_triplets_zero_matrix():
    a = csr_from_triplets(3, [], [], [])
    assert a.nnz == 0
    assert np.array_equal(a.matvec(np.ones(3)), np.zeros(3))


def test_out_of_range_triplet_rejected():
    with pytest.raises(ValidationError):
        csr_from_triplets(2, [0, 2], [0, 0], [1.0, 1.0])


def test_triplet_order_independence_bit_identical():
    # brute force over all permutations of a small triplet list on a 5x5 matrix
    rows = [0, 1, 4, 0, 1, 0]
    cols = [0, 2, 4, 0, 2, 3]
    vals = [0.1, -0.7, 3.3, 0.2, 1e-9, -2.5]
    ref = csr_from_triplets(5, rows, cols, vals)
    for perm in itertools.permutations(range(len(rows))):
        a = csr_from_triplets(5, [rows[i] for i in perm], [cols[i] for i in perm],
                              [vals[i] for i in perm])
        assert np.array_equal(a.indptr, ref.indptr)
        assert np.array_equal(a.indices, ref.indices)
        assert np.array_equal(a.data, ref.data)   # bitwise


def _random_sym(rng, n, definite):
    """Sparse random symmetric matrix; SPD when definite (diagonally dominant)."""
    a = rng.standard_normal((n, n))
    a = 0.5 * (a + a.T)
    np.fill_diagonal(a, 0.0)
    rows, cols = np.nonzero(np.abs(a) > 0.8)
    keep = rows < cols
    rows, cols = rows[keep], cols[keep]
    vals = a[rows, cols]
    dd = np.arange(n)
    diag = rng.uniform(1.0, 2.0, n) + (n if definite else 0.0)
    return csr_from_triplets(
        n,
        np.concatenate([rows, cols, dd]),
        np.concatenate([cols, rows, dd]),
        np.concatenate([vals, vals, diag]))


def test_solve_identity_one_iteration():
    a = csr_from_triplets(4, range(4), range(4), np.ones(4))
    b = np.array([1.0, -2.0, 3.0, 0.5])
    res = solve_sym(a, b, tol=1e-12)
    assert res.iterations == 1
    assert np.abs(res.x - b).max() < 1e-12


def test_solve_indefinite_diagonal():
    a = csr_from_triplets(2, [0, 1], [0, 1], [1.0, -1.0])
    res = solve_sym(a, np.array([1.0, 1.0]), tol=1e-12)
    assert np.abs(res.x - [1.0, -1.0]).max() < 1e-10


def test_solve_two_by_two_hand_value():
    a = csr_from_triplets(2, [0, 0, 1, 1], [0, 1, 0, 1], [2.0, 1.0, 1.0, 2.0])
    res = solve_sym(a, np.array([3.0, 3.0]), tol=1e-12)
    assert np.abs(res.x - [1.0, 1.0]).max() < 1e-10


def test_zero_rhs_returns_zero():
    a = csr_from_triplets(3, range(3), range(3), [2.0, 3.0, 4.0])
    res = solve_sym(a, np.zeros(3))
    assert res.iterations == 0
    assert np.array_equal(res.x, np.zeros(3))


@pytest.mark.parametrize("definite", [True, False])
def test_residual_contract_vs_dense_oracle(definite):
    rng = np.random.default_rng(42 + definite)
    for n in (20, 80, 200):
        a = _random_sym(rng, n, definite)
        if not definite:
            # indefinite but well-conditioned: shift away from zero
            eigs = np.linalg.eigvalsh(dense(a))
            shift = 0.5 * (eigs.min() + eigs.max())
            a = add_scaled(a, csr_from_triplets(n, range(n), range(n), np.ones(n)),
                           1.0, -shift)
        b = rng.standard_normal(n)
        tol = 1e-10
        res = solve_sym(a, b, tol=tol)
        assert res.converged
        assert np.linalg.norm(dense(a) @ res.x - b) <= tol * np.linalg.norm(b) * 1.01
        oracle = solve_dense(a, b)
        assert np.abs(res.x - oracle).max() < 1e-6 * max(1.0, np.abs(oracle).max())


def test_nonconvergence_raises_with_diagnostics():
    rng = np.random.default_rng(3)
    a = _random_sym(rng, 50, True)
    b = rng.standard_normal(50)
    with pytest.raises(SolverError) as exc:
        solve_sym(a, b, tol=1e-14, max_iter=2)
    assert exc.value.residual is not None
    assert exc.value.iterations == 2


def test_symmetry_audit():
    rng = np.random.default_rng(5)
    a = _random_sym(rng, 30, True)
    assert a.symmetry_error() == 0.0


def test_eigenpair_simple_cases():
    k = csr_from_triplets(2, [0, 1], [0, 1], [1.0, 4.0])
    m_id = csr_from_triplets(2, [0, 1], [0, 1], [1.0, 1.0])
    r = smallest_eigenpair(k, m_id, 0.0)
    assert r.value == pytest.approx(1.0, abs=1e-10)

    m2 = csr_from_triplets(2, [0, 1], [0, 1], [1.0, 2.0])
    r = smallest_eigenpair(k, m2, 1.9)
    assert r.value == pytest.approx(2.0, abs=1e-10)   # generalized eigenvalues {1, 2}

    r = smallest_eigenpair(k, k, 0.5)                 # identity pencil
    assert r.value == pytest.approx(1.0, abs=1e-10)


def test_eigenpair_shift_on_eigenvalue_retries():
    k = csr_from_triplets(2, [0, 1], [0, 1], [1.0, 4.0])
    m = csr_from_triplets(2, [0, 1], [0, 1], [1.0, 1.0])
    r = smallest_eigenpair(k, m, 1.0)   # exactly singular shift
    assert r.value == pytest.approx(1.0, abs=1e-8)


def test_eigenpair_rayleigh_consistency():
    rng = np.random.default_rng(11)
    n = 40
    k = _random_sym(rng, n, True)
    m = csr_from_triplets(n, range(n), range(n), 1.0 + rng.uniform(0, 1, n))
    r = smallest_eigenpair(k, m, 0.0)
    assert isinstance(r, EigenResult)
    x = r.vector
    rq = (x @ (dense(k) @ x)) / (x @ (dense(m) @ x))
    assert abs(r.value - rq) <= 1e-8 * abs(rq)
    assert np.linalg.norm(dense(k) @ x - r.value * (dense(m) @ x)) \
        <= 1e-8 * np.linalg.norm(dense(k) @ x) * 1.01


def test_matrix_market_dump(tmp_path):
    a = csr_from_triplets(3, [0, 1, 2, 0], [0, 1, 2, 1], [1.0, 2.0, 3.0, 0.5])
    a.symmetric = False
    path = tmp_path / "a.mtx"
    dump_matrix_market(a, path)
    back = scipy.io.mmread(path).toarray()
    assert np.abs(back - dense(a)).max() == 0.0


def test_add_scaled_pattern_union():
    a = csr_from_triplets(2, [0], [0], [1.0])
    b = csr_from_triplets(2, [1], [1], [2.0])
    c = add_scaled(a, b, 2.0, -1.0)
    assert np.allclose(dense(c), np.diag([2.0, -2.0]))


def test_dense_fallback_size_limit():
    a = csr_from_triplets(2001, [0], [0], [1.0])
    with pytest.raises(ValidationError):
        solve_dense(a, np.zeros(2001))
