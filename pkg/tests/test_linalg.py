import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lumplab.errors import ConvergenceError, DimensionError, NotPositiveDefinite
from lumplab.linalg import (
    BandedSPD,
    KronOperator,
    SymMatrix,
    banded_cholesky_solve,
    cho_solve,
    cholesky,
    kron_materialize,
    kron_solve,
    read_dense_csv,
    read_matrix_market,
    svd,
    sym_eig,
    thomas_solve,
    write_dense_csv,
    write_matrix_market,
)
from lumplab.linalg.io import read_dense_csv as _read_csv, write_band_csv


def spd(rng, n):
    x = rng.standard_normal((n, n))
    return x @ x.T / n + np.eye(n)


# -- SymMatrix ---------------------------------------------------------------------


def test_symmatrix_symmetrizes_by_averaging():
    s = SymMatrix([[1.0, 2.0], [4.0, 1.0]])
    assert s.data[0, 1] == s.data[1, 0] == 3.0


def test_symmatrix_rejects_non_square():
    with pytest.raises(DimensionError):
        SymMatrix(np.ones((2, 3)))


# -- sym_eig ------------------------------------------------------------------------


@pytest.mark.parametrize(
    "a, expected",
    [
        (np.eye(3), [1, 1, 1]),
        (np.diag([3.0, 1.0, 2.0]), [1, 2, 3]),
        ([[2.0, 1.0], [1.0, 2.0]], [1, 3]),
    ],
)
def test_sym_eig_small_examples(a, expected):
    np.testing.assert_allclose(sym_eig(a).values, expected, atol=1e-14)


@pytest.mark.parametrize("n, method", [(5, "jacobi"), (40, "jacobi"), (40, "ql"), (90, None)])
def test_sym_eig_residual_and_orthogonality(n, method):
    rng = np.random.default_rng(n)
    x = rng.standard_normal((n, n))
    a = x + x.T
    res = sym_eig(a, method=method)
    assert np.all(np.diff(res.values) >= 0)
    fro = np.linalg.norm(a)
    for k in range(n):
        v = res.vectors[:, k]
        assert np.linalg.norm(a @ v - res.values[k] * v) <= 1e-12 * fro * 10
    np.testing.assert_allclose(res.vectors.T @ res.vectors, np.eye(n), atol=1e-12)
    np.testing.assert_allclose(res.values, np.linalg.eigvalsh(a), atol=1e-12 * fro)


def test_sym_eig_one_by_one():
    res = sym_eig([[4.0]])
    assert res.values.tolist() == [4.0]


# -- svd ----------------------------------------------------------------------------


def test_svd_rank_one_outer_product():
    rng = np.random.default_rng(1)
    b = rng.standard_normal(4)
    c = rng.standard_normal(3)
    b /= np.linalg.norm(b)
    c /= np.linalg.norm(c)
    s = svd(np.outer(b, c)).singular_values
    assert s[0] == pytest.approx(1.0, abs=1e-14)
    assert np.all(np.abs(s[1:]) <= 1e-14)


def test_svd_zero_matrix():
    assert np.all(svd(np.zeros((3, 4))).singular_values == 0)


def test_svd_frobenius_identity():
    s = svd([[1.0, 2.0], [3.0, 4.0]]).singular_values
    assert np.sum(s**2) == pytest.approx(30.0, rel=1e-14)
    assert s[0] >= s[1] >= 0


@pytest.mark.parametrize("shape", [(7, 4), (4, 7), (12, 12)])
def test_svd_reconstruction(shape):
    a = np.random.default_rng(3).standard_normal(shape)
    r = svd(a)
    recon = (r.left_vectors * r.singular_values) @ r.right_vectors.T
    assert np.linalg.norm(a - recon) <= 1e-12 * np.linalg.norm(a)
    np.testing.assert_allclose(r.singular_values, np.linalg.svd(a, compute_uv=False), rtol=1e-12)


def test_svd_rank_deficient_converges():
    rng = np.random.default_rng(5)
    u = rng.standard_normal((60, 3))
    a = u @ rng.standard_normal((3, 60))
    s = svd(a).singular_values
    assert np.all(s[3:] <= 1e-12 * s[0])


def test_svd_sweep_cap_raises():
    a = np.random.default_rng(0).standard_normal((20, 20))
    with pytest.raises(ConvergenceError):
        svd(a, max_sweeps=1)


# -- Cholesky --------------------------------------------------------------------------


def test_cholesky_identity():
    np.testing.assert_array_equal(cholesky(np.eye(3)), np.eye(3))


def test_cholesky_hand_factor():
    np.testing.assert_allclose(cholesky([[4.0, 2.0], [2.0, 5.0]]), [[2.0, 0.0], [1.0, 2.0]], atol=1e-15)


def test_cholesky_indefinite_reports_pivot():
    with pytest.raises(NotPositiveDefinite) as err:
        cholesky([[1.0, 2.0], [2.0, 1.0]])
    assert err.value.pivot == 1
    assert err.value.value == pytest.approx(-3.0)


def test_cho_solve_matches_dense():
    rng = np.random.default_rng(2)
    a = spd(rng, 8)
    b = rng.standard_normal(8)
    np.testing.assert_allclose(cho_solve(cholesky(a), b), np.linalg.solve(a, b), rtol=1e-12)


# -- banded -------------------------------------------------------------------------------


def test_banded_diagonal_is_division():
    p = BandedSPD.from_dense(np.diag([2.0, 4.0, 8.0]))
    np.testing.assert_allclose(banded_cholesky_solve(p, [2.0, 2.0, 2.0]), [1.0, 0.5, 0.25])
    np.testing.assert_allclose(thomas_solve(p, [2.0, 2.0, 2.0]), [1.0, 0.5, 0.25])


def test_banded_tridiagonal_example():
    a = np.array([[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]])
    rhs = np.array([1.0, 0.0, 1.0])
    ref = np.linalg.solve(a, rhs)
    p = BandedSPD.from_dense(a)
    np.testing.assert_allclose(banded_cholesky_solve(p, rhs), ref, rtol=1e-14)
    np.testing.assert_allclose(thomas_solve(p, rhs), ref, rtol=1e-14)
    np.testing.assert_allclose(ref, [1.0, -1.0, 1.0])


def test_banded_full_bandwidth_matches_dense():
    rng = np.random.default_rng(4)
    a = spd(rng, 9)
    rhs = rng.standard_normal(9)
    p = BandedSPD.from_dense(a, bandwidth=8)
    np.testing.assert_allclose(banded_cholesky_solve(p, rhs), np.linalg.solve(a, rhs), rtol=1e-12)


def test_banded_rejects_entries_outside_band():
    with pytest.raises(DimensionError):
        BandedSPD.from_dense(np.ones((3, 3)) + 3 * np.eye(3), bandwidth=1)


def test_banded_not_positive_definite():
    with pytest.raises(NotPositiveDefinite):
        BandedSPD.from_dense([[1.0, 2.0], [2.0, 1.0]])


def test_thomas_rejects_wide_band():
    a = np.diag(np.full(4, 4.0)) + np.diag(np.ones(2), 2) + np.diag(np.ones(2), -2)
    with pytest.raises(DimensionError):
        thomas_solve(BandedSPD.from_dense(a), np.ones(4))


def test_flop_counts_scale_linearly_in_n():
    def flops(n, b, fn):
        a = np.diag(np.full(n, 10.0))
        for d in range(1, b + 1):
            a += np.diag(np.ones(n - d), d) + np.diag(np.ones(n - d), -d)
        return fn(BandedSPD.from_dense(a, b), np.ones(n), return_flops=True)[1]

    r = flops(2000, 3, banded_cholesky_solve) / flops(1000, 3, banded_cholesky_solve)
    assert 1.8 < r < 2.2
    r = flops(2000, 1, thomas_solve) / flops(1000, 1, thomas_solve)
    assert 1.8 < r < 2.2
    # factorization work grows like b^2 at fixed n (the O(nb) solve dilutes the ratio)
    assert flops(1000, 6, banded_cholesky_solve) > 2.2 * flops(1000, 3, banded_cholesky_solve)


def test_banded_block_rhs():
    rng = np.random.default_rng(8)
    a = np.diag(np.full(6, 4.0)) + np.diag(np.ones(5), 1) + np.diag(np.ones(5), -1)
    rhs = rng.standard_normal((6, 3))
    ref = np.linalg.solve(a, rhs)
    p = BandedSPD.from_dense(a)
    np.testing.assert_allclose(banded_cholesky_solve(p, rhs), ref, rtol=1e-13)
    np.testing.assert_allclose(thomas_solve(p, rhs), ref, rtol=1e-13)


# -- Kronecker -----------------------------------------------------------------------------


def test_kron_identity():
    kop = KronOperator.single(np.eye(2), np.eye(3))
    np.testing.assert_array_equal(kron_materialize(kop).data, np.eye(6))
    rhs = np.arange(6.0)
    np.testing.assert_allclose(kron_solve(kop, rhs), rhs)


def test_kron_materialize_block_definition():
    b = np.array([[1.0, 2.0], [3.0, 4.0]])
    c = np.array([[5.0, 6.0], [7.0, 8.0]])
    full = KronOperator.single(b, c).to_dense()
    for i in range(2):
        for j in range(2):
            np.testing.assert_array_equal(full[2 * i : 2 * i + 2, 2 * j : 2 * j + 2], b[i, j] * c)


def test_kron_materialize_symmetric_factors_give_symmatrix():
    rng = np.random.default_rng(7)
    out = kron_materialize(KronOperator.single(spd(rng, 2), spd(rng, 3)))
    assert isinstance(out, SymMatrix)
    assert out.n == 6


def test_kron_materialize_cap():
    with pytest.raises(DimensionError):
        kron_materialize(KronOperator.single(np.eye(3), np.eye(3)), cap=8)


def test_kron_materialize_linear():
    rng = np.random.default_rng(6)
    b1, c1, b2, c2 = (spd(rng, 3) for _ in range(4))
    kop = KronOperator(((1.0, (b1, c1)), (0.5, (b2, c2))))
    np.testing.assert_allclose(kop.to_dense(), np.kron(b1, c1) + 0.5 * np.kron(b2, c2), rtol=1e-15)
    x = rng.standard_normal(9)
    np.testing.assert_allclose(kop.matvec(x), kop.to_dense() @ x, rtol=1e-13)


def test_kron_terms_sorted_by_weight():
    kop = KronOperator(((0.1, (np.eye(2), np.eye(2))), (2.0, (np.eye(2), np.eye(2)))))
    assert [t.weight for t in kop.terms] == [2.0, 0.1]


def test_kron_inconsistent_dims():
    with pytest.raises(DimensionError):
        KronOperator(((1.0, (np.eye(2), np.eye(2))), (1.0, (np.eye(3), np.eye(2)))))


def test_kron_solve_diagonal_factors():
    d = np.array([1.0, 2.0])
    e = np.array([3.0, 5.0, 7.0])
    rhs = np.ones(6)
    x = kron_solve(KronOperator.single(np.diag(d), np.diag(e)), rhs)
    np.testing.assert_allclose(x, 1.0 / np.outer(d, e).ravel())


@pytest.mark.parametrize("k", [2, 3])
def test_kron_solve_random_spd(k):
    rng = np.random.default_rng(10 + k)
    factors = [spd(rng, 3) for _ in range(k)]
    kop = KronOperator.single(*factors, weight=1.7)
    rhs = rng.standard_normal(kop.n)
    np.testing.assert_allclose(kron_solve(kop, rhs), np.linalg.solve(kop.to_dense(), rhs), rtol=1e-11)


def test_kron_solve_banded_factors():
    t = np.diag(np.full(5, 4.0)) + np.diag(np.ones(4), 1) + np.diag(np.ones(4), -1)
    kop = KronOperator.single(BandedSPD.from_dense(t), SymMatrix(t[:3, :3]))
    rhs = np.arange(15.0)
    np.testing.assert_allclose(kron_solve(kop, rhs), np.linalg.solve(kop.to_dense(), rhs), rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_kron_solve_property(n1, n2, seed):
    rng = np.random.default_rng(seed)
    kop = KronOperator.single(spd(rng, n1), spd(rng, n2))
    rhs = rng.standard_normal(n1 * n2)
    x = kron_solve(kop, rhs)
    assert np.linalg.norm(kop.matvec(x) - rhs) <= 1e-10 * max(1.0, np.linalg.norm(rhs)) * 10


# -- I/O ----------------------------------------------------------------------------------


def test_matrix_market_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    a = spd(rng, 6)
    a[0, 5] = a[5, 0] = 0.0
    write_matrix_market(tmp_path / "a.mtx", a)
    assert "symmetric" in (tmp_path / "a.mtx").read_text().splitlines()[0]
    b = read_matrix_market(tmp_path / "a.mtx")
    assert np.array_equal(a, b)


def test_matrix_market_general(tmp_path):
    a = np.random.default_rng(1).standard_normal((3, 4))
    write_matrix_market(tmp_path / "g.mtx", a)
    assert np.array_equal(read_matrix_market(tmp_path / "g.mtx"), a)


def test_dense_csv_round_trip(tmp_path):
    a = np.random.default_rng(2).standard_normal((5, 5))
    write_dense_csv(tmp_path / "a.csv", a, comment="hash=abc")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "# hash=abc"
    assert lines[1] == "5"
    assert np.array_equal(read_dense_csv(tmp_path / "a.csv"), a)
    assert np.array_equal(_read_csv(tmp_path / "a.csv"), a)


def test_band_csv_layout(tmp_path):
    t = np.diag(np.full(4, 4.0)) + np.diag(np.ones(3), 1) + np.diag(np.ones(3), -1)
    write_band_csv(tmp_path / "b.csv", BandedSPD.from_dense(t))
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "offset,values"
    assert lines[1] == "0,4,4,4,4"
    assert lines[2] == "1,1,1,1"
