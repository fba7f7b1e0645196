import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lumplab.errors import DimensionError, NotPositiveDefinite
from lumplab.linalg import matrix_bandwidth, sym_eig
from lumplab.lumping import band_split, lump, make_Pi, make_Pii, make_Pij, vector_pde_wrap
from lumplab.pencil import gen_eigvals, loewner_compare, Ordering
from lumplab.splinefem import SplineSpace, assemble_1d, assemble_2d

TRI = np.array([[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]])


def spd(rng, n):
    x = rng.standard_normal((n, n))
    return x @ x.T / n + np.eye(n)


@pytest.mark.parametrize("b", [[[2.0, 1.0], [1.0, 2.0]], [[2.0, -1.0], [-1.0, 2.0]]])
def test_lump_small(b):
    np.testing.assert_array_equal(lump(b).data, np.diag([3.0, 3.0]))


def test_lump_preserves_row_sums_of_nonnegative_matrix():
    mass = assemble_1d(SplineSpace(3, 12), bc="neumann").M
    e = np.ones(mass.n)
    assert e @ (lump(mass).data - mass.data) @ e == pytest.approx(0.0, abs=1e-14)


def test_lump_zero_row():
    b = np.diag([1.0, 0.0])
    np.testing.assert_array_equal(np.diag(lump(b).data), [1.0, 0.0])


def test_band_split_cases():
    rng = np.random.default_rng(0)
    b = spd(rng, 5)
    s1 = band_split(b, 1)
    np.testing.assert_array_equal(s1.D, np.diag(np.diag(b)))
    np.testing.assert_array_equal(s1.D + s1.R, b)
    assert not band_split(b, 5).R.any()
    s2 = band_split(TRI, 2)
    assert not s2.R.any()
    np.testing.assert_array_equal(s2.D, TRI)


@pytest.mark.parametrize("i", [0, 4])
def test_band_split_range(i):
    with pytest.raises(DimensionError):
        band_split(TRI, i)


def test_make_pi_small():
    np.testing.assert_array_equal(make_Pi(TRI, 1).to_dense(), np.diag([3.0, 4.0, 3.0]))
    np.testing.assert_array_equal(make_Pi(TRI, 2).to_dense(), TRI)


def test_make_pi_cubic_members():
    mass = assemble_1d(SplineSpace(3, 20)).M
    for i, bw in [(1, 0), (2, 1), (3, 2), (4, 3)]:
        p = make_Pi(mass, i)
        assert p.bandwidth == bw
        assert matrix_bandwidth(p.to_dense()) == bw
    np.testing.assert_allclose(make_Pi(mass, 4).to_dense(), mass.data, rtol=1e-15)


def test_make_pi_zero_row_rejected():
    with pytest.raises(NotPositiveDefinite):
        make_Pi(np.diag([1.0, 0.0]), 1)


def test_make_pi_solve_matches_dense():
    mass = assemble_1d(SplineSpace(4, 30)).M
    p = make_Pi(mass, 3)
    rhs = np.arange(1.0, mass.n + 1.0)
    np.testing.assert_allclose(p.to_dense() @ p.solve(rhs), rhs, rtol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**31 - 1))
def test_family_is_spd_and_dominates(n, seed):
    rng = np.random.default_rng(seed)
    b = spd(rng, n)
    for i in range(1, n + 1):
        p = make_Pi(b, i).to_dense()
        assert sym_eig(p).values[0] > 0
        # P_i - B = L(R_i) - R_i is positive semidefinite
        assert sym_eig(p - b).values[0] >= -1e-10 * np.linalg.norm(b)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_lumping_semidefiniteness(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, n))
    b = x + x.T
    b[0] = 0.0
    b[:, 0] = 0.0
    ld = lump(b).data
    tol = -1e-10 * max(np.linalg.norm(b), 1.0)
    assert sym_eig(ld - b).values[0] >= tol
    assert sym_eig(ld + b).values[0] >= tol


def test_spectrum_against_row_sum_bounded_by_one():
    mass = assemble_1d(SplineSpace(3, 15)).M
    w = gen_eigvals(mass, lump(mass))
    assert w[0] > 0
    assert w[-1] == pytest.approx(1.0, abs=1e-10)


def test_pij_cases():
    model = assemble_2d(SplineSpace(2, 5))
    b1, b2 = (np.asarray(f.to_dense() if hasattr(f, "to_dense") else f) for f in model.mass_factors)
    p11 = make_Pij([b1, b2], (1, 1)).to_dense()
    np.testing.assert_allclose(p11, np.kron(lump(b1).data, lump(b2).data), rtol=1e-15)
    assert matrix_bandwidth(p11) == 0
    n1, n2 = b1.shape[0], b2.shape[0]
    np.testing.assert_allclose(make_Pij([b1, b2], (n1, n2)).to_dense(), model.M.data, rtol=1e-10, atol=1e-16)
    p12 = make_Pij([b1, b2], (1, 2)).to_dense()
    # L(B1) x P_2(B2) is block diagonal with tridiagonal blocks
    assert matrix_bandwidth(p12) == 1
    assert matrix_bandwidth(make_Pi(model.M, 2).to_dense()) == 1


def test_p11_equals_p1_on_kronecker_mass():
    model = assemble_2d(SplineSpace(3, 4))
    np.testing.assert_allclose(make_Pii(model.mass_factors, 1).to_dense(), make_Pi(model.M, 1).to_dense(), rtol=1e-12)


def test_pii_chain_ordering():
    model = assemble_2d(SplineSpace(3, 6))
    p = [make_Pii(model.mass_factors, i).to_dense() for i in (1, 2, 3)]
    assert loewner_compare(p[0], p[1]) == Ordering.X_GE_Y
    assert loewner_compare(p[1], p[2]) == Ordering.X_GE_Y
    assert loewner_compare(p[2], model.M) == Ordering.X_GE_Y


def test_pij_three_factors():
    rng = np.random.default_rng(4)
    fs = [spd(rng, 3), spd(rng, 2), spd(rng, 4)]
    op = make_Pij(fs, 1)
    np.testing.assert_allclose(np.diag(op.to_dense()), np.kron(np.kron(np.abs(fs[0]).sum(1), np.abs(fs[1]).sum(1)), np.abs(fs[2]).sum(1)))


def test_pij_bad_arity():
    with pytest.raises(DimensionError):
        make_Pij([TRI], [1])
    with pytest.raises(DimensionError):
        make_Pij([TRI, TRI], [1, 1, 1])


def test_vector_wrap():
    np.testing.assert_array_equal(vector_pde_wrap(np.eye(3), 2).to_dense(), np.eye(6))
    d = np.diag([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(np.diag(vector_pde_wrap(d, 2).to_dense()), [1, 2, 3, 1, 2, 3])
    rng = np.random.default_rng(2)
    p = spd(rng, 4)
    op = vector_pde_wrap(p, 3)
    rhs = rng.standard_normal(12)
    np.testing.assert_allclose(op.solve(rhs), np.linalg.solve(op.to_dense(), rhs), rtol=1e-10)
    with pytest.raises(DimensionError):
        vector_pde_wrap(p, 1)


def test_vector_wrap_accepts_family_member():
    op = vector_pde_wrap(make_Pi(TRI, 1), 2)
    np.testing.assert_array_equal(np.diag(op.to_dense()), [3, 4, 3, 3, 4, 3])
