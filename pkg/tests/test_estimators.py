import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from lumplab.errors import DimensionError
from lumplab.estimators import (
    BandedLumpedMass,
    KroneckerLumpedMass,
    LumpedNearestKronecker,
    NearestKroneckerProduct,
)
from lumplab.lumping import make_Pi, make_Pii
from lumplab.nkp import nkp_preconditioner, two_level_preconditioner
from lumplab.splinefem import SplineSpace, assemble_1d, assemble_2d


@pytest.fixture(scope="module")
def mass2d():
    return assemble_2d(SplineSpace(3, 5), "sin_xy")


@pytest.fixture(scope="module")
def square():
    return assemble_2d(SplineSpace(2, 5))


def test_banded_matches_functional_api():
    mass = assemble_1d(SplineSpace(3, 10)).M
    est = BandedLumpedMass(band=2).fit(mass)
    np.testing.assert_array_equal(est.to_dense(), make_Pi(mass, 2).to_dense())
    assert est.n_features_in_ == mass.n


def test_transform_round_trip():
    mass = assemble_1d(SplineSpace(3, 10)).M
    est = BandedLumpedMass(band=3).fit(mass)
    x = np.random.default_rng(0).standard_normal((4, mass.n))
    np.testing.assert_allclose(est.inverse_transform(est.transform(x)), x, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(est.transform(x[0]), est.transform(x[:1]))


def test_kronecker_lumped_on_separable_mass(square):
    est = KroneckerLumpedMass(square.dims, bands=(2, 2)).fit(square.M)
    np.testing.assert_allclose(est.to_dense(), make_Pii(square.mass_factors, 2).to_dense(), rtol=1e-10, atol=1e-15)
    assert est.kronecker_error_ <= 1e-12 * np.linalg.norm(square.M.data)


def test_nearest_kronecker(mass2d):
    est = NearestKroneckerProduct(mass2d.dims).fit(mass2d.M)
    np.testing.assert_allclose(est.to_dense(), nkp_preconditioner(mass2d.M, mass2d.dims).to_dense())
    assert est.kronecker_rank_ > 1
    assert est.error_ > 0


def test_lumped_nearest_kronecker(mass2d):
    est = LumpedNearestKronecker(mass2d.dims, band=2).fit(mass2d.M)
    np.testing.assert_allclose(est.to_dense(), two_level_preconditioner(mass2d.M, mass2d.dims, 2).to_dense())


def test_params_and_clone(mass2d):
    est = LumpedNearestKronecker(mass2d.dims, band=3)
    assert est.get_params() == {"block_dims": mass2d.dims, "band": 3}
    copy = clone(est.set_params(band=2))
    assert copy.band == 2
    assert not hasattr(copy, "preconditioner_")


def test_unfitted():
    with pytest.raises(NotFittedError):
        BandedLumpedMass().transform(np.ones((1, 3)))


def test_input_validation():
    with pytest.raises(ValueError):
        BandedLumpedMass().fit(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        BandedLumpedMass(band=0).fit(np.eye(2))
    with pytest.raises(DimensionError):
        NearestKroneckerProduct((2, 2)).fit(np.eye(6))
    est = BandedLumpedMass().fit(np.eye(3))
    with pytest.raises(DimensionError):
        est.transform(np.ones((2, 4)))


def test_pipeline_composition():
    mass = assemble_1d(SplineSpace(2, 8)).M
    pipe = make_pipeline(BandedLumpedMass(band=1))
    pipe.fit(mass)
    rhs = np.ones((1, mass.n))
    np.testing.assert_allclose(pipe.transform(rhs)[0], rhs[0] / np.abs(mass.data).sum(1))
