import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from fastsum import KernelSumEstimator
from fastsum.estimators import evaluate_field
from fastsum.types import EstimatorConfig, KernelSpec, QuerySet, SourceSet

from _scenes import make_query_points, make_sources


def test_get_params_set_params_clone():
    est = KernelSumEstimator(method="barnes_hut", beta=3.5, seed=7)
    params = est.get_params()
    assert params["beta"] == 3.5
    assert params["method"] == "barnes_hut"
    est2 = clone(est)
    assert est2.get_params() == params
    est.set_params(beta=1.0)
    assert est.get_params()["beta"] == 1.0


def test_predict_matches_functional_api():
    s = make_sources(200, seed=50)
    qs = make_query_points(16, seed=51)
    est = KernelSumEstimator(method="stochastic", kernel="coulomb", seed=3,
                             samples_per_subdomain=2)
    est.fit(s.positions, masses=s.masses)
    got = est.predict(qs)
    want = evaluate_field(
        EstimatorConfig("stochastic", samples_per_subdomain=2, seed=3),
        SourceSet(s.positions, s.masses), KernelSpec("coulomb"), QuerySet(qs))
    np.testing.assert_array_equal(got, want.values)
    full = est.evaluate(qs)
    np.testing.assert_array_equal(full.values, got)
    assert full.visited_nodes.shape == (16,)


def test_fit_defaults_unit_masses_for_scalar_kernels():
    X = make_query_points(10, seed=0, span=1.0)
    est = KernelSumEstimator(method="brute_force").fit(X)
    np.testing.assert_array_equal(est.sources_.masses, np.ones((10, 1)))


def test_winding_requires_explicit_masses():
    X = make_query_points(10, seed=0, span=1.0)
    with pytest.raises(ValueError, match="3-channel"):
        KernelSumEstimator(kernel="winding_dipole").fit(X)
    with pytest.raises(ValueError, match="3 mass"):
        KernelSumEstimator(kernel="winding_dipole").fit(X, masses=np.ones(10))


def test_predict_before_fit_raises():
    with pytest.raises(NotFittedError):
        KernelSumEstimator().predict([[0, 0, 0]])


def test_shape_validation():
    with pytest.raises(ValueError):
        KernelSumEstimator().fit(np.zeros((4, 2)))
    est = KernelSumEstimator(method="brute_force").fit(np.eye(3))
    with pytest.raises(ValueError):
        est.predict(np.zeros((2, 4)))


def test_normalize_rescales_sources_and_queries():
    rng = np.random.default_rng(60)
    X = rng.uniform(100, 200, size=(50, 3))
    q = rng.uniform(100, 200, size=(8, 3))
    est = KernelSumEstimator(method="brute_force", normalize=True).fit(X)
    # the fitted sources live in the unit cube
    assert np.all(np.abs(est.sources_.positions) <= 1.0)
    # predicting is equivalent to evaluating the normalized geometry directly
    manual = KernelSumEstimator(method="brute_force").fit(
        X * est.scale_ + est.offset_)
    np.testing.assert_allclose(est.predict(q),
                               manual.predict(q * est.scale_ + est.offset_),
                               rtol=1e-12)


def test_brute_force_skips_tree_build():
    X = make_query_points(10, seed=0, span=1.0)
    est = KernelSumEstimator(method="brute_force").fit(X)
    assert est.tree_ is None
    est = KernelSumEstimator(method="barnes_hut").fit(X)
    assert est.tree_ is not None
    assert est.tree_.branching_per_dim == 2
