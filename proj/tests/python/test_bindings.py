import numpy as np
import pytest

import fusedfir as ff


def scalar(y):
    return ff.RegressionProblem(np.array([y], dtype=float), np.ones((1, 1)), taps=1)


def test_prox_examples():
    np.testing.assert_allclose(ff.prox_block_l2(np.array([3.0, 4.0]), 2.5), [1.5, 2.0])
    np.testing.assert_allclose(ff.prox_l1(np.array([1.0, -0.2]), 0.3), [0.7, 0.0])


def test_regressor_hand_example():
    p = ff.build_regressor(np.array([[1.0], [2.0], [3.0], [4.0]]), np.array([10.0, 20, 30, 40]), taps=2)
    np.testing.assert_array_equal(p.phi, [[2, 1], [3, 2], [4, 3]])
    np.testing.assert_array_equal(p.y, [20, 30, 40])


def test_fused_scalar_pair_and_bounds():
    ps = [scalar(0.0), scalar(2.0)]
    r = ff.solve(ps, 1.0, 0.0)
    assert r["converged"]
    np.testing.assert_allclose([t[0] for t in r["thetas"]], [0.5, 1.5], atol=1e-6)
    o = ff.solve_oracle(ps, 1.0, 0.0)
    assert abs(o["objective"] - r["objective"]) <= 1e-5
    assert ff.compute_bounds(ps)["lambda1_max"] == pytest.approx(2.0)
    z, resid, certified = ff.coalescence_certificate(ps, 2.0)
    assert certified and z == pytest.approx(1.0)


def test_errors_map_to_python_exceptions():
    with pytest.raises(ff.PreconditionError, match="fusion bound undefined"):
        ff.compute_bounds([scalar(1.0)])
    with pytest.raises(ff.DataError, match="zero variance"):
        ff.fit_metric(np.ones(3), np.zeros(3))


def test_fit_metric_and_kmeans():
    y = np.array([1.0, 2.0, 3.0])
    assert ff.fit_metric(y, y) == 100.0
    assert ff.fit_metric(y, np.array([1.0, 2.0, 5.0])) == -100.0
    labels, _ = ff.kmeans([np.array([0.0]), np.array([0.1]), np.array([10.0])], 2)
    assert labels == [0, 0, 1]
