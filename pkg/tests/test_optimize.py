import numpy as np
import pytest

from cubicsphere import cones
from cubicsphere.optimize import (
    fibonacci_sphere,
    maximize_on_sphere,
    minimize_on_sphere,
    oracle_minimum,
    polish,
    scale_to_ball_boundary,
)
from cubicsphere.sphere_moment import CubicOnSphere, poly_to_h, unit_matrix

X1_NORM2 = CubicOnSphere.from_dict({"300": 1, "120": 1, "102": 1})
C111 = CubicOnSphere.from_dict({"111": 1})
ONE = CubicOnSphere.constant(1.0)


def test_minimum_of_x1_times_norm_squared():
    res = minimize_on_sphere(X1_NORM2, n_grid=5000)
    assert res.value == pytest.approx(-1.0, abs=1e-6)
    assert len(res.minimizers) == 1
    assert np.allclose(res.minimizers[0], [-1, 0, 0], atol=1e-6)
    assert res.extraction_ok and not res.warnings


def test_minimum_of_x1x2x3_has_four_minimizers():
    res = minimize_on_sphere(C111, n_grid=5000)
    assert res.value == pytest.approx(-1 / (3 * np.sqrt(3)), abs=1e-6)
    assert len(res.minimizers) == 4
    s = 1 / np.sqrt(3)
    for x in res.minimizers:
        assert np.allclose(np.abs(x), s, atol=1e-6)
        assert np.prod(np.sign(x)) < 0


def test_constant_polynomial():
    res = minimize_on_sphere(ONE, n_grid=5000)
    assert res.value == pytest.approx(1.0, abs=1e-6)
    # every point is a minimizer: extraction cannot apply, local descent still reports points
    assert res.minimizers
    assert any("local descent" in w for w in res.warnings)


def test_maximum():
    res = maximize_on_sphere(X1_NORM2, n_grid=5000)
    assert res.value == pytest.approx(1.0, abs=1e-6)
    assert np.allclose(res.minimizers[0], [1, 0, 0], atol=1e-6)
    assert res.sense == "maximize"
    assert res.gap_to_oracle == pytest.approx(res.value - res.oracle_value)
    assert cones.verify_certificate(res.certified_matrix, res.certificate).passed


@pytest.mark.parametrize("seed", range(5))
def test_odd_cubic_max_is_minus_min(seed):
    c = np.random.default_rng(seed).uniform(-1, 1, 10)
    p = CubicOnSphere.homogeneous(c)
    lo = minimize_on_sphere(p, oracle=False).value
    hi = maximize_on_sphere(p, oracle=False).value
    assert hi == pytest.approx(-lo, abs=1e-8)


@pytest.mark.parametrize("seed", range(10))
def test_random_minimum_matches_oracle_and_certificate(seed):
    p = CubicOnSphere(np.random.default_rng(seed).uniform(-1, 1, 16))
    res = minimize_on_sphere(p)
    assert abs(res.gap_to_oracle) <= 1e-5
    assert res.value <= res.oracle_value + 1e-7
    rep = cones.verify_certificate(res.certified_matrix, res.certificate)
    assert rep.passed, rep.failures
    assert np.allclose(res.certified_matrix, poly_to_h(p) - res.value * unit_matrix(3))
    for x in res.minimizers:
        assert abs(np.linalg.norm(x) - 1) <= 1e-12
        assert abs(p(x) - res.value) <= 1e-6


def test_result_json():
    doc = minimize_on_sphere(C111, n_grid=5000).to_json()
    assert set(doc) == {"sense", "value", "minimizers", "certificate", "oracle_value",
                        "gap_to_oracle", "warnings"}
    assert doc["certificate"]["residual"] <= cones.CERT_EQ_TOL
    assert len(doc["minimizers"]) == 4


# scaling to the unit ball


@pytest.mark.parametrize("coef, lam", [(1.0, 1.0), (2.0, 0.5), (-4.0, 0.25)])
def test_scale_examples(coef, lam):
    assert scale_to_ball_boundary(CubicOnSphere.from_dict({"300": coef})) == pytest.approx(lam, abs=1e-7)


def test_scale_of_x1x2x3():
    assert scale_to_ball_boundary(C111) == pytest.approx(3 * np.sqrt(3), abs=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_scale_matches_max_abs(seed):
    c = np.random.default_rng(seed).uniform(-1, 1, 10)
    p = CubicOnSphere.homogeneous(c)
    max_abs = -oracle_minimum(-p)[0]  # odd: max |p| = max p
    assert scale_to_ball_boundary(c) == pytest.approx(1 / max_abs, abs=1e-6)


def test_scale_rejects_zero_and_quadratic():
    with pytest.raises(ValueError, match="zero cubic"):
        scale_to_ball_boundary(CubicOnSphere(np.zeros(16)))
    with pytest.raises(ValueError, match="homogeneous"):
        scale_to_ball_boundary(X1_NORM2 + ONE)


# the oracle


def test_fibonacci_points_are_on_sphere_and_spread():
    P = fibonacci_sphere(2000)
    assert np.allclose(np.linalg.norm(P, axis=1), 1, atol=1e-14)
    assert np.abs(P.mean(axis=0)).max() <= 1e-3


def test_oracle_examples():
    v, x = oracle_minimum(X1_NORM2, n_grid=5000)
    assert v <= -1 + 1e-8
    assert np.allclose(x, [-1, 0, 0], atol=1e-4)
    v, _ = oracle_minimum(C111, n_grid=5000)
    assert v == pytest.approx(-1 / (3 * np.sqrt(3)), abs=1e-8)
    v, _ = oracle_minimum(ONE, n_grid=5000)
    assert v == pytest.approx(1.0, abs=1e-12)


def test_oracle_rejects_small_grid():
    with pytest.raises(ValueError):
        oracle_minimum(C111, n_grid=999)


def test_polish_stays_on_sphere_and_descends():
    P = fibonacci_sphere(1000)[:50]
    X = polish(C111, P.copy())
    assert np.allclose(np.linalg.norm(X, axis=1), 1, atol=1e-12)
    assert np.all(C111(X) <= C111(P) + 1e-15)
