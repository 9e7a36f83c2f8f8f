import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubicsphere import hermitian as herm
from cubicsphere.sphere_moment import (
    INFINITY,
    MONOMIALS,
    CubicOnSphere,
    cubic_from_json,
    generate_bijection_matrix,
    h_to_poly,
    is_infinity,
    moment_matrix,
    moment_matrix_from_x,
    pairing,
    poly_to_h,
    to_riemann,
    to_sphere,
    unit_matrix,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def random_sphere(rng, n):
    X = rng.standard_normal((n, 3))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def unit(a, b, n=4):
    E = np.zeros((n, n), dtype=complex)
    E[a, b] = 1
    return E


# stereographic map


def test_to_riemann_examples():
    assert to_riemann([1, 0, 0]) == 0
    assert to_riemann([0, 0, 1]) == 1
    assert is_infinity(to_riemann([-1, 0, 0]))


def test_to_sphere_examples():
    assert np.allclose(to_sphere(0j), [1, 0, 0], atol=1e-15)
    assert np.allclose(to_sphere(1 + 0j), [0, 0, 1], atol=1e-15)
    assert np.allclose(to_sphere(1j), [0, -1, 0], atol=1e-15)
    assert to_riemann(to_sphere(1j)) == pytest.approx(1j, abs=1e-15)
    assert np.array_equal(to_sphere(INFINITY), [-1.0, 0.0, 0.0])


def test_round_trips():
    rng = np.random.default_rng(0)
    for x in random_sphere(rng, 500):
        assert np.linalg.norm(to_sphere(to_riemann(x)) - x) <= 1e-10
    for _ in range(200):
        z = complex(*rng.standard_normal(2)) * 10 ** rng.uniform(-3, 3)
        assert abs(to_riemann(to_sphere(z)) - z) <= 1e-10 * (1 + abs(z))
    assert np.allclose(to_sphere(to_riemann([-1, 0, 0])), [-1, 0, 0])


def test_z_relations():
    rng = np.random.default_rng(1)
    for x1, x2, x3 in random_sphere(rng, 1000):
        z = to_riemann([x1, x2, x3])
        assert abs(z.conjugate() - complex(x3, x2) / (1 + x1)) <= 1e-12 * (1 + abs(z))
        tol = 1e-12 * (1 + abs(z) ** 2)
        assert abs(abs(z) ** 2 - (1 - x1) / (1 + x1)) <= tol
        assert abs(1 + abs(z) ** 2 - 2 / (1 + x1)) <= tol


# moment matrices


def test_moment_matrix_examples():
    assert np.array_equal(moment_matrix(0, 3), unit(0, 0))
    assert np.array_equal(moment_matrix(INFINITY, 3), unit(3, 3))
    assert np.allclose(moment_matrix(1, 3), np.full((4, 4), 1 / 8), atol=1e-15)


def test_moment_matrix_normalization():
    rng = np.random.default_rng(2)
    for d in (1, 2, 3, 4):
        H1 = unit_matrix(d)
        for z in [complex(*rng.standard_normal(2)) for _ in range(20)] + [0j, INFINITY, 1e9 + 0j]:
            assert herm.inner(H1, moment_matrix(z, d)) == pytest.approx(1.0, abs=1e-12)


def test_large_z_is_continuous_towards_infinity():
    Z = moment_matrix(1e7 + 0j, 3)
    assert np.linalg.norm(Z - moment_matrix(INFINITY, 3)) <= 1e-6


def test_moment_matrix_from_x_examples():
    assert np.allclose(moment_matrix_from_x([1, 0, 0]), unit(0, 0), atol=1e-15)
    Z = moment_matrix_from_x([0, 1, 0])
    # (i x2 + x3)(1 + x1)^2 / 8 and (i x2 + x3)^3 / 8 at x = (0, 1, 0)
    assert Z[0, 1] == pytest.approx(1j / 8, abs=1e-15)
    assert Z[0, 3] == pytest.approx(-1j / 8, abs=1e-15)
    assert Z[0, 0] == pytest.approx(1 / 8, abs=1e-15)


def test_moment_matrix_paths_agree():
    rng = np.random.default_rng(3)
    for d in (1, 2, 3):
        for x in random_sphere(rng, 200):
            A = moment_matrix_from_x(x, d)
            B = moment_matrix(to_riemann(x), d)
            assert np.abs(A - B).max() <= 1e-12
    assert np.allclose(moment_matrix_from_x([-1, 0, 0]), unit(3, 3), atol=1e-15)


def test_moment_matrix_rejects_degree_zero():
    with pytest.raises(ValueError):
        moment_matrix(0, 0)


def test_kronecker_identity_small():
    rng = np.random.default_rng(4)
    for d in (2, 3):
        for _ in range(100):
            z = complex(*rng.standard_normal(2))
            Z = moment_matrix(z, d)
            K = np.kron(np.array([[1, z], [z.conjugate(), abs(z) ** 2]]), Z[:d, :d])
            assert np.linalg.norm(herm.gamma_map(Z) - K) <= 1e-12 * np.linalg.norm(Z)


def test_moment_matrices_span_hermitian_space():
    rng = np.random.default_rng(5)
    vecs = [herm.hermitian_coords(moment_matrix(complex(*rng.standard_normal(2))))
            for _ in range(16)]
    assert np.linalg.matrix_rank(np.array(vecs), tol=1e-10) == 16


# CubicOnSphere


def test_monomial_order_is_degree_then_lexicographic():
    assert MONOMIALS[:6] == ((0, 0, 2), (0, 1, 1), (0, 2, 0), (1, 0, 1), (1, 1, 0), (2, 0, 0))
    assert MONOMIALS[6] == (0, 0, 3) and MONOMIALS[-1] == (3, 0, 0)
    assert len(MONOMIALS) == 16


def test_evaluation_and_gradient():
    rng = np.random.default_rng(6)
    c = rng.standard_normal(16)
    p = CubicOnSphere(c)
    X = rng.standard_normal((20, 3))
    direct = sum(ci * X[:, 0] ** j * X[:, 1] ** k * X[:, 2] ** l for ci, (j, k, l) in zip(c, MONOMIALS))
    assert np.allclose(p(X), direct, atol=1e-13)
    assert p(X[0]) == pytest.approx(direct[0], abs=1e-13)
    h = 1e-6
    num = np.array([(p(X + h * e) - p(X - h * e)) / (2 * h) for e in np.eye(3)]).T
    assert np.allclose(num, p.gradient(X), atol=1e-7)
    numH = np.array([(p.gradient(X + h * e) - p.gradient(X - h * e)) / (2 * h) for e in np.eye(3)])
    assert np.allclose(numH.transpose(1, 0, 2), p.hessian(X), atol=1e-6)


def test_coefficient_access_and_arithmetic():
    p = CubicOnSphere.from_dict({"300": 1.0, "111": -2.5})
    assert p["300"] == 1.0 and p["111"] == -2.5 and p["020"] == 0.0
    q = 2 * p - p
    assert np.array_equal(q.coeffs, p.coeffs)
    assert p.is_homogeneous() and not (p + CubicOnSphere.constant()).is_homogeneous()


def test_json_round_trip_and_key_rules():
    p = cubic_from_json('{"coeffs": {"210": 0.5, "021": -0.25}}')
    assert np.count_nonzero(p.coeffs) == 2
    assert cubic_from_json(json.dumps(p.to_json())) == p
    assert cubic_from_json({"coeffs": {"300": 1.0}})["300"] == 1.0
    with pytest.raises(ValueError, match="300/120/102"):
        cubic_from_json({"coeffs": {"100": 1.0}})
    with pytest.raises(ValueError):
        cubic_from_json({"coeffs": {"400": 1.0}})
    with pytest.raises(ValueError, match="duplicate"):
        cubic_from_json('{"coeffs": {"300": 1, "300": 2}}')
    with pytest.raises(ValueError, match="not a finite number"):
        cubic_from_json({"coeffs": {"300": "one"}})
    with pytest.raises(ValueError):
        cubic_from_json({"coeffs": {"30": 1}})
    with pytest.raises(ValueError):
        cubic_from_json([1, 2])


# the bijection


def test_bijection_matrix_properties():
    M = generate_bijection_matrix(3)
    assert M.shape == (16, 16)
    assert np.linalg.matrix_rank(M) == 16
    assert np.isfinite(np.linalg.cond(M))
    exact = generate_bijection_matrix(3, exact=True)
    for row in exact:
        for v in row:
            # small integers over powers of two
            den = Fraction(str(v)).denominator
            assert den & (den - 1) == 0
    with pytest.raises(ValueError):
        generate_bijection_matrix(4)


def test_constant_one_corresponds_to_binomial_diagonal():
    p = h_to_poly(unit_matrix(3))
    expected = CubicOnSphere.from_dict({"200": 1, "020": 1, "002": 1})
    assert np.allclose(p.coeffs, expected.coeffs, atol=1e-14)
    assert np.allclose(poly_to_h(expected), np.diag([1, 3, 3, 1]), atol=1e-13)


def test_e00_column_is_reduced_corner_entry():
    # (1 + x1)^3 / 8 = (1 + 3 x1 + 3 x1^2 + x1^3) / 8; the constant and x1^2 lift to
    # degree 2, x1 and x1^3 to degree 3 by factors of |x|^2
    p = h_to_poly(unit(0, 0))
    expected = CubicOnSphere.from_dict({"200": 0.5, "020": 0.125, "002": 0.125,
                                        "300": 0.5, "120": 0.375, "102": 0.375})
    assert np.allclose(p.coeffs, expected.coeffs, atol=1e-14)


def test_real_offdiagonal_column():
    # <E01 + E10, Z> = x3 (1 + x1)^2 / 4 on the sphere
    p = h_to_poly(unit(0, 1) + unit(1, 0))
    expected = CubicOnSphere.from_dict({"101": 0.5, "201": 0.5, "021": 0.25, "003": 0.25})
    assert np.allclose(p.coeffs, expected.coeffs, atol=1e-14)


def test_zero_maps_to_zero():
    assert not np.any(h_to_poly(np.zeros((4, 4))).coeffs)


def test_x1_times_norm_squared():
    H = poly_to_h(CubicOnSphere.from_dict({"300": 1, "120": 1, "102": 1}))
    assert pairing(H, [1, 0, 0]) == pytest.approx(1.0, abs=1e-12)
    assert pairing(H, [-1, 0, 0]) == pytest.approx(-1.0, abs=1e-12)
    rng = np.random.default_rng(8)
    for x in random_sphere(rng, 20):
        assert pairing(H, x) == pytest.approx(x[0], abs=1e-12)


@given(seeds)
@settings(max_examples=50, deadline=None)
def test_bijection_round_trip_and_pairing(seed):
    rng = np.random.default_rng(seed)
    p = CubicOnSphere(rng.uniform(-1, 1, 16))
    H = poly_to_h(p)
    assert np.abs(h_to_poly(H).coeffs - p.coeffs).max() <= 1e-10
    X = random_sphere(rng, 20)
    vals = p(X)
    for x, v in zip(X, vals):
        assert abs(pairing(H, x) - v) <= 1e-10


def test_degree_parity_decomposition():
    rng = np.random.default_rng(9)
    p = CubicOnSphere(rng.standard_normal(16))
    even = CubicOnSphere(np.concatenate([p.coeffs[:6], np.zeros(10)]))
    odd = CubicOnSphere(np.concatenate([np.zeros(6), p.coeffs[6:]]))
    H = poly_to_h(p)
    for x in random_sphere(rng, 20):
        plus = 0.5 * (pairing(H, x) + pairing(H, -x))
        minus = 0.5 * (pairing(H, x) - pairing(H, -x))
        assert plus == pytest.approx(even(x), abs=1e-12)
        assert minus == pytest.approx(odd(x), abs=1e-12)


def test_constant_entry_documented_as_quadratic():
    kappa = 2.5
    p = CubicOnSphere.constant(kappa)
    rng = np.random.default_rng(10)
    assert np.allclose(p(random_sphere(rng, 10)), kappa)
    assert math.isclose(p["200"], kappa)
