import numpy as np
import pytest

from cubicsphere.atoms import extract_atoms
from cubicsphere.sphere_moment import INFINITY, is_infinity, moment_matrix, to_sphere


def sorted_points(points):
    return sorted((to_sphere(z) for z in points), key=tuple)


def assert_same_points(got, expected, tol=1e-6):
    got, expected = [to_sphere(z) for z in got], [to_sphere(z) for z in expected]
    assert len(got) == len(expected)
    for x in expected:
        assert min(np.linalg.norm(x - y) for y in got) <= tol


def test_single_atom():
    m = extract_atoms(moment_matrix(1 + 1j, 3))
    assert len(m) == 1
    assert m.points[0] == pytest.approx(1 + 1j, abs=1e-10)
    assert m.weights[0] == pytest.approx(1.0, abs=1e-10)


def test_two_poles():
    A = 0.5 * moment_matrix(0, 3) + 0.5 * moment_matrix(INFINITY, 3)
    m = extract_atoms(A)
    assert len(m) == 2
    assert sum(is_infinity(z) for z in m.points) == 1
    assert np.allclose(m.weights, [0.5, 0.5], atol=1e-10)
    assert m.residual <= 1e-10


def test_three_real_atoms():
    A = sum(moment_matrix(z, 3) for z in (0, 1, -1)) / 3
    m = extract_atoms(A)
    assert_same_points(m.points, [0, 1, -1], tol=1e-8)
    assert np.allclose(m.weights, 1 / 3, atol=1e-8)
    assert np.linalg.norm(m.matrix() - A) <= 1e-10


def test_four_atoms_through_gamma_range():
    # tetrahedron vertices: A has full rank, the pencil runs on G_A^Gamma
    pts = [complex(1, 1), complex(-1, -1), complex(1, -1) * 0.3, INFINITY]
    A = sum(moment_matrix(z, 3) for z in pts)
    m = extract_atoms(A)
    assert_same_points(m.points, pts)
    assert np.linalg.norm(m.matrix() - A) <= 1e-6 * np.linalg.norm(A)


@pytest.mark.parametrize("seed", range(20))
def test_random_round_trip(seed):
    rng = np.random.default_rng(seed)
    k = 1 + seed % 3
    pts = [complex(*rng.standard_normal(2)) for _ in range(k)]
    if seed % 5 == 0:
        pts[0] = INFINITY
    w = rng.uniform(0.1, 1.0, k)
    A = sum(wi * moment_matrix(z, 3) for wi, z in zip(w, pts))
    m = extract_atoms(A)
    assert_same_points(m.points, pts)
    assert np.linalg.norm(m.matrix() - A) <= 1e-6 * np.linalg.norm(A)


def test_lower_degree():
    pts = [0.5j, -2.0]
    A = moment_matrix(pts[0], 2) + moment_matrix(pts[1], 2)
    assert_same_points(extract_atoms(A).points, pts)


def test_too_many_atoms_raise():
    rng = np.random.default_rng(3)
    A = sum(moment_matrix(complex(*rng.standard_normal(2)), 3) for _ in range(8))
    with pytest.raises(ValueError, match="extraction failed"):
        extract_atoms(A)


def test_non_moment_matrix_raises():
    with pytest.raises(ValueError, match="extraction failed"):
        extract_atoms(np.eye(3))


def test_zero_matrix_has_no_atoms():
    assert len(extract_atoms(np.zeros((4, 4)))) == 0
