import numpy as np
import pytest

from cutrom.errors import InvalidArgumentError, NoInterfaceError
from cutrom.quadrature import TRIANGLE_RULES, cut_bulk_rule, face_rule, interface_rule, triangle_points

TRI = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def test_cut_area():
    rule = cut_bulk_rule(TRI, [-0.5, 0.5, -0.5])
    assert np.isclose(rule.measure, 0.375, atol=1e-14)
    assert (rule.weights >= 0).all()


def test_uncut_cell():
    assert np.isclose(cut_bulk_rule(TRI, [-1, -2, -3]).measure, 0.5)


def test_complement_adds_up():
    rng = np.random.default_rng(0)
    for _ in range(50):
        tri = rng.uniform(-1, 1, (3, 2))
        phi = rng.uniform(-1, 1, 3)
        d1, d2 = tri[1] - tri[0], tri[2] - tri[0]
        area = 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])
        a = cut_bulk_rule(tri, phi).measure + cut_bulk_rule(tri, -phi).measure
        assert abs(a - area) <= 1e-13 * area


def test_interface_chord():
    rule = interface_rule(TRI, [-0.5, 0.5, -0.5])
    assert np.isclose(rule.measure, 0.5)
    assert np.allclose(rule.points[:, 0], 0.5)
    assert np.allclose(rule.normals, [1.0, 0.0])


def test_interface_normal_orthogonal_to_chord():
    rng = np.random.default_rng(3)
    for _ in range(50):
        tri = rng.uniform(-1, 1, (3, 2))
        phi = np.array([-1.0, 1.0, rng.uniform(-1, 1)])
        rule = interface_rule(tri, phi, order=2)
        chord = rule.points[1] - rule.points[0]
        n = rule.normals[0]
        assert abs(np.dot(n, chord)) <= 1e-12 * np.linalg.norm(chord)
        assert np.isclose(np.linalg.norm(n), 1.0, atol=1e-12)
        # phi grows along the normal
        g = np.linalg.solve(np.column_stack([tri[1] - tri[0], tri[2] - tri[0]]).T, phi[1:] - phi[0])
        assert np.dot(g, n) > 0


def test_no_interface():
    with pytest.raises(NoInterfaceError):
        interface_rule(TRI, [1.0, 2.0, 3.0])


def test_snapped_vertex_is_handled():
    rule = cut_bulk_rule(TRI, [0.0, 1.0, -1.0])
    assert 0 < rule.measure < 0.5


@pytest.mark.parametrize("order", [2, 3])
def test_quadratic_exactness(order):
    tri = np.array([[0.1, 0.2], [1.3, 0.4], [0.5, 1.1]])
    pts, wts = triangle_points(tri[None], order)
    f = lambda p: 1 + p[:, 0] - 2 * p[:, 1] + 3 * p[:, 0] ** 2 + p[:, 0] * p[:, 1] - p[:, 1] ** 2
    # exact value through a degree-4 rule on the same triangle
    ref_pts, ref_w = triangle_points(tri[None], 3)
    assert np.isclose(np.sum(wts * f(pts)), np.sum(ref_w * f(ref_pts)), rtol=1e-13)
    assert np.allclose([w.sum() for _, w in TRIANGLE_RULES.values()], 1.0)


def test_bad_order():
    with pytest.raises(InvalidArgumentError):
        cut_bulk_rule(TRI, [-1, 1, 1], order=7)


def test_face_rule():
    rule = face_rule(np.array([[0.0, 0.0], [1.0, 0.0]]), order=2)
    assert np.allclose(rule.weights, [0.5, 0.5])
    assert np.isclose(np.sum(rule.weights * rule.points[:, 0]), 0.5)
    rng = np.random.default_rng(4)
    for _ in range(100):
        face = rng.uniform(-1, 1, (2, 2))
        assert abs(face_rule(face).measure - np.linalg.norm(face[1] - face[0])) <= 1e-14
    up = face_rule(np.array([[0.0, 0.0], [1.0, 0.0]]), toward=(0.5, 1.0))
    assert np.allclose(up.normals, [0.0, 1.0])
    with pytest.raises(InvalidArgumentError):
        face_rule(np.zeros((2, 2)))
