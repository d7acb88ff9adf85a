import math

import numpy as np
import pytest

from rieszlab import geometry as geo


def test_circle_quadrature_is_spectral():
    m = geo.make_mesh("circle", 64, radius=2.0)
    assert m.total_measure == pytest.approx(4 * math.pi, rel=1e-13)
    # integral of x^2 over the circle of radius 2 is pi * r^3
    assert np.dot(m.nodes[:, 0] ** 2, m.weights) == pytest.approx(8 * math.pi, rel=1e-12)
    np.testing.assert_allclose(m.normals, m.nodes / 2.0, atol=1e-14)


def test_ellipse_perimeter_matches_elliptic_integral():
    from scipy.special import ellipe

    a, b = 1.5, 0.7
    m = geo.make_mesh("circle", 256, axes=(a, b))
    exact = 4 * a * ellipe(1 - (b / a) ** 2)
    assert m.total_measure == pytest.approx(exact, rel=1e-12)


def test_sphere_area_and_normals():
    m = geo.make_mesh("sphere", 2000)
    assert m.total_measure == pytest.approx(4 * math.pi, rel=2e-3)
    assert geo.sphere_area(3) == pytest.approx(4 * math.pi)
    assert geo.sphere_area(2) == pytest.approx(2 * math.pi)


def test_flat_window_and_graph():
    w = geo.make_mesh("torus_window", 32, n=3, length=4.0)
    assert w.size == 32 * 32
    assert w.total_measure == pytest.approx(16.0)
    assert np.all(w.normals[:, -1] == -1.0)
    g = geo.make_mesh("graph2d", 400, profile=lambda x: 0.2 * np.sin(x), lipschitz=0.25)
    assert g.contains([[0.0, 1.0]])[0] and not g.contains([[0.0, -1.0]])[0]
    with pytest.raises(ValueError, match="Lipschitz"):
        geo.make_mesh("graph2d", 400, profile=lambda x: np.sin(3 * x), lipschitz=1.0)


def test_bad_parameters_are_rejected():
    with pytest.raises(ValueError):
        geo.make_mesh("klein_bottle", 64)
    with pytest.raises(ValueError):
        geo.make_mesh("circle", 8)
    with pytest.raises(ValueError):
        geo.make_mesh("circle", 64, radius=-1.0)
    with pytest.raises(ValueError):
        geo.make_mesh("perturbed_circle", 64, amplitude=0.9, terms=3)
    with pytest.raises(ValueError):
        geo.make_mesh("polyline", 64, vertices=[[0, 0], [1, 0]])


def test_distance_and_containment():
    m = geo.make_mesh("circle", 128)
    p = np.array([[0.0, 0.0], [0.5, 0.0], [2.0, 0.0]])
    np.testing.assert_allclose(m.distance(p), [1.0, 0.5, 1.0])
    np.testing.assert_array_equal(m.contains(p), [True, True, False])
    sq = geo.make_mesh("polyline", 200, vertices=[[0, 0], [1, 0], [1, 1], [0, 1]])
    assert sq.total_measure == pytest.approx(4.0)
    np.testing.assert_allclose(sq.distance([[0.5, 0.5], [0.5, 0.1]]), [0.5, 0.1])
    np.testing.assert_array_equal(sq.contains([[0.5, 0.5], [1.5, 0.5]]), [True, False])


def test_ahlfors_constants_of_flat_line_and_circle():
    flat = geo.make_mesh("torus_window", 1024, length=8.0)
    rep = geo.ahlfors_constants(flat, [0.1, 0.5, 1.0])
    # ball of radius r on a line has length 2r exactly
    assert rep.normalized_lower == pytest.approx(1.0, abs=1e-9)
    assert rep.normalized_upper == pytest.approx(1.0, abs=1e-9)
    circ = geo.make_mesh("circle", 1024)
    rep = geo.ahlfors_constants(circ, [0.1, 0.5, 1.0, 1.9])
    # arc within distance r of a unit-circle point: 4 arcsin(r/2)
    expected = [4 * math.asin(r / 2) / (2 * r) for r in (0.1, 0.5, 1.0, 1.9)]
    assert rep.normalized_lower == pytest.approx(min(expected), rel=1e-4)
    assert rep.normalized_upper == pytest.approx(max(expected), rel=1e-4)
    with pytest.raises(ValueError):
        geo.ahlfors_constants(circ, [circ.h])


def test_normal_oscillation_flat_zero_circle_decays():
    flat = geo.make_mesh("torus_window", 256, length=4.0)
    assert geo.normal_bmo_norm(flat) <= 1e-13
    circ = geo.make_mesh("circle", 512)
    prof = geo.normal_vmo_profile(circ)
    osc = [o for _, o in prof]
    assert all(a < b for a, b in zip(osc, osc[1:]))
    # for a smooth curve the oscillation is about r * curvature / 2
    r, o = prof[0]
    assert o == pytest.approx(r / 2, rel=0.2)


def test_corner_keeps_normal_oscillation_away_from_zero():
    sq = geo.make_mesh("polyline", 800, vertices=[[0, 0], [1, 0], [1, 1], [0, 1]])
    prof = geo.normal_vmo_profile(sq)
    assert min(o for _, o in prof) > 0.2


def test_divergence_theorem_on_closed_meshes():
    field = lambda x: np.column_stack([x[:, 0] ** 3, x[:, 0] * x[:, 1]])
    div = lambda x: 3 * x[:, 0] ** 2 + x[:, 0]
    for mesh in (
        geo.make_mesh("circle", 256, axes=(1.5, 0.7)),
        geo.make_mesh("perturbed_circle", 512, amplitude=0.1, terms=3),
    ):
        assert geo.divergence_check(mesh, field, div) < 1e-8
    # polylines use the midpoint rule on each segment: second order
    tri = [[0, 0], [2, 0], [1, 1.5]]
    errs = [geo.divergence_check(geo.make_mesh("polyline", N, vertices=tri), field, div) for N in (200, 400, 800)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    np.testing.assert_allclose(rates, 2.0, atol=0.1)


def test_mesh_csv_round_trip():
    m = geo.make_mesh("circle", 64, axes=(1.5, 0.7))
    back = geo.mesh_from_csv(geo.mesh_to_csv(m))
    np.testing.assert_array_equal(back.nodes, m.nodes)
    np.testing.assert_array_equal(back.weights, m.weights)
    np.testing.assert_array_equal(back.normals, m.normals)
    assert back.closed and back.params["source_kind"] == "circle"
    with pytest.raises(ValueError):
        geo.mesh_from_csv("x1,x2\n1,2\n")


def test_polyline_from_csv():
    text = "x,y\n0,0\n1,0\n1,1\n0,1\n"
    m = geo.polyline_from_csv(text, 100)
    assert m.total_measure == pytest.approx(4.0)
    assert m.size >= 100
