import math

import numpy as np
import pytest

from rieszlab import clifford as cl
from rieszlab import geometry as geo
from rieszlab import harmonic as hm
from rieszlab.singular import BoundaryField, field_from, fundamental_solution


@pytest.fixture(scope="module")
def disk():
    return geo.make_mesh("circle", 256)


def test_fundamental_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    for n in (2, 3, 4):
        x = rng.normal(size=(20, n)) + 2.0
        h = 1e-6
        fd = np.column_stack([
            (fundamental_solution(x + h * e) - fundamental_solution(x - h * e)) / (2 * h) for e in np.eye(n)
        ])
        np.testing.assert_allclose(hm.fundamental_gradient(x), fd, rtol=1e-6, atol=1e-10)
    # 2D closed form: ln|x| / 2 pi
    assert fundamental_solution(np.array([math.e, 0.0])) == pytest.approx(1 / (2 * math.pi))


def test_poisson_routes_agree_on_harmonic_data(disk):
    f = field_from(disk, lambda p: p[:, 0] ** 2 - p[:, 1] ** 2 + p[:, 1])
    rng = np.random.default_rng(1)
    r = np.sqrt(rng.uniform(0, 0.8, 50))
    t = rng.uniform(0, 2 * np.pi, 50)
    pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
    exact = pts[:, 0] ** 2 - pts[:, 1] ** 2 + pts[:, 1]
    np.testing.assert_allclose(hm.poisson_solve_disk(f, pts), exact, atol=1e-10)
    np.testing.assert_allclose(hm.poisson_fourier(f.values, pts), exact, atol=1e-12)
    radii = np.array([0.3, 0.7])
    grid = hm.poisson_fourier_polar(f.values, radii, 16)
    th = 2 * np.pi * np.arange(16) / 16
    R, T = np.meshgrid(radii, th, indexing="ij")
    exact = (R * np.cos(T)) ** 2 - (R * np.sin(T)) ** 2 + R * np.sin(T)
    np.testing.assert_allclose(grid, exact, atol=1e-12)
    with pytest.raises(ValueError):
        hm.poisson_solve_disk(f, [[1.0, 0.0]])


def test_layer_green_matches_closed_form_on_disk(disk):
    x0 = np.array([0.3, -0.2])
    G = hm.green_build(disk, x0)
    exact = hm.green_build(disk, x0, construction="explicit_disk")
    pts = hm.disk_lattice(30, 0.9)
    pts = pts[np.linalg.norm(pts - x0, axis=1) > 0.05]
    np.testing.assert_allclose(G(pts), exact(pts), atol=1e-9)
    np.testing.assert_allclose(G.gradient(pts), exact.gradient(pts), atol=1e-8)
    # boundary values vanish
    assert np.abs(exact(disk.nodes)).max() < 1e-13


def test_green_symmetry_positivity_and_flux_on_ellipse():
    mesh = geo.make_mesh("circle", 256, axes=(1.4, 0.8))
    solver = hm.GreenSolver(mesh)
    a, b = np.array([0.4, 0.1]), np.array([-0.5, -0.2])
    Ga, Gb = solver.build(a), solver.build(b)
    assert Ga(b[None])[0] == pytest.approx(Gb(a[None])[0], rel=1e-9)
    lattice = np.column_stack([g.ravel() for g in np.meshgrid(np.linspace(-1.3, 1.3, 40), np.linspace(-0.75, 0.75, 30))])
    bad, lo = hm.green_positivity_scan(Ga, lattice, 0.05)
    assert bad == 0 and lo > 0
    for radius in (0.05, 0.2):
        assert hm.green_flux(Ga, radius) == pytest.approx(1.0, abs=1e-8)


def test_green_solver_guards(disk):
    with pytest.raises(ValueError, match="outside"):
        hm.GreenSolver(disk, x_star=[0.1, 0.0])
    with pytest.raises(ValueError, match="ill-conditioned"):
        hm.GreenSolver(disk, max_condition=1.0)
    with pytest.raises(ValueError):
        hm.GreenSolver(geo.make_mesh("torus_window", 64))
    solver = hm.GreenSolver(disk)
    with pytest.raises(ValueError):
        solver.densities([[2.0, 0.0]])
    with pytest.warns(UserWarning, match="under-resolved"):
        solver.densities([[1 - disk.h, 0.0]])


def test_green_save_load_round_trip(disk, tmp_path):
    G = hm.green_build(disk, [0.1, 0.2])
    G.save(tmp_path)
    back = hm.GreenFunction.load(tmp_path, disk)
    p = np.array([[0.5, -0.3], [-0.2, 0.0]])
    np.testing.assert_allclose(back(p), G(p), rtol=1e-12)


def test_halfplane_green():
    G = hm.green_build(None, [0.3, 1.0], construction="explicit_halfplane")
    assert np.abs(G([[2.0, 0.0], [-1.0, 0.0]])).max() < 1e-15
    assert hm.green_flux(G, 0.3) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        hm.green_build(None, [0.3, -1.0], construction="explicit_halfplane")


def test_kelvin_identity_and_experiment():
    rng = np.random.default_rng(2)
    x, y = rng.normal(size=(1000, 3)), rng.normal(size=(1000, 3))
    assert hm.kelvin_check(x, y).max() < 1e-12
    with pytest.raises(ValueError):
        hm.kelvin_check([[0.0, 0.0]], [[1.0, 0.0]])
    rep = hm.kelvin_experiment(resolution=256, pairs=500)
    assert rep.max_identity_residual < 1e-12
    assert rep.max_exterior_error < 1e-8
    # G(x, x0) - (1/2 pi) ln|x0| decays like 1/|x|, up to O(1/|x|) corrections on 10 <= |x| <= 80
    assert rep.far_field_slope == pytest.approx(-1.0, abs=0.1)


def test_richardson_laplacian():
    pts = np.array([[0.3, -0.2], [1.0, 2.0]])
    np.testing.assert_allclose(hm.richardson_laplacian(lambda p: p[:, 0] ** 2 + p[:, 1] ** 2, pts, 0.1), 4.0, atol=1e-9)
    np.testing.assert_allclose(hm.richardson_laplacian(lambda p: p[:, 0] ** 3, pts, 0.1), 6 * pts[:, 0], atol=1e-9)


def test_power_of_cauchy_kernel_field_in_three_dimensions():
    # |x/|x|^3|^theta = r^(-2 theta), whose Laplacian is -2 theta (1 - 2 theta) r^(-2 theta - 2)
    pts = hm.annulus_lattice(3, 0.5, 1.5, 9)
    r = np.linalg.norm(pts, axis=1)
    for theta in (0.1, 0.5, 0.8):
        lap = hm.richardson_laplacian(lambda p: cl.mv_norm(hm.cauchy_kernel_field(p)) ** theta, pts, 1e-2)
        exact = -2 * theta * (1 - 2 * theta) * r ** (-2 * theta - 2)
        np.testing.assert_allclose(lap, exact, atol=1e-6)
    at_half = hm.subharmonicity_check(hm.cauchy_kernel_field, pts, 0.5)
    assert at_half.violations == 0
    # the Dirac residual is a fourth-order difference: halving delta divides it by about 16
    coarse = hm.subharmonicity_check(hm.cauchy_kernel_field, pts, 0.5, delta=2e-2)
    assert 12 < coarse.dirac_residual / at_half.dirac_residual < 20
    below = hm.subharmonicity_check(hm.cauchy_kernel_field, pts, 0.1)
    assert below.violations == below.points
    zeros = hm.subharmonicity_check(lambda p: np.zeros((len(p), 8)), pts, 0.5)
    assert zeros.excluded == len(pts) and zeros.points == 0


def test_green_representation_identity(disk):
    w = lambda p: p[:, 0] ** 2 + p[:, 1] + 1
    grad_w = lambda p: np.column_stack([2 * p[:, 0], np.ones(len(p))])
    lap_w = lambda p: np.full(len(p), 2.0)
    x0 = np.array([0.2, 0.1])
    errs = [hm.green_representation_check(disk, x0, w, grad_w, lap_w, eps) for eps in (0.3, 0.1)]
    assert max(errs) < 1e-6
    with pytest.raises(ValueError):
        hm.green_representation_check(disk, [0.85, 0.0], w, grad_w, lap_w, 0.3)


def test_comparison_experiment_has_no_violations(disk):
    z = disk.nodes[:, 0] + 1j * disk.nodes[:, 1]
    f = BoundaryField(disk, cl.complex_to_mv(z**2 + 0.5 * z))
    reps = hm.comparison_experiment(f, [0.5, 1.0], lattice=40, fine=2**12)
    for rep in reps:
        assert rep.violations == 0
        assert rep.trace_residual < 1e-4
    with pytest.raises(ValueError):
        hm.comparison_experiment(BoundaryField(geo.make_mesh("circle", 64, radius=2.0), np.zeros((64, 4))), 1.0)
