import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rieszlab import geometry as geo
from rieszlab import spaces as sp
from rieszlab.singular import BoundaryField, field_from, riesz_flat_fft


@pytest.fixture(scope="module")
def line():
    return geo.make_mesh("torus_window", 8192, length=64.0)


def test_lp_norms():
    c = geo.make_mesh("circle", 256)
    one = BoundaryField(c, np.ones(c.size))
    assert sp.lp_norm(one, 1) == pytest.approx(2 * math.pi, abs=1e-10)
    assert sp.lp_norm(one, math.inf) == 1.0
    with pytest.raises(ValueError):
        sp.lp_norm(one, 0.5)
    with pytest.raises(ValueError):
        sp.weak_lp(one, 0.5)


def test_weak_l1_of_reciprocal():
    N = 10_000
    w = geo.make_mesh("torus_window", N, length=1.0)
    # sample at x_k = k / N on (0, 1]; each node carries weight 1 / N
    x = np.arange(1, N + 1) / N
    assert sp.weak_lp(BoundaryField(w, 1 / x), 1) == pytest.approx(1.0, rel=0.02)


@settings(max_examples=25, deadline=None)
@given(arrays(float, (64,), elements=st.floats(-5, 5, allow_nan=False)), st.sampled_from([1.0, 2.0, 3.5]))
def test_weak_norm_below_strong_norm(v, p):
    c = geo.make_mesh("circle", 64)
    f = BoundaryField(c, v)
    assert sp.weak_lp(f, p) <= sp.lp_norm(f, p) * (1 + 1e-12) + 1e-300


def test_bmo_of_constant_and_jump():
    c = geo.make_mesh("circle", 512)
    assert sp.bmo_norm(BoundaryField(c, np.full(c.size, 3.0))) < 1e-14
    th = 2 * np.pi * np.arange(512) / 512
    jump = np.where(th < np.pi, -1.0, 1.0)
    # balanced arcs straddling a jump oscillate by exactly 1
    assert sp.bmo_norm(BoundaryField(c, jump)) == pytest.approx(1.0, abs=0.02)


def test_bmo_of_log_is_stable_under_window_doubling():
    vals = []
    for L in (8.0, 16.0, 32.0):
        w = geo.make_mesh("torus_window", int(128 * L), length=L)
        f = field_from(w, lambda p: np.log(np.abs(p[:, 0])))
        vals.append(sp.bmo_norm(f, radii=[0.05, 0.2, 1.0, 3.0]))
        assert sp.lp_norm(f, math.inf) > 4.0
    assert max(vals) - min(vals) < 0.02 * max(vals)


@settings(max_examples=15, deadline=None)
@given(arrays(float, (128,), elements=st.floats(-3, 3, allow_nan=False)), st.floats(-100, 100))
def test_bmo_is_shift_invariant_and_bounded_by_sup(v, c):
    mesh = geo.make_mesh("circle", 128)
    radii = [0.2, 0.8]
    a = sp.bmo_norm(BoundaryField(mesh, v), radii)
    b = sp.bmo_norm(BoundaryField(mesh, v + c), radii)
    assert b == pytest.approx(a, abs=1e-9 * (1 + abs(c)))
    mid = 0.5 * (v.max() + v.min())
    assert a <= 2 * np.abs(v - mid).max() + 1e-12


def test_atom_properties(line):
    a = sp.atom(line, line.size // 2, 0.25)
    assert np.dot(a.values, line.weights) == pytest.approx(0.0, abs=1e-14)
    assert sp.lp_norm(a, 1) == pytest.approx(1.0)
    assert np.all(a.values[np.abs(line.nodes[:, 0] - line.nodes[line.size // 2, 0]) >= 0.25] == 0)
    with pytest.raises(ValueError):
        sp.atom(line, 0, line.h / 4)


def test_h1_test_separates_atom_from_indicator(line):
    x = line.nodes[:, 0]
    a = sp.atom(line, int(np.argmin(np.abs(x))), 0.25)
    rep = sp.h1_riesz_test(a, tol=0.02)
    assert rep.verdict == "in_H1"
    ind = BoundaryField(line, ((x > 0) & (x < 1)).astype(float))
    rep = sp.h1_riesz_test(ind, tol=0.02)
    assert rep.verdict == "not_in_H1"
    # the 1/x tail adds (1/pi) ln 2 per doubling on each end
    assert rep.slopes[0] == pytest.approx(math.log(2) / math.pi, rel=0.05)
    zero = sp.h1_riesz_test(BoundaryField(line, np.zeros(line.size)))
    assert zero.verdict == "in_H1" and zero.riesz_l1_norms == [0.0, 0.0]


def test_h1_verdict_is_dilation_invariant():
    verdicts = []
    for scale in (1.0, 2.0):
        w = geo.make_mesh("torus_window", 4096, length=32.0 * scale)
        x = w.nodes[:, 0] / scale
        f = BoundaryField(w, ((x > 0) & (x < 1)).astype(float))
        verdicts.append(sp.h1_riesz_test(f, tol=0.02).verdict)
    assert verdicts == ["not_in_H1", "not_in_H1"]


def test_classify_sweep_on_synthetic_tables():
    sizes = np.array([4.0, 8.0, 16.0, 32.0])
    stable = np.array([[1.0, 1.0], [1.001, 1.0], [1.0015, 1.0], [1.0016, 1.0]])
    assert sp.classify_sweep(stable, sizes, 1.0, 2, 0.01)[0] == "in_H1"
    grow = np.array([[1.0], [1.0 + 2 * np.log(2) / np.pi], [1.0 + 4 * np.log(2) / np.pi], [1.0 + 6 * np.log(2) / np.pi]])
    verdict, slopes, _ = sp.classify_sweep(grow, sizes, 1.0, 2, 0.01)
    assert verdict == "not_in_H1"
    assert slopes[0] == pytest.approx(np.log(2) / np.pi)
    slow = np.array([[1.0], [1.05], [1.1], [1.15]])
    assert sp.classify_sweep(slow, sizes, 1.0, 2, 0.01)[0] == "inconclusive"


def test_closed_mesh_h1_test_is_stable_for_smooth_data():
    c = geo.make_mesh("circle", 256)
    f = field_from(c, lambda p: p[:, 0] * p[:, 1])
    assert sp.h1_riesz_test(f).verdict == "in_H1"


def test_family_test_on_graph(line):
    x = line.nodes[:, 0]
    a = sp.atom(line, int(np.argmin(np.abs(x))), 0.25)
    rep = sp.h1_family_test([a, a], tol=0.02)
    assert rep.criterion_verdict == "in_H1" and rep.per_function_verdicts == ["in_H1", "in_H1"]
    assert rep.agree
    z = BoundaryField(line, np.zeros(line.size))
    rep = sp.h1_family_test([z, z])
    assert rep.criterion_verdict == "in_H1" and rep.agree
    with pytest.raises(ValueError):
        sp.h1_family_test([a])
    with pytest.raises(ValueError):
        c = geo.make_mesh("circle", 64)
        sp.h1_family_test([BoundaryField(c, np.ones(64))] * 2)


def test_torus_family_multiplier_identities():
    g = lambda X, Y: ((np.abs(X - np.pi) < 1) & (np.abs(Y - np.pi) < 1.5)).astype(float)
    for N, l1_sum, diff_err, *_ in sp.torus_family_check(g, (64, 128)):
        assert l1_sum < 1e-10
        assert diff_err < 1e-10


def test_fs_flat_truncated_log_series():
    N = 1024
    th = 2 * np.pi * np.arange(N) / N
    K = 400
    k = np.arange(1, K + 1)
    f = np.cos(np.outer(th, k)) @ (1.0 / k)
    d = sp.fs_decompose_flat(f)
    assert d.method == "spectral"
    assert d.residual < 1e-8
    # f1 = -(sum sin(k t)/k), which is -(pi - t)/2 on (0, 2 pi) plus Gibbs overshoot
    oracle = -(np.sin(np.outer(th, k)) @ (1.0 / k))
    np.testing.assert_allclose(d.fj[0], oracle, atol=1e-10)
    assert d.sup_norms[1] <= 1.18 * math.pi / 2


def test_fs_flat_bounded_input_and_riesz_image():
    rng = np.random.default_rng(0)
    g = rng.uniform(-1, 1, size=(64, 64))
    d = sp.fs_decompose_flat(g)
    assert d.total_sup <= np.abs(g).max() + 1e-12
    r1 = riesz_flat_fft(g - g.mean(), 1)
    d = sp.fs_decompose_flat(r1)
    assert d.residual < 1e-8
    assert d.total_sup <= 3 * np.abs(g).max()
    with pytest.raises(ValueError):
        sp.fs_decompose_flat(np.array([1.0, np.inf, 0.0, 0.0]))


def test_fs_flat_nyquist_content_is_kept_in_f0():
    # the Nyquist line has no conjugate on the grid, so it stays in f0
    nyq = np.cos(np.pi * np.arange(256))
    d = sp.fs_decompose_flat(3.0 * nyq)
    np.testing.assert_allclose(d.f0, 3.0 * nyq, atol=1e-12)
    assert all(np.abs(fj).max() < 1e-12 for fj in d.fj)
    rng = np.random.default_rng(1)
    for shape in ((256,), (32, 32)):
        d = sp.fs_decompose_flat(10 * rng.normal(size=shape))
        assert d.residual < 1e-10


def test_fs_circle():
    N = 1024
    c = geo.make_mesh("circle", N)
    th = 2 * np.pi * np.arange(N) / N
    k = np.arange(1, 201)
    f = BoundaryField(c, np.cos(np.outer(th - 1.0, k)) @ (1.0 / k))
    d = sp.fs_decompose_circle(f)
    assert d.method == "spectral"
    assert d.residual < 1e-8
    assert d.total_sup < np.abs(f.values).max()
    small = BoundaryField(c, 0.1 * np.cos(th))
    assert sp.fs_decompose_circle(small).method == "trivial"
    with pytest.raises(ValueError):
        sp.fs_decompose_circle(BoundaryField(geo.make_mesh("circle", 64, axes=(2, 1)), np.ones(64)))


def test_duality_pairing(line):
    x = line.nodes[:, 0]
    g = sp.atom(line, int(np.argmin(np.abs(x))), 0.5)
    one = BoundaryField(line, np.ones(line.size))
    assert sp.duality_pairing_check(one, g, 1) < 1e-8
    zero = BoundaryField(line, np.zeros(line.size))
    assert sp.duality_pairing_check(one, zero, 1) == 0.0


def test_duality_residual_shrinks_with_refinement():
    res, hs = [], []
    for N in (512, 1024, 2048):
        w = geo.make_mesh("torus_window", N, length=16.0)
        x = w.nodes[:, 0]
        saw = BoundaryField(w, (x % 1.0) - 0.5)
        g = BoundaryField(w, (1 - 2 * x**2) * np.exp(-(x**2)))
        res.append(sp.duality_pairing_check(saw, g, 1))
        hs.append(w.h)
    slope = np.polyfit(np.log(hs), np.log(res), 1)[0]
    assert slope >= 1.0
