"""Nontangential approach regions, maximal functions, traces, collar and
annulus integral estimates, and the smooth cutoff family used to localise
away from the boundary.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .geometry import BoundaryMesh


@dataclass(frozen=True)
class ConeParams:
    kappa: float
    epsilon: Optional[float] = None

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("aperture kappa must be positive")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("truncation epsilon must be positive")

    def truncated(self, epsilon: float) -> "ConeParams":
        return ConeParams(self.kappa, epsilon)


@dataclass(frozen=True, eq=False)
class InteriorField:
    points: np.ndarray
    values: np.ndarray
    distances: np.ndarray
    evaluator: Optional[Callable] = None

    def __post_init__(self):
        if np.any(self.distances <= 0):
            raise ValueError("interior samples must lie off the boundary")
        if len(self.points) != len(self.values) or len(self.points) != len(self.distances):
            raise ValueError("points, values and distances must have equal length")

    @property
    def magnitudes(self) -> np.ndarray:
        v = np.asarray(self.values, dtype=float)
        return np.linalg.norm(v, axis=1) if v.ndim == 2 else np.abs(v)


def interior_field(mesh: BoundaryMesh, points, values=None, evaluator=None) -> InteriorField:
    """Samples of ``u`` at interior points with their boundary distances."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if values is None:
        if evaluator is None:
            raise ValueError("give values or an evaluator")
        values = evaluator(pts)
    return InteriorField(pts, np.asarray(values, dtype=float), mesh.distance(pts), evaluator)


def cone_contains(x, y, params: ConeParams, dist_y) -> np.ndarray:
    """``|x - y| < (1 + kappa) dist(y)`` (and ``dist(y) < epsilon`` if truncated)."""
    x = np.asarray(x, dtype=float)
    y = np.atleast_2d(np.asarray(y, dtype=float))
    d = np.asarray(dist_y, dtype=float)
    inside = np.linalg.norm(y - x, axis=-1) < (1 + params.kappa) * d
    if params.epsilon is not None:
        inside &= d < params.epsilon
    return inside


def _tangent_frame(normal):
    n = len(normal)
    # orthonormal complement of the normal
    q, _ = np.linalg.qr(np.column_stack([normal, np.eye(n)]))
    return q[:, 1:n].T


def cone_samples(
    mesh: BoundaryMesh,
    params: ConeParams,
    max_depth: float,
    depth_levels: int = 20,
    linear_levels: int = 8,
    fan: int = 9,
    floor: float = 2.0**-20,
):
    """Deterministic sample points inside the cone at every node.

    Along each ray of an angular fan around the inward normal, depths form
    the union of a geometric ladder ``max_depth * 2^-k`` (down to
    ``floor * max_depth``) and a linear ladder up to ``max_depth``.  Points
    outside the region or outside the cone are discarded.  Returns
    ``(points, owner_node)``.
    """
    half = 0.98 * math.acos(1.0 / (1.0 + params.kappa))
    geo = max_depth * 2.0 ** -np.arange(depth_levels + 1)
    geo = geo[geo >= floor * max_depth]
    lin = max_depth * np.arange(1, linear_levels + 1) / linear_levels
    depths = np.unique(np.concatenate([geo, lin])) * (1 - 1e-9)
    angles = np.linspace(-half, half, fan)
    pts, owner = [], []
    n = mesh.n
    for i, (x, nu) in enumerate(zip(mesh.nodes, mesh.normals)):
        T = _tangent_frame(nu)
        if n == 2:
            dirs = np.column_stack([np.cos(angles), np.sin(angles)]) @ np.vstack([-nu, T])
        else:
            rays = [-nu]
            for a in angles[angles > 0]:
                for b in np.linspace(0, 2 * np.pi, 8, endpoint=False):
                    rays.append(math.cos(a) * -nu + math.sin(a) * (math.cos(b) * T[0] + math.sin(b) * T[1]))
            dirs = np.array(rays)
        # depth means distance along the normal component
        cosd = np.maximum(dirs @ -nu, 1e-12)
        p = x[None, None] + depths[:, None, None] * dirs[None] / cosd[None, :, None]
        pts.append(p.reshape(-1, n))
        owner.append(np.full(p.shape[0] * p.shape[1], i))
    pts = np.concatenate(pts)
    owner = np.concatenate(owner)
    keep = mesh.contains(pts)
    pts, owner = pts[keep], owner[keep]
    dist = mesh.distance(pts)
    ok = (dist > 0) & cone_contains(mesh.nodes[owner], pts, ConeParams(params.kappa), dist)
    return pts[ok], owner[ok]


@dataclass(frozen=True)
class NtProfile:
    values: np.ndarray
    empty: np.ndarray
    params: ConeParams

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["node", "nt_max", "empty_cone"])
        for i, (v, e) in enumerate(zip(self.values, self.empty)):
            w.writerow([i, repr(float(v)), int(bool(e))])
        return buf.getvalue()


def nt_maximal(u: InteriorField, mesh: BoundaryMesh, params: ConeParams, nodes=None) -> NtProfile:
    """Sup of ``|u|`` over the samples in each node's (truncated) cone.

    The value is a lower bound for the supremum over the continuum cone.
    Empty cones give 0 and are flagged.
    """
    if len(u.points) == 0:
        raise ValueError("no interior samples")
    idx = np.arange(mesh.size) if nodes is None else np.asarray(nodes)
    mag = u.magnitudes
    lim = (1 + params.kappa) * u.distances
    trunc = np.ones(len(mag), dtype=bool) if params.epsilon is None else u.distances < params.epsilon
    out = np.zeros(len(idx))
    empty = np.zeros(len(idx), dtype=bool)
    for s in range(0, len(idx), 32):
        x = mesh.nodes[idx[s : s + 32]]
        d = np.linalg.norm(mesh.displacement(u.points[None], x[:, None]), axis=2)
        inside = (d < lim[None]) & trunc[None]
        vals = np.where(inside, mag[None], -np.inf).max(axis=1)
        empty[s : s + 32] = ~np.isfinite(vals)
        out[s : s + 32] = np.where(np.isfinite(vals), vals, 0.0)
    return NtProfile(out, empty, params)


def sampled_field(evaluate, mesh, params, max_depth, **kw) -> InteriorField:
    pts, _ = cone_samples(mesh, params, max_depth, **kw)
    return interior_field(mesh, pts, evaluator=evaluate)


# ---------------------------------------------------------- traces


@dataclass(frozen=True)
class TraceReport:
    value: np.ndarray
    verdict: str
    ladder: np.ndarray
    values: np.ndarray
    differences: np.ndarray
    estimates: np.ndarray

    @property
    def converged(self) -> bool:
        return self.verdict == "trace"


def _neville_zero(t, v):
    """Polynomial extrapolation to ``t = 0`` through all points (Neville)."""
    P = [np.array(x, dtype=float) for x in v]
    m = len(t)
    for k in range(1, m):
        P = [(t[i + k] * P[i] - t[i] * P[i + 1]) / (t[i + k] - t[i]) for i in range(m - k)]
    return P[0]


def _aitken(v):
    a, b, c = v[-3], v[-2], v[-1]
    den = c - 2 * b + a
    with np.errstate(invalid="ignore", divide="ignore"):
        acc = c - (c - b) ** 2 / den
    return np.where(np.abs(den) > 1e-300, acc, c)


def nt_traces(
    evaluate: Callable,
    mesh: BoundaryMesh,
    params: ConeParams = ConeParams(1.0),
    nodes=None,
    t0: Optional[float] = None,
    levels: int = 8,
    order: int = 4,
    method: str = "richardson",
    tol: float = 1e-6,
) -> list:
    """Limits of ``u`` along ``y_k = x - t_k nu(x)``, ``t_k = t0 2^-k``.

    ``richardson`` fits a polynomial in ``t`` through the last ``order``
    ladder values; ``aitken`` applies the delta-squared process to the last
    three.  The verdict is ``"no trace detected"`` when the raw ladder
    differences do not contract or the last two extrapolated estimates
    disagree by more than ``tol`` (relative to the value scale).  All ladder
    points of all requested nodes go to the evaluator in one call.
    """
    if levels > 20 or levels < 3:
        raise ValueError("levels must be between 3 and 20")
    if method not in ("richardson", "aitken"):
        raise ValueError(f"unknown extrapolation method {method!r}")
    idx = np.arange(mesh.size) if nodes is None else np.atleast_1d(nodes)
    t0 = min(0.25, 8 * mesh.h) if t0 is None else t0
    t = t0 * 2.0 ** -np.arange(levels)
    x = mesh.nodes[idx]
    pts = x[:, None] - t[None, :, None] * mesh.normals[idx][:, None]
    pts = pts.reshape(-1, mesh.n)
    dist = mesh.distance(pts)
    ok = cone_contains(np.repeat(x, levels, axis=0), pts, ConeParams(params.kappa), dist)
    if not np.all(ok):
        raise ValueError("approach ladder leaves the cone; reduce t0")
    vals = np.asarray(evaluate(pts), dtype=float)
    vals = vals.reshape((len(idx), levels) + vals.shape[1:])
    order = min(order, levels)
    reports = []
    for v in vals:
        flat = v.reshape(levels, -1)
        diffs = np.linalg.norm(np.diff(flat, axis=0), axis=1)
        est = []
        for end in range(max(order, 3), levels + 1):
            if method == "richardson":
                est.append(_neville_zero(t[end - order : end], flat[end - order : end]))
            else:
                est.append(_aitken(flat[:end]))
        est = np.array(est)
        value = est[-1]
        scale = max(1.0, float(np.linalg.norm(value)))
        contracting = diffs[-1] <= 0.5 * diffs[0] + 1e-13 * scale
        settled = len(est) < 2 or np.linalg.norm(est[-1] - est[-2]) <= tol * scale
        verdict = "trace" if contracting and settled else "no trace detected"
        reports.append(TraceReport(value.reshape(v.shape[1:]), verdict, t, v, diffs, est))
    return reports


def nt_trace(evaluate: Callable, mesh: BoundaryMesh, node: int, params: ConeParams = ConeParams(1.0), **kw) -> TraceReport:
    """Nontangential trace at a single node (see :func:`nt_traces`)."""
    return nt_traces(evaluate, mesh, params, nodes=[node], **kw)[0]


# ------------------------------------------------------ cutoff family


def _g(t):
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        return np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)


def smooth_step(s) -> np.ndarray:
    """C-infinity step: 0 for ``s <= 1/2``, 1 for ``s >= 1``."""
    a = 2 * np.asarray(s, dtype=float) - 1
    ga, gb = _g(a), _g(1 - a)
    return ga / (ga + gb)


def _smooth_step_derivs(s, h=1e-4):
    # derivatives of the step by high-order central differences
    c1 = (smooth_step(s - 2 * h) - 8 * smooth_step(s - h) + 8 * smooth_step(s + h) - smooth_step(s + 2 * h)) / (12 * h)
    c2 = (
        -smooth_step(s - 2 * h) + 16 * smooth_step(s - h) - 30 * smooth_step(s)
        + 16 * smooth_step(s + h) - smooth_step(s + 2 * h)
    ) / (12 * h * h)
    return c1, c2


@dataclass(frozen=True)
class CutoffFamily:
    """``Phi_eps = chi(dist / eps)``: vanishes within ``eps/2`` of the
    boundary and equals one beyond ``eps``.

    Supported meshes have an exact radial or flat distance function: circles
    (not ellipses), spheres and flat windows.
    """

    mesh: BoundaryMesh
    eps: float

    def __post_init__(self):
        m = self.mesh
        ok = (m.kind == "circle" and m.params.get("axes") is None) or m.kind in ("sphere", "torus_window")
        if not ok:
            raise ValueError("cutoff family needs a circle, sphere or flat window")

    def _radial(self, p):
        m = self.mesh
        if m.kind == "torus_window":
            d = p[:, -1]
            grad = np.zeros_like(p)
            grad[:, -1] = 1.0
            return d, grad, np.zeros(len(p))
        c = np.asarray(m.params.get("center", np.zeros(m.n)), dtype=float) if m.kind == "circle" else np.zeros(m.n)
        R = m.params.get("radius", 1.0)
        rel = p - c
        r = np.linalg.norm(rel, axis=1)
        rs = np.where(r > 0, r, 1.0)
        # d = R - r, grad d = -x/r, lap d = -(n-1)/r
        return R - r, -rel / rs[:, None], -(m.n - 1) / rs

    def value(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        d, _, _ = self._radial(p)
        return smooth_step(d / self.eps)

    def gradient(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        d, gd, _ = self._radial(p)
        c1, _ = _smooth_step_derivs(d / self.eps)
        return (c1 / self.eps)[:, None] * gd

    def laplacian(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        d, gd, ld = self._radial(p)
        c1, c2 = _smooth_step_derivs(d / self.eps)
        return c2 / self.eps**2 * np.sum(gd * gd, axis=1) + c1 / self.eps * ld


def cutoff_derivative_bounds(mesh: BoundaryMesh, eps_list, samples: int = 4001):
    """Measured ``eps^|a| sup |D^a Phi_eps|`` for ``|a| = 1, 2`` along the
    inward normal of node 0 (the profile is the same at every node)."""
    out = []
    x, nu = mesh.nodes[0], mesh.normals[0]
    for eps in eps_list:
        fam = CutoffFamily(mesh, eps)
        t = np.linspace(1e-6, 1.2 * eps, samples)
        pts = x[None] - t[:, None] * nu[None]
        g = np.linalg.norm(fam.gradient(pts), axis=1).max()
        lap = np.abs(fam.laplacian(pts)).max()
        out.append((float(eps), float(g * eps), float(lap * eps**2)))
    return out


# ------------------------------------------------- integral estimates


@dataclass(frozen=True)
class InequalityReport:
    lhs: float
    rhs_without_constant: float

    @property
    def ratio(self) -> float:
        if self.rhs_without_constant == 0:
            return 0.0 if self.lhs == 0 else math.inf
        return self.lhs / self.rhs_without_constant


def collar_inequality_check(
    evaluate: Callable,
    mesh: BoundaryMesh,
    params: ConeParams,
    p: float,
    eps: float,
    radial_order: int = 32,
    samples: Optional[InteriorField] = None,
) -> InequalityReport:
    """``(int_{O_eps} |u|^p)^(1/p)`` against ``eps^(1/p) ||N^eps_kappa u||_p``
    on a circle mesh, where ``O_eps`` is the collar of width ``eps``."""
    if mesh.kind != "circle" or mesh.params.get("axes") is not None:
        raise ValueError("collar check is implemented on circle meshes")
    R = mesh.params.get("radius", 1.0)
    c = np.asarray(mesh.params.get("center", (0.0, 0.0)), dtype=float)
    if not 0 < eps < R:
        raise ValueError("epsilon must lie in (0, radius)")
    g, gw = np.polynomial.legendre.leggauss(radial_order)
    r = R - eps + eps * 0.5 * (g + 1)
    rw = 0.5 * eps * gw
    m = max(mesh.size, 256)
    th = 2 * np.pi * np.arange(m) / m
    pts = c + (r[:, None, None] * np.stack([np.cos(th), np.sin(th)], axis=-1)[None]).reshape(len(r), m, 2)
    w = (rw * r)[:, None] * np.full(m, 2 * np.pi / m)[None]
    vals = np.asarray(evaluate(pts.reshape(-1, 2)), dtype=float)
    mag = np.linalg.norm(vals, axis=1) if vals.ndim == 2 else np.abs(vals)
    if mag.size == 0:
        raise ValueError("empty collar")
    lhs = float(np.dot(mag**p, w.ravel()) ** (1 / p))
    tp = params.truncated(eps)
    u = samples if samples is not None else sampled_field(evaluate, mesh, tp, eps)
    N = nt_maximal(u, mesh, tp).values
    rhs = float(eps ** (1 / p) * np.dot(N**p, mesh.weights) ** (1 / p))
    return InequalityReport(lhs, rhs)


ANNULUS_M = 5.0
ANNULUS_KAPPA = 29.0


def annulus_inequality_check(
    evaluate: Callable,
    mesh: BoundaryMesh,
    z: int,
    R: float,
    M: float = ANNULUS_M,
    kappa: float = ANNULUS_KAPPA,
    radial_order: int = 24,
    angular: int = 256,
) -> InequalityReport:
    """``int_{A_R} |u|`` against ``R * int_{Delta(z,MR) - Delta(z,R/2)} N^{2R} u``.

    ``A_R`` is the part of ``B(z, 2R) - B(z, R)`` inside the region.  The
    defaults satisfy ``M > 4`` and ``kappa > 4(M + 2)`` for a flat line.
    """
    if mesh.kind != "torus_window" or mesh.n != 2:
        raise ValueError("annulus check is implemented on flat planar windows")
    zc = mesh.nodes[z]
    half = mesh.params["length"] / 2
    if np.abs(zc[0]) + M * R > half - mesh.h:
        raise ValueError("window too small to contain Delta(z, MR)")
    g, gw = np.polynomial.legendre.leggauss(radial_order)
    r = R + R * 0.5 * (g + 1)
    rw = 0.5 * R * gw
    th = (np.arange(angular) + 0.5) * np.pi / angular
    pts = zc + (r[:, None, None] * np.stack([np.cos(th), np.sin(th)], axis=-1)[None]).reshape(-1, 2)
    w = ((rw * r)[:, None] * np.full(angular, np.pi / angular)[None]).ravel()
    vals = np.asarray(evaluate(pts), dtype=float)
    mag = np.linalg.norm(vals, axis=1) if vals.ndim == 2 else np.abs(vals)
    lhs = float(np.dot(mag, w))
    d = np.linalg.norm(mesh.nodes - zc, axis=1)
    ring = np.flatnonzero((d < M * R) & (d >= R / 2))
    tp = ConeParams(kappa, 2 * R)
    u = sampled_field(evaluate, mesh, tp, 2 * R)
    N = nt_maximal(u, mesh, tp, nodes=ring).values
    rhs = float(R * np.dot(N, mesh.weights[ring]))
    return InequalityReport(lhs, rhs)
