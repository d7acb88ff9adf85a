"""Harmonic machinery: Poisson integrals on the disk, Green functions built
from single layer potentials, Kelvin inversion, subharmonicity scans, the
Green representation identity with smooth cutoffs and the comparison of
``|monogenic|^theta`` against its harmonic majorant.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.linalg import lapack, lu_factor, lu_solve

from . import clifford as cl
from .geometry import BoundaryMesh, make_mesh
from .nontangential import CutoffFamily
from .singular import (
    MAX_UPSAMPLE,
    BoundaryField,
    PvRule,
    _upsampled,
    cauchy_clifford_domain,
    cauchy_clifford_pv,
    field_from_csv,
    field_to_csv,
    fundamental_solution,
    omega,
    single_layer_matrix,
)



def fundamental_gradient(x) -> np.ndarray:
    """Gradient of the fundamental solution: ``x / (omega_{n-1} |x|^n)``."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    r = np.linalg.norm(x, axis=-1, keepdims=True)
    return x / (omega(n) * r**n)


def _disk_frame(mesh: BoundaryMesh):
    if mesh.kind != "circle" or mesh.params.get("axes") is not None:
        raise ValueError("needs a circle mesh")
    return np.asarray(mesh.params.get("center", (0.0, 0.0)), dtype=float), float(mesh.params.get("radius", 1.0))


# -------------------------------------------------------------- Poisson


def poisson_solve_disk(f: BoundaryField, targets) -> np.ndarray:
    """Poisson integral ``(R^2 - |x - c|^2)/(2 pi R) sum f_i w_i / |x - y_i|^2``."""
    c, R = _disk_frame(f.mesh)
    x = np.atleast_2d(np.asarray(targets, dtype=float))
    rel = np.linalg.norm(x - c, axis=1)
    if np.any(rel >= R):
        raise ValueError("targets must lie in the open disk")
    fw = f.values * f.mesh.weights
    out = np.empty(len(x))
    for s in range(0, len(x), 256):
        d2 = np.sum((x[s : s + 256, None] - f.mesh.nodes[None]) ** 2, axis=2)
        out[s : s + 256] = (R * R - rel[s : s + 256] ** 2) / (2 * np.pi * R) * (fw / d2).sum(axis=1)
    return out


def _fold_coefficients(samples, r, n_theta):
    """Fourier coefficients of the harmonic extension on the circle of
    radius ``r``, aliased onto an ``n_theta``-point grid."""
    v = np.asarray(samples, dtype=float)
    N = len(v)
    c = np.fft.fft(v) / N
    k = np.fft.fftfreq(N, 1.0 / N).astype(int)
    if N % 2 == 0:
        # split the Nyquist mode between +N/2 and -N/2
        c = np.append(c, c[N // 2] / 2)
        c[N // 2] /= 2
        k = np.append(k, N // 2)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    a = c[None] * r[:, None] ** np.abs(k)[None]
    out = np.zeros((len(r), n_theta), dtype=complex)
    for m in range(len(r)):
        out[m] = np.bincount(k % n_theta, weights=a[m].real, minlength=n_theta) + 1j * np.bincount(
            k % n_theta, weights=a[m].imag, minlength=n_theta
        )
    return out


def poisson_fourier_polar(samples, r, n_theta: int) -> np.ndarray:
    """Harmonic extension of equispaced boundary samples on the polar grid
    ``(r_i, 2 pi j / n_theta)``; shape ``(len(r), n_theta)``."""
    coef = _fold_coefficients(samples, r, n_theta)
    return np.real(np.fft.ifft(coef, axis=1) * n_theta)


def poisson_fourier(samples, points) -> np.ndarray:
    """Harmonic extension ``sum_k c_k r^|k| e^{ik theta}`` of equispaced
    boundary samples, evaluated at arbitrary points of the unit disk."""
    v = np.asarray(samples, dtype=float)
    N = len(v)
    c = np.fft.fft(v) / N
    k = np.fft.fftfreq(N, 1.0 / N)
    if N % 2 == 0:
        c = np.append(c, c[N // 2] / 2)
        c[N // 2] /= 2
        k = np.append(k, N // 2)
    P = np.atleast_2d(np.asarray(points, dtype=float))
    r = np.linalg.norm(P, axis=1)
    t = np.arctan2(P[:, 1], P[:, 0])
    out = np.empty(len(P))
    for s in range(0, len(P), 256):
        rr, tt = r[s : s + 256, None], t[s : s + 256, None]
        out[s : s + 256] = np.real((c[None] * rr ** np.abs(k)[None] * np.exp(1j * k[None] * tt)).sum(axis=1))
    return out


# ------------------------------------------------------- Green functions


def disk_green(x, x0, center=(0.0, 0.0), radius: float = 1.0) -> np.ndarray:
    """``(1/2 pi) ln(|1 - x conj(x0)| / |x - x0|)`` on a disk (scaled)."""
    c = np.asarray(center, dtype=float)
    x = (np.atleast_2d(x) - c) / radius
    x0 = (np.atleast_2d(x0) - c) / radius
    z = x[:, 0] + 1j * x[:, 1]
    z0 = x0[:, 0] + 1j * x0[:, 1]
    return np.log(np.abs(1 - z * np.conj(z0)) / np.abs(z - z0)) / (2 * np.pi)


def disk_green_gradient(x, x0) -> np.ndarray:
    """Gradient in ``x`` of the unit-disk Green function."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    z = x[:, 0] + 1j * x[:, 1]
    z0 = x0[:, 0] + 1j * x0[:, 1]
    # G = Re[(1/2pi)(log(1 - z conj z0) - log(z - z0))]; grad = conj of dG/dz
    d = (-np.conj(z0) / (1 - z * np.conj(z0)) - 1 / (z - z0)) / (2 * np.pi)
    return np.column_stack([d.real, -d.imag])


def halfspace_green(x, x0) -> np.ndarray:
    """Green function of the upper half-space, any dimension."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    refl = x0.copy()
    refl[:, -1] *= -1
    return -fundamental_solution(x - x0) + fundamental_solution(x - refl)


@dataclass
class GreenFunction:
    pole: np.ndarray
    construction: str
    mesh: Optional[BoundaryMesh] = None
    density: Optional[BoundaryField] = None
    c: float = 0.0
    x_star: Optional[np.ndarray] = None
    condition: float = float("nan")
    meta: dict = field(default_factory=dict)

    def __call__(self, points) -> np.ndarray:
        x = np.atleast_2d(np.asarray(points, dtype=float))
        if self.construction == "explicit_disk":
            c, R = _disk_frame(self.mesh)
            return disk_green(x, self.pole[None], c, R)
        if self.construction == "explicit_halfplane":
            return halfspace_green(x, self.pole[None])
        base = -fundamental_solution(x - self.pole) + fundamental_solution(x - self.x_star)
        return base - layer_potential(self.density, x) + self.c

    def gradient(self, points) -> np.ndarray:
        x = np.atleast_2d(np.asarray(points, dtype=float))
        if self.construction == "explicit_disk":
            c, R = _disk_frame(self.mesh)
            return disk_green_gradient((x - c) / R, ((self.pole - c) / R)[None]) / R
        if self.construction == "explicit_halfplane":
            refl = self.pole.copy()
            refl[-1] *= -1
            return -fundamental_gradient(x - self.pole) + fundamental_gradient(x - refl)
        fw = self.density.values * self.mesh.weights
        g = -fundamental_gradient(x - self.pole) + fundamental_gradient(x - self.x_star)
        for s in range(0, len(x), 256):
            d = x[s : s + 256, None] - self.mesh.nodes[None]
            g[s : s + 256] -= np.einsum("tsk,s->tk", fundamental_gradient(d), fw)
        return g

    def save(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        if self.density is not None:
            (d / "density.csv").write_text(field_to_csv(self.density))
        meta = {
            "pole": list(map(float, self.pole)),
            "construction": self.construction,
            "c": float(self.c),
            "x_star": None if self.x_star is None else list(map(float, self.x_star)),
            "condition": float(self.condition),
        }
        (d / "green.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, directory, mesh: BoundaryMesh) -> "GreenFunction":
        d = Path(directory)
        meta = json.loads((d / "green.json").read_text())
        dens = None
        if (d / "density.csv").exists():
            dens = field_from_csv(mesh, (d / "density.csv").read_text())
        xs = None if meta["x_star"] is None else np.array(meta["x_star"])
        return cls(np.array(meta["pole"]), meta["construction"], mesh, dens, meta["c"], xs, meta["condition"])


def layer_potential(f: BoundaryField, points) -> np.ndarray:
    """Single layer potential with spectral upsampling near parametrized
    closed curves (the density is trigonometrically interpolated)."""
    mesh = f.mesh
    x = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty(len(x))
    dist = mesh.distance(x) if mesh.curve is not None else np.full(len(x), np.inf)
    near = dist < 6 * mesh.h
    far = np.flatnonzero(~near)

    def direct(ms, vals, pts):
        fw = vals * ms.weights
        res = np.empty(len(pts))
        step = max(1, 2**21 // ms.size)
        for s in range(0, len(pts), step):
            res[s : s + step] = fundamental_solution(pts[s : s + step, None] - ms.nodes[None]) @ fw
        return res

    out[far] = direct(mesh, f.values, x[far])
    idx = np.flatnonzero(near)
    if len(idx):
        a = mesh.total_measure / (2 * np.pi)
        need = 32 * a / np.maximum(dist[idx], 1e-300)
        m_req = np.minimum(MAX_UPSAMPLE, 2 ** np.ceil(np.log2(np.maximum(need, mesh.size))))
        for m in np.unique(m_req):
            sel = idx[m_req == m]
            fine, fv = _upsampled(mesh, f.values[:, None], int(m))
            out[sel] = direct(fine, fv[:, 0], x[sel])
    return out


def default_x_star(mesh: BoundaryMesh) -> np.ndarray:
    """Exterior point at distance ``diam/4`` beyond the mesh's bounding box."""
    lo = mesh.nodes.min(axis=0)
    hi = mesh.nodes.max(axis=0)
    p = 0.5 * (lo + hi)
    p[0] = hi[0] + mesh.diameter / 4
    return p


class GreenSolver:
    """Factorised layer system for one mesh and auxiliary exterior point.

    ``n = 2``: ``[S  -1; w^T  0] [f; c] = [rhs; 0]`` (mean-zero density,
    unknown constant).  ``n >= 3``: ``S f = rhs``.  Here ``rhs`` is
    ``-E(. - x0) + E(. - x_*)`` on the nodes.
    """

    def __init__(self, mesh: BoundaryMesh, x_star=None, max_condition: float = 1e12):
        if not mesh.closed:
            raise ValueError("Green construction needs a closed mesh")
        self.mesh = mesh
        self.x_star = default_x_star(mesh) if x_star is None else np.asarray(x_star, dtype=float)
        if mesh.contains(self.x_star[None])[0] or mesh.distance(self.x_star[None])[0] <= 0:
            raise ValueError("x_star must lie strictly outside the region")
        S = single_layer_matrix(mesh)
        N = mesh.size
        if mesh.n == 2:
            A = np.zeros((N + 1, N + 1))
            A[:N, :N] = S
            A[:N, N] = -1.0
            A[N, :N] = mesh.weights
        else:
            A = S
        anorm = np.abs(A).sum(axis=0).max()
        self.lu = lu_factor(A)
        rcond, info = lapack.dgecon(self.lu[0], anorm, norm="1")
        self.condition = math.inf if rcond == 0 else 1.0 / rcond
        if not np.isfinite(self.condition) or self.condition > max_condition:
            raise ValueError(
                f"layer system is ill-conditioned (condition estimate {self.condition:.3g} > {max_condition:.3g})"
            )

    def densities(self, poles) -> tuple:
        """Densities and constants for many poles at once."""
        P = np.atleast_2d(np.asarray(poles, dtype=float))
        if not np.all(self.mesh.contains(P)):
            raise ValueError("poles must lie strictly inside the region")
        near = self.mesh.distance(P) < 4 * self.mesh.h
        if np.any(near):
            # the boundary data -E(. - x0) is then too peaked for the nodes
            warnings.warn(f"{int(near.sum())} pole(s) within 4h of the boundary; densities are under-resolved")
        X = self.mesh.nodes
        rhs = -fundamental_solution(X[:, None] - P[None]) + fundamental_solution(X - self.x_star)[:, None]
        if self.mesh.n == 2:
            rhs = np.vstack([rhs, np.zeros((1, len(P)))])
        sol = lu_solve(self.lu, rhs)
        if self.mesh.n == 2:
            return sol[:-1], sol[-1]
        return sol, np.zeros(len(P))

    def build(self, x0) -> GreenFunction:
        x0 = np.asarray(x0, dtype=float)
        F, c = self.densities(x0[None])
        return GreenFunction(
            x0, "layer_potential", self.mesh, BoundaryField(self.mesh, F[:, 0]), float(c[0]),
            self.x_star, self.condition,
        )


def green_build(mesh: BoundaryMesh, x0, x_star=None, construction: str = "layer_potential") -> GreenFunction:
    x0 = np.asarray(x0, dtype=float)
    if construction == "explicit_disk":
        _disk_frame(mesh)
        if not mesh.contains(x0[None])[0]:
            raise ValueError("pole must lie inside the disk")
        return GreenFunction(x0, construction, mesh)
    if construction == "explicit_halfplane":
        if x0[-1] <= 0:
            raise ValueError("pole must lie in the upper half-space")
        return GreenFunction(x0, construction, mesh)
    return GreenSolver(mesh, x_star).build(x0)


def green_flux(G: GreenFunction, radius: float, samples: int = 256) -> float:
    """``int_{|x - x0| = radius} -dG/dn`` (outward from the pole)."""
    if G.pole.shape[0] != 2:
        raise ValueError("flux check is implemented in the plane")
    th = 2 * np.pi * np.arange(samples) / samples
    nrm = np.column_stack([np.cos(th), np.sin(th)])
    pts = G.pole + radius * nrm
    g = G.gradient(pts)
    return float(-np.sum(g * nrm) * radius * 2 * np.pi / samples)


def green_positivity_scan(G: GreenFunction, lattice, pole_ball: float):
    """Count of interior lattice points outside the pole ball where G <= 0."""
    pts = np.atleast_2d(lattice)
    keep = G.mesh.contains(pts) & (np.linalg.norm(pts - G.pole, axis=1) > pole_ball)
    vals = G(pts[keep])
    return int(np.sum(vals <= 0)), float(vals.min()) if vals.size else float("nan")


def disk_lattice(m: int, radius: float = 1.0, center=(0.0, 0.0)) -> np.ndarray:
    """Cartesian lattice with spacing ``2 radius / m`` clipped to the open disk."""
    x = -radius + (np.arange(m) + 0.5) * (2 * radius / m)
    X, Y = np.meshgrid(x, x, indexing="ij")
    P = np.column_stack([X.ravel(), Y.ravel()])
    return P[np.linalg.norm(P, axis=1) < radius] + np.asarray(center)


# --------------------------------------------------------------- Kelvin


def kelvin_check(x, y) -> np.ndarray:
    """``| |x||y| |x/|x|^2 - y/|y|^2| - |x - y| |``, vectorised over rows."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    nx = np.linalg.norm(x, axis=1)
    ny = np.linalg.norm(y, axis=1)
    if np.any(nx == 0) or np.any(ny == 0):
        raise ValueError("Kelvin inversion needs nonzero vectors")
    lhs = nx * ny * np.linalg.norm(x / nx[:, None] ** 2 - y / ny[:, None] ** 2, axis=1)
    return np.abs(lhs - np.linalg.norm(x - y, axis=1))


def kelvin_invert(x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return x / np.sum(x * x, axis=1, keepdims=True)


def kelvin_green(G: GreenFunction, x, x0_exterior) -> np.ndarray:
    """Green function of the inverted (exterior) region at ``x`` with pole
    ``x0_exterior``, obtained from ``G`` built on the bounded region with
    pole at the inverted point: ``|x0|^{2-n}|x|^{2-n} G(x*, x0*)``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[1]
    x0 = np.asarray(x0_exterior, dtype=float)
    if not np.allclose(kelvin_invert(x0[None])[0], G.pole, atol=1e-14):
        raise ValueError("G must be built with pole at the inverted exterior pole")
    fac = (np.linalg.norm(x0) * np.linalg.norm(x, axis=1)) ** (2 - n)
    return fac * G(kelvin_invert(x))


@dataclass
class KelvinReport:
    max_identity_residual: float
    max_exterior_error: float
    far_field_slope: float
    far_field_limit: float


def kelvin_experiment(resolution: int = 512, pairs: int = 10_000, seed: int = 0) -> KelvinReport:
    """Kelvin identity on random pairs; exterior Green function of the unit
    disk from the layer-built interior one, compared with the closed form on
    the annulus ``1 < |x| < 2``; far-field decay towards ``(1/2pi) ln|x0|``."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(pairs, 2)) * rng.uniform(0.1, 10, size=(pairs, 1))
    y = rng.normal(size=(pairs, 2)) * rng.uniform(0.1, 10, size=(pairs, 1))
    ident = float(kelvin_check(x, y).max())
    mesh = make_mesh("circle", resolution)
    x0 = np.array([1.6, 0.7])
    G = green_build(mesh, kelvin_invert(x0[None])[0])
    r = rng.uniform(1.05, 2.0, 500)
    t = rng.uniform(0, 2 * np.pi, 500)
    pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
    pts = pts[np.linalg.norm(pts - x0, axis=1) > 0.05]
    err = float(np.abs(kelvin_green(G, pts, x0) - disk_green(pts, x0[None])).max())
    limit = math.log(np.linalg.norm(x0)) / (2 * np.pi)
    radii = np.array([10.0, 20.0, 40.0, 80.0])
    dirs = np.array([math.cos(0.3), math.sin(0.3)])
    gaps = [abs(kelvin_green(G, (R * dirs)[None], x0)[0] - limit) for R in radii]
    slope = float(np.polyfit(np.log(radii), np.log(gaps), 1)[0])
    return KelvinReport(ident, err, slope, limit)


# ------------------------------------------------------- subharmonicity


def richardson_laplacian(fn: Callable, points, delta: float) -> np.ndarray:
    """Laplacian by central second differences at ``delta, delta/2, delta/4``
    combined to cancel the ``delta^2`` and ``delta^4`` error terms."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    n = P.shape[1]
    centre = fn(P)

    def fd(h):
        acc = -2 * n * centre
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            acc = acc + fn(P + e) + fn(P - e)
        return acc / (h * h)

    a, b, c = fd(delta), fd(delta / 2), fd(delta / 4)
    l1 = (4 * b - a) / 3
    l2 = (4 * c - b) / 3
    return (16 * l2 - l1) / 15


def dirac_residual(u: Callable, points, delta: float) -> np.ndarray:
    """``|sum_j e_j d_j u|`` by fourth-order central differences."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    n = P.shape[1]
    out = 0.0
    for j in range(n):
        e = np.zeros(n)
        e[j] = delta
        d = (-u(P + 2 * e) + 8 * u(P + e) - 8 * u(P - e) + u(P - 2 * e)) / (12 * delta)
        out = out + cl.left_unit(j + 1, d)
    return cl.mv_norm(out)


@dataclass
class SubharmonicReport:
    min_laplacian: float
    violations: int
    excluded: int
    points: int
    theta: float
    dirac_residual: float


def subharmonicity_check(
    u: Callable, lattice, theta: float, delta: float = 1e-2, tol: float = 1e-6, zero_tol: float = 1e-12
) -> SubharmonicReport:
    """Scan ``Delta |u|^theta`` over lattice points; ``u`` returns multivector
    values ``(P, 2^n)``.  Points where ``|u|`` vanishes are excluded."""
    P = np.atleast_2d(np.asarray(lattice, dtype=float))
    mag = cl.mv_norm(u(P))
    keep = mag > zero_tol
    P = P[keep]

    def w(x):
        return cl.mv_norm(u(x)) ** theta

    lap = richardson_laplacian(w, P, delta)
    res = float(dirac_residual(u, P, delta).max()) if len(P) else 0.0
    return SubharmonicReport(
        float(lap.min()) if lap.size else float("nan"),
        int(np.sum(lap < -tol)),
        int(np.sum(~keep)),
        len(P),
        theta,
        res,
    )


def cauchy_kernel_field(x) -> np.ndarray:
    """``x / |x|^n`` as a vector-valued multivector (monogenic off 0)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[1]
    return cl.vectors_to_mv(x / np.linalg.norm(x, axis=1, keepdims=True) ** n)


def annulus_lattice(n: int, inner: float, outer: float, m: int) -> np.ndarray:
    x = np.linspace(-outer, outer, m)
    grids = np.meshgrid(*([x] * n), indexing="ij")
    P = np.column_stack([g.ravel() for g in grids])
    r = np.linalg.norm(P, axis=1)
    return P[(r > inner) & (r < outer)]


# ----------------------------------------- Green representation identity


def _ray_exit(x0, phi, radius):
    """Distance from ``x0`` along direction ``phi`` to the circle of given radius."""
    d = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    b = d @ x0
    return -b + np.sqrt(b * b - (x0 @ x0 - radius**2))


def green_representation_check(
    mesh: BoundaryMesh,
    x0,
    w: Callable,
    grad_w: Callable,
    lap_w: Callable,
    eps: float,
    G: Optional[GreenFunction] = None,
    angular: int = 512,
    radial: int = 48,
) -> float:
    """``|w(x0) - (I + II - III)|`` with
    ``I = 2 int w <grad G, grad Phi>``, ``II = int w G Lap Phi``,
    ``III = int Phi G Lap w`` over the disk, ``Phi`` the cutoff of width eps.

    Quadrature is polar about ``x0``: the inner region is integrated with a
    Gauss rule per ray (handles the log singularity at the pole), and the
    collar with its own Gauss rule resolving the cutoff profile.
    """
    c, R = _disk_frame(mesh)
    x0 = np.asarray(x0, dtype=float)
    if eps < 2 * R / angular * 4:
        raise ValueError("epsilon is below the quadrature resolution")
    if np.linalg.norm(x0 - c) >= R - eps:
        raise ValueError("pole must lie outside the collar")
    G = green_build(mesh, x0, construction="explicit_disk") if G is None else G
    Phi = CutoffFamily(mesh, eps)
    phi = 2 * np.pi * np.arange(angular) / angular
    rel0 = x0 - c
    s_out = _ray_exit(rel0, phi, R)
    s_mid = _ray_exit(rel0, phi, R - eps)
    s_in = _ray_exit(rel0, phi, R - eps / 2)
    g, gw = np.polynomial.legendre.leggauss(radial)
    u = 0.5 * (g + 1)
    dirs = np.stack([np.cos(phi), np.sin(phi)], axis=-1)

    def integrate(a, b, integrand):
        s = a[:, None] + (b - a)[:, None] * u[None]
        wts = (b - a)[:, None] * 0.5 * gw[None] * s * (2 * np.pi / angular)
        pts = x0 + s[..., None] * dirs[:, None, :]
        vals = integrand(pts.reshape(-1, 2)).reshape(s.shape)
        return float(np.sum(vals * wts))

    def collar(p):
        gG = G.gradient(p)
        gP = Phi.gradient(p)
        Gv = G(p)
        return 2 * w(p) * np.sum(gG * gP, axis=1) + w(p) * Gv * Phi.laplacian(p)

    def bulk(p):
        return Phi.value(p) * G(p) * lap_w(p)

    zero = np.zeros(angular)
    # collar where Phi varies: between R - eps and R - eps/2
    I_II = integrate(s_mid, s_in, collar)
    III = integrate(zero, s_mid, bulk) + integrate(s_mid, s_in, bulk)
    return abs(float(w(x0[None])[0]) - (I_II - III))


# ------------------------------------------------- comparison experiment


@dataclass
class ComparisonReport:
    theta: float
    min_margin: float
    violations: int
    points: int
    trace_residual: float
    lattice: tuple = (200, 200)


def comparison_experiment(
    f: BoundaryField,
    theta,
    lattice: int = 200,
    fine: int = 2**15,
    tol: float = 1e-4,
    rule: PvRule = PvRule(),
    trace_nodes: int = 16,
    trace_tol: float = 1e-4,
):
    """Compare ``w = |C f|^theta`` with the harmonic extension ``v`` of
    ``|trace C f|^theta`` on a polar lattice of the unit disk.

    The boundary trace is the jump relation ``(1/2 + c) f`` at the nodes,
    cross-checked against approach-ladder traces at a few nodes (a failed
    ladder aborts).  It is trigonometrically interpolated to ``fine`` points
    before the power is taken, so zeros of the trace are resolved.
    ``theta`` may be a sequence; a list of reports is then returned.
    """
    from .nontangential import nt_traces

    mesh = f.mesh
    c, R = _disk_frame(mesh)
    if R != 1.0 or np.any(c != 0):
        raise ValueError("comparison experiment runs on the unit circle")
    fv = f.as_mv()
    F = BoundaryField(mesh, fv)
    trace = 0.5 * fv + cauchy_clifford_pv(F, rule).values
    probe = np.linspace(0, mesh.size, trace_nodes, endpoint=False).astype(int)
    reps = nt_traces(lambda p: cauchy_clifford_domain(F, p).values, mesh, nodes=probe)
    bad = [int(i) for i, rp in zip(probe, reps) if not rp.converged]
    if bad:
        raise RuntimeError(f"approach ladder found no trace at nodes {bad}")
    trace_res = max(float(np.abs(rp.value - trace[i]).max()) for i, rp in zip(probe, reps))
    if trace_res > trace_tol:
        raise RuntimeError(f"ladder traces disagree with the jump relation by {trace_res:.3g}")
    _, tr_fine = _upsampled(mesh, trace, fine)
    r = (np.arange(lattice) + 0.5) / lattice
    th = 2 * np.pi * np.arange(lattice) / lattice
    Rg, Tg = np.meshgrid(r, th, indexing="ij")
    pts = np.column_stack([(Rg * np.cos(Tg)).ravel(), (Rg * np.sin(Tg)).ravel()])
    Umag = cl.mv_norm(cauchy_clifford_domain(F, pts).values).reshape(Rg.shape)
    bmag = cl.mv_norm(tr_fine)
    out = []
    for t in np.atleast_1d(theta):
        v = poisson_fourier_polar(bmag**t, r, lattice)
        margin = v - Umag**t
        out.append(ComparisonReport(float(t), float(margin.min()), int(np.sum(margin < -tol)), margin.size, trace_res, (lattice, lattice)))
    return out if np.ndim(theta) else out[0]
