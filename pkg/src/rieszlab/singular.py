"""Singular integral operators on boundary meshes.

Principal values are computed by symmetric truncation ``|x - y| > eps`` on a
ladder of truncation radii, followed by extrapolation to ``eps -> 0``.  The
truncated sums of a smooth density against an odd kernel on a smooth surface
differ from the limit by a series in odd powers of the effective truncation
radius, so the ladder values are fitted with ``S0 + a1 r + a3 r^3 + ...``.
The effective radius of a rung is the midpoint between the last excluded and
the first included neighbour distance.
"""

from __future__ import annotations

import csv
import io
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from . import clifford as cl
from .geometry import BoundaryMesh, sphere_area

CHUNK = 64


@dataclass(frozen=True)
class PvRule:
    """Truncation rule: radii are multiples of the mesh scale ``h``."""

    truncation: float = 3.0
    ladder: tuple = (8.0, 5.0, 3.0, 2.0)
    quadrature: str = "trapezoid"
    extrapolate: bool = True
    workers: int = 1

    def __post_init__(self):
        lad = tuple(float(c) for c in self.ladder)
        object.__setattr__(self, "ladder", lad)
        if not lad:
            raise ValueError("ladder must be nonempty")
        if any(b >= a for a, b in zip(lad, lad[1:])):
            raise ValueError("ladder must be strictly decreasing")
        if min(lad) <= 1.0 or self.truncation <= 1.0:
            raise ValueError("all truncations must exceed h")
        if self.quadrature != "trapezoid":
            raise ValueError("only trapezoid-on-mesh quadrature is available")
        if self.workers < 1:
            raise ValueError("workers must be positive")

    def radii(self, h: float) -> np.ndarray:
        # the tiny inflation keeps nodes at exact multiples of h on the
        # excluded side for every target (symmetric exclusion)
        cs = self.ladder if self.extrapolate else (self.truncation,)
        return np.asarray(cs) * h * (1 + 1e-6)


@dataclass(frozen=True, eq=False)
class BoundaryField:
    mesh: BoundaryMesh
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape[0] != self.mesh.size:
            raise ValueError("field length must equal the node count")
        if v.ndim == 2 and v.shape[1] != 1 << self.mesh.n:
            raise ValueError("multivector fields need 2**n columns")
        if v.ndim > 2:
            raise ValueError("field values must be (N,) or (N, 2**n)")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def is_multivector(self) -> bool:
        return self.values.ndim == 2

    def as_mv(self) -> np.ndarray:
        if self.is_multivector:
            return self.values
        return cl.scalars_to_mv(self.values, self.mesh.n)

    def __add__(self, other):
        return BoundaryField(self.mesh, self.values + _vals(other))

    def __sub__(self, other):
        return BoundaryField(self.mesh, self.values - _vals(other))

    def __mul__(self, s):
        return BoundaryField(self.mesh, self.values * float(s))

    __rmul__ = __mul__


def _vals(x):
    return x.values if isinstance(x, BoundaryField) else np.asarray(x, dtype=float)


def field_from(mesh: BoundaryMesh, fn: Callable) -> BoundaryField:
    return BoundaryField(mesh, fn(mesh.nodes))


def normal_field(mesh: BoundaryMesh) -> np.ndarray:
    """The outward normal as a grade-1 multivector field."""
    return cl.vectors_to_mv(mesh.normals)


# ---------------------------------------------------------------- kernels


def omega(n: int) -> float:
    """Area of the unit sphere S^{n-1}."""
    return sphere_area(n)


def riesz_kernel(j: int, n: int) -> Callable:
    c = 2.0 / omega(n)

    def k(z):
        r = np.linalg.norm(z, axis=-1)
        return c * z[..., j - 1] / r**n

    k.degree = 1 - n
    return k


def check_odd_kernel(k: Callable, n: int, seed: int = 0, samples: int = 64) -> None:
    """Reject kernels that are not odd or not homogeneous of degree 1-n."""
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(samples, n))
    kz = np.asarray(k(z), dtype=float)
    scale = np.max(np.abs(kz)) + 1e-300
    if np.max(np.abs(np.asarray(k(-z)) + kz)) > 1e-10 * scale:
        raise ValueError("kernel is not odd: k(-z) != -k(z)")
    lam = 2.7
    if np.max(np.abs(np.asarray(k(lam * z)) * lam ** (n - 1) - kz)) > 1e-9 * scale:
        raise ValueError(f"kernel is not homogeneous of degree {1 - n}")


# ------------------------------------------------------- truncated sums


def _effective_radii(mesh: BoundaryMesh, targets: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """Per target and rung, the midpoint between the largest neighbour
    distance inside the truncation and the smallest one outside it."""
    tree_pts = mesh.nodes
    emax = eps.max()
    k = 16 if mesh.n == 2 else 64
    while True:
        k = min(k, mesh.size)
        if mesh.periodic:
            d = np.sort(
                np.linalg.norm(mesh.displacement(tree_pts[None], targets[:, None]), axis=2), axis=1
            )[:, :k]
        else:
            d, _ = cKDTree(tree_pts).query(targets, k=k)
            d = np.atleast_2d(d)
        if k == mesh.size or np.all(d[:, -1] > emax):
            break
        k *= 2
    out = np.empty((len(targets), len(eps)))
    for m, e in enumerate(eps):
        inside = np.where(d <= e, d, 0.0).max(axis=1)
        outside = np.where(d > e, d, np.inf).min(axis=1)
        outside = np.where(np.isfinite(outside), outside, e)
        out[:, m] = 0.5 * (inside + outside)
    return out


def _extrapolate(rho: np.ndarray, S: np.ndarray, odd: bool = True) -> np.ndarray:
    """Fit the ladder values per target and return the value at ``rho = 0``.

    ``odd``: interpolate ``S0 + a1 rho + a3 rho^3 + ...`` through all rungs.
    Otherwise fit ``S0 + a1 rho`` by least squares, which damps the
    rung-to-rung scatter that irregular surface meshes add to the sums.

    rho: (T, L); S: (T, L, m).
    """
    T, L = rho.shape
    if L == 1:
        return S[:, 0]
    if odd:
        powers = np.array([0] + [2 * k + 1 for k in range(L - 1)])
    else:
        powers = np.array([0, 1])
    x = rho / rho.max(axis=1, keepdims=True)
    V = x[:, :, None] ** powers[None, None, :]
    if odd:
        return np.linalg.solve(V, S)[:, 0]
    Vt = np.transpose(V, (0, 2, 1))
    return np.linalg.solve(Vt @ V, Vt @ S)[:, 0]


def _periodic_factor(mesh, disp):
    """Lattice-sum factor turning a degree -1 odd kernel on the line into its
    periodisation: sum_m 1/(d + mL) = (pi/L) cot(pi d/L)."""
    L = mesh.period
    a = np.pi * disp[..., 0] / L
    with np.errstate(invalid="ignore", divide="ignore"):
        fac = np.where(np.abs(a) > 0, a / np.tan(a), 1.0)
    return fac


def _index_counts(rule: PvRule) -> np.ndarray:
    """Excluded neighbours per side for each rung of an ordered planar mesh."""
    cs = rule.ladder if rule.extrapolate else (rule.truncation,)
    counts = np.floor(np.asarray(cs) + 1e-9).astype(int)
    if len(np.unique(counts)) != len(counts):
        raise ValueError(f"ladder {cs} maps to repeated neighbour counts {counts.tolist()}")
    return counts


def _index_offsets(mesh, rows, cols):
    """Index distance along an ordered planar mesh (cyclic when closed)."""
    off = np.abs(rows[:, None] - cols[None, :])
    if mesh.closed or mesh.periodic:
        off = np.minimum(off, mesh.size - off)
    return off


def _index_radii(mesh, counts):
    """Per node and rung, the mean distance of the last excluded and the
    first included neighbour, averaged over the two sides."""
    N = mesh.size
    idx = np.arange(N)
    wrap = mesh.closed or mesh.periodic
    dist = np.empty((N, counts.max() + 1))
    for k in range(1, counts.max() + 2):
        sides = []
        for step in (k, -k):
            j = idx + step
            ok = np.ones(N, dtype=bool) if wrap else (j >= 0) & (j < N)
            j = j % N
            d = np.linalg.norm(mesh.displacement(mesh.nodes, mesh.nodes[j]), axis=1)
            sides.append(np.where(ok, d, np.nan))
        dist[:, k - 1] = np.nanmean(np.stack(sides), axis=0)
    return 0.5 * (dist[:, counts - 1] + dist[:, counts])


def _pv_core(mesh, contrib, f_src, src_idx, rule, return_ladder=False):
    """Generic symmetric-truncation PV sum with ladder extrapolation.

    ``contrib(disp, f_src_chunk)`` returns the weighted integrand
    ``(T, S, m)`` for displacements ``disp = x - y`` of shape ``(T, S, n)``.

    On ordered planar meshes each rung drops the same number of neighbours
    on both sides of the target, so the odd part of the kernel cancels pair
    by pair even where the node spacing varies along the curve; other meshes
    drop the nodes inside the ball ``|x - y| <= eps``.
    """
    tgt = mesh.nodes
    by_index = mesh.ordered
    if by_index:
        counts = _index_counts(rule)
        rho = _index_radii(mesh, counts) if len(counts) > 1 else None
        nrungs = len(counts)
    else:
        eps = rule.radii(mesh.h)
        rho = _effective_radii(mesh, tgt, eps) if len(eps) > 1 else None
        nrungs = len(eps)
    src = mesh.nodes[src_idx]
    m = f_src.shape[1]
    ladder = np.zeros((len(tgt), nrungs, m))

    def work(start):
        stop = min(start + CHUNK, len(tgt))
        disp = mesh.displacement(tgt[start:stop, None, :], src[None, :, :])
        r = np.linalg.norm(disp, axis=2)
        safe = np.where((r > 0)[..., None], disp, 1.0)
        T = contrib(safe, f_src)
        T = np.where((r > 0)[..., None], T, 0.0)
        if by_index:
            off = _index_offsets(mesh, np.arange(start, stop), src_idx)
            masks = [off > c for c in counts]
        else:
            masks = [r > e for e in eps]
        for k, mask in enumerate(masks):
            ladder[start:stop, k] = np.einsum("ts,tsm->tm", mask.astype(float), T)

    starts = range(0, len(tgt), CHUNK)
    if rule.workers > 1:
        with ThreadPoolExecutor(rule.workers) as ex:
            list(ex.map(work, starts))
    else:
        for s in starts:
            work(s)
    if rho is None:
        out = ladder[:, -1]
    else:
        out = _extrapolate(rho, ladder, odd=by_index)
    if return_ladder:
        return out, ladder, rho
    return out


def _source_mask(values):
    v = values if values.ndim == 2 else values[:, None]
    return np.flatnonzero(np.any(v != 0, axis=1))


def _check_pv(mesh, j=None):
    if mesh.n < 2:
        raise ValueError("principal-value operators need n >= 2")
    if j is not None and not 1 <= j <= mesh.n:
        raise ValueError(f"axis index {j} out of range for n={mesh.n}")


def _wrap(mesh, values, like):
    out = values if like.is_multivector else values[:, 0]
    return BoundaryField(mesh, out)


def pv_convolution(
    k: Callable, f: BoundaryField, rule: PvRule = PvRule(), return_ladder: bool = False
):
    """``lim_{eps->0} sum_{|x-y|>eps} k(x - y) f(y) w(y)`` at every node.

    The kernel must be odd and homogeneous of degree ``1 - n``; both are
    verified on random samples.  Multivector densities are handled blade-wise.
    """
    mesh = f.mesh
    _check_pv(mesh)
    check_odd_kernel(k, mesh.n)
    vals = f.values if f.is_multivector else f.values[:, None]
    src_idx = _source_mask(vals)
    if len(src_idx) == 0:
        zero = np.zeros_like(vals)
        res = _wrap(mesh, zero, f)
        return (res, np.zeros((mesh.size, 1) + vals.shape[1:])) if return_ladder else res
    fw = vals[src_idx] * mesh.weights[src_idx, None]
    periodic = mesh.periodic
    if periodic and mesh.n != 2:
        raise ValueError("periodic wrap is available for planar flat windows only")

    def contrib(disp, fs):
        kv = np.asarray(k(disp), dtype=float)
        if periodic:
            kv = kv * _periodic_factor(mesh, disp)
        return kv[..., None] * fs[None]

    out = _pv_core(mesh, contrib, fw, src_idx, rule, return_ladder=return_ladder)
    if return_ladder:
        return _wrap(mesh, out[0], f), out[1]
    return _wrap(mesh, out, f)


def riesz_pv(f: BoundaryField, j: int, rule: PvRule = PvRule(), return_ladder: bool = False):
    """Principal-value Riesz transform ``R_j f`` on the mesh."""
    _check_pv(f.mesh, j)
    return pv_convolution(riesz_kernel(j, f.mesh.n), f, rule, return_ladder)


def riesz_mod(f: BoundaryField, j: int, rule: PvRule = PvRule()) -> BoundaryField:
    """Modified Riesz transform: the PV sum minus ``sum k_{j,1}(-y) f(y) w(y)``
    with the fixed truncation ``|y| > 1`` (over the same node set)."""
    mesh = f.mesh
    _check_pv(mesh, j)
    pv = riesz_pv(f, j, rule)
    y = mesh.nodes
    r = np.linalg.norm(y, axis=1)
    k = riesz_kernel(j, mesh.n)
    far = r > 1.0
    kv = np.zeros(mesh.size)
    kv[far] = k(-y[far])
    vals = f.values if f.is_multivector else f.values[:, None]
    const = np.einsum("i,im->m", kv * mesh.weights, vals)
    out = (pv.values if f.is_multivector else pv.values[:, None]) - const[None]
    return _wrap(mesh, out, f)


def bundle_R(f: BoundaryField, rule: PvRule = PvRule()) -> BoundaryField:
    """``R = e_1 R_1 + ... + e_n R_n`` acting on scalar or multivector data."""
    mesh = f.mesh
    _check_pv(mesh)
    out = np.zeros((mesh.size, 1 << mesh.n))
    for j in range(1, mesh.n + 1):
        rj = riesz_pv(f, j, rule).values
        rj = rj if f.is_multivector else cl.scalars_to_mv(rj, mesh.n)
        out += cl.left_unit(j, rj)
    return BoundaryField(mesh, out)


def _cauchy_kernel_mv(disp, n):
    r = np.linalg.norm(disp, axis=-1)
    return cl.vectors_to_mv(disp / r[..., None] ** n) / omega(n)


def cauchy_clifford_pv(
    f: BoundaryField, rule: PvRule = PvRule(), return_ladder: bool = False
):
    """Boundary-to-boundary Cauchy-Clifford operator with kernel
    ``(x - y)/|x - y|^n`` acting as ``K * nu(y) * f(y)``."""
    mesh = f.mesh
    _check_pv(mesh)
    g = cl.gp_arrays(normal_field(mesh), f.as_mv())
    src_idx = _source_mask(g)
    n = mesh.n
    if len(src_idx) == 0:
        return BoundaryField(mesh, np.zeros((mesh.size, 1 << n)))
    gw = g[src_idx] * mesh.weights[src_idx, None]
    periodic = mesh.periodic

    def contrib(disp, gs):
        K = _cauchy_kernel_mv(disp, n)
        if periodic:
            K = K * _periodic_factor(mesh, disp)[..., None]
        return cl.gp_arrays(K, gs[None])

    out = _pv_core(mesh, contrib, gw, src_idx, rule, return_ladder=return_ladder)
    if return_ladder:
        return BoundaryField(mesh, out[0]), out[1]
    return BoundaryField(mesh, out)


# ------------------------------------------------- boundary to domain


@dataclass(frozen=True)
class DomainValues:
    values: np.ndarray
    low_accuracy: np.ndarray


def _upsampled(mesh: BoundaryMesh, vals: np.ndarray, m: int):
    """Resample a field on a parametrized closed curve to ``m`` nodes by
    trigonometric interpolation."""
    fine = mesh.resample(m)
    N = mesh.size
    F = np.fft.rfft(vals, axis=0)
    G = np.zeros((m // 2 + 1,) + vals.shape[1:], dtype=complex)
    keep = min(N // 2, m // 2)
    G[:keep] = F[:keep]
    if N % 2 == 0 and m > N:
        G[N // 2] = 0.5 * F[N // 2]  # split the Nyquist mode symmetrically
    out = np.fft.irfft(G, n=m, axis=0) * (m / N)
    return fine, out


MAX_UPSAMPLE = 2**18


def _vector_kernel_sum(mesh, g, targets, scale):
    """``sum_i scale (x - y_i)/|x - y_i|^n * g_i`` for every target.

    ``e_j * g`` is a signed permutation of ``g``, so the Clifford product
    with a vector kernel splits into ``n`` real matrix products.
    """
    n = mesh.n
    Gj = [cl.left_unit(j + 1, g) for j in range(n)]
    out = np.zeros((len(targets), g.shape[1]))
    step = max(1, 2**21 // max(1, mesh.size))
    for s in range(0, len(targets), step):
        t = targets[s : s + step]
        disp = mesh.displacement(t[:, None, :], mesh.nodes[None])
        r = np.linalg.norm(disp, axis=-1)
        coef = scale / r**n
        for j in range(n):
            out[s : s + step] += (disp[..., j] * coef) @ Gj[j]
    return out


def _boundary_to_domain(f: BoundaryField, targets, scale: float, with_normal: bool, near_factor=6.0):
    mesh = f.mesh
    n = mesh.n
    tg = np.atleast_2d(np.asarray(targets, dtype=float))
    fv = f.as_mv()
    dist = mesh.distance(tg)
    low = dist <= 2 * mesh.h

    def data(ms, vals):
        g = cl.gp_arrays(normal_field(ms), vals) if with_normal else vals
        return g * ms.weights[:, None]

    out = np.zeros((len(tg), 1 << n))
    near = dist < near_factor * mesh.h
    if mesh.curve is None:
        near[:] = False
    far_idx = np.flatnonzero(~near)
    if len(far_idx):
        out[far_idx] = _vector_kernel_sum(mesh, data(mesh, fv), tg[far_idx], scale)
    near_idx = np.flatnonzero(near)
    if len(near_idx):
        # trapezoid error on an analytic curve decays like exp(-m d / a) with
        # a = length / 2 pi; about 32 nodes per unit of d / a suffice
        a = mesh.total_measure / (2 * np.pi)
        need = 32 * a / np.maximum(dist[near_idx], 1e-300)
        low[near_idx] = need > MAX_UPSAMPLE
        m_req = np.minimum(MAX_UPSAMPLE, 2 ** np.ceil(np.log2(np.maximum(need, mesh.size))))
        for m in np.unique(m_req):
            sel = near_idx[m_req == m]
            fine, fv_fine = _upsampled(mesh, fv, int(m))
            g = data(fine, fv_fine)
            if with_normal:
                out[sel] = _subtracted(fine, fv_fine, g, tg[sel], scale, data)
            else:
                out[sel] = _vector_kernel_sum(fine, g, tg[sel], scale)
    return DomainValues(out, low)


def _subtracted(fine, fv_fine, g, targets, scale, data):
    """``C[f - c](x) + C[1](x) * c`` with ``c`` the density at the nearest
    node; ``C[1]`` is 1 inside the region and 0 outside."""
    _, nearest = cKDTree(fine.nodes).query(targets)
    c = fv_fine[nearest]
    inside = fine.contains(targets).astype(float)
    base = data(fine, np.tile(_unit(fv_fine.shape[1]), (fine.size, 1)))
    total = _vector_kernel_sum(fine, g, targets, scale)
    one = _vector_kernel_sum(fine, base, targets, scale)
    return total - cl.gp_arrays(one, c) + inside[:, None] * c


def _unit(size):
    e = np.zeros(size)
    e[0] = 1.0
    return e


def cauchy_clifford_domain(f: BoundaryField, targets) -> DomainValues:
    """``(1/omega) sum_i (x - y_i)/|x - y_i|^n * nu(y_i) * f(y_i) w_i``.

    On parametrized closed curves, targets within a few ``h`` of the boundary
    are evaluated on a spectrally upsampled copy of the curve with the value
    at the nearest node subtracted (the operator reproduces constants inside).
    ``low_accuracy`` flags targets within ``2h`` of the boundary that could
    not be upsampled enough.
    """
    return _boundary_to_domain(f, targets, 1.0 / omega(f.mesh.n), with_normal=True)


def clifford_riesz_domain(f: BoundaryField, targets) -> DomainValues:
    """``(2/omega) sum_i (x - y_i)/|x - y_i|^n * f(y_i) w_i``."""
    return _boundary_to_domain(f, targets, 2.0 / omega(f.mesh.n), with_normal=False)


# ---------------------------------------------------------- single layer


def fundamental_solution(x, n: Optional[int] = None) -> np.ndarray:
    """Fundamental solution of the Laplacian, vectorised over the last axis."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] if n is None else n
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0):
        raise ValueError("fundamental solution is singular at the origin")
    if n == 2:
        return np.log(r) / (2 * np.pi)
    return r ** (2 - n) / (omega(n) * (2 - n))


def single_layer(f: BoundaryField, targets=None) -> np.ndarray:
    """Single layer potential of a scalar density.

    With ``targets`` it evaluates ``sum_i E(x - y_i) f_i w_i`` at the given
    points; without, it returns the boundary operator at the nodes.
    """
    if f.is_multivector:
        raise ValueError("single layer takes scalar densities")
    mesh = f.mesh
    if targets is not None:
        tg = np.atleast_2d(np.asarray(targets, dtype=float))
        fw = f.values * mesh.weights
        out = np.empty(len(tg))
        for s in range(0, len(tg), 256):
            out[s : s + 256] = fundamental_solution(tg[s : s + 256, None] - mesh.nodes[None]) @ fw
        return out
    return single_layer_matrix(mesh) @ f.values


def _kress_log_weights(N: int) -> np.ndarray:
    """Weights for int_0^{2pi} ln(4 sin^2((t - s)/2)) phi(s) ds on N nodes,
    as a function of the index offset."""
    m = np.arange(1, N // 2)
    k = np.arange(N)
    t = 2 * np.pi * k / N
    R = -(4 * np.pi / N) * (np.cos(np.outer(t, m)) / m).sum(axis=1)
    R -= (4 * np.pi / N**2) * np.cos(N / 2 * t)
    return R


def single_layer_matrix(mesh: BoundaryMesh) -> np.ndarray:
    """Matrix of the boundary single layer operator on the mesh nodes.

    Parametrized closed curves use the spectral log-splitting rule for
    periodic integrands; other meshes integrate the diagonal singularity
    analytically over the node's own cell (segment in 2D, disk patch in 3D).
    """
    n, N = mesh.n, mesh.size
    X = mesh.nodes
    if mesh.curve is not None and N % 2 == 0:
        t = 2 * np.pi * np.arange(N) / N
        _, dp = mesh.curve(t)
        speed = np.linalg.norm(dp, axis=1)
        diff = X[:, None] - X[None]
        r = np.linalg.norm(diff, axis=2)
        dt = t[:, None] - t[None]
        with np.errstate(divide="ignore", invalid="ignore"):
            smooth = np.log(r) - 0.5 * np.log(4 * np.sin(dt / 2) ** 2)
        smooth[np.diag_indices(N)] = np.log(speed)
        Rw = _kress_log_weights(N)
        offs = (np.arange(N)[:, None] - np.arange(N)[None]) % N
        A = 0.5 * Rw[offs] + smooth * (2 * np.pi / N)
        return A * speed[None] / (2 * np.pi)
    diff = X[:, None] - X[None]
    r = np.linalg.norm(diff, axis=2)
    np.fill_diagonal(r, 1.0)
    if n == 2:
        A = np.log(r) / (2 * np.pi) * mesh.weights[None]
        w = mesh.weights
        A[np.diag_indices(N)] = w * (np.log(w / 2) - 1) / (2 * np.pi)
    else:
        A = r ** (2 - n) / (omega(n) * (2 - n)) * mesh.weights[None]
        if n != 3:
            raise ValueError("boundary single layer is implemented for n = 2, 3")
        rho = np.sqrt(mesh.weights / np.pi)
        A[np.diag_indices(N)] = -rho / 2
    return A


# ------------------------------------------------- distributional pairing


def distributional_riesz_pairing(f: BoundaryField, g: BoundaryField, j: int) -> float:
    """Antisymmetrised double integral
    ``(1/omega) sum_{i != k} (x_j - y_j)/|x - y|^n [f(y) g(x) - f(x) g(y)] w w'``.

    ``x`` runs over the first index.  The diagonal is skipped; its missing
    cell contribution is restored from the average of the integrand over the
    two nearest neighbours (the integrand is bounded for Holder data).
    """
    mesh = f.mesh
    if f.is_multivector or g.is_multivector:
        raise ValueError("pairing takes scalar fields")
    if not mesh.closed:
        raise ValueError("pairing needs a closed mesh")
    _check_pv(mesh, j)
    n = mesh.n
    X, w = mesh.nodes, mesh.weights
    fv, gv = f.values, g.values
    total = 0.0
    diag = np.zeros(mesh.size)
    for s in range(0, mesh.size, CHUNK):
        sl = slice(s, s + CHUNK)
        d = X[sl, None] - X[None]
        r = np.linalg.norm(d, axis=2)
        rows = np.arange(s, min(s + CHUNK, mesh.size))
        r[np.arange(len(rows)), rows] = np.inf
        K = d[..., j - 1] / r**n
        integrand = K * (fv[None] * gv[sl, None] - fv[sl, None] * gv[None])
        total += np.einsum("ik,i,k->", integrand, w[sl], w)
        # nearest-neighbour average stands in for the excluded diagonal value
        nn = np.argsort(r, axis=1)[:, :2]
        diag[sl] = integrand[np.arange(len(rows))[:, None], nn].mean(axis=1)
    total += np.dot(diag, w * w)
    return float(total / omega(n))


# ----------------------------------------------------- flat Fourier forms


def riesz_flat_fft(g, j: int, lengths=None) -> np.ndarray:
    """Riesz transform on a periodic grid via the multiplier ``-i xi_j/|xi|``.

    ``g`` is sampled on a uniform grid of the torus of dimension ``g.ndim``;
    ``j`` is 1-based.  The zero frequency is dropped (with a warning when the
    input has nonzero mean).
    """
    g = np.asarray(g, dtype=float)
    d = g.ndim
    if not 1 <= j <= d:
        raise ValueError(f"axis index {j} out of range for a {d}-dimensional grid")
    lengths = [2 * np.pi] * d if lengths is None else list(lengths)
    G = np.fft.fftn(g)
    if abs(G.flat[0]) > 1e-12 * max(1.0, np.abs(G).max()):
        warnings.warn("input has nonzero mean; frequency zero dropped")
    freqs = np.meshgrid(
        *[np.fft.fftfreq(m, d=L / m) for m, L in zip(g.shape, lengths)], indexing="ij"
    )
    mag = np.sqrt(sum(f * f for f in freqs))
    with np.errstate(invalid="ignore", divide="ignore"):
        mult = np.where(mag > 0, -1j * freqs[j - 1] / mag, 0.0)
    return np.real(np.fft.ifftn(mult * G))


def conjugate_function(values, axis: int = 0) -> np.ndarray:
    """Conjugate function on the circle: Fourier multiplier ``-i sgn(k)``."""
    v = np.asarray(values, dtype=float)
    N = v.shape[axis]
    F = np.fft.fft(v, axis=axis)
    k = np.fft.fftfreq(N, 1.0 / N)
    mult = -1j * np.sign(k)
    if N % 2 == 0:
        mult[N // 2] = 0.0
    shape = [1] * v.ndim
    shape[axis] = N
    return np.real(np.fft.ifft(F * mult.reshape(shape), axis=axis))


def riesz_circle_spectral(values) -> np.ndarray:
    """``(R_1 h, R_2 h)`` on the unit circle for samples at equispaced angles.

    On the unit circle ``R_1 h + i R_2 h = e^{i theta} (mean(h) + i Hh)`` with
    ``H`` the conjugate function; this gives a spectrally accurate reference.
    """
    h = np.asarray(values, dtype=float)
    N = h.shape[0]
    th = 2 * np.pi * np.arange(N) / N
    z = np.exp(1j * th).reshape((N,) + (1,) * (h.ndim - 1))
    c = z * (h.mean(axis=0, keepdims=True) + 1j * conjugate_function(h))
    return np.stack([c.real, c.imag])


# ------------------------------------------------------------- CSV I/O


def field_to_csv(f: BoundaryField) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    vals = f.values if f.is_multivector else f.values[:, None]
    if f.is_multivector:
        names = [cl.blade_name(b) for b in range(vals.shape[1])]
    else:
        names = ["value"]
    w.writerow(["node"] + names)
    for i, row in enumerate(vals):
        w.writerow([i] + [repr(float(x)) for x in row])
    return buf.getvalue()


def field_from_csv(mesh: BoundaryMesh, text: str) -> BoundaryField:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    if header[0] != "node":
        raise ValueError("field CSV must start with a 'node' column")
    data = np.array([[float(x) for x in r[1:]] for r in body])
    idx = np.array([int(r[0]) for r in body])
    vals = np.empty_like(data)
    vals[idx] = data
    if len(header) == 2 and header[1] == "value":
        vals = vals[:, 0]
    return BoundaryField(mesh, vals)
