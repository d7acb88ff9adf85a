"""Discretized model boundaries and geometric diagnostics on them.

Every mesh is a quadrature rule for surface measure on the boundary: nodes,
positive weights, outward unit normals and a mesh scale ``h``.  Closed planar
curves generated from an analytic parametrization keep that parametrization
so that fields can be resampled spectrally (used by near-boundary quadrature).
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import gamma

KINDS = ("circle", "sphere", "torus_window", "graph2d", "perturbed_circle", "polyline")
CLOSED_KINDS = ("circle", "sphere", "perturbed_circle")


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n (``omega_{n-1}``)."""
    return 2.0 * math.pi ** (n / 2) / gamma(n / 2)


def flat_ball_measure(n: int, r) -> np.ndarray:
    """Lebesgue measure of a radius-``r`` ball in R^{n-1}."""
    k = n - 1
    return math.pi ** (k / 2) / gamma(k / 2 + 1) * np.asarray(r, dtype=float) ** k


@dataclass(frozen=True, eq=False)
class BoundaryMesh:
    n: int
    nodes: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    h: float
    kind: str
    closed: bool
    periodic: bool = False
    period: Optional[float] = None
    # closed planar curves: t -> (points, derivative) on [0, 2*pi)
    curve: Optional[Callable] = field(default=None, repr=False)
    params: dict = field(default_factory=dict, repr=False)
    triangles: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("nodes", "weights", "normals"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        N = self.nodes.shape[0]
        if self.nodes.shape != (N, self.n) or self.normals.shape != (N, self.n):
            raise ValueError("nodes/normals must have shape (N, n)")
        if self.weights.shape != (N,):
            raise ValueError("weights must have shape (N,)")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if not np.allclose(np.linalg.norm(self.normals, axis=1), 1.0, atol=1e-12):
            raise ValueError("normals must be unit vectors")

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def ordered(self) -> bool:
        """Planar meshes list their nodes in order along the curve."""
        return self.n == 2

    @property
    def diameter(self) -> float:
        lo = self.nodes.min(axis=0)
        hi = self.nodes.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    @property
    def total_measure(self) -> float:
        return float(self.weights.sum())

    @property
    def unbounded(self) -> bool:
        """Windows of unbounded boundaries (flat windows and graphs)."""
        return self.kind in ("torus_window", "graph2d")

    def displacement(self, x, y):
        """``x - y`` with minimal-image wrapping along periodic windows."""
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        if self.periodic:
            L = self.period
            d = d.copy()
            for ax in range(self.n - 1):
                d[..., ax] -= L * np.round(d[..., ax] / L)
        return d

    def resample(self, m: int) -> "BoundaryMesh":
        """Same analytic curve with ``m`` equispaced parameter nodes."""
        if self.curve is None:
            raise ValueError(f"mesh kind {self.kind!r} has no parametrization")
        return _param_mesh(self.curve, m, self.kind, self.params)

    def distance(self, points) -> np.ndarray:
        """Euclidean distance from points to the boundary."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        kind = self.kind
        if kind == "circle" and self.params.get("axes") is None:
            c = np.asarray(self.params.get("center", np.zeros(2)))
            return np.abs(self.params.get("radius", 1.0) - np.linalg.norm(p - c, axis=1))
        if kind == "sphere":
            return np.abs(self.params.get("radius", 1.0) - np.linalg.norm(p, axis=1))
        if kind == "torus_window":
            return np.abs(p[:, -1])
        if self.n == 2:
            return _polyline_distance(self._polyline_vertices(), p, self.closed)
        from scipy.spatial import cKDTree

        return cKDTree(self.nodes).query(p)[0]

    def contains(self, points) -> np.ndarray:
        """True for points inside the region the mesh bounds (above, for windows)."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind in ("torus_window",):
            return p[:, -1] > 0
        if self.kind == "graph2d":
            return p[:, 1] > self.params["profile"](p[:, 0])
        if self.kind == "sphere":
            return np.linalg.norm(p, axis=1) < self.params.get("radius", 1.0)
        if self.kind == "circle" and self.params.get("axes") is None:
            c = np.asarray(self.params.get("center", np.zeros(2)))
            return np.linalg.norm(p - c, axis=1) < self.params.get("radius", 1.0)
        return _point_in_polygon(self._polyline_vertices(), p)

    def _polyline_vertices(self):
        if self.kind == "polyline":
            return np.asarray(self.params["vertices"], dtype=float)
        if self.curve is not None:
            m = max(8 * self.size, 4096)
            t = 2 * np.pi * np.arange(m) / m
            return self.curve(t)[0]
        return np.asarray(self.nodes)


def _param_mesh(curve, N, kind, params):
    t = 2 * np.pi * np.arange(N) / N
    pts, dp = curve(t)
    speed = np.linalg.norm(dp, axis=1)
    normals = np.column_stack([dp[:, 1], -dp[:, 0]]) / speed[:, None]
    weights = speed * (2 * np.pi / N)
    steps = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    return BoundaryMesh(
        n=2,
        nodes=pts,
        weights=weights,
        normals=normals,
        h=float(steps.max()),
        kind=kind,
        closed=True,
        curve=curve,
        params=dict(params),
    )


def _ellipse_curve(center, a, b):
    c = np.asarray(center, dtype=float)

    def curve(t):
        t = np.asarray(t, dtype=float)
        pts = np.column_stack([c[0] + a * np.cos(t), c[1] + b * np.sin(t)])
        dp = np.column_stack([-a * np.sin(t), b * np.cos(t)])
        return pts, dp

    return curve


def _perturbed_curve(amplitude, terms):
    freqs = 3.0 ** np.arange(1, terms + 1)
    coefs = 1.0 / np.arange(1, terms + 1)

    def curve(t):
        t = np.asarray(t, dtype=float)
        r = 1.0 + amplitude * np.cos(np.outer(t, freqs)) @ coefs
        dr = -amplitude * np.sin(np.outer(t, freqs)) @ (coefs * freqs)
        c, s = np.cos(t), np.sin(t)
        pts = np.column_stack([r * c, r * s])
        dp = np.column_stack([dr * c - r * s, dr * s + r * c])
        return pts, dp

    return curve


def _icosphere(level):
    p = (1 + 5 ** 0.5) / 2
    verts = [
        (-1, p, 0), (1, p, 0), (-1, -p, 0), (1, -p, 0),
        (0, -1, p), (0, 1, p), (0, -1, -p), (0, 1, -p),
        (p, 0, -1), (p, 0, 1), (-p, 0, -1), (-p, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    for _ in range(level):
        cache = {}
        new_faces = []

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return np.array(verts), np.array(faces)


def _spherical_triangle_area(a, b, c):
    # Van Oosterom-Strackee solid angle formula
    num = np.abs(np.einsum("ij,ij->i", a, np.cross(b, c)))
    den = 1 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) + np.einsum("ij,ij->i", c, a)
    return 2 * np.arctan2(num, den)


def make_mesh(kind: str, resolution: int, **params) -> BoundaryMesh:
    """Build one of the model boundaries.

    Parameters by kind:

    * ``circle``: ``radius`` (1), ``center`` ((0, 0)), or ``axes=(a, b)`` for an
      ellipse.
    * ``perturbed_circle``: ``amplitude`` and ``terms`` (3); radius
      ``1 + a * sum_k cos(3**k t) / k``.
    * ``sphere``: ``radius`` (1); the icosahedral subdivision level is the
      smallest one with at least ``resolution`` vertices.
    * ``torus_window``: ``n`` (2 or 3), ``length`` (2*pi), ``periodic`` (False).
      Flat window of R^{n-1} x {0}; the region is the upper half-space.
    * ``graph2d``: ``profile`` callable, ``slope`` callable (optional),
      ``length``, ``lipschitz`` bound.  Region above the graph.
    * ``polyline``: ``vertices`` (counter-clockwise), ``closed`` (True).
    """
    if kind not in KINDS:
        raise ValueError(f"unknown mesh kind {kind!r}; expected one of {KINDS}")
    if resolution < 16:
        raise ValueError("resolution must be at least 16")

    if kind == "circle":
        center = tuple(params.get("center", (0.0, 0.0)))
        axes = params.get("axes")
        if axes is None:
            r = float(params.get("radius", 1.0))
            if r <= 0:
                raise ValueError("radius must be positive")
            a = b = r
        else:
            a, b = map(float, axes)
            if a <= 0 or b <= 0:
                raise ValueError("ellipse axes must be positive")
        p = {"center": center, "radius": params.get("radius", 1.0), "axes": axes}
        return _param_mesh(_ellipse_curve(center, a, b), resolution, kind, p)

    if kind == "perturbed_circle":
        amp = float(params.get("amplitude", 0.0))
        terms = int(params.get("terms", 3))
        if abs(amp) * sum(1.0 / k for k in range(1, terms + 1)) >= 1:
            raise ValueError("amplitude too large: radius would vanish")
        p = {"amplitude": amp, "terms": terms}
        return _param_mesh(_perturbed_curve(amp, terms), resolution, kind, p)

    if kind == "sphere":
        R = float(params.get("radius", 1.0))
        level = 0
        while 10 * 4**level + 2 < resolution:
            level += 1
        verts, faces = _icosphere(level)
        areas = _spherical_triangle_area(verts[faces[:, 0]], verts[faces[:, 1]], verts[faces[:, 2]])
        w = np.zeros(len(verts))
        for k in range(3):
            np.add.at(w, faces[:, k], areas / 3)
        edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
        h = np.linalg.norm(verts[edges[:, 0]] - verts[edges[:, 1]], axis=1).max()
        return BoundaryMesh(
            n=3, nodes=R * verts, weights=R**2 * w, normals=verts, h=float(R * h),
            kind=kind, closed=True, params={"radius": R, "level": level}, triangles=faces,
        )

    if kind == "torus_window":
        n = int(params.get("n", 2))
        L = float(params.get("length", 2 * np.pi))
        periodic = bool(params.get("periodic", False))
        h = L / resolution
        x = -L / 2 + (np.arange(resolution) + 0.5) * h
        if n == 2:
            nodes = np.column_stack([x, np.zeros_like(x)])
            weights = np.full(resolution, h)
        elif n == 3:
            X, Y = np.meshgrid(x, x, indexing="ij")
            nodes = np.column_stack([X.ravel(), Y.ravel(), np.zeros(X.size)])
            weights = np.full(X.size, h * h)
        else:
            raise ValueError("torus_window supports n=2 or n=3")
        normals = np.zeros_like(nodes)
        normals[:, -1] = -1.0
        return BoundaryMesh(
            n=n, nodes=nodes, weights=weights, normals=normals, h=h, kind=kind,
            closed=False, periodic=periodic, period=L if periodic else None,
            params={"length": L, "n": n, "periodic": periodic, "per_side": resolution},
        )

    if kind == "graph2d":
        profile = params["profile"]
        L = float(params.get("length", 2 * np.pi))
        lip = float(params.get("lipschitz", np.inf))
        h = L / resolution
        x = -L / 2 + (np.arange(resolution) + 0.5) * h
        y = np.asarray(profile(x), dtype=float)
        slope_fn = params.get("slope")
        if slope_fn is not None:
            dy = np.asarray(slope_fn(x), dtype=float)
        else:
            eps = 1e-6 * max(h, 1e-3)
            dy = (np.asarray(profile(x + eps)) - np.asarray(profile(x - eps))) / (2 * eps)
        chord = np.abs(np.diff(y)) / h
        if np.any(chord > lip * (1 + 1e-9)) or np.any(np.abs(dy) > lip * (1 + 1e-9)):
            raise ValueError(f"profile slope exceeds the declared Lipschitz bound {lip}")
        speed = np.sqrt(1 + dy**2)
        normals = np.column_stack([dy, -np.ones_like(dy)]) / speed[:, None]
        nodes = np.column_stack([x, y])
        steps = np.linalg.norm(np.diff(nodes, axis=0), axis=1)
        return BoundaryMesh(
            n=2, nodes=nodes, weights=speed * h, normals=normals, h=float(steps.max()),
            kind=kind, closed=False,
            params={"profile": profile, "length": L, "lipschitz": lip, "dx": h},
        )

    # polyline
    verts = np.asarray(params["vertices"], dtype=float)
    closed = bool(params.get("closed", True))
    if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
        raise ValueError("polyline needs at least 3 planar vertices")
    ends = np.roll(verts, -1, axis=0) if closed else verts[1:]
    starts = verts if closed else verts[:-1]
    seg = ends - starts
    lengths = np.linalg.norm(seg, axis=1)
    if np.any(lengths == 0):
        raise ValueError("polyline has repeated consecutive vertices")
    # subdivide so the node count is at least `resolution`
    per = np.maximum(1, np.ceil(resolution * lengths / lengths.sum()).astype(int))
    nodes, weights, normals = [], [], []
    for s, d, L, k in zip(starts, seg, lengths, per):
        u = (np.arange(k) + 0.5) / k
        nodes.append(s + u[:, None] * d)
        weights.append(np.full(k, L / k))
        normals.append(np.tile([d[1] / L, -d[0] / L], (k, 1)))
    nodes = np.concatenate(nodes)
    if len(np.unique(np.round(nodes, 14), axis=0)) != len(nodes):
        raise ValueError("polyline nodes are not distinct")
    steps = np.linalg.norm(np.diff(nodes, axis=0), axis=1)
    return BoundaryMesh(
        n=2, nodes=nodes, weights=np.concatenate(weights), normals=np.concatenate(normals),
        h=float(steps.max()), kind=kind, closed=closed,
        params={"vertices": verts, "closed": closed},
    )


# ------------------------------------------------------------ CSV I/O

MESH_HEADER = "# riesz-harmonic-lab mesh v1"


def mesh_to_csv(mesh: BoundaryMesh) -> str:
    """One row per node: ``x_1..x_n, w, nu_1..nu_n`` after a header line."""
    buf = io.StringIO()
    kind = mesh.params.get("source_kind", mesh.kind)
    buf.write(f"{MESH_HEADER}, n={mesh.n}, kind={kind}, closed={int(mesh.closed)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{i}" for i in range(1, mesh.n + 1)] + ["w"] + [f"nu{i}" for i in range(1, mesh.n + 1)])
    for x, wt, nu in zip(mesh.nodes, mesh.weights, mesh.normals):
        w.writerow([repr(float(v)) for v in (*x, wt, *nu)])
    return buf.getvalue()


def _parse_header(line: str) -> dict:
    if not line.startswith(MESH_HEADER):
        raise ValueError(f"mesh CSV must start with {MESH_HEADER!r}")
    fields = {}
    for part in line[len(MESH_HEADER):].split(","):
        if "=" in part:
            key, value = part.split("=", 1)
            fields[key.strip()] = value.strip()
    if "n" not in fields or "kind" not in fields:
        raise ValueError("mesh header needs n=<dim> and kind=<kind>")
    return fields


def mesh_from_csv(text: str) -> BoundaryMesh:
    """Read a mesh written by :func:`mesh_to_csv`.

    The analytic parametrization is not stored, so the result has kind
    ``"imported"`` (the original kind is kept in ``params["source_kind"]``)
    and ``h`` is the largest nearest-neighbour spacing.
    """
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty mesh CSV")
    head = _parse_header(lines[0])
    n = int(head["n"])
    rows = [r for r in csv.reader(lines[1:]) if r]
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    data = np.array([[float(v) for v in r] for r in rows], dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 * n + 1 or len(data) < 2:
        raise ValueError(f"mesh CSV rows must have {2 * n + 1} columns")
    nodes, weights, normals = data[:, :n], data[:, n], data[:, n + 1 :]
    from scipy.spatial import cKDTree

    h = float(cKDTree(nodes).query(nodes, k=2)[0][:, 1].max())
    kind = head["kind"]
    closed = bool(int(head["closed"])) if "closed" in head else kind in CLOSED_KINDS
    return BoundaryMesh(
        n=n, nodes=nodes, weights=weights, normals=normals, h=h, kind="imported",
        closed=closed, params={"source_kind": kind},
    )


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def polyline_from_csv(text: str, resolution: int, closed: bool = True) -> BoundaryMesh:
    """Planar polyline mesh from a CSV of vertices (``x, y`` per row)."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].lstrip().startswith("#")]
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    verts = np.array([[float(v) for v in r[:2]] for r in rows])
    return make_mesh("polyline", resolution, vertices=verts, closed=closed)


def _polyline_distance(verts, p, closed):
    a = verts
    b = np.roll(verts, -1, axis=0) if closed else verts[1:]
    a = a if closed else verts[:-1]
    out = np.empty(len(p))
    for start in range(0, len(p), 256):
        q = p[start : start + 256]
        d = b - a
        t = np.einsum("kij,ij->ki", q[:, None, :] - a[None], d) / np.einsum("ij,ij->i", d, d)
        t = np.clip(t, 0, 1)
        proj = a[None] + t[..., None] * d[None]
        out[start : start + 256] = np.linalg.norm(q[:, None, :] - proj, axis=2).min(axis=1)
    return out


def _point_in_polygon(verts, p):
    x, y = p[:, 0], p[:, 1]
    inside = np.zeros(len(p), dtype=bool)
    xa, ya = verts[:, 0], verts[:, 1]
    xb, yb = np.roll(xa, -1), np.roll(ya, -1)
    for i in range(len(verts)):
        cond = (ya[i] > y) != (yb[i] > y)
        xint = xa[i] + (y - ya[i]) * (xb[i] - xa[i]) / (yb[i] - ya[i] + 1e-300)
        inside ^= cond & (x < xint)
    return inside


@dataclass(frozen=True)
class SurfaceBall:
    center: int
    radius: float
    member_indices: np.ndarray


def surface_ball(mesh: BoundaryMesh, center: int, radius: float) -> SurfaceBall:
    d = np.linalg.norm(mesh.displacement(mesh.nodes, mesh.nodes[center]), axis=1)
    return SurfaceBall(center, float(radius), np.flatnonzero(d < radius))


@dataclass(frozen=True)
class RegularityReport:
    lower_constant: float
    upper_constant: float
    radii_tested: list
    # measure / (measure of the flat (n-1)-ball of the same radius)
    normalized_lower: float = float("nan")
    normalized_upper: float = float("nan")
    per_radius: list = field(default_factory=list)


def _polyline_segments(mesh):
    """Segments of the piecewise-linear curve through the nodes, each carrying
    a uniform density so the total mass equals the quadrature weights."""
    P, w = mesh.nodes, mesh.weights
    if mesh.closed:
        a, b = P, np.roll(P, -1, axis=0)
        mass = 0.5 * (w + np.roll(w, -1))
        return a, b, mass
    a, b = P[:-1], P[1:]
    mass = 0.5 * (w[:-1] + w[1:])
    # half cells beyond the end nodes
    t0 = P[0] - P[1]
    t1 = P[-1] - P[-2]
    e0 = P[0] + t0 / np.linalg.norm(t0) * w[0] / 2
    e1 = P[-1] + t1 / np.linalg.norm(t1) * w[-1] / 2
    a = np.vstack([e0, a, P[-1]])
    b = np.vstack([P[0], b, e1])
    mass = np.concatenate([[w[0] / 2], mass, [w[-1] / 2]])
    return a, b, mass


def _ball_measure_polyline(mesh, centers, r):
    a, b, mass = _polyline_segments(mesh)
    d = b - a
    dd = np.einsum("ij,ij->i", d, d)
    out = np.empty(len(centers))
    for s in range(0, len(centers), 128):
        c = mesh.nodes[centers[s : s + 128]]
        f = a[None] - c[:, None]
        B = np.einsum("kij,ij->ki", f, d)
        C = np.einsum("kij,kij->ki", f, f) - r * r
        disc = B * B - dd * C
        root = np.sqrt(np.maximum(disc, 0))
        s1 = np.clip((-B - root) / dd, 0, 1)
        s2 = np.clip((-B + root) / dd, 0, 1)
        frac = np.where(disc > 0, s2 - s1, 0.0)
        out[s : s + 128] = frac @ mass
    return out


def _interior_centers(mesh, r):
    idx = np.arange(mesh.size)
    if mesh.closed or mesh.periodic:
        return idx
    if mesh.kind == "torus_window":
        L = mesh.params["length"]
        ok = np.all(np.abs(mesh.nodes[:, : mesh.n - 1]) <= L / 2 - r, axis=1)
        return idx[ok]
    # open planar curves: keep the ball away from both ends
    ends = mesh.nodes[[0, -1]]
    dist_end = np.min(np.linalg.norm(mesh.nodes[:, None] - ends[None], axis=2), axis=1)
    return idx[dist_end > r + mesh.h]


def ahlfors_constants(mesh: BoundaryMesh, radii, centers=None) -> RegularityReport:
    """Two-sided Ahlfors-regularity constants measured on node-centred balls.

    For planar meshes the surface measure of a ball is the exact length of
    the ball's intersection with the piecewise-linear curve through the nodes
    (with the quadrature weights as density); for surfaces it is the sum of
    weights of the member nodes.
    """
    radii = [float(r) for r in radii]
    ratios_lo, ratios_hi, per = [], [], []
    for r in radii:
        if r <= 2 * mesh.h:
            raise ValueError(f"radius {r} is below the mesh resolution (2h = {2 * mesh.h:.3g})")
        if r >= 2 * mesh.diameter and mesh.closed:
            raise ValueError(f"radius {r} exceeds twice the diameter")
        idx = _interior_centers(mesh, r) if centers is None else np.asarray(centers)
        if len(idx) == 0:
            warnings.warn(f"no admissible ball centre at radius {r}; skipped")
            continue
        if mesh.n == 2 and not mesh.periodic:
            meas = _ball_measure_polyline(mesh, idx, r)
        else:
            meas = np.array([mesh.weights[surface_ball(mesh, i, r).member_indices].sum() for i in idx])
        ratio = meas / r ** (mesh.n - 1)
        ratios_lo.append(ratio.min())
        ratios_hi.append(ratio.max())
        per.append((r, float(ratio.min()), float(ratio.max())))
    norm = float(flat_ball_measure(mesh.n, 1.0))
    lo, hi = float(min(ratios_lo)), float(max(ratios_hi))
    return RegularityReport(lo, hi, radii, lo / norm, hi / norm, per)


def ball_oscillations(mesh: BoundaryMesh, values, radius: float, centers=None):
    """L1 mean oscillation of ``values`` over node-centred surface balls.

    ``values`` is (N,) or (N, k); vector values use the Euclidean norm of the
    deviation from the ball average.  Returns ``(centers, oscillations)``;
    balls holding fewer than two nodes are dropped.
    """
    v = np.asarray(values, dtype=float)
    v2 = v[:, None] if v.ndim == 1 else v
    w = mesh.weights
    idx = np.arange(mesh.size) if centers is None else np.asarray(centers)
    osc = np.full(len(idx), np.nan)
    for s in range(0, len(idx), 64):
        c = idx[s : s + 64]
        d = np.linalg.norm(mesh.displacement(mesh.nodes[None, :, :], mesh.nodes[c][:, None, :]), axis=2)
        M = (d < radius) * w[None]
        tot = M.sum(axis=1)
        mean = (M @ v2) / tot[:, None]
        dev = np.linalg.norm(v2[None] - mean[:, None, :], axis=2)
        o = np.einsum("ki,ki->k", M, dev) / tot
        o[(d < radius).sum(axis=1) < 2] = np.nan
        osc[s : s + 64] = o
    keep = ~np.isnan(osc)
    return idx[keep], osc[keep]


def default_radii(mesh: BoundaryMesh, count: int = 8):
    """Dyadic radius ladder inside (2h, diam)."""
    hi = mesh.diameter / 2
    radii = [hi / 2**k for k in range(count)]
    return [r for r in radii if r > 2 * mesh.h][::-1]


def oscillation_profile(mesh, values, radii=None, interior_only=True):
    """List of ``(radius, sup of mean oscillation)`` pairs."""
    radii = default_radii(mesh) if radii is None else radii
    out = []
    for r in radii:
        centers = _interior_centers(mesh, r) if interior_only else None
        if centers is not None and len(centers) == 0:
            warnings.warn(f"no valid surface ball at radius {r}; skipped")
            continue
        _, osc = ball_oscillations(mesh, values, r, centers)
        if osc.size == 0:
            warnings.warn(f"no valid surface ball at radius {r}; skipped")
            continue
        out.append((float(r), float(osc.max())))
    return out


def normal_vmo_profile(mesh: BoundaryMesh, radii=None):
    return oscillation_profile(mesh, mesh.normals, radii)


def normal_bmo_norm(mesh: BoundaryMesh, radii=None) -> float:
    prof = normal_vmo_profile(mesh, radii)
    if not prof:
        raise ValueError("no valid surface balls for the requested radii")
    return max(o for _, o in prof)


def interior_quadrature(mesh: BoundaryMesh, radial_order: int = 24, center=None, angular=None):
    """Quadrature for the bounded region enclosed by a closed mesh.

    Parametrized curves and spheres use a polar map from ``center`` (the
    region must be star-shaped about it); polylines use a triangle fan.
    """
    if not mesh.closed:
        raise ValueError("interior quadrature needs a closed mesh")
    g, gw = np.polynomial.legendre.leggauss(radial_order)
    rho, rw = 0.5 * (g + 1), 0.5 * gw
    if mesh.kind == "sphere":
        pts = (rho[:, None, None] * mesh.nodes[None]).reshape(-1, 3)
        w = (rw[:, None] * rho[:, None] ** 2 * mesh.weights[None] * mesh.params["radius"]).ravel()
        return pts, w
    if mesh.curve is not None:
        c = np.zeros(2) if center is None else np.asarray(center, dtype=float)
        m = angular or max(mesh.size, 64)
        t = 2 * np.pi * np.arange(m) / m
        gam, dg = mesh.curve(t)
        rel = gam - c
        jac = np.abs(rel[:, 0] * dg[:, 1] - rel[:, 1] * dg[:, 0]) * (2 * np.pi / m)
        pts = c[None, None] + rho[:, None, None] * rel[None]
        w = rw[:, None] * rho[:, None] * jac[None]
        return pts.reshape(-1, 2), w.ravel()
    # triangle fan from the centroid, Gauss rule on each triangle
    verts = np.asarray(mesh.params["vertices"], dtype=float)
    c = verts.mean(axis=0) if center is None else np.asarray(center, dtype=float)
    a, b = verts, np.roll(verts, -1, axis=0)
    # collapsed-square Gauss rule on triangles
    u, uw = rho, rw
    U, V = np.meshgrid(u, u, indexing="ij")
    W = np.outer(uw, uw) * (1 - U)
    s, t = U.ravel(), (V * (1 - U)).ravel()
    area = 0.5 * np.abs((a[:, 0] - c[0]) * (b[:, 1] - c[1]) - (a[:, 1] - c[1]) * (b[:, 0] - c[0]))
    pts = c + s[None, :, None] * (a - c)[:, None, :] + t[None, :, None] * (b - c)[:, None, :]
    w = 2 * area[:, None] * W.ravel()[None]
    return pts.reshape(-1, 2), w.ravel()


def divergence_check(mesh: BoundaryMesh, field_fn, div_fn, quadrature=None) -> float:
    """``|int_Omega div F - int_boundary nu . F dsigma|`` for a closed mesh."""
    if not mesh.closed:
        raise ValueError("divergence check needs a closed mesh")
    pts, w = interior_quadrature(mesh) if quadrature is None else quadrature
    vol = float(np.dot(np.asarray(div_fn(pts), dtype=float), w))
    F = np.asarray(field_fn(mesh.nodes), dtype=float)
    flux = float(np.einsum("ij,ij,i->", mesh.normals, F, mesh.weights))
    return abs(vol - flux)
