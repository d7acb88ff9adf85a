"""Function-space diagnostics on boundary fields: Lebesgue and weak norms,
BMO/VMO, the Riesz-transform test for H^1 membership, the family version of
that test, Fefferman-Stein type decompositions and the duality pairing.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import BoundaryMesh, default_radii, oscillation_profile
from .singular import (
    BoundaryField,
    PvRule,
    conjugate_function,
    riesz_circle_spectral,
    riesz_flat_fft,
    riesz_mod,
    riesz_pv,
)

# fitted log-growth per window doubling and unbounded end, relative to ||f||_1,
# above which a sweep counts as divergent; a 1/x tail gives ln2/pi
DIVERGENCE_THRESHOLD = 0.5 * math.log(2) / math.pi


def _abs(f: BoundaryField) -> np.ndarray:
    v = f.values
    return np.linalg.norm(v, axis=1) if v.ndim == 2 else np.abs(v)


def lp_norm(f: BoundaryField, p: float) -> float:
    if p < 1:
        raise ValueError("p must be at least 1")
    a = _abs(f)
    if math.isinf(p):
        return float(a.max())
    return float(np.dot(a**p, f.mesh.weights) ** (1.0 / p))


def weak_lp(f: BoundaryField, p: float) -> float:
    """``sup_lambda lambda * sigma(|f| > lambda)^(1/p)`` over the value ladder."""
    if p < 1:
        raise ValueError("p must be at least 1")
    a = _abs(f)
    order = np.argsort(-a, kind="stable")
    vals = a[order]
    mass = np.cumsum(f.mesh.weights[order])
    # as lambda increases to a value v, sigma(|f| > lambda) tends to the mass
    # of all samples with |f| >= v
    last = np.r_[vals[1:] != vals[:-1], True]
    return float(np.max(vals[last] * mass[last] ** (1.0 / p)))


def bmo_norm(f: BoundaryField, radii=None) -> float:
    prof = vmo_distance_profile(f, radii)
    if not prof:
        raise ValueError("no valid surface balls for the requested radii")
    return max(o for _, o in prof)


def vmo_distance_profile(f: BoundaryField, radii=None):
    """Sup of the mean oscillation of ``f`` at each radius rung."""
    return oscillation_profile(f.mesh, f.values, radii)


def atom(mesh: BoundaryMesh, center: int, radius: float) -> BoundaryField:
    """Mean-zero function supported in a surface ball with ``||a||_1 = 1``.

    The ball is split by the sign of the first coordinate offset from the
    centre; each half carries a constant of opposite sign.
    """
    d = np.linalg.norm(mesh.displacement(mesh.nodes, mesh.nodes[center]), axis=1)
    ball = d < radius
    side = mesh.displacement(mesh.nodes, mesh.nodes[center])[:, 0] >= 0
    plus, minus = ball & side, ball & ~side
    wp, wm = mesh.weights[plus].sum(), mesh.weights[minus].sum()
    if wp == 0 or wm == 0:
        raise ValueError("ball too small to carry an atom")
    v = np.zeros(mesh.size)
    v[plus] = 0.5 / wp
    v[minus] = -0.5 / wm
    return BoundaryField(mesh, v)


# ------------------------------------------------------------ H^1 test


@dataclass
class SpaceReport:
    l1_norm: float
    riesz_l1_norms: list
    verdict: str
    divergence_evidence: list = field(default_factory=list)
    slopes: list = field(default_factory=list)
    sweep: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "norms": {"l1": self.l1_norm, "riesz_l1": list(self.riesz_l1_norms)},
            "verdict": self.verdict,
            "slopes": list(self.slopes),
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, default=_json_default)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rung", "window", "axis", "l1_norm"])
        for rung, (size, norms) in enumerate(self.sweep):
            for j, v in enumerate(norms, start=1):
                w.writerow([rung, repr(float(size)), j, repr(float(v))])
        return buf.getvalue()


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(type(x))


def _window_coordinate(mesh: BoundaryMesh) -> np.ndarray:
    """Sup-norm of the tangential coordinates (window radius of each node)."""
    return np.max(np.abs(mesh.nodes[:, : mesh.n - 1]), axis=1)


def _unbounded_ends(mesh: BoundaryMesh) -> int:
    return 2 if mesh.n == 2 else 1


def classify_sweep(norms: np.ndarray, sizes: np.ndarray, f_l1: float, ends: int, tol: float):
    """Verdict from a table of L1 norms (rows: rungs, cols: axes).

    Returns ``(verdict, tail_slopes, relative_changes)``; slopes are growth
    per doubling of the window, divided by the number of unbounded ends.
    """
    norms = np.asarray(norms, dtype=float)
    scale = max(f_l1, 1e-300)
    rel = np.abs(np.diff(norms, axis=0)) / np.maximum(norms[1:], 1e-14 * scale)
    rel = np.where(np.max(norms, axis=0)[None] <= 1e-12 * scale, 0.0, rel)
    x = np.log2(np.asarray(sizes, dtype=float))
    tail = min(3, len(x))
    slopes = []
    for col in norms.T:
        if len(x) < 2:
            slopes.append(0.0)
            continue
        s = np.polyfit(x[-tail:], col[-tail:], 1)[0] if tail >= 2 else 0.0
        slopes.append(float(s) / ends)
    slopes = np.array(slopes)
    if np.all(rel < tol):
        verdict = "in_H1"
    elif np.any(slopes / scale > DIVERGENCE_THRESHOLD):
        verdict = "not_in_H1"
    else:
        verdict = "inconclusive"
    return verdict, slopes, rel


def _window_sizes(mesh, windows):
    if windows is not None:
        return np.sort(np.asarray(windows, dtype=float))
    top = _window_coordinate(mesh).max()
    return top / 2.0 ** np.arange(3, -1, -1)


def _riesz_images(fields, rule):
    mesh = fields[0].mesh
    return {
        (j, k): riesz_pv(f, j, rule).values
        for k, f in enumerate(fields, start=1)
        for j in range(1, mesh.n + 1)
    }


def _sweep_norms(mesh, images, sizes):
    coord = _window_coordinate(mesh)
    rows = []
    for s in sizes:
        inside = coord <= s * (1 + 1e-12)
        rows.append([float(np.dot(np.abs(v)[inside], mesh.weights[inside])) for v in images])
    return np.array(rows)


def h1_riesz_test(
    f: BoundaryField, rule: PvRule = PvRule(), windows=None, tol: float = 0.01
) -> SpaceReport:
    """Decide H^1 membership from the integrability of the Riesz transforms.

    Flat windows and graphs: ``R_j f`` is computed once on the whole mesh and
    its L1 norm measured on nested windows (each twice the previous one).
    Closed meshes: the L1 norm of the extrapolated ``R_j f`` is measured for
    growing prefixes of the PV ladder, so a finite limit shows up as
    stability of the extrapolants.
    """
    if f.is_multivector:
        raise ValueError("h1_riesz_test takes scalar fields")
    mesh = f.mesh
    l1 = lp_norm(f, 1)
    if mesh.closed:
        # rung k holds the L1 norm of the limit extrapolated from the first
        # k + 2 truncations; a finite norm shows up as a settled sequence
        if len(rule.ladder) < 2 or not rule.extrapolate:
            raise ValueError("closed meshes need an extrapolating ladder with two or more rungs")
        rows, sizes = [], []
        for k in range(2, len(rule.ladder) + 1):
            sub = replace(rule, ladder=rule.ladder[:k])
            sizes.append(rule.ladder[k - 1])
            rows.append([lp_norm(riesz_pv(f, j, sub), 1) for j in range(1, mesh.n + 1)])
        norms = np.array(rows)
        rel = np.abs(np.diff(norms[-2:], axis=0)) / np.maximum(norms[-1:], 1e-300)
        verdict = "in_H1" if np.all((rel < tol) | (norms[-1:] <= 1e-12 * max(l1, 1e-300))) else "inconclusive"
        sweep = [(s, r) for s, r in zip(sizes, rows)]
        return SpaceReport(l1, list(norms[-1]), verdict, list(map(list, rel)), [0.0] * mesh.n, sweep)
    sizes = _window_sizes(mesh, windows)
    images = [riesz_pv(f, j, rule).values for j in range(1, mesh.n + 1)]
    norms = _sweep_norms(mesh, images, sizes)
    verdict, slopes, rel = classify_sweep(norms, sizes, l1, _unbounded_ends(mesh), tol)
    return SpaceReport(
        l1,
        list(norms[-1]),
        verdict,
        [list(r) for r in rel],
        list(slopes),
        [(float(s), list(r)) for s, r in zip(sizes, norms)],
    )


@dataclass
class FamilyReport:
    criterion_verdict: str
    per_function_verdicts: list
    agree: bool
    sum_norms: list
    difference_norms: dict
    slopes: list

    def summary(self) -> dict:
        return {
            "verdict": self.criterion_verdict,
            "per_function": list(self.per_function_verdicts),
            "agree": self.agree,
            "norms": {"sum": list(self.sum_norms), "differences": {f"{a}{b}": v for (a, b), v in self.difference_norms.items()}},
            "slopes": list(self.slopes),
        }


def _combine(verdicts):
    if all(v == "in_H1" for v in verdicts):
        return "in_H1"
    if any(v == "not_in_H1" for v in verdicts):
        return "not_in_H1"
    return "inconclusive"


def h1_family_test(
    fields, rule: PvRule = PvRule(), windows=None, tol: float = 0.01
) -> FamilyReport:
    """Family test: ``sum_j R_j f_j`` and ``R_j f_k - R_k f_j`` in L^1.

    Runs the same window sweep as :func:`h1_riesz_test` on the combined
    functions and, for cross-checking, the single-function test on each
    ``f_k``.
    """
    fields = list(fields)
    mesh = fields[0].mesh
    n = mesh.n
    if n < 2:
        raise ValueError("family test needs n >= 2")
    if len(fields) != n:
        raise ValueError(f"expected {n} functions, got {len(fields)}")
    if mesh.closed:
        raise ValueError("the family sweep is defined on flat or graph windows")
    R = _riesz_images(fields, rule)
    total = sum(R[(j, j)] for j in range(1, n + 1))
    pairs = [(j, k) for j in range(1, n + 1) for k in range(j + 1, n + 1)]
    diffs = [R[(j, k)] - R[(k, j)] for j, k in pairs]
    sizes = _window_sizes(mesh, windows)
    norms = _sweep_norms(mesh, [total] + diffs, sizes)
    l1 = sum(lp_norm(f, 1) for f in fields)
    crit, slopes, _ = classify_sweep(norms, sizes, l1, _unbounded_ends(mesh), tol)
    per = [h1_riesz_test(f, rule, windows, tol).verdict for f in fields]
    return FamilyReport(
        crit,
        per,
        crit == _combine(per),
        list(norms[:, 0]),
        {p: list(norms[:, i + 1]) for i, p in enumerate(pairs)},
        list(slopes),
    )


def torus_family_check(g_fn, resolutions=(64, 128, 256), length: float = 2 * np.pi):
    """Family identities on the 2D torus for ``f_1 = R_2 g``, ``f_2 = -R_1 g``.

    Returns per resolution: ``(N, ||R_1 f_1 + R_2 f_2||_1,
    ||(R_1 f_2 - R_2 f_1) - (g - mean g)||_inf, ||f_1||_1, ||f_2||_1,
    ||R_1 f_2 - R_2 f_1||_1)``.
    """
    out = []
    for N in resolutions:
        x = (np.arange(N) + 0.5) * length / N
        X, Y = np.meshgrid(x, x, indexing="ij")
        g = g_fn(X, Y)
        g0 = g - g.mean()
        L = [length, length]
        f1 = riesz_flat_fft(g0, 2, L)
        f2 = -riesz_flat_fft(g0, 1, L)
        s = riesz_flat_fft(f1, 1, L) + riesz_flat_fft(f2, 2, L)
        d = riesz_flat_fft(f2, 1, L) - riesz_flat_fft(f1, 2, L)
        cell = (length / N) ** 2
        out.append(
            (
                N,
                float(np.abs(s).sum() * cell),
                float(np.abs(d - g0).max()),
                float(np.abs(f1).sum() * cell),
                float(np.abs(f2).sum() * cell),
                float(np.abs(d).sum() * cell),
            )
        )
    return out


# --------------------------------------------- Fefferman-Stein splitting


@dataclass
class FsDecomposition:
    f0: np.ndarray
    fj: list
    sup_norms: list
    residual: float
    method: str = ""
    pv_residual: float = float("nan")

    @property
    def total_sup(self) -> float:
        return float(sum(self.sup_norms))

    def summary(self) -> dict:
        return {
            "norms": {"sup": list(self.sup_norms), "total_sup": self.total_sup},
            "residual": self.residual,
            "pv_residual": self.pv_residual,
            "method": self.method,
        }


def _lowpass(values, cutoff, nyquist: bool = False):
    """Modes with every ``|k_i| <= cutoff``; with ``nyquist`` also every mode
    lying on a Nyquist line, where odd real multipliers vanish."""
    F = np.fft.fftn(values)
    freqs = np.meshgrid(*[np.fft.fftfreq(m, 1.0 / m) for m in values.shape], indexing="ij")
    mask = np.ones(values.shape, dtype=bool)
    for k in freqs:
        mask &= np.abs(k) <= cutoff
    if nyquist:
        for k, m in zip(freqs, values.shape):
            if m % 2 == 0:
                mask |= np.abs(k) == m // 2
    return np.real(np.fft.ifftn(F * mask))


def _pick(candidates):
    return min(candidates, key=lambda d: d.total_sup)


def fs_decompose_flat(f, cutoff: int = 0) -> FsDecomposition:
    """Write a periodic grid function as ``f0 + sum_j R_j f_j``.

    1D: ``f0`` keeps the modes ``|k| <= cutoff`` (and the Nyquist modes of
    even grids) and ``f1 = -H(f - f0)``
    (``H`` the conjugate function, ``H^2 = -I`` on mean-zero data).
    Dimension ``d >= 2``: ``f_j = -R_j(f - f0)`` since ``sum_j R_j^2 = -I``.
    The trivial splitting ``f0 = f`` is also a candidate; the one with the
    smaller total sup norm is returned.
    """
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValueError("grid values must be finite")
    d = f.ndim
    f0 = _lowpass(f, cutoff, nyquist=True)
    high = f - f0
    if d == 1:
        fj = [-conjugate_function(high)]
        recon = f0 + conjugate_function(fj[0])
    else:
        fj = [-riesz_flat_fft(high, j) for j in range(1, d + 1)]
        recon = f0 + sum(riesz_flat_fft(g, j) for j, g in enumerate(fj, start=1))
    split = FsDecomposition(
        f0, fj, [float(np.abs(f0).max())] + [float(np.abs(g).max()) for g in fj],
        float(np.abs(recon - f).max()), "spectral",
    )
    trivial = FsDecomposition(
        f.copy(), [np.zeros_like(f) for _ in fj], [float(np.abs(f).max())] + [0.0] * len(fj),
        0.0, "trivial",
    )
    return _pick([split, trivial])


def fs_decompose_circle(f: BoundaryField, cutoff: int = 1) -> FsDecomposition:
    """``f = f0 + R_1 f_1 + R_2 f_2`` on the unit circle mesh.

    Uses ``R_1 h + i R_2 h = e^{i theta}(mean h + i H h)``: with ``F`` the part
    of ``f`` above the cutoff (``cutoff >= 1``), ``f_1 = H(sin theta F)`` and
    ``f_2 = -H(cos theta F)`` give ``R_1 f_1 + R_2 f_2 = F``.  The residual
    is measured with the spectral circle transform; ``pv_residual`` repeats it
    with the mesh PV operator, which is limited near singularities of ``f``.
    """
    mesh = f.mesh
    if mesh.kind != "circle" or mesh.params.get("axes") is not None:
        raise ValueError("circle decomposition needs a circle mesh")
    if cutoff < 1:
        raise ValueError("cutoff must keep the |k| <= 1 modes in f0")
    N = mesh.size
    th = 2 * np.pi * np.arange(N) / N
    v = np.asarray(f.values, dtype=float)
    k = np.abs(np.fft.fftfreq(N, 1.0 / N))
    # multiplying by cos/sin moves mode N/2 - 1 onto the Nyquist mode, which
    # has no conjugate; the two top modes therefore stay in f0
    low = (k <= cutoff) | (k >= N / 2 - 1)
    f0 = np.real(np.fft.ifft(np.fft.fft(v) * low))
    F = v - f0
    f1 = conjugate_function(np.sin(th) * F)
    f2 = -conjugate_function(np.cos(th) * F)
    recon = f0 + riesz_circle_spectral(f1)[0] + riesz_circle_spectral(f2)[1]
    recon_pv = f0 + riesz_pv(BoundaryField(mesh, f1), 1).values + riesz_pv(BoundaryField(mesh, f2), 2).values
    split = FsDecomposition(
        f0, [f1, f2], [float(np.abs(g).max()) for g in (f0, f1, f2)],
        float(np.abs(recon - v).max()), "spectral", float(np.abs(recon_pv - v).max()),
    )
    trivial = FsDecomposition(
        v.copy(), [np.zeros(N), np.zeros(N)], [float(np.abs(v).max()), 0.0, 0.0], 0.0, "trivial", 0.0
    )
    return _pick([split, trivial])


def duality_pairing_check(
    f: BoundaryField, g: BoundaryField, j: int, rule: PvRule = PvRule()
) -> float:
    """``|sum (R_j^mod f) g w + sum f (R_j g) w|``.

    The kernel is odd, so the transpose of ``R_j`` is ``-R_j`` and the two
    pairings cancel; the modified transform differs from ``R_j`` by a
    constant, which a mean-zero ``g`` annihilates.
    """
    mesh = f.mesh
    w = mesh.weights
    left = float(np.dot(riesz_mod(f, j, rule).values * g.values, w))
    right = float(np.dot(f.values * riesz_pv(g, j, rule).values, w))
    return abs(left + right)


def default_bmo_radii(mesh: BoundaryMesh):
    return default_radii(mesh)
