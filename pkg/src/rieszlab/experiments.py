"""Named experiments wiring the modules together.

Each experiment takes an :class:`ExperimentConfig`, returns an
:class:`ExperimentResult` holding named assertions (with the acceptance
criterion they belong to, if any) and CSV-ready tables.  Configs are flat
INI files with one section per module; see :func:`load_config`.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import clifford as cl
from .geometry import (
    ahlfors_constants,
    divergence_check,
    make_mesh,
    normal_bmo_norm,
    normal_vmo_profile,
)
from .harmonic import (
    GreenFunction,
    GreenSolver,
    annulus_lattice,
    cauchy_kernel_field,
    comparison_experiment,
    disk_green,
    disk_lattice,
    green_flux,
    green_positivity_scan,
    green_representation_check,
    kelvin_experiment,
    subharmonicity_check,
)
from .nontangential import (
    ConeParams,
    annulus_inequality_check,
    collar_inequality_check,
    nt_maximal,
    nt_traces,
    sampled_field,
)
from .singular import (
    BoundaryField,
    PvRule,
    bundle_R,
    cauchy_clifford_domain,
    cauchy_clifford_pv,
    conjugate_function,
    distributional_riesz_pairing,
    riesz_flat_fft,
    riesz_pv,
)
from .spaces import (
    atom,
    bmo_norm,
    duality_pairing_check,
    fs_decompose_circle,
    h1_family_test,
    h1_riesz_test,
    torus_family_check,
)


class ConfigError(ValueError):
    """Config file or override does not match the experiment schema."""


# ------------------------------------------------------------------ config


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    geometry: dict = field(default_factory=dict)
    rule: PvRule = PvRule()
    cone: ConeParams = ConeParams(1.0)
    ladders: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    out: str = "results"
    seed: int = 0

    def __post_init__(self):
        if self.name not in REGISTRY:
            raise ConfigError(f"unknown experiment {self.name!r}; expected one of {sorted(REGISTRY)}")
        for k, v in self.tolerances.items():
            if not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(f"tolerance {k!r} must be positive")
        for k, v in self.ladders.items():
            if len(v) == 0:
                raise ConfigError(f"ladder {k!r} must be nonempty")

    def mesh(self, **overrides):
        g = dict(self.geometry)
        g.update(overrides)
        kind = g.pop("kind")
        res = int(g.pop("resolution"))
        try:
            return make_mesh(kind, res, **g)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"geometry: {exc}") from exc

    def to_ini(self) -> str:
        cp = _config_parser()
        cp["experiment"] = {"name": self.name, "seed": str(self.seed), "out": self.out}
        cp["geometry"] = {k: _fmt(v) for k, v in self.geometry.items()}
        cp["operator"] = {
            "truncation": _fmt(self.rule.truncation),
            "ladder": _fmt(self.rule.ladder),
            "quadrature": self.rule.quadrature,
            "extrapolate": str(self.rule.extrapolate).lower(),
            "workers": str(self.rule.workers),
        }
        cone = {"kappa": _fmt(self.cone.kappa)}
        if self.cone.epsilon is not None:
            cone["epsilon"] = _fmt(self.cone.epsilon)
        cp["cone"] = cone
        cp["sweep"] = {k: _fmt(v) for k, v in self.ladders.items()}
        cp["tolerance"] = {k: _fmt(v) for k, v in self.tolerances.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def echo(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "geometry": {k: _jsonable(v) for k, v in self.geometry.items()},
            "operator": {k: _jsonable(v) for k, v in asdict(self.rule).items()},
            "cone": {"kappa": self.cone.kappa, "epsilon": self.cone.epsilon},
            "sweep": {k: list(v) for k, v in self.ladders.items()},
            "tolerance": dict(self.tolerances),
        }


def _config_parser():
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    return cp


def _fmt(v) -> str:
    if isinstance(v, (list, tuple)):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def _parse_scalar(text: str):
    t = text.strip()
    low = t.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        return t


def _parse_value(text: str):
    if "," in text:
        return tuple(_parse_scalar(p) for p in text.split(",") if p.strip())
    return _parse_scalar(text)


def _floats(key: str, text: str) -> tuple:
    try:
        vals = tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: expected comma-separated numbers") from exc
    if not vals:
        raise ConfigError(f"{key}: ladder must be nonempty")
    return vals


SECTIONS = ("experiment", "geometry", "operator", "cone", "sweep", "tolerance")


def default_config(name: str, **changes) -> ExperimentConfig:
    if name not in REGISTRY:
        raise ConfigError(f"unknown experiment {name!r}; expected one of {sorted(REGISTRY)}")
    d = DEFAULTS.get(name, {})
    cfg = ExperimentConfig(
        name,
        geometry=dict(d.get("geometry", {})),
        rule=d.get("rule", PvRule()),
        cone=d.get("cone", ConeParams(1.0)),
        ladders={k: tuple(v) for k, v in d.get("ladders", {}).items()},
        tolerances=dict(d.get("tolerances", {})),
    )
    return replace(cfg, **changes) if changes else cfg


def parse_config(text: str, name: Optional[str] = None) -> ExperimentConfig:
    """Parse an INI config; unspecified entries take the experiment defaults.

    Sections: ``[experiment]`` (name, seed, out), ``[geometry]`` (kind,
    resolution and mesh parameters), ``[operator]`` (PV rule fields),
    ``[cone]`` (kappa, epsilon), ``[sweep]`` (numeric ladders) and
    ``[tolerance]``.  Sweep and tolerance keys must be ones the experiment
    knows.
    """
    cp = _config_parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config is not valid INI: {exc}") from exc
    unknown = [s for s in cp.sections() if s not in SECTIONS]
    if unknown:
        raise ConfigError(f"unknown config sections {unknown}; expected {list(SECTIONS)}")
    exp = cp["experiment"] if cp.has_section("experiment") else {}
    cfg_name = name or exp.get("name")
    if not cfg_name:
        raise ConfigError("config needs [experiment] name or an explicit experiment")
    if name and exp.get("name") and exp.get("name") != name:
        raise ConfigError(f"config is for experiment {exp.get('name')!r}, not {name!r}")
    base = default_config(cfg_name)
    changes = {}
    for key in exp:
        if key not in ("name", "seed", "out"):
            raise ConfigError(f"[experiment] has unknown key {key!r}")
    if "seed" in exp:
        try:
            changes["seed"] = int(exp["seed"])
        except ValueError as exc:
            raise ConfigError("seed must be an integer") from exc
    if "out" in exp:
        changes["out"] = exp["out"]
    if cp.has_section("geometry"):
        geo = dict(base.geometry)
        for key, value in cp["geometry"].items():
            geo[key] = _parse_value(value)
        if "kind" not in geo or "resolution" not in geo:
            raise ConfigError("[geometry] needs kind and resolution")
        changes["geometry"] = geo
    if cp.has_section("operator"):
        rule = asdict(base.rule)
        for key, value in cp["operator"].items():
            if key not in rule:
                raise ConfigError(f"[operator] has unknown key {key!r}")
            if key == "ladder":
                rule[key] = _floats(key, value)
            elif key == "extrapolate":
                rule[key] = _parse_scalar(value) is True
            elif key == "quadrature":
                rule[key] = value.strip()
            elif key == "workers":
                rule[key] = int(value)
            else:
                rule[key] = float(value)
        try:
            changes["rule"] = PvRule(**rule)
        except ValueError as exc:
            raise ConfigError(f"[operator]: {exc}") from exc
    if cp.has_section("cone"):
        cone = {"kappa": base.cone.kappa, "epsilon": base.cone.epsilon}
        for key, value in cp["cone"].items():
            if key not in cone:
                raise ConfigError(f"[cone] has unknown key {key!r}")
            cone[key] = float(value) if value.strip() else None
        try:
            changes["cone"] = ConeParams(**cone)
        except ValueError as exc:
            raise ConfigError(f"[cone]: {exc}") from exc
    if cp.has_section("sweep"):
        lad = dict(base.ladders)
        for key, value in cp["sweep"].items():
            if key not in lad:
                raise ConfigError(f"[sweep] has unknown key {key!r} for {cfg_name}")
            lad[key] = _floats(key, value)
        changes["ladders"] = lad
    if cp.has_section("tolerance"):
        tol = dict(base.tolerances)
        for key, value in cp["tolerance"].items():
            if key not in tol:
                raise ConfigError(f"[tolerance] has unknown key {key!r} for {cfg_name}")
            try:
                tol[key] = float(value)
            except ValueError as exc:
                raise ConfigError(f"tolerance {key!r} is not a number") from exc
        changes["tolerances"] = tol
    return replace(base, **changes)


def load_config(path, name: Optional[str] = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, name)


# ------------------------------------------------------------------ results


@dataclass
class Assertion:
    name: str
    value: float
    limit: float
    relation: str = "<"
    criterion: Optional[int] = None

    @property
    def passed(self) -> bool:
        v, lim = self.value, self.limit
        if self.relation == "<":
            return bool(v < lim)
        if self.relation == "<=":
            return bool(v <= lim)
        if self.relation == ">":
            return bool(v > lim)
        if self.relation == ">=":
            return bool(v >= lim)
        if self.relation == "==":
            return bool(v == lim)
        raise ValueError(f"unknown relation {self.relation!r}")

    def record(self) -> dict:
        return {
            "name": self.name,
            "value": _clean(self.value),
            "relation": self.relation,
            "limit": _clean(self.limit),
            "passed": self.passed,
            "criterion": self.criterion,
        }


def _clean(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass
class ExperimentResult:
    name: str
    assertions: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def check(self, name, value, limit, relation="<", criterion=None):
        self.assertions.append(Assertion(name, float(value), float(limit), relation, criterion))

    def table(self, name, header, rows):
        self.tables[name] = (list(header), [list(r) for r in rows])

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def summary(self, cfg: ExperimentConfig) -> dict:
        return {
            "experiment": self.name,
            "passed": self.passed,
            "assertions": [a.record() for a in self.assertions],
            "diagnostics": {k: _jsonable_deep(v) for k, v in self.diagnostics.items()},
            "config": cfg.echo(),
        }


def _jsonable_deep(v):
    if isinstance(v, dict):
        return {str(k): _jsonable_deep(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable_deep(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return _clean(v)
    return v


def table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def write_result(result: ExperimentResult, cfg: ExperimentConfig, out_dir) -> Path:
    """Write ``summary.json``, ``config.ini`` and one CSV per table."""
    d = Path(out_dir) / result.name
    try:
        d.mkdir(parents=True, exist_ok=True)
        (d / "config.ini").write_text(cfg.to_ini())
        (d / "summary.json").write_text(json.dumps(result.summary(cfg), indent=2, sort_keys=True) + "\n")
        for name, (header, rows) in sorted(result.tables.items()):
            (d / f"{name}.csv").write_text(table_csv(header, rows))
    except OSError as exc:
        raise OSError(f"output directory {d} is not writable: {exc}") from exc
    return d


def run_experiment(cfg: ExperimentConfig, out_dir=None, write: bool = True):
    """Run one experiment; returns ``(exit_status, result, runtime_seconds)``.

    Exit status is 0 when every assertion passes and 1 otherwise.
    """
    fn = REGISTRY[cfg.name]
    t = time.perf_counter()
    result = fn(cfg)
    runtime = time.perf_counter() - t
    if write:
        write_result(result, cfg, cfg.out if out_dir is None else out_dir)
    return (0 if result.passed else 1), result, runtime


# ------------------------------------------------------------- experiments


def _hamilton(p, q):
    """Quaternion product on arrays ``(..., 4)`` ordered ``(1, i, j, k)``."""
    a1, b1, c1, d1 = np.moveaxis(p, -1, 0)
    a2, b2, c2, d2 = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        ],
        axis=-1,
    )


def exp_clifford_identities(cfg: ExperimentConfig) -> ExperimentResult:
    """Generator relations, vector squares, associativity, and the product
    in two dimensions against quaternion multiplication."""
    res = ExperimentResult(cfg.name)
    tol = cfg.tolerances
    rng = np.random.default_rng(cfg.seed)
    samples = int(cfg.ladders["samples"][0])
    rows = []
    for n in (int(d) for d in cfg.ladders["dims"]):
        E = cl.vectors_to_mv(np.eye(n))
        P = cl.gp_arrays(E[:, None], E[None])
        anti = P + np.swapaxes(P, 0, 1)
        off = ~np.eye(n, dtype=bool)
        anti_err = float(np.abs(anti[off]).max()) if n > 1 else 0.0
        minus_one = np.zeros(1 << n)
        minus_one[0] = -1.0
        sq_gen = float(np.abs(P[np.arange(n), np.arange(n)] - minus_one).max())
        x = rng.normal(size=(samples, n))
        xm = cl.vectors_to_mv(x)
        sq = cl.gp_arrays(xm, xm)
        r2 = np.sum(x * x, axis=1)
        expect = np.zeros_like(sq)
        expect[:, 0] = -r2
        sq_err = float((np.linalg.norm(sq - expect, axis=1) / r2).max())
        a, b, c = (rng.normal(size=(samples, 1 << n)) for _ in range(3))
        lhs = cl.gp_arrays(cl.gp_arrays(a, b), c)
        rhs = cl.gp_arrays(a, cl.gp_arrays(b, c))
        scale = np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1) * np.linalg.norm(c, axis=1)
        assoc = float((np.linalg.norm(lhs - rhs, axis=1) / scale).max())
        res.check(f"anticommutation_n{n}", anti_err, 0.0, "==", 1)
        res.check(f"generator_square_n{n}", sq_gen, 0.0, "==", 1)
        res.check(f"vector_square_n{n}", sq_err, tol["square"], "<", 1)
        res.check(f"associativity_n{n}", assoc, tol["associativity"], "<", 1)
        rows.append([n, anti_err, sq_gen, sq_err, assoc])
    # Cl_2 is the quaternions with e1 -> i, e2 -> j, e12 -> k
    a, b = rng.normal(size=(2, samples, 4))
    q_err = float(np.abs(cl.gp_arrays(a, b) - _hamilton(a, b)).max())
    res.check("quaternion_oracle_n2", q_err, tol["oracle"], "<", 1)
    res.table("identities", ["n", "anticommutation", "generator_square", "vector_square_rel", "associativity_rel"], rows)
    res.diagnostics["quaternion_oracle"] = q_err
    return res


def exp_riesz_flat(cfg: ExperimentConfig) -> ExperimentResult:
    """Fourier-multiplier Riesz transforms on tori, the periodic PV route on
    a flat window, the anti-Hermitian property and the duality pairing."""
    res = ExperimentResult(cfg.name)
    tol = cfg.tolerances
    rng = np.random.default_rng(cfg.seed)
    N1 = int(cfg.ladders["n_1d"][0])
    x = 2 * np.pi * np.arange(N1) / N1
    e1 = float(np.abs(riesz_flat_fft(np.cos(x), 1) - np.sin(x)).max())
    e_conj = float(np.abs(conjugate_function(np.cos(3 * x)) - np.sin(3 * x)).max())
    res.check("R1_cos_equals_sin", e1, tol["multiplier"], "<", 2)
    res.check("conjugate_cos3_equals_sin3", e_conj, tol["multiplier"], "<", 2)
    N2 = int(cfg.ladders["n_2d"][0])
    # random trigonometric polynomial without the Nyquist lines, where an
    # odd real multiplier has nothing to act on
    kk = np.abs(np.fft.fftfreq(N2, 1.0 / N2))
    keep = (kk[:, None] < N2 / 2) & (kk[None] < N2 / 2)
    g = np.real(np.fft.ifft2(np.fft.fft2(rng.normal(size=(N2, N2))) * keep))
    g -= g.mean()
    s = riesz_flat_fft(riesz_flat_fft(g, 1), 1) + riesz_flat_fft(riesz_flat_fft(g, 2), 2)
    e2 = float(np.abs(s + g).max() / np.abs(g).max())
    res.check("sum_Rj_squared_is_minus_identity", e2, tol["multiplier"], "<", 2)

    # periodic flat window: mesh PV against the multiplier
    mesh = cfg.mesh()
    xs = mesh.nodes[:, 0]
    L = mesh.params["length"]
    k = 2 * np.pi / L
    f = BoundaryField(mesh, np.cos(3 * k * xs) + 0.5 * np.sin(k * xs))
    pv = riesz_pv(f, 1, cfg.rule).values
    e_pv = float(np.abs(pv - (np.sin(3 * k * xs) - 0.5 * np.cos(k * xs))).max())
    res.check("periodic_pv_matches_multiplier", e_pv, tol["pv"], "<")

    # anti-Hermitian property and the distributional pairing on the circle
    circ = make_mesh("circle", mesh.size)
    th = 2 * np.pi * np.arange(circ.size) / circ.size
    fa = BoundaryField(circ, np.cos(th) + np.sin(3 * th) ** 2)
    ga = BoundaryField(circ, np.exp(np.sin(2 * th)))
    rows = []
    for j in (1, 2):
        left = float(np.dot(riesz_pv(fa, j, cfg.rule).values * ga.values, circ.weights))
        right = float(np.dot(fa.values * riesz_pv(ga, j, cfg.rule).values, circ.weights))
        dist = distributional_riesz_pairing(fa, ga, j)
        anti = abs(left + right) / max(abs(left), 1e-300)
        rel = abs(dist - left) / max(abs(left), 1e-300)
        res.check(f"anti_hermitian_R{j}", anti, tol["pairing"], "<")
        res.check(f"distributional_pairing_R{j}", rel, tol["distributional"], "<")
        rows.append([j, left, right, dist])
    res.table("circle_pairings", ["j", "<Rj f, g>", "<f, Rj g>", "distributional"], rows)

    # duality pairing with the modified transform (f bounded, g mean zero)
    fb = BoundaryField(mesh, np.cos(k * xs) + 1.0)
    gb = BoundaryField(mesh, -2 * xs * np.exp(-4 * xs**2))
    dual = duality_pairing_check(fb, gb, 1, cfg.rule)
    res.check("duality_pairing", dual, tol["pairing"], "<")
    res.table(
        "flat_errors",
        ["quantity", "error"],
        [["R1_cos", e1], ["conjugate_cos3", e_conj], ["sum_Rj2_plus_I", e2], ["periodic_pv", e_pv], ["duality", dual]],
    )
    return res


def _jump_corpus(mesh, rng):
    th = 2 * np.pi * np.arange(mesh.size) / mesh.size
    z = np.exp(1j * th)
    modes = [k for k in range(-4, 5) if k != 0][:8]
    coef = rng.normal(size=len(modes)) + 1j * rng.normal(size=len(modes))
    trig = sum(c * z**k for c, k in zip(coef, modes))
    return {
        "one": np.ones_like(z),
        "z": z,
        "z2": z**2,
        "z_inv": 1 / z,
        "trig8": trig,
    }


def _monogenic_residuals(F, steps, box):
    """Max lattice Dirac residual of the interior Cauchy integral at the
    points of the coarsest lattice, for each spacing."""
    coarse = steps[0]
    out = []
    for h in steps:
        x = np.arange(-box, box + h / 2, h)
        X, Y = np.meshgrid(x, x, indexing="ij")
        P = np.column_stack([X.ravel(), Y.ravel()])
        V = cauchy_clifford_domain(F, P).values.reshape(len(x), len(x), -1)
        r, _ = cl.dirac_apply(V, h)
        step = int(round(coarse / h))
        mag = cl.mv_norm(r)[::step, ::step]
        out.append(float(mag[1:-1, 1:-1].max()))
    return np.array(out)


def exp_jump_formula(cfg: ExperimentConfig) -> ExperimentResult:
    """Approach-ladder traces of the interior Cauchy integral against the
    jump relation, the boundary identity with the bundled Riesz operator,
    and second-order decay of the lattice Dirac residual."""
    res = ExperimentResult(cfg.name)
    tol = cfg.tolerances
    rng = np.random.default_rng(cfg.seed)
    mesh = cfg.mesh()
    nu = cl.vectors_to_mv(mesh.normals)
    rows, mono_rows = [], []
    worst_trace = worst_ident = 0.0
    steps = np.asarray(cfg.ladders["lattice_steps"], dtype=float)
    slopes = []
    for name, z in _jump_corpus(mesh, rng).items():
        F = BoundaryField(mesh, cl.complex_to_mv(z))
        cf = cauchy_clifford_pv(F, cfg.rule).values
        jump = 0.5 * F.values + cf
        reps = nt_traces(lambda p: cauchy_clifford_domain(F, p).values, mesh, cfg.cone)
        tr = np.array([r.value for r in reps])
        no_trace = sum(not r.converged for r in reps)
        e_tr = float(np.abs(tr - jump).max())
        half_R = 0.5 * bundle_R(BoundaryField(mesh, cl.gp_arrays(nu, F.values)), cfg.rule).values
        e_id = float(np.abs(cf - half_R).max())
        worst_trace, worst_ident = max(worst_trace, e_tr), max(worst_ident, e_id)
        res.check(f"ladder_found_trace_{name}", no_trace, 0, "==", 3)
        rows.append([name, e_tr, e_id, no_trace])
        if name == "trig8":
            r = _monogenic_residuals(F, steps, 0.5)
            s = np.log2(r[:-1] / r[1:]) / np.log2(steps[:-1] / steps[1:])
            slopes.extend(s.tolist())
            for h, v in zip(steps, r):
                mono_rows.append([name, float(h), v])
    res.check("trace_minus_jump", worst_trace, tol["trace"], "<", 3)
    res.check("cauchy_equals_half_R_nu", worst_ident, tol["identity"], "<", 3)
    slope = float(np.mean(slopes))
    res.check("dirac_residual_slope_low", slope, 2.0 - tol["slope"], ">=", 4)
    res.check("dirac_residual_slope_high", slope, 2.0 + tol["slope"], "<=", 4)
    res.table("jump", ["function", "trace_minus_jump", "identity_error", "nodes_without_trace"], rows)
    res.table("monogenicity", ["function", "h", "max_dirac_residual"], mono_rows)
    res.diagnostics["dirac_slopes"] = slopes
    return res


def exp_h1_criterion(cfg: ExperimentConfig) -> ExperimentResult:
    """Riesz-transform H^1 test on a flat window: an atom stays integrable
    under window doubling; the indicator of [0, 1] shows the 1/x tail."""
    res = ExperimentResult(cfg.name)
    tol = cfg.tolerances
    mesh = cfg.mesh()
    x = mesh.nodes[:, 0]
    a = atom(mesh, int(np.argmin(np.abs(x))), cfg.ladders["atom_radius"][0])
    ra = h1_riesz_test(a, cfg.rule, tol=tol["stability"])
    ind = BoundaryField(mesh, ((x > 0) & (x < 1)).astype(float))
    ri = h1_riesz_test(ind, cfg.rule, tol=tol["stability"])
    oracle = math.log(2) / math.pi
    slope = ri.slopes[0] / ri.l1_norm
    res.check("atom_verdict_in_H1", float(ra.verdict == "in_H1"), 1.0, "==", 5)
    res.check("atom_max_relative_change", max(max(r) for r in ra.divergence_evidence), tol["stability"], "<", 5)
    res.check("indicator_verdict_not_in_H1", float(ri.verdict == "not_in_H1"), 1.0, "==", 5)
    res.check("indicator_slope_vs_ln2_over_pi", abs(slope / oracle - 1), tol["slope"], "<", 5)
    rows = [["atom", s, *v] for s, v in ra.sweep] + [["indicator", s, *v] for s, v in ri.sweep]
    res.table("sweep", ["function", "window", "L1_R1", "L1_R2"], rows)
    res.diagnostics["atom"] = ra.summary()
    res.diagnostics["indicator"] = ri.summary()
    res.diagnostics["indicator_slope_over_oracle"] = slope / oracle
    return res


def _family_corpus(mesh):
    x = mesh.nodes[:, 0]
    c = int(np.argmin(np.abs(x)))
    a1 = atom(mesh, c, 0.25).values
    a2 = atom(mesh, int(np.argmin(np.abs(x + 1.5))), 0.5).values
    ind = ((x > 0) & (x < 1)).astype(float)
    g = np.exp(-((x - 1) ** 2))
    # Mexican hat where the graph is flat: zero mean and zero first moment
    hat = (1 - 2 * (x - 4) ** 2) * np.exp(-((x - 4) ** 2))
    z = np.zeros_like(x)
    return {
        "zero": (z, z),
        "same_atom": (a1, a1),
        "atom_pair": (a1, a2),
        "atom_zero": (a1, z),
        "hat_atom": (hat, a2),
        "indicator_zero": (ind, z),
        "zero_indicator": (z, ind),
        "gauss_atom": (g, a1),
        "indicator_indicator": (ind, ind),
        "gauss_gauss": (g, -g),
    }


def _bump_profile(height, width):
    def profile(x):
        return height * np.exp(-((x / width) ** 2))

    def slope(x):
        return -2 * height * x / width**2 * np.exp(-((x / width) ** 2))

    return profile, slope


def exp_h1_family(cfg: ExperimentConfig) -> ExperimentResult:
    """Family test: torus multiplier construction, and agreement of the
    family verdict with the per-function verdicts on a Lipschitz graph."""
    res = ExperimentResult(cfg.name)
    tol = cfg.tolerances
    res_list = [int(r) for r in cfg.ladders["torus_resolutions"]]

    def g_fn(X, Y):
        return ((np.abs(X - np.pi) < 1) & (np.abs(Y - np.pi) < 1.5)).astype(float)

    torus = torus_family_check(g_fn, res_list)
    sums = [t[1] for t in torus]
    diff_err = [t[2] for t in torus]
    dl1 = [t[5] for t in torus]
    res.check("torus_sum_L1", max(sums), tol["sum"], "<", 6)
    res.check("torus_difference_equals_g", max(diff_err), tol["sum"], "<", 6)
    drift = (max(dl1) - min(dl1)) / max(dl1)
    res.check("torus_difference_L1_stable", drift, tol["stability"], "<", 6)
    res.table(
        "torus",
        ["N", "L1_sum", "diff_minus_g_inf", "L1_f1", "L1_f2", "L1_difference"],
        [list(t) for t in torus],
    )
    h = cfg.geometry.get("bump_height", 0.3)
    w = cfg.geometry.get("bump_width", 1.0)
    profile, slope = _bump_profile(h, w)
    mesh = cfg.mesh(profile=profile, slope=slope, kind="graph2d")
    rows, agree = [], 0
    for name, (u, v) in _family_corpus(mesh).items():
        rep = h1_family_test([BoundaryField(mesh, u), BoundaryField(mesh, v)], cfg.rule, tol=tol["window"])
        agree += rep.agree
        rows.append([name, rep.criterion_verdict, *rep.per_function_verdicts, int(rep.agree), *rep.slopes])
    res.check("family_agrees_with_per_function", agree, len(rows), "==", 6)
    res.table("family", ["pair", "family_verdict", "verdict_f1", "verdict_f2", "agree", "slope_sum", "slope_diff"], rows)
    return res


def _truncated_log(th, K, c):
    k = np.arange(1, K + 1)
    return np.cos(np.outer(th - c, k)) @ (1.0 / k)


def exp_fs_decomposition(cfg: ExperimentConfig) -> ExperimentResult:
    """Bounded splitting of truncated log series on the circle; the ratio of
    total sup norm to BMO norm has a stable maximum over corpus and
    resolutions."""
    res = ExperimentResult(cfg.name)
    tol = cfg.tolerances
    rng = np.random.default_rng(cfg.seed)
    orders = [int(k) for k in cfg.ladders["orders"]]
    centers = rng.uniform(0, 2 * np.pi, len(orders))
    rows, fitted = [], []
    worst = 0.0
    for N in (int(n) for n in cfg.ladders["resolutions"]):
        mesh = cfg.mesh(resolution=N)
        th = 2 * np.pi * np.arange(N) / N
        ratios = []
        for K, c in zip(orders, centers):
            if K >= N // 2 - 1:
                raise ConfigError(f"series order {K} needs more than {N} nodes")
            f = BoundaryField(mesh, _truncated_log(th, K, c))
            d = fs_decompose_circle(f)
            b = bmo_norm(f)
            ratios.append(d.total_sup / b)
            worst = max(worst, d.residual)
            rows.append([N, K, float(c), d.method, d.total_sup, b, d.total_sup / b, d.residual, d.pv_residual])
        fitted.append(max(ratios))
    drift = (max(fitted) - min(fitted)) / min(fitted)
    res.check("reconstruction_residual", worst, tol["residual"], "<", 7)
    res.check("fitted_constant_drift", drift, tol["drift"], "<", 7)
    res.table(
        "decomposition",
        ["N", "order", "center", "method", "total_sup", "bmo", "ratio", "residual", "pv_residual"],
        rows,
    )
    res.diagnostics["fitted_constants"] = fitted
    return res


def exp_green_disk(cfg: ExperimentConfig) -> ExperimentResult:
    """Layer-built Green function of the disk against the closed form; its
    boundary trace, positivity and unit flux."""
    res = ExperimentResult(cfg.name)
    tol = cfg.tolerances
    rng = np.random.default_rng(cfg.seed)
    mesh = cfg.mesh()
    solver = GreenSolver(mesh)
    n_poles = int(cfg.ladders["poles"][0])
    per = int(cfg.ladders["points_per_pole"][0])
    exclusion = cfg.ladders["pole_ball"][0] * mesh.h

    def disk_points(k, rmax=1.0 - 1e-9):
        r = np.sqrt(rng.uniform(0, 1, k)) * rmax
        t = rng.uniform(0, 2 * np.pi, k)
        return np.column_stack([r * np.cos(t), r * np.sin(t)])

    # poles keep the pole-ball distance from the boundary as well
    poles = disk_points(n_poles, 1.0 - exclusion)
    F, C = solver.densities(poles)
    worst = 0.0
    for i, x0 in enumerate(poles):
        G = GreenFunction(x0, "layer_potential", mesh, BoundaryField(mesh, F[:, i]), float(C[i]), solver.x_star, solver.condition)
        pts = disk_points(4 * per)
        pts = pts[np.linalg.norm(pts - x0, axis=1) > exclusion][:per]
        worst = max(worst, float(np.abs(G(pts) - disk_green(pts, x0[None])).max()))
    res.check("matches_explicit_formula", worst, tol["explicit"], "<", 8)
    x0 = np.asarray(cfg.ladders["pole"], dtype=float)
    G = solver.build(x0)
    reps = nt_traces(G, mesh, cfg.cone)
    trace = max(float(abs(r.value)) for r in reps)
    res.check("boundary_trace", trace, tol["trace"], "<", 8)
    viol, gmin = green_positivity_scan(G, disk_lattice(int(cfg.ladders["lattice"][0])), exclusion)
    res.check("positivity_violations", viol, 0, "==", 8)
    flux_rows = [[r, green_flux(G, r)] for r in cfg.ladders["flux_radii"]]
    res.check("flux_minus_one", max(abs(f - 1) for _, f in flux_rows), tol["flux"], "<", 8)
    res.table("flux", ["radius", "flux"], flux_rows)
    res.diagnostics.update(condition=solver.condition, min_value=gmin, pairs=n_poles * per, max_error=worst)
    return res


def _trig_data(mesh, rng, modes):
    th = 2 * np.pi * np.arange(mesh.size) / mesh.size
    z = np.exp(1j * th)
    ks = np.arange(-modes, modes + 1)
    c = (rng.normal(size=len(ks)) + 1j * rng.normal(size=len(ks))) / (1 + np.abs(ks))
    return cl.complex_to_mv(np.exp(1j * np.outer(th, ks)) @ c)


def exp_comparison_principle(cfg: ExperimentConfig) -> ExperimentResult:
    """``|C f|^theta`` below the harmonic extension of its boundary values
    on a polar lattice, for a seeded corpus of trigonometric data."""
    res = ExperimentResult(cfg.name)
    tol = cfg.tolerances
    rng = np.random.default_rng(cfg.seed)
    mesh = cfg.mesh()
    thetas = list(cfg.ladders["theta"])
    rows, total = [], 0
    for i in range(int(cfg.ladders["corpus_size"][0])):
        F = BoundaryField(mesh, _trig_data(mesh, rng, int(cfg.ladders["modes"][0])))
        reps = comparison_experiment(
            F, thetas, lattice=int(cfg.ladders["lattice"][0]), tol=tol["margin"], rule=cfg.rule,
            trace_tol=tol["trace"],
        )
        for r in reps:
            total += r.violations
            rows.append([i, r.theta, r.min_margin, r.violations, r.points, r.trace_residual])
    res.check("lattice_violations", total, 0, "==", 9)
    res.table("comparison", ["function", "theta", "min_margin", "violations", "points", "trace_residual"], rows)
    return res


def exp_subharmonicity(cfg: ExperimentConfig) -> ExperimentResult:
    """``|u|^theta`` with ``theta = (n-2)/(n-1)`` for the monogenic Cauchy
    kernel field on an annulus lattice."""
    res = ExperimentResult(cfg.name)
    tol = cfg.tolerances
    n = int(cfg.ladders["n"][0])
    theta = (n - 2) / (n - 1)
    inner, outer = cfg.ladders["annulus"]
    L = annulus_lattice(n, inner, outer, int(cfg.ladders["lattice"][0]))
    rep = subharmonicity_check(cauchy_kernel_field, L, theta, cfg.ladders["delta"][0], tol["laplacian"])
    res.check("violations", rep.violations, 0, "==", 10)
    # guards against a vacuous pass on an empty lattice
    res.check("lattice_points", rep.points, 0, ">", 10)
    res.check("dirac_residual", rep.dirac_residual, tol["dirac"], "<")
    res.table(
        "subharmonicity",
        ["n", "theta", "points", "excluded", "min_laplacian", "violations", "dirac_residual"],
        [[n, theta, rep.points, rep.excluded, rep.min_laplacian, rep.violations, rep.dirac_residual]],
    )
    return res


def _harmonic_pair(p):
    """Vector-valued harmonic test function ``(x^2 - y^2 + 1, 2xy + x/2)``."""
    x, y = p[:, 0], p[:, 1]
    return np.column_stack([x * x - y * y + 1, 2 * x * y + 0.5 * x])


def exp_collar_annulus(cfg: ExperimentConfig) -> ExperimentResult:
    """Trace below the nontangential maximal function, monotone collar
    truncation, collar and annulus integral estimates."""
    res = ExperimentResult(cfg.name)
    tol = cfg.tolerances
    mesh = cfg.mesh()
    params = cfg.cone
    reps = nt_traces(_harmonic_pair, mesh, params)
    tr = np.array([np.linalg.norm(r.value) for r in reps])
    exact = np.linalg.norm(_harmonic_pair(mesh.nodes), axis=1)
    res.check("trace_matches_boundary_values", float(np.abs(tr - exact).max()), tol["trace"], "<", 11)
    eps_ladder = sorted(cfg.ladders["eps"], reverse=True)
    pool = sampled_field(_harmonic_pair, mesh, params, eps_ladder[0])
    full = nt_maximal(pool, mesh, params).values
    res.check("trace_below_maximal", float(np.max(tr - full * (1 + tol["trace"]))), 0.0, "<=", 11)
    prof = [nt_maximal(pool, mesh, params.truncated(e)).values for e in eps_ladder]
    mono = min(float(np.min(a - b)) for a, b in zip(prof, prof[1:]))
    res.check("truncated_maximal_monotone", mono, 0.0, ">=", 11)
    gaps = [float(np.max(p - tr)) for p in prof]
    res.check("truncated_maximal_gap_shrinks", float(np.min(np.diff(gaps)) if len(gaps) > 1 else -1), 0.0, "<", 11)
    res.check("truncated_maximal_gap_last", gaps[-1], tol["gap"] * gaps[0], "<", 11)
    collar_eps = cfg.ladders["collar_eps"]
    p = cfg.ladders["p"][0]
    crow = [collar_inequality_check(_harmonic_pair, mesh, params, p, e) for e in collar_eps]
    cr = [c.ratio for c in crow]
    res.check("collar_ratio_spread", max(cr) / min(cr), tol["spread"], "<=", 11)
    window = make_mesh("torus_window", int(cfg.ladders["window_resolution"][0]), n=2, length=cfg.ladders["window_length"][0])

    def poisson_like(q):
        return q[:, 1] / ((q[:, 0] - 0.3) ** 2 + (q[:, 1] + 1) ** 2)

    z = int(np.argmin(np.abs(window.nodes[:, 0])))
    arow = [annulus_inequality_check(poisson_like, window, z, R) for R in cfg.ladders["annulus_R"]]
    ar = [a.ratio for a in arow]
    res.check("annulus_ratio_spread", max(ar) / min(ar), tol["spread"], "<=", 11)
    res.table("truncation_ladder", ["epsilon", "max_N_eps", "max_gap_to_trace"], [[e, float(v.max()), g] for e, v, g in zip(eps_ladder, prof, gaps)])
    res.table("collar", ["epsilon", "lhs", "rhs_without_constant", "ratio"], [[e, c.lhs, c.rhs_without_constant, c.ratio] for e, c in zip(collar_eps, crow)])
    res.table("annulus", ["R", "lhs", "rhs_without_constant", "ratio"], [[R, a.lhs, a.rhs_without_constant, a.ratio] for R, a in zip(cfg.ladders["annulus_R"], arow)])
    return res


def exp_divergence(cfg: ExperimentConfig) -> ExperimentResult:
    """Divergence identity on the disk, an ellipse and a perturbed circle."""
    res = ExperimentResult(cfg.name)
    tol = cfg.tolerances

    def F(p):
        x, y = p[:, 0], p[:, 1]
        return np.column_stack([x**3 + np.sin(y), x * y**2 + np.exp(x)])

    def divF(p):
        x, y = p[:, 0], p[:, 1]
        return 3 * x**2 + 2 * x * y

    rows = []
    res_n = int(cfg.geometry.get("resolution", 512))
    meshes = {
        "disk": make_mesh("circle", res_n),
        "ellipse": make_mesh("circle", res_n, axes=(1.5, 0.7)),
        "perturbed": make_mesh("perturbed_circle", res_n, amplitude=0.05),
    }
    for name, m in meshes.items():
        r = divergence_check(m, F, divF)
        crit = 12 if name in ("disk", "ellipse") else None
        res.check(f"divergence_{name}", r, tol["residual"], "<", crit)
        rows.append([name, r])
    res.table("divergence", ["geometry", "residual"], rows)
    return res


def _sawtooth(teeth, depth, resolution):
    x = np.linspace(-np.pi, np.pi, 2 * teeth + 1)
    y = np.where(np.arange(len(x)) % 2 == 0, 0.0, depth)
    top = np.column_stack([x, y])
    verts = np.vstack([[[-np.pi, -2.0], [np.pi, -2.0]], top[::-1]])
    return make_mesh("polyline", resolution, vertices=verts, closed=True)


def exp_bmo_vmo_geometry(cfg: ExperimentConfig) -> ExperimentResult:
    """Ahlfors constants of the circle, oscillation of the Gauss map on flat,
    round and sawtooth boundaries."""
    res = ExperimentResult(cfg.name)
    tol = cfg.tolerances
    circle = cfg.mesh()
    radii = list(cfg.ladders["ahlfors_radii"])
    rep = ahlfors_constants(circle, radii)
    res.check("ahlfors_lower", rep.normalized_lower, 1 - tol["ahlfors"], ">=", 12)
    res.check("ahlfors_upper", rep.normalized_upper, math.pi / 2 + tol["ahlfors"], "<=", 12)
    flat = make_mesh("torus_window", 256, n=2, length=2 * np.pi)
    # zero up to rounding in the ball averages
    res.check("flat_normal_bmo", normal_bmo_norm(flat), tol["zero"], "<=", 12)
    prof = normal_vmo_profile(circle)
    osc = [o for _, o in prof]
    res.check("circle_profile_decreasing", float(np.max(np.diff(osc[::-1]))), 0.0, "<=", 12)
    res.check("circle_profile_small_scale", osc[0], tol["vmo"], "<", 12)
    saw = _sawtooth(int(cfg.ladders["teeth"][0]), 0.4, circle.size)
    sprof = normal_vmo_profile(saw)
    floor = min(o for _, o in sprof)
    res.check("sawtooth_profile_floor", floor, tol["floor"], ">", 12)
    res.table("ahlfors", ["radius", "min_ratio", "max_ratio"], rep.per_radius)
    res.table("normal_oscillation", ["geometry", "radius", "sup_oscillation"],
              [["circle", r, o] for r, o in prof] + [["sawtooth", r, o] for r, o in sprof])
    return res


def exp_kelvin(cfg: ExperimentConfig) -> ExperimentResult:
    """Kelvin identity on random pairs and the exterior Green function."""
    res = ExperimentResult(cfg.name)
    tol = cfg.tolerances
    rep = kelvin_experiment(int(cfg.geometry.get("resolution", 512)), int(cfg.ladders["pairs"][0]), cfg.seed)
    res.check("kelvin_identity", rep.max_identity_residual, tol["identity"], "<", 12)
    res.check("exterior_green", rep.max_exterior_error, tol["exterior"], "<")
    res.table("kelvin", ["identity", "exterior_error", "far_field_slope", "far_field_limit"],
              [[rep.max_identity_residual, rep.max_exterior_error, rep.far_field_slope, rep.far_field_limit]])
    return res


def exp_rj1_diagnostics(cfg: ExperimentConfig) -> ExperimentResult:
    """Table of Gauss-map oscillation and of the BMO norm of ``R_j 1`` along
    an amplitude ladder of perturbed circles (no assertion)."""
    res = ExperimentResult(cfg.name)
    rows = []
    for a in cfg.ladders["amplitude"]:
        mesh = cfg.mesh(amplitude=a)
        one = BoundaryField(mesh, np.ones(mesh.size))
        r = [bmo_norm(riesz_pv(one, j, cfg.rule)) for j in (1, 2)]
        rows.append([a, normal_bmo_norm(mesh), *r])
    res.table("rj1", ["amplitude", "normal_bmo", "R1_1_bmo", "R2_1_bmo"], rows)
    return res


REGISTRY: dict = {
    "clifford_identities": exp_clifford_identities,
    "jump_formula": exp_jump_formula,
    "riesz_flat": exp_riesz_flat,
    "h1_criterion": exp_h1_criterion,
    "h1_family": exp_h1_family,
    "fs_decomposition": exp_fs_decomposition,
    "bmo_vmo_geometry": exp_bmo_vmo_geometry,
    "green_disk": exp_green_disk,
    "comparison_principle": exp_comparison_principle,
    "collar_annulus": exp_collar_annulus,
    "divergence": exp_divergence,
    "kelvin": exp_kelvin,
    "subharmonicity": exp_subharmonicity,
    "rj1_diagnostics": exp_rj1_diagnostics,
}

DEFAULTS: dict = {
    "clifford_identities": {
        "ladders": {"dims": (2, 3, 4), "samples": (1000,)},
        "tolerances": {"square": 1e-12, "associativity": 1e-10, "oracle": 1e-13},
    },
    "riesz_flat": {
        "geometry": {"kind": "torus_window", "resolution": 512, "n": 2, "length": 2 * math.pi, "periodic": True},
        "ladders": {"n_1d": (512,), "n_2d": (128,)},
        "tolerances": {"multiplier": 1e-10, "pv": 1e-8, "pairing": 1e-10, "distributional": 1e-6},
    },
    "jump_formula": {
        "geometry": {"kind": "circle", "resolution": 512},
        "ladders": {"lattice_steps": (0.1, 0.05, 0.025)},
        "tolerances": {"trace": 1e-4, "identity": 1e-8, "slope": 0.3},
    },
    "h1_criterion": {
        "geometry": {"kind": "torus_window", "resolution": 16384, "n": 2, "length": 128.0},
        "ladders": {"atom_radius": (0.25,)},
        "tolerances": {"stability": 0.01, "slope": 0.15},
    },
    "h1_family": {
        "geometry": {"kind": "graph2d", "resolution": 8192, "length": 160.0, "lipschitz": 0.5},
        "ladders": {"torus_resolutions": (64, 128, 256)},
        "tolerances": {"sum": 1e-10, "stability": 0.05, "window": 0.01},
    },
    "fs_decomposition": {
        "geometry": {"kind": "circle", "resolution": 512},
        "ladders": {"orders": (4, 8, 16, 24, 32, 48, 64, 96, 128, 200), "resolutions": (512, 1024)},
        "tolerances": {"residual": 1e-8, "drift": 0.1},
    },
    "green_disk": {
        "geometry": {"kind": "circle", "resolution": 512},
        "ladders": {
            "poles": (50,), "points_per_pole": (20,), "pole_ball": (5.0,), "pole": (0.3, -0.2),
            "lattice": (300,), "flux_radii": (0.1, 0.05, 0.01),
        },
        "tolerances": {"explicit": 1e-5, "trace": 1e-5, "flux": 1e-3},
    },
    "comparison_principle": {
        "geometry": {"kind": "circle", "resolution": 512},
        "ladders": {"theta": (0.5, 0.75), "corpus_size": (20,), "modes": (4,), "lattice": (200,)},
        "tolerances": {"margin": 1e-4, "trace": 1e-4},
    },
    "subharmonicity": {
        "ladders": {"n": (3,), "annulus": (0.5, 2.0), "lattice": (21,), "delta": (1e-2,)},
        "tolerances": {"laplacian": 1e-6, "dirac": 1e-4},
    },
    "collar_annulus": {
        "geometry": {"kind": "circle", "resolution": 256},
        "ladders": {
            "eps": (0.4, 0.2, 0.1, 0.05, 0.025), "collar_eps": (0.4, 0.2, 0.1, 0.05), "p": (2.0,),
            "annulus_R": (0.25, 0.5, 1.0), "window_resolution": (1024,), "window_length": (40.0,),
        },
        "tolerances": {"trace": 1e-6, "gap": 0.25, "spread": 3.0},
    },
    "divergence": {
        "geometry": {"kind": "circle", "resolution": 512},
        "tolerances": {"residual": 1e-6},
    },
    "bmo_vmo_geometry": {
        "geometry": {"kind": "circle", "resolution": 512},
        "ladders": {"ahlfors_radii": (0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 3.0), "teeth": (8,)},
        "tolerances": {"ahlfors": 1e-3, "vmo": 0.05, "floor": 0.1, "zero": 1e-13},
    },
    "kelvin": {
        "geometry": {"kind": "circle", "resolution": 512},
        "ladders": {"pairs": (10000,)},
        "tolerances": {"identity": 1e-11, "exterior": 1e-8},
    },
    "rj1_diagnostics": {
        "geometry": {"kind": "perturbed_circle", "resolution": 512, "amplitude": 0.0, "terms": 3},
        "ladders": {"amplitude": (0.0, 0.02, 0.05, 0.1, 0.2)},
    },
}


# ------------------------------------------------------------- acceptance

# criterion number -> (title, experiments, runtime limit in seconds)
CRITERIA: dict = {
    1: ("Clifford identities", ("clifford_identities",), 1.0),
    2: ("Flat Riesz multiplier suite", ("riesz_flat",), 5.0),
    3: ("Jump formula", ("jump_formula",), 30.0),
    4: ("Monogenicity", ("jump_formula",), 30.0),
    5: ("H1 Riesz criterion", ("h1_criterion",), 60.0),
    6: ("Family criterion", ("h1_family",), 60.0),
    7: ("Fefferman-Stein decomposition", ("fs_decomposition",), 30.0),
    8: ("Green function", ("green_disk",), 60.0),
    9: ("Comparison principle", ("comparison_principle",), 120.0),
    10: ("Subharmonicity", ("subharmonicity",), 30.0),
    11: ("Nontangential machinery", ("collar_annulus",), 120.0),
    12: ("Geometry diagnostics", ("divergence", "bmo_vmo_geometry", "kelvin"), 30.0),
}


@dataclass
class CriterionOutcome:
    number: int
    title: str
    passed: bool
    runtime: float
    limit: float
    assertions: list

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number:2d}: {self.title} ({self.runtime:.2f} s, limit {self.limit:g} s)"


def run_acceptance(criteria=None, out_dir=None, seed: int = 0, echo: Optional[Callable] = None) -> list:
    """Run the acceptance criteria with their pinned configs.

    Each experiment runs once even when several criteria use it; a
    criterion's runtime is the sum of its experiments' runtimes (the
    monogenicity check shares the jump-formula run).  With ``out_dir`` the
    experiment outputs and an ``acceptance.json`` report are written there.
    """
    wanted = sorted(CRITERIA) if criteria is None else sorted(criteria)
    cache = {}
    reported = set()
    outcomes = []
    for k in wanted:
        title, exps, limit = CRITERIA[k]
        runtime, records, ok = 0.0, [], True
        for name in exps:
            if name not in cache:
                cfg = default_config(name, seed=seed)
                _, result, rt = run_experiment(cfg, out_dir, write=out_dir is not None)
                cache[name] = (result, rt)
            result, rt = cache[name]
            runtime += rt
            # untagged consistency checks are reported with the first
            # criterion that uses the experiment
            mine = [
                a for a in result.assertions
                if a.criterion == k or (a.criterion is None and name not in reported)
            ]
            reported.add(name)
            records.extend(mine)
            ok &= bool(mine) and all(a.passed for a in mine)
        ok &= runtime < limit
        out = CriterionOutcome(k, title, bool(ok), runtime, limit, [a.record() for a in records])
        outcomes.append(out)
        if echo is not None:
            echo(out.line())
    if out_dir is not None:
        report = {
            "passed": all(o.passed for o in outcomes),
            "criteria": [
                {"criterion": o.number, "title": o.title, "passed": o.passed, "assertions": o.assertions}
                for o in outcomes
            ],
        }
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "acceptance.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        timing = {str(o.number): {"runtime": o.runtime, "limit": o.limit} for o in outcomes}
        (Path(out_dir) / "acceptance_timing.json").write_text(json.dumps(timing, indent=2, sort_keys=True) + "\n")
    return outcomes
