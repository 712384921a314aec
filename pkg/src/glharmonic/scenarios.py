"""Built-in scenarios: orbits, Pfaffian systems, pseudolinear functions, field equations.

Each ``build_*`` function validates a :class:`ScenarioConfig` and returns the
geometric objects; each ``run_*`` function executes the pipeline and returns a
:class:`Report`.  Parameters come from a small fixed catalog (rotation,
constant and affine vector fields; affine 1-forms; exponential and quotient
pseudolinear functions; zero, constant, polynomial, inverse-square and
direction-ratio conformal exponents).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import expm

from . import jets
from .chart import MetricField
from .config import ScenarioConfig
from .errors import ConfigError
from .flows import Trajectory, el_residual, integrate_orbit
from .glmetric import LEVI_CIVITA, GLMetric, field_equations
from .report import Report
from .riemannian import second_fundamental_form_residual
from .variational import (
    DirectionSection,
    MeshQuadrature,
    SmoothMap,
    boundary_bumps,
    energy,
    lagrangian_LT,
    lagrangian_LT_nodes,
    perturb,
    system_E_residual,
)

__all__ = [
    "OrbitScenario",
    "PfaffScenario",
    "PseudolinearScenario",
    "FieldEquationScenario",
    "build_orbit_scenario",
    "build_pfaff_scenario",
    "build_pseudolinear_scenario",
    "build_field_equation_scenario",
    "build",
    "execute",
]


# catalog helpers ---------------------------------------------------------------


def _numbers(cfg: ScenarioConfig, value, keys, length=None) -> np.ndarray:
    arr = None
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        pass
    if arr is None or arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise ConfigError(f"{'.'.join(map(str, keys))} must be a list of numbers", cfg.line(*keys))
    if length is not None and len(arr) != length:
        raise ConfigError(f"{'.'.join(map(str, keys))} must have {length} entries", cfg.line(*keys))
    return arr


def _matrix(cfg: ScenarioConfig, value, keys, shape=None) -> np.ndarray:
    arr = None
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        pass
    if arr is None or arr.ndim != 2 or not np.all(np.isfinite(arr)):
        raise ConfigError(f"{'.'.join(map(str, keys))} must be a matrix (list of rows)", cfg.line(*keys))
    if shape is not None and arr.shape != shape:
        raise ConfigError(f"{'.'.join(map(str, keys))} must have shape {shape}", cfg.line(*keys))
    return arr


def _typed(cfg: ScenarioConfig, keys) -> tuple[dict, str]:
    node = cfg.params
    for depth, k in enumerate(keys[1:], start=1):
        if not isinstance(node, dict) or k not in node:
            raise ConfigError(f"missing required {'.'.join(keys[: depth + 1])}", cfg.line(*keys[:depth]))
        node = node[k]
    if not isinstance(node, dict) or "type" not in node:
        raise ConfigError(f"{'.'.join(keys)} must be a mapping with a 'type'", cfg.line(*keys))
    return node, node["type"]


def _linear_combo(matrix: np.ndarray, offset: np.ndarray, x):
    out = []
    for i in range(len(offset)):
        total = float(offset[i])
        for j in range(matrix.shape[1]):
            if matrix[i, j] != 0.0:
                total = total + float(matrix[i, j]) * x[j]
        out.append(total)
    return out


@dataclass(frozen=True)
class AffineField:
    """``xi(x) = B x + c`` with its closed-form flow."""

    matrix: np.ndarray
    offset: np.ndarray
    label: str

    @property
    def dim(self) -> int:
        return len(self.offset)

    def __call__(self, x):
        return _linear_combo(self.matrix, self.offset, x)

    def flow_map(self, x0, t0: float) -> SmoothMap:
        n = self.dim
        aug = np.zeros((n + 1, n + 1))
        aug[:n, :n] = self.matrix
        aug[:n, n] = self.offset
        start = np.append(np.asarray(x0, float), 1.0)
        B, c = self.matrix, self.offset
        if self.label == "rotation":
            omega = float(B[1, 0])

            def fn(t):
                s = t[0] - t0
                cw, sw = jets.cos(omega * s), jets.sin(omega * s)
                return [cw * x0[0] - sw * x0[1], sw * x0[0] + cw * x0[1]]

            return SmoothMap(fn, 1, 2, name="rotation-orbit")
        if not np.any(B):

            def fn(t):
                s = t[0] - t0
                return [x0[i] + c[i] * s for i in range(n)]

            return SmoothMap(fn, 1, n, name="straight-orbit")

        def evaluator(nodes):
            vals = np.array([(expm((t - t0) * aug) @ start)[:n] for t in nodes[:, 0]])
            jac = (vals @ B.T + c)[:, :, None]
            return vals, jac

        return SmoothMap(None, 1, n, evaluator=evaluator, name="affine-orbit")


def vector_field(cfg: ScenarioConfig, keys=("params", "field")) -> AffineField:
    entry, kind = _typed(cfg, keys)
    if kind == "rotation":
        omega = float(entry.get("omega", 1.0))
        if omega == 0.0:
            raise ConfigError("rotation omega must be nonzero", cfg.line(*keys, "omega"))
        return AffineField(np.array([[0.0, -omega], [omega, 0.0]]), np.zeros(2), "rotation")
    if kind == "constant":
        c = _numbers(cfg, entry.get("vector"), keys + ("vector",))
        return AffineField(np.zeros((len(c), len(c))), c, "constant")
    if kind == "affine":
        B = _matrix(cfg, entry.get("matrix"), keys + ("matrix",))
        if B.shape[0] != B.shape[1]:
            raise ConfigError("affine field matrix must be square", cfg.line(*keys, "matrix"))
        c = _numbers(cfg, entry.get("offset", [0.0] * B.shape[0]), keys + ("offset",), B.shape[0])
        return AffineField(B, c, "affine")
    raise ConfigError(f"unknown vector field type '{kind}'", cfg.line(*keys, "type"))


def metric_choice(cfg: ScenarioConfig, keys, dim: int | None = None) -> MetricField:
    entry, kind = _typed(cfg, keys)
    if kind == "euclidean":
        n = int(entry.get("dim", dim if dim is not None else 0))
        if n < 1:
            raise ConfigError("euclidean metric needs a positive 'dim'", cfg.line(*keys))
        metric = MetricField.euclidean(n)
    elif kind == "constant":
        m = _matrix(cfg, entry.get("matrix"), keys + ("matrix",))
        if m.shape[0] != m.shape[1] or not np.allclose(m, m.T):
            raise ConfigError("constant metric must be a symmetric square matrix", cfg.line(*keys, "matrix"))
        if np.any(np.linalg.eigvalsh(m) <= 0):
            raise ConfigError("constant metric must be positive definite", cfg.line(*keys, "matrix"))
        metric = MetricField.constant(m)
    elif kind == "sphere":
        metric = MetricField.sphere(float(entry.get("radius", 1.0)))
    elif kind == "conformal-linear":
        c = _numbers(cfg, entry.get("coeffs"), keys + ("coeffs",))
        metric = MetricField.conformal(lambda x: jets.dot(c.tolist(), x), MetricField.euclidean(len(c)))
    else:
        raise ConfigError(f"unknown metric type '{kind}'", cfg.line(*keys, "type"))
    if dim is not None and metric.dim != dim:
        raise ConfigError(f"metric dimension {metric.dim} does not match {dim}", cfg.line(*keys))
    return metric


# orbits --------------------------------------------------------------------------


@dataclass
class OrbitScenario:
    xi: AffineField
    psi: MetricField
    h: GLMetric
    T: DirectionSection
    mesh: MeshQuadrature
    x0: np.ndarray
    solution: SmoothMap


def build_orbit_scenario(cfg: ScenarioConfig) -> OrbitScenario:
    xi = vector_field(cfg)
    n = xi.dim
    psi = metric_choice(cfg, ("params", "psi"), n)
    if psi.name not in (f"euclidean{n}", "constant"):
        raise ConfigError("orbit scenarios need a constant psi", cfg.line("params", "psi"))
    x0 = _numbers(cfg, cfg.require("params", "x0"), ("params", "x0"), n)
    d = cfg.domain
    mesh = MeshQuadrature.interval(d["lo"][0], d["hi"][0], d["grid"])
    solution = xi.flow_map(x0.tolist(), d["lo"][0])
    X, _ = solution.evaluate(mesh.nodes)
    speeds = np.array([np.linalg.norm(xi(list(x))) for x in X])
    if np.any(speeds == 0.0):
        raise ConfigError("vector field vanishes on the orbit", cfg.line("params", "field"))
    h = GLMetric.direction_ratio(xi, psi, name=f"orbit-h({xi.label})")
    T = DirectionSection.vector_field(xi, n, name=xi.label)
    return OrbitScenario(xi, psi, h, T, mesh, x0, solution)


def _int_param(cfg, key, minimum=0) -> int:
    value = cfg.params[key]
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ConfigError(f"params.{key} must be an integer >= {minimum}", cfg.line("params", key))
    return value


def _float_param(cfg, key) -> float:
    value = cfg.params[key]
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"params.{key} must be a number", cfg.line("params", key))
    return float(value)


def _echo(cfg: ScenarioConfig) -> dict:
    return {
        "name": cfg.name,
        "kind": cfg.kind,
        "domain": cfg.domain,
        "params": cfg.params,
        "tolerances": cfg.tolerances,
        "defaults_used": cfg.defaults_used,
    }


def _volume_values(report: Report, mesh: MeshQuadrature) -> float:
    vol = mesh.volume
    report.values["volume"] = vol
    report.values["half_volume"] = 0.5 * vol
    return 0.5 * vol


def _defaults_note(report: Report, cfg: ScenarioConfig) -> None:
    if cfg.defaults_used:
        report.notes.append("calibration defaults applied: " + ", ".join(cfg.defaults_used))


def run_orbit(cfg: ScenarioConfig, sc: OrbitScenario | None = None) -> Report:
    sc = sc or build_orbit_scenario(cfg)
    tol = cfg.tolerances
    report = Report(cfg.name, cfg.kind, _echo(cfg))
    mesh, n = sc.mesh, sc.xi.dim
    phi = MetricField.euclidean(1)
    half = _volume_values(report, mesh)

    res, table = system_E_residual(sc.T, sc.solution, mesh)
    report.values["system_residual_max"] = res
    report.check("system residual of the orbit", res, "<", tol["residual"], "residual")

    per_node = lagrangian_LT_nodes(phi, sc.psi, sc.T, sc.solution, mesh)
    value = mesh.integrate(per_node["integrand"])
    report.values["L_T(orbit)"] = value
    report.check("|L_T(orbit) - Vol/2|", abs(value - half), "<", tol["functional"], "functional")
    table.update({k: per_node[k] for k in ("ratio", "cosine", "integrand")})
    report.tables["nodes"] = table

    count = _int_param(cfg, "perturbations")
    if count:
        amplitude = _float_param(cfg, "amplitude")
        bumps = boundary_bumps(mesh, n, count, _int_param(cfg, "seed"))
        values = np.array(
            [lagrangian_LT(phi, sc.psi, sc.T, perturb(sc.solution, b, amplitude), mesh) for b in bumps]
        )
        gaps = values - half
        report.values["perturbed_L_T_min"] = float(values.min())
        report.values["perturbed_gap_min"] = float(gaps.min())
        report.check("lower-bound deficit: Vol/2 - min(L_T(perturbed))", -gaps.min(), "<=", tol["bound"], "bound")
        report.check("strict excess of perturbed curves", gaps.min(), ">", tol["strict_gap"], "strict_gap")
        report.tables["perturbations"] = {"index": np.arange(count), "L_T": values, "gap": gaps}

    e_value = energy(phi, lambda a: [1.0], sc.h, sc.solution, mesh)
    report.values["energy(orbit)"] = e_value
    report.check(
        "|energy(induced h) - L_T| / max(1, L_T)",
        abs(e_value - value) / max(1.0, abs(value)),
        "<",
        tol["agreement"],
        "agreement",
    )

    if cfg.params.get("flows"):
        t0, t1 = mesh.lo[0], mesh.hi[0]
        steps = mesh.counts[0] - 1
        numeric = integrate_orbit(sc.xi, sc.x0, (t0, t1), steps)
        X, J = sc.solution.evaluate(mesh.nodes)
        flow_err = float(np.max(np.abs(numeric.states - X)))
        report.values["rk4_orbit_error_max"] = flow_err
        report.check("RK4 orbit vs closed form", flow_err, "<", tol["flow"], "flow")
        analytic = Trajectory(mesh.nodes[:, 0], X, J[:, :, 0])
        el = el_residual(sc.h, analytic)
        report.values["el_residual_orbit_max"] = float(el.max())
        report.check("Euler-Lagrange residual along the orbit", el.max(), "<", tol["el"], "el")
        report.plots["trajectory"] = {
            "t": analytic.times,
            **{f"x{i}": analytic.states[:, i] for i in range(n)},
            **{f"v{i}": analytic.velocities[:, i] for i in range(n)},
            "el_residual": np.concatenate([[np.nan], el, [np.nan]]),
            **{f"rk4_x{i}": numeric.states[:, i] for i in range(n)},
        }
    report.plots["integrand"] = {"t": mesh.nodes[:, 0], "ratio": per_node["ratio"]}
    _defaults_note(report, cfg)
    return report


# Pfaffian systems ------------------------------------------------------------------


@dataclass
class PfaffScenario:
    form: Callable
    sharp: Callable
    closed: bool
    potential: SmoothMap
    g: MetricField
    h: GLMetric
    T: DirectionSection
    mesh: MeshQuadrature
    matrix: np.ndarray
    offset: np.ndarray


def build_pfaff_scenario(cfg: ScenarioConfig) -> PfaffScenario:
    keys = ("params", "form")
    cfg.require("params", "form", dict)
    entry, kind = _typed(cfg, keys)
    d = cfg.domain
    m = len(d["lo"])
    if kind != "affine":
        raise ConfigError(f"unknown 1-form type '{kind}' (expected 'affine')", cfg.line(*keys, "type"))
    C = _matrix(cfg, entry.get("matrix", np.zeros((m, m)).tolist()), keys + ("matrix",), (m, m))
    dvec = _numbers(cfg, entry.get("offset", [0.0] * m), keys + ("offset",), m)
    mesh = MeshQuadrature.box(d["lo"], d["hi"], d["grid"])

    def form(a):
        return _linear_combo(C, dvec, a)

    values = np.array([form(list(a)) for a in mesh.nodes])
    if np.any(np.all(values == 0.0, axis=1)):
        raise ConfigError("1-form vanishes inside the domain", cfg.line(*keys))

    sym = 0.5 * (C + C.T)
    closed = bool(np.array_equal(C, C.T))

    def potential(a):
        quad = 0.0
        for i in range(m):
            for j in range(m):
                if sym[i, j] != 0.0:
                    quad = quad + 0.5 * float(sym[i, j]) * a[i] * a[j]
        return [quad + jets.dot(dvec.tolist(), a)]

    def g_eval(a):
        w = form(a)
        inv_norm2 = 1.0 / jets.dot(w, w)
        return [[inv_norm2 if i == j else 0.0 for j in range(m)] for i in range(m)]

    g = MetricField(g_eval, m, name="delta/|A|^2")
    T = DirectionSection(lambda a, x: [form(a)], m, 1, None, "A")
    return PfaffScenario(
        form, form, closed, SmoothMap(potential, m, 1, name="potential"), g,
        GLMetric.inverse_square(), T, mesh, C, dvec,
    )


def run_pfaff(cfg: ScenarioConfig, sc: PfaffScenario | None = None) -> Report:
    sc = sc or build_pfaff_scenario(cfg)
    tol = cfg.tolerances
    report = Report(cfg.name, cfg.kind, _echo(cfg))
    mesh = sc.mesh
    m = mesh.dim
    phi, psi = MetricField.euclidean(m), MetricField.euclidean(1)
    half = _volume_values(report, mesh)
    report.values["form_closed"] = str(sc.closed)

    res, table = system_E_residual(sc.T, sc.potential, mesh)
    per_node = lagrangian_LT_nodes(phi, psi, sc.T, sc.potential, mesh)
    value = mesh.integrate(per_node["integrand"])
    table.update({k: per_node[k] for k in ("ratio", "cosine", "integrand")})
    report.tables["nodes"] = table
    report.values["system_residual_max"] = res
    report.values["L_A(potential)"] = value
    e_value = energy(sc.g, sc.sharp, sc.h, sc.potential, mesh)
    report.values["energy(g, A#, h)(potential)"] = e_value
    report.check(
        "|energy(g, A#, h) - L_A| / max(1, L_A)",
        abs(e_value - value) / max(1.0, abs(value)),
        "<",
        tol["agreement"],
        "agreement",
    )
    if sc.closed:
        report.check("system residual of the potential", res, "<", tol["residual"], "residual")
        report.check("|L_A(potential) - Vol/2|", abs(value - half), "<", tol["functional"], "functional")
    else:
        report.notes.append("1-form is not closed: no exact solution exists; candidates must exceed Vol/2")

    count = _int_param(cfg, "candidates")
    values = [value]
    if count:
        bumps = boundary_bumps(mesh, 1, count, _int_param(cfg, "seed"))
        amplitude = _float_param(cfg, "amplitude")
        values += [lagrangian_LT(phi, psi, sc.T, perturb(sc.potential, b, amplitude), mesh) for b in bumps]
    values = np.array(values)
    gaps = values - half
    report.tables["candidates"] = {"index": np.arange(len(values)), "L_A": values, "gap": gaps}
    report.check("lower-bound deficit: Vol/2 - min(L_A(candidates))", -gaps.min(), "<=", tol["bound"], "bound")
    strict = gaps if not sc.closed else gaps[1:]
    if len(strict):
        report.values["candidate_gap_min"] = float(strict.min())
        report.check("strict excess of non-solution candidates", strict.min(), ">", tol["strict_gap"], "strict_gap")
    report.plots["integrand"] = {
        **{f"a{i}": mesh.nodes[:, i] for i in range(m)},
        "ratio": per_node["ratio"],
    }
    _defaults_note(report, cfg)
    return report


# pseudolinear functions --------------------------------------------------------------


@dataclass
class PseudolinearScenario:
    f: SmoothMap
    scalar: Callable
    T: DirectionSection
    g: MetricField
    sharp: Callable
    mesh: MeshQuadrature
    form: str


def build_pseudolinear_scenario(cfg: ScenarioConfig) -> PseudolinearScenario:
    form = cfg.require("params", "form", str)
    d = cfg.domain
    m = len(d["lo"])
    v = _numbers(cfg, cfg.require("params", "v"), ("params", "v"), m).tolist()
    w = _float_param(cfg, "w")
    mesh = MeshQuadrature.box(d["lo"], d["hi"], d["grid"])

    if form == "exp":

        def scalar(a):
            return jets.exp(jets.dot(v, a) + w)

        def xi(a):
            return 1.0

        def A(x):
            return [x[0] * vi for vi in v]

    elif form == "quotient":
        v2 = _numbers(cfg, cfg.require("params", "v2"), ("params", "v2"), m).tolist()
        cfg.require("params", "w2", (int, float))
        w2 = _float_param(cfg, "w2")
        denominators = mesh.nodes @ np.asarray(v2) + w2
        if np.any(denominators == 0.0) or np.min(denominators) * np.max(denominators) <= 0.0:
            raise ConfigError("quotient denominator vanishes in the domain", cfg.line("params", "v2"))

        def scalar(a):
            return (jets.dot(v, a) + w) / (jets.dot(v2, a) + w2)

        def xi(a):
            return 1.0 / (jets.dot(v2, a) + w2)

        def A(x):
            return [vi - x[0] * ui for vi, ui in zip(v, v2)]

    else:
        raise ConfigError(f"unknown pseudolinear form '{form}' (expected exp or quotient)", cfg.line("params", "form"))

    f = SmoothMap(lambda a: [scalar(a)], m, 1, name=form)
    _, J = f.evaluate(mesh.nodes)
    if np.any(np.all(J[:, 0, :] == 0.0, axis=1)):
        raise ConfigError("gradient of f vanishes in the domain", cfg.line("params", "v"))

    def sharp(a):
        return A([scalar(a)])

    def g_eval(a):
        inv = 1.0 / jets.dot(sharp(a), sharp(a))
        return [[inv if i == j else 0.0 for j in range(m)] for i in range(m)]

    T = DirectionSection.pseudolinear(xi, A, m, name=form)
    return PseudolinearScenario(f, scalar, T, MetricField(g_eval, m, "delta/|A|^2"), sharp, mesh, form)


def run_pseudolinear(cfg: ScenarioConfig, sc: PseudolinearScenario | None = None) -> Report:
    sc = sc or build_pseudolinear_scenario(cfg)
    tol = cfg.tolerances
    report = Report(cfg.name, cfg.kind, _echo(cfg))
    mesh = sc.mesh
    m = mesh.dim
    phi, psi = MetricField.euclidean(m), MetricField.euclidean(1)
    half = _volume_values(report, mesh)

    res, table = system_E_residual(sc.T, sc.f, mesh)
    report.values["system_residual_max"] = res
    report.check("system residual", res, "<", tol["residual"], "residual")
    X, _ = sc.f.evaluate(mesh.nodes)
    report.values["decomposition_mismatch"] = sc.T.factor_mismatch(mesh.nodes, X)

    sff = np.array([second_fundamental_form_residual(sc.scalar, phi, a) for a in mesh.nodes])
    report.values["second_fundamental_form_max"] = float(sff.max())
    report.check("level-set second fundamental form", sff.max(), "<", tol["sff"], "sff")
    table["second_fundamental_form"] = sff

    per_node = lagrangian_LT_nodes(phi, psi, sc.T, sc.f, mesh)
    value = mesh.integrate(per_node["integrand"])
    table.update({k: per_node[k] for k in ("ratio", "cosine", "integrand")})
    report.tables["nodes"] = table
    report.values["L_T(f)"] = value
    report.check("|L_T(f) - Vol/2|", abs(value - half), "<", tol["functional"], "functional")
    report.check("lower-bound deficit: Vol/2 - L_T(f)", half - value, "<=", tol["bound"], "bound")

    e_value = energy(sc.g, sc.sharp, GLMetric.inverse_square(), sc.f, mesh)
    report.values["energy(g, A#, h)(f)"] = e_value
    report.check(
        "|energy(g, A#, h) - L_T| / max(1, L_T)",
        abs(e_value - value) / max(1.0, abs(value)),
        "<",
        tol["agreement"],
        "agreement",
    )
    report.plots["levels"] = {
        **{f"a{i}": mesh.nodes[:, i] for i in range(m)},
        "f": X[:, 0],
        "second_fundamental_form": sff,
    }
    _defaults_note(report, cfg)
    return report


# field equations of conformal GL metrics ----------------------------------------------


@dataclass
class FieldEquationScenario:
    metric: GLMetric
    samples: list[tuple[np.ndarray, np.ndarray]]
    skipped: int
    sigma_zero: bool
    coupling: float


def _sigma_choice(cfg: ScenarioConfig, n: int, gamma: MetricField):
    keys = ("params", "sigma")
    entry, kind = _typed(cfg, keys)
    if kind == "zero":
        return GLMetric.riemannian(gamma), True
    if kind == "constant":
        c = float(entry.get("value", 0.0))
        return GLMetric(gamma, lambda x, y: c, None, f"constant-sigma({c})"), c == 0.0
    if kind == "polynomial":
        lin = _numbers(cfg, entry.get("linear", [0.0] * 2 * n), keys + ("linear",), 2 * n).tolist()
        quad = _matrix(cfg, entry.get("quadratic", np.zeros((2 * n, 2 * n)).tolist()), keys + ("quadratic",), (2 * n, 2 * n))
        quad = 0.5 * (quad + quad.T)

        def sigma(x, y):
            z = list(x) + list(y)
            total = jets.dot(lin, z)
            for i in range(2 * n):
                for j in range(2 * n):
                    if quad[i, j] != 0.0:
                        total = total + 0.5 * float(quad[i, j]) * z[i] * z[j]
            return total

        zero = not (any(lin) or np.any(quad))
        return GLMetric(gamma, sigma, None, "polynomial-sigma"), zero
    if kind == "inverse-square":
        if n != 1:
            raise ConfigError("inverse-square sigma needs a one-dimensional gamma", cfg.line(*keys))
        return GLMetric(gamma, lambda x, y: -jets.log(jets.absolute(y[0])), lambda x, y: bool(y[0] == 0.0), "inverse-square"), False
    if kind == "direction-ratio":
        xi = vector_field(cfg, keys + ("field",))
        if xi.dim != n:
            raise ConfigError("direction-ratio field dimension does not match gamma", cfg.line(*keys, "field"))
        base = GLMetric.direction_ratio(xi, gamma, name=f"direction-ratio({xi.label})")
        return base, False
    raise ConfigError(f"unknown sigma type '{kind}'", cfg.line(*keys, "type"))


def build_field_equation_scenario(cfg: ScenarioConfig) -> FieldEquationScenario:
    gamma = metric_choice(cfg, ("params", "gamma"))
    n = gamma.dim
    metric, zero = _sigma_choice(cfg, n, gamma)
    samples_entry = cfg.require("params", "samples", dict)
    xs = samples_entry.get("x")
    ys = samples_entry.get("y")
    if not isinstance(xs, list) or not xs or not isinstance(ys, list) or not ys:
        raise ConfigError("samples needs non-empty 'x' and 'y' lists", cfg.line("params", "samples"))
    xs = [_numbers(cfg, x, ("params", "samples", "x", i), n) for i, x in enumerate(xs)]
    ys = [_numbers(cfg, y, ("params", "samples", "y", i), n) for i, y in enumerate(ys)]
    margin = _float_param(cfg, "margin")
    coupling = _float_param(cfg, "coupling")
    if coupling == 0.0:
        raise ConfigError("coupling must be nonzero", cfg.line("params", "coupling"))
    samples, skipped = [], 0
    for x in xs:
        for y in ys:
            if _near_singular(cfg, metric, gamma, x, y, margin):
                skipped += 1
                continue
            samples.append((x, y))
    if not samples:
        raise ConfigError("every sample lies within the singular-locus margin", cfg.line("params", "samples"))
    return FieldEquationScenario(metric, samples, skipped, zero, coupling)


def _near_singular(cfg, metric: GLMetric, gamma: MetricField, x, y, margin: float) -> bool:
    if metric.singular is not None and metric.singular(x, y):
        return True
    entry = cfg.params["sigma"]
    if entry.get("type") == "direction-ratio":
        xi = vector_field(cfg, ("params", "sigma", "field"))
        v = np.asarray(xi(list(x)), float)
        p = gamma(x)
        size = np.sqrt(v @ p @ v) * np.sqrt(y @ p @ y)
        return abs(v @ p @ y) < margin * size
    if entry.get("type") == "inverse-square":
        return abs(y[0]) < margin
    return False


def run_field_equations(cfg: ScenarioConfig, sc: FieldEquationScenario | None = None) -> Report:
    sc = sc or build_field_equation_scenario(cfg)
    tol = cfg.tolerances
    report = Report(cfg.name, cfg.kind, _echo(cfg))
    report.disclosure = LEVI_CIVITA.description
    n = sc.metric.dim
    rows: dict[str, list] = {k: [] for k in (
        "F_antisym", "f_antisym", "F_max", "f_max", "maxwell_h", "maxwell_mixed", "maxwell_v",
        "sigma_H", "sigma_V", "sigma_bar", "sigma_dot", "t_max", "t_antisym", "T_H_max", "T_V_max",
    )}
    coords: dict[str, list] = {**{f"x{i}": [] for i in range(n)}, **{f"y{i}": [] for i in range(n)}}
    for x, y in sc.samples:
        out = field_equations(sc.metric, x, y, sc.coupling)
        em, sd, mx, ein = out["em"], out["sigma"], out["maxwell"], out["einstein"]
        for i in range(n):
            coords[f"x{i}"].append(x[i])
            coords[f"y{i}"].append(y[i])
        rows["F_antisym"].append(np.max(np.abs(em.F + em.F.T)))
        rows["f_antisym"].append(np.max(np.abs(em.f + em.f.T)))
        rows["F_max"].append(np.max(np.abs(em.F)))
        rows["f_max"].append(np.max(np.abs(em.f)))
        for key, val in zip(("maxwell_h", "maxwell_mixed", "maxwell_v"), mx.maxima()):
            rows[key].append(val)
        rows["sigma_H"].append(sd.sigma_H)
        rows["sigma_V"].append(sd.sigma_V)
        rows["sigma_bar"].append(sd.sigma_bar)
        rows["sigma_dot"].append(sd.sigma_dot)
        rows["t_max"].append(np.max(np.abs(sd.t_ij)))
        rows["t_antisym"].append(sd.t_antisymmetry)
        rows["T_H_max"].append(np.max(np.abs(ein.T_H)))
        rows["T_V_max"].append(np.max(np.abs(ein.T_V)))
    table = {**{k: np.array(v) for k, v in coords.items()}, **{k: np.array(v, dtype=float) for k, v in rows.items()}}
    report.tables["samples"] = table
    report.values["samples_evaluated"] = len(sc.samples)
    report.values["samples_skipped_near_singular_locus"] = sc.skipped
    for key in ("maxwell_h", "maxwell_mixed", "maxwell_v", "t_antisym", "T_H_max", "T_V_max"):
        report.values[f"{key}_max"] = float(table[key].max())
    report.notes.append("Maxwell residuals are reported for the disclosed connection, not asserted")
    report.notes.append("t_ij is computed verbatim without symmetrization; t_antisym is its antisymmetric part")

    antisym = max(table["F_antisym"].max(), table["f_antisym"].max())
    report.check("antisymmetry of F and f", antisym, "<", tol["antisymmetry"], "antisymmetry")
    if sc.sigma_zero:
        collapse = max(
            table[k].max()
            for k in ("F_max", "f_max", "maxwell_h", "maxwell_mixed", "maxwell_v", "sigma_H", "sigma_V", "t_max", "T_V_max")
        )
        collapse = max(collapse, np.abs(table["sigma_bar"]).max(), np.abs(table["sigma_dot"]).max())
        report.check("zero-sigma collapse (EM, Maxwell, sigma terms, t, T_V)", collapse, "<", tol["collapse"], "collapse")
        if n == 2:
            report.check("2-d Einstein tensor vanishes (T_H)", table["T_H_max"].max(), "<", tol["collapse"], "collapse")
    if n == 2:
        report.check("T_V vanishes for n = 2", table["T_V_max"].max(), "<", tol["collapse"], "collapse")
    if n <= 2:
        worst = max(table[k].max() for k in ("maxwell_h", "maxwell_mixed", "maxwell_v"))
        report.check("cyclic sums vanish for n <= 2", worst, "<", tol["collapse"], "collapse")
    report.plots["samples"] = table
    _defaults_note(report, cfg)
    return report


# dispatch ------------------------------------------------------------------------------

_BUILDERS = {
    "orbit": (build_orbit_scenario, run_orbit),
    "pfaff": (build_pfaff_scenario, run_pfaff),
    "pseudolinear": (build_pseudolinear_scenario, run_pseudolinear),
    "custom-gl-field-eqs": (build_field_equation_scenario, run_field_equations),
}


def build(cfg: ScenarioConfig):
    """Validate parameters and construct the scenario objects (raises ConfigError)."""
    try:
        return _BUILDERS[cfg.kind][0](cfg)
    except (KeyError, TypeError, AttributeError) as exc:
        raise ConfigError(f"scenario '{cfg.name}': malformed parameters ({exc})", cfg.line("params")) from None


def execute(cfg: ScenarioConfig, built=None) -> Report:
    built = built if built is not None else build(cfg)
    return _BUILDERS[cfg.kind][1](cfg, built)
