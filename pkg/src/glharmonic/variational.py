"""Quadrature meshes, the direction energy, the ratio functional L_T and first variations.

Everything is evaluated on the nodes of a tensor-product trapezoid mesh.  Sums
use :func:`math.fsum`, so results do not depend on evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import jets
from .chart import MetricField, inverse_det
from .errors import ExcludedSetError, SingularLocusError
from .glmetric import GLMetric, gl_eval

__all__ = [
    "MeshQuadrature",
    "SmoothMap",
    "DirectionSection",
    "ScaledSolution",
    "energy",
    "lagrangian_LT",
    "lagrangian_LT_nodes",
    "system_E_residual",
    "first_variation",
    "perturb",
    "boundary_bumps",
    "pairing",
]


def _broadcast_nested(out, count: int) -> np.ndarray:
    """Nested lists of numbers/arrays -> array with leading node axis."""
    if isinstance(out, (list, tuple)):
        return np.stack([_broadcast_nested(o, count) for o in out], axis=1)
    if isinstance(out, jets.Jet):
        out = out.value
    return np.broadcast_to(np.asarray(out, dtype=float), (count,)).copy()


def _columns(points: np.ndarray) -> list[np.ndarray]:
    return [points[:, i] for i in range(points.shape[1])]


@dataclass(frozen=True)
class MeshQuadrature:
    """Trapezoid rule on an axis-aligned box, weights multiplied by ``sqrt(det phi)``."""

    lo: np.ndarray
    hi: np.ndarray
    counts: tuple[int, ...]
    nodes: np.ndarray
    weights: np.ndarray
    metric_name: str = "euclidean"

    @classmethod
    def box(cls, lo, hi, counts, metric: MetricField | None = None) -> "MeshQuadrature":
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if np.ndim(counts) == 0:
            counts = (int(counts),) * len(lo)
        counts = tuple(int(c) for c in counts)
        if len(counts) != len(lo) or len(hi) != len(lo):
            raise ValueError("lo, hi and counts must have the same length")
        if any(c < 2 for c in counts):
            raise ValueError("at least two nodes per axis are required")
        if not np.all(hi > lo):
            raise ValueError("box must have hi > lo on every axis")
        axes, axis_weights = [], []
        for a, b, c in zip(lo, hi, counts):
            t = np.linspace(a, b, c)
            w = np.full(c, (b - a) / (c - 1))
            w[0] *= 0.5
            w[-1] *= 0.5
            axes.append(t)
            axis_weights.append(w)
        grids = np.meshgrid(*axes, indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], axis=1)
        wgrid = np.meshgrid(*axis_weights, indexing="ij")
        weights = np.prod(np.stack([g.ravel() for g in wgrid], axis=1), axis=1)
        name = "euclidean"
        if metric is not None:
            _, det = inverse_det(metric(nodes))
            weights = weights * np.sqrt(det)
            name = metric.name
        return cls(lo, hi, counts, nodes, weights, name)

    @classmethod
    def interval(cls, a: float, b: float, count: int, metric: MetricField | None = None):
        return cls.box([a], [b], [count], metric)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def volume(self) -> float:
        return math.fsum(self.weights)

    @property
    def spacing(self) -> np.ndarray:
        return (self.hi - self.lo) / (np.asarray(self.counts) - 1)

    def integrate(self, values) -> float:
        return math.fsum(np.asarray(values, dtype=float) * self.weights)


class SmoothMap:
    """Differentiable map ``f: M -> N`` (``m`` inputs, ``n`` outputs).

    Built from a jet-friendly closure ``fn(a) -> sequence`` (Jacobian by
    forward mode) or from an explicit vectorized ``evaluator(nodes) ->
    (values (N, n), jacobians (N, n, m))``.
    """

    def __init__(self, fn=None, m: int = 1, n: int = 1, *, evaluator=None, name="map"):
        if fn is None and evaluator is None:
            raise ValueError("need either a closure or an explicit evaluator")
        self.fn = fn
        self.m = m
        self.n = n
        self._evaluator = evaluator
        self.name = name

    @classmethod
    def explicit(cls, value, jacobian, m: int, n: int, name="map") -> "SmoothMap":
        return cls(None, m, n, evaluator=lambda nodes: (value(nodes), jacobian(nodes)), name=name)

    @classmethod
    def from_scalar(cls, fn, m: int, name="function") -> "SmoothMap":
        return cls(lambda a: [fn(a)], m, 1, name=name)

    def evaluate(self, nodes) -> tuple[np.ndarray, np.ndarray]:
        """``(values (N, n), jacobians (N, n, m))`` at a node array ``(N, m)``."""
        nodes = np.asarray(nodes, dtype=float).reshape(-1, self.m)
        if self._evaluator is not None:
            value, jac = self._evaluator(nodes)
            return np.asarray(value, float), np.asarray(jac, float)
        value, grad, _ = jets.taylor_tensor(lambda a: list(self.fn(a)), nodes)
        return value, grad

    def __call__(self, a) -> np.ndarray:
        return self.evaluate(np.asarray(a, dtype=float)[None, :])[0][0]

    def jacobian(self, a) -> np.ndarray:
        return self.evaluate(np.asarray(a, dtype=float)[None, :])[1][0]


@dataclass(frozen=True)
class DirectionSection:
    """(1,1)-tensor ``T^i_alpha(a, x)`` on ``M x N``.

    ``fn(a, x)`` returns ``n`` rows of ``m`` entries.  ``factors`` optionally
    records a product decomposition: ``("E3", xi, A)`` for
    ``xi^i(x) A_alpha(a)`` or ``("PL", xi, A)`` for ``xi(a) A_alpha(x)``.
    """

    fn: Callable[[Sequence, Sequence], object]
    m: int
    n: int
    factors: tuple | None = None
    name: str = "T"

    def __call__(self, a, x) -> np.ndarray:
        return self.at_nodes(np.asarray(a, float)[None, :], np.asarray(x, float)[None, :])[0]

    def at_nodes(self, nodes, points) -> np.ndarray:
        nodes = np.asarray(nodes, float)
        points = np.asarray(points, float)
        with np.errstate(all="ignore"):
            out = self.fn(_columns(nodes), _columns(points))
        return _broadcast_nested(out, len(nodes))

    @classmethod
    def product(cls, xi, A, m: int, n: int, name="xi*A") -> "DirectionSection":
        """``T^i_alpha(a, x) = xi^i(x) A_alpha(a)``."""

        def fn(a, x):
            v, w = xi(x), A(a)
            return [[v[i] * w[al] for al in range(m)] for i in range(n)]

        return cls(fn, m, n, ("E3", xi, A), name)

    @classmethod
    def pseudolinear(cls, xi, A, m: int, name="xi(a)*A(x)") -> "DirectionSection":
        """Scalar target: ``T_alpha(a, x) = xi(a) A_alpha(x)``."""

        def fn(a, x):
            s, w = xi(a), A(x)
            return [[s * w[al] for al in range(m)]]

        return cls(fn, m, 1, ("PL", xi, A), name)

    @classmethod
    def vector_field(cls, xi, n: int, name="xi") -> "DirectionSection":
        """Orbit systems on an interval: ``T^i_1(t, x) = xi^i(x)``."""
        return cls.product(xi, lambda a: [1.0], 1, n, name)

    def scaled(self, scaling: Callable[[Sequence], object]) -> "DirectionSection":
        """``K(a) * T``; the decomposition is dropped."""
        fn = self.fn

        def scaled_fn(a, x):
            k = scaling(a)
            return [[k * e for e in row] for row in fn(a, x)]

        return DirectionSection(scaled_fn, self.m, self.n, None, f"K*{self.name}")

    def factor_mismatch(self, nodes, points) -> float:
        """Max deviation between ``fn`` and its recorded product decomposition."""
        if self.factors is None:
            return 0.0
        kind, xi, A = self.factors
        T = self.at_nodes(nodes, points)
        cn, cx = _columns(np.asarray(nodes, float)), _columns(np.asarray(points, float))
        count = len(T)
        if kind == "E3":
            v = _broadcast_nested(list(xi(cx)), count)
            w = _broadcast_nested(list(A(cn)), count)
            prod = v[:, :, None] * w[:, None, :]
        else:
            v = _broadcast_nested(xi(cn), count)
            w = _broadcast_nested(list(A(cx)), count)
            prod = (v[:, None] * w)[:, None, :]
        return float(np.max(np.abs(T - prod)))


@dataclass(frozen=True)
class ScaledSolution:
    """A solution of ``df = K T`` for a scaling function ``K`` on ``M``."""

    map: SmoothMap
    scaling: Callable[[Sequence], object]

    def residual(self, T: DirectionSection, mesh: MeshQuadrature) -> float:
        return system_E_residual(T.scaled(self.scaling), self.map, mesh)[0]


def pairing(phi_inv, psi, S, R) -> np.ndarray:
    """Nodewise ``phi^{ab} psi_ij S^i_a R^j_b`` for stacks ``(N, n, m)``."""
    return np.einsum("kab,kij,kia,kjb->k", phi_inv, psi, S, R)


def _phi_inverse(phi: MetricField, mesh: MeshQuadrature) -> np.ndarray:
    inv, _ = inverse_det(phi(mesh.nodes))
    return inv


def energy(phi: MetricField, A, h: GLMetric, f: SmoothMap, mesh: MeshQuadrature) -> float:
    """Direction energy ``1/2 sum_w phi^{ab} h_ij(f, f_*(A)) f^i_a f^j_b``.

    ``phi`` raises the indices; the volume element is carried by the mesh
    weights.  ``A`` is a closure ``a -> m components``.
    """
    return mesh.integrate(_energy_density(phi, A, h, f, mesh))


def _energy_density(phi, A, h, f, mesh):
    X, J = f.evaluate(mesh.nodes)
    count = len(X)
    with np.errstate(all="ignore"):
        avec = _broadcast_nested(list(A(_columns(mesh.nodes))), count)
    Y = np.einsum("kia,ka->ki", J, avec)
    H = np.empty((count, f.n, f.n))
    for k in range(count):
        try:
            H[k] = gl_eval(h, X[k], Y[k])
        except SingularLocusError as exc:
            raise SingularLocusError(f"node {k} a={tuple(mesh.nodes[k])}: {exc}") from None
    phi_inv = _phi_inverse(phi, mesh)
    return 0.5 * pairing(phi_inv, H, J, J)


def lagrangian_LT_nodes(phi: MetricField, psi: MetricField, T: DirectionSection, f: SmoothMap, mesh) -> dict:
    """Per-node pieces of the ratio functional (columns of the CSV export)."""
    X, J = f.evaluate(mesh.nodes)
    Tv = T.at_nodes(mesh.nodes, X)
    phi_inv = _phi_inverse(phi, mesh)
    psi_x = psi(X)
    nJ = pairing(phi_inv, psi_x, J, J)
    nT = pairing(phi_inv, psi_x, Tv, Tv)
    inner = pairing(phi_inv, psi_x, J, Tv)
    scale = np.sqrt(np.abs(nJ * nT))
    bad = ~(np.abs(inner) > 1e-14 * scale) | ~np.isfinite(inner)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise ExcludedSetError(
            f"<df, T> vanishes at node {k} a={tuple(float(c) for c in mesh.nodes[k])}",
            node=k,
            coords=tuple(mesh.nodes[k]),
        )
    ratio = nJ * nT / inner**2
    return {
        "norm_df2": nJ,
        "norm_T2": nT,
        "inner": inner,
        "cosine": inner / scale,
        "ratio": ratio,
        "integrand": 0.5 * ratio,
        "weight": mesh.weights,
    }


def lagrangian_LT(phi: MetricField, psi: MetricField, T: DirectionSection, f: SmoothMap, mesh) -> float:
    """``1/2 sum_w |df|^2 |T|^2 / <df, T>^2``; at least half the mesh volume by Cauchy-Schwarz."""
    return mesh.integrate(lagrangian_LT_nodes(phi, psi, T, f, mesh)["integrand"])


def system_E_residual(T: DirectionSection, f: SmoothMap, mesh: MeshQuadrature):
    """``(max residual, per-node table)`` of ``d f^i / d a^alpha = T^i_alpha(a, f(a))``."""
    X, J = f.evaluate(mesh.nodes)
    R = J - T.at_nodes(mesh.nodes, X)
    per_node = np.max(np.abs(R).reshape(len(R), -1), axis=1)
    table = {f"a{al}": mesh.nodes[:, al] for al in range(mesh.dim)}
    for i in range(f.n):
        for al in range(f.m):
            table[f"res_{i}_{al}"] = R[:, i, al]
    table["max_abs"] = per_node
    return float(np.max(per_node)), table


def perturb(f: SmoothMap, eta: SmoothMap, eps: float) -> SmoothMap:
    """``f + eps * eta``."""

    def evaluator(nodes):
        fv, fj = f.evaluate(nodes)
        ev, ej = eta.evaluate(nodes)
        return fv + eps * ev, fj + eps * ej

    return SmoothMap(None, f.m, f.n, evaluator=evaluator, name=f"{f.name}+eps*eta")


def first_variation(functional: Callable[[SmoothMap], float], f: SmoothMap, eta: SmoothMap, eps: float) -> float:
    """Central difference ``(F(f + eps eta) - F(f - eps eta)) / (2 eps)``."""
    return (functional(perturb(f, eta, eps)) - functional(perturb(f, eta, -eps))) / (2.0 * eps)


@dataclass(frozen=True)
class _Bump:
    lo: np.ndarray
    hi: np.ndarray
    coeffs: np.ndarray  # (n, m + 1): constant plus linear terms per output

    def __call__(self, a):
        base = 1.0
        for al in range(len(self.lo)):
            width = self.hi[al] - self.lo[al]
            base = base * (4.0 * (a[al] - self.lo[al]) * (self.hi[al] - a[al]) / (width * width))
        out = []
        for c in self.coeffs:
            poly = c[0]
            for al in range(len(self.lo)):
                mid = 0.5 * (self.lo[al] + self.hi[al])
                poly = poly + c[al + 1] * (a[al] - mid) / (self.hi[al] - self.lo[al])
            out.append(base * poly)
        return out


def boundary_bumps(mesh: MeshQuadrature, n: int, count: int, seed: int = 0) -> list[SmoothMap]:
    """Seeded random polynomial perturbations vanishing on the boundary of the box."""
    rng = np.random.default_rng(seed)
    bumps = []
    for k in range(count):
        coeffs = rng.uniform(-1.0, 1.0, size=(n, mesh.dim + 1))
        bumps.append(SmoothMap(_Bump(mesh.lo, mesh.hi, coeffs), mesh.dim, n, name=f"bump{k}"))
    return bumps

