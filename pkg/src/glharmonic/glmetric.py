"""Conformal generalized Lagrange metrics ``g_ij(x, y) = exp(2 sigma(x, y)) gamma_ij(x)``.

The space carries the nonlinear connection ``N^i_j = G^i_{jk}(x) y^k`` built
from the Christoffel symbols of ``gamma``.  Everything here is evaluated at one
point ``(x, y)`` of the tangent bundle; derivatives with respect to
``z = (x, y)`` come from the jet engine and are assembled with explicit
product rules.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jets
from .chart import MetricField
from .errors import DomainError, SingularLocusError
from .riemannian import CURVATURE_CONVENTION, christoffel_with_derivative, riemann_from_christoffel

__all__ = [
    "GLMetric",
    "DConnection",
    "LEVI_CIVITA",
    "EMTensors",
    "SigmaDerived",
    "MaxwellResiduals",
    "EinsteinComponents",
    "gl_eval",
    "nonlinear_connection",
    "delta_x",
    "em_tensors",
    "sigma_derived",
    "maxwell_residuals",
    "einstein_components",
    "local_geometry",
    "field_equations",
]


@dataclass(frozen=True)
class GLMetric:
    """``exp(2 sigma(x, y)) * gamma(x)`` with a declared singular locus.

    ``sigma`` takes two coordinate sequences ``(x, y)``.  ``singular(x, y)``
    returns True on the excluded set; evaluation there raises
    :class:`SingularLocusError`.
    """

    gamma: MetricField
    sigma: Callable[[Sequence, Sequence], object]
    singular: Callable[[np.ndarray, np.ndarray], bool] | None = None
    name: str = "gl"

    @property
    def dim(self) -> int:
        return self.gamma.dim

    def check(self, x, y) -> None:
        if self.singular is not None and self.singular(np.asarray(x, float), np.asarray(y, float)):
            raise SingularLocusError(
                f"{self.name}: point x={tuple(map(float, x))}, y={tuple(map(float, y))} lies on the singular locus"
            )

    def sigma_value(self, x, y) -> float:
        self.check(x, y)
        with np.errstate(all="ignore"):
            s = self.sigma(list(np.asarray(x, float)), list(np.asarray(y, float)))
        s = float(s)
        if not np.isfinite(s):
            raise DomainError("non-finite sigma", at=np.concatenate([x, y]))
        return s

    def sigma_jets(self, x, y):
        """``(sigma, d sigma, d^2 sigma)`` with respect to ``z = (x, y)``."""
        self.check(x, y)
        n = self.dim
        z = np.concatenate([np.asarray(x, float), np.asarray(y, float)])
        return jets.taylor(lambda w: self.sigma(w[:n], w[n:]), z)

    def __call__(self, x, y) -> np.ndarray:
        return gl_eval(self, x, y)

    def lagrangian(self, w):
        """``h_ij(x, v) v^i v^j`` on a coordinate sequence ``w = (x, v)``; jet-friendly."""
        n = self.dim
        x, v = w[:n], w[n:]
        gm = self.gamma.eval(x)
        quad = 0.0
        for i in range(n):
            for j in range(n):
                quad = quad + gm[i][j] * v[i] * v[j]
        return jets.exp(2.0 * self.sigma(x, v)) * quad

    # catalog ------------------------------------------------------------------
    @classmethod
    def riemannian(cls, gamma: MetricField, name: str | None = None) -> "GLMetric":
        return cls(gamma, lambda x, y: 0.0, None, name or f"riemannian({gamma.name})")

    @classmethod
    def direction_ratio(cls, xi: Callable[[Sequence], Sequence], psi: MetricField, name="direction-ratio"):
        """``|xi|^2_psi / <xi, y>^2_psi * psi_ij``, singular where ``<xi, y>_psi = 0``."""
        n = psi.dim

        def pairing(x, a, b):
            gm = psi.eval(x)
            total = 0.0
            for i in range(n):
                for j in range(n):
                    total = total + gm[i][j] * a[i] * b[j]
            return total

        def sigma(x, y):
            v = xi(x)
            return 0.5 * jets.log(pairing(x, v, v)) - jets.log(jets.absolute(pairing(x, v, y)))

        def singular(x, y):
            with np.errstate(all="ignore"):
                v = np.asarray([float(c) for c in xi(list(x))])
                p = psi(x)
            return bool(v @ p @ v == 0.0 or v @ p @ y == 0.0)

        return cls(psi, sigma, singular, name)

    @classmethod
    def inverse_square(cls) -> "GLMetric":
        """``h(x, y) = 1 / y^2`` on the line, singular at ``y = 0``."""
        return cls(
            MetricField.euclidean(1),
            lambda x, y: -jets.log(jets.absolute(y[0])),
            lambda x, y: bool(y[0] == 0.0),
            "inverse-square",
        )


@dataclass(frozen=True)
class DConnection:
    """Coefficients of the h- and v-covariant derivatives used for ``|k`` and ``|_k``.

    ``horizontal(local)`` and ``vertical(local)`` return ``(n, n, n)`` arrays
    ``L^i_{jk}`` and ``C^i_{jk}``.
    """

    horizontal: Callable[["LocalGeometry"], np.ndarray]
    vertical: Callable[["LocalGeometry"], np.ndarray]
    description: str


LEVI_CIVITA = DConnection(
    horizontal=lambda loc: loc.christoffel,
    vertical=lambda loc: np.zeros((loc.n,) * 3),
    description=(
        "h-derivative |k: delta/delta x^k with Levi-Civita symbols of gamma; "
        "v-derivative |_k: partial/partial y^k with zero vertical coefficients; "
        "N^i_j = G^i_jk(x) y^k. " + CURVATURE_CONVENTION
    ),
)


@dataclass
class LocalGeometry:
    """All first- and second-order data of a GL metric at one ``(x, y)``."""

    n: int
    x: np.ndarray
    y: np.ndarray
    gamma: np.ndarray
    gamma_inv: np.ndarray
    christoffel: np.ndarray
    d_christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    sigma: float
    d_sigma: np.ndarray
    dd_sigma: np.ndarray
    connection: DConnection = field(default=LEVI_CIVITA)

    def __post_init__(self):
        n = self.n
        self.N = np.einsum("pik,k->pi", self.christoffel, self.y)
        # dN[p, i, z]
        self.dN = np.concatenate(
            [np.einsum("pikm,k->pim", self.d_christoffel, self.y), self.christoffel], axis=2
        )
        self.S = self.d_sigma[n:]
        self.dS = self.dd_sigma[n:, :]
        self.D = self.d_sigma[:n] - self.N.T @ self.S
        self.dD = (
            self.dd_sigma[:n, :]
            - np.einsum("piz,p->iz", self.dN, self.S)
            - np.einsum("pi,pz->iz", self.N, self.dS)
        )
        e2s = np.exp(2.0 * self.sigma)
        self.g = e2s * self.gamma
        d_gamma = np.zeros((n, n, 2 * n))
        d_gamma[:, :, :n] = self._d_gamma
        self.dg = 2.0 * e2s * self.gamma[:, :, None] * self.d_sigma[None, None, :] + e2s * d_gamma
        dy = np.concatenate([np.zeros((n, n)), np.eye(n)], axis=1)
        self.G = self.g @ self.y
        self.dG = np.einsum("ipz,p->iz", self.dg, self.y) + self.g @ dy
        self.L = self.connection.horizontal(self)
        self.C = self.connection.vertical(self)

    _d_gamma: np.ndarray = field(default=None, repr=False)

    def horizontal(self, dq: np.ndarray) -> np.ndarray:
        """``delta Q / delta x^k`` from the full ``z``-derivative (trailing axis)."""
        n = self.n
        return dq[..., :n] - np.einsum("...q,qk->...k", dq[..., n:], self.N)

    def vertical(self, dq: np.ndarray) -> np.ndarray:
        return dq[..., self.n :]

    def h_cov_covector(self, X, dX):
        return self.horizontal(dX) - np.einsum("pik,p->ik", self.L, X)

    def v_cov_covector(self, X, dX):
        return self.vertical(dX) - np.einsum("pik,p->ik", self.C, X)

    def h_cov_2form(self, W, dW):
        coef = self.L
        return (
            self.horizontal(dW)
            - np.einsum("pik,pj->ijk", coef, W)
            - np.einsum("pjk,ip->ijk", coef, W)
        )

    def v_cov_2form(self, W, dW):
        coef = self.C
        return (
            self.vertical(dW)
            - np.einsum("pik,pj->ijk", coef, W)
            - np.einsum("pjk,ip->ijk", coef, W)
        )


def local_geometry(g: GLMetric, x, y, connection: DConnection = LEVI_CIVITA) -> LocalGeometry:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = g.dim
    if x.shape != (n,) or y.shape != (n,):
        raise ValueError(f"expected x and y of length {n}")
    s, ds, dds = g.sigma_jets(x, y)
    gam, dgam, gm, ginv = christoffel_with_derivative(g.gamma, x)
    _, dgm, _ = g.gamma.derivatives(x)
    riem = riemann_from_christoffel(gam, dgam)
    ricci = np.einsum("kijk->ij", riem)
    scalar = float(np.einsum("ij,ij->", ginv, ricci))
    return LocalGeometry(
        n, x, y, gm, ginv, gam, dgam, riem, ricci, scalar, float(s), ds, dds,
        connection=connection, _d_gamma=0.5 * (dgm + np.swapaxes(dgm, 0, 1)),
    )


def gl_eval(g: GLMetric, x, y) -> np.ndarray:
    """``exp(2 sigma) gamma(x)``; raises on the singular locus."""
    s = g.sigma_value(x, y)
    return np.exp(2.0 * s) * g.gamma(x)


def nonlinear_connection(g: GLMetric, x, y) -> np.ndarray:
    """``N[i, j] = N^i_j = G^i_{jk}(x) y^k``."""
    from .riemannian import christoffel

    return np.einsum("ijk,k->ij", christoffel(g.gamma, x), np.asarray(y, float))


def delta_x(g: GLMetric, fn: Callable[[Sequence, Sequence], object], x, y) -> np.ndarray:
    """Horizontal derivatives ``delta f / delta x^i = d_i f - N^j_i d f / d y^j``."""
    n = g.dim
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    _, d, _ = jets.taylor(lambda w: fn(w[:n], w[n:]), np.concatenate([x, y]))
    N = nonlinear_connection(g, x, y)
    return d[:n] - N.T @ d[n:]


@dataclass(frozen=True)
class EMTensors:
    F: np.ndarray
    f: np.ndarray


def _em(loc: LocalGeometry):
    G, dG, D, dD, S, dS = loc.G, loc.dG, loc.D, loc.dD, loc.S, loc.dS
    F = np.outer(G, D) - np.outer(D, G)
    f = np.outer(G, S) - np.outer(S, G)
    dF = np.einsum("iz,j->ijz", dG, D) + np.einsum("i,jz->ijz", G, dD)
    dF = dF - np.swapaxes(dF, 0, 1)
    df = np.einsum("iz,j->ijz", dG, S) + np.einsum("i,jz->ijz", G, dS)
    df = df - np.swapaxes(df, 0, 1)
    return F, f, dF, df


def em_tensors(g: GLMetric, x, y, connection: DConnection = LEVI_CIVITA) -> EMTensors:
    """``F_ij = (g_ip dsigma/dx^j - g_jp dsigma/dx^i) y^p`` (horizontal) and its vertical twin ``f_ij``."""
    F, f, _, _ = _em(local_geometry(g, x, y, connection))
    return EMTensors(F, f)


@dataclass(frozen=True)
class SigmaDerived:
    sigma_H: float
    sigma_V: float
    sigma_bar: float
    sigma_dot: float
    sigma_ij: np.ndarray
    sigma_dot_ab: np.ndarray
    t_ij: np.ndarray

    @property
    def t_antisymmetry(self) -> float:
        """Max-norm of the antisymmetric part of ``t_ij`` (it is not symmetrized)."""
        return float(np.max(np.abs(0.5 * (self.t_ij - self.t_ij.T))))


def _sigma_derived(loc: LocalGeometry) -> SigmaDerived:
    n = loc.n
    gm, ginv, D, S, y = loc.gamma, loc.gamma_inv, loc.D, loc.S, loc.y
    sH = float(D @ ginv @ D)
    sV = float(S @ ginv @ S)
    s_ij = loc.h_cov_covector(D, loc.dD) + np.outer(D, D) - 0.5 * gm * sH
    s_bar = float(np.einsum("ij,ij->", ginv, s_ij))
    sd_ab = loc.v_cov_covector(S, loc.dS) + np.outer(S, S) - 0.5 * gm * sV
    s_dot = float(np.einsum("ij,ij->", ginv, sd_ab))
    riem = loc.riemann
    t = (n - 2) * (gm * s_bar - s_ij)
    t = t + gm * float(np.einsum("st,s,tp,p->", loc.ricci, y, ginv, S))
    t = t + np.outer(S, np.einsum("atja,t->j", riem, y))
    t = t - np.einsum("is,ap,p,stja,t->ij", gm, ginv, S, riem, y)
    return SigmaDerived(sH, sV, s_bar, s_dot, s_ij, sd_ab, t)


def sigma_derived(g: GLMetric, x, y, connection: DConnection = LEVI_CIVITA) -> SigmaDerived:
    return _sigma_derived(local_geometry(g, x, y, connection))


def _cyclic(T):
    return T + np.transpose(T, (1, 2, 0)) + np.transpose(T, (2, 0, 1))


@dataclass(frozen=True)
class MaxwellResiduals:
    """LHS minus RHS of the three Maxwell equations, indexed ``[i, j, k]``."""

    res_h: np.ndarray
    res_mixed: np.ndarray
    res_v: np.ndarray

    def maxima(self) -> tuple[float, float, float]:
        return tuple(float(np.max(np.abs(r))) for r in (self.res_h, self.res_mixed, self.res_v))


def _maxwell(loc: LocalGeometry) -> MaxwellResiduals:
    F, f, dF, df = _em(loc)
    F_h = loc.h_cov_2form(F, dF)
    F_v = loc.v_cov_2form(F, dF)
    f_h = loc.h_cov_2form(f, df)
    f_v = loc.v_cov_2form(f, df)
    # g_ip r^h_{qjk} (d sigma / d y^h) y^p y^q
    source = np.einsum("i,hqjk,h,q->ijk", loc.G, loc.riemann, loc.S, loc.y)
    return MaxwellResiduals(
        _cyclic(F_h) + _cyclic(source),
        _cyclic(F_v) + _cyclic(f_h),
        _cyclic(f_v),
    )


def maxwell_residuals(g: GLMetric, x, y, connection: DConnection = LEVI_CIVITA) -> MaxwellResiduals:
    """Residual arrays of the three Maxwell equations; reported, never asserted."""
    return _maxwell(local_geometry(g, x, y, connection))


@dataclass(frozen=True)
class EinsteinComponents:
    T_H: np.ndarray
    T_V: np.ndarray


def _einstein(loc: LocalGeometry, derived: SigmaDerived, coupling: float) -> EinsteinComponents:
    if coupling == 0.0:
        raise ValueError("gravitational coupling constant must be nonzero")
    n = loc.n
    gm = loc.gamma
    T_H = (loc.ricci - 0.5 * loc.scalar * gm + derived.t_ij) / coupling
    T_V = (2 - n) * (derived.sigma_dot_ab - derived.sigma_dot * gm) / coupling
    return EinsteinComponents(T_H, T_V)


def einstein_components(
    g: GLMetric, x, y, coupling: float, connection: DConnection = LEVI_CIVITA
) -> EinsteinComponents:
    """Energy-momentum components forced by the h- and v-Einstein equations."""
    if coupling == 0.0:
        raise ValueError("gravitational coupling constant must be nonzero")
    loc = local_geometry(g, x, y, connection)
    return _einstein(loc, _sigma_derived(loc), coupling)


def field_equations(g: GLMetric, x, y, coupling: float = 1.0, connection: DConnection = LEVI_CIVITA) -> dict:
    """Every point quantity at once (one jet evaluation); used by the report pipeline."""
    loc = local_geometry(g, x, y, connection)
    F, f, _, _ = _em(loc)
    derived = _sigma_derived(loc)
    return {
        "em": EMTensors(F, f),
        "sigma": derived,
        "maxwell": _maxwell(loc),
        "einstein": _einstein(loc, derived, coupling),
        "local": loc,
    }

