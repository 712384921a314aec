"""Levi-Civita connection, curvature, covariant derivatives and geodesics of a metric.

Index conventions
-----------------
``christoffel(...)[i, j, k]`` is the symbol with upper index ``i``.
``riemann[i, j, k, l]`` is ``r^i_{jkl}``; the Ricci tensor is the contraction
``r_ij = r^k_{ijk}`` and the sign of ``r`` is chosen so that this contraction is
positive on the round sphere (``r^i_{jkl} = d_l G^i_{jk} - d_k G^i_{jl} + ...``).
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from . import jets
from ._ode import Trajectory, rk4, time_grid
from .chart import MetricField, inverse_det
from .errors import DomainError

__all__ = [
    "Curvature",
    "CurvatureField",
    "ChristoffelField",
    "CURVATURE_CONVENTION",
    "christoffel",
    "christoffel_with_derivative",
    "curvature",
    "riemann_from_christoffel",
    "covariant_derivative_2form",
    "riemann_geodesic",
    "covariant_hessian",
    "second_fundamental_form_residual",
]

CURVATURE_CONVENTION = (
    "r^i_{jkl} = d_l G^i_{jk} - d_k G^i_{jl} + G^p_{jk} G^i_{pl} - G^p_{jl} G^i_{pk}; "
    "r_ij = r^k_{ijk}; r = gamma^{ij} r_ij"
)


def _metric_jets(gamma: MetricField, x):
    g, dg, ddg = gamma.derivatives(x)
    # symmetrize so that lower-index symmetry of the symbols is exact
    g = 0.5 * (g + np.swapaxes(g, 0, 1))
    dg = 0.5 * (dg + np.swapaxes(dg, 0, 1))
    ddg = 0.5 * (ddg + np.swapaxes(ddg, 0, 1))
    ddg = 0.5 * (ddg + np.swapaxes(ddg, 2, 3))
    return g, dg, ddg


def _bracket(dg):
    # B[l, j, k] = d_j g_lk + d_k g_jl - d_l g_jk
    return (
        np.transpose(dg, (0, 2, 1))
        + np.transpose(dg, (1, 0, 2))
        - np.transpose(dg, (2, 0, 1))
    )


def _christoffel_from(ginv, dg):
    gam = 0.5 * np.einsum("il,ljk->ijk", ginv, _bracket(dg))
    return 0.5 * (gam + np.swapaxes(gam, 1, 2))


def christoffel(gamma: MetricField, x) -> np.ndarray:
    """Symbols ``G^i_{jk}`` of the Levi-Civita connection at ``x``."""
    g, dg, _ = _metric_jets(gamma, x)
    ginv, _ = inverse_det(g, at=x)
    return _christoffel_from(ginv, dg)


def christoffel_with_derivative(gamma: MetricField, x):
    """``(G, dG)`` with ``dG[i, j, k, m] = d_m G^i_{jk}``; also returns the metric pieces."""
    g, dg, ddg = _metric_jets(gamma, x)
    ginv, _ = inverse_det(g, at=x)
    bracket = _bracket(dg)
    gam = 0.5 * np.einsum("il,ljk->ijk", ginv, bracket)
    gam = 0.5 * (gam + np.swapaxes(gam, 1, 2))
    dginv = -np.einsum("ia,abm,bl->ilm", ginv, dg, ginv)
    dbracket = (
        np.transpose(ddg, (0, 2, 1, 3))
        + np.transpose(ddg, (1, 0, 2, 3))
        - np.transpose(ddg, (2, 0, 1, 3))
    )
    dgam = 0.5 * (
        np.einsum("ilm,ljk->ijkm", dginv, bracket) + np.einsum("il,ljkm->ijkm", ginv, dbracket)
    )
    dgam = 0.5 * (dgam + np.swapaxes(dgam, 1, 2))
    return gam, dgam, g, ginv


def riemann_from_christoffel(gam, dgam) -> np.ndarray:
    return (
        dgam
        - np.einsum("ijkl->ijlk", dgam)
        + np.einsum("pjk,ipl->ijkl", gam, gam)
        - np.einsum("pjl,ipk->ijkl", gam, gam)
    )


@dataclass(frozen=True)
class Curvature:
    """Curvature sample at one point."""

    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    christoffel: np.ndarray
    metric: np.ndarray
    metric_inverse: np.ndarray


def curvature(gamma: MetricField, x) -> Curvature:
    gam, dgam, g, ginv = christoffel_with_derivative(gamma, x)
    riem = riemann_from_christoffel(gam, dgam)
    ricci = np.einsum("kijk->ij", riem)
    scalar = float(np.einsum("ij,ij->", ginv, ricci))
    return Curvature(riem, ricci, scalar, gam, g, ginv)


@dataclass(frozen=True)
class ChristoffelField:
    metric: MetricField

    def __call__(self, x) -> np.ndarray:
        return christoffel(self.metric, x)


@dataclass(frozen=True)
class CurvatureField:
    metric: MetricField

    def riemann(self, x) -> np.ndarray:
        return curvature(self.metric, x).riemann

    def ricci(self, x) -> np.ndarray:
        return curvature(self.metric, x).ricci

    def scalar(self, x) -> float:
        return curvature(self.metric, x).scalar


def covariant_derivative_2form(gamma: MetricField, omega, x, d_omega=None) -> np.ndarray:
    """``w_{ij|k} = dw_ij/dx^k - G^p_{ik} w_pj - G^p_{jk} w_ip``.

    ``omega`` is either a matrix-valued closure of ``x`` (its partials are then
    taken with jets) or the value matrix, in which case ``d_omega[i, j, k]``
    must hold the caller's derivative (e.g. the horizontal derivative of a
    tensor that also depends on a direction).
    """
    x = np.asarray(x, dtype=float)
    if d_omega is None:
        if isinstance(omega, MetricField):
            omega = omega.eval
        w, dw, _ = jets.taylor_tensor(omega, x)
    else:
        w, dw = np.asarray(omega, dtype=float), np.asarray(d_omega, dtype=float)
    gam = christoffel(gamma, x)
    return dw - np.einsum("pik,pj->ijk", gam, w) - np.einsum("pjk,ip->ijk", gam, w)


def riemann_geodesic(gamma: MetricField, x0, v0, t_span, steps: int) -> Trajectory:
    """RK4 solution of ``x'' + G(x)(x', x') = 0``."""
    if steps < 2:
        raise ValueError("steps must be at least 2")
    n = gamma.dim
    times = time_grid(t_span, steps)

    def rhs(t, s):
        x, v = s[:n], s[n:]
        gam = christoffel(gamma, x)
        return np.concatenate([v, -np.einsum("ijk,j,k->i", gam, v, v)])

    out = rk4(rhs, np.concatenate([np.asarray(x0, float), np.asarray(v0, float)]), times)
    return Trajectory(times, out[:, :n], out[:, n:])


def covariant_hessian(f, gamma: MetricField, x):
    """``(Hess f, df)`` with ``Hess_ij = d_i d_j f - G^k_{ij} d_k f``."""
    fn = f.eval if hasattr(f, "eval") else f
    _, df, ddf = jets.taylor(fn, x)
    gam = christoffel(gamma, x)
    return ddf - np.einsum("kij,k->ij", gam, df), df


def second_fundamental_form_residual(f, gamma: MetricField, x) -> float:
    """Max ``|II(t_a, t_b)|`` over an orthonormal frame of the level set of ``f`` through ``x``.

    ``II = Hess f / |grad f|``; zero iff the level hypersurface is totally
    geodesic at ``x``.
    """
    x = np.asarray(x, dtype=float)
    hess, df = covariant_hessian(f, gamma, x)
    g = gamma(x)
    ginv, _ = inverse_det(g, at=x)
    norm2 = float(df @ ginv @ df)
    if not norm2 > 0.0 or not np.isfinite(norm2):
        raise DomainError("vanishing gradient: level set is not a hypersurface", at=x)
    norm = np.sqrt(norm2)
    normal = ginv @ df / norm
    frame: list[np.ndarray] = [normal]
    m = len(x)
    for e in np.eye(m):
        w = e.copy()
        for u in frame:
            w = w - (u @ g @ w) * u
        length = np.sqrt(max(float(w @ g @ w), 0.0))
        if length > 1e-10:
            frame.append(w / length)
        if len(frame) == m:
            break
    tangents = np.array(frame[1:])
    if len(tangents) == 0:
        return 0.0
    second = tangents @ hess @ tangents.T / norm
    return float(np.max(np.abs(second)))
