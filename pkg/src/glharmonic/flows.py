"""Orbits of vector fields and geodesics of generalized Lagrange metrics.

Geodesics are the Euler-Lagrange curves of ``L(x, v) = h_ij(x, v) v^i v^j``.
The second-order system is reduced to ``v' = M^{-1} (L_x - L_vx v)`` with the
mass matrix ``M = L_vv``; all partials come from one jet evaluation of ``L``.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from . import jets
from ._ode import Trajectory, rk4, time_grid
from .errors import DegenerateMetricError, DomainError, IntegrationError
from .glmetric import GLMetric

__all__ = [
    "Trajectory",
    "integrate_orbit",
    "gl_geodesic",
    "gl_acceleration",
    "el_residual",
    "sample_curve",
    "lagrangian_along",
    "energy_function_along",
]


def _vector(xi, x) -> np.ndarray:
    with np.errstate(all="ignore"):
        out = np.array([float(c) for c in xi(list(x))])
    if not np.all(np.isfinite(out)):
        raise DomainError("non-finite vector field value", at=x)
    return out


def integrate_orbit(xi: Callable[[Sequence], Sequence], x0, t_span, steps: int) -> Trajectory:
    """RK4 solution of ``x' = xi(x)``."""
    times = time_grid(t_span, steps)
    states = rk4(lambda t, x: _vector(xi, x), np.atleast_1d(np.asarray(x0, float)), times)
    velocities = np.array([_vector(xi, x) for x in states])
    return Trajectory(times, states, velocities)


def _lagrangian_jets(h: GLMetric, x, v):
    h.check(x, v)
    return jets.taylor(h.lagrangian, np.concatenate([x, v]))


def gl_acceleration(h: GLMetric, x, v) -> np.ndarray:
    n = h.dim
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    _, d, dd = _lagrangian_jets(h, x, v)
    mass = dd[n:, n:]
    rhs = d[:n] - dd[n:, :n] @ v
    try:
        chol = np.linalg.cholesky(mass)
    except np.linalg.LinAlgError:
        raise DegenerateMetricError(
            "mass matrix d2L/dv2 is not positive definite", at=np.concatenate([x, v])
        ) from None
    return np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))


def gl_geodesic(h: GLMetric, x0, v0, t_span, steps: int) -> Trajectory:
    """Euler-Lagrange flow of ``h_ij(x, x') x'^i x'^j`` by fixed-step RK4."""
    if steps < 2:
        raise ValueError("steps must be at least 2")
    n = h.dim
    times = time_grid(t_span, steps)

    def rhs(t, s):
        return np.concatenate([s[n:], gl_acceleration(h, s[:n], s[n:])])

    out = rk4(rhs, np.concatenate([np.asarray(x0, float), np.asarray(v0, float)]), times)
    return Trajectory(times, out[:, :n], out[:, n:])


def sample_curve(curve: Callable[[object], Sequence], t_span, steps: int) -> Trajectory:
    """Sample a jet-friendly closed-form curve ``t -> x(t)`` with exact velocities."""
    times = time_grid(t_span, steps)
    value, grad, _ = jets.taylor_tensor(lambda t: list(curve(t[0])), times[:, None])
    return Trajectory(times, value, grad[..., 0])


def _lagrangian_batch(h: GLMetric, traj: Trajectory):
    """``(L, dL, d2L)`` at every sample in one batched jet evaluation."""
    for t, x, v in zip(traj.times, traj.states, traj.velocities):
        try:
            h.check(x, v)
        except Exception as exc:
            raise IntegrationError(f"cannot evaluate L: {exc}", t) from exc
    z = np.concatenate([traj.states, traj.velocities], axis=1)
    try:
        return jets.taylor_tensor(h.lagrangian, z)
    except DomainError as exc:
        k = int(np.argmin(np.linalg.norm(z - np.asarray(exc.at, float), axis=1))) if exc.at is not None else 0
        raise IntegrationError(f"cannot evaluate L: {exc}", traj.times[k]) from exc


def _momenta(h: GLMetric, traj: Trajectory):
    n = h.dim
    _, d, _ = _lagrangian_batch(h, traj)
    return d[:, n:], d[:, :n]


def el_residual(h: GLMetric, traj: Trajectory) -> np.ndarray:
    """``|d/dt L_v - L_x|`` at interior nodes, time derivative by central differences."""
    if len(traj) < 3:
        raise ValueError("need at least three samples")
    pv, lx = _momenta(h, traj)
    dt = traj.step
    dp = (pv[2:] - pv[:-2]) / (2.0 * dt)
    return np.linalg.norm(dp - lx[1:-1], axis=1)


def lagrangian_along(h: GLMetric, traj: Trajectory) -> np.ndarray:
    return _lagrangian_batch(h, traj)[0]


def energy_function_along(h: GLMetric, traj: Trajectory) -> np.ndarray:
    """``v . L_v - L``, the first integral of any autonomous Lagrangian."""
    value, d, _ = _lagrangian_batch(h, traj)
    return np.einsum("ki,ki->k", traj.velocities, d[:, h.dim :]) - value
