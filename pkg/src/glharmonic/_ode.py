"""Fixed-step classical Runge-Kutta shared by the flow integrators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import GLHarmonicError, IntegrationError


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled curve with positions and velocities."""

    times: np.ndarray
    states: np.ndarray
    velocities: np.ndarray

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return len(self.times)


def time_grid(t_span, steps: int) -> np.ndarray:
    t0, t1 = (float(t) for t in t_span)
    if steps < 1:
        raise ValueError("steps must be positive")
    if not t1 > t0:
        raise ValueError("t_span must be increasing")
    return np.linspace(t0, t1, steps + 1)


def rk4(rhs: Callable[[float, np.ndarray], np.ndarray], y0, times: np.ndarray) -> np.ndarray:
    """Integrate ``y' = rhs(t, y)`` over the given uniform ``times``."""
    y = np.array(y0, dtype=float)
    out = np.empty((len(times),) + y.shape)
    out[0] = y
    h = times[1] - times[0]
    for n in range(len(times) - 1):
        t = times[n]
        try:
            k1 = rhs(t, y)
            k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
            k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
            k4 = rhs(t + h, y + h * k3)
        except (GLHarmonicError, ArithmeticError, np.linalg.LinAlgError) as exc:
            raise IntegrationError(f"step failed: {exc}", t) from exc
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationError("non-finite state", t)
        out[n + 1] = y
    return out
