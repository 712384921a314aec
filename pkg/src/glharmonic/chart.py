"""Coordinate fields with exact derivatives, and small dense metric algebra."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import jets
from .errors import DegenerateMetricError, DomainError

__all__ = [
    "ScalarField",
    "MetricField",
    "grad",
    "hessian",
    "metric_inverse_det",
    "inverse_det",
]


@dataclass(frozen=True)
class ScalarField:
    """A real function of ``dim`` chart coordinates.

    ``eval`` receives a sequence of coordinates (floats, arrays or jets) and
    must be written with the functions of :mod:`glharmonic.jets` so it can be
    differentiated.
    """

    eval: Callable[[Sequence], object]
    dim: int

    def __call__(self, at) -> float:
        with np.errstate(all="ignore"):
            value = self.eval(list(np.asarray(at, dtype=float)))
        value = float(value.value if isinstance(value, jets.Jet) else value)
        if not np.isfinite(value):
            raise DomainError("non-finite field value", at=at)
        return value


def _callable(field):
    return field.eval if isinstance(field, (ScalarField, MetricField)) else field


def grad(field, at) -> np.ndarray:
    """Exact forward-mode gradient of a scalar field."""
    _, g, _ = jets.taylor(_callable(field), at)
    return np.array(g)


def hessian(field, at) -> np.ndarray:
    """Exact matrix of second partials (bit-symmetric)."""
    _, _, h = jets.taylor(_callable(field), at)
    return np.array(h)


def inverse_det(matrix, at=None) -> tuple[np.ndarray, float]:
    """Inverse and determinant of a symmetric positive definite matrix (or a stack)."""
    m = np.asarray(matrix, dtype=float)
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise DegenerateMetricError("metric is not positive definite", at=at) from None
    diag = np.diagonal(chol, axis1=-2, axis2=-1)
    det = np.prod(diag, axis=-1) ** 2
    eye = np.broadcast_to(np.eye(m.shape[-1]), m.shape)
    linv = np.linalg.solve(chol, eye)
    inv = np.swapaxes(linv, -1, -2) @ linv
    inv = 0.5 * (inv + np.swapaxes(inv, -1, -2))
    return inv, (float(det) if np.ndim(det) == 0 else det)


@dataclass(frozen=True)
class MetricField:
    """Position-dependent symmetric positive definite ``dim x dim`` tensor.

    ``eval`` maps a coordinate sequence to nested lists (rows of entries).
    """

    eval: Callable[[Sequence], object]
    dim: int
    name: str = "metric"

    def __call__(self, at) -> np.ndarray:
        """Matrix at one point ``(dim,)`` or a stack for points ``(N, dim)``."""
        p = np.asarray(at, dtype=float)
        batch = p.shape[:-1]
        with np.errstate(all="ignore"):
            out = self.eval([p[..., i] for i in range(self.dim)])
        rows = [
            np.stack([np.broadcast_to(np.asarray(e, dtype=float), batch) for e in row], axis=-1)
            for row in out
        ]
        m = np.stack(rows, axis=-2)
        if not np.all(np.isfinite(m)):
            raise DomainError(f"non-finite {self.name} entry", at=p if not batch else None)
        return m

    def derivatives(self, at):
        """``(g, dg, ddg)`` with ``dg[i, j, k] = d_k g_ij`` and ``ddg[i, j, k, l] = d_k d_l g_ij``."""
        return jets.taylor_tensor(self.eval, at)

    def inverse_det(self, at):
        return metric_inverse_det(self, at)

    # catalog ------------------------------------------------------------------
    @classmethod
    def euclidean(cls, dim: int) -> "MetricField":
        eye = np.eye(dim).tolist()
        return cls(lambda x: eye, dim, name=f"euclidean{dim}")

    @classmethod
    def constant(cls, matrix) -> "MetricField":
        m = np.asarray(matrix, dtype=float)
        rows = m.tolist()
        return cls(lambda x: rows, m.shape[0], name="constant")

    @classmethod
    def diagonal(cls, entries: Callable[[Sequence], Sequence], dim: int, name="diagonal") -> "MetricField":
        def ev(x):
            d = entries(x)
            return [[d[i] if i == j else 0.0 for j in range(dim)] for i in range(dim)]

        return cls(ev, dim, name=name)

    @classmethod
    def sphere(cls, radius: float = 1.0) -> "MetricField":
        """Round 2-sphere in (theta, phi) coordinates."""
        r2 = radius * radius
        return cls.diagonal(lambda x: [r2, r2 * jets.sin(x[0]) ** 2], 2, name="sphere")

    @classmethod
    def conformal(cls, log_factor: Callable[[Sequence], object], base: "MetricField") -> "MetricField":
        """``exp(2 u) * base`` for a scalar closure ``u``."""

        def ev(x):
            factor = jets.exp(2.0 * log_factor(x))
            return [[factor * e for e in row] for row in base.eval(x)]

        return cls(ev, base.dim, name=f"conformal({base.name})")


def metric_inverse_det(g: MetricField, at) -> tuple[np.ndarray, float]:
    """Inverse and determinant of ``g`` at ``at``; Cholesky is the definiteness test."""
    return inverse_det(g(at), at=at)
