"""Exception hierarchy shared by every module."""

from __future__ import annotations


class GLHarmonicError(Exception):
    """Base class for all package errors."""


class DomainError(GLHarmonicError, ArithmeticError):
    """Non-finite arithmetic (log of a non-positive value, division by zero, ...)."""

    def __init__(self, message: str, at=None):
        self.at = None if at is None else tuple(float(c) for c in _flat(at))
        if self.at is not None:
            message = f"{message} at {self.at}"
        super().__init__(message)


class DegenerateMetricError(GLHarmonicError, ValueError):
    """Metric is not positive definite (Cholesky factorization failed)."""

    def __init__(self, message: str, at=None):
        self.at = None if at is None else tuple(float(c) for c in _flat(at))
        if self.at is not None:
            message = f"{message} at {self.at}"
        super().__init__(message)


class SingularLocusError(GLHarmonicError, ValueError):
    """Evaluation requested on the excluded set of a generalized Lagrange metric."""


class ExcludedSetError(GLHarmonicError, ValueError):
    """<df, T> vanishes at a quadrature node, so the ratio functional is undefined."""

    def __init__(self, message: str, node: int | None = None, coords=None):
        self.node = node
        self.coords = coords
        super().__init__(message)


class IntegrationError(GLHarmonicError, RuntimeError):
    """An ODE integration failed; ``time`` is the start of the failing step."""

    def __init__(self, message: str, time: float):
        self.time = float(time)
        super().__init__(f"{message} (t={self.time:.17g})")


class ConfigError(GLHarmonicError, ValueError):
    """Invalid scenario configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


def _flat(at):
    import numpy as np

    return np.ravel(np.asarray(at, dtype=float)).tolist()
