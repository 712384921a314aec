"""Second-order forward-mode jets (dual-over-dual numbers).

A :class:`Jet` carries a value together with its exact gradient and Hessian
with respect to a fixed set of seeded coordinates.  Values may be numpy arrays
of any batch shape; the derivative parts then carry trailing ``(d,)`` and
``(d, d)`` axes.  Field closures written with the functions in this module
(``exp``, ``log``, ``sin``...) work unchanged on floats, arrays and jets.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

__all__ = [
    "Jet",
    "variables",
    "taylor",
    "taylor_tensor",
    "exp",
    "log",
    "sqrt",
    "sin",
    "cos",
    "tan",
    "tanh",
    "arctan",
    "absolute",
    "dot",
]


def _col(v):
    return np.asarray(v)[..., None]


def _col2(v):
    return np.asarray(v)[..., None, None]


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


class Jet:
    """Truncated Taylor expansion ``value + grad.dx + dx.hess.dx / 2``."""

    __slots__ = ("value", "grad", "hess")
    # make numpy defer binary operators to the jet
    __array_ufunc__ = None

    def __init__(self, value, grad, hess):
        self.value = value
        self.grad = grad
        self.hess = hess

    @property
    def dim(self) -> int:
        return self.grad.shape[-1]

    def __repr__(self) -> str:
        return f"Jet(value={self.value!r}, grad={self.grad!r})"

    def _chain(self, f0, f1, f2) -> "Jet":
        # Hessian of f(u): f''(u) grad u grad u^T + f'(u) hess u; symmetric bit-for-bit.
        return Jet(
            f0,
            _col(f1) * self.grad,
            _col2(f2) * _outer(self.grad, self.grad) + _col2(f1) * self.hess,
        )

    # arithmetic -----------------------------------------------------------
    def __neg__(self):
        return Jet(-self.value, -self.grad, -self.hess)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.value + other.value, self.grad + other.grad, self.hess + other.hess)
        value = self.value + other
        shape = np.shape(value)
        if shape != np.shape(self.value):
            d = self.dim
            return Jet(
                value,
                np.broadcast_to(self.grad, shape + (d,)),
                np.broadcast_to(self.hess, shape + (d, d)),
            )
        return Jet(value, self.grad, self.hess)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self, other
            return Jet(
                a.value * b.value,
                a.grad * _col(b.value) + _col(a.value) * b.grad,
                a.hess * _col2(b.value)
                + _col2(a.value) * b.hess
                + (_outer(a.grad, b.grad) + _outer(b.grad, a.grad)),
            )
        return Jet(self.value * other, self.grad * _col(other), self.hess * _col2(other))

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        v = np.asarray(self.value, dtype=float)
        if np.any(v == 0.0):
            raise DomainError("division by zero")
        inv = 1.0 / v
        return self._chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        if np.any(np.asarray(other) == 0.0):
            raise DomainError("division by zero")
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, power):
        if isinstance(power, Jet):
            return exp(power * log(self))
        p = float(power)
        v = np.asarray(self.value, dtype=float)
        if p == int(p):
            if p == 0:
                return self * 0.0 + 1.0
            if p < 0 and np.any(v == 0.0):
                raise DomainError("division by zero")
            if p == 1:
                return self
            if p == 2:
                return self * self
        elif np.any(v <= 0.0):
            raise DomainError(f"non-integer power {p} of a non-positive value")
        return self._chain(v**p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    def __rpow__(self, base):
        b = float(base)
        if b <= 0.0:
            raise DomainError("power with non-positive base")
        return exp(self * np.log(b))

    def __abs__(self):
        v = np.asarray(self.value, dtype=float)
        if np.any(v == 0.0):
            raise DomainError("absolute value is not differentiable at 0")
        s = np.sign(v)
        return self._chain(np.abs(v), s, np.zeros_like(v))


# elementwise functions -------------------------------------------------------


def exp(u):
    if isinstance(u, Jet):
        e = np.exp(u.value)
        return u._chain(e, e, e)
    return np.exp(u)


def log(u):
    v = np.asarray(u.value if isinstance(u, Jet) else u, dtype=float)
    if np.any(v <= 0.0):
        raise DomainError("log of a non-positive value")
    if isinstance(u, Jet):
        inv = 1.0 / v
        return u._chain(np.log(v), inv, -inv * inv)
    return np.log(u)


def sqrt(u):
    v = np.asarray(u.value if isinstance(u, Jet) else u, dtype=float)
    if isinstance(u, Jet):
        if np.any(v <= 0.0):
            raise DomainError("sqrt is not differentiable at non-positive values")
        r = np.sqrt(v)
        return u._chain(r, 0.5 / r, -0.25 / (r * v))
    if np.any(v < 0.0):
        raise DomainError("sqrt of a negative value")
    return np.sqrt(u)


def sin(u):
    if isinstance(u, Jet):
        s, c = np.sin(u.value), np.cos(u.value)
        return u._chain(s, c, -s)
    return np.sin(u)


def cos(u):
    if isinstance(u, Jet):
        s, c = np.sin(u.value), np.cos(u.value)
        return u._chain(c, -s, -c)
    return np.cos(u)


def tan(u):
    if isinstance(u, Jet):
        t = np.tan(u.value)
        sec2 = 1.0 + t * t
        return u._chain(t, sec2, 2.0 * t * sec2)
    return np.tan(u)


def tanh(u):
    if isinstance(u, Jet):
        t = np.tanh(u.value)
        d = 1.0 - t * t
        return u._chain(t, d, -2.0 * t * d)
    return np.tanh(u)


def arctan(u):
    if isinstance(u, Jet):
        v = np.asarray(u.value, dtype=float)
        d = 1.0 / (1.0 + v * v)
        return u._chain(np.arctan(v), d, -2.0 * v * d * d)
    return np.arctan(u)


def absolute(u):
    if isinstance(u, Jet):
        return abs(u)
    return np.abs(u)


def dot(a, b):
    """Euclidean pairing of two equal-length sequences (jets or numbers)."""
    total = 0.0
    for ai, bi in zip(a, b):
        total = total + ai * bi
    return total


# seeding and extraction ------------------------------------------------------


def variables(point) -> list[Jet]:
    """Seed one jet per coordinate.

    ``point`` has shape ``(d,)`` for a single point or ``(N, d)`` for a batch.
    """
    p = np.asarray(point, dtype=float)
    if p.ndim == 0:
        p = p[None]
    d = p.shape[-1]
    batch = p.shape[:-1]
    eye = np.eye(d)
    zeros = np.zeros(batch + (d, d))
    out = []
    for i in range(d):
        value = p[..., i] if batch else float(p[i])
        out.append(Jet(value, np.broadcast_to(eye[i], batch + (d,)), zeros))
    return out


def _leaf(x, batch, d):
    if isinstance(x, Jet):
        return (
            np.broadcast_to(np.asarray(x.value, dtype=float), batch),
            np.broadcast_to(x.grad, batch + (d,)),
            np.broadcast_to(x.hess, batch + (d, d)),
        )
    return (
        np.broadcast_to(np.asarray(x, dtype=float), batch),
        np.zeros(batch + (d,)),
        np.zeros(batch + (d, d)),
    )


def _collect(out, batch, d):
    if isinstance(out, (list, tuple)):
        parts = [_collect(o, batch, d) for o in out]
        axis = len(batch)
        return tuple(np.stack([p[k] for p in parts], axis=axis) for k in range(3))
    if isinstance(out, np.ndarray) and out.dtype == object:
        return _collect(list(out), batch, d)
    return _leaf(out, batch, d)


def taylor_tensor(fn, at):
    """Evaluate ``fn`` on seeded jets; return ``(value, grad, hess)`` arrays.

    ``fn`` may return a scalar or arbitrarily nested lists of scalars.  For a
    batch ``at`` of shape ``(N, d)`` every result gains a leading ``N`` axis.
    The derivative axes are trailing.
    """
    p = np.asarray(at, dtype=float)
    if p.ndim == 0:
        p = p[None]
    d = p.shape[-1]
    batch = p.shape[:-1]
    try:
        with np.errstate(all="ignore"):
            out = fn(variables(p))
            value, grad, hess = _collect(out, batch, d)
    except DomainError as exc:
        if exc.at is None and not batch:
            raise DomainError(str(exc), at=p) from None
        raise
    except ZeroDivisionError:
        raise DomainError("division by zero", at=None if batch else p) from None
    if not (np.all(np.isfinite(value)) and np.all(np.isfinite(grad)) and np.all(np.isfinite(hess))):
        if batch:
            bad = np.zeros(batch, dtype=bool)
            for arr in (value, grad, hess):
                bad |= ~np.isfinite(arr).reshape(batch + (-1,)).all(axis=-1)
            idx = np.argwhere(bad)[0]
            raise DomainError("non-finite field value or derivative", at=p[tuple(idx)])
        raise DomainError("non-finite field value or derivative", at=p)
    return value, grad, hess


def taylor(fn, at):
    """``(value, grad, hess)`` of a scalar-valued closure at ``at``."""
    value, grad, hess = taylor_tensor(fn, at)
    if value.ndim == 0:
        return float(value), grad, hess
    return value, grad, hess
