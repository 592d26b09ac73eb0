"""Truncated jets: the value and the first K derivatives of a function at a point.

Entries follow the derivative convention, ``d[k]`` is the k-th derivative
(not the k-th Taylor coefficient). The trailing axes of ``d`` are a batch
dimension, so a single Jet can carry a whole grid of evaluation points.
Internally products and compositions are done on Taylor coefficients and
converted back.
"""

from math import factorial

import numpy as np

from .errors import DomainError

__all__ = ["Jet", "jet_shift", "jet_arith"]


def _factorials(K, ndim):
    f = np.array([factorial(k) for k in range(K + 1)], dtype=float)
    return f.reshape((K + 1,) + (1,) * (ndim - 1))


class Jet:
    """Value and derivatives ``d[0..K]`` of a scalar function at a point."""

    __slots__ = ("d",)
    __array_priority__ = 100

    def __init__(self, d):
        d = np.array(d, dtype=float)
        if d.ndim == 0:
            d = d.reshape(1)
        self.d = d

    @classmethod
    def constant(cls, value, K):
        value = np.asarray(value, dtype=float)
        d = np.zeros((K + 1,) + value.shape)
        d[0] = value
        return cls(d)

    @classmethod
    def variable(cls, t, K):
        """The identity function t -> t, jetted at ``t``."""
        t = np.asarray(t, dtype=float)
        d = np.zeros((K + 1,) + t.shape)
        d[0] = t
        if K >= 1:
            d[1] = 1.0
        return cls(d)

    @property
    def order(self):
        return self.d.shape[0] - 1

    @property
    def value(self):
        return self.d[0]

    def __len__(self):
        return self.d.shape[0]

    def __getitem__(self, k):
        return self.d[k]

    def __repr__(self):
        return f"Jet({self.d.tolist()})"

    def taylor(self):
        return self.d / _factorials(self.order, self.d.ndim)

    @classmethod
    def from_taylor(cls, c):
        return cls(c * _factorials(c.shape[0] - 1, c.ndim))

    def truncate(self, K):
        if K > self.order:
            raise ValueError(f"cannot raise jet order {self.order} to {K}")
        return Jet(self.d[: K + 1])

    def shift(self):
        """Derivative of the jetted function: drops ``d[0]``, order K-1."""
        if self.order < 1:
            raise ValueError("jet_shift needs order >= 1")
        return Jet(self.d[1:])

    # -- arithmetic ------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.order != self.order:
                raise ValueError(
                    f"jet orders differ: {self.order} vs {other.order}")
            return other
        return Jet.constant(np.broadcast_to(other, np.shape(other)), self.order)

    def __neg__(self):
        return Jet(-self.d)

    def __pos__(self):
        return self

    def __add__(self, other):
        other = self._coerce(other)
        return Jet(self.d + other.d)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return Jet(self.d - other.d)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.d * np.asarray(other, dtype=float))
        other = self._coerce(other)
        a, b = self.taylor(), other.taylor()
        c = np.zeros(np.broadcast_shapes(a.shape, b.shape))
        for k in range(c.shape[0]):
            for i in range(k + 1):
                c[k] = c[k] + a[i] * b[k - i]
        return Jet.from_taylor(c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            if np.any(other == 0):
                raise DomainError("division by zero")
            return Jet(self.d / other)
        other = self._coerce(other)
        if np.any(other.d[0] == 0):
            raise DomainError("division by jet with zero value part")
        a, b = self.taylor(), other.taylor()
        c = np.zeros(np.broadcast_shapes(a.shape, b.shape))
        for k in range(c.shape[0]):
            acc = a[k].copy() if a[k].ndim else a[k]
            for i in range(1, k + 1):
                acc = acc - b[i] * c[k - i]
            c[k] = acc / b[0]
        return Jet.from_taylor(c)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, n):
        if isinstance(n, (bool, np.bool_)) or int(n) != n:
            raise TypeError("jets only support integer powers")
        n = int(n)
        if n < 0:
            return 1.0 / (self ** (-n))
        result = Jet.constant(np.ones(self.d.shape[1:]), self.order)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- elementary functions -------------------------------------------
    def exp(self):
        a = self.taylor()
        e = np.zeros_like(a)
        e[0] = np.exp(a[0])
        for k in range(1, a.shape[0]):
            e[k] = sum(i * a[i] * e[k - i] for i in range(1, k + 1)) / k
        return Jet.from_taylor(e)

    def log(self):
        if np.any(self.d[0] <= 0):
            raise DomainError("log of nonpositive value")
        a = self.taylor()
        out = np.zeros_like(a)
        out[0] = np.log(a[0])
        for k in range(1, a.shape[0]):
            acc = a[k] - sum(i * out[i] * a[k - i] for i in range(1, k)) / k
            out[k] = acc / a[0]
        return Jet.from_taylor(out)

    def sqrt(self):
        if np.any(self.d[0] <= 0):
            # the derivative chain of sqrt is singular at 0
            raise DomainError("sqrt of nonpositive value")
        a = self.taylor()
        r = np.zeros_like(a)
        r[0] = np.sqrt(a[0])
        for k in range(1, a.shape[0]):
            acc = a[k] - sum(r[i] * r[k - i] for i in range(1, k))
            r[k] = acc / (2.0 * r[0])
        return Jet.from_taylor(r)

    def _sincos(self):
        a = self.taylor()
        s = np.zeros_like(a)
        c = np.zeros_like(a)
        s[0], c[0] = np.sin(a[0]), np.cos(a[0])
        for k in range(1, a.shape[0]):
            s[k] = sum(i * a[i] * c[k - i] for i in range(1, k + 1)) / k
            c[k] = -sum(i * a[i] * s[k - i] for i in range(1, k + 1)) / k
        return Jet.from_taylor(s), Jet.from_taylor(c)

    def sin(self):
        return self._sincos()[0]

    def cos(self):
        return self._sincos()[1]


def jet_shift(a):
    return a.shift()


_OPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
}


def jet_arith(a, b, op):
    """Apply one of ``+ - * /`` to two jets of equal order."""
    if a.order != b.order:
        raise ValueError(f"jet orders differ: {a.order} vs {b.order}")
    return _OPS[op](a, b)
