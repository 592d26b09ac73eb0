"""Abel equations and the affine group acting on them.

An Abel equation of degree q is ``dx/dt = f_0(t) + f_1(t) x + ... + f_q(t) x^q``.
The group of affine maps ``x -> alpha x + beta`` (alpha != 0) acts on the
cubic ones; a curve ``t -> (beta(t), alpha(t))`` acts through the change of
variables ``x = alpha(t) xbar + beta(t)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import Diverged, DomainError, UnsupportedBranch
from .expr import ONE, ZERO, TFunc, as_tfunc
from .numerics import BLOWUP_BOUND, integrate, residual

__all__ = [
    "AbelEquation", "GroupElement", "GroupCurve", "compose", "inverse",
    "pushforward", "act_pointwise", "flow_conjugacy_residual",
]


class AbelEquation:
    """``dx/dt = sum_k coeffs[k](t) x^k`` with ``q = len(coeffs) - 1 >= 2``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        coeffs = tuple(as_tfunc(c) for c in coeffs)
        if len(coeffs) < 3:
            raise ValueError("an Abel equation needs at least 3 coefficients")
        self.coeffs = coeffs

    @property
    def q(self):
        return len(self.coeffs) - 1

    def __eq__(self, other):
        return isinstance(other, AbelEquation) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return "AbelEquation([" + ", ".join(repr(str(c)) for c in self.coeffs) + "])"

    def coefficient_values(self, t):
        """Array of shape ``(q + 1,) + shape(t)``."""
        t = np.asarray(t, dtype=float)
        return np.stack([np.broadcast_to(c(t), t.shape) for c in self.coeffs])

    def jets(self, t, K):
        return [c.jet(t, K) for c in self.coeffs]

    def rhs(self, t, x):
        P = self.coefficient_values(t)
        acc = P[-1]
        for k in range(self.q - 1, -1, -1):
            acc = acc * x + P[k]
        return acc

    __call__ = rhs

    def to_json(self):
        return {"q": self.q, "coeffs": [str(c) for c in self.coeffs]}

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict):
            raise ValueError("equation JSON must be an object")
        if "coeffs" not in obj:
            raise ValueError("equation JSON: missing 'coeffs' field")
        coeffs = obj["coeffs"]
        if not isinstance(coeffs, list):
            raise ValueError("equation JSON: 'coeffs' must be a list")
        if "q" in obj and int(obj["q"]) != len(coeffs) - 1:
            raise ValueError(
                f"equation JSON: q={obj['q']} but {len(coeffs)} coefficients")
        return cls([as_tfunc(str(c)) for c in coeffs])


@dataclass(frozen=True)
class GroupElement:
    """The affine map ``x -> alpha x + beta``."""

    beta: float
    alpha: float

    def __post_init__(self):
        if self.alpha == 0:
            raise ValueError("alpha must be nonzero")

    def __iter__(self):
        return iter((self.beta, self.alpha))


@dataclass(frozen=True)
class GroupCurve:
    """A curve ``t -> (beta(t), alpha(t))``; ``x = alpha xbar + beta``."""

    beta: TFunc
    alpha: TFunc

    def __post_init__(self):
        object.__setattr__(self, "beta", as_tfunc(self.beta))
        object.__setattr__(self, "alpha", as_tfunc(self.alpha))

    @classmethod
    def constant(cls, beta, alpha):
        if alpha == 0:
            raise ValueError("alpha must be nonzero")
        return cls(as_tfunc(beta), as_tfunc(alpha))

    @classmethod
    def identity(cls):
        return cls(ZERO, ONE)

    def at(self, t):
        return GroupElement(float(self.beta(t)), float(self.alpha(t)))

    def check(self, grid):
        """Raise DomainError unless alpha is nonzero on ``grid``."""
        a = np.asarray(self.alpha(np.asarray(grid, dtype=float)))
        bad = np.flatnonzero(~np.isfinite(a) | (a == 0))
        if bad.size:
            t = np.asarray(grid, dtype=float).ravel()[bad[0]]
            raise DomainError(f"alpha vanishes at t={t:.17g}", str(self.alpha))

    def to_json(self):
        return {"beta": str(self.beta), "alpha": str(self.alpha)}

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(as_tfunc(str(obj["beta"])), as_tfunc(str(obj["alpha"])))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"curve JSON: missing {exc}") from exc


def compose(g, h):
    """``(b, a) * (b', a') = (a b' + b, a a')``, for elements or curves."""
    if isinstance(g, GroupCurve) or isinstance(h, GroupCurve):
        g = _as_curve(g)
        h = _as_curve(h)
        return GroupCurve(g.alpha * h.beta + g.beta, g.alpha * h.alpha)
    return GroupElement(g.alpha * h.beta + g.beta, g.alpha * h.alpha)


def inverse(g):
    """``(b, a)^-1 = (-b/a, 1/a)``."""
    if isinstance(g, GroupCurve):
        return GroupCurve(-g.beta / g.alpha, ONE / g.alpha)
    return GroupElement(-g.beta / g.alpha, 1.0 / g.alpha)


def _as_curve(g):
    if isinstance(g, GroupCurve):
        return g
    return GroupCurve.constant(g.beta, g.alpha)


def pushforward(X, g, grid=None):
    """The transformed equation in ``xbar`` under ``x = alpha xbar + beta``.

    Coefficients are expression trees, so the result can be evaluated to
    jets like any other equation. With ``grid`` the curve is also checked for
    ``alpha != 0`` there.
    """
    if X.q != 3:
        raise UnsupportedBranch(
            f"transformation formulas are implemented for q=3 only (got q={X.q})")
    g = _as_curve(g)
    if grid is not None:
        g.check(grid)
    f0, f1, f2, f3 = X.coeffs
    b, a = g.beta, g.alpha
    db, da = b.diff(), a.diff()
    n3 = f3 * a ** 2
    n2 = a * (f2 + 3 * f3 * b)
    n1 = 3 * f3 * b ** 2 + 2 * f2 * b + f1 - da / a
    n0 = (f3 * b ** 3 + f2 * b ** 2 + f1 * b + f0 - db) / a
    return AbelEquation([n0, n1, n2, n3])


def act_pointwise(X, g0):
    """Pushforward by a constant group element."""
    return pushforward(X, GroupCurve.constant(g0.beta, g0.alpha))


def flow_conjugacy_residual(X, g, xbar0, window, steps=512):
    """Integrate the transformed equation, map back and test it against ``X``.

    Returns the largest residual of ``dx/dt - X(t, x)`` along
    ``x = alpha xbar + beta``. Raises :class:`Diverged` if either the
    transformed solution or its image leaves the blow-up bound.
    """
    g = _as_curve(g)
    Y = pushforward(X, g)
    sol = integrate(Y, xbar0, window, steps)
    if sol.blowup:
        raise Diverged("transformed solution blew up", sol.blowup_time, sol)
    g.check(sol.t)
    x = g.alpha(sol.t) * sol.x + g.beta(sol.t)
    x = np.broadcast_to(x, sol.t.shape)
    big = np.flatnonzero(~np.isfinite(x) | (np.abs(x) > BLOWUP_BOUND))
    if big.size:
        raise Diverged("pulled-back solution blew up", sol.t[big[0]], sol)
    return residual(sol.t, x, X)
