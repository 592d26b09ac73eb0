"""The Liouville invariant of cubic Abel equations.

For ``dx/dt = A_0 + A_1 x + A_2 x^2 + A_3 x^3`` put::

    phi3 = A3' A2 - A3 A2' - 3 A0 A3^2 + A1 A2 A3 - (2/9) A2^3
    phi5 = -A3 phi3' - 3 (-A3' + A2^2/3 - A1 A3) phi3

and ``F = phi3^5 / phi5^3``. ``F`` is unchanged by every curve of affine
changes of variables and depends only on the 2-jet of the coefficients.

The polynomial formulas below are written once in terms of jet coordinates
``l0 = (A_k)``, ``l1 = (A_k')``, ``l2 = (A_k'')`` and work with any arithmetic
type: floats, numpy arrays or :class:`~quasilie.jets.Jet` objects.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InconsistencyError, UnsupportedBranch
from .jets import Jet

__all__ = [
    "InvariantValue", "phi3_lambda", "dphi3_lambda", "phi5_lambda",
    "phi3", "dphi3", "phi5", "liouville_F", "invariant_arrays",
    "invariant_jet", "apply_D", "is_defined", "CROSS_CHECK_RTOL",
]

CROSS_CHECK_RTOL = 1e-9
UNDEFINED_ATOL = 1e-12


def phi3_lambda(l0, l1):
    a0, a1, a2, a3 = l0
    _, _, d2, d3 = l1
    return d3 * a2 - a3 * d2 - 3 * a0 * a3 ** 2 + a1 * a2 * a3 - 2 * a2 ** 3 / 9


def dphi3_terms(l0, l1, l2):
    """The individual terms of the expanded total derivative of phi3."""
    a0, a1, a2, a3 = l0
    b0, b1, b2, b3 = l1
    _, _, c2, c3 = l2
    return (
        c3 * a2, -a3 * c2, -3 * b0 * a3 ** 2, -6 * a0 * a3 * b3,
        b1 * a2 * a3, a1 * b2 * a3, a1 * a2 * b3, -2 * a2 ** 2 * b2 / 3,
    )


def dphi3_lambda(l0, l1, l2):
    terms = dphi3_terms(l0, l1, l2)
    out = terms[0]
    for term in terms[1:]:
        out = out + term
    return out


def phi5_lambda(l0, l1, l2, dphi3_value=None):
    _, a1, a2, a3 = l0
    d3 = l1[3]
    p3 = phi3_lambda(l0, l1)
    dp3 = dphi3_lambda(l0, l1, l2) if dphi3_value is None else dphi3_value
    return -a3 * dp3 - 3 * (-d3 + a2 ** 2 / 3 - a1 * a3) * p3


def is_defined(p3, p5):
    """Where ``F`` is defined: ``|phi5| >= 1e-12 (1 + |phi3|)^(5/3)``."""
    p3 = np.asarray(p3, dtype=float)
    p5 = np.asarray(p5, dtype=float)
    return np.abs(p5) >= UNDEFINED_ATOL * (1 + np.abs(p3)) ** (5.0 / 3.0)


@dataclass
class InvariantValue:
    t: float
    phi3: float
    dphi3: float
    phi5: float
    F: float = None  # None means undefined

    @property
    def defined(self):
        return self.F is not None

    def to_json(self):
        return {"t": self.t, "phi3": self.phi3, "dphi3": self.dphi3,
                "phi5": self.phi5, "F": self.F}


def _require_cubic(X):
    if X.q != 3:
        raise UnsupportedBranch(f"the invariant is defined for q=3 (got q={X.q})")


def _levels(jets):
    """Split coefficient jets into value/derivative levels (arrays)."""
    return [[j.d[k] for j in jets] for k in range(jets[0].order + 1)]


def invariant_arrays(X, t):
    """``phi3``, ``dphi3``, ``phi5``, ``F`` (NaN where undefined) at ``t``.

    ``dphi3`` is computed twice, by differentiating the jet of ``phi3`` and by
    the expanded polynomial in jet coordinates; disagreement beyond
    ``1e-9`` relative raises :class:`InconsistencyError`.
    """
    _require_cubic(X)
    t = np.asarray(t, dtype=float)
    jets = X.jets(t, 2)
    l0, l1, l2 = _levels(jets)
    p3 = phi3_lambda(l0, l1)
    # route (a): phi3 as a jet of order 1, built from order-1 jets of A, A'
    A = [j.truncate(1) for j in jets]
    dA = [j.shift() for j in jets]
    via_jet = phi3_lambda(A, dA).d[1]
    # route (b): the expanded polynomial
    terms = dphi3_terms(l0, l1, l2)
    via_poly = sum(terms[1:], terms[0])
    scale = np.maximum.reduce([np.abs(np.asarray(x, dtype=float)) for x in terms])
    gap = np.abs(via_jet - via_poly)
    bad = gap > CROSS_CHECK_RTOL * (scale + 1e-300)
    bad &= gap > 1e-300
    if np.any(bad):
        i = np.flatnonzero(np.ravel(bad))[0]
        raise InconsistencyError(
            f"derivative of phi3 disagrees between routes at t="
            f"{np.ravel(np.broadcast_to(t, bad.shape))[i]:.17g}: "
            f"{np.ravel(via_jet)[i]!r} vs {np.ravel(via_poly)[i]!r}")
    dp3 = via_jet
    p5 = phi5_lambda(l0, l1, l2, dphi3_value=dp3)
    ok = is_defined(p3, p5)
    with np.errstate(all="ignore"):
        F = np.where(ok, p3 ** 5 / np.where(ok, p5, 1.0) ** 3, np.nan)
    shape = t.shape
    return {k: np.broadcast_to(np.asarray(v, dtype=float), shape)
            for k, v in (("phi3", p3), ("dphi3", dp3), ("phi5", p5), ("F", F))}


def phi3(X, t):
    _require_cubic(X)
    l0, l1 = _levels(X.jets(np.asarray(t, dtype=float), 1))
    return phi3_lambda(l0, l1)


def dphi3(X, t):
    return invariant_arrays(X, t)["dphi3"]


def phi5(X, t):
    return invariant_arrays(X, t)["phi5"]


def liouville_F(X, t):
    """:class:`InvariantValue` at a scalar ``t``; a list for an array of ``t``."""
    arr = invariant_arrays(X, t)
    ts = np.asarray(t, dtype=float)
    if ts.ndim == 0:
        return _record(float(ts), arr, ())
    return [_record(float(ts.ravel()[i]), arr, np.unravel_index(i, ts.shape))
            for i in range(ts.size)]


def _record(t, arr, idx):
    F = float(arr["F"][idx])
    return InvariantValue(t, float(arr["phi3"][idx]), float(arr["dphi3"][idx]),
                          float(arr["phi5"][idx]), None if np.isnan(F) else F)


def invariant_jet(X, t, K=1):
    """``F`` as a jet of order ``K`` in t; needs coefficient jets of order K+2.

    Entries are NaN wherever ``F`` is undefined.
    """
    _require_cubic(X)
    t = np.asarray(t, dtype=float)
    jets = X.jets(t, K + 2)
    A = [j.truncate(K + 1) for j in jets]
    dA = [j.shift() for j in jets]
    p3 = phi3_lambda(A, dA)  # order K + 1
    dp3 = p3.shift()  # order K
    A = [a.truncate(K) for a in A]
    dA = [d.truncate(K) for d in dA]
    p3 = p3.truncate(K)
    p5 = -A[3] * dp3 - 3 * (-dA[3] + A[2] ** 2 / 3 - A[1] * A[3]) * p3
    ok = is_defined(p3.d[0], p5.d[0])
    safe = p5.d.copy()
    safe[0] = np.where(ok, safe[0], 1.0)
    F = p3 ** 5 / Jet(safe) ** 3
    return Jet(np.where(ok, F.d, np.nan))


def apply_D(X, t, order=1):
    """``d^order F / dt^order`` at ``t`` from jets (not finite differences).

    The result is NaN wherever ``F`` is undefined.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    return invariant_jet(X, t, order).d[order]
