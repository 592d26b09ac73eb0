"""Integrability test and explicit reductions of cubic Abel equations.

Three routes are provided:

* :func:`reduce_to_2d` maps an equation satisfying the integrability
  condition onto ``lambda1(t) Z1 + lambda2(t) Z2`` where
  ``Z1 = x^3 + 3 mu x^2 - 2 mu^3`` and ``Z2 = x + mu`` (as fields ``(.) d/dx``),
  which is a Bernoulli equation in ``z = x + mu`` (:func:`solve_bernoulli`);
* :func:`canonical_form` uses a known particular solution to reach
  ``dx/dtau = x^3 + f2(tau) x^2``;
* :func:`onedim_candidates` searches for a curve mapping the equation onto a
  multiple ``xi(t) (c0 + c1 x + c2 x^2 + c3 x^3)`` of a fixed field.

Every certificate is re-verified numerically on the grid, independently of
how the curve was produced.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import warnings

import numpy as np
from scipy.integrate import cumulative_simpson

from .abel import AbelEquation, GroupCurve, pushforward
from .errors import Diverged, ReductionError, UnsupportedBranch
from .expr import ONE, ZERO, Num, TFunc, as_tfunc, sqrt
from .numerics import OdeSolution, derivative, residual
from .vfalg import abel_basis, bracket, combine, in_span

__all__ = [
    "CAReport", "check_CA", "ReductionTarget2D", "ReductionTarget1D",
    "ReductionCertificate", "SampledCurve", "reduce_to_2d", "solve_bernoulli",
    "CanonicalForm", "canonical_form", "Branch", "OnedimReport",
    "onedim_candidates",
]


def _grid(grid):
    t = np.asarray(grid, dtype=float)
    if t.ndim != 1 or len(t) < 5:
        raise ValueError("grid must be a 1-d array of at least 5 points")
    if np.any(np.diff(t) <= 0):
        raise ValueError("grid must be strictly increasing")
    return t


def _values(f, t):
    return np.broadcast_to(np.asarray(as_tfunc(f)(t), dtype=float), t.shape)


def _require_positive_f3(X, t):
    if X.q != 3:
        raise UnsupportedBranch(f"reductions are implemented for q=3 (got q={X.q})")
    f3 = _values(X.coeffs[3], t)
    if np.any(f3 <= 0):
        i = int(np.flatnonzero(f3 <= 0)[0])
        raise UnsupportedBranch(
            f"f3 must be positive on the grid (f3({t[i]:.17g}) = {f3[i]:.6g})")
    return f3


# -- the integrability condition -------------------------------------------

@dataclass
class CAReport:
    t: np.ndarray
    residual: np.ndarray
    scale: float
    rtol: float

    @property
    def max_residual(self):
        return float(np.max(np.abs(self.residual)))

    @property
    def relative(self):
        return self.max_residual / self.scale if self.scale > 0 else 0.0

    @property
    def passed(self):
        return self.max_residual <= self.rtol * self.scale

    def to_json(self):
        return {"CA_max_residual": self.max_residual,
                "CA_relative_residual": self.relative,
                "CA_scale": self.scale, "CA_passed": self.passed}


def ca_terms(X, t):
    """The five terms of the integrability condition, evaluated on ``t``."""
    jets = X.jets(t, 1)
    f0, f1, f2, f3 = (j.d[0] for j in jets)
    d2, d3 = jets[2].d[1], jets[3].d[1]
    return (27 * f0 * f3 ** 2, 9 * f3 * d2, -9 * f1 * f2 * f3, -9 * f2 * d3,
            2 * f2 ** 3)


def check_CA(X, grid, rtol=1e-8):
    """Residual of ``9 f3 (3 f0 f3 + f2') - 9 f2 (f1 f3 + f3') + 2 f2^3`` on ``grid``.

    The verdict compares the largest residual with ``rtol`` times the largest
    single term anywhere on the grid.
    """
    t = _grid(grid)
    _require_positive_f3(X, t)
    terms = [np.broadcast_to(x, t.shape) for x in ca_terms(X, t)]
    res = sum(terms[1:], terms[0])
    scale = float(max(np.max(np.abs(x)) for x in terms))
    return CAReport(t, np.asarray(res, dtype=float), scale, rtol)


# -- two-dimensional targets -------------------------------------------------

def _mu_fraction(mu):
    return Fraction(repr(float(mu))) if not isinstance(mu, Fraction) else mu


@dataclass
class ReductionTarget2D:
    """``lambda1(t) Z1 + lambda2(t) Z2`` with ``Z1``, ``Z2`` depending on ``mu``."""

    mu: float
    lambda1: TFunc
    lambda2: TFunc

    def __post_init__(self):
        self.lambda1 = as_tfunc(self.lambda1)
        self.lambda2 = as_tfunc(self.lambda2)

    def fields(self):
        """``(Z1, Z2)`` as exact polynomial fields on the line."""
        Y = abel_basis(3)
        m = _mu_fraction(self.mu)
        Z1 = combine([-2 * m ** 3, 0, 3 * m, 1], Y)
        Z2 = combine([m, 1, 0, 0], Y)
        return Z1, Z2

    def closure(self):
        """Coordinates of ``[Z2, Z1]`` in ``(Z1, Z2)`` (None if not closed)."""
        Z1, Z2 = self.fields()
        return in_span(bracket(Z2, Z1), [Z1, Z2])

    def coefficients(self):
        mu = as_tfunc(float(self.mu)) if self.mu else ZERO
        l1, l2 = self.lambda1, self.lambda2
        return (-2 * mu ** 3 * l1 + mu * l2, l2, 3 * mu * l1, l1)

    def equation(self):
        return AbelEquation(self.coefficients())

    def to_json(self):
        return {"mu": self.mu, "lambda1": str(self.lambda1),
                "lambda2": str(self.lambda2)}


@dataclass
class ReductionTarget1D:
    """``xi(t) (c0 + c1 x + c2 x^2 + c3 x^3)``; ``xi`` is sampled on a grid."""

    c: tuple
    xi: np.ndarray

    def __post_init__(self):
        self.c = tuple(float(v) for v in self.c)
        if len(self.c) != 4:
            raise ValueError("c must have four entries")
        if self.c[3] == 0 or self.c[2] == 0:
            raise ValueError("c2 and c3 must be nonzero")


@dataclass
class SampledCurve:
    """A curve known only through its samples on a grid."""

    t: np.ndarray
    beta: np.ndarray
    alpha: np.ndarray


@dataclass
class ReductionCertificate:
    curve: GroupCurve
    target: object
    t: np.ndarray
    coefficient_residual: float
    solution_residual: float = None
    notes: dict = field(default_factory=dict)

    def to_json(self, samples=False):
        out = {"coefficient_residual": self.coefficient_residual,
               "solution_residual": self.solution_residual}
        sampled = isinstance(self.curve, SampledCurve)
        if not sampled:
            out["beta"] = str(self.curve.beta)
            out["alpha"] = str(self.curve.alpha)
        if isinstance(self.target, ReductionTarget2D):
            out.update(self.target.to_json())
        else:
            out["c"] = list(self.target.c)
        out.update(self.notes)
        if samples or sampled:
            out["t"] = self.t.tolist()
            out["beta_samples"] = self.beta_samples().tolist()
            out["alpha_samples"] = self.alpha_samples().tolist()
            if not isinstance(self.target, ReductionTarget2D):
                out["xi_samples"] = np.asarray(self.target.xi).tolist()
        return out

    def beta_samples(self):
        if isinstance(self.curve, SampledCurve):
            return self.curve.beta
        return _values(self.curve.beta, self.t)

    def alpha_samples(self):
        if isinstance(self.curve, SampledCurve):
            return self.curve.alpha
        return _values(self.curve.alpha, self.t)


def _sqrt_tf(f):
    """``sqrt(f)``, folded when ``f`` is a rational perfect square."""
    if isinstance(f, Num) and f.value > 0:
        p, q = f.value.numerator, f.value.denominator
        rp, rq = int(round(p ** 0.5)), int(round(q ** 0.5))
        if rp * rp == p and rq * rq == q:
            return Num(Fraction(rp, rq))
    return sqrt(f)


def _coefficient_residual(Y, target_coeffs, t):
    worst = 0.0
    for a, b in zip(Y.coeffs, target_coeffs):
        va, vb = _values(a, t), _values(b, t)
        worst = max(worst, float(np.max(np.abs(va - vb) / (1 + np.abs(vb)))))
    return worst


def _solution_residual(X, curve, target, t, xbar0):
    sol = solve_bernoulli(target, xbar0, t)
    x = _values(curve.alpha, t) * sol.x + _values(curve.beta, t)
    return residual(t, x, X), sol


def _auto_xbar0(target, t):
    """An initial value whose Bernoulli solution stays finite on ``t``."""
    a = _values(target.lambda2, t) - 3 * target.mu ** 2 * _values(target.lambda1, t)
    E = np.exp(2 * cumulative_simpson(a, x=t, initial=0))
    I = cumulative_simpson(_values(target.lambda1, t) * E, x=t, initial=0)
    w0 = max(1.0, 2 * float(np.max(I)) * 1.5 + 1.0)
    return w0 ** -0.5 - target.mu


def reduce_to_2d(X, mu, beta_choice=None, grid=None, tol=1e-8, xbar0=None,
                 solution_tol=1e-5):
    """Construct the curve mapping ``X`` onto ``lambda1 Z1 + lambda2 Z2``.

    For ``mu != 0`` any ``beta`` with ``3 f3 beta + f2 != 0`` works; by default
    ``0``, ``1`` and ``1 - f2/(3 f3)`` are tried in order. Then
    ``alpha = (3 f3 beta + f2) / (3 mu f3)`` and ``lambda1 = f3 alpha^2 > 0``.
    For ``mu = 0`` the curve is forced: ``beta = -f2/(3 f3)`` must itself solve
    ``X``, ``lambda1 = 1`` and ``alpha = 1/sqrt(f3)``.

    The certificate records the coefficient mismatch between the pushed
    equation and the target, and the residual in ``X`` of a solution obtained
    from the Bernoulli form and mapped back.
    """
    t = _grid(grid)
    f3v = _require_positive_f3(X, t)
    ca = check_CA(X, t, rtol=tol)
    if not ca.passed:
        raise ReductionError(
            f"integrability condition fails (max residual {ca.max_residual:.6g})",
            ca.max_residual)
    f0, f1, f2, f3 = X.coeffs
    mu = float(mu)
    notes = {"mu": mu}
    if mu != 0:
        if beta_choice is None:
            cands = [ZERO, ONE, ONE - f2 / (3 * f3)]
        else:
            cands = [as_tfunc(beta_choice)]
        tiny = 1e-9 * max(1.0, float(np.max(np.abs(_values(f2, t)))),
                          float(np.max(f3v)))
        beta = None
        for b in cands:
            uv = _values(3 * f3 * b + f2, t)
            if np.min(np.abs(uv)) > tiny and abs(np.sum(np.sign(uv))) == len(t):
                beta = b
                break
        if beta is None:
            raise ReductionError(
                "3 f3 beta + f2 vanishes or changes sign on the grid for every "
                "candidate beta; "
                "pass beta_choice explicitly")
        u = 3 * f3 * beta + f2
        alpha = u / (3 * mu * f3)
        lam1 = f3 * alpha ** 2
        lam2 = (3 * f3 * beta ** 2 + 2 * f2 * beta + f1
                + (f2 * f3.diff() - f3 * f2.diff() - 3 * f3 ** 2 * beta.diff())
                / (f3 * u))
    else:
        beta = -f2 / (3 * f3)
        r = _values(beta.diff(), t) - X.rhs(t, _values(beta, t))
        scale = 1 + float(np.max(np.abs(X.coefficient_values(t))))
        rmax = float(np.max(np.abs(r)))
        notes["beta_residual"] = rmax
        if rmax > tol * scale:
            raise ReductionError(
                "integrability condition holds but -f2/(3 f3) is not a solution, "
                f"so mu=0 is unavailable (residual {rmax:.6g})", rmax)
        lam1 = ONE
        alpha = ONE / _sqrt_tf(f3)
        lam2 = 3 * f3 * beta ** 2 + 2 * f2 * beta + f1 - alpha.diff() / alpha
    curve = GroupCurve(beta, alpha)
    curve.check(t)
    target = ReductionTarget2D(mu, lam1, lam2)
    l1v = _values(lam1, t)
    if np.any(np.sign(l1v) != np.sign(f3v)):
        raise ReductionError("lambda1 and f3 differ in sign on the grid")
    Y = pushforward(X, curve)
    coef_res = _coefficient_residual(Y, target.coefficients(), t)
    if coef_res > max(tol, 1e-8) * 1e2:
        raise ReductionError(
            f"pushed equation does not match the target (residual {coef_res:.6g})",
            coef_res)
    if xbar0 is None:
        xbar0 = _auto_xbar0(target, t)
    sol_res, _ = _solution_residual(X, curve, target, t, xbar0)
    notes["xbar0"] = float(xbar0)
    if sol_res > solution_tol:
        raise ReductionError(
            f"mapped-back solution residual {sol_res:.6g} exceeds {solution_tol}",
            sol_res)
    return ReductionCertificate(curve, target, t, coef_res, sol_res, notes)


def solve_bernoulli(target, xbar0, grid):
    """Solve ``lambda1 Z1 + lambda2 Z2`` from ``xbar0`` in closed form.

    With ``z = xbar + mu`` the equation is ``z' = a z + lambda1 z^3`` with
    ``a = lambda2 - 3 mu^2 lambda1``, and ``w = z^-2`` solves the linear
    equation ``w' = -2 a w - 2 lambda1``. The integrating factor and the
    forcing integral use composite Simpson quadrature on ``grid``. A zero of
    ``w`` is a blow-up and raises :class:`Diverged` with the crossing time.
    """
    t = _grid(grid)
    mu = float(target.mu)
    z0 = float(xbar0) + mu
    if z0 == 0:
        if mu == 0:
            zero = np.zeros_like(t)
            return OdeSolution(t, zero, 0.0)
        raise ValueError("z0 = xbar0 + mu must be nonzero when mu != 0")
    lam1 = _values(target.lambda1, t)
    a = _values(target.lambda2, t) - 3 * mu ** 2 * lam1
    A = cumulative_simpson(a, x=t, initial=0)
    E = np.exp(2 * A)
    I = cumulative_simpson(lam1 * E, x=t, initial=0)
    w = (z0 ** -2 - 2 * I) / E
    bad = np.flatnonzero(w <= 0)
    if bad.size:
        i = int(bad[0])
        tc = t[i - 1] + (t[i] - t[i - 1]) * w[i - 1] / (w[i - 1] - w[i])
        raise Diverged("Bernoulli solution blows up", float(tc))
    z = np.sign(z0) / np.sqrt(w)
    xbar = z - mu
    est = residual(t, xbar, target.equation()) if len(t) >= 5 else float("nan")
    return OdeSolution(t, xbar, est)


# -- canonical form ------------------------------------------------------

@dataclass
class CanonicalForm:
    t: np.ndarray
    tau: np.ndarray
    alpha: np.ndarray
    f0bar: np.ndarray
    f1bar: np.ndarray
    f2: np.ndarray  # coefficient of x^2 in dx/dtau = x^3 + f2 x^2
    beta_residual: float

    @property
    def max_f0(self):
        return float(np.max(np.abs(self.f0bar)))

    @property
    def max_f1(self):
        return float(np.max(np.abs(self.f1bar[2:-2])))

    def to_json(self):
        return {"t": self.t.tolist(), "tau": self.tau.tolist(),
                "alpha": self.alpha.tolist(), "f2": self.f2.tolist(),
                "max_f0bar": self.max_f0, "max_f1bar": self.max_f1,
                "beta_residual": self.beta_residual}


def canonical_form(X, beta, grid, tol=1e-7):
    """Reduce ``X`` to ``dx/dtau = x^3 + f2(tau) x^2`` using a particular solution.

    ``alpha = exp(int (3 f3 beta^2 + 2 f2 beta + f1) dt)`` and
    ``tau = t0 + int f3 alpha^2 dt`` are computed by Simpson quadrature from
    the start of the grid. The returned residual coefficients ``f0bar`` and
    ``f1bar`` are evaluated independently: ``f1bar`` differentiates the
    sampled ``log(alpha)`` numerically.
    """
    t = _grid(grid)
    f3v = _require_positive_f3(X, t)
    beta = as_tfunc(beta)
    f0, f1, f2, f3 = X.coeffs
    bv = _values(beta, t)
    P = X.rhs(t, bv)
    r = _values(beta.diff(), t) - P
    rmax = float(np.max(np.abs(r)))
    if rmax > tol * (1 + float(np.max(np.abs(P)))):
        raise ReductionError(f"beta is not a solution (residual {rmax:.6g})", rmax)
    f1v, f2v = _values(f1, t), _values(f2, t)
    g = 3 * f3v * bv ** 2 + 2 * f2v * bv + f1v
    log_alpha = cumulative_simpson(g, x=t, initial=0)
    alpha = np.exp(log_alpha)
    f0bar = -r / alpha
    f1bar = g - derivative(t, log_alpha)
    tau = t[0] + cumulative_simpson(f3v * alpha ** 2, x=t, initial=0)
    if np.any(np.diff(tau) <= 0):
        raise ReductionError("tau is not strictly increasing on the grid")
    f2c = (f2v + 3 * f3v * bv) / (f3v * alpha)
    return CanonicalForm(t, tau, alpha, f0bar, f1bar, f2c, rmax)


# -- one-dimensional targets ----------------------------------------------

@dataclass
class Branch:
    start: int
    beta: np.ndarray
    residual: float = float("inf")

    @property
    def stop(self):
        return self.start + len(self.beta)


@dataclass
class OnedimReport:
    t: np.ndarray
    c: tuple
    branches: list
    certificates: list
    degenerate: bool = False

    @property
    def reducible(self):
        return bool(self.certificates)

    def to_json(self):
        return {
            "c": list(self.c), "reducible": self.reducible,
            "degenerate": self.degenerate,
            "branches": [{"start": b.start, "stop": b.stop,
                          "residual": b.residual} for b in self.branches],
        }


def _cubic(fv, dv, c):
    """Coefficients (low to high) of the cubic in beta at one grid point."""
    f0, f1, f2, f3 = fv
    d2, d3 = dv
    c0, c1, c2, c3 = c
    P = np.polynomial.Polynomial
    b = P([0, 1])
    u = 3 * f3 * b + f2
    poly = (f3 * u * (3 * f3 * b ** 2 + 2 * f2 * b + f1) + (f2 * d3 - f3 * d2)
            - 3 * f3 ** 2 * (f3 * b ** 3 + f2 * b ** 2 + f1 * b + f0)
            + (3 * c3 ** 2 * c0 / c2 ** 3 - c1 * c3 / c2 ** 2) * u ** 3)
    coef = np.zeros(4)
    coef[: len(poly.coef)] = poly.coef
    return coef


def _real_roots(coef, rtol=1e-12):
    scale = np.max(np.abs(coef))
    if scale == 0:
        return np.array([]), True
    coef = np.trim_zeros(np.where(np.abs(coef) > rtol * scale, coef, 0), "b")
    degenerate = len(coef) < 4
    if len(coef) <= 1:
        return np.array([]), degenerate
    roots = np.roots(coef[::-1])
    real = roots[np.abs(roots.imag) <= 1e-7 * (1 + np.abs(roots.real))].real
    return np.sort(real), degenerate


def _track(roots_per_point):
    """Follow root branches across the grid by nearest predicted value."""
    active, done = [], []
    for b in roots_per_point[0]:
        active.append(Branch(0, [b]))
    for i in range(1, len(roots_per_point)):
        roots = list(roots_per_point[i])
        pairs = []
        for k, br in enumerate(active):
            pred = br.beta[-1] if len(br.beta) < 2 else 2 * br.beta[-1] - br.beta[-2]
            for j, r in enumerate(roots):
                pairs.append((abs(r - pred), k, j))
        pairs.sort()
        used_b, used_r, nxt = set(), set(), {}
        for _, k, j in pairs:
            if k in used_b or j in used_r:
                continue
            used_b.add(k)
            used_r.add(j)
            nxt[k] = j
        still = []
        for k, br in enumerate(active):
            if k in nxt:
                br.beta.append(roots[nxt[k]])
                still.append(br)
            else:
                done.append(br)
        for j, r in enumerate(roots):
            if j not in used_r:
                still.append(Branch(i, [r]))
        active = still
    done.extend(active)
    for br in done:
        br.beta = np.asarray(br.beta)
    return done


def onedim_candidates(X, c, grid, tol=1e-4):
    """Curves mapping ``X`` onto ``xi(t) (c0 + c1 x + c2 x^2 + c3 x^3)``.

    At every grid point the candidate ``beta`` are the real roots of a cubic
    obtained by eliminating ``beta'``; roots are joined into branches and each
    branch is tested against the remaining differential equation using a
    second-order finite-difference ``beta'``. Branches spanning the whole
    grid with residual at most ``tol`` yield certificates with
    ``alpha = c3 (3 f3 beta + f2) / (c2 f3)`` and ``xi = f3 alpha^2 / c3``.
    """
    t = _grid(grid)
    if X.q != 3:
        raise UnsupportedBranch(f"reductions are implemented for q=3 (got q={X.q})")
    c = tuple(float(v) for v in c)
    if len(c) != 4 or c[2] == 0 or c[3] == 0:
        raise ValueError("c must be (c0, c1, c2, c3) with c2 c3 != 0")
    c0, c1, c2, c3 = c
    jets = X.jets(t, 1)
    fv = np.array([np.broadcast_to(j.d[0], t.shape) for j in jets])
    dv = np.array([np.broadcast_to(j.d[1], t.shape) for j in jets])
    if np.any(fv[3] == 0):
        raise ValueError("f3 vanishes on the grid")
    roots, degenerate = [], False
    for i in range(len(t)):
        r, deg = _real_roots(_cubic(fv[:, i], dv[2:, i], c))
        degenerate |= deg
        roots.append(r)
    if degenerate:
        warnings.warn("the cubic for beta loses degree on part of the grid")
    branches = _track(roots)
    certs = []
    for br in branches:
        if len(br.beta) < 5:
            continue
        sl = slice(br.start, br.stop)
        ts, b = t[sl], br.beta
        f0, f1, f2, f3 = fv[:, sl]
        db = np.gradient(b, ts, edge_order=2)
        u = 3 * f3 * b + f2
        P = f3 * b ** 3 + f2 * b ** 2 + f1 * b + f0
        line2 = c3 ** 2 * c0 * u ** 3 / (c2 ** 3 * f3 ** 2) - (P - db)
        br.residual = float(np.max(np.abs(line2)))
        if br.residual > tol or br.start != 0 or br.stop != len(t):
            continue
        alpha = c3 * u / (c2 * f3)
        if np.any(alpha == 0):
            continue
        xi = f3 * alpha ** 2 / c3
        da = np.gradient(alpha, ts, edge_order=2)
        pushed = ((P - db) / alpha, 3 * f3 * b ** 2 + 2 * f2 * b + f1 - da / alpha,
                  alpha * u, f3 * alpha ** 2)
        coef_res = max(float(np.max(np.abs(p - xi * ck) / (1 + np.abs(xi * ck))))
                       for p, ck in zip(pushed, c))
        cert = ReductionCertificate(
            SampledCurve(ts, b, alpha), ReductionTarget1D(c, xi), t, coef_res,
            br.residual)
        certs.append(cert)
    return OnedimReport(t, c, branches, certs, degenerate)
