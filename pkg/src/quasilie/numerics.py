"""Fixed-step RK4 integration and ODE residuals.

The integrator is deliberately not adaptive: every certificate produced
elsewhere must be reproducible bit for bit from its grid.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["OdeSolution", "integrate", "residual", "derivative", "uniform_grid",
           "BLOWUP_BOUND"]

BLOWUP_BOUND = 1e8


@dataclass
class OdeSolution:
    t: np.ndarray
    x: np.ndarray
    residual_estimate: float
    blowup: bool = False
    blowup_time: float = None

    def as_csv(self):
        return "".join(f"{ti:.17g},{xi:.17g}\n" for ti, xi in zip(self.t, self.x))


def uniform_grid(window, steps):
    t0, t1 = map(float, window)
    if not t1 > t0:
        raise ValueError(f"empty window {window}")
    return np.linspace(t0, t1, int(steps) + 1)


def _stepper(rhs, t0, h, n_steps):
    """Return ``f(j, x)`` evaluating the field at ``t0 + j*h/4``."""
    fine = t0 + np.arange(4 * n_steps + 1) * (h / 4)
    table = getattr(rhs, "coefficient_values", None)
    if table is not None:
        P = table(fine)  # (q + 1, len(fine))

        def f(j, x):
            acc = P[-1, j]
            for k in range(P.shape[0] - 2, -1, -1):
                acc = acc * x + P[k, j]
            return acc
    else:
        if not callable(rhs):
            raise TypeError("rhs must be callable or an AbelEquation")

        def f(j, x):
            return rhs(fine[j], x)
    return f


def _rk4(f, j, x, h, sub):
    """One RK4 step of size ``h`` from fine index ``j`` (``sub`` quarters)."""
    k1 = f(j, x)
    k2 = f(j + sub // 2, x + 0.5 * h * k1)
    k3 = f(j + sub // 2, x + 0.5 * h * k2)
    k4 = f(j + sub, x + h * k3)
    return x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(rhs, x0, window, steps):
    """Classical RK4 on ``steps`` equal steps over ``window``.

    ``rhs`` is either an :class:`~quasilie.abel.AbelEquation` or a callable
    ``f(t, x)``. The residual estimate bounds what :func:`residual` will
    measure on the samples: the larger of the local error per unit time
    (every step compared against two half steps) and the truncation error of
    the five-point difference, estimated against a seven-point one. A state
    leaving ``|x| <= 1e8`` (or turning non-finite) stops the integration and
    the partial solution is returned with ``blowup=True``.
    """
    steps = int(steps)
    if steps < 16:
        raise ValueError("at least 16 steps are required")
    t = uniform_grid(window, steps)
    h = t[1] - t[0]
    f = _stepper(rhs, t[0], h, steps)
    xs = np.empty(steps + 1)
    xs[0] = float(x0)
    est = 0.0
    with np.errstate(all="ignore"):
        for n in range(steps):
            j = 4 * n
            x = xs[n]
            coarse = _rk4(f, j, x, h, 4)
            fine = _rk4(f, j + 2, _rk4(f, j, x, h / 2, 2), h / 2, 2)
            if not (np.isfinite(coarse) and abs(coarse) <= BLOWUP_BOUND):
                est = max(est, _stencil_error(xs[: n + 1], h))
                return OdeSolution(t[: n + 1], xs[: n + 1], est, True, t[n + 1])
            local = abs(coarse - fine) * 16.0 / 15.0
            if np.isfinite(local):
                est = max(est, local / h)
            xs[n + 1] = coarse
    return OdeSolution(t, xs, max(est, _stencil_error(xs, h)))


def _stencil_error(x, h):
    """Gap between the five- and seven-point central differences."""
    if len(x) < 7:
        return 0.0
    d4 = (x[1:-5] - 8 * x[2:-4] + 8 * x[4:-2] - x[5:-1]) / (12 * h)
    d6 = (-x[:-6] + 9 * x[1:-5] - 45 * x[2:-4] + 45 * x[4:-2] - 9 * x[5:-1]
          + x[6:]) / (60 * h)
    gap = np.abs(d4 - d6)
    gap = gap[np.isfinite(gap)]
    return float(np.max(gap)) if gap.size else 0.0


def derivative(t, x):
    """Fourth-order central differences; one-sided stencils at the ends."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if len(x) < 5:
        raise ValueError("at least 5 samples are required")
    h = t[1] - t[0]
    if not np.allclose(np.diff(t), h, rtol=1e-9, atol=0):
        raise ValueError("samples must lie on a uniform grid")
    d = np.empty_like(x)
    d[2:-2] = (x[:-4] - 8 * x[1:-3] + 8 * x[3:-1] - x[4:]) / (12 * h)
    # fourth-order one-sided stencils
    d[0] = (-25 * x[0] + 48 * x[1] - 36 * x[2] + 16 * x[3] - 3 * x[4]) / (12 * h)
    d[1] = (-3 * x[0] - 10 * x[1] + 18 * x[2] - 6 * x[3] + x[4]) / (12 * h)
    d[-1] = (25 * x[-1] - 48 * x[-2] + 36 * x[-3] - 16 * x[-4] + 3 * x[-5]) / (12 * h)
    d[-2] = (3 * x[-1] + 10 * x[-2] - 18 * x[-3] + 6 * x[-4] - x[-5]) / (12 * h)
    return d


def _field_values(rhs, t, x):
    table = getattr(rhs, "coefficient_values", None)
    if table is not None:
        P = table(t)
        acc = P[-1]
        for k in range(P.shape[0] - 2, -1, -1):
            acc = acc * x + P[k]
        return acc
    return np.array([rhs(ti, xi) for ti, xi in zip(t, x)])


def residual(t, x, rhs):
    """Max over the interior grid of ``|dx/dt - rhs(t, x)|``.

    ``dx/dt`` comes from a five-point central difference, so at least five
    samples on a uniform grid are needed.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if len(x) < 5:
        raise ValueError("at least 5 samples are required")
    dx = derivative(t, x)
    r = np.abs(dx - _field_values(rhs, t, x))
    return float(np.max(r[2:-2]))
