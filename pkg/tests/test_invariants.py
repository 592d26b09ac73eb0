from fractions import Fraction

import numpy as np
import pytest
import sympy

from _gen import curve, equation
from quasilie.abel import AbelEquation, GroupCurve, GroupElement, act_pointwise, pushforward
from quasilie.errors import InconsistencyError, UnsupportedBranch
from quasilie.expr import parse
from quasilie.invariants import (apply_D, dphi3, invariant_arrays, invariant_jet,
                                 liouville_F, phi3, phi5)
from quasilie import invariants

ONES = AbelEquation(["1", "1", "1", "1"])
DEGENERATE = AbelEquation(["1", "0", "0", "1"])


def sympy_invariants(coeffs):
    """Oracle: the invariant built symbolically from its defining formulas."""
    t = sympy.Symbol("t")
    A = [sympy.sympify(c.replace("^", "**"), locals={"t": t}) for c in coeffs]
    d = lambda e: sympy.diff(e, t)  # noqa: E731
    p3 = d(A[3]) * A[2] - A[3] * d(A[2]) - 3 * A[0] * A[3] ** 2 + A[1] * A[2] * A[3] \
        - sympy.Rational(2, 9) * A[2] ** 3
    p5 = -A[3] * d(p3) - 3 * (-d(A[3]) + A[2] ** 2 / 3 - A[1] * A[3]) * p3
    F = p3 ** 5 / p5 ** 3
    return t, p3, d(p3), p5, F


def test_constant_examples():
    r = liouville_F(ONES, 0.0)
    assert np.isclose(r.phi3, -20 / 9) and r.dphi3 == 0
    assert np.isclose(r.phi5, -40 / 9)
    assert np.isclose(r.F, float(Fraction(50, 81)))
    # oracle: exact rational evaluation
    _, p3, _, p5, F = sympy_invariants(["1", "1", "1", "1"])
    assert (p3, p5, F) == (sympy.Rational(-20, 9), sympy.Rational(-40, 9), sympy.Rational(50, 81))


def test_phi3_vanishes_without_even_terms():
    X = AbelEquation(["0", "sin(t)", "0", "2 + t^2"])
    assert np.all(phi3(X, np.linspace(0, 1, 5)) == 0)


def test_degenerate_equation_undefined():
    r = liouville_F(DEGENERATE, 0.3)
    assert np.isclose(r.phi3, -3) and r.phi5 == 0
    assert r.F is None and not r.defined
    assert r.to_json()["F"] is None


def test_pointwise_action_keeps_F():
    Y = act_pointwise(ONES, GroupElement(0, 2))
    r = liouville_F(Y, 0.0)
    assert np.isclose(r.phi3, -160 / 9) and np.isclose(r.phi5, -1280 / 9)
    assert np.isclose(r.F, 50 / 81, rtol=1e-14)


def test_constant_coefficients_dphi3_zero():
    X = AbelEquation(["0.3", "-1", "2", "0.5"])
    assert np.all(dphi3(X, np.linspace(0, 1, 4)) == 0)


def test_against_symbolic_oracle():
    coeffs = ["sin(t)", "t", "1 - t^2", "2 + cos(t)"]
    t, p3, dp3, p5, F = sympy_invariants(coeffs)
    ts = np.linspace(0, 1, 9)
    arr = invariant_arrays(AbelEquation(coeffs), ts)
    for key, expr in (("phi3", p3), ("dphi3", dp3), ("phi5", p5), ("F", F)):
        f = sympy.lambdify(t, expr, "numpy")
        assert np.allclose(arr[key], f(ts), rtol=1e-11), key


def test_list_result_for_arrays():
    out = liouville_F(ONES, np.array([0.0, 1.0]))
    assert [r.t for r in out] == [0.0, 1.0]


def test_requires_cubic():
    with pytest.raises(UnsupportedBranch):
        liouville_F(AbelEquation(["1", "1", "1"]), 0.0)


def test_cross_check_guards_transcription(monkeypatch):
    terms = invariants.dphi3_terms

    def broken(l0, l1, l2):
        out = list(terms(l0, l1, l2))
        out[0] = out[0] * 1.01
        return tuple(out)

    monkeypatch.setattr(invariants, "dphi3_terms", broken)
    with pytest.raises(InconsistencyError):
        invariant_arrays(AbelEquation(["sin(t)", "t", "1 - t^2", "2 + cos(t)"]), 0.5)


def test_cross_check_on_random_samples():
    # the two derivative routes agree (otherwise invariant_arrays would raise)
    rng = np.random.default_rng(9)
    for _ in range(30):
        X = equation(rng)
        invariant_arrays(X, np.linspace(0, 1, 10))


def test_only_two_jet_is_read():
    # equations with the same 2-jet at t = 0 share phi3, phi5 and F there
    X = AbelEquation(["1 + t", "t^2", "1", "2 - t"])
    Y = AbelEquation(["1 + t + 5*t^3", "t^2 - t^3", "1 + t^4", "2 - t + 7*t^3"])
    a, b = invariant_arrays(X, 0.0), invariant_arrays(Y, 0.0)
    for key in a:
        assert a[key] == b[key]


def test_invariance_under_random_curves():
    rng = np.random.default_rng(2024)
    ts = np.linspace(0, 1, 10)
    compared = 0
    for _ in range(100):
        X, g = equation(rng), curve(rng, 0.3, 2.0)
        a = invariant_arrays(X, ts)["F"]
        b = invariant_arrays(pushforward(X, g), ts)["F"]
        assert np.array_equal(np.isnan(a), np.isnan(b))
        ok = ~np.isnan(a)
        rel = np.abs(a[ok] - b[ok]) / np.maximum(np.abs(a[ok]), 1e-300)
        assert np.all(rel <= 1e-7), rel.max()
        compared += ok.sum()
    assert compared > 900


# -- the derivation D -------------------------------------------------------

def test_D_of_constant_equation():
    assert np.all(apply_D(ONES, np.linspace(0, 1, 5)) == 0)


def test_D_against_finite_difference():
    X = AbelEquation(["1", "1", "1", "exp(t)"])
    h = 1e-3
    F = lambda s: invariant_arrays(X, s)["F"]  # noqa: E731
    fd = (F(-2 * h) - 8 * F(-h) + 8 * F(h) - F(2 * h)) / (12 * h)
    d = apply_D(X, 0.0)
    assert abs(d - fd) <= 1e-6 * abs(fd)


def test_D_against_symbolic_oracle():
    coeffs = ["sin(t)", "t", "1 - t^2", "2 + cos(t)"]
    t, *_, F = sympy_invariants(coeffs)
    dF = sympy.lambdify(t, sympy.diff(F, t), "numpy")
    ts = np.linspace(0.1, 0.9, 5)
    assert np.allclose(apply_D(AbelEquation(coeffs), ts), dF(ts), rtol=1e-9)


def test_D_is_a_derivation():
    X = AbelEquation(["sin(t)", "t", "1 - t^2", "2 + cos(t)"])
    ts = np.linspace(0, 1, 7)
    F = invariant_jet(X, ts, 1)
    lhs = (F * F).d[1]
    rhs = 2 * F.d[0] * F.d[1]
    assert np.allclose(lhs, rhs, rtol=1e-9)


def test_D_is_invariant():
    rng = np.random.default_rng(7)
    ts = np.linspace(0, 1, 6)
    for _ in range(10):
        X, g = equation(rng), curve(rng, 0.5, 2.0)
        a, b = apply_D(X, ts), apply_D(pushforward(X, g), ts)
        ok = ~np.isnan(a)
        assert np.allclose(a[ok], b[ok], rtol=1e-6)


def test_D_undefined_propagates():
    assert np.all(np.isnan(apply_D(DEGENERATE, np.linspace(0, 1, 3))))
