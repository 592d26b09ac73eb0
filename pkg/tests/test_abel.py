import numpy as np
import pytest
import sympy

from _gen import curve, equation
from quasilie.abel import (AbelEquation, GroupCurve, GroupElement, act_pointwise, compose,
                           flow_conjugacy_residual, inverse, pushforward)
from quasilie.errors import Diverged, DomainError, UnsupportedBranch
from quasilie.expr import parse

CUBE = AbelEquation(["0", "0", "0", "1"])
GRID = np.linspace(0, 1, 11)


def coeffs(X, t=GRID):
    return X.coefficient_values(t)


def close(X, Y, rtol=1e-9, t=GRID):
    a, b = coeffs(X, t), coeffs(Y, t)
    return np.all(np.abs(a - b) <= rtol * np.maximum(1, np.abs(b)))


# -- group law -------------------------------------------------------------

def test_compose_example():
    assert compose(GroupElement(1, 2), GroupElement(3, 4)) == GroupElement(7, 8)


def test_identity_element():
    g = GroupElement(0.3, -1.7)
    assert compose(GroupElement(0, 1), g) == g


def test_inverse_element():
    g = GroupElement(1, 2)
    assert compose(g, inverse(g)) == GroupElement(0, 1)
    assert inverse(g) == GroupElement(-0.5, 0.5)


def test_alpha_nonzero():
    with pytest.raises(ValueError):
        GroupElement(1, 0)


def test_compose_is_composition_of_maps():
    rng = np.random.default_rng(0)
    for _ in range(20):
        g = GroupElement(*rng.normal(size=2))
        h = GroupElement(*rng.normal(size=2))
        x = rng.normal()
        # (b, a) acts as x -> a x + b
        lhs = g.alpha * (h.alpha * x + h.beta) + g.beta
        gh = compose(g, h)
        assert np.isclose(gh.alpha * x + gh.beta, lhs)


# -- pushforward -----------------------------------------------------------

def symbolic_pushforward(f, beta, alpha):
    """Oracle: substitute x = alpha xbar + beta with sympy and read off coefficients."""
    t, xb = sympy.symbols("t xbar")
    F = [sympy.sympify(c.replace("^", "**"), locals={"t": t}) for c in f]
    b = sympy.sympify(beta.replace("^", "**"), locals={"t": t})
    a = sympy.sympify(alpha.replace("^", "**"), locals={"t": t})
    x = a * xb + b
    rhs = (sum(F[k] * x ** k for k in range(4)) - sympy.diff(x, t).subs(xb, 0)
           - sympy.diff(a, t) * xb) / a
    poly = sympy.Poly(sympy.expand(rhs), xb)
    return [sympy.lambdify(t, poly.coeff_monomial(xb ** k), "numpy") for k in range(4)]


def test_pushforward_constant_example():
    Y = pushforward(CUBE, GroupCurve.constant(1, 2))
    assert [str(c) for c in Y.coeffs] == ["1/2", "3", "6", "4"]


def test_pushforward_identity():
    X = AbelEquation(["sin(t)", "t", "1 - t^2", "exp(t)"])
    assert pushforward(X, GroupCurve.identity()) == X


def test_pushforward_exponential_curve():
    Y = pushforward(CUBE, GroupCurve(parse("0"), parse("exp(t)")))
    t = np.linspace(0, 1, 7)
    assert np.allclose(coeffs(Y, t), [0 * t, -1 + 0 * t, 0 * t, np.exp(2 * t)])


def test_pushforward_against_symbolic_oracle():
    f = ["sin(t)", "t", "1 - t^2", "2 + cos(t)"]
    beta, alpha = "t^2 - 1", "2 + sin(3*t)"
    Y = pushforward(AbelEquation(f), GroupCurve(parse(beta), parse(alpha)))
    oracle = symbolic_pushforward(f, beta, alpha)
    for k in range(4):
        assert np.allclose(Y.coeffs[k](GRID), oracle[k](GRID) + 0 * GRID, rtol=1e-12)


def test_pushforward_requires_cubic():
    with pytest.raises(UnsupportedBranch):
        pushforward(AbelEquation(["1", "0", "1"]), GroupCurve.identity())


def test_alpha_zero_on_grid():
    with pytest.raises(DomainError):
        pushforward(CUBE, GroupCurve(parse("0"), parse("t - 1/2")), grid=GRID)


def test_act_pointwise_examples():
    assert [str(c) for c in act_pointwise(CUBE, GroupElement(1, 2)).coeffs] == \
        ["1/2", "3", "6", "4"]
    X = AbelEquation(["1", "1", "1", "1"])
    assert [str(c) for c in act_pointwise(X, GroupElement(0, 2)).coeffs] == \
        ["1/2", "1", "2", "4"]
    assert act_pointwise(X, GroupElement(0, 1)) == X


def test_result_is_cubic():
    rng = np.random.default_rng(1)
    for _ in range(10):
        Y = pushforward(equation(rng), curve(rng))
        assert isinstance(Y, AbelEquation) and Y.q == 3


def test_action_property():
    # applying h and then g equals applying the curve t -> h_t * g_t
    rng = np.random.default_rng(2)
    for _ in range(50):
        X, g, h = equation(rng), curve(rng), curve(rng)
        assert close(pushforward(pushforward(X, h), g), pushforward(X, compose(h, g)))


def test_inverse_property():
    rng = np.random.default_rng(3)
    for _ in range(20):
        X, g = equation(rng), curve(rng)
        assert close(pushforward(pushforward(X, g), inverse(g)), X)


def test_curve_json_round_trip():
    g = GroupCurve(parse("t^2 - 1"), parse("2 + sin(3*t)"))
    assert GroupCurve.from_json(g.to_json()) == g


def test_equation_json():
    X = AbelEquation(["sin(t)", "t", "1 - t^2", "1"])
    assert AbelEquation.from_json(X.to_json()) == X
    with pytest.raises(ValueError):
        AbelEquation.from_json({"q": 3})
    with pytest.raises(ValueError):
        AbelEquation.from_json({"q": 2, "coeffs": ["1", "1", "1", "1"]})


# -- flow conjugacy --------------------------------------------------------

def test_flow_conjugacy_identity():
    X = AbelEquation(["sin(t)", "-1", "0.5", "-0.2"])
    assert flow_conjugacy_residual(X, GroupCurve.identity(), 0.3, (0, 1), 512) <= 1e-8


def test_flow_conjugacy_constant_curve():
    # x = 2 xbar + 1 with xbar(0) = 0.1 gives x(0) = 1.2, which blows up at
    # t = 1/(2 * 1.2^2) ~ 0.347; the window stays short of that.
    assert flow_conjugacy_residual(CUBE, GroupCurve.constant(1, 2), 0.1, (0, 0.3), 2048) <= 1e-6


def test_flow_conjugacy_constant_curve_blows_up_on_long_window():
    with pytest.raises(Diverged) as err:
        flow_conjugacy_residual(CUBE, GroupCurve.constant(1, 2), 0.1, (0, 0.5), 2048)
    assert abs(err.value.time - 1 / (2 * 1.2 ** 2)) < 1e-3


def test_flow_conjugacy_closed_form():
    # closed form of dx/dt = x^3 versus the mapped-back transformed solution
    from quasilie.numerics import integrate
    Y = pushforward(CUBE, GroupCurve.constant(1, 2))
    sol = integrate(Y, 0.1, (0, 0.3), 2048)
    x = 2 * sol.x + 1
    assert np.allclose(x, 1.2 / np.sqrt(1 - 2 * 1.44 * sol.t), rtol=1e-9)


def test_flow_conjugacy_exponential_curve():
    g = GroupCurve(parse("0"), parse("exp(t)"))
    assert flow_conjugacy_residual(CUBE, g, 0.1, (0, 1), 512) <= 1e-6


def test_flow_conjugacy_random_curves():
    from quasilie.numerics import integrate
    rng = np.random.default_rng(4)
    for _ in range(20):
        X, g = equation(rng), curve(rng, 0.5, 2.0)
        xbar0 = float(rng.uniform(-0.3, 0.3))
        # keep the window at most half way to any blow-up of the original flow
        probe = integrate(X, g.alpha(0.0) * xbar0 + g.beta(0.0), (0, 1), 2048)
        end = 0.5 * min(1.0, probe.blowup_time) if probe.blowup else 0.5
        assert flow_conjugacy_residual(X, g, xbar0, (0, end), 512) <= 1e-6


def test_wrong_orientation_is_detected():
    # using the inverse curve to map back must not certify the law
    g = GroupCurve(parse("0.5*t"), parse("1 + 0.5*sin(t)"))
    X = AbelEquation(["1", "-1", "0", "-1"])
    from quasilie.numerics import integrate, residual
    sol = integrate(pushforward(X, g), 0.2, (0, 1), 512)
    wrong = inverse(g)
    x = wrong.alpha(sol.t) * sol.x + wrong.beta(sol.t)
    assert residual(sol.t, x, X) > 1e-2
