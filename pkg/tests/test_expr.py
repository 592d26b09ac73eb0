import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasilie.errors import DomainError, ParseError
from quasilie.expr import eval_jet, parse
from quasilie.jets import jet_arith


def test_non_integer_exponent_rejected():
    with pytest.raises(ParseError) as err:
        parse("3/(1+4*t)^(1/2)")
    assert err.value.pos == len("3/(1+4*t)^")


@pytest.mark.parametrize("src", ["sin(t)*exp(2*t)", "t^3 - 2", "3/sqrt(1+4*t)",
                                 "-t + 1/3", "log(2 + cos(t))", "(t - 1)^2*t"])
def test_valid_sources(src):
    f = parse(src)
    assert parse(str(f)) == f
    assert str(parse(str(f))) == str(f)


@pytest.mark.parametrize("src, pos", [("tan(t)", 0), ("t +", 3), ("2*(t", 4),
                                      ("t $ 1", 2), ("x + 1", 0), ("t t", 2)])
def test_syntax_errors_carry_position(src, pos):
    with pytest.raises(ParseError) as err:
        parse(src)
    assert err.value.pos == pos


def test_rational_literal():
    assert float(parse("3/4")(0.0)) == 0.75
    assert str(parse("3/4")) == "3/4"


def test_decimal_is_exact():
    assert str(parse("0.1")) == "1/10"


def test_domain_error_names_subexpression():
    with pytest.raises(DomainError) as err:
        eval_jet(parse("1 + sqrt(t - 2)"), 0.0, 1)
    assert "t - 2" in str(err.value.expr)
    with pytest.raises(DomainError):
        eval_jet(parse("1/(t - 1)"), 1.0, 1)
    with pytest.raises(DomainError):
        eval_jet(parse("log(t)"), -1.0, 0)


# -- random trees against finite differences -------------------------------

def random_tree(rng, depth):
    if depth == 0 or rng.random() < 0.2:
        return "t" if rng.random() < 0.6 else f"{rng.uniform(-2, 2):.3f}"
    a = random_tree(rng, depth - 1)
    k = rng.integers(10)
    if k < 4:
        b = random_tree(rng, depth - 1)
        return f"({a}) {'+-*'[k % 3]} ({b})"
    if k == 4:
        return f"({a})/(2 + sin({random_tree(rng, depth - 1)}))"
    if k == 5:
        return f"sin({a})"
    if k == 6:
        return f"cos({a})"
    if k == 7:
        return f"exp(sin({a}))"
    if k == 8:
        return f"sqrt(1 + ({a})^2) + log(2 + cos({a}))"
    return f"({a})^{rng.integers(2, 4)}"


def fd_derivatives(f, t, h=1e-2):
    """Fourth-order central differences for the first two derivatives."""
    v = {k: float(f(t + k * h)) for k in (-2, -1, 0, 1, 2)}
    d1 = (v[-2] - 8 * v[-1] + 8 * v[1] - v[2]) / (12 * h)
    d2 = (-v[-2] + 16 * v[-1] - 30 * v[0] + 16 * v[1] - v[2]) / (12 * h * h)
    return v[0], d1, d2


def test_random_trees_match_finite_differences():
    rng = np.random.default_rng(20240611)
    for _ in range(100):
        src = random_tree(rng, 5)
        f = parse(src)
        t = float(rng.uniform(-1, 1))
        jet = eval_jet(f, t, 4).d
        for h in (1e-2, 5e-3):
            fd = fd_derivatives(f, t, h)
            errs = [abs(jet[k] - fd[k]) / max(1.0, abs(jet[k])) for k in range(3)]
            if max(errs) <= 1e-6:
                break
        assert max(errs) <= 1e-6, (src, t, jet[:3], fd)


def test_product_rule_path():
    rng = np.random.default_rng(3)
    for _ in range(20):
        f, g = parse(random_tree(rng, 3)), parse(random_tree(rng, 3))
        t = float(rng.uniform(-1, 1))
        lhs = eval_jet(f * g, t, 4).d
        rhs = jet_arith(eval_jet(f, t, 4), eval_jet(g, t, 4), "*").d
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


HAND = [
    ("t^3", "3*t^2"),
    ("sin(t)", "cos(t)"),
    ("cos(2*t)", "-2*sin(2*t)"),
    ("exp(3*t)", "3*exp(3*t)"),
    ("log(1 + t^2)", "2*t/(1 + t^2)"),
    ("sqrt(1 + 4*t)", "2/sqrt(1 + 4*t)"),
    ("1/(1 + t)", "-1/(1 + t)^2"),
    ("t*sin(t)", "sin(t) + t*cos(t)"),
    ("exp(t)*cos(t)", "exp(t)*cos(t) - exp(t)*sin(t)"),
    ("3/sqrt(1+4*t)", "-6/(sqrt(1+4*t))^3"),
]


@pytest.mark.parametrize("f, df", HAND)
@pytest.mark.parametrize("t", [0.0, 0.3, 0.9])
def test_shift_matches_hand_derivative(f, df, t):
    lhs = eval_jet(parse(f), t, 4).shift().d
    rhs = eval_jet(parse(df), t, 3).d
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("f, df", HAND)
def test_symbolic_diff_matches_hand_derivative(f, df):
    t = np.linspace(0, 0.9, 7)
    assert np.allclose(parse(f).diff()(t), parse(df)(t), rtol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_print_parse_round_trip(seed):
    f = parse(random_tree(np.random.default_rng(seed), 4))
    assert parse(str(f)) == f


def test_vectorised_call_matches_scalar():
    f = parse("sin(t)*exp(2*t) - t^3")
    t = np.linspace(-1, 1, 9)
    assert np.allclose(f(t), [float(f(s)) for s in t])
