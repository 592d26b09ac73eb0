"""The ten acceptance criteria at their stated tolerances and time budgets."""

import time

import numpy as np
import sympy

from _acceptance import criterion
from _gen import curve, equation, planted, positive_curve, reducible
from quasilie.abel import compose, inverse, pushforward
from quasilie.expr import parse
from quasilie.invariants import invariant_arrays
from quasilie.jetgeom import (distribution_rank, first_integral_check, lift_J, lift_T,
                              liouville_ratio, order1_fields, order2_fields, random_points,
                              theta1, theta2)
from quasilie.numerics import residual
from quasilie.reduction import canonical_form, check_CA, reduce_to_2d, solve_bernoulli
from quasilie.vfalg import (abel_basis, abel_scheme, bracket, check_morphism, in_span,
                            monomial_field, normalizer, planar_scheme, riccati_basis)

AFFINE = [monomial_field(0), monomial_field(1)]


def same_span(a, b):
    return (len(a) == len(b) and all(in_span(f, b) is not None for f in a)
            and all(in_span(f, a) is not None for f in b))


@criterion(1, "normalizer reproduction", budget=4)
def test_criterion_1_normalizers():
    for V, expect in [(riccati_basis(), riccati_basis())] + \
            [(abel_basis(q), AFFINE) for q in (3, 4, 5)]:
        start = time.perf_counter()
        W = normalizer(V, len(V) + 1)
        assert time.perf_counter() - start < 1.0
        assert same_span(W, expect), W
    return "Riccati dim 3; Abel q=3,4,5 dim 2"


@criterion(2, "Liouville invariance", budget=30)
def test_criterion_2_invariance():
    rng = np.random.default_rng(1001)
    ts = np.linspace(0, 1, 10)
    worst = 0.0
    for _ in range(100):
        X, g = equation(rng), curve(rng, 0.3, 2.0)
        a = invariant_arrays(X, ts)["F"]
        b = invariant_arrays(pushforward(X, g), ts)["F"]
        assert np.array_equal(np.isnan(a), np.isnan(b)), "definedness differs"
        ok = ~np.isnan(a)
        if ok.any():
            worst = max(worst, float(np.max(np.abs(b[ok] - a[ok]) / (1 + np.abs(a[ok])))))
    assert worst <= 1e-7, f"max deviation {worst:.3g}"
    return f"max deviation {worst:.3g}"


@criterion(3, "first-integral certificate", budget=5)
def test_criterion_3_first_integral():
    pts = random_points(12, 100, 2024)
    worst = first_integral_check(liouville_ratio(), order2_fields(abel_scheme()), pts)
    assert worst <= 1e-9, f"max normalised derivative {worst:.3g}"
    return f"max normalised derivative {worst:.3g}"


@criterion(4, "rank claims", budget=5)
def test_criterion_4_ranks():
    s = abel_scheme()
    rep2 = distribution_rank(order2_fields(s), random_points(12, 50, 0))
    full = sum(r == 8 for r in rep2.ranks)
    assert full >= 49, f"p=2 rank 8 at only {full}/50 points"
    assert rep2.invariant_count == 4, f"p=2 invariant count {rep2.invariant_count}"
    rep1 = distribution_rank(order1_fields(s), random_points(8, 50, 0))
    assert rep1.generic_rank == 8 and rep1.invariant_count == 0, (
        f"p=2 ok (rank 8, count 4); p=1 generic rank {rep1.generic_rank}, "
        f"invariant count {rep1.invariant_count} (expected 8 and 0)")
    return "p=2 rank 8 count 4; p=1 rank 8 count 0"


@criterion(5, "structure constants", budget=1)
def test_criterion_5_structure_constants():
    s = abel_scheme()
    J1, J2 = lift_J(s, 0, 2), lift_J(s, 1, 2)
    T1, T2 = lift_T(s, 0, 2), lift_T(s, 1, 2)
    A1, A2 = theta2(s, 0), theta2(s, 1)
    B1, B2 = theta1(s, 0), theta1(s, 1)
    identities = [
        (bracket(J1, J2), -J1), (bracket(J1, T2), -T1), (bracket(J2, T1), T1),
        (bracket(A1, J2), -A1), (bracket(A2, J1), A1), (bracket(B1, B2), A1 * 2),
        (bracket(B1, J2), -B1), (bracket(B1, A2), T1 * 3), (bracket(B2, J1), B1),
        (bracket(B2, A1), -T1 * 3),
    ]
    bad = [i for i, (lhs, rhs) in enumerate(identities) if lhs != rhs]
    assert not bad, f"identities {bad} fail"
    return "10/10 exact"


@criterion(6, "reduction round trip", budget=60)
def test_criterion_6_round_trip():
    rng = np.random.default_rng(606)
    grid = np.linspace(0, 1, 512)
    worst_ca = worst_res = 0.0
    for _ in range(20):
        X, mu, _, _ = reducible(rng)
        ca = check_CA(X, grid, rtol=1e-8)
        assert ca.passed, f"condition fails, relative {ca.relative:.3g}"
        worst_ca = max(worst_ca, ca.relative)
        cert = reduce_to_2d(X, mu, grid=grid)
        sol = solve_bernoulli(cert.target, cert.notes["xbar0"], grid)
        x = cert.alpha_samples() * sol.x + cert.beta_samples()
        res = residual(grid, x, X)
        assert res <= 1e-5, f"pulled-back residual {res:.3g}"
        worst_res = max(worst_res, res)
    return f"max condition residual {worst_ca:.3g}, max solution residual {worst_res:.3g}"


@criterion(7, "condition is an orbit invariant", budget=30)
def test_criterion_7_ca_invariance():
    rng = np.random.default_rng(707)
    t = np.linspace(0, 1, 129)
    for _ in range(30):
        X, *_ = reducible(rng)
        assert check_CA(pushforward(X, positive_curve(rng, 0.5, 2.0)), t).passed
    for _ in range(30):
        X = equation(rng, positive_f3=True)
        assert not check_CA(X, t).passed
        assert not check_CA(pushforward(X, curve(rng, 0.5, 2.0)), t).passed
    return "30 passing stay passing, 30 failing stay failing"


@criterion(8, "canonical form", budget=30)
def test_criterion_8_canonical():
    rng = np.random.default_rng(808)
    grid = np.linspace(0, 1, 257)
    worst = 0.0
    for _ in range(10):
        X, beta = planted(rng)
        cf = canonical_form(X, beta, grid)
        assert cf.max_f0 <= 1e-7 and cf.max_f1 <= 1e-7, (cf.max_f0, cf.max_f1)
        assert np.all(np.diff(cf.tau) > 0)
        worst = max(worst, cf.max_f0, cf.max_f1)
    f2 = parse("3/sqrt(1+4*t)").jet(grid, 1).d
    quad = float(np.max(np.abs(9 * f2[1] + 2 * f2[0] ** 3)))
    assert quad <= 1e-10, f"9 f2' + 2 f2^3 residual {quad:.3g}"
    return f"max |f0bar|, |f1bar| {worst:.3g}; 9 f2' + 2 f2^3 residual {quad:.3g}"


@criterion(9, "morphism example", budget=5)
def test_criterion_9_morphism():
    rep = check_morphism(abel_scheme(), planar_scheme(), sympy.eye(4))
    assert rep.equivariant and rep.maps_w_into_w and rep.kind == "isomorphism", rep
    return "isomorphism"


@criterion(10, "group-law properties", budget=30)
def test_criterion_10_group_law():
    rng = np.random.default_rng(1010)
    t = np.linspace(0, 1, 11)
    worst = 0.0
    for _ in range(50):
        X, g, h = equation(rng), curve(rng), curve(rng)
        ref = X.coefficient_values(t)
        two_step = pushforward(pushforward(X, h), g).coefficient_values(t)
        one_step = pushforward(X, compose(h, g)).coefficient_values(t)
        back = pushforward(pushforward(X, g), inverse(g)).coefficient_values(t)
        worst = max(worst,
                    float(np.max(np.abs(two_step - one_step) / np.maximum(1, np.abs(one_step)))),
                    float(np.max(np.abs(back - ref) / np.maximum(1, np.abs(ref)))))
    assert worst <= 1e-9, f"max relative deviation {worst:.3g}"
    return f"max relative deviation {worst:.3g}"
