"""Vector fields on jet spaces of a quasi-Lie scheme.

A point of the p-th jet space of ``V`` (dimension ``r``) is a real vector
of length ``(p + 1) r``; coordinate ``j*r + k`` is the j-th t-derivative of
the k-th coefficient. Every field here is affine in these coordinates and is
stored as an exact :class:`~quasilie.vfalg.PolyVF`.

For an element ``L`` of ``W`` with ad matrix ``M`` on ``V``:

* ``lift_J(L)`` acts by ``M`` on every level;
* ``lift_T(L)`` is the constant field ``L`` on the top level;
* ``theta2(L) = (0, L, -M l0)`` and ``theta1(L) = (L, -M l0, -2 M l1)`` on
  the second jet space.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .errors import DimensionMismatch, UnsupportedBranch
from .invariants import is_defined, phi3_lambda, phi5_lambda
from .jets import Jet
from .vfalg import PolyVF, bracket, in_span, representation

__all__ = [
    "lift_J", "lift_T", "theta1", "theta2", "order1_fields", "order1_rank_variants",
    "order0_fields", "order2_fields", "fields_for_order", "distribution_rank",
    "RankReport", "first_integral_check", "PowerRatio", "liouville_ratio",
    "invariant_count", "rank_report", "involutive_rank", "random_points",
    "split_levels",
]


def _affine_field(const, matrix, n):
    """PolyVF with component ``i = const[i] + sum_j matrix[i][j] x_j``."""
    comps = []
    for i in range(n):
        comp = {}
        if const.get(i):
            comp[(0,) * n] = Fraction(const[i])
        for j, c in matrix.get(i, {}).items():
            if c:
                e = [0] * n
                e[j] = 1
                comp[tuple(e)] = Fraction(c)
        comps.append(comp)
    return PolyVF(comps, n)


def _ad(s, w_index):
    if not 0 <= w_index < len(s.W_basis):
        raise IndexError(f"W index {w_index} out of range (|W| = {len(s.W_basis)})")
    M = representation(s)[w_index]
    return [[Fraction(int(M[i, j].p), int(M[i, j].q)) for j in range(s.r)]
            for i in range(s.r)]


def _w_coords(s, w_index):
    if not 0 <= w_index < len(s.W_basis):
        raise IndexError(f"W index {w_index} out of range (|W| = {len(s.W_basis)})")
    return in_span(s.W_basis[w_index], s.V_basis)


def _block(M, r, out_level, in_level, factor=1):
    """Matrix entries mapping level ``in_level`` to ``out_level`` through ``M``."""
    entries = {}
    for i in range(r):
        row = {in_level * r + k: factor * M[i][k] for k in range(r) if M[i][k]}
        if row:
            entries[out_level * r + i] = row
    return entries


def _merge(*blocks):
    out = {}
    for b in blocks:
        for i, row in b.items():
            tgt = out.setdefault(i, {})
            for j, c in row.items():
                tgt[j] = tgt.get(j, 0) + c
    return out


def _const(coords, r, level, factor=1):
    return {level * r + k: factor * c for k, c in enumerate(coords) if c}


def _check_p(p):
    if p not in (0, 1, 2):
        raise UnsupportedBranch(f"jet order must be 0, 1 or 2 (got {p})")


def lift_J(s, w_index, p):
    """The diagonal lift of ``ad`` of ``W[w_index]`` to every jet level."""
    _check_p(p)
    M, r = _ad(s, w_index), s.r
    n = (p + 1) * r
    return _affine_field({}, _merge(*[_block(M, r, j, j) for j in range(p + 1)]), n)


def lift_T(s, w_index, p):
    """The constant field ``W[w_index]`` on the top jet level."""
    _check_p(p)
    r = s.r
    return _affine_field(_const(_w_coords(s, w_index), r, p), {}, (p + 1) * r)


def theta2(s, w_index):
    M, r = _ad(s, w_index), s.r
    return _affine_field(_const(_w_coords(s, w_index), r, 1),
                         _block(M, r, 2, 0, -1), 3 * r)


def theta1(s, w_index):
    M, r = _ad(s, w_index), s.r
    return _affine_field(_const(_w_coords(s, w_index), r, 0),
                         _merge(_block(M, r, 1, 0, -1), _block(M, r, 2, 1, -2)),
                         3 * r)


def _zeta(s, w_index):
    """Order-one flow field ``(-L, M l0)``."""
    M, r = _ad(s, w_index), s.r
    return _affine_field(_const(_w_coords(s, w_index), r, 0, -1),
                         _block(M, r, 1, 0), 2 * r)


def order0_fields(s):
    return ([lift_J(s, i, 0) for i in range(len(s.W_basis))]
            + [lift_T(s, i, 0) for i in range(len(s.W_basis))])


def order1_fields(s):
    """J-lifts, T-lifts, the two flow fields and the brackets
    ``[Z_1, J_2]`` and ``[Z_2, J_1]`` (for a two-dimensional ``W``)."""
    m = len(s.W_basis)
    J = [lift_J(s, i, 1) for i in range(m)]
    T = [lift_T(s, i, 1) for i in range(m)]
    Z = [_zeta(s, i) for i in range(m)]
    extra = [bracket(Z[i], J[(i + 1) % m]) for i in range(m)] if m > 1 else []
    return J + T + Z + extra


def order1_rank_variants(s, points):
    """Generic rank of the order-one distribution under each choice of brackets.

    Keys are ``"base"`` (no brackets), ``"all"`` (every ``[Z_a, J_b]``) and
    ``"Za,Jb+Zc,Jd"`` for each pair of brackets (1-based indices).
    """
    m = len(s.W_basis)
    J = [lift_J(s, i, 1) for i in range(m)]
    T = [lift_T(s, i, 1) for i in range(m)]
    Z = [_zeta(s, i) for i in range(m)]
    base = J + T + Z
    brs = {(a, b): bracket(Z[a], J[b]) for a in range(m) for b in range(m)}
    out = {"base": distribution_rank(base, points).generic_rank,
           "all": distribution_rank(base + list(brs.values()), points).generic_rank}
    for (k1, v1), (k2, v2) in combinations(brs.items(), 2):
        key = f"Z{k1[0] + 1},J{k1[1] + 1}+Z{k2[0] + 1},J{k2[1] + 1}"
        out[key] = distribution_rank(base + [v1, v2], points).generic_rank
    return out


def order2_fields(s):
    """J-lifts, T-lifts, then ``theta2`` and ``theta1`` for each W element."""
    m = range(len(s.W_basis))
    return ([lift_J(s, i, 2) for i in m] + [lift_T(s, i, 2) for i in m]
            + [theta2(s, i) for i in m] + [theta1(s, i) for i in m])


def fields_for_order(s, p):
    _check_p(p)
    return (order0_fields, order1_fields, order2_fields)[p](s)


# -- numeric rank ------------------------------------------------------------

def _affine_arrays(vf):
    """``(c, B)`` with ``vf(x) = c + B x`` for a field of degree <= 1."""
    n = vf.dim
    c, B = np.zeros(n), np.zeros((n, n))
    for i, comp in enumerate(vf.components):
        for m, coef in comp.items():
            d = sum(m)
            if d == 0:
                c[i] += float(coef)
            elif d == 1:
                B[i, m.index(1)] += float(coef)
            else:
                raise ValueError("only affine fields are supported")
    return c, B


def _evaluate(fields, points):
    """Array ``(n_points, n_fields, dim)`` of field values."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty((pts.shape[0], len(fields), pts.shape[1]))
    for k, f in enumerate(fields):
        if f.dim != pts.shape[1]:
            raise DimensionMismatch(f"field on R^{f.dim}, points in R^{pts.shape[1]}")
        try:
            c, B = _affine_arrays(f)
            out[:, k] = c + pts @ B.T
        except ValueError:
            out[:, k] = f.evaluate(pts)
    return out


@dataclass
class RankReport:
    ranks: list
    spectra: list
    dim: int
    seed: int = None
    p: int = None

    @property
    def generic_rank(self):
        return max(self.ranks)

    @property
    def invariant_count(self):
        return self.dim - self.generic_rank

    def to_json(self):
        return {"seed": self.seed, "p": self.p, "dim": self.dim,
                "generic_rank": self.generic_rank,
                "invariant_count": self.invariant_count,
                "ranks": list(self.ranks),
                "singular_values": [list(map(float, s)) for s in self.spectra]}


def distribution_rank(fields, points, rtol=1e-9):
    """Per-point rank of the span of ``fields`` (SVD, threshold ``rtol * s_max``)."""
    if not fields:
        raise ValueError("no fields given")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise ValueError("no points given")
    vals = _evaluate(fields, pts)
    ranks, spectra = [], []
    for V in vals:
        s = np.linalg.svd(V, compute_uv=False)
        smax = s[0] if s.size else 0.0
        ranks.append(int(np.sum(s > rtol * smax)) if smax > 0 else 0)
        spectra.append(s)
    return RankReport(ranks, spectra, pts.shape[1])


def random_points(dim, count, seed):
    return np.random.default_rng(seed).standard_normal((count, dim))


def invariant_count(s, p, samples=50, seed=0):
    """Jet-space dimension minus the generic rank over random normal points."""
    fields = fields_for_order(s, p)
    pts = random_points((p + 1) * s.r, samples, seed)
    return distribution_rank(fields, pts).invariant_count


def rank_report(s, p, samples=50, seed=0):
    fields = fields_for_order(s, p)
    rep = distribution_rank(fields, random_points((p + 1) * s.r, samples, seed))
    rep.seed, rep.p = seed, p
    return rep


def involutive_rank(fields, points):
    """Rank after adjoining all pairwise brackets (equal to the original rank
    exactly when the distribution is involutive at the points)."""
    brs = [bracket(a, b) for a, b in combinations(fields, 2)]
    return distribution_rank(list(fields) + brs, points)


# -- first integrals ---------------------------------------------------------

def split_levels(coords, r):
    """``[l0, l1, ...]`` with ``l_j[k] = coords[j*r + k]``."""
    n = len(coords)
    return [[coords[j * r + k] for k in range(r)] for j in range(n // r)]


@dataclass
class PowerRatio:
    """``num(x)^a / den(x)^b`` for callables acting on coordinate sequences."""

    num: object
    den: object
    a: int
    b: int


def liouville_ratio(r=4):
    """``phi3^5 / phi5^3`` in second-jet coordinates of the cubic Abel scheme."""
    def p3(x):
        l0, l1, _ = split_levels(x, r)
        return phi3_lambda(l0, l1)

    def p5(x):
        l0, l1, l2 = split_levels(x, r)
        return phi5_lambda(l0, l1, l2)

    return PowerRatio(p3, p5, 5, 3)


def _directional(fn, pts, vals):
    """``d/ds fn(pts + s vals)`` at ``s = 0`` and ``fn(pts)``, batched over points."""
    coords = [Jet(np.stack([pts[:, i], vals[:, i]])) for i in range(pts.shape[1])]
    out = fn(coords)
    if not isinstance(out, Jet):
        z = np.broadcast_to(np.asarray(out, dtype=float), (pts.shape[0],))
        return z, np.zeros_like(z)
    return out.d[0], out.d[1]


def first_integral_check(F, fields, points):
    """Largest normalised derivative of ``F`` along ``fields`` at ``points``.

    For a :class:`PowerRatio` the test uses the cleared form
    ``a den v(num) - b num v(den)`` divided by ``1 + |num den|``, and points
    where the ratio is undefined are skipped. For a plain callable ``F`` the
    value is ``|v(F)| / (1 + |F|)``. Directional derivatives use first-order
    jets, so no finite differences are involved.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = _evaluate(fields, pts)
    worst = 0.0
    if isinstance(F, PowerRatio):
        n0, _ = _directional(F.num, pts, np.zeros_like(pts))
        d0, _ = _directional(F.den, pts, np.zeros_like(pts))
        keep = is_defined(n0, d0) if (F.a, F.b) == (5, 3) else d0 != 0
        if not np.any(keep):
            raise ValueError("F is undefined at every sampled point")
        for k in range(len(fields)):
            n, dn = _directional(F.num, pts, vals[:, k])
            d, dd = _directional(F.den, pts, vals[:, k])
            cleared = np.abs(F.a * d * dn - F.b * n * dd) / (1 + np.abs(n * d))
            worst = max(worst, float(np.max(cleared[keep])))
        return worst
    for k in range(len(fields)):
        f, df = _directional(F, pts, vals[:, k])
        worst = max(worst, float(np.max(np.abs(df) / (1 + np.abs(f)))))
    return worst
