"""Exact algebra of polynomial vector fields.

A :class:`PolyVF` on R^n stores one polynomial per coordinate, with
:class:`fractions.Fraction` coefficients keyed by exponent tuples. Zero terms
are never stored, so equality is syntactic. Vector fields on the line and the
plane are the main use; the jet-space fields in :mod:`quasilie.jetgeom` reuse
the same class on R^8 and R^12.

Linear algebra over the rationals (span membership, nullspaces, ranks) goes
through :mod:`sympy` matrices.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np
import sympy

from .errors import DimensionMismatch, SchemeError

__all__ = [
    "PolyVF", "SchemeSpec", "SchemeReport", "MorphismReport",
    "bracket", "in_span", "normalizer", "check_scheme", "representation",
    "check_morphism", "nilpotency_index", "monomial_field",
    "riccati_basis", "abel_basis", "planar_basis", "abel_scheme",
    "planar_scheme", "riccati_scheme",
]


def _frac(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, sympy.Rational):
        return Fraction(int(x.p), int(x.q))
    return Fraction(x)


def _rat(x):
    return sympy.Rational(x.numerator, x.denominator)


# -- sparse polynomials: dict {exponent tuple: Fraction} ---------------------

def _padd(p, q, scale=1):
    out = dict(p)
    for m, c in q.items():
        v = out.get(m, 0) + scale * c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def _pmul(p, q):
    out = {}
    for (m1, c1), (m2, c2) in product(p.items(), q.items()):
        m = tuple(a + b for a, b in zip(m1, m2))
        v = out.get(m, 0) + c1 * c2
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def _pdiff(p, i):
    out = {}
    for m, c in p.items():
        if m[i]:
            mm = m[:i] + (m[i] - 1,) + m[i + 1:]
            out[mm] = c * m[i]
    return out


class PolyVF:
    """Polynomial vector field with exact rational coefficients."""

    __slots__ = ("dim", "_comps", "_hash")

    def __init__(self, components, dim=None):
        comps = []
        for comp in components:
            d = {}
            for m, c in dict(comp).items():
                m = (m,) if isinstance(m, int) else tuple(int(e) for e in m)
                c = _frac(c)
                if c:
                    d[m] = d.get(m, 0) + c
            comps.append({m: c for m, c in d.items() if c})
        if dim is None:
            dim = len(comps)
        if len(comps) != dim:
            raise DimensionMismatch(
                f"{len(comps)} components for a field on R^{dim}")
        for comp in comps:
            for m in comp:
                if len(m) != dim:
                    raise DimensionMismatch(
                        f"monomial {m} has {len(m)} exponents, expected {dim}")
        self.dim = dim
        self._comps = tuple(comps)
        self._hash = None

    @classmethod
    def zero(cls, dim):
        return cls([{}] * dim, dim)

    @property
    def components(self):
        return tuple(dict(c) for c in self._comps)

    def _key(self):
        return (self.dim,) + tuple(tuple(sorted(c.items())) for c in self._comps)

    def __eq__(self, other):
        if not isinstance(other, PolyVF):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._key())
        return self._hash

    def is_zero(self):
        return not any(self._comps)

    def degree(self):
        """Total degree, ``-inf`` for the zero field."""
        degs = [sum(m) for c in self._comps for m in c]
        return max(degs) if degs else float("-inf")

    def _check(self, other):
        if not isinstance(other, PolyVF):
            raise TypeError("expected a PolyVF")
        if other.dim != self.dim:
            raise DimensionMismatch(f"fields on R^{self.dim} and R^{other.dim}")

    def __add__(self, other):
        self._check(other)
        return PolyVF([_padd(a, b) for a, b in zip(self._comps, other._comps)],
                      self.dim)

    def __sub__(self, other):
        self._check(other)
        return PolyVF([_padd(a, b, -1)
                       for a, b in zip(self._comps, other._comps)], self.dim)

    def __neg__(self):
        return self * -1

    def __mul__(self, k):
        k = _frac(k)
        return PolyVF([{m: k * c for m, c in comp.items()}
                       for comp in self._comps], self.dim)

    __rmul__ = __mul__

    def coefficient_vector(self, monomials):
        """Coefficients in the order of ``monomials`` ((component, exps) pairs)."""
        return [self._comps[i].get(m, Fraction(0)) for i, m in monomials]

    def monomials(self):
        return {(i, m) for i, c in enumerate(self._comps) for m in c}

    def evaluate(self, points):
        """Float values at ``points`` (shape ``(m, dim)``); returns ``(m, dim)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros_like(pts)
        for i, comp in enumerate(self._comps):
            for m, c in comp.items():
                term = np.full(pts.shape[0], float(c))
                for j, e in enumerate(m):
                    if e:
                        term = term * pts[:, j] ** e
                out[:, i] += term
        return out

    def apply(self, poly):
        """Directional derivative of a polynomial (dict) along the field."""
        out = {}
        for i, comp in enumerate(self._comps):
            if comp:
                out = _padd(out, _pmul(comp, _pdiff(poly, i)))
        return out

    def to_json(self):
        return {
            "dim": self.dim,
            "components": [
                [[list(m), c.numerator, c.denominator]
                 for m, c in sorted(comp.items())]
                for comp in self._comps
            ],
        }

    @classmethod
    def from_json(cls, obj):
        try:
            dim = int(obj["dim"])
            comps = []
            for terms in obj["components"]:
                comp = {}
                for mono, num, den in terms:
                    m = tuple(int(e) for e in mono)
                    comp[m] = comp.get(m, 0) + Fraction(int(num), int(den))
                comps.append(comp)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed vector field JSON: {exc}") from exc
        return cls(comps, dim)

    def __repr__(self):
        names = ("x", "y") if self.dim <= 2 else [f"u{i}" for i in range(self.dim)]
        parts = []
        for i, comp in enumerate(self._comps):
            if not comp:
                continue
            terms = []
            for m, c in sorted(comp.items()):
                mono = "*".join(
                    names[j] + (f"^{e}" if e > 1 else "")
                    for j, e in enumerate(m) if e)
                terms.append(f"{c}" + (f"*{mono}" if mono else ""))
            parts.append(f"({' + '.join(terms)})d{names[i]}")
        return "PolyVF(" + (" + ".join(parts) or "0") + ")"


def monomial_field(k, dim=1, axis=0):
    """``x^k d/dx`` on the line (or the analogous field along ``axis``)."""
    exps = [0] * dim
    exps[0] = k
    comps = [{} for _ in range(dim)]
    comps[axis] = {tuple(exps): Fraction(1)}
    return PolyVF(comps, dim)


def bracket(a, b):
    """Lie bracket ``[a, b] = (a . grad) b - (b . grad) a``."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"fields on R^{a.dim} and R^{b.dim}")
    comps = []
    for i in range(a.dim):
        comps.append(_padd(a.apply(b._comps[i]), b.apply(a._comps[i]), -1))
    return PolyVF(comps, a.dim)


# -- exact linear algebra -------------------------------------------------

def _matrix(columns, monomials):
    rows = [[_rat(col[r]) for col in columns] for r in range(len(monomials))]
    return sympy.Matrix(len(monomials), len(columns), lambda i, j: rows[i][j]) \
        if monomials else sympy.zeros(0, len(columns))


def _monomial_index(fields):
    mons = set()
    for f in fields:
        mons |= f.monomials()
    return sorted(mons)


def in_span(f, basis):
    """Coordinates of ``f`` in ``basis`` as Fractions, or ``None`` if outside.

    When the basis is linearly dependent, free coordinates are set to zero.
    """
    for b in basis:
        if b.dim != f.dim:
            raise DimensionMismatch(f"fields on R^{f.dim} and R^{b.dim}")
    if not basis:
        return [] if f.is_zero() else None
    mons = _monomial_index(list(basis) + [f])
    cols = [b.coefficient_vector(mons) for b in basis]
    A = _matrix(cols, mons)
    rhs = sympy.Matrix([_rat(c) for c in f.coefficient_vector(mons)])
    aug = A.row_join(rhs) if mons else sympy.zeros(0, len(basis) + 1)
    R, pivots = aug.rref()
    n = len(basis)
    if n in pivots:
        return None
    coords = [Fraction(0)] * n
    for row, p in enumerate(pivots):
        coords[p] = _frac(R[row, n])
    return coords


def combine(coords, basis):
    """``sum(c_i * basis_i)``."""
    out = PolyVF.zero(basis[0].dim)
    for c, b in zip(coords, basis):
        if c:
            out = out + b * c
    return out


def _independent(fields):
    if not fields:
        return True
    mons = _monomial_index(fields)
    A = _matrix([f.coefficient_vector(mons) for f in fields], mons)
    return A.rank() == len(fields)


def normalizer(V_basis, max_deg):
    """Polynomial fields ``f(x) d/dx`` with ``deg f <= max_deg`` normalising ``V``.

    Solves the linear system ``[X, V_j] = sum_k a_jk V_k`` for the coefficients
    of ``f`` and the auxiliary ``a_jk``, then projects the nullspace onto the
    ``f`` coordinates. When ``max_deg >= q + 1`` for ``V = <x^0..x^q>`` this is
    the full normaliser. Closure ``[W, W] <= W`` is not imposed here; use
    :func:`check_scheme`.
    """
    if not V_basis:
        raise ValueError("empty V basis")
    if any(v.dim != 1 for v in V_basis):
        raise DimensionMismatch("normalizer works on fields on the line")
    if max_deg < max(v.degree() for v in V_basis):
        raise ValueError("max_deg is below the degree of V")
    cands = [monomial_field(d) for d in range(max_deg + 1)]
    r = len(V_basis)
    # one block of equations per V_j: sum_d c_d [x^d, V_j] - sum_k a_jk V_k = 0
    blocks = []
    for j, vj in enumerate(V_basis):
        brs = [bracket(c, vj) for c in cands]
        mons = _monomial_index(brs + list(V_basis))
        blocks.append((brs, mons))
    n_c, n_unknown = len(cands), len(cands) + r * r
    rows = []
    for j, (brs, mons) in enumerate(blocks):
        for mono in mons:
            row = [Fraction(0)] * n_unknown
            for d, br in enumerate(brs):
                row[d] = br.coefficient_vector([mono])[0]
            for k, vk in enumerate(V_basis):
                row[n_c + j * r + k] = -vk.coefficient_vector([mono])[0]
            rows.append(row)
    M = sympy.Matrix([[_rat(x) for x in row] for row in rows])
    null = M.nullspace()
    if not null:
        return []
    proj = sympy.Matrix.hstack(*[v[:n_c, 0] for v in null]).T
    R, pivots = proj.rref()
    out = []
    for i in range(len(pivots)):
        coeffs = {(d,): _frac(R[i, d]) for d in range(n_c) if R[i, d] != 0}
        out.append(PolyVF([coeffs], 1))
    return out


# -- schemes ------------------------------------------------------------

@dataclass(frozen=True)
class SchemeSpec:
    """The pair ``(W, V)`` of a candidate quasi-Lie scheme, given by bases."""

    V_basis: tuple
    W_basis: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "V_basis", tuple(self.V_basis))
        object.__setattr__(self, "W_basis", tuple(self.W_basis))
        if not self.V_basis:
            raise SchemeError("V basis is empty")
        dims = {f.dim for f in self.V_basis + self.W_basis}
        if len(dims) != 1:
            raise DimensionMismatch("scheme fields live on different spaces")
        if not _independent(list(self.V_basis)):
            raise SchemeError("V basis is linearly dependent")

    @property
    def r(self):
        return len(self.V_basis)

    def w_coordinates(self):
        """V-coordinates of every W basis element (None where W escapes V)."""
        return [in_span(w, self.V_basis) for w in self.W_basis]

    def to_json(self):
        return {"name": self.name,
                "V": [v.to_json() for v in self.V_basis],
                "W": [w.to_json() for w in self.W_basis]}

    @classmethod
    def from_json(cls, obj):
        try:
            V = [PolyVF.from_json(v) for v in obj["V"]]
            W = [PolyVF.from_json(w) for w in obj["W"]]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed scheme JSON: missing {exc}") from exc
        return cls(V, W, obj.get("name", ""))


@dataclass
class SchemeReport:
    w_in_v: bool
    ww_closed: bool
    wv_closed: bool
    witness: tuple = None  # (kind, i, j, bracket)

    @property
    def ok(self):
        return self.w_in_v and self.ww_closed and self.wv_closed


def check_scheme(s):
    """Check ``W <= V``, ``[W, W] <= W`` and ``[W, V] <= V``.

    The first failing bracket is kept as ``witness`` as
    ``(kind, i, j, [a_i, b_j])``.
    """
    witness = None
    w_in_v = True
    for i, w in enumerate(s.W_basis):
        if in_span(w, s.V_basis) is None:
            w_in_v = False
            witness = witness or ("W<=V", i, None, w)
    ww = True
    for i in range(len(s.W_basis)):
        for j in range(i + 1, len(s.W_basis)):
            br = bracket(s.W_basis[i], s.W_basis[j])
            if in_span(br, s.W_basis) is None:
                ww = False
                witness = witness or ("[W,W]<=W", i, j, br)
    wv = True
    for i, w in enumerate(s.W_basis):
        for j, v in enumerate(s.V_basis):
            br = bracket(w, v)
            if in_span(br, s.V_basis) is None:
                wv = False
                witness = witness or ("[W,V]<=V", i, j, br)
    return SchemeReport(w_in_v, ww, wv, witness)


def ad_matrix(x, V_basis):
    """Matrix of ``ad_x`` on ``span(V_basis)``; column j = coords of [x, V_j]."""
    r = len(V_basis)
    M = sympy.zeros(r, r)
    for j, v in enumerate(V_basis):
        coords = in_span(bracket(x, v), V_basis)
        if coords is None:
            raise SchemeError(f"[{x!r}, V_{j}] leaves V")
        for i, c in enumerate(coords):
            M[i, j] = _rat(c)
    return M


def representation(s):
    """The ad matrices of the W basis acting on V (one sympy Matrix each)."""
    rep = check_scheme(s)
    if not rep.ok:
        raise SchemeError(f"not a quasi-Lie scheme: {rep.witness[0]} fails")
    return [ad_matrix(w, s.V_basis) for w in s.W_basis]


def nilpotency_index(M, limit=None):
    """Smallest k with ``M**k == 0``, or None if ``M`` is not nilpotent."""
    n = M.shape[0]
    P = sympy.eye(n)
    for k in range(1, (limit or n) + 1):
        P = P * M
        if P.is_zero_matrix:
            return k
    return None


@dataclass
class MorphismReport:
    equivariant: bool
    maps_w_into_w: bool
    rank: int
    kind: str = None
    witness: tuple = field(default=None)  # (i, j) with X_i in W1, Y_j in V1

    @property
    def is_morphism(self):
        return self.equivariant and self.maps_w_into_w


def check_morphism(s1, s2, phi):
    """Check that the linear map ``phi: V1 -> V2`` is a morphism of schemes.

    ``phi`` is a ``dim V2 x dim V1`` matrix (anything ``sympy.Matrix`` accepts)
    whose column j holds the V2-coordinates of ``phi(V1_j)``.
    """
    phi = sympy.Matrix(phi).applyfunc(sympy.nsimplify)
    if phi.shape != (s2.r, s1.r):
        raise DimensionMismatch(
            f"phi has shape {phi.shape}, expected {(s2.r, s1.r)}")

    def image(coords):
        v = phi * sympy.Matrix([_rat(_frac(c)) for c in coords])
        return combine([_frac(x) for x in v], s2.V_basis)

    w_coords = s1.w_coordinates()
    if any(c is None for c in w_coords):
        raise SchemeError("source W is not contained in V")
    eye = [[Fraction(int(i == j)) for i in range(s1.r)] for j in range(s1.r)]
    equivariant, witness = True, None
    for i, wc in enumerate(w_coords):
        phx = image(wc)
        for j in range(s1.r):
            lhs = bracket(phx, image(eye[j]))
            inner = in_span(bracket(s1.W_basis[i], s1.V_basis[j]), s1.V_basis)
            if inner is None or lhs != image(inner):
                equivariant = False
                witness = witness or (i, j)
    maps_w = all(in_span(image(wc), s2.W_basis) is not None for wc in w_coords)
    rank = phi.rank()
    kind = None
    if equivariant and maps_w:
        mono = rank == s1.r
        w_img = [image(wc) for wc in w_coords]
        w_rank = _span_dim(w_img) if w_img else 0
        epi = rank == s2.r and w_rank == len(s2.W_basis)
        kind = ("isomorphism" if mono and epi else "monomorphism" if mono
                else "epimorphism" if epi else "morphism")
    return MorphismReport(equivariant, maps_w, rank, kind, witness)


def _span_dim(fields):
    fields = [f for f in fields if not f.is_zero()]
    if not fields:
        return 0
    mons = _monomial_index(fields)
    return _matrix([f.coefficient_vector(mons) for f in fields], mons).rank()


# -- standard examples -----------------------------------------------------

def riccati_basis():
    return [monomial_field(k) for k in range(3)]


def abel_basis(q=3):
    return [monomial_field(k) for k in range(q + 1)]


def planar_basis():
    """The planar fields Z0..Z3 spanning V for the planar polynomial system."""
    one = Fraction(1)
    return [
        PolyVF([{(0, 0): one}, {}]),
        PolyVF([{(1, 0): one}, {(0, 1): one}]),
        PolyVF([{(2, 0): one, (0, 2): -one}, {(1, 1): 2 * one}]),
        PolyVF([{(3, 0): one, (1, 2): -3 * one}, {(2, 1): 3 * one}]),
    ]


def abel_scheme(q=3):
    V = abel_basis(q)
    return SchemeSpec(V, V[:2], f"abel{q}")


def riccati_scheme():
    V = riccati_basis()
    return SchemeSpec(V, V, "riccati")


def planar_scheme():
    Z = planar_basis()
    return SchemeSpec(Z, Z[:2], "planar")
