"""Expression trees for t-dependent coefficients.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | power
    power  := base ("^" int)?
    base   := number | "t" | ident "(" expr ")" | "(" expr ")"
    ident  := sin | cos | exp | sqrt | log
    int    := "-"? digits

Numbers are decimals (optionally with an exponent); a rational ``p/q`` is an
ordinary division of two literals and folds to an exact constant. Trees are
built through folding constructors, so ``parse(str(f)) == f`` holds for every
tree this module produces.
"""

import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError, ParseError
from .jets import Jet

__all__ = [
    "TFunc", "Num", "Var", "Neg", "Add", "Sub", "Mul", "Div", "Pow", "Call",
    "parse", "eval_jet", "as_tfunc", "T", "ZERO", "ONE",
    "sin", "cos", "exp", "sqrt", "log", "FUNCTIONS",
]

FUNCTIONS = ("sin", "cos", "exp", "sqrt", "log")

# printing precedences
_P_SUM, _P_PROD, _P_NEG, _P_POW, _P_ATOM = 1, 2, 3, 4, 5


class TFunc:
    """Base class of expression nodes; immutable and hashable."""

    __slots__ = ()

    # -- construction sugar ---------------------------------------------
    def __add__(self, other):
        return add(self, as_tfunc(other))

    def __radd__(self, other):
        return add(as_tfunc(other), self)

    def __sub__(self, other):
        return sub(self, as_tfunc(other))

    def __rsub__(self, other):
        return sub(as_tfunc(other), self)

    def __mul__(self, other):
        return mul(self, as_tfunc(other))

    def __rmul__(self, other):
        return mul(as_tfunc(other), self)

    def __truediv__(self, other):
        return div(self, as_tfunc(other))

    def __rtruediv__(self, other):
        return div(as_tfunc(other), self)

    def __pow__(self, n):
        if int(n) != n:
            raise TypeError("only integer exponents are supported")
        return power(self, int(n))

    def __neg__(self):
        return neg(self)

    # -- evaluation -----------------------------------------------------
    def jet(self, t, K=4):
        """Jet of order ``K`` at ``t`` (scalar or array of points)."""
        cache = {}
        return _jet(self, Jet.variable(t, K), cache)

    def __call__(self, t):
        """Vectorised value at ``t``."""
        with np.errstate(all="ignore"):
            return _value(self, np.asarray(t, dtype=float), {})

    def diff(self):
        """Symbolic d/dt, returned as a tree of the same grammar."""
        return _diff(self, {})

    def is_constant(self):
        return isinstance(self, Num)

    def __str__(self):
        return _fmt(self, 0)

    def __repr__(self):
        return f"TFunc({str(self)!r})"


@dataclass(frozen=True, eq=True, repr=False)
class Num(TFunc):
    value: Fraction


@dataclass(frozen=True, eq=True, repr=False)
class Var(TFunc):
    pass


@dataclass(frozen=True, eq=True, repr=False)
class Neg(TFunc):
    arg: TFunc


@dataclass(frozen=True, eq=True, repr=False)
class Add(TFunc):
    left: TFunc
    right: TFunc


@dataclass(frozen=True, eq=True, repr=False)
class Sub(TFunc):
    left: TFunc
    right: TFunc


@dataclass(frozen=True, eq=True, repr=False)
class Mul(TFunc):
    left: TFunc
    right: TFunc


@dataclass(frozen=True, eq=True, repr=False)
class Div(TFunc):
    left: TFunc
    right: TFunc


@dataclass(frozen=True, eq=True, repr=False)
class Pow(TFunc):
    base: TFunc
    n: int


@dataclass(frozen=True, eq=True, repr=False)
class Call(TFunc):
    name: str
    arg: TFunc


ZERO = Num(Fraction(0))
ONE = Num(Fraction(1))
T = Var()


def as_tfunc(x):
    if isinstance(x, TFunc):
        return x
    if isinstance(x, str):
        return parse(x)
    if isinstance(x, (int, np.integer)):
        return Num(Fraction(int(x)))
    if isinstance(x, Fraction):
        return Num(x)
    if isinstance(x, (float, np.floating)):
        if not np.isfinite(x):
            raise ValueError(f"non-finite constant {x}")
        # shortest repr keeps the literal readable and round-trips to x
        return Num(Fraction(repr(float(x))))
    raise TypeError(f"cannot convert {type(x).__name__} to TFunc")


# -- folding constructors -------------------------------------------------

def _num(node, value=None):
    return isinstance(node, Num) and (value is None or node.value == value)


def neg(a):
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def add(a, b):
    if _num(a) and _num(b):
        return Num(a.value + b.value)
    if _num(a, 0):
        return b
    if _num(b, 0):
        return a
    # a + (-b) reads better as a - b
    if isinstance(b, Neg):
        return Sub(a, b.arg)
    if _num(b) and b.value < 0:
        return Sub(a, Num(-b.value))
    if isinstance(b, (Mul, Div)) and _num(b.left) and b.left.value < 0:
        return Sub(a, type(b)(Num(-b.left.value), b.right))
    return Add(a, b)


def sub(a, b):
    if _num(a) and _num(b):
        return Num(a.value - b.value)
    if _num(b, 0):
        return a
    if _num(a, 0):
        return neg(b)
    return Sub(a, b)


def mul(a, b):
    if _num(a) and _num(b):
        return Num(a.value * b.value)
    if _num(a, 0) or _num(b, 0):
        return ZERO
    if _num(a, 1):
        return b
    if _num(b, 1):
        return a
    if _num(a, -1):
        return neg(b)
    if _num(b, -1):
        return neg(a)
    return Mul(a, b)


def div(a, b):
    if _num(a) and _num(b) and b.value != 0:
        return Num(a.value / b.value)
    if _num(a, 0) and not _num(b, 0):
        return ZERO
    if _num(b, 1):
        return a
    if a == b and not isinstance(a, Num):
        return ONE
    return Div(a, b)


def power(b, n):
    if n == 1:
        return b
    if n == 0:
        return ONE
    if _num(b) and not (b.value == 0 and n < 0):
        return Num(b.value ** n)
    return Pow(b, n)


def call(name, arg):
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    return Call(name, arg)


def sin(x):
    return call("sin", as_tfunc(x))


def cos(x):
    return call("cos", as_tfunc(x))


def exp(x):
    return call("exp", as_tfunc(x))


def sqrt(x):
    return call("sqrt", as_tfunc(x))


def log(x):
    return call("log", as_tfunc(x))


# -- printing -------------------------------------------------------------

def _fmt_num(v):
    if v.denominator == 1:
        return str(v.numerator), (_P_ATOM if v >= 0 else _P_NEG)
    return f"{v.numerator}/{v.denominator}", _P_PROD


def _fmt(node, need):
    if isinstance(node, Num):
        s, p = _fmt_num(node.value)
    elif isinstance(node, Var):
        s, p = "t", _P_ATOM
    elif isinstance(node, Call):
        s, p = f"{node.name}({_fmt(node.arg, 0)})", _P_ATOM
    elif isinstance(node, Neg):
        s, p = "-" + _fmt(node.arg, _P_NEG), _P_NEG
    elif isinstance(node, Pow):
        s, p = f"{_fmt(node.base, _P_ATOM)}^{node.n}", _P_POW
    elif isinstance(node, (Add, Sub)):
        op = " + " if isinstance(node, Add) else " - "
        s = _fmt(node.left, _P_SUM) + op + _fmt(node.right, _P_PROD)
        p = _P_SUM
    elif isinstance(node, (Mul, Div)):
        op = "*" if isinstance(node, Mul) else "/"
        s = _fmt(node.left, _P_PROD) + op + _fmt(node.right, _P_NEG)
        p = _P_PROD
    else:
        raise TypeError(type(node))
    return f"({s})" if p < need else s


# -- parsing --------------------------------------------------------------

_TOKEN = re.compile(r"""
    \s*(?:
      (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
    | (?P<name>[A-Za-z_]\w*)
    | (?P<op>[-+*/^()])
    )""", re.VERBOSE)


def _tokenize(src):
    pos, out = 0, []
    while True:
        while pos < len(src) and src[pos].isspace():
            pos += 1
        if pos >= len(src):
            break
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {src[pos]!r}", src, pos)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(src)))
    return out


class _Parser:
    def __init__(self, src):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value or kind not in ("op",):
            found = text or "end of input"
            raise ParseError(f"expected {value!r}, found {found!r}", self.src, pos)

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, self.src, tok[2])

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            node = add(node, rhs) if op == "+" else sub(node, rhs)
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.factor()
            node = mul(node, rhs) if op == "*" else div(node, rhs)
        return node

    def factor(self):
        if self.peek()[0:2] == ("op", "-"):
            self.take()
            return neg(self.factor())
        return self.power()

    def power(self):
        node = self.base()
        if self.peek()[0:2] == ("op", "^"):
            self.take()
            sign = 1
            if self.peek()[0:2] == ("op", "-"):
                self.take()
                sign = -1
            kind, text, pos = self.take()
            if kind != "num" or not text.isdigit():
                raise ParseError("exponent must be an integer literal "
                                 "(use sqrt for square roots)", self.src, pos)
            node = power(node, sign * int(text))
        return node

    def base(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Num(Fraction(text))
        if kind == "name":
            if text == "t":
                return T
            if text not in FUNCTIONS:
                raise ParseError(f"unknown identifier {text!r}", self.src, pos)
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return call(text, arg)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = text or "end of input"
        raise ParseError(f"unexpected {found!r}", self.src, pos)


def parse(src):
    """Parse a coefficient expression in ``t``."""
    if not isinstance(src, str):
        raise TypeError("expression source must be a string")
    p = _Parser(src)
    node = p.expr()
    if p.peek()[0] != "end":
        p.error(f"unexpected {p.peek()[1]!r}")
    return node


# -- evaluation -----------------------------------------------------------

def _jet(node, tj, cache):
    key = id(node)
    hit = cache.get(key)
    if hit is not None:
        return hit[1]
    K = tj.order
    if isinstance(node, Num):
        out = Jet.constant(np.full(tj.d.shape[1:], float(node.value)), K)
    elif isinstance(node, Var):
        out = tj
    elif isinstance(node, Neg):
        out = -_jet(node.arg, tj, cache)
    elif isinstance(node, Add):
        out = _jet(node.left, tj, cache) + _jet(node.right, tj, cache)
    elif isinstance(node, Sub):
        out = _jet(node.left, tj, cache) - _jet(node.right, tj, cache)
    elif isinstance(node, Mul):
        out = _jet(node.left, tj, cache) * _jet(node.right, tj, cache)
    elif isinstance(node, Div):
        den = _jet(node.right, tj, cache)
        if np.any(den.d[0] == 0):
            raise DomainError("division by zero", str(node))
        out = _jet(node.left, tj, cache) / den
    elif isinstance(node, Pow):
        b = _jet(node.base, tj, cache)
        if node.n < 0 and np.any(b.d[0] == 0):
            raise DomainError("negative power of zero", str(node))
        out = b ** node.n
    elif isinstance(node, Call):
        a = _jet(node.arg, tj, cache)
        if node.name in ("sqrt", "log") and np.any(a.d[0] <= 0):
            raise DomainError(f"{node.name} of nonpositive value", str(node))
        out = getattr(a, node.name)()
    else:
        raise TypeError(type(node))
    if not np.all(np.isfinite(out.d)):
        raise DomainError("non-finite value", str(node))
    cache[key] = (node, out)
    return out


_NUMPY = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt,
          "log": np.log}


def _value(node, t, cache):
    key = id(node)
    hit = cache.get(key)
    if hit is not None:
        return hit[1]
    if isinstance(node, Num):
        out = np.full(t.shape, float(node.value))
    elif isinstance(node, Var):
        out = t
    elif isinstance(node, Neg):
        out = -_value(node.arg, t, cache)
    elif isinstance(node, Add):
        out = _value(node.left, t, cache) + _value(node.right, t, cache)
    elif isinstance(node, Sub):
        out = _value(node.left, t, cache) - _value(node.right, t, cache)
    elif isinstance(node, Mul):
        out = _value(node.left, t, cache) * _value(node.right, t, cache)
    elif isinstance(node, Div):
        den = _value(node.right, t, cache)
        if np.any(den == 0):
            raise DomainError("division by zero", str(node))
        out = _value(node.left, t, cache) / den
    elif isinstance(node, Pow):
        b = _value(node.base, t, cache)
        if node.n < 0 and np.any(b == 0):
            raise DomainError("negative power of zero", str(node))
        out = b ** float(node.n)
    elif isinstance(node, Call):
        a = _value(node.arg, t, cache)
        if node.name in ("sqrt", "log") and np.any(a <= 0):
            raise DomainError(f"{node.name} of nonpositive value", str(node))
        out = _NUMPY[node.name](a)
    else:
        raise TypeError(type(node))
    cache[key] = (node, out)
    return out


def eval_jet(f, t, K=4):
    """Value and first ``K`` t-derivatives of ``f`` at ``t``."""
    return as_tfunc(f).jet(t, K)


# -- symbolic derivative --------------------------------------------------

def _diff(node, cache):
    key = id(node)
    hit = cache.get(key)
    if hit is not None:
        return hit[1]
    if isinstance(node, Num):
        out = ZERO
    elif isinstance(node, Var):
        out = ONE
    elif isinstance(node, Neg):
        out = neg(_diff(node.arg, cache))
    elif isinstance(node, Add):
        out = add(_diff(node.left, cache), _diff(node.right, cache))
    elif isinstance(node, Sub):
        out = sub(_diff(node.left, cache), _diff(node.right, cache))
    elif isinstance(node, Mul):
        a, b = node.left, node.right
        out = add(mul(_diff(a, cache), b), mul(a, _diff(b, cache)))
    elif isinstance(node, Div):
        a, b = node.left, node.right
        da, db = _diff(a, cache), _diff(b, cache)
        if _num(db, 0):
            out = div(da, b)
        else:
            out = div(sub(mul(da, b), mul(a, db)), power(b, 2))
    elif isinstance(node, Pow):
        out = mul(mul(Num(Fraction(node.n)), power(node.base, node.n - 1)),
                  _diff(node.base, cache))
    elif isinstance(node, Call):
        u = node.arg
        du = _diff(u, cache)
        if node.name == "sin":
            out = mul(call("cos", u), du)
        elif node.name == "cos":
            out = neg(mul(call("sin", u), du))
        elif node.name == "exp":
            out = mul(node, du)
        elif node.name == "sqrt":
            out = div(du, mul(Num(Fraction(2)), node))
        else:
            out = div(du, u)
    else:
        raise TypeError(type(node))
    cache[key] = (node, out)
    return out
