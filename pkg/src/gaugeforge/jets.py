"""Truncated Taylor jets and a small expression language over 4-coordinate charts.

The jet engine propagates values and partial derivatives up to third order
through arithmetic and a fixed set of analytic functions.  Propagation uses
the exact product, quotient and composition rules, so results carry no
truncation error beyond float rounding.  Finite differences are never used
here; they appear only in test oracles.
"""

from __future__ import annotations

import math
import re

import numpy as np

NCOORD = 4

FUNCTIONS = ("sin", "cos", "tan", "cot", "sqrt", "exp", "log")

_DIV_FLOOR = 1e-300


class ParseError(ValueError):
    """Syntax problem in an expression source string.

    ``offset`` is the byte offset into the source where the problem starts.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class UnknownIdentifierError(ParseError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier '{name}'", offset)
        self.name = name


class ArityError(ParseError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"function '{name}' takes exactly one argument", offset)
        self.name = name


class EvalDomainError(ArithmeticError):
    """Evaluation left the domain of an operation (division by ~0, log of
    a non-positive value, and so on)."""


class CoordinateChart:
    """Four named coordinates with sampling ranges and optional excluded loci.

    ``ranges`` are closed intervals used by the point sampler.  ``excluded``
    holds scalar fields whose zero sets mark singular places (horizons, axes);
    sample points must keep ``|field(point)| > margin``.
    """

    def __init__(self, names, ranges, margin: float = 1e-3):
        names = tuple(names)
        if len(names) != NCOORD:
            raise ValueError("a chart needs exactly four coordinate names")
        if len(set(names)) != NCOORD:
            raise ValueError("coordinate names must be distinct")
        for n in names:
            if not n.isidentifier():
                raise ValueError(f"coordinate name {n!r} is not an identifier")
        ranges = tuple((float(lo), float(hi)) for lo, hi in ranges)
        if len(ranges) != NCOORD:
            raise ValueError("a chart needs exactly four coordinate ranges")
        for lo, hi in ranges:
            if not hi > lo:
                raise ValueError("every coordinate range needs positive length")
        self.names = names
        self.ranges = ranges
        self.margin = float(margin)
        self.excluded: list[ScalarField] = []

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(name) from None

    def exclude(self, field: "ScalarField") -> None:
        if field.chart is not self:
            raise ValueError("excluded locus must be defined on this chart")
        self.excluded.append(field)

    def in_domain(self, point) -> bool:
        return all(lo <= x <= hi for x, (lo, hi) in zip(point, self.ranges))

    def clearance(self, point) -> float:
        """Smallest |locus field| at the point; inf when no loci are set."""
        if not self.excluded:
            return math.inf
        return min(abs(f(point)) for f in self.excluded)

    def admissible(self, point) -> bool:
        return self.in_domain(point) and self.clearance(point) > self.margin

    def __repr__(self):
        return f"CoordinateChart({', '.join(self.names)})"


# ---------------------------------------------------------------------------
# jets


class Jet:
    """Value plus partial derivatives up to ``order`` (at most 3) in 4 variables.

    ``g``, ``h``, ``t`` store the gradient, Hessian and symmetric third
    derivative tensor; entries above ``order`` are None.  Jets form a
    commutative ring and are closed under the analytic functions below, so
    whole tensor expressions can be pushed through them unchanged.
    """

    __slots__ = ("order", "v", "g", "h", "t")

    def __init__(self, order: int, v: float, g=None, h=None, t=None):
        self.order = order
        self.v = float(v)
        self.g = g
        self.h = h
        self.t = t

    @staticmethod
    def constant(value: float, order: int) -> "Jet":
        j = Jet(order, value)
        if order >= 1:
            j.g = np.zeros(NCOORD)
        if order >= 2:
            j.h = np.zeros((NCOORD, NCOORD))
        if order >= 3:
            j.t = np.zeros((NCOORD, NCOORD, NCOORD))
        return j

    @staticmethod
    def coordinate(i: int, value: float, order: int) -> "Jet":
        j = Jet.constant(value, order)
        if order >= 1:
            j.g[i] = 1.0
        return j

    # -- accessors ---------------------------------------------------------

    @property
    def value(self) -> float:
        return self.v

    @property
    def grad(self):
        return self.g

    @property
    def hess(self):
        return self.h

    @property
    def third(self):
        return self.t

    def partial(self, i: int) -> "Jet":
        """The i-th partial derivative as a jet of one lower order."""
        if self.order < 1:
            raise ValueError("cannot take a partial of an order-0 jet")
        j = Jet(self.order - 1, self.g[i])
        if self.order >= 2:
            j.g = self.h[i].copy()
        if self.order >= 3:
            j.h = self.t[i].copy()
        return j

    # -- ring operations ---------------------------------------------------

    @staticmethod
    def _co(other, order):
        if isinstance(other, Jet):
            return other
        return Jet.constant(float(other), order)

    def __add__(self, other):
        b = Jet._co(other, self.order)
        n = min(self.order, b.order)
        out = Jet(n, self.v + b.v)
        if n >= 1:
            out.g = self.g + b.g
        if n >= 2:
            out.h = self.h + b.h
        if n >= 3:
            out.t = self.t + b.t
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Jet(self.order, -self.v)
        if self.order >= 1:
            out.g = -self.g
        if self.order >= 2:
            out.h = -self.h
        if self.order >= 3:
            out.t = -self.t
        return out

    def __sub__(self, other):
        return self + (-Jet._co(other, self.order))

    def __rsub__(self, other):
        return Jet._co(other, self.order) + (-self)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = float(other)
            out = Jet(self.order, self.v * c)
            if self.order >= 1:
                out.g = self.g * c
            if self.order >= 2:
                out.h = self.h * c
            if self.order >= 3:
                out.t = self.t * c
            return out
        a, b = self, other
        n = min(a.order, b.order)
        out = Jet(n, a.v * b.v)
        if n >= 1:
            out.g = a.g * b.v + b.g * a.v
        if n >= 2:
            gg = np.outer(a.g, b.g)
            out.h = a.h * b.v + b.h * a.v + gg + gg.T
        if n >= 3:
            hg = a.h[:, :, None] * b.g[None, None, :]
            gh = b.h[:, :, None] * a.g[None, None, :]
            mixed = hg + gh
            out.t = (
                a.t * b.v
                + b.t * a.v
                + mixed
                + mixed.transpose(0, 2, 1)
                + mixed.transpose(2, 0, 1)
            )
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self * (1.0 / float(other))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * float(other)

    # -- composition -------------------------------------------------------

    def _lift(self, f0, f1=0.0, f2=0.0, f3=0.0) -> "Jet":
        """Compose with a scalar function given its derivatives at self.v."""
        n = self.order
        out = Jet(n, f0)
        if n >= 1:
            out.g = f1 * self.g
        if n >= 2:
            out.h = f1 * self.h + f2 * np.outer(self.g, self.g)
        if n >= 3:
            hg = self.h[:, :, None] * self.g[None, None, :]
            sym = hg + hg.transpose(0, 2, 1) + hg.transpose(2, 0, 1)
            ggg = self.g[:, None, None] * self.g[None, :, None] * self.g[None, None, :]
            out.t = f1 * self.t + f2 * sym + f3 * ggg
        return out

    def reciprocal(self) -> "Jet":
        u = self.v
        if abs(u) <= _DIV_FLOOR:
            raise EvalDomainError("division by a vanishing quantity")
        iu = 1.0 / u
        return self._lift(iu, -iu * iu, 2.0 * iu**3, -6.0 * iu**4)

    def sqrt(self) -> "Jet":
        u = self.v
        if u <= 0.0:
            raise EvalDomainError("sqrt of a non-positive quantity")
        r = math.sqrt(u)
        return self._lift(r, 0.5 / r, -0.25 / (r * u), 0.375 / (r * u * u))

    def exp(self) -> "Jet":
        e = math.exp(self.v)
        return self._lift(e, e, e, e)

    def log(self) -> "Jet":
        u = self.v
        if u <= 0.0:
            raise EvalDomainError("log of a non-positive quantity")
        iu = 1.0 / u
        return self._lift(math.log(u), iu, -iu * iu, 2.0 * iu**3)

    def sin(self) -> "Jet":
        s, c = math.sin(self.v), math.cos(self.v)
        return self._lift(s, c, -s, -c)

    def cos(self) -> "Jet":
        s, c = math.sin(self.v), math.cos(self.v)
        return self._lift(c, -s, -c, s)

    def tan(self) -> "Jet":
        c = math.cos(self.v)
        if abs(c) <= _DIV_FLOOR:
            raise EvalDomainError("tan at a pole")
        t = math.tan(self.v)
        d = 1.0 + t * t
        return self._lift(t, d, 2.0 * t * d, d * (2.0 + 6.0 * t * t))

    def cot(self) -> "Jet":
        s = math.sin(self.v)
        if abs(s) <= _DIV_FLOOR:
            raise EvalDomainError("cot at a pole")
        c = math.cos(self.v) / s
        d = 1.0 + c * c
        return self._lift(c, -d, 2.0 * c * d, -d * (2.0 + 6.0 * c * c))

    def ipow(self, n: int) -> "Jet":
        """Integer power by repeated multiplication (keeps exactness)."""
        if n == 0:
            return Jet.constant(1.0, self.order)
        if n < 0:
            return self.reciprocal().ipow(-n)
        out = self
        for _ in range(n - 1):
            out = out * self
        return out

    def fpow(self, p: float) -> "Jet":
        u = self.v
        if u <= 0.0:
            raise EvalDomainError("non-integer power of a non-positive base")
        f0 = u**p
        return self._lift(
            f0,
            p * u ** (p - 1.0),
            p * (p - 1.0) * u ** (p - 2.0),
            p * (p - 1.0) * (p - 2.0) * u ** (p - 3.0),
        )

    def __repr__(self):
        return f"Jet(order={self.order}, value={self.v!r})"


_FN = {
    "sin": Jet.sin,
    "cos": Jet.cos,
    "tan": Jet.tan,
    "cot": Jet.cot,
    "sqrt": Jet.sqrt,
    "exp": Jet.exp,
    "log": Jet.log,
}


# ---------------------------------------------------------------------------
# expression AST


class _Node:
    __slots__ = ()


class _Num(_Node):
    __slots__ = ("v",)

    def __init__(self, v):
        self.v = float(v)

    def ev(self, env):
        return Jet.constant(self.v, env[0].order)


class _Coord(_Node):
    __slots__ = ("i", "name")

    def __init__(self, i, name):
        self.i = i
        self.name = name

    def ev(self, env):
        return env[self.i]


class _Bin(_Node):
    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self.a = a
        self.b = b


class _Add(_Bin):
    def ev(self, env):
        return self.a.ev(env) + self.b.ev(env)


class _Sub(_Bin):
    def ev(self, env):
        return self.a.ev(env) - self.b.ev(env)


class _Mul(_Bin):
    def ev(self, env):
        return self.a.ev(env) * self.b.ev(env)


class _Div(_Bin):
    def ev(self, env):
        return self.a.ev(env) / self.b.ev(env)


class _Neg(_Node):
    __slots__ = ("a",)

    def __init__(self, a):
        self.a = a

    def ev(self, env):
        return -self.a.ev(env)


class _Pow(_Bin):
    def ev(self, env):
        base = self.a.ev(env)
        if isinstance(self.b, _Num):
            p = self.b.v
            n = int(p)
            if float(n) == p:
                return base.ipow(n)
            return base.fpow(p)
        expo = self.b.ev(env)
        return (expo * base.log()).exp()


class _Call(_Node):
    __slots__ = ("fn", "a")

    def __init__(self, fn, a):
        self.fn = fn
        self.a = a

    def ev(self, env):
        return _FN[self.fn](self.a.ev(env))


# printer, mirroring the grammar levels so output reparses to the same tree


def _s_expr(n):
    if isinstance(n, _Add):
        return f"{_s_expr(n.a)}+{_s_term(n.b)}"
    if isinstance(n, _Sub):
        return f"{_s_expr(n.a)}-{_s_term(n.b)}"
    return _s_term(n)


def _s_term(n):
    if isinstance(n, (_Add, _Sub)):
        return f"({_s_expr(n)})"
    if isinstance(n, _Mul):
        return f"{_s_term(n.a)}*{_s_factor(n.b)}"
    if isinstance(n, _Div):
        return f"{_s_term(n.a)}/{_s_factor(n.b)}"
    return _s_factor(n)


def _s_factor(n):
    if isinstance(n, (_Add, _Sub, _Mul, _Div)):
        return f"({_s_expr(n)})"
    if isinstance(n, _Pow):
        return f"{_s_base(n.a)}^{_s_factor(n.b)}"
    return _s_unary(n)


def _s_base(n):
    if isinstance(n, (_Add, _Sub, _Mul, _Div, _Pow)):
        return f"({_s_expr(n)})"
    return _s_unary(n)


def _s_unary(n):
    if isinstance(n, _Neg):
        return f"-{_s_unary(n.a)}"
    return _s_atom(n)


def _s_atom(n):
    if isinstance(n, _Num):
        return f"({n.v!r})" if n.v < 0 else repr(n.v)
    if isinstance(n, _Coord):
        return n.name
    if isinstance(n, _Call):
        return f"{n.fn}({_s_expr(n.a)})"
    return f"({_s_expr(n)})"


# ---------------------------------------------------------------------------
# parser


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


class _Parser:
    def __init__(self, source: str, chart: CoordinateChart, constants):
        self.src = source
        self.chart = chart
        self.constants = constants or {}
        self.toks = []
        pos = 0
        while pos < len(source):
            if source[pos].isspace():
                pos += 1
                continue
            m = _TOKEN.match(source, pos)
            if m is None:
                raise ParseError(f"unexpected character {source[pos]!r}", pos)
            self.toks.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
            pos = m.end()
        self.toks.append(("end", "", len(source)))
        self.k = 0

    def peek(self):
        return self.toks[self.k]

    def take(self):
        t = self.toks[self.k]
        self.k += 1
        return t

    def expect_op(self, ch):
        kind, val, off = self.peek()
        if kind == "op" and val == ch:
            return self.take()
        raise ParseError(f"expected {ch!r}", off)

    def parse(self):
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing input {val!r}", off)
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                rhs = self.term()
                node = _Add(node, rhs) if val == "+" else _Sub(node, rhs)
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.take()
                rhs = self.factor()
                node = _Mul(node, rhs) if val == "*" else _Div(node, rhs)
            else:
                return node

    def factor(self):
        node = self.unary()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            return _Pow(node, self.factor())
        return node

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return _Neg(self.unary())
        return self.atom()

    def atom(self):
        kind, val, off = self.take()
        if kind == "num":
            return _Num(float(val))
        if kind == "ident":
            nk, nv, _ = self.peek()
            if nk == "op" and nv == "(":
                if val not in FUNCTIONS:
                    raise UnknownIdentifierError(val, off)
                self.take()
                k2, v2, _ = self.peek()
                if k2 == "op" and v2 == ")":
                    raise ArityError(val, off)
                arg = self.expr()
                k2, v2, o2 = self.peek()
                if k2 == "op" and v2 == ",":
                    raise ArityError(val, off)
                self.expect_op(")")
                return _Call(val, arg)
            if val in self.chart.names:
                i = self.chart.index(val)
                return _Coord(i, val)
            if val in self.constants:
                return _Num(float(self.constants[val]))
            raise UnknownIdentifierError(val, off)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ParseError(f"expected a value, got {val!r}" if val else "unexpected end of input", off)


class ScalarField:
    """A scalar field on a chart, held as an expression tree.

    Fields combine with ``+ - * /`` and unary ``-`` into new fields on the
    same chart, which is how derived quantities (effective metrics built from
    distortion components) stay inside the exact jet pipeline.
    """

    __slots__ = ("chart", "root")

    def __init__(self, chart: CoordinateChart, root: _Node):
        self.chart = chart
        self.root = root

    @staticmethod
    def constant(chart: CoordinateChart, value: float) -> "ScalarField":
        return ScalarField(chart, _Num(value))

    @staticmethod
    def coordinate(chart: CoordinateChart, i: int) -> "ScalarField":
        return ScalarField(chart, _Coord(i, chart.names[i]))

    def jet(self, point, order: int = 3) -> Jet:
        env = tuple(
            Jet.coordinate(i, float(point[i]), order) for i in range(NCOORD)
        )
        return self.root.ev(env)

    def __call__(self, point) -> float:
        return self.root.ev(
            tuple(Jet(0, float(point[i])) for i in range(NCOORD))
        ).v

    def to_source(self) -> str:
        return _s_expr(self.root)

    def _chk(self, other):
        if not isinstance(other, ScalarField):
            other = ScalarField.constant(self.chart, float(other))
        elif other.chart is not self.chart:
            raise ValueError("fields live on different charts")
        return other

    def __add__(self, other):
        o = self._chk(other)
        return ScalarField(self.chart, _Add(self.root, o.root))

    def __radd__(self, other):
        return self._chk(other).__add__(self)

    def __sub__(self, other):
        o = self._chk(other)
        return ScalarField(self.chart, _Sub(self.root, o.root))

    def __rsub__(self, other):
        return self._chk(other).__sub__(self)

    def __mul__(self, other):
        o = self._chk(other)
        return ScalarField(self.chart, _Mul(self.root, o.root))

    def __rmul__(self, other):
        return self._chk(other).__mul__(self)

    def __neg__(self):
        return ScalarField(self.chart, _Neg(self.root))

    def __repr__(self):
        return f"ScalarField({self.to_source()!r})"


def parse_expr(source: str, chart: CoordinateChart, constants=None) -> ScalarField:
    """Parse an expression into a ScalarField.

    Grammar: standard precedence with right-associative ``^`` binding tighter
    than unary minus, so ``-x^2`` means ``(-x)^2``.  Identifiers must be chart
    coordinates, entries of ``constants`` (substituted on the spot), or one of
    the known function names.
    """
    return ScalarField(chart, _Parser(source, chart, constants).parse())


def eval_jet(field: ScalarField, point, order: int = 3) -> Jet:
    """Evaluate a field's jet at a point, truncating at ``order`` (0..3)."""
    if not 0 <= order <= 3:
        raise ValueError("jet order must be between 0 and 3")
    return field.jet(point, order)
