"""Expression language over ``x`` in R^d and ``t`` in R^s with exact jets.

Text is parsed into an immutable tree.  Evaluation runs over batches of
points and carries every partial derivative up to order three by forward
propagation of truncated multivariate Taylor polynomials, so the numbers are
exact up to roundoff (no finite differences anywhere).

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | atom ['^' signed-number]
    atom   := number | 'x' index | 't' index | func '(' args ')' | '(' expr ')'

Functions: ``sqrt exp sin cos jb dot norm2 excise``.  A bare ``x`` or ``t``
stands for the whole vector and is only accepted as an argument of ``dot``,
``norm2``, ``jb`` and ``excise``.  ``jb(v)`` is sqrt(1 + |v|^2), ``norm2(v)``
is the Euclidean length |v| and ``excise(v, r1, r2)`` is the quintic
smoothstep cut-off that vanishes for |v| <= r1 and equals one for |v| >= r2.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Sequence, Union

import numpy as np

__all__ = [
    "MAX_ORDER",
    "ExprError",
    "ParseError",
    "DomainError",
    "Const",
    "Var",
    "Vec",
    "Neg",
    "BinOp",
    "Pow",
    "Call",
    "Expression",
    "Jet",
    "JetBatch",
    "parse",
    "unparse",
    "eval_jet",
]

MAX_ORDER = 3


class ExprError(ValueError):
    """Base class for every error raised by the expression layer."""


class ParseError(ExprError):
    """Malformed text, unknown names, wrong arity or out-of-range indices."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class DomainError(ExprError):
    """Evaluation left the domain of a built-in; ``subtree`` names the culprit."""

    def __init__(self, message: str, subtree: str):
        self.subtree = subtree
        super().__init__(f"{message} in subexpression {subtree!r}")


# ---------------------------------------------------------------------------
# tree nodes


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str  # "x" or "t"
    index: int  # 1-based


@dataclass(frozen=True)
class Vec:
    kind: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: float


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Const, Var, Vec, Neg, BinOp, Pow, Call]

_UNARY = {"sqrt", "exp", "sin", "cos"}
_ARITY = {"sqrt": 1, "exp": 1, "sin": 1, "cos": 1, "jb": 1, "norm2": 1, "dot": 2, "excise": 3}


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, d: int, s: int):
        self.tokens = _tokenize(text)
        self.i = 0
        self.d = d
        self.s = s

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if kind == "end" or val != value:
            shown = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, found {shown}", pos)

    def parse(self) -> Node:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        kind, val, pos = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Neg(self.factor())
        base = self.atom()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            self.take()
            sign = 1.0
            kind, val, pos = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                sign = -1.0 if val == "-" else 1.0
            kind, val, pos = self.take()
            if kind != "num":
                raise ParseError("exponent must be a number", pos)
            exponent = sign * float(val)
            if not float(2 * exponent).is_integer():
                raise ParseError("exponent must be an integer or half-integer", pos)
            if not exponent.is_integer() and not _positive(base):
                raise ParseError(
                    "half-integer power needs a base that is positive by construction", pos
                )
            if isinstance(base, Vec):
                raise ParseError(f"vector {base.kind!r} cannot be raised to a power", pos)
            if self.peek()[1] == "^":
                raise ParseError("chained powers need parentheses", self.peek()[2])
            return Pow(base, exponent)
        if isinstance(base, Vec):
            raise ParseError(
                f"bare vector {base.kind!r} is only allowed inside dot, norm2, jb or excise", pos
            )
        return base

    def atom(self) -> Node:
        kind, val, pos = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "id":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                return self.call(val, pos)
            return self.variable(val, pos)
        shown = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {shown}", pos)

    def variable(self, name: str, pos: int) -> Node:
        m = re.fullmatch(r"([xt])(\d*)", name)
        if m is None:
            raise ParseError(f"unknown identifier {name!r}", pos)
        kind, digits = m.groups()
        size = self.d if kind == "x" else self.s
        if not digits:
            return Vec(kind)
        index = int(digits)
        if not 1 <= index <= size:
            raise ParseError(
                f"variable {name} out of range ({kind} has {size} components)", pos
            )
        return Var(kind, index)

    def call(self, name: str, pos: int) -> Node:
        if name not in _ARITY:
            raise ParseError(f"unknown identifier {name!r}", pos)
        self.expect("(")
        args = []
        if self.peek()[1] != ")":
            args.append(self.argument())
            while self.peek()[1] == ",":
                self.take()
                args.append(self.argument())
        self.expect(")")
        if len(args) != _ARITY[name]:
            raise ParseError(
                f"{name} takes {_ARITY[name]} argument(s), got {len(args)}", pos
            )
        if name in _UNARY and isinstance(args[0], Vec):
            raise ParseError(f"{name} takes a scalar argument", pos)
        if name == "dot":
            sizes = []
            for a in args:
                if not isinstance(a, Vec):
                    raise ParseError("dot takes two vector arguments (x or t)", pos)
                sizes.append(self.d if a.kind == "x" else self.s)
            if sizes[0] != sizes[1]:
                raise ParseError(f"dot of vectors with sizes {sizes[0]} and {sizes[1]}", pos)
        if name == "excise":
            r1, r2 = args[1], args[2]
            if not (isinstance(r1, Const) and isinstance(r2, Const)):
                raise ParseError("excise radii must be numbers", pos)
            if not 0 < r1.value < r2.value:
                raise ParseError("excise needs 0 < r1 < r2", pos)
        return Call(name, tuple(args))

    def argument(self) -> Node:
        kind, val, pos = self.peek()
        if kind == "id" and val in ("x", "t"):
            nxt = self.tokens[self.i + 1]
            if nxt[1] in (",", ")"):
                self.take()
                return Vec(val)
        return self.expr()


def _positive(node: Node) -> bool:
    """Conservative static test that a subtree is strictly positive everywhere."""
    if isinstance(node, Const):
        return node.value > 0
    if isinstance(node, Call):
        return node.name in ("jb", "exp")
    if isinstance(node, BinOp):
        if node.op in ("*", "/", "+"):
            return _positive(node.left) and _positive(node.right)
        return False
    if isinstance(node, Pow):
        return _positive(node.base)
    return False


def parse(text: str, d: int, s: int) -> "Expression":
    """Parse ``text`` into an :class:`Expression` over x in R^d and t in R^s."""
    if d < 1 or s < 0:
        raise ParseError(f"invalid dimensions d={d}, s={s}")
    return Expression(_Parser(text, d, s).parse(), d, s)


# ---------------------------------------------------------------------------
# unparsing


def _fmt_number(v: float) -> str:
    return repr(float(v))


def unparse(node: Node) -> str:
    """Fully parenthesised text that parses back to the same tree."""
    if isinstance(node, Const):
        return _fmt_number(node.value)
    if isinstance(node, Var):
        return f"{node.kind}{node.index}"
    if isinstance(node, Vec):
        return node.kind
    if isinstance(node, Neg):
        return f"(-{unparse(node.arg)})"
    if isinstance(node, BinOp):
        return f"({unparse(node.left)} {node.op} {unparse(node.right)})"
    if isinstance(node, Pow):
        base = unparse(node.base)
        if isinstance(node.base, Pow):
            base = f"({base})"
        e = node.exponent
        exp_txt = str(int(e)) if float(e).is_integer() else repr(float(e))
        return f"{base}^{exp_txt}"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(unparse(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# truncated Taylor algebra


@dataclass(frozen=True)
class _Algebra:
    nvars: int
    order: int
    monomials: tuple
    index: dict
    products: tuple  # per output monomial: (left indices, right indices)
    factorials: np.ndarray


@lru_cache(maxsize=None)
def _algebra(nvars: int, order: int) -> _Algebra:
    monos = []
    for deg in range(order + 1):
        for combo in combinations_with_replacement(range(nvars), deg):
            e = [0] * nvars
            for c in combo:
                e[c] += 1
            monos.append(tuple(e))
    index = {m: i for i, m in enumerate(monos)}
    buckets: list[tuple[list, list]] = [([], []) for _ in monos]
    for i, a in enumerate(monos):
        for j, b in enumerate(monos):
            if sum(a) + sum(b) <= order:
                k = index[tuple(p + q for p, q in zip(a, b))]
                buckets[k][0].append(i)
                buckets[k][1].append(j)
    products = tuple((np.array(l, dtype=int), np.array(r, dtype=int)) for l, r in buckets)
    fact = np.array([math.prod(math.factorial(e) for e in m) for m in monos], dtype=float)
    return _Algebra(nvars, order, tuple(monos), index, products, fact)


class _Series:
    """Truncated Taylor polynomials at N points; ``coef`` has shape (M, N)."""

    __slots__ = ("alg", "coef")

    def __init__(self, alg: _Algebra, coef: np.ndarray):
        self.alg = alg
        self.coef = coef

    @classmethod
    def constant(cls, alg, value, npts):
        coef = np.zeros((len(alg.monomials), npts))
        coef[0] = value
        return cls(alg, coef)

    @property
    def value(self) -> np.ndarray:
        return self.coef[0]

    def __add__(self, other):
        return _Series(self.alg, self.coef + other.coef)

    def __sub__(self, other):
        return _Series(self.alg, self.coef - other.coef)

    def __neg__(self):
        return _Series(self.alg, -self.coef)

    def scale(self, c):
        return _Series(self.alg, self.coef * c)

    def __mul__(self, other):
        a, b = self.coef, other.coef
        if len(a) == 1:
            return _Series(self.alg, a * b)
        out = np.empty_like(a)
        for k, (li, ri) in enumerate(self.alg.products):
            out[k] = (a[li] * b[ri]).sum(axis=0)
        return _Series(self.alg, out)

    def compose(self, taylor: Sequence[np.ndarray]):
        """Apply a scalar function given its Taylor coefficients at the value."""
        delta = _Series(self.alg, self.coef.copy())
        delta.coef[0] = 0.0
        out = np.zeros_like(self.coef)
        out[0] = taylor[0]
        power = None
        for j in range(1, min(len(taylor), self.alg.order + 1)):
            power = delta if power is None else power * delta
            out += taylor[j] * power.coef
        return _Series(self.alg, out)

    def int_power(self, n: int):
        if n == 0:
            return _Series.constant(self.alg, 1.0, self.coef.shape[1])
        result = None
        base = self
        while n:
            if n & 1:
                result = base if result is None else result * base
            n >>= 1
            if n:
                base = base * base
        return result


def _binom(p: float, j: int) -> float:
    out = 1.0
    for i in range(j):
        out *= (p - i) / (i + 1)
    return out


def _power_taylor(u: np.ndarray, p: float, order: int) -> list[np.ndarray]:
    return [_binom(p, j) * u ** (p - j) for j in range(order + 1)]


# ---------------------------------------------------------------------------
# evaluation


class _Evaluator:
    def __init__(self, d, s, X, T, order):
        self.d, self.s = d, s
        self.order = order
        npts = X.shape[0]
        self.npts = npts
        self.X, self.T = X, T
        self.alg = _algebra(d + s, order)
        self.vars = {}
        for kind, data, offset in (("x", X, 0), ("t", T, d)):
            for i in range(data.shape[1]):
                coef = np.zeros((len(self.alg.monomials), npts))
                coef[0] = data[:, i]
                if order >= 1:
                    e = [0] * (d + s)
                    e[offset + i] = 1
                    coef[self.alg.index[tuple(e)]] = 1.0
                self.vars[(kind, i + 1)] = _Series(self.alg, coef)

    def const(self, v):
        return _Series.constant(self.alg, v, self.npts)

    def vector(self, node) -> list[_Series]:
        if isinstance(node, Vec):
            size = self.d if node.kind == "x" else self.s
            return [self.vars[(node.kind, i + 1)] for i in range(size)]
        return [self.eval(node)]

    def sq_norm(self, comps):
        total = self.const(0.0)
        for c in comps:
            total = total + c * c
        return total

    def sqrt(self, u: _Series, node) -> _Series:
        v = u.value
        if np.any(v < 0):
            raise DomainError("square root of a negative number", unparse(node))
        if self.order >= 1 and np.any(v == 0):
            raise DomainError("square root is not differentiable at zero", unparse(node))
        with np.errstate(divide="ignore", invalid="ignore"):
            return u.compose(_power_taylor(v, 0.5, self.order))

    def eval(self, node) -> _Series:
        out = self._eval(node)
        if not np.all(np.isfinite(out.coef)):
            raise DomainError("non-finite value", unparse(node))
        return out

    def _eval(self, node) -> _Series:
        if isinstance(node, Const):
            return self.const(node.value)
        if isinstance(node, Var):
            return self.vars[(node.kind, node.index)]
        if isinstance(node, Neg):
            return -self.eval(node.arg)
        if isinstance(node, BinOp):
            if node.op == "*":
                for cut, other in ((node.left, node.right), (node.right, node.left)):
                    if _is_vector_excise(cut):
                        return self.excised_product(cut, other)
            left = self.eval(node.left)
            right = self.eval(node.right)
            if node.op == "+":
                return left + right
            if node.op == "-":
                return left - right
            if node.op == "*":
                return left * right
            return left * self.reciprocal(right, node)
        if isinstance(node, Pow):
            base = self.eval(node.base)
            e = node.exponent
            if float(e).is_integer():
                n = int(e)
                if n >= 0:
                    return base.int_power(n)
                return self.reciprocal(base, node).int_power(-n)
            if np.any(base.value <= 0):
                raise DomainError("fractional power of a non-positive number", unparse(node))
            return base.compose(_power_taylor(base.value, e, self.order))
        if isinstance(node, Call):
            return self.call(node)
        if isinstance(node, Vec):
            raise DomainError("bare vector used as a scalar", unparse(node))
        raise TypeError(f"not an expression node: {node!r}")

    def reciprocal(self, u: _Series, node) -> _Series:
        v = u.value
        if np.any(v == 0):
            raise DomainError("division by zero", unparse(node))
        taylor = [(-1.0) ** j * v ** (-(j + 1)) for j in range(self.order + 1)]
        return u.compose(taylor)

    def call(self, node: Call) -> _Series:
        name = node.name
        k = self.order
        if name == "dot":
            a, b = self.vector(node.args[0]), self.vector(node.args[1])
            total = self.const(0.0)
            for p, q in zip(a, b):
                total = total + p * q
            return total
        if name == "jb":
            return self.sqrt(self.const(1.0) + self.sq_norm(self.vector(node.args[0])), node)
        if name == "norm2":
            return self.sqrt(self.sq_norm(self.vector(node.args[0])), node)
        if name == "excise":
            return self.excise(node)
        u = self.eval(node.args[0])
        v = u.value
        if name == "sqrt":
            return self.sqrt(u, node)
        if name == "exp":
            with np.errstate(over="ignore"):
                ev = np.exp(v)
            return u.compose([ev / math.factorial(j) for j in range(k + 1)])
        if name in ("sin", "cos"):
            sv, cv = np.sin(v), np.cos(v)
            cycle = [sv, cv, -sv, -cv] if name == "sin" else [cv, -sv, -cv, sv]
            return u.compose([cycle[j % 4] / math.factorial(j) for j in range(k + 1)])
        raise TypeError(f"unknown function {name}")

    def excised_product(self, cut: Call, other) -> _Series:
        """``cut * other`` where the cut-off vanishes identically near some points.

        At those points every derivative of the product is zero, so ``other``
        is evaluated at a harmless stand-in point and the result discarded.
        """
        chi = self.eval(cut)
        kind = cut.args[0].kind
        r1, r2 = cut.args[1].value, cut.args[2].value
        data = self.X if kind == "x" else self.T
        dead = np.sum(data * data, axis=1) <= r1 * r1
        if not np.any(dead):
            return chi * self.eval(other)
        if np.all(dead):
            return self.const(0.0)
        X, T = self.X.copy(), self.T.copy()
        target = X if kind == "x" else T
        target[dead] = 0.0
        target[dead, 0] = r2
        sub = _Evaluator(self.d, self.s, X, T, self.order)
        prod = chi * sub.eval(other)
        prod.coef[:, dead] = 0.0
        return prod

    def excise(self, node: Call) -> _Series:
        r1, r2 = node.args[1].value, node.args[2].value
        sq = self.sq_norm(self.vector(node.args[0]))
        radius2 = sq.value
        inside = (radius2 > r1 * r1) & (radius2 < r2 * r2)
        mid = 0.25 * (r1 + r2) ** 2
        safe = _Series(self.alg, np.where(inside, sq.coef, mid))
        if not np.any(inside):
            out = self.const(0.0)
        else:
            norm = safe.compose(_power_taylor(safe.value, 0.5, self.order))
            u = (norm - self.const(r1)).scale(1.0 / (r2 - r1))
            u2 = u * u
            u3 = u2 * u
            u4 = u2 * u2
            u5 = u4 * u
            out = u5.scale(6.0) - u4.scale(15.0) + u3.scale(10.0)
        coef = np.where(inside, out.coef, 0.0)
        coef[0] = np.where(radius2 >= r2 * r2, 1.0, coef[0])
        return _Series(self.alg, coef)


def _is_vector_excise(node) -> bool:
    return isinstance(node, Call) and node.name == "excise" and isinstance(node.args[0], Vec)


def _as_points(arr, size: int, name: str) -> np.ndarray:
    a = np.asarray(arr, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1)
    if a.ndim == 1:
        a = a.reshape(1, -1) if a.shape[0] == size else a.reshape(-1, 1)
    if a.shape[-1] != size and not (size == 0 and a.size == 0):
        raise ValueError(f"{name} must have {size} components, got shape {a.shape}")
    return a.reshape(-1, size)


# ---------------------------------------------------------------------------
# public containers


@dataclass(frozen=True)
class Expression:
    """Parsed expression with its dimensions ``d`` (for x) and ``s`` (for t)."""

    root: Node
    d: int
    s: int

    @classmethod
    def parse(cls, text: str, d: int, s: int) -> "Expression":
        return parse(text, d, s)

    def __str__(self) -> str:
        return unparse(self.root)

    def _combine(self, other, op: str) -> "Expression":
        if isinstance(other, (int, float)):
            other = Expression(Const(float(other)), self.d, self.s)
        if (other.d, other.s) != (self.d, self.s):
            raise ValueError("dimension mismatch between expressions")
        return Expression(BinOp(op, self.root, other.root), self.d, self.s)

    def __add__(self, other):
        return self._combine(other, "+")

    def __sub__(self, other):
        return self._combine(other, "-")

    def __mul__(self, other):
        return self._combine(other, "*")

    def __truediv__(self, other):
        return self._combine(other, "/")

    def __neg__(self):
        return Expression(Neg(self.root), self.d, self.s)

    def points(self, x, t) -> tuple[np.ndarray, np.ndarray]:
        X = _as_points(x, self.d, "x")
        T = _as_points(t, self.s, "t") if self.s else np.zeros((X.shape[0], 0))
        if X.shape[0] != T.shape[0]:
            if X.shape[0] == 1:
                X = np.repeat(X, T.shape[0], axis=0)
            elif T.shape[0] == 1:
                T = np.repeat(T, X.shape[0], axis=0)
            else:
                raise ValueError("x and t batches differ in length")
        return X, T

    def jets(self, x, t, order: int) -> "JetBatch":
        """Jets of order ``order`` at a batch of points ``x`` (N, d), ``t`` (N, s)."""
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"order must lie in [0, {MAX_ORDER}]")
        X, T = self.points(x, t)
        ev = _Evaluator(self.d, self.s, X, T, order)
        series = ev.eval(self.root)
        return JetBatch(self.d, self.s, order, series.alg, series.coef)

    def evaluate(self, x, t) -> np.ndarray:
        """Plain values at a batch of points."""
        X, T = self.points(x, t)
        ev = _Evaluator(self.d, self.s, X, T, 0)
        return ev.eval(self.root).coef[0].copy()

    def __call__(self, x, t) -> float:
        return float(self.evaluate(x, t)[0])


@dataclass(frozen=True)
class JetBatch:
    """Taylor data at N points.  Variables are ordered x_1..x_d, t_1..t_s."""

    d: int
    s: int
    order: int
    _alg: _Algebra
    _coef: np.ndarray

    @property
    def value(self) -> np.ndarray:
        return self._coef[0]

    def derivative(self, alpha=None, beta=None) -> np.ndarray:
        """D_t^alpha D_x^beta at every point (alpha over t, beta over x)."""
        alpha = tuple(alpha) if alpha is not None else (0,) * self.s
        beta = tuple(beta) if beta is not None else (0,) * self.d
        mono = beta + alpha
        if sum(mono) > self.order:
            raise ValueError(f"derivative of order {sum(mono)} exceeds jet order {self.order}")
        k = self._alg.index[mono]
        return self._coef[k] * self._alg.factorials[k]

    def multi_indices(self):
        """All (alpha, beta) pairs carried by the jet, in a fixed order."""
        for mono in self._alg.monomials:
            yield mono[self.d :], mono[: self.d]

    def gradient(self) -> np.ndarray:
        """Shape (N, d + s)."""
        n = self.d + self.s
        cols = [self._coef[self._alg.index[tuple(int(i == j) for i in range(n))]] for j in range(n)]
        return np.stack(cols, axis=-1)

    def hessian(self) -> np.ndarray:
        """Shape (N, d + s, d + s)."""
        n = self.d + self.s
        H = np.empty((self._coef.shape[1], n, n))
        for i in range(n):
            for j in range(n):
                e = [0] * n
                e[i] += 1
                e[j] += 1
                k = self._alg.index[tuple(e)]
                H[:, i, j] = self._coef[k] * self._alg.factorials[k]
        return H

    def third(self) -> np.ndarray:
        """Shape (N, n, n, n) array of third partials."""
        n = self.d + self.s
        D = np.empty((self._coef.shape[1], n, n, n))
        for i in range(n):
            for j in range(n):
                for l in range(n):
                    e = [0] * n
                    e[i] += 1
                    e[j] += 1
                    e[l] += 1
                    k = self._alg.index[tuple(e)]
                    D[:, i, j, l] = self._coef[k] * self._alg.factorials[k]
        return D

    def at(self, i: int) -> "Jet":
        partials = {}
        for k, mono in enumerate(self._alg.monomials):
            alpha, beta = mono[self.d :], mono[: self.d]
            partials[(alpha, beta)] = float(self._coef[k, i] * self._alg.factorials[k])
        return Jet(float(self._coef[0, i]), partials, self.order, self.d, self.s)


@dataclass(frozen=True)
class Jet:
    """Value and partial derivatives at one point.

    ``partials`` maps ``(alpha, beta)`` to D_t^alpha D_x^beta f, where alpha
    runs over the t variables and beta over the x variables.  The zero
    multi-index is included and equals ``value``.
    """

    value: float
    partials: dict
    order: int
    d: int
    s: int

    def partial(self, alpha=None, beta=None) -> float:
        alpha = tuple(alpha) if alpha is not None else (0,) * self.s
        beta = tuple(beta) if beta is not None else (0,) * self.d
        return self.partials[(alpha, beta)]

    def grad_x(self) -> np.ndarray:
        return np.array([self.partial(beta=_unit(self.d, i)) for i in range(self.d)])

    def grad_t(self) -> np.ndarray:
        return np.array([self.partial(alpha=_unit(self.s, i)) for i in range(self.s)])


def _unit(n: int, i: int) -> tuple:
    return tuple(int(j == i) for j in range(n))


def eval_jet(f: Expression, x, t, order: int) -> Jet:
    """Value and all partials of ``f`` up to ``order`` at a single point."""
    x = np.asarray(x, dtype=float).reshape(1, f.d)
    t = np.asarray(t, dtype=float).reshape(1, f.s)
    return f.jets(x, t, order).at(0)
