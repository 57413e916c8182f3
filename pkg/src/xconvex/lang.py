"""A small expression language for scalar functions and vector maps.

Grammar (``^`` binds tighter than unary minus, which binds tighter than
``* /``, which bind tighter than ``+ -``; binary operators are left
associative)::

    expr      := term (("+"|"-") term)*
    term      := factor (("*"|"/") factor)*
    factor    := "-"? power
    power     := atom ("^" INT)?
    atom      := NUMBER | IDENT | IDENT "(" args ")" | "(" expr ")" | piecewise
    piecewise := "piecewise" "(" ("(" cond "," expr ")" ",")+ expr ")"
    cond      := expr RELOP expr

Variables are ``x1 .. xn``; in one dimension ``r`` is an alias for ``x1``.
Any other identifier must be a declared parameter.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

import numpy as np

from .geometry import DomainSet

__all__ = [
    "ExprError",
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "ArityError",
    "EvaluationError",
    "Num",
    "Var",
    "Param",
    "Neg",
    "BinOp",
    "Pow",
    "Call",
    "Cond",
    "Piecewise",
    "parse",
    "to_text",
    "evaluate",
    "evaluate_many",
    "free_params",
    "substitute",
    "ScalarFn",
    "GMap",
]


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class UnknownIdentifierError(ExprSyntaxError):
    pass


class ArityError(ExprSyntaxError):
    pass


class EvaluationError(ExprError):
    def __init__(self, message: str, point):
        self.point = tuple(float(v) for v in np.atleast_1d(point))
        super().__init__(f"{message} at point {self.point}")


# --------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # zero based: Var(0) is x1


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


@dataclass(frozen=True)
class Cond:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Piecewise:
    branches: tuple  # tuple[tuple[Cond, Expr], ...]
    default: "Expr"


Expr = Union[Num, Var, Param, Neg, BinOp, Pow, Call, Piecewise]

UNARY_FUNCS = ("floor", "ceil", "abs", "exp", "log", "sqrt")
VARIADIC_FUNCS = ("min", "max")
RELOPS = ("<", "<=", ">", ">=", "==", "!=")


# --------------------------------------------------------------------------
# Tokenizer and parser

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|==|!=|[-+*/^(),<>])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    offset: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", len(text[:pos].encode()))
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), len(text[:pos].encode())))
        pos = m.end()
    toks.append(_Tok("end", "", len(text.encode())))
    return toks


class _Parser:
    def __init__(self, text: str, dim: int, params: frozenset[str]):
        self.toks = _tokenize(text)
        self.i = 0
        self.dim = dim
        self.params = params

    @property
    def cur(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        if self.cur.text != text or self.cur.kind == "end":
            raise ExprSyntaxError(f"expected {text!r}, found {self.cur.text or 'end of input'!r}", self.cur.offset)
        return self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        if self.cur.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.cur.text!r}", self.cur.offset)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.cur.kind == "op" and self.cur.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.cur.kind == "op" and self.cur.text in ("*", "/"):
            op = self.advance().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        if self.cur.kind == "op" and self.cur.text == "-":
            self.advance()
            return Neg(self.power())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.cur.kind == "op" and self.cur.text == "^":
            self.advance()
            tok = self.cur
            if tok.kind != "num" or not tok.text.isdigit():
                raise ExprSyntaxError("exponent must be a non-negative integer literal", tok.offset)
            self.advance()
            return Pow(base, int(tok.text))
        return base

    def atom(self) -> Expr:
        tok = self.cur
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "ident":
            self.advance()
            if self.cur.kind == "op" and self.cur.text == "(":
                return self.call(tok)
            return self.identifier(tok)
        raise ExprSyntaxError(f"unexpected {tok.text or 'end of input'!r}", tok.offset)

    def identifier(self, tok: _Tok) -> Expr:
        name = tok.text
        if name == "r" and self.dim == 1:
            return Var(0)
        m = re.fullmatch(r"x([1-9]\d*)", name)
        if m:
            k = int(m.group(1))
            if k > self.dim:
                raise UnknownIdentifierError(f"variable {name} exceeds dimension {self.dim}", tok.offset)
            return Var(k - 1)
        if name in UNARY_FUNCS or name in VARIADIC_FUNCS or name == "piecewise":
            raise ExprSyntaxError(f"function {name!r} needs an argument list", tok.offset)
        if name in self.params:
            return Param(name)
        raise UnknownIdentifierError(f"unknown identifier {name!r}", tok.offset)

    def call(self, tok: _Tok) -> Expr:
        name = tok.text
        if name == "piecewise":
            return self.piecewise(tok)
        if name not in UNARY_FUNCS and name not in VARIADIC_FUNCS:
            raise UnknownIdentifierError(f"unknown function {name!r}", tok.offset)
        self.expect("(")
        args = [self.expr()]
        while self.cur.text == ",":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        if name in UNARY_FUNCS and len(args) != 1:
            raise ArityError(f"{name} takes exactly one argument, got {len(args)}", tok.offset)
        if name in VARIADIC_FUNCS and len(args) < 2:
            raise ArityError(f"{name} takes at least two arguments, got {len(args)}", tok.offset)
        return Call(name, tuple(args))

    def piecewise(self, tok: _Tok) -> Expr:
        self.expect("(")
        branches = []
        # a branch starts with "(" cond ","; anything else is the default expression
        while True:
            save = self.i
            if self.cur.text == "(":
                self.advance()
                try:
                    cond = self.cond()
                except ExprSyntaxError:
                    self.i = save
                    break
                self.expect(",")
                value = self.expr()
                self.expect(")")
                self.expect(",")
                branches.append((cond, value))
            else:
                break
        if not branches:
            raise ArityError("piecewise needs at least one (condition, value) branch", tok.offset)
        default = self.expr()
        self.expect(")")
        return Piecewise(tuple(branches), default)

    def cond(self) -> Cond:
        left = self.expr()
        if self.cur.kind != "op" or self.cur.text not in RELOPS:
            raise ExprSyntaxError("expected a comparison operator", self.cur.offset)
        op = self.advance().text
        return Cond(op, left, self.expr())


def parse(text: str, dim: int = 1, params: Iterable[str] = ()) -> Expr:
    """Parse ``text`` into an expression over ``x1..x{dim}``.

    ``params`` lists the parameter names the text may use.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text, int(dim), frozenset(params)).parse()


# --------------------------------------------------------------------------
# Printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node: Expr) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Pow):
        return 4
    if isinstance(node, Num) and (node.value < 0 or math.copysign(1.0, node.value) < 0):
        return 0
    return 5


def _wrap(node: Expr, need: int) -> str:
    s = to_text(node)
    return f"({s})" if _prec(node) < need else s


def to_text(node: Expr) -> str:
    """Render an expression so that ``parse(to_text(e)) == e``."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return f"x{node.index + 1}"
    if isinstance(node, Param):
        return node.name
    if isinstance(node, Neg):
        return "-" + _wrap(node.operand, 4)
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        return f"{_wrap(node.left, p)} {node.op} {_wrap(node.right, p + 1)}"
    if isinstance(node, Pow):
        return f"{_wrap(node.base, 5)}^{node.exponent}"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_text(a) for a in node.args)})"
    if isinstance(node, Piecewise):
        parts = [f"({to_text(c.left)} {c.op} {to_text(c.right)}, {to_text(v)})" for c, v in node.branches]
        parts.append(to_text(node.default))
        return f"piecewise({', '.join(parts)})"
    raise TypeError(f"not an expression node: {node!r}")


# --------------------------------------------------------------------------
# Evaluation


def _children(node) -> list:
    if isinstance(node, Neg):
        return [node.operand]
    if isinstance(node, (BinOp, Cond)):
        return [node.left, node.right]
    if isinstance(node, Pow):
        return [node.base]
    if isinstance(node, Call):
        return list(node.args)
    if isinstance(node, Piecewise):
        out = []
        for c, v in node.branches:
            out += [c, v]
        return out + [node.default]
    return []


def walk(node):
    yield node
    for child in _children(node):
        yield from walk(child)


def free_params(node: Expr) -> set[str]:
    return {n.name for n in walk(node) if isinstance(n, Param)}


def substitute(node: Expr, mapping: Mapping[int, Expr]) -> Expr:
    """Replace ``Var(i)`` by ``mapping[i]`` throughout ``node``."""
    if isinstance(node, Var):
        return mapping.get(node.index, node)
    if isinstance(node, Neg):
        return Neg(substitute(node.operand, mapping))
    if isinstance(node, BinOp):
        return BinOp(node.op, substitute(node.left, mapping), substitute(node.right, mapping))
    if isinstance(node, Pow):
        return Pow(substitute(node.base, mapping), node.exponent)
    if isinstance(node, Call):
        return Call(node.name, tuple(substitute(a, mapping) for a in node.args))
    if isinstance(node, Piecewise):
        return Piecewise(
            tuple(
                (Cond(c.op, substitute(c.left, mapping), substitute(c.right, mapping)), substitute(v, mapping))
                for c, v in node.branches
            ),
            substitute(node.default, mapping),
        )
    return node


_CMP = {
    "<": np.less,
    "<=": np.less_equal,
    ">": np.greater,
    ">=": np.greater_equal,
    "==": np.equal,
    "!=": np.not_equal,
}


def _fail(message: str, bad: np.ndarray, X: np.ndarray):
    i = int(np.flatnonzero(bad)[0])
    raise EvaluationError(message, X[i])


def _ev(node, X: np.ndarray, params: Mapping[str, float]):
    """Vectorised evaluation; constants stay scalars and broadcast."""
    n = len(X)
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Var):
        return X[:, node.index]
    if isinstance(node, Param):
        try:
            return np.float64(params[node.name])
        except KeyError:
            raise ExprError(f"parameter {node.name!r} is not bound") from None
    if isinstance(node, Neg):
        return -_ev(node.operand, X, params)
    if isinstance(node, BinOp):
        a = _ev(node.left, X, params)
        b = _ev(node.right, X, params)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        zero = np.broadcast_to(b == 0, (n,))
        if zero.any():
            _fail("division by zero", zero, X)
        return a / b
    if isinstance(node, Pow):
        a = _ev(node.base, X, params)
        k = node.exponent
        if k == 1:
            return a
        if 2 <= k <= 4:
            sq = a * a
            return sq if k == 2 else (sq * a if k == 3 else sq * sq)
        return np.power(a, k)
    if isinstance(node, Call):
        args = [_ev(a, X, params) for a in node.args]
        name = node.name
        if name == "floor":
            return np.floor(args[0])
        if name == "ceil":
            return np.ceil(args[0])
        if name == "abs":
            return np.abs(args[0])
        if name == "exp":
            return np.exp(args[0])
        if name == "log":
            bad = np.broadcast_to(~(args[0] > 0), (n,))
            if bad.any():
                _fail("log of a non-positive number", bad, X)
            return np.log(args[0])
        if name == "sqrt":
            bad = np.broadcast_to(~(args[0] >= 0), (n,))
            if bad.any():
                _fail("sqrt of a negative number", bad, X)
            return np.sqrt(args[0])
        if name == "min":
            out = args[0]
            for a in args[1:]:
                out = np.minimum(out, a)
            return out
        if name == "max":
            out = args[0]
            for a in args[1:]:
                out = np.maximum(out, a)
            return out
        raise ExprError(f"unknown function {name!r}")
    if isinstance(node, Piecewise):
        out = np.empty(n)
        rest = np.arange(n)
        for cond, value in node.branches:
            if len(rest) == 0:
                break
            sub = X[rest]
            hit = np.broadcast_to(_CMP[cond.op](_ev(cond.left, sub, params), _ev(cond.right, sub, params)), (len(sub),))
            chosen = rest[hit]
            if len(chosen):
                out[chosen] = _ev(value, X[chosen], params)
            rest = rest[~hit]
        if len(rest):
            out[rest] = _ev(node.default, X[rest], params)
        return out
    raise TypeError(f"not an expression node: {node!r}")


def evaluate_many(node: Expr, X, params: Mapping[str, float] | None = None) -> np.ndarray:
    """Evaluate at each row of ``X`` (shape ``(N, dim)``); returns shape ``(N,)``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    with np.errstate(all="ignore"):
        out = np.broadcast_to(np.asarray(_ev(node, X, params or {}), dtype=float), (len(X),))
    if np.may_share_memory(out, X) or not out.flags.writeable:
        out = out.copy()
    bad = ~np.isfinite(out)
    if bad.any():
        _fail("non-finite result", bad, X)
    return out


def evaluate(node: Expr, x, params: Mapping[str, float] | None = None) -> float:
    """Evaluate at a single point."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(evaluate_many(node, x[None, :], params)[0])


# --------------------------------------------------------------------------
# Functions and maps


def _freeze(bindings: Mapping[str, float] | None) -> tuple:
    return tuple(sorted((str(k), float(v)) for k, v in (bindings or {}).items()))


@dataclass(frozen=True)
class ScalarFn:
    """A real function on ``dim``-space given by an expression.

    ``domain`` is where the function is defined; ``None`` means "the domain of
    whatever check it is used in".
    """

    body: Expr
    dim: int = 1
    params: tuple = ()
    domain: DomainSet | None = None
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if not isinstance(self.params, tuple):
            object.__setattr__(self, "params", _freeze(self.params))
        missing = free_params(self.body) - set(self.bindings)
        if missing:
            raise ExprError(f"unbound parameters: {sorted(missing)}")
        if self.domain is not None and self.domain.dim != self.dim:
            raise ValueError("function domain has the wrong dimension")

    @classmethod
    def from_text(cls, text: str, dim: int = 1, params: Mapping[str, float] | None = None, **kw) -> ScalarFn:
        params = dict(params or {})
        return cls(parse(text, dim, params), dim, _freeze(params), **kw)

    @property
    def bindings(self) -> dict[str, float]:
        return dict(self.params)

    @property
    def text(self) -> str:
        return to_text(self.body)

    def values(self, X) -> np.ndarray:
        return evaluate_many(self.body, X, self.bindings)

    def __call__(self, x) -> float:
        return evaluate(self.body, x, self.bindings)

    def with_domain(self, domain: DomainSet | None) -> ScalarFn:
        return ScalarFn(self.body, self.dim, self.params, domain, self.name)

    def negated(self) -> ScalarFn:
        name = None if self.name is None else f"-{self.name}"
        return ScalarFn(Neg(self.body), self.dim, self.params, self.domain, name)


@dataclass(frozen=True)
class GMap:
    """A map from ``dim``-space to itself, one expression per component."""

    components: tuple
    params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not isinstance(self.params, tuple):
            object.__setattr__(self, "params", _freeze(self.params))
        if not self.components:
            raise ValueError("a map needs at least one component")
        bound = set(dict(self.params))
        for c in self.components:
            missing = free_params(c) - bound
            if missing:
                raise ExprError(f"unbound parameters: {sorted(missing)}")
            for node in walk(c):
                if isinstance(node, Var) and node.index >= len(self.components):
                    raise ValueError("map component uses a variable beyond its dimension")

    @property
    def dim(self) -> int:
        return len(self.components)

    @classmethod
    def from_text(cls, texts: Iterable[str] | str, params: Mapping[str, float] | None = None) -> GMap:
        if isinstance(texts, str):
            texts = [texts]
        texts = list(texts)
        params = dict(params or {})
        return cls(tuple(parse(t, len(texts), params) for t in texts), _freeze(params))

    @classmethod
    def identity(cls, dim: int = 1) -> GMap:
        return cls(tuple(Var(i) for i in range(dim)))

    @property
    def texts(self) -> list[str]:
        return [to_text(c) for c in self.components]

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}")
        params = dict(self.params)
        cols = []
        for c in self.components:
            if isinstance(c, Var):
                cols.append(X[:, c.index])
            else:
                cols.append(evaluate_many(c, X, params))
        return np.stack(cols, axis=1)

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self.apply(x[None, :])[0]
