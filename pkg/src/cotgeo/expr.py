"""Scalar fields over a coordinate chart of T*M or TM.

Expressions are parsed from text into hash-consed trees, differentiated
by rules (never numerically) and evaluated on single points or on whole
batches of points at once.  Structurally equal subtrees are the same
object, so a tree is really a DAG and evaluation/differentiation memoize
on node identity.
"""
from __future__ import annotations

import math
import threading
import weakref
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt")


class ExprError(Exception):
    """Base class for expression errors."""


class ParseError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.message = message
        self.offset = offset


class UnknownIdentifierError(ParseError):
    def __init__(self, token: str, offset: int):
        super().__init__(f"unknown identifier {token!r}", offset)
        self.token = token


class ArityError(ParseError):
    pass


class DomainError(ExprError, ArithmeticError):
    """Evaluation left the natural domain of an operation."""

    def __init__(self, function: str, value: float):
        super().__init__(f"{function}: argument {value!r} is outside the domain")
        self.function = function
        self.value = value


class ChartMismatchError(ExprError, ValueError):
    pass


# --------------------------------------------------------------------------
# Charts and points
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Chart:
    """Local chart (x1..xn, p1..pn) on T*M, or (x1..xn, y1..yn) on TM."""

    n: int
    fiber: str = "p"
    base: str = "x"

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"chart dimension must be a positive integer, got {self.n!r}")
        if self.fiber not in ("p", "y") or self.base != "x":
            raise ValueError(f"unsupported chart names {self.base!r}/{self.fiber!r}")

    @classmethod
    def cotangent(cls, n: int) -> "Chart":
        return cls(n, "p")

    @classmethod
    def tangent(cls, n: int) -> "Chart":
        return cls(n, "y")

    @property
    def base_names(self) -> tuple[str, ...]:
        return tuple(f"{self.base}{i + 1}" for i in range(self.n))

    @property
    def fiber_names(self) -> tuple[str, ...]:
        return tuple(f"{self.fiber}{i + 1}" for i in range(self.n))

    @property
    def coords(self) -> tuple[str, ...]:
        return self.base_names + self.fiber_names

    @property
    def dim(self) -> int:
        return 2 * self.n

    def index(self, name: str) -> int:
        try:
            return self.coords.index(name)
        except ValueError:
            raise ChartMismatchError(f"{name!r} is not a coordinate of {self}") from None

    def __str__(self):
        return f"chart({', '.join(self.coords)})"


@dataclass(frozen=True)
class ChartPoint:
    chart: Chart
    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) != self.chart.dim:
            raise ValueError(f"point has {len(vals)} entries, chart needs {self.chart.dim}")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("point entries must be finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_parts(cls, chart: Chart, base: Sequence[float], fiber: Sequence[float]):
        return cls(chart, tuple(base) + tuple(fiber))

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=float)


# --------------------------------------------------------------------------
# Expression nodes
# --------------------------------------------------------------------------


class Expr:
    """Interned expression node.  Build with the module-level constructors."""

    __slots__ = ("op", "args", "data", "variables", "_derivs", "__weakref__")

    def __repr__(self):
        return f"Expr({to_text(self)})"

    @property
    def is_const(self) -> bool:
        return self.op == "const"

    def __reduce__(self):
        return (parse_expr, (to_text(self),))


_TABLE: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()
_LOCK = threading.Lock()


def _node(op: str, args: tuple = (), data=None) -> Expr:
    key = (op, args, data)
    with _LOCK:
        node = _TABLE.get(key)
        if node is None:
            node = object.__new__(Expr)
            node.op = op
            node.args = args
            node.data = data
            if op == "var":
                node.variables = frozenset((data,))
            else:
                node.variables = frozenset().union(*(a.variables for a in args))
            node._derivs = {}
            _TABLE[key] = node
    return node


def const(value: float) -> Expr:
    value = float(value)
    if value == 0.0:
        value = 0.0  # fold -0.0
    return _node("const", (), value)


def var(name: str) -> Expr:
    return _node("var", (), name)


ZERO = const(0.0)
ONE = const(1.0)
_KEEP = (ZERO, ONE)  # keep the interned singletons alive


def _is(node: Expr, value: float) -> bool:
    return node.op == "const" and node.data == value


def add(a: Expr, b: Expr) -> Expr:
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    if a.is_const and b.is_const:
        return const(a.data + b.data)
    if b.op == "neg":
        return sub(a, b.args[0])
    return _node("add", (a, b))


def sub(a: Expr, b: Expr) -> Expr:
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return neg(b)
    if a is b:
        return ZERO
    if a.is_const and b.is_const:
        return const(a.data - b.data)
    if b.op == "neg":
        return add(a, b.args[0])
    return _node("sub", (a, b))


def neg(a: Expr) -> Expr:
    if a.is_const:
        return const(-a.data)
    if a.op == "neg":
        return a.args[0]
    if a.op == "mul" and a.args[0].is_const:
        return mul(const(-a.args[0].data), a.args[1])
    return _node("neg", (a,))


def mul(a: Expr, b: Expr) -> Expr:
    if _is(a, 0.0) or _is(b, 0.0):
        return ZERO
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if _is(a, -1.0):
        return neg(b)
    if _is(b, -1.0):
        return neg(a)
    if a.is_const and b.is_const:
        return const(a.data * b.data)
    if b.is_const:
        a, b = b, a
    if a.is_const and b.op == "mul" and b.args[0].is_const:
        return mul(const(a.data * b.args[0].data), b.args[1])
    return _node("mul", (a, b))


def div(a: Expr, b: Expr) -> Expr:
    if _is(b, 1.0):
        return a
    if _is(a, 0.0) and not _is(b, 0.0):
        return ZERO
    if a.is_const and b.is_const and b.data != 0.0:
        return const(a.data / b.data)
    return _node("div", (a, b))


def power(a: Expr, b: Expr) -> Expr:
    if _is(b, 0.0):
        return ONE
    if _is(b, 1.0):
        return a
    if a.is_const and b.is_const:
        try:
            value = math.pow(a.data, b.data)
        except (ValueError, OverflowError, ZeroDivisionError):
            value = None
        if value is not None and math.isfinite(value):
            return const(value)
    return _node("pow", (a, b))


def func(name: str, a: Expr) -> Expr:
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    if a.is_const:
        try:
            value = getattr(math, name)(a.data)
        except (ValueError, OverflowError):
            value = None
        if value is not None and math.isfinite(value):
            return const(value)
    return _node("func", (a,), name)


def _as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return const(value)


def _integral(x: float) -> bool:
    return float(x).is_integer()


# --------------------------------------------------------------------------
# Differentiation
# --------------------------------------------------------------------------


def derivative(node: Expr, name: str) -> Expr:
    """Exact partial derivative of ``node`` with respect to variable ``name``."""
    if name not in node.variables:
        return ZERO
    cached = node._derivs.get(name)
    if cached is not None:
        return cached
    op = node.op
    if op == "var":
        result = ONE
    elif op == "add":
        result = add(derivative(node.args[0], name), derivative(node.args[1], name))
    elif op == "sub":
        result = sub(derivative(node.args[0], name), derivative(node.args[1], name))
    elif op == "neg":
        result = neg(derivative(node.args[0], name))
    elif op == "mul":
        a, b = node.args
        result = add(mul(derivative(a, name), b), mul(a, derivative(b, name)))
    elif op == "div":
        a, b = node.args
        da, db = derivative(a, name), derivative(b, name)
        result = sub(div(da, b), div(mul(a, db), power(b, const(2.0))))
    elif op == "pow":
        a, b = node.args
        if b.is_const:
            result = mul(mul(b, power(a, const(b.data - 1.0))), derivative(a, name))
        else:
            da, db = derivative(a, name), derivative(b, name)
            inner = add(mul(db, func("log", a)), div(mul(b, da), a))
            result = mul(node, inner)
    elif op == "func":
        (a,) = node.args
        da = derivative(a, name)
        fname = node.data
        if fname == "sin":
            outer = func("cos", a)
        elif fname == "cos":
            outer = neg(func("sin", a))
        elif fname == "tan":
            outer = div(ONE, power(func("cos", a), const(2.0)))
        elif fname == "exp":
            outer = node
        elif fname == "log":
            outer = div(ONE, a)
        else:  # sqrt
            outer = div(ONE, mul(const(2.0), node))
        result = mul(outer, da)
    else:  # pragma: no cover - const handled by the variables test
        result = ZERO
    node._derivs[name] = result
    return result


def substitute(node: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions, rebuilding through the simplifying constructors."""
    memo: dict[Expr, Expr] = {}

    def walk(e: Expr) -> Expr:
        if not (e.variables & mapping.keys()):
            return e
        hit = memo.get(e)
        if hit is not None:
            return hit
        if e.op == "var":
            out = mapping[e.data]
        else:
            args = [walk(a) for a in e.args]
            out = _rebuild(e, args)
        memo[e] = out
        return out

    return walk(node)


def _rebuild(e: Expr, args: list[Expr]) -> Expr:
    op = e.op
    if op == "add":
        return add(*args)
    if op == "sub":
        return sub(*args)
    if op == "mul":
        return mul(*args)
    if op == "div":
        return div(*args)
    if op == "pow":
        return power(*args)
    if op == "neg":
        return neg(args[0])
    if op == "func":
        return func(e.data, args[0])
    raise AssertionError(op)


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------


def _check(name: str, ok, values):
    if not np.all(ok):
        bad = np.broadcast_to(values, np.shape(ok))[~np.asarray(ok)]
        raise DomainError(name, float(np.ravel(bad)[0]))


def _apply(node: Expr, vals: list, env: Mapping[str, np.ndarray]):
    op = node.op
    if op == "const":
        return node.data
    if op == "var":
        return env[node.data]
    with np.errstate(all="ignore"):
        if op == "add":
            out = vals[0] + vals[1]
        elif op == "sub":
            out = vals[0] - vals[1]
        elif op == "mul":
            out = vals[0] * vals[1]
        elif op == "neg":
            out = -vals[0]
        elif op == "div":
            _check("division", np.asarray(vals[1]) != 0.0, vals[1])
            out = vals[0] / vals[1]
        elif op == "pow":
            base, expo = np.asarray(vals[0], float), np.asarray(vals[1], float)
            integral = np.floor(expo) == expo
            _check("pow", (base >= 0.0) | integral, base)
            _check("pow", (base != 0.0) | (expo >= 0.0), base)
            out = np.power(base, expo)
        else:
            x = np.asarray(vals[0], float)
            fname = node.data
            if fname == "log":
                _check("log", x > 0.0, x)
            elif fname == "sqrt":
                _check("sqrt", x >= 0.0, x)
            elif fname == "tan":
                _check("tan", np.cos(x) != 0.0, x)
            out = getattr(np, fname)(x)
            _check(fname, np.isfinite(out), x)
            return out
    _check(op, np.isfinite(out), out)
    return out


def evaluate_exprs(nodes: Sequence[Expr], env: Mapping[str, np.ndarray], size: int) -> np.ndarray:
    """Evaluate several expressions on a batch, sharing common subexpressions."""
    memo: dict[Expr, object] = {}
    out = np.empty((len(nodes), size), dtype=float)
    for k, root in enumerate(nodes):
        stack = [root]
        while stack:
            node = stack[-1]
            if node in memo:
                stack.pop()
                continue
            pending = [a for a in node.args if a not in memo]
            if pending:
                stack.extend(pending)
                continue
            stack.pop()
            memo[node] = _apply(node, [memo[a] for a in node.args], env)
        out[k] = memo[root]
    return out


# --------------------------------------------------------------------------
# Printing and parsing
# --------------------------------------------------------------------------

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}
_SYMBOL = {"add": " + ", "sub": " - ", "mul": "*", "div": "/", "pow": "^"}


def _prec(node: Expr) -> int:
    if node.op == "const":
        return 3 if node.data < 0 else 5
    return _PREC.get(node.op, 5)


def to_text(node: Expr) -> str:
    """Render an expression so that parsing it back rebuilds the same tree."""
    memo: dict[Expr, str] = {}

    def wrap(child: Expr, needs: bool) -> str:
        s = walk(child)
        return f"({s})" if needs else s

    def walk(e: Expr) -> str:
        hit = memo.get(e)
        if hit is not None:
            return hit
        op = e.op
        if op == "const":
            x = e.data
            s = str(int(x)) if _integral(x) and abs(x) < 1e16 else repr(x)
        elif op == "var":
            s = e.data
        elif op == "func":
            s = f"{e.data}({walk(e.args[0])})"
        elif op == "neg":
            s = "-" + wrap(e.args[0], _prec(e.args[0]) < 4)
        elif op == "pow":
            a, b = e.args
            s = wrap(a, _prec(a) < 5) + "^" + wrap(b, _prec(b) < 4)
        else:
            a, b = e.args
            p = _PREC[op]
            s = wrap(a, _prec(a) < p) + _SYMBOL[op] + wrap(b, _prec(b) <= p)
        memo[e] = s
        return s

    return walk(node)


class _Parser:
    # expr  := term (('+' | '-') term)*
    # term  := unary (('*' | '/') unary)*
    # unary := ('-' | '+') unary | power
    # power := atom ('^' unary)?          right-associative through unary
    # atom  := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'

    def __init__(self, src: str, allowed: frozenset | None):
        self.src = src
        self.allowed = allowed
        self.tokens = self._tokenize(src)
        self.pos = 0

    def _offset(self, char_index: int) -> int:
        return len(self.src[:char_index].encode("utf-8"))

    def _tokenize(self, src: str):
        tokens = []
        i = 0
        while i < len(src):
            c = src[i]
            if c.isspace():
                i += 1
            elif c.isdigit() or (c == "." and i + 1 < len(src) and src[i + 1].isdigit()):
                j = i
                while j < len(src) and (src[j].isdigit() or src[j] == "."):
                    j += 1
                if j < len(src) and src[j] in "eE":
                    k = j + 1
                    if k < len(src) and src[k] in "+-":
                        k += 1
                    if k < len(src) and src[k].isdigit():
                        while k < len(src) and src[k].isdigit():
                            k += 1
                        j = k
                text = src[i:j]
                try:
                    float(text)
                except ValueError:
                    raise ParseError(f"malformed number {text!r}", self._offset(i)) from None
                tokens.append(("num", text, i))
                i = j
            elif c.isalpha() or c == "_":
                j = i
                while j < len(src) and (src[j].isalnum() or src[j] == "_"):
                    j += 1
                tokens.append(("name", src[i:j], i))
                i = j
            elif c in "+-*/^(),":
                tokens.append(("op", c, i))
                i += 1
            else:
                raise ParseError(f"unexpected character {c!r}", self._offset(i))
        tokens.append(("end", "", len(src)))
        return tokens

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str):
        tok = self.take()
        if tok[1] != text or tok[0] != "op":
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ParseError(f"expected {text!r}, found {what}", self._offset(tok[2]))

    def parse(self) -> Expr:
        if not self.src.strip():
            raise ParseError("empty expression", 0)
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected token {tok[1]!r}", self._offset(tok[2]))
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            node = add(node, rhs) if op == "+" else sub(node, rhs)
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            rhs = self.unary()
            node = mul(node, rhs) if op == "*" else div(node, rhs)
        return node

    def unary(self) -> Expr:
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return neg(self.unary())
        if tok[0] == "op" and tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return power(base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, text, at = self.take()
        if kind == "num":
            return const(float(text))
        if kind == "name":
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                if text not in FUNCTIONS:
                    raise UnknownIdentifierError(text, self._offset(at))
                self.take()
                if self.peek()[0] == "op" and self.peek()[1] == ")":
                    raise ArityError(f"{text} takes 1 argument, got 0", self._offset(at))
                args = [self.expr()]
                while self.peek()[0] == "op" and self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != 1:
                    raise ArityError(f"{text} takes 1 argument, got {len(args)}", self._offset(at))
                return func(text, args[0])
            if text in FUNCTIONS:
                raise ArityError(f"{text} takes 1 argument, got 0", self._offset(at))
            if self.allowed is not None and text not in self.allowed:
                raise UnknownIdentifierError(text, self._offset(at))
            return var(text)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"unexpected {what}", self._offset(at))


def parse_expr(src: str, names: Iterable[str] | None = None) -> Expr:
    return _Parser(src, None if names is None else frozenset(names)).parse()


# --------------------------------------------------------------------------
# Scalar fields
# --------------------------------------------------------------------------


def _env(chart: Chart, points) -> tuple[dict[str, np.ndarray], int]:
    if isinstance(points, ChartPoint):
        if points.chart != chart:
            raise ChartMismatchError(f"point on {points.chart}, field on {chart}")
        points = points.as_array()
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != chart.dim:
        raise ValueError(f"points must have {chart.dim} columns, got shape {np.shape(points)}")
    return {name: arr[:, k] for k, name in enumerate(chart.coords)}, arr.shape[0]


class ScalarField:
    """A real function on a chart, given by an expression in its coordinates."""

    __slots__ = ("expr", "chart")

    def __init__(self, expr: Expr, chart: Chart):
        extra = expr.variables - set(chart.coords)
        if extra:
            raise ChartMismatchError(f"{sorted(extra)} not coordinates of {chart}")
        self.expr = expr
        self.chart = chart

    @classmethod
    def constant(cls, value: float, chart: Chart) -> "ScalarField":
        return cls(const(value), chart)

    @classmethod
    def coordinate(cls, name: str, chart: Chart) -> "ScalarField":
        chart.index(name)
        return cls(var(name), chart)

    @property
    def is_zero(self) -> bool:
        return self.expr is ZERO

    def diff(self, coord: str, order: int = 1) -> "ScalarField":
        self.chart.index(coord)
        if not isinstance(order, int) or order < 1:
            raise ValueError(f"order must be a positive integer, got {order!r}")
        e = self.expr
        for _ in range(order):
            e = derivative(e, coord)
        return ScalarField(e, self.chart)

    def evaluate(self, points) -> np.ndarray:
        env, size = _env(self.chart, points)
        return evaluate_exprs([self.expr], env, size)[0]

    def __call__(self, point) -> float:
        return float(self.evaluate(point)[0])

    def substitute(self, mapping: Mapping[str, "ScalarField"], chart: Chart | None = None) -> "ScalarField":
        chart = chart or self.chart
        for f in mapping.values():
            if f.chart != chart:
                raise ChartMismatchError("substituted fields must live on the target chart")
        return ScalarField(substitute(self.expr, {k: f.expr for k, f in mapping.items()}), chart)

    def _other(self, other) -> Expr:
        if isinstance(other, ScalarField):
            if other.chart != self.chart:
                raise ChartMismatchError(f"{other.chart} vs {self.chart}")
            return other.expr
        if isinstance(other, (int, float, np.floating, np.integer)):
            return const(float(other))
        return NotImplemented

    def _binary(self, other, fn, swap=False):
        o = self._other(other)
        if o is NotImplemented:
            return NotImplemented
        return ScalarField(fn(o, self.expr) if swap else fn(self.expr, o), self.chart)

    def __add__(self, other):
        return self._binary(other, add)

    def __radd__(self, other):
        return self._binary(other, add, swap=True)

    def __sub__(self, other):
        return self._binary(other, sub)

    def __rsub__(self, other):
        return self._binary(other, sub, swap=True)

    def __mul__(self, other):
        return self._binary(other, mul)

    def __rmul__(self, other):
        return self._binary(other, mul, swap=True)

    def __truediv__(self, other):
        return self._binary(other, div)

    def __rtruediv__(self, other):
        return self._binary(other, div, swap=True)

    def __pow__(self, other):
        return self._binary(other, power)

    def __neg__(self):
        return ScalarField(neg(self.expr), self.chart)

    def __str__(self):
        return to_text(self.expr)

    def __repr__(self):
        return f"ScalarField({to_text(self.expr)!r})"


def evaluate_fields(fields: Sequence[ScalarField], points) -> np.ndarray:
    """Evaluate fields on a batch of points; returns shape (len(fields), m)."""
    if not fields:
        return np.empty((0, len(np.atleast_2d(np.asarray(points, dtype=float)))))
    chart = fields[0].chart
    for f in fields:
        if f.chart != chart:
            raise ChartMismatchError("fields on different charts")
    env, size = _env(chart, points)
    return evaluate_exprs([f.expr for f in fields], env, size)


# --------------------------------------------------------------------------
# Module-level operations
# --------------------------------------------------------------------------


def parse_scalar_field(src: str, chart: Chart) -> ScalarField:
    """Parse ``src`` into a field on ``chart``.

    ``^`` binds tighter than unary minus, which binds tighter than ``*``/``/``,
    which bind tighter than ``+``/``-``; ``^`` is right-associative.
    """
    if not isinstance(src, str):
        raise TypeError("expression source must be text")
    return ScalarField(parse_expr(src, chart.coords), chart)


def differentiate(f: ScalarField, coord: str, order: int = 1) -> ScalarField:
    return f.diff(coord, order)


def evaluate(f: ScalarField, pt) -> float:
    return f(pt)


def fd_gradient_check(f: ScalarField, pt, h: float = 1e-5) -> np.ndarray:
    """|symbolic df/dc - central difference| for every chart coordinate c."""
    if h <= 0:
        raise ValueError("step must be positive")
    x0 = (pt.as_array() if isinstance(pt, ChartPoint) else np.asarray(pt, dtype=float)).ravel()
    dim = f.chart.dim
    stencil = np.repeat(x0[None, :], 2 * dim, axis=0)
    for c in range(dim):
        stencil[2 * c, c] += h
        stencil[2 * c + 1, c] -= h
    vals = f.evaluate(stencil)
    fd = (vals[0::2] - vals[1::2]) / (2 * h)
    grads = [f.diff(name) for name in f.chart.coords]
    sym = evaluate_fields(grads, x0)[:, 0]
    return np.abs(sym - fd)


def fd_gradient_batch(f: ScalarField, points, h: float = 1e-5) -> tuple[np.ndarray, np.ndarray]:
    """Symbolic gradient and central-difference gradient, each shape (m, 2n)."""
    if h <= 0:
        raise ValueError("step must be positive")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    dim = f.chart.dim
    sym = evaluate_fields([f.diff(name) for name in f.chart.coords], pts).T
    fd = np.empty_like(sym)
    for c in range(dim):
        step = np.zeros(dim)
        step[c] = h
        fd[:, c] = (f.evaluate(pts + step) - f.evaluate(pts - step)) / (2 * h)
    return sym, fd
