"""Expressions for planar vector fields.

Grammar (whitespace is insignificant)::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | power
    power  := atom ("^" factor)?
    atom   := number | "x" | "y" | "pi" | func "(" expr ("," expr)? ")" | "(" expr ")"

Each component is parsed into a small immutable AST.  Three evaluators walk it:

* a compiled scalar path on ``math`` floats (used by the integrators),
* a dual-number path giving exact first derivatives (Jacobians),
* the same dual path on numpy arrays with a domain mask (grids, batches).

Leaving the domain (division by zero, ``sqrt`` of a negative, ``atan2(0, 0)``,
overflow) is never silently turned into NaN at a single point: the scalar
evaluators raise :class:`DomainError`, the array evaluator returns a mask.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from . import dual
from .dual import Dual2

FUNCTIONS = {"exp": 1, "atan": 1, "sqrt": 1, "sin": 1, "cos": 1, "atan2": 2}
CONSTANTS = {"pi": math.pi}


class ParseError(ValueError):
    def __init__(self, message: str, source: str = "", position: int = 0):
        self.source = source
        self.position = position
        super().__init__(f"{message} at position {position}" + (f" in {source!r}" if source else ""))


class UnknownIdentifier(ParseError):
    pass


class DomainError(ArithmeticError):
    """A subexpression left its domain at ``point``."""

    def __init__(self, point, subexpr: str, reason: str = "outside domain"):
        self.point = (float(point[0]), float(point[1]))
        self.subexpr = subexpr
        self.reason = reason
        super().__init__(f"{reason}: {subexpr} at ({self.point[0]!r}, {self.point[1]!r})")


# --------------------------------------------------------------------------- AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
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
class Call:
    name: str
    args: tuple


Expr = Union[Num, Var, Const, Neg, BinOp, Call]


def const(value: float) -> Expr:
    """Literal for ``value``; negatives become ``Neg(Num)`` as the parser would build them."""
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"non-finite constant {value!r}")
    if value < 0 or (value == 0 and math.copysign(1.0, value) < 0):
        return Neg(Num(-value))
    return Num(value)


# ------------------------------------------------------------------------ parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(src: str):
    pos = 0
    tokens = []
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if not m:
            start = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ParseError(f"unexpected character {src[start]!r}", src, start)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str):
        kind, val, pos = self.advance()
        if val != text or kind != "op":
            raise ParseError(f"expected {text!r}, found {val or 'end of input'!r}", self.src, pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r}", self.src, pos)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            left = BinOp(op, left, self.factor())
        return left

    def factor(self) -> Expr:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.advance()
            return Neg(self.factor())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            return BinOp("^", base, self.factor())
        return base

    def atom(self) -> Expr:
        kind, val, pos = self.advance()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val in ("x", "y"):
                return Var(val)
            if val in CONSTANTS:
                return Const(val)
            if val in FUNCTIONS:
                self.expect("(")
                args = [self.expr()]
                if self.peek()[1] == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[val]:
                    raise ParseError(f"{val} takes {FUNCTIONS[val]} argument(s), got {len(args)}", self.src, pos)
                return Call(val, tuple(args))
            raise UnknownIdentifier(f"unknown identifier {val!r}", self.src, pos)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected {val or 'end of input'!r}", self.src, pos)


def parse(src: str) -> Expr:
    return _Parser(src).parse()


# ----------------------------------------------------------------------- printer

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _fmt_num(v: float) -> str:
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_source(e: Expr) -> str:
    """Render ``e`` so that ``parse(to_source(e)) == e``."""
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, (Var, Const)):
        return e.name
    if isinstance(e, Call):
        return f"{e.name}({', '.join(to_source(a) for a in e.args)})"
    if isinstance(e, Neg):
        inner = to_source(e.operand)
        if isinstance(e.operand, BinOp) and e.operand.op != "^":
            inner = f"({inner})"
        return f"-{inner}"
    if e.op == "^":
        base = to_source(e.left)
        if isinstance(e.left, (Neg, BinOp)):
            base = f"({base})"
        ex = to_source(e.right)
        if isinstance(e.right, BinOp) and e.right.op != "^":
            ex = f"({ex})"
        return f"{base}^{ex}"
    p = _PREC[e.op]
    left = to_source(e.left)
    if isinstance(e.left, BinOp) and e.left.op != "^" and _PREC[e.left.op] < p:
        left = f"({left})"
    right = to_source(e.right)
    if isinstance(e.right, BinOp) and e.right.op != "^" and _PREC[e.right.op] <= p:
        right = f"({right})"
    elif isinstance(e.right, Neg):
        right = f"({right})"
    return f"{left} {e.op} {right}"


# ------------------------------------------------------------------ AST helpers


def constant_value(e: Expr):
    """Value of a variable-free subtree, else None."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Const):
        return CONSTANTS[e.name]
    if isinstance(e, Var):
        return None
    if isinstance(e, Neg):
        v = constant_value(e.operand)
        return None if v is None else -v
    if isinstance(e, Call):
        return None
    a, b = constant_value(e.left), constant_value(e.right)
    if a is None or b is None:
        return None
    try:
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            return a / b
        v = a**b
    except (ZeroDivisionError, OverflowError, ValueError):
        return None
    return v if isinstance(v, float) else None


def _integer_exponent(e: Expr):
    v = constant_value(e)
    if v is None or isinstance(v, complex) or not math.isfinite(v):
        return None
    if float(v).is_integer() and abs(v) <= 1024:
        return int(v)
    return None


def substitute(e: Expr, mapping: dict) -> Expr:
    """Replace variables by expressions."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, (Num, Const)):
        return e
    if isinstance(e, Neg):
        return Neg(substitute(e.operand, mapping))
    if isinstance(e, Call):
        return Call(e.name, tuple(substitute(a, mapping) for a in e.args))
    return BinOp(e.op, substitute(e.left, mapping), substitute(e.right, mapping))


def has_var(e: Expr) -> bool:
    if isinstance(e, Var):
        return True
    if isinstance(e, (Num, Const)):
        return False
    if isinstance(e, Neg):
        return has_var(e.operand)
    if isinstance(e, Call):
        return any(has_var(a) for a in e.args)
    return has_var(e.left) or has_var(e.right)


# ------------------------------------------------------------ scalar fast path


def _ipow(a: float, n: int) -> float:
    if n == 0:
        return 1.0
    acc = a
    for _ in range(abs(n) - 1):
        acc *= a
    return 1.0 / acc if n < 0 else acc


def _compile(e: Expr) -> Callable[[float, float], float]:
    if isinstance(e, Num):
        v = e.value
        return lambda x, y: v
    if isinstance(e, Const):
        v = CONSTANTS[e.name]
        return lambda x, y: v
    if isinstance(e, Var):
        return (lambda x, y: x) if e.name == "x" else (lambda x, y: y)
    if isinstance(e, Neg):
        f = _compile(e.operand)
        return lambda x, y: -f(x, y)
    if isinstance(e, Call):
        fs = [_compile(a) for a in e.args]
        if e.name == "atan2":
            u, w = fs

            def _atan2(x, y):
                a, b = u(x, y), w(x, y)
                if a == 0.0 and b == 0.0:
                    raise ValueError("atan2(0, 0)")
                return math.atan2(a, b)

            return _atan2
        fn = getattr(math, e.name)
        (u,) = fs
        return lambda x, y: fn(u(x, y))
    lf, rf = _compile(e.left), _compile(e.right)
    if e.op == "+":
        return lambda x, y: lf(x, y) + rf(x, y)
    if e.op == "-":
        return lambda x, y: lf(x, y) - rf(x, y)
    if e.op == "*":
        return lambda x, y: lf(x, y) * rf(x, y)
    if e.op == "/":
        return lambda x, y: lf(x, y) / rf(x, y)
    n = _integer_exponent(e.right)
    if n is not None:
        return lambda x, y: _ipow(lf(x, y), n)
    b = constant_value(e.right)
    if b is not None:

        def _cpow(x, y):
            a = lf(x, y)
            if a < 0 or (a == 0 and b <= 0):
                raise ValueError("pow domain")
            return a**b

        return _cpow

    def _gpow(x, y):
        a = lf(x, y)
        if a <= 0:
            raise ValueError("pow domain")
        return math.exp(rf(x, y) * math.log(a))

    return _gpow


# ------------------------------------------------------------ dual / array path


class _Scalar:
    """Raise on the first domain violation."""

    def __init__(self, point):
        self.point = point

    def flag(self, bad, node, reason):
        if bool(np.any(bad)):
            raise DomainError(self.point, to_source(node), reason)


class _Masked:
    """Accumulate domain violations into a boolean mask."""

    def __init__(self, shape):
        self.mask = np.zeros(shape, dtype=bool)

    def flag(self, bad, node, reason):
        self.mask |= np.broadcast_to(bad, self.mask.shape)


def _walk(e: Expr, X: Dual2, Y: Dual2, ctx, deriv: bool) -> Dual2:
    if isinstance(e, Num):
        return Dual2(np.float64(e.value))
    if isinstance(e, Const):
        return Dual2(np.float64(CONSTANTS[e.name]))
    if isinstance(e, Var):
        return X if e.name == "x" else Y
    if isinstance(e, Neg):
        return -_walk(e.operand, X, Y, ctx, deriv)
    if isinstance(e, Call):
        args = [_walk(a, X, Y, ctx, deriv) for a in e.args]
        if e.name == "atan2":
            u, w = args
            ctx.flag((u.value == 0) & (w.value == 0), e, "atan2(0, 0)")
            return dual.atan2(u, w)
        (u,) = args
        if e.name == "sqrt":
            bad = (u.value <= 0) if deriv else (u.value < 0)
            ctx.flag(bad, e, "sqrt domain")
            u = Dual2(np.where(bad, 1.0, u.value), u.dx, u.dy)
        return getattr(dual, e.name)(u)
    a = _walk(e.left, X, Y, ctx, deriv)
    if e.op == "^":
        n = _integer_exponent(e.right)
        if n is not None:
            if n < 0:
                ctx.flag(a.value == 0, e, "division by zero")
            return a.ipow(n)
        b = constant_value(e.right)
        if b is not None:
            bad = (a.value < 0) | ((a.value == 0) & (b < 1.0 if deriv else b <= 0))
            ctx.flag(bad, e, "pow domain")
            return dual.rpow(Dual2(np.where(bad, 1.0, a.value), a.dx, a.dy), b)
        r = _walk(e.right, X, Y, ctx, deriv)
        ctx.flag(a.value <= 0, e, "pow domain")
        return dual.exp(r * dual.log(Dual2(np.where(a.value <= 0, 1.0, a.value), a.dx, a.dy)))
    b = _walk(e.right, X, Y, ctx, deriv)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    ctx.flag(b.value == 0, e, "division by zero")
    return a / Dual2(np.where(b.value == 0, 1.0, b.value), b.dx, b.dy)


def _finite(*vals):
    ok = True
    for v in vals:
        ok = ok & np.isfinite(v)
    return ok


# ----------------------------------------------------------------- field object


@dataclass(frozen=True)
class FieldExpr:
    """A planar vector field ``X = (fx, fy)``; immutable after construction."""

    fx: Expr
    fy: Expr
    source_strings: tuple = ("", "")
    _fast: tuple = field(default=None, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if not self.source_strings[0] and not self.source_strings[1]:
            object.__setattr__(self, "source_strings", (to_source(self.fx), to_source(self.fy)))
        object.__setattr__(self, "_fast", (_compile(self.fx), _compile(self.fy)))

    @classmethod
    def from_exprs(cls, fx: Expr, fy: Expr) -> "FieldExpr":
        return cls(fx, fy, (to_source(fx), to_source(fy)))

    # scalar ------------------------------------------------------------
    def eval(self, p) -> tuple[float, float]:
        x, y = float(p[0]), float(p[1])
        f, g = self._fast
        try:
            u, v = f(x, y), g(x, y)
            if math.isfinite(u) and math.isfinite(v):
                return u, v
        except (ZeroDivisionError, ValueError, OverflowError):
            pass
        self._diagnose((x, y), deriv=False)
        raise DomainError((x, y), f"({self.source_strings[0]}, {self.source_strings[1]})", "non-finite value")

    def __call__(self, p) -> tuple[float, float]:
        return self.eval(p)

    def _diagnose(self, p, deriv: bool):
        ctx = _Scalar(p)
        X, Y = dual.variables(p[0], p[1])
        with np.errstate(all="ignore"):
            for e, src in ((self.fx, self.source_strings[0]), (self.fy, self.source_strings[1])):
                d = _walk(e, X, Y, ctx, deriv)
                vals = (d.value, d.dx, d.dy) if deriv else (d.value,)
                if not bool(np.all(_finite(*vals))):
                    raise DomainError(p, src, "overflow")

    def dual_eval(self, p) -> tuple[Dual2, Dual2]:
        x, y = float(p[0]), float(p[1])
        ctx = _Scalar((x, y))
        X, Y = dual.variables(x, y)
        with np.errstate(all="ignore"):
            out = []
            for e, src in ((self.fx, self.source_strings[0]), (self.fy, self.source_strings[1])):
                d = _walk(e, X, Y, ctx, True)
                if not bool(_finite(d.value, d.dx, d.dy)):
                    raise DomainError((x, y), src, "overflow")
                out.append(Dual2(float(d.value), float(d.dx), float(d.dy)))
        return out[0], out[1]

    def jacobian(self, p) -> np.ndarray:
        f, g = self.dual_eval(p)
        return np.array([[f.dx, f.dy], [g.dx, g.dy]])

    # arrays ------------------------------------------------------------
    def eval_many(self, xs, ys):
        """Values at many points: returns ``(f, g, valid)``."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        shape = np.broadcast(xs, ys).shape
        ctx = _Masked(shape)
        X, Y = Dual2(xs, 0.0, 0.0), Dual2(ys, 0.0, 0.0)
        with np.errstate(all="ignore"):
            f = np.broadcast_to(_walk(self.fx, X, Y, ctx, False).value, shape).astype(float)
            g = np.broadcast_to(_walk(self.fy, X, Y, ctx, False).value, shape).astype(float)
        valid = ~ctx.mask & _finite(f, g)
        f = np.where(valid, f, np.nan)
        g = np.where(valid, g, np.nan)
        return f, g, valid

    def jacobian_many(self, xs, ys):
        """Values and Jacobians: returns ``(values (...,2), jac (...,2,2), valid)``."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        shape = np.broadcast(xs, ys).shape
        ctx = _Masked(shape)
        X, Y = dual.variables(xs, ys)
        with np.errstate(all="ignore"):
            f = _walk(self.fx, X, Y, ctx, True)
            g = _walk(self.fy, X, Y, ctx, True)
            vals = np.empty(shape + (2,))
            jac = np.empty(shape + (2, 2))
            vals[..., 0] = f.value
            vals[..., 1] = g.value
            jac[..., 0, 0] = f.dx
            jac[..., 0, 1] = f.dy
            jac[..., 1, 0] = g.dx
            jac[..., 1, 1] = g.dy
        valid = ~ctx.mask & np.all(np.isfinite(vals), axis=-1) & np.all(np.isfinite(jac), axis=(-2, -1))
        vals[~valid] = np.nan
        jac[~valid] = np.nan
        return vals, jac, valid


def parse_field(fx_src: str, fy_src: str) -> FieldExpr:
    return FieldExpr(parse(fx_src), parse(fy_src), (fx_src, fy_src))


def eval_field(field: FieldExpr, p) -> tuple[float, float]:
    return field.eval(p)


def jacobian(field: FieldExpr, p) -> np.ndarray:
    return field.jacobian(p)


def translate(field: FieldExpr, shift) -> FieldExpr:
    """The field ``p -> X(p - shift)``; its singularities move by ``shift``."""
    a, b = shift
    mapping = {
        "x": BinOp("-", Var("x"), const(a)) if a >= 0 else BinOp("+", Var("x"), const(-a)),
        "y": BinOp("-", Var("y"), const(b)) if b >= 0 else BinOp("+", Var("y"), const(-b)),
    }
    return FieldExpr.from_exprs(substitute(field.fx, mapping), substitute(field.fy, mapping))
