"""A small real-expression language over interval arithmetic.

Parser, immutable AST, pretty-printer, natural interval-extension
evaluator, symbolic differentiation, and a vector compiler for the
batched subdivision engine.

Grammar:

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := "-" factor | atom ("^" INT)?
    atom   := NUMBER | IDENT | IDENT "(" args ")" | "(" expr ")"

Builtins: exp, sin, cos, log, sqrt, and step(c, a1, a2; x) whose first
three arguments are signed numeric literals (";" or "," may precede the
final argument).  NUMBER is a decimal literal with optional exponent;
whitespace is insignificant.

Pow is evaluated with even/odd-aware range rules: x^2 over [-1, 2] gives
[0, 4], tighter than the naive product [-2, 4].  EvalContext(naive_pow=
True) restores the naive fold for dependency-problem demonstrations.
Decimal literals become the tightest enclosing interval on f64 and are
exact on rat; "0.1" is not a binary64 number and rounding it silently
would break containment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import vecops
from .elementary import (
    StepSpec, cos_iv, exp_iv, exp_np_down, exp_np_up,
    log_iv, sin_iv, sqrt_iv, step_extension,
)
from .errors import (
    DivisionByZeroInterval, DomainError, InvalidEndpoints, NonDifferentiable,
    ParseError, UnboundVariable, UnknownIdentifier, VectorUnsupported,
)
from .interval import Interval
from .scalar import F64, RAT

__all__ = [
    "Const", "Var", "Neg", "Add", "Sub", "Mul", "Div", "Pow",
    "Exp", "Sin", "Cos", "Log", "Sqrt", "Step",
    "parse", "to_text", "free_vars", "EvalContext", "eval_iv",
    "differentiate", "compile_vector",
]


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Expr):
    text: str

    def value(self) -> Fraction:
        return Fraction(self.text)


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Add(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Sub(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Mul(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Div(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Exp(Expr):
    arg: Expr


@dataclass(frozen=True)
class Sin(Expr):
    arg: Expr


@dataclass(frozen=True)
class Cos(Expr):
    arg: Expr


@dataclass(frozen=True)
class Log(Expr):
    arg: Expr


@dataclass(frozen=True)
class Sqrt(Expr):
    arg: Expr


@dataclass(frozen=True)
class Step(Expr):
    """step(c, a1, a2; x): a1 where x > c, a2 where x <= c."""

    c: str
    a1: str
    a2: str
    arg: Expr


_UNARY = {"exp": Exp, "sin": Sin, "cos": Cos, "log": Log, "sqrt": Sqrt}

# --- lexer ------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<sym>[-+*/^(),;]))"
)


def _tokenize(src: str):
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            stray = src[pos:].lstrip()
            if not stray:
                break
            line += src.count("\n", line_start, pos)
            col = pos - (src.rfind("\n", 0, pos) + 1) + 1
            raise ParseError(f"unexpected character {stray[0]!r}", line=line, col=col)
        start = m.start(m.lastgroup)
        line += src.count("\n", line_start, start)
        line_start = src.rfind("\n", 0, start) + 1
        col = start - line_start + 1
        tokens.append((m.lastgroup, m.group(m.lastgroup), line, col))
        pos = m.end()
    tokens.append(("end", "", line, len(src) - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str):
        kind, val, line, col = self.peek()
        if kind == "sym" and val == text:
            return self.advance()
        shown = val if kind != "end" else "end of input"
        raise ParseError(f"expected {text!r}, found {shown!r}", line=line, col=col)

    def fail(self, msg: str):
        _, val, line, col = self.peek()
        raise ParseError(msg, line=line, col=col)

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[:2] in (("sym", "+"), ("sym", "-")):
            op = self.advance()[1]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek()[:2] in (("sym", "*"), ("sym", "/")):
            op = self.advance()[1]
            rhs = self.factor()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def factor(self) -> Expr:
        if self.peek()[:2] == ("sym", "-"):
            self.advance()
            return Neg(self.factor())
        e = self.atom()
        if self.peek()[:2] == ("sym", "^"):
            self.advance()
            kind, val, line, col = self.peek()
            if kind != "num" or not val.isdigit():
                raise ParseError(
                    "exponent must be a non-negative integer literal", line=line, col=col
                )
            self.advance()
            return Pow(e, int(val))
        return e

    def atom(self) -> Expr:
        kind, val, line, col = self.advance()
        if kind == "num":
            return Const(val)
        if kind == "ident":
            if self.peek()[:2] != ("sym", "("):
                return Var(val)
            if val == "step":
                return self.step_call()
            if val not in _UNARY:
                raise UnknownIdentifier(f"unknown function {val!r}", line=line, col=col)
            self.advance()
            arg = self.expr()
            self.expect(")")
            return _UNARY[val](arg)
        if (kind, val) == ("sym", "("):
            e = self.expr()
            self.expect(")")
            return e
        shown = val if kind != "end" else "end of input"
        raise ParseError(f"expected an expression, found {shown!r}", line=line, col=col)

    def literal(self) -> str:
        sign = ""
        if self.peek()[:2] == ("sym", "-"):
            self.advance()
            sign = "-"
        kind, val, line, col = self.advance()
        if kind != "num":
            raise ParseError("step parameters must be numeric literals", line=line, col=col)
        return sign + val

    def step_call(self) -> Expr:
        self.expect("(")
        c = self.literal()
        self.expect(",")
        a1 = self.literal()
        self.expect(",")
        a2 = self.literal()
        kind, val, line, col = self.peek()
        if (kind, val) in (("sym", ";"), ("sym", ",")):
            self.advance()
        else:
            raise ParseError("expected ';' before the step argument", line=line, col=col)
        arg = self.expr()
        self.expect(")")
        return Step(c, a1, a2, arg)


def parse(src: str) -> Expr:
    p = _Parser(src)
    e = p.expr()
    kind, val, line, col = p.peek()
    if kind != "end":
        raise ParseError(f"unexpected trailing input {val!r}", line=line, col=col)
    return e


# --- printer ----------------------------------------------------------------
#
# Precedence: 1 add/sub, 2 mul/div, 3 unary minus, 4 pow, 5 atoms.

def _prec(e: Expr) -> int:
    match e:
        case Add() | Sub():
            return 1
        case Mul() | Div():
            return 2
        case Neg():
            return 3
        case Pow():
            return 4
        case _:
            return 5


def _wrap(e: Expr, floor: int) -> str:
    s = to_text(e)
    return f"({s})" if _prec(e) < floor else s


def to_text(e: Expr) -> str:
    match e:
        case Const(text):
            return text
        case Var(name):
            return name
        case Neg(arg):
            return "-" + _wrap(arg, 3)
        case Add(lhs, rhs):
            return f"{_wrap(lhs, 1)} + {_wrap(rhs, 2)}"
        case Sub(lhs, rhs):
            return f"{_wrap(lhs, 1)} - {_wrap(rhs, 2)}"
        case Mul(lhs, rhs):
            return f"{_wrap(lhs, 2)} * {_wrap(rhs, 3)}"
        case Div(lhs, rhs):
            return f"{_wrap(lhs, 2)} / {_wrap(rhs, 3)}"
        case Pow(base, n):
            return f"{_wrap(base, 5)}^{n}"
        case Exp(arg):
            return f"exp({to_text(arg)})"
        case Sin(arg):
            return f"sin({to_text(arg)})"
        case Cos(arg):
            return f"cos({to_text(arg)})"
        case Log(arg):
            return f"log({to_text(arg)})"
        case Sqrt(arg):
            return f"sqrt({to_text(arg)})"
        case Step(c, a1, a2, arg):
            return f"step({c}, {a1}, {a2}; {to_text(arg)})"
    raise TypeError(f"not an Expr: {e!r}")


def free_vars(e: Expr) -> set[str]:
    match e:
        case Var(name):
            return {name}
        case Const():
            return set()
        case Neg(arg) | Exp(arg) | Sin(arg) | Cos(arg) | Log(arg) | Sqrt(arg):
            return free_vars(arg)
        case Add(l, r) | Sub(l, r) | Mul(l, r) | Div(l, r):
            return free_vars(l) | free_vars(r)
        case Pow(base, _):
            return free_vars(base)
        case Step(_, _, _, arg):
            return free_vars(arg)
    raise TypeError(f"not an Expr: {e!r}")


# --- evaluation -------------------------------------------------------------

class EvalContext:
    """Bindings plus the width budget handed to elementary enclosures.

    The backend is taken from the bindings; an explicit backend is only
    needed for variable-free expressions.
    """

    def __init__(self, bindings=None, tol=Fraction(1, 10 ** 9), backend=None,
                 naive_pow=False):
        self.bindings = dict(bindings or {})
        self.tol = tol
        self.naive_pow = naive_pow
        if backend is None:
            for iv in self.bindings.values():
                backend = iv.backend
                break
        self.backend = backend if backend is not None else F64
        for name, iv in self.bindings.items():
            if iv.backend is not self.backend:
                raise DomainError(f"binding {name!r} uses a different backend")


def _pow_mag(b, x, n: int, up: bool):
    # directed x^n for x >= 0, as a left fold so the vector path can match
    acc = b.coerce(1)
    step = b.mul_up if up else b.mul_down
    for _ in range(n):
        acc = step(acc, x)
    return acc


def _pow_iv(X: Interval, n: int, naive: bool) -> Interval:
    b = X.backend
    if naive:
        acc = Interval(b.coerce(1), b.coerce(1), b, _trusted=True)
        for _ in range(n):
            acc = acc * X
        return acc
    if n == 0:
        one = b.coerce(1)
        return Interval(one, one, b, _trusted=True)
    lo, hi = X.lo, X.hi
    zero = b.coerce(0)
    if lo >= zero:
        return Interval(_pow_mag(b, lo, n, False), _pow_mag(b, hi, n, True), b, _trusted=True)
    if hi <= zero:
        small, big = -hi, -lo
        if n % 2 == 0:
            return Interval(_pow_mag(b, small, n, False), _pow_mag(b, big, n, True), b, _trusted=True)
        return Interval(-_pow_mag(b, big, n, True), -_pow_mag(b, small, n, False), b, _trusted=True)
    if n % 2 == 0:
        return Interval(zero, _pow_mag(b, max(-lo, hi), n, True), b, _trusted=True)
    return Interval(-_pow_mag(b, -lo, n, True), _pow_mag(b, hi, n, True), b, _trusted=True)


def eval_iv(e: Expr, ctx: EvalContext) -> Interval:
    """Natural interval extension: f(x) ∈ result for every x in the bound
    boxes.  Domain failures carry the offending node."""
    b = ctx.backend
    match e:
        case Const(text):
            lo, hi = b.literal_bounds(text)
            return Interval(lo, hi, b, _trusted=True)
        case Var(name):
            try:
                return ctx.bindings[name]
            except KeyError:
                raise UnboundVariable(f"variable {name!r} is not bound") from None
        case Neg(arg):
            return -eval_iv(arg, ctx)
        case Add(l, r):
            return eval_iv(l, ctx) + eval_iv(r, ctx)
        case Sub(l, r):
            return eval_iv(l, ctx) - eval_iv(r, ctx)
        case Mul(l, r):
            return eval_iv(l, ctx) * eval_iv(r, ctx)
        case Div(l, r):
            num = eval_iv(l, ctx)
            den = eval_iv(r, ctx)
            try:
                return num / den
            except DivisionByZeroInterval:
                raise DomainError(f"division by an interval containing zero: {den}",
                                  node=e) from None
        case Pow(base, n):
            return _pow_iv(eval_iv(base, ctx), n, ctx.naive_pow)
        case Exp(arg):
            return exp_iv(eval_iv(arg, ctx), ctx.tol)
        case Sin(arg):
            return sin_iv(eval_iv(arg, ctx), ctx.tol)
        case Cos(arg):
            return cos_iv(eval_iv(arg, ctx), ctx.tol)
        case Log(arg):
            X = eval_iv(arg, ctx)
            try:
                return log_iv(X, ctx.tol)
            except DomainError as err:
                raise DomainError(str(err), node=e) from None
        case Sqrt(arg):
            X = eval_iv(arg, ctx)
            try:
                return sqrt_iv(X, ctx.tol)
            except DomainError as err:
                raise DomainError(str(err), node=e) from None
        case Step(c, a1, a2, arg):
            try:
                spec = StepSpec(b.literal_exact(c), b.literal_exact(a1),
                                b.literal_exact(a2), 0, b)
            except InvalidEndpoints as exc:
                raise DomainError(str(exc), node=e) from exc
            return step_extension(spec, eval_iv(arg, ctx))
    raise TypeError(f"not an Expr: {e!r}")


# --- differentiation --------------------------------------------------------

def _is_const(e: Expr, v: Fraction) -> bool:
    return isinstance(e, Const) and e.value() == v


_ZERO = Const("0")
_ONE = Const("1")


def _neg(e: Expr) -> Expr:
    if _is_const(e, Fraction(0)):
        return _ZERO
    if isinstance(e, Neg):
        return e.arg
    return Neg(e)


def _add(l: Expr, r: Expr) -> Expr:
    if _is_const(l, Fraction(0)):
        return r
    if _is_const(r, Fraction(0)):
        return l
    return Add(l, r)


def _sub(l: Expr, r: Expr) -> Expr:
    if _is_const(r, Fraction(0)):
        return l
    if _is_const(l, Fraction(0)):
        return _neg(r)
    return Sub(l, r)


def _mul(l: Expr, r: Expr) -> Expr:
    if _is_const(l, Fraction(0)) or _is_const(r, Fraction(0)):
        return _ZERO
    if _is_const(l, Fraction(1)):
        return r
    if _is_const(r, Fraction(1)):
        return l
    if isinstance(l, Neg):
        return _neg(_mul(l.arg, r))
    if isinstance(r, Neg):
        return _neg(_mul(l, r.arg))
    return Mul(l, r)


def _div(l: Expr, r: Expr) -> Expr:
    if _is_const(l, Fraction(0)):
        return _ZERO
    if _is_const(r, Fraction(1)):
        return l
    return Div(l, r)


def differentiate(e: Expr, var: str) -> Expr:
    """Symbolic derivative with respect to var, lightly simplified."""
    match e:
        case Const():
            return _ZERO
        case Var(name):
            return _ONE if name == var else _ZERO
        case Neg(arg):
            return _neg(differentiate(arg, var))
        case Add(l, r):
            return _add(differentiate(l, var), differentiate(r, var))
        case Sub(l, r):
            return _sub(differentiate(l, var), differentiate(r, var))
        case Mul(l, r):
            return _add(_mul(differentiate(l, var), r), _mul(l, differentiate(r, var)))
        case Div(l, r):
            num = _sub(_mul(differentiate(l, var), r), _mul(l, differentiate(r, var)))
            return _div(num, Pow(r, 2))
        case Pow(base, n):
            if n == 0:
                return _ZERO
            inner = differentiate(base, var)
            if n == 1:
                return inner
            outer = _mul(Const(str(n)), base if n == 2 else Pow(base, n - 1))
            return _mul(outer, inner)
        case Exp(arg):
            return _mul(differentiate(arg, var), e)
        case Sin(arg):
            return _mul(differentiate(arg, var), Cos(arg))
        case Cos(arg):
            return _neg(_mul(differentiate(arg, var), Sin(arg)))
        case Log(arg):
            return _div(differentiate(arg, var), arg)
        case Sqrt(arg):
            return _div(differentiate(arg, var), _mul(Const("2"), e))
        case Step():
            raise NonDifferentiable("step has no derivative at its jump")
    raise TypeError(f"not an Expr: {e!r}")


# --- vector compilation -----------------------------------------------------
#
# Compiles an expression over a single variable into a function mapping
# endpoint arrays (lo, hi) to (enclosure_lo, enclosure_hi, unsafe_mask).
# At unmasked entries the outputs are bit-identical to what eval_iv
# produces on the f64 backend for the same piece (interval products take
# the min/max of the four directed candidate products, which agrees with
# the sign-case split in interval.py).  Supported nodes: Const, Var, Neg,
# Add, Sub, Mul, Pow, Exp, Sqrt.  Division and the trig/log nodes have no
# certified vector form and raise VectorUnsupported.

def _vc_mul(llo, lhi, rlo, rhi):
    pads = [vecops.mul_parts(a, c) for a in (llo, lhi) for c in (rlo, rhi)]
    unsafe = pads[0][2] | pads[1][2] | pads[2][2] | pads[3][2]
    downs = [vecops.dir_down(p, e) for p, e, _ in pads]
    ups = [vecops.dir_up(p, e) for p, e, _ in pads]
    lo = np.minimum.reduce(downs)
    hi = np.maximum.reduce(ups)
    return lo, hi, unsafe


def _vc_pow_mag(x, n: int, up: bool):
    # left fold mirror of _pow_mag
    acc = np.ones_like(x)
    unsafe = np.zeros(np.shape(x), dtype=bool)
    for _ in range(n):
        p, e, u = vecops.mul_parts(acc, x)
        acc = vecops.dir_up(p, e) if up else vecops.dir_down(p, e)
        unsafe = unsafe | u
    return acc, unsafe


def _vc_pow(lo, hi, n: int):
    if n == 0:
        one = np.ones_like(lo)
        return one, one.copy(), np.zeros(np.shape(lo), dtype=bool)
    pos = lo >= 0
    neg = ~pos & (hi <= 0)
    straddle = ~pos & ~neg
    if n % 2 == 0:
        small = np.where(pos, lo, np.where(neg, -hi, 0.0))
        big = np.where(pos, hi, np.where(neg, -lo, np.maximum(-lo, hi)))
        out_lo, u1 = _vc_pow_mag(small, n, False)
        out_hi, u2 = _vc_pow_mag(big, n, True)
        return out_lo, out_hi, u1 | u2
    # odd: pos [lo^n v, hi^n ^]; neg [-(-lo)^n ^, -(-hi)^n v];
    # straddle [-(-lo)^n ^, hi^n ^]
    a_dn = np.where(pos, lo, np.where(neg, -hi, 0.0))
    a_up = np.where(pos, hi, -lo)
    a_up2 = np.where(straddle, hi, 0.0)
    d, u1 = _vc_pow_mag(a_dn, n, False)
    u, u2 = _vc_pow_mag(a_up, n, True)
    u_str, u3 = _vc_pow_mag(a_up2, n, True)
    out_lo = np.where(pos, d, -u)
    out_hi = np.where(pos, u, np.where(neg, -d, u_str))
    return out_lo, out_hi, u1 | u2 | u3


def compile_vector(e: Expr, var: str):
    """Build the vectorized twin of eval_iv over the single variable var."""

    def build(node: Expr):
        match node:
            case Const(text):
                clo, chi = F64.literal_bounds(text)
                lo, hi = np.float64(clo), np.float64(chi)
                return lambda vlo, vhi: (lo, hi, _NO_MASK)
            case Var(name):
                if name != var:
                    raise UnboundVariable(f"variable {name!r} is not the compiled variable")
                return lambda vlo, vhi: (vlo, vhi, _NO_MASK)
            case Neg(arg):
                f = build(arg)

                def run(vlo, vhi, f=f):
                    lo, hi, u = f(vlo, vhi)
                    return -hi, -lo, u
                return run
            case Add(l, r):
                fl, fr = build(l), build(r)

                def run(vlo, vhi, fl=fl, fr=fr):
                    llo, lhi, ul = fl(vlo, vhi)
                    rlo, rhi, ur = fr(vlo, vhi)
                    lo, u1 = vecops.add_down(llo, rlo)
                    hi, u2 = vecops.add_up(lhi, rhi)
                    return lo, hi, ul | ur | u1 | u2
                return run
            case Sub(l, r):
                fl, fr = build(l), build(r)

                def run(vlo, vhi, fl=fl, fr=fr):
                    llo, lhi, ul = fl(vlo, vhi)
                    rlo, rhi, ur = fr(vlo, vhi)
                    lo, u1 = vecops.sub_down(llo, rhi)
                    hi, u2 = vecops.sub_up(lhi, rlo)
                    return lo, hi, ul | ur | u1 | u2
                return run
            case Mul(l, r):
                fl, fr = build(l), build(r)

                def run(vlo, vhi, fl=fl, fr=fr):
                    llo, lhi, ul = fl(vlo, vhi)
                    rlo, rhi, ur = fr(vlo, vhi)
                    lo, hi, u = _vc_mul(llo, lhi, rlo, rhi)
                    return lo, hi, ul | ur | u
                return run
            case Pow(base, n):
                f = build(base)

                def run(vlo, vhi, f=f, n=n):
                    lo, hi, u = f(vlo, vhi)
                    plo, phi, u2 = _vc_pow(lo, hi, n)
                    return plo, phi, u | u2
                return run
            case Exp(arg):
                f = build(arg)

                def run(vlo, vhi, f=f):
                    lo, hi, u = f(vlo, vhi)
                    bad = u | (np.abs(lo) > 697.0) | (np.abs(hi) > 697.0)
                    clo = np.clip(lo, -697.0, 697.0)
                    chi = np.clip(hi, -697.0, 697.0)
                    out_lo = np.maximum(exp_np_down(clo), 0.0)
                    out_hi = exp_np_up(chi)
                    return out_lo, out_hi, bad
                return run
            case Sqrt(arg):
                f = build(arg)

                def run(vlo, vhi, f=f):
                    lo, hi, u = f(vlo, vhi)
                    bad = u | (lo < 0)
                    r1, t1, u1 = vecops.sqrt_parts(np.maximum(lo, 0.0))
                    r2, t2, u2 = vecops.sqrt_parts(np.maximum(hi, 0.0))
                    return (vecops.dir_down(r1, t1), vecops.dir_up(r2, t2),
                            bad | u1 | u2)
                return run
            case Div() | Sin() | Cos() | Log() | Step():
                raise VectorUnsupported(
                    f"no certified vector form for {type(node).__name__}"
                )
        raise TypeError(f"not an Expr: {node!r}")

    missing = free_vars(e) - {var}
    if missing:
        raise UnboundVariable(f"unbound variables: {sorted(missing)}")
    _NO_MASK = np.False_
    fn = build(e)

    def run_all(vlo, vhi):
        vlo = np.asarray(vlo, dtype=np.float64)
        vhi = np.asarray(vhi, dtype=np.float64)
        with np.errstate(all="ignore"):
            lo, hi, u = fn(vlo, vhi)
        lo = np.broadcast_to(np.asarray(lo, dtype=np.float64), vlo.shape)
        hi = np.broadcast_to(np.asarray(hi, dtype=np.float64), vlo.shape)
        if u is np.False_ or np.ndim(u) == 0:
            u = np.zeros(vlo.shape, dtype=bool)
        elif u.shape != vlo.shape:
            u = np.broadcast_to(u, vlo.shape).copy()
        return lo, hi, u

    return run_all
