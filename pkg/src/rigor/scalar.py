"""Scalar endpoint backends.

Two backends, both over plain Python values:

* F64  -- IEEE binary64, finite values only.  Directed rounding is done by
  computing the round-to-nearest result and deciding *exactly* whether it
  is below, equal to, or above the true value (TwoSum for sums, integer
  cross-multiplication of ``float.as_integer_ratio`` pairs for products and
  quotients), then stepping one representable outward when needed.  Each
  directed endpoint is therefore correctly rounded, not merely within the
  1-ulp allowance.
* RAT  -- exact rationals (gmpy2.mpq).  Nothing ever rounds.

A backend object bundles the handful of primitive operations the interval
layer needs; intervals never touch representation details themselves.
"""

from __future__ import annotations

import math
import sys
from fractions import Fraction

from gmpy2 import mpq

from .errors import InvalidEndpoints, Overflow

__all__ = ["F64", "RAT", "BACKENDS", "get_backend", "f64_down_from_rational", "f64_up_from_rational"]

_INF = math.inf
_MAX = sys.float_info.max


def _sign(n) -> int:
    return (n > 0) - (n < 0)


# --- exact comparisons of a RN float result against the true value ----------
#
# Every finite float is p/q with q a power of two, so sums, products and
# quotients of floats compare exactly in integer arithmetic.

def _sum_cmp(a: float, b: float, s: float) -> int:
    """Sign of (a + b) - s, exactly."""
    pa, qa = a.as_integer_ratio()
    pb, qb = b.as_integer_ratio()
    ps, qs = s.as_integer_ratio()
    return _sign((pa * qb + pb * qa) * qs - ps * qa * qb)


def _prod_cmp(a: float, b: float, p: float) -> int:
    """Sign of a*b - p, exactly."""
    pa, qa = a.as_integer_ratio()
    pb, qb = b.as_integer_ratio()
    pp, qp = p.as_integer_ratio()
    return _sign(pa * pb * qp - pp * qa * qb)


def _quot_cmp(a: float, b: float, q: float) -> int:
    """Sign of a/b - q, exactly (b != 0)."""
    pa, qa = a.as_integer_ratio()
    pb, qb = b.as_integer_ratio()
    pq, qq = q.as_integer_ratio()
    num = pa * qb * qq - pq * qa * pb
    return _sign(num) if pb > 0 else -_sign(num)


def _next_up(x: float) -> float:
    y = math.nextafter(x, _INF)
    if y == _INF:
        raise Overflow(f"endpoint above {_MAX!r}")
    return y


def _next_down(x: float) -> float:
    y = math.nextafter(x, -_INF)
    if y == -_INF:
        raise Overflow(f"endpoint below {-_MAX!r}")
    return y


def _saturate(s: float, up: bool) -> float:
    # RN overflowed to +-inf: the true value lies beyond the finite range,
    # so one rounding direction is representable (+-MAX) and the other is not.
    if (s > 0) == up:
        raise Overflow("result outside finite binary64 range")
    return math.copysign(_MAX, s)


def _dir_sum(a: float, b: float, up: bool) -> float:
    s = a + b
    if math.isinf(s):
        return _saturate(s, up)
    # TwoSum error term: exact a+b = s + err when all intermediates are finite
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    if math.isinf(err) or math.isnan(err):
        c = _sum_cmp(a, b, s)
    else:
        c = _sign(err)
    if up:
        return _next_up(s) if c > 0 else s
    return _next_down(s) if c < 0 else s


def _dir_prod(a: float, b: float, up: bool) -> float:
    p = a * b
    if math.isinf(p):
        return _saturate(p, up)
    c = _prod_cmp(a, b, p)
    if up:
        return _next_up(p) if c > 0 else p
    return _next_down(p) if c < 0 else p


def _dir_quot(a: float, b: float, up: bool) -> float:
    q = a / b
    if math.isinf(q):
        return _saturate(q, up)
    c = _quot_cmp(a, b, q)
    if up:
        return _next_up(q) if c > 0 else q
    return _next_down(q) if c < 0 else q


def _dir_sqrt(a: float, up: bool) -> float:
    # math.sqrt is correctly rounded, so at most one outward step is needed.
    r = math.sqrt(a)
    pr, qr = r.as_integer_ratio()
    pa, qa = a.as_integer_ratio()
    c = _sign(pr * pr * qa - pa * qr * qr)  # sign of r^2 - a == sign of r - sqrt(a)
    if up:
        return _next_up(r) if c < 0 else r
    return _next_down(r) if c > 0 else r


def f64_down_from_rational(v) -> float:
    """Largest float <= v for an exact rational v (mpq/Fraction/int)."""
    v = mpq(v)
    try:
        f = float(v)
    except OverflowError:
        f = _INF if v > 0 else -_INF
    if math.isinf(f):
        if f > 0:
            return _MAX
        raise Overflow("value below the finite binary64 range")
    return f if mpq(f) <= v else math.nextafter(f, -_INF)


def f64_up_from_rational(v) -> float:
    """Smallest float >= v for an exact rational v."""
    v = mpq(v)
    try:
        f = float(v)
    except OverflowError:
        f = _INF if v > 0 else -_INF
    if math.isinf(f):
        if f < 0:
            return -_MAX
        raise Overflow("value above the finite binary64 range")
    return f if mpq(f) >= v else math.nextafter(f, _INF)


def _parse_rational_text(text: str):
    """Exact value of a decimal or p/q literal, as mpq."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return mpq(Fraction(num.strip()) / Fraction(den.strip()))
    return mpq(Fraction(text))


class F64Backend:
    """Finite IEEE binary64 endpoints with correctly-rounded directed ops."""

    name = "f64"

    def coerce(self, v) -> float:
        if isinstance(v, bool):
            raise InvalidEndpoints(f"not a scalar: {v!r}")
        if isinstance(v, float):
            if not math.isfinite(v):
                raise InvalidEndpoints(f"non-finite f64 endpoint: {v!r}")
            return v
        if isinstance(v, int):
            f = float(v)
            if math.isinf(f) or int(f) != v:
                raise InvalidEndpoints(f"integer {v} is not exactly representable in binary64")
            return f
        raise InvalidEndpoints(f"cannot use {type(v).__name__} as an f64 endpoint")

    # directed arithmetic
    def add_down(self, a, b):
        return _dir_sum(a, b, False)

    def add_up(self, a, b):
        return _dir_sum(a, b, True)

    def sub_down(self, a, b):
        return _dir_sum(a, -b, False)

    def sub_up(self, a, b):
        return _dir_sum(a, -b, True)

    def mul_down(self, a, b):
        return _dir_prod(a, b, False)

    def mul_up(self, a, b):
        return _dir_prod(a, b, True)

    def div_down(self, a, b):
        return _dir_quot(a, b, False)

    def div_up(self, a, b):
        return _dir_quot(a, b, True)

    def sqrt_down(self, a):
        return _dir_sqrt(a, False)

    def sqrt_up(self, a):
        return _dir_sqrt(a, True)

    def midpoint(self, lo, hi):
        # lo/2 + hi/2 round-to-nearest, clamped; never overflows, always in [lo, hi]
        m = lo / 2 + hi / 2
        return min(max(m, lo), hi)

    def interior_point(self, lo, hi):
        """A representable point strictly inside (lo, hi), or None."""
        m = self.midpoint(lo, hi)
        if lo < m < hi:
            return m
        # midpoint clamped onto an endpoint (subnormal-scale widths)
        y = math.nextafter(lo, _INF)
        return y if lo < y < hi else None

    def step_out_down(self, a, delta):
        """Closest representable strictly below a, if within delta; else a."""
        y = math.nextafter(a, -_INF)
        if math.isinf(y) or not self.leq_rational(mpq(a) - mpq(y), delta):
            return a
        return y

    def step_out_up(self, a, delta):
        y = math.nextafter(a, _INF)
        if math.isinf(y) or not self.leq_rational(mpq(y) - mpq(a), delta):
            return a
        return y

    @staticmethod
    def leq_rational(d, delta) -> bool:
        return d <= mpq(delta)

    # literals and conversions
    def literal_bounds(self, text: str):
        """Tightest [lo, hi] float pair enclosing the exact literal value."""
        v = _parse_rational_text(text)
        return f64_down_from_rational(v), f64_up_from_rational(v)

    def literal_exact(self, text: str) -> float:
        """The literal's value, required to be exactly representable."""
        v = _parse_rational_text(text)
        f = float(v)
        if not math.isfinite(f) or mpq(f) != v:
            raise InvalidEndpoints(f"literal {text!r} is not exactly representable in binary64")
        return f

    def to_rational(self, a: float):
        return mpq(a)

    def from_rational_down(self, v):
        return f64_down_from_rational(v)

    def from_rational_up(self, v):
        return f64_up_from_rational(v)

    # serialization
    @staticmethod
    def format_scalar(a: float) -> str:
        s = repr(a)
        return s[:-2] if s.endswith(".0") else s

    def serialize(self, a: float) -> dict:
        return {"dec": self.format_scalar(a), "hex": a.hex()}

    def __repr__(self):
        return "<backend f64>"


class RatBackend:
    """Exact rational endpoints; every operation is exact."""

    name = "rat"

    def coerce(self, v):
        if isinstance(v, bool):
            raise InvalidEndpoints(f"not a scalar: {v!r}")
        if isinstance(v, (int, Fraction)):
            return mpq(v)
        if isinstance(v, float):
            if not math.isfinite(v):
                raise InvalidEndpoints(f"non-finite endpoint: {v!r}")
            return mpq(v)  # exact value of the double
        if isinstance(v, type(mpq())):
            return v
        if isinstance(v, str):
            return _parse_rational_text(v)
        raise InvalidEndpoints(f"cannot use {type(v).__name__} as a rational endpoint")

    def add_down(self, a, b):
        return a + b

    add_up = add_down

    def sub_down(self, a, b):
        return a - b

    sub_up = sub_down

    def mul_down(self, a, b):
        return a * b

    mul_up = mul_down

    def div_down(self, a, b):
        return a / b

    div_up = div_down

    def midpoint(self, lo, hi):
        return (lo + hi) / 2

    def interior_point(self, lo, hi):
        return (lo + hi) / 2 if lo < hi else None

    def step_out_down(self, a, delta):
        return a - mpq(delta)

    def step_out_up(self, a, delta):
        return a + mpq(delta)

    def literal_bounds(self, text: str):
        v = _parse_rational_text(text)
        return v, v

    def literal_exact(self, text: str):
        return _parse_rational_text(text)

    def to_rational(self, a):
        return a

    def from_rational_down(self, v):
        return mpq(v)

    from_rational_up = from_rational_down

    @staticmethod
    def format_scalar(a) -> str:
        return f"{a.numerator}/{a.denominator}"

    def serialize(self, a) -> dict:
        return {"rat": self.format_scalar(a)}

    def __repr__(self):
        return "<backend rat>"


F64 = F64Backend()
RAT = RatBackend()
BACKENDS = {"f64": F64, "rat": RAT}


def get_backend(name: str):
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; expected one of {sorted(BACKENDS)}") from None
