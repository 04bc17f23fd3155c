"""Closed intervals with representable endpoints; the universal value type.

An Interval is [lo, hi] with lo <= hi over one of the scalar backends.
Arithmetic is outward-rounded so that the exact set result is always
contained:  {x <> y : x in X, y in Y}  is a subset of  X <> Y  for
<> in {+, -, *, /}.  On the rat backend results are exact; on f64 each
endpoint is the tightest representable bound (see scalar.py).

Subtraction is [Xlo - Yhi, Xhi - Ylo]; anything else would fail
containment ([0,1] - [0,1] must contain 1 - 0).

The unary operations left/right/abs return degenerate intervals;
abs(X) = [m, m] with m = max(|lo|, |hi|) is the magnitude bound, not the
range of |x| over X.
"""

from __future__ import annotations

import enum

from .errors import BackendMismatch, DivisionByZeroInterval, InvalidEndpoints, NotBisectable
from .scalar import F64, RAT, get_backend


class Tri(enum.Enum):
    """Three-valued predicate outcome; UNDEFINED is the machine's fault marker."""

    TRUE = "true"
    FALSE = "false"
    UNDEFINED = "undefined"


class Interval:
    __slots__ = ("lo", "hi", "backend")

    def __init__(self, lo, hi, backend=F64, _trusted=False):
        if not _trusted:
            lo = backend.coerce(lo)
            hi = backend.coerce(hi)
            if lo > hi:
                raise InvalidEndpoints(f"lo > hi: [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "backend", backend)

    def __setattr__(self, name, value):
        raise AttributeError("Interval is immutable")

    # --- basics -------------------------------------------------------------

    def _check(self, other: "Interval"):
        if self.backend is not other.backend:
            raise BackendMismatch(f"{self.backend!r} vs {other.backend!r}")

    def is_degenerate(self) -> bool:
        return self.lo == self.hi

    def contains(self, v) -> bool:
        """Exact membership of a scalar-like value (compared as rationals)."""
        return self.lo <= v <= self.hi

    def diam(self):
        """Width hi - lo, rounded up on f64."""
        return self.backend.sub_up(self.hi, self.lo)

    def midpoint(self):
        """A representable point inside the interval."""
        return self.backend.midpoint(self.lo, self.hi)

    # --- arithmetic ---------------------------------------------------------

    def __add__(self, other: "Interval") -> "Interval":
        self._check(other)
        b = self.backend
        return Interval(b.add_down(self.lo, other.lo), b.add_up(self.hi, other.hi), b, _trusted=True)

    def __sub__(self, other: "Interval") -> "Interval":
        self._check(other)
        b = self.backend
        return Interval(b.sub_down(self.lo, other.hi), b.sub_up(self.hi, other.lo), b, _trusted=True)

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo, self.backend, _trusted=True)

    def __mul__(self, other: "Interval") -> "Interval":
        # min/max over the four endpoint products; the sign split below just
        # avoids rounding products that cannot be extremal
        self._check(other)
        b = self.backend
        a, a2, c, d = self.lo, self.hi, other.lo, other.hi
        if a >= 0:
            if c >= 0:
                lo, hi = b.mul_down(a, c), b.mul_up(a2, d)
            elif d <= 0:
                lo, hi = b.mul_down(a2, c), b.mul_up(a, d)
            else:
                lo, hi = b.mul_down(a2, c), b.mul_up(a2, d)
        elif a2 <= 0:
            if c >= 0:
                lo, hi = b.mul_down(a, d), b.mul_up(a2, c)
            elif d <= 0:
                lo, hi = b.mul_down(a2, d), b.mul_up(a, c)
            else:
                lo, hi = b.mul_down(a, d), b.mul_up(a, c)
        else:
            if c >= 0:
                lo, hi = b.mul_down(a, d), b.mul_up(a2, d)
            elif d <= 0:
                lo, hi = b.mul_down(a2, c), b.mul_up(a, c)
            else:
                lo = min(b.mul_down(a, d), b.mul_down(a2, c))
                hi = max(b.mul_up(a, c), b.mul_up(a2, d))
        return Interval(lo, hi, b, _trusted=True)

    def __truediv__(self, other: "Interval") -> "Interval":
        self._check(other)
        if other.lo <= 0 <= other.hi:
            raise DivisionByZeroInterval(f"divisor {other} contains zero")
        b = self.backend
        a, a2, c, d = self.lo, self.hi, other.lo, other.hi
        if c > 0:
            lo = b.div_down(a, d if a >= 0 else c)
            hi = b.div_up(a2, c if a2 >= 0 else d)
        else:
            lo = b.div_down(a2, d if a2 >= 0 else c)
            hi = b.div_up(a, c if a >= 0 else d)
        return Interval(lo, hi, b, _trusted=True)

    # --- predicates ---------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Interval):
            return NotImplemented
        return self.backend is other.backend and self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.backend.name, self.lo, self.hi))

    def lt(self, other: "Interval") -> bool:
        """Certainly less: hi < other.lo.  A partial order, not total."""
        self._check(other)
        return self.hi < other.lo

    def le(self, other: "Interval") -> bool:
        """Certainly at most: hi <= other.lo."""
        self._check(other)
        return self.hi <= other.lo

    def subset(self, other: "Interval") -> bool:
        """Set inclusion self within other (endpoints may touch)."""
        self._check(other)
        return other.lo <= self.lo and self.hi <= other.hi

    # --- unary basic operations (degenerate results) ------------------------

    def left(self) -> "Interval":
        return Interval(self.lo, self.lo, self.backend, _trusted=True)

    def right(self) -> "Interval":
        return Interval(self.hi, self.hi, self.backend, _trusted=True)

    def abs(self) -> "Interval":
        m = max(-self.lo if self.lo < 0 else self.lo, -self.hi if self.hi < 0 else self.hi)
        return Interval(m, m, self.backend, _trusted=True)

    __abs__ = abs

    # --- geometry -----------------------------------------------------------

    def hull(self, other: "Interval") -> "Interval":
        self._check(other)
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi), self.backend, _trusted=True)

    def intersect(self, other: "Interval"):
        """Set intersection, or None when empty (None is the Empty marker)."""
        self._check(other)
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            return None
        return Interval(lo, hi, self.backend, _trusted=True)

    def bisect(self):
        """([lo, m], [m, hi]) with lo < m < hi, or NotBisectable."""
        m = self.backend.interior_point(self.lo, self.hi)
        if m is None:
            raise NotBisectable(f"no representable point strictly inside {self}")
        b = self.backend
        return (
            Interval(self.lo, m, b, _trusted=True),
            Interval(m, self.hi, b, _trusted=True),
        )

    # --- representation -----------------------------------------------------

    def __repr__(self):
        f = self.backend.format_scalar
        return f"[{f(self.lo)}, {f(self.hi)}]"

    def to_json(self) -> dict:
        b = self.backend
        out = {"backend": b.name}
        for key, val in ("lo", self.lo), ("hi", self.hi):
            for k, v in b.serialize(val).items():
                out[key if k in ("dec", "rat") else f"{key}_{k}"] = v
        return out


def make(lo, hi, backend=F64) -> Interval:
    """Construct [lo, hi]; InvalidEndpoints if lo > hi or non-finite."""
    if isinstance(backend, str):
        backend = get_backend(backend)
    return Interval(lo, hi, backend)


def point(v, backend=F64) -> Interval:
    """Degenerate interval [v, v]."""
    if isinstance(backend, str):
        backend = get_backend(backend)
    v = backend.coerce(v)
    return Interval(v, v, backend, _trusted=True)


def hull(a: Interval, b: Interval) -> Interval:
    return a.hull(b)


def interval_from_json(data: dict) -> Interval:
    backend = get_backend(data.get("backend", "f64"))
    if backend is RAT:
        return make(data["lo"], data["hi"], RAT)
    lo = float.fromhex(data["lo_hex"]) if "lo_hex" in data else float(data["lo"])
    hi = float.fromhex(data["hi_hex"]) if "hi_hex" in data else float(data["hi"])
    return make(lo, hi, F64)


def parse_interval(text: str, backend=F64) -> Interval:
    """Parse "[a, b]" or a single literal "a" (degenerate).

    Endpoint literals are enclosed outward on f64 when not exactly
    representable, so the parsed interval always contains the written one.
    """
    if isinstance(backend, str):
        backend = get_backend(backend)
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1]
        parts = inner.split(",")
        if len(parts) != 2:
            raise InvalidEndpoints(f"expected two endpoints in {text!r}")
        lo, _ = backend.literal_bounds(parts[0])
        _, hi = backend.literal_bounds(parts[1])
        if lo > hi:
            raise InvalidEndpoints(f"lo > hi in {text!r}")
        return Interval(lo, hi, backend, _trusted=True)
    lo, hi = backend.literal_bounds(text)
    return Interval(lo, hi, backend, _trusted=True)
