"""Directed rounding on float64 numpy arrays, bit-compatible with scalar.py.

Each operation returns (down, up, unsafe): correctly-rounded directed
endpoint arrays plus a mask of entries where the error-term trick that
certifies the rounding direction is not exact.  At unmasked entries every
value equals what the scalar backend produces for the same operands; the
caller must recompute masked entries through the scalar path (they mark
overflow, products near the subnormal range, and operands too large to
split for the product error term).

Addition uses the compensated-sum error term, which is exact for any
finite result.  Multiplication and the square-root direction check split
operands at 2^27+1 to recover the exact product error; that fails once
|operand| > 2^996 or the product's grid drops below the smallest
subnormal, hence the masks.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "add_down", "add_up", "sub_down", "sub_up",
    "mul_parts", "dir_down", "dir_up", "sqrt_parts",
]

_SPLITTER = 134217729.0  # 2^27 + 1
_AB_LIMIT = 2.0 ** 996
_P_FLOOR = 2.0 ** -968
_NEVER = np.False_


def _sum_err(a, b, s):
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def dir_down(r, err):
    return np.where(err < 0, np.nextafter(r, -np.inf), r)


def dir_up(r, err):
    return np.where(err > 0, np.nextafter(r, np.inf), r)


def add_down(a, b):
    s = a + b
    return dir_down(s, _sum_err(a, b, s)), ~np.isfinite(s)


def add_up(a, b):
    s = a + b
    return dir_up(s, _sum_err(a, b, s)), ~np.isfinite(s)


def sub_down(a, b):
    return add_down(a, -b)


def sub_up(a, b):
    return add_up(a, -b)


def mul_parts(a, b):
    """(product, exact error, unsafe) with a*b == product + error exactly
    at safe entries."""
    p = a * b
    c = _SPLITTER * a
    ahi = c - (c - a)
    alo = a - ahi
    c = _SPLITTER * b
    bhi = c - (c - b)
    blo = b - bhi
    e = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    exact_zero = (a == 0) | (b == 0)
    unsafe = ~exact_zero & (
        (np.abs(p) < _P_FLOOR)
        | (np.abs(a) > _AB_LIMIT)
        | (np.abs(b) > _AB_LIMIT)
    )
    unsafe = unsafe | ~np.isfinite(p)
    return p, e, unsafe


def sqrt_parts(a):
    """(root, direction, unsafe) for a >= 0: direction has the exact sign
    of a - root^2 at safe entries."""
    r = np.sqrt(a)
    p, e, _ = mul_parts(r, r)
    t = (a - p) - e  # a-p exact by Sterbenz; t's sign survives rounding
    unsafe = (a != 0) & (a < _P_FLOOR)
    return r, t, unsafe
