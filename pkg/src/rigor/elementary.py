"""Interval extensions of elementary functions.

Strategy: every enclosure is computed in exact rational arithmetic as a
Taylor partial sum plus an explicit Lagrange remainder interval, with
argument reduction against cached enclosures of e, pi and ln 2.  The f64
backend evaluates the same rational pipeline and converts the bounds
outward, except for exp, which has a certified table-plus-polynomial fast
path (scalar and numpy-vectorized) used by the subdivision algorithms.

`tol` is a per-call width budget: on the rat backend the result is at most
2*tol wider than the true range.  On f64 the achievable width bottoms out
near representation granularity; tol below that is satisfied as closely
as the format allows.

Rational endpoints are periodically rounded outward onto a dyadic grid
(denominator a power of two) so denominators cannot blow up across
compositions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from gmpy2 import isqrt, mpq, mpz

from .errors import DomainError, Overflow
from .interval import Interval, make
from .scalar import F64, RAT, f64_down_from_rational, f64_up_from_rational

__all__ = [
    "exp_iv", "sin_iv", "cos_iv", "log_iv", "sqrt_iv",
    "naive_exp", "StepSpec", "step_extension",
    "e_iv", "pi_iv", "ln2_iv",
    "exp_f64_bounds", "exp_np_down", "exp_np_up",
]

_ZERO = mpq(0)
_ONE = mpq(1)


def _coerce_tol(tol):
    t = mpq(Fraction(tol)) if isinstance(tol, str) else mpq(tol)
    if t <= 0:
        raise ValueError(f"tol must be positive, got {tol!r}")
    return t


# --- dyadic outward rounding (denominator control) --------------------------

def _grid_exp(tol) -> int:
    """Exponent s with 2**-s <= tol/8."""
    s = 3
    g = mpq(1, 8)
    while g > tol / 8:
        g /= 2
        s += 1
    return s


def _dyadic_down(x, s: int):
    scaled = x * (mpz(1) << s)
    return mpq(scaled.numerator // scaled.denominator, mpz(1) << s)


def _dyadic_up(x, s: int):
    scaled = x * (mpz(1) << s)
    return mpq(-((-scaled.numerator) // scaled.denominator), mpz(1) << s)


def _tighten(lo, hi, tol):
    s = _grid_exp(tol)
    return _dyadic_down(lo, s), _dyadic_up(hi, s)


# --- cached constant enclosures ---------------------------------------------
#
# Each cache holds the best enclosure computed so far; a request with a
# looser tolerance reuses it.

class _ConstCache:
    def __init__(self, compute):
        self.compute = compute
        self.width = None
        self.bounds = None

    def __call__(self, tol):
        tol = mpq(tol)
        if self.bounds is None or self.width > tol:
            lo, hi = self.compute(tol / 2)
            lo, hi = _tighten(lo, hi, tol / 2)
            self.bounds = (lo, hi)
            self.width = hi - lo
        return self.bounds


def _compute_e(tol):
    # e = sum 1/k!; tail after N is below 2/(N+1)!
    s = _ONE
    term = _ONE
    k = 1
    while 2 * term / (k + 1) > tol:
        term /= k
        s += term
        k += 1
    return s, s + 2 * term / (k + 1)


def _atan_inv_bounds(x: int, tol):
    # atan(1/x) by the alternating series; truth lies between consecutive
    # partial sums
    inv = mpq(1, x)
    inv2 = inv * inv
    term = inv
    s = term
    k = 0
    sign = 1
    while term > tol:
        k += 1
        sign = -sign
        term *= inv2 * (2 * k - 1)
        term /= (2 * k + 1)
        s += term if sign > 0 else -term
    if sign > 0:  # last added term positive: truth in [s - term_next, s]
        return s - term * inv2, s
    return s, s + term * inv2


def _compute_pi(tol):
    # pi = 16 atan(1/5) - 4 atan(1/239)
    a5_lo, a5_hi = _atan_inv_bounds(5, tol / 40)
    a239_lo, a239_hi = _atan_inv_bounds(239, tol / 10)
    return 16 * a5_lo - 4 * a239_hi, 16 * a5_hi - 4 * a239_lo


def _compute_ln2(tol):
    # ln 2 = sum 1/(k 2^k); tail after N below 2^-N/(N+1)
    s = _ZERO
    term = _ONE
    k = 0
    while term / (k + 1) > tol:
        k += 1
        term /= 2
        s += term / k
    return s, s + term / (k + 1)


_e_bounds = _ConstCache(_compute_e)
_pi_bounds = _ConstCache(_compute_pi)
_ln2_bounds = _ConstCache(_compute_ln2)


def e_iv(tol) -> Interval:
    """Enclosure of Euler's number on the rat backend, width <= tol."""
    lo, hi = _e_bounds(_coerce_tol(tol))
    return make(lo, hi, RAT)


def pi_iv(tol) -> Interval:
    lo, hi = _pi_bounds(_coerce_tol(tol))
    return make(lo, hi, RAT)


def ln2_iv(tol) -> Interval:
    lo, hi = _ln2_bounds(_coerce_tol(tol))
    return make(lo, hi, RAT)


# --- exp --------------------------------------------------------------------

def _ceil_q(x) -> int:
    return int(-((-x.numerator) // x.denominator))


def _floor_q(x) -> int:
    return int(x.numerator // x.denominator)


def _e_power_bounds(n: int, tol_rel):
    """Bounds of e**n for integer n, relative width below ~tol_rel."""
    el, eh = _e_bounds(tol_rel * 2 / (abs(n) + 1))
    if n >= 0:
        return el ** n, eh ** n
    return _ONE / eh ** (-n), _ONE / el ** (-n)


def _exp_mag_up(n: int):
    # e**x < 3**(n+1) for n >= -1, e**x < 2**(n+1) for n < -1 (x in [n, n+1))
    return mpq(3) ** (n + 1) if n >= -1 else mpq(2) ** (n + 1)


def _exp_point(x, tol):
    """0 <= lo <= e**x <= hi with hi - lo <= tol, exact rationals."""
    if x < 0:
        g = _grid_exp(tol)
        if _floor_q(-x) >= g:
            # e**x < 2**x is already below one grid unit; skip the giant
            # rationals a far-negative argument would otherwise build
            return _ZERO, mpq(2) ** -g
    n = _floor_q(x)
    t = x - n  # in [0, 1)
    mag_up = _exp_mag_up(n)
    tol_rel = tol / (4 * mag_up)
    # e**t by Taylor; tail after N terms is below 3 t^(N+1)/(N+1)!
    s = _ONE
    term = _ONE
    k = 1
    while 3 * term > tol_rel:
        term *= t
        term /= k
        s += term
        k += 1
    t_lo, t_hi = s, s + 3 * term  # term = t^(k-1)/(k-1)! >= tail bound / 3
    n_lo, n_hi = _e_power_bounds(n, tol_rel)
    return _tighten(n_lo * t_lo, n_hi * t_hi, tol)


# certified f64 fast path: e^x = e^n * e^(j/32) * e^s with s = x - k/32,
# |s| <= 1/64, k = n*32 + j.  The table entries carry <= 1.1 ulp relative
# error, the degree-6 Horner for e^s stays within ~16 ulp relative error
# (|terms| <= 1.02, 13 roundings, coefficient rounding, truncation below
# (1/64)^7/5040 < 4.5e-17), and the two products add ~2 ulp.  Total true
# relative error < 2^-48; the outward pad of 2^-46 plus one nextafter step
# dominates it with a 4x margin.  Valid for |x| <= 697 (results normal).
_EXP_FAST_LIMIT = 697.0
_EXP_PAD = 2.0 ** -46
_EXP_PAD_UP = 1.0 + _EXP_PAD
_EXP_PAD_DOWN = 1.0 - _EXP_PAD

_exp_e1_cache: dict[int, float] = {}
_exp_e2_table: np.ndarray | None = None


def _e1_mid(n: int) -> float:
    f = _exp_e1_cache.get(n)
    if f is None:
        lo, hi = _e_power_bounds(n, mpq(1, 10 ** 22))
        f = float((lo + hi) / 2)
        _exp_e1_cache[n] = f
    return f


def _e2_table() -> np.ndarray:
    global _exp_e2_table
    if _exp_e2_table is None:
        mids = []
        for j in range(32):
            lo, hi = _exp_point(mpq(j, 32), mpq(1, 10 ** 22))
            mids.append(float((lo + hi) / 2))
        _exp_e2_table = np.array(mids, dtype=np.float64)
    return _exp_e2_table


def _e1_range(nmin: int, nmax: int) -> np.ndarray:
    return np.array([_e1_mid(n) for n in range(nmin, nmax + 1)], dtype=np.float64)


def _exp_horner(s):
    # e^s for |s| <= 1/64, works for scalars and arrays alike
    p = 1.0 / 720.0
    p = p * s + 1.0 / 120.0
    p = p * s + 1.0 / 24.0
    p = p * s + 1.0 / 6.0
    p = p * s + 0.5
    p = p * s + 1.0
    return p * s + 1.0


def exp_f64_bounds(x: float) -> tuple[float, float]:
    """Certified (lo, hi) floats around e**x; requires |x| <= 697."""
    k = round(x * 32.0)
    n, j = divmod(k, 32)
    s = x - k * 0.03125  # exact: x and k/32 share a grid
    y = _e1_mid(n) * (_e2_table()[j] * _exp_horner(s))
    return (
        math.nextafter(y * _EXP_PAD_DOWN, -math.inf),
        math.nextafter(y * _EXP_PAD_UP, math.inf),
    )


def _exp_core_np(x: np.ndarray) -> np.ndarray:
    if x.size == 0:
        return np.empty_like(x)
    k = np.rint(x * 32.0)
    ki = k.astype(np.int64)
    n, j = np.divmod(ki, 32)
    s = x - k * 0.03125
    nmin = int(n.min())
    e1 = _e1_range(nmin, int(n.max()))
    return e1[n - nmin] * (_e2_table()[j] * _exp_horner(s))


def exp_np_down(x: np.ndarray) -> np.ndarray:
    """Vectorized certified lower bounds of e**x; requires |x| <= 697."""
    y = _exp_core_np(x)
    return np.nextafter(y * _EXP_PAD_DOWN, -np.inf)


def exp_np_up(x: np.ndarray) -> np.ndarray:
    y = _exp_core_np(x)
    return np.nextafter(y * _EXP_PAD_UP, np.inf)


def _exp_point_cheap(x, tol):
    """The certified float fast path lifted back into exact rationals.

    Applicable when x is float-representable and tol is loose enough that
    the ~2^-45 relative width of the float enclosure fits inside it; float
    bounds are exact dyadic rationals, so nothing is conceded on the rat
    backend.  Returns None when inapplicable.
    """
    if abs(x) > 697:
        return None
    f = float(x)
    if mpq(f) != x:
        return None
    if _exp_mag_up(_floor_q(x)) > tol * 10 ** 13:
        return None
    lo, hi = exp_f64_bounds(f)
    return mpq(lo), mpq(hi)


_EXP_UNDER_LIMIT = -745.0  # below: e**x is under every positive binary64
_EXP_OVER_LIMIT = 709.79   # above: e**x exceeds every finite binary64


def _exp_f64_fringe(x: float, up: bool) -> float:
    """One directed endpoint of e**x outside the fast path's range, via the
    rational pipeline at a tolerance well under one ulp of the result."""
    if -_EXP_FAST_LIMIT <= x <= _EXP_FAST_LIMIT:
        lo, hi = exp_f64_bounds(x)
        return hi if up else max(lo, 0.0)
    if x < _EXP_UNDER_LIMIT:
        return math.ulp(0.0) if up else 0.0
    if x > _EXP_OVER_LIMIT:
        raise Overflow("e**x above the finite binary64 range")
    tol = mpq(max(math.exp(min(x, 709.0)), 5e-324)) / 10 ** 18
    lo, hi = _exp_point(mpq(x), tol)
    if up:
        return f64_up_from_rational(hi)
    return max(f64_down_from_rational(lo), 0.0)


def exp_iv(X: Interval, tol) -> Interval:
    """Enclosure of {e**x : x in X}; monotone, so endpoints suffice."""
    tol = _coerce_tol(tol)
    if X.backend is F64:
        if -_EXP_FAST_LIMIT <= X.lo and X.hi <= _EXP_FAST_LIMIT:
            lo = exp_f64_bounds(X.lo)[0]
            hi = exp_f64_bounds(X.hi)[1]
            return Interval(max(lo, 0.0), hi, F64, _trusted=True)
        hi = _exp_f64_fringe(X.hi, True)  # overflow raises before lo work
        lo = _exp_f64_fringe(X.lo, False)
        return Interval(lo, hi, F64, _trusted=True)
    cl = _exp_point_cheap(X.lo, tol)
    lo = cl[0] if cl is not None else _exp_point(X.lo, tol)[0]
    ch = _exp_point_cheap(X.hi, tol) if X.hi != X.lo else cl
    hi = ch[1] if ch is not None else _exp_point(X.hi, tol)[1]
    return Interval(lo, hi, RAT, _trusted=True)


def naive_exp(X: Interval, terms: int) -> Interval:
    """Term-by-term interval summation of the exponential series on X.

    Demonstrates the dependency problem: each power X**k is computed as a
    fresh interval product, so mixed-sign inputs overcount wildly.  A
    Lagrange remainder interval is still added, so the result remains a
    valid enclosure of e**x over X.
    """
    if terms < 1:
        raise ValueError("terms must be >= 1")
    b = X.backend
    one = Interval(b.coerce(1), b.coerce(1), b, _trusted=True)
    s = one
    t = one
    for k in range(1, terms):
        t = t * X / Interval(b.coerce(k), b.coerce(k), b, _trusted=True)
        s = s + t
    # |e^x - P(x)| <= |x|^terms/terms! * e^max(x,0) <= rho on all of X
    m = mpq(X.abs().lo)
    rho = m ** terms / math.factorial(terms) * mpq(3) ** max(0, _ceil_q(mpq(X.hi)))
    if b is RAT:
        pad = Interval(-rho, rho, RAT, _trusted=True)
    else:
        r = f64_up_from_rational(rho)
        pad = Interval(-r, r, F64, _trusted=True)
    return s + pad


# --- log --------------------------------------------------------------------

def _log_point(x, tol):
    """Bounds of ln x for rational x > 0, width <= tol."""
    # split x = 2^k * m with m in [1, 2)
    k = x.numerator.bit_length() - x.denominator.bit_length()
    m = x / mpq(mpz(1) << k) if k >= 0 else x * (mpz(1) << -k)
    while m >= 2:
        m /= 2
        k += 1
    while m < 1:
        m *= 2
        k -= 1
    # ln m = 2 atanh(z), z = (m-1)/(m+1) in [0, 1/3)
    z = (m - 1) / (m + 1)
    z2 = z * z
    s = z
    term = z
    i = 1
    # tail after power 2N+1 is below (9/4) z^(2N+3)/(2N+3)
    while mpq(9, 4) * term * z2 / (2 * i + 1) > tol / 8:
        term *= z2
        s += term / (2 * i + 1)
        i += 1
    m_lo, m_hi = 2 * s, 2 * (s + mpq(9, 8) * term * z2 / (2 * i + 1))
    if k == 0:
        return _tighten(m_lo, m_hi, tol)
    l2_lo, l2_hi = _ln2_bounds(tol / (4 * abs(k)))
    if k > 0:
        return _tighten(k * l2_lo + m_lo, k * l2_hi + m_hi, tol)
    return _tighten(k * l2_hi + m_lo, k * l2_lo + m_hi, tol)


def log_iv(X: Interval, tol) -> Interval:
    """Enclosure of {ln x : x in X}; requires X.lo > 0."""
    tol = _coerce_tol(tol)
    if X.lo <= 0:
        raise DomainError(f"log needs a strictly positive interval, got {X}")
    if X.backend is F64:
        lo = _log_point(mpq(X.lo), tol)[0]
        hi = _log_point(mpq(X.hi), tol)[1]
        return Interval(f64_down_from_rational(lo), f64_up_from_rational(hi), F64, _trusted=True)
    lo = _log_point(X.lo, tol)[0]
    hi = _log_point(X.hi, tol)[1]
    return Interval(lo, hi, RAT, _trusted=True)


# --- sqrt -------------------------------------------------------------------

def _sqrt_point(x, tol):
    """Bounds of sqrt(x) for rational x >= 0, width <= tol."""
    if x == 0:
        return _ZERO, _ZERO
    p = x.numerator
    q = x.denominator
    # sqrt(p/q) = sqrt(p q)/q; bracket the integer root on a 2^-s subgrid
    s = 0
    grain = mpq(1, q)
    while grain > tol / 2:
        grain /= 2
        s += 1
    n = isqrt(p * q << (2 * s))
    den = q * (mpz(1) << s)
    lo = mpq(n, den)
    return (lo, lo) if lo * lo == x else (lo, mpq(n + 1, den))


def sqrt_iv(X: Interval, tol) -> Interval:
    """Enclosure of {sqrt(x) : x in X}; requires X.lo >= 0."""
    tol = _coerce_tol(tol)
    if X.lo < 0:
        raise DomainError(f"sqrt needs a nonnegative interval, got {X}")
    if X.backend is F64:
        return Interval(F64.sqrt_down(X.lo), F64.sqrt_up(X.hi), F64, _trusted=True)
    lo = _sqrt_point(X.lo, tol)[0]
    hi = _sqrt_point(X.hi, tol)[1]
    return Interval(lo, hi, RAT, _trusted=True)


# --- sin / cos --------------------------------------------------------------

def _sin_taylor(m, tol):
    """Bounds of sin(m) for rational |m| <= 8."""
    m2 = m * m
    term = m
    s = m
    absterm = abs(m)
    j = 0
    # Lagrange: after the x^(2N+1) term the error is below |m|^(2N+3)/(2N+3)!
    while absterm * abs(m2) / ((2 * j + 2) * (2 * j + 3)) > tol / 2:
        term = -term * m2 / ((2 * j + 2) * (2 * j + 3))
        absterm = absterm * abs(m2) / ((2 * j + 2) * (2 * j + 3))
        s += term
        j += 1
    r = absterm * abs(m2) / ((2 * j + 2) * (2 * j + 3))
    return s - r, s + r


def _cos_taylor(m, tol):
    m2 = m * m
    term = _ONE
    s = _ONE
    absterm = _ONE
    j = 0
    while absterm * abs(m2) / ((2 * j + 1) * (2 * j + 2)) > tol / 2:
        term = -term * m2 / ((2 * j + 1) * (2 * j + 2))
        absterm = absterm * abs(m2) / ((2 * j + 1) * (2 * j + 2))
        s += term
        j += 1
    r = absterm * abs(m2) / ((2 * j + 1) * (2 * j + 2))
    return s - r, s + r


def _thin_eval(point_taylor, u_lo, u_hi, tol):
    # evaluate on a thin interval via the midpoint; |f'| <= 1 for sin/cos
    mid = (u_lo + u_hi) / 2
    half = (u_hi - u_lo) / 2
    lo, hi = point_taylor(mid, tol / 2)
    return lo - half, hi + half


def _reduce_angle(a, b, n, tol):
    """Shift [a, b] by n periods into roughly [-pi, pi] + width."""
    pi_lo, pi_hi = _pi_bounds(tol / 16)
    if n == 0:
        return (a, a), (b, b), pi_lo, pi_hi
    tp_lo, tp_hi = 2 * pi_lo, 2 * pi_hi
    if n > 0:
        ra = (a - n * tp_hi, a - n * tp_lo)
        rb = (b - n * tp_hi, b - n * tp_lo)
    else:
        ra = (a - n * tp_lo, a - n * tp_hi)
        rb = (b - n * tp_lo, b - n * tp_hi)
    return ra, rb, pi_lo, pi_hi


def _trig_core(X, tol, point_taylor, crit_value, crit_offset):
    """Shared sin/cos range machinery over exact rationals.

    crit_value(k) is the function value at its k-th critical point
    crit_offset + k*pi (sin: pi/2 + k pi -> (-1)^k; cos: k pi -> (-1)^k).
    """
    a, b = mpq(X[0]), mpq(X[1])
    tp_probe = 2 * _pi_bounds(mpq(1, 10 ** 6))[1]
    if b - a >= tp_probe:
        return -_ONE, _ONE
    # period count in exact arithmetic so huge arguments cannot overflow a
    # float; refine pi until the count is reliable to well under one period
    mid = (a + b) / 2
    n0 = abs(_floor_q(mid / tp_probe)) + 2
    p_lo, p_hi = _pi_bounds(mpq(1, 8 * n0))
    n = _floor_q(mid / (p_lo + p_hi) + mpq(1, 2))
    # pi tolerance scaled by how many periods we shift
    ra, rb, pi_lo, pi_hi = _reduce_angle(a, b, n, tol / (abs(n) + 1))
    lo_e, hi_e = _thin_eval(point_taylor, *ra, tol)
    lo2, hi2 = _thin_eval(point_taylor, *rb, tol)
    lo, hi = min(lo_e, lo2), max(hi_e, hi2)
    dom_lo, dom_hi = ra[0], rb[1]
    for k in range(-3, 4):
        q = crit_offset + k
        c_lo, c_hi = (q * pi_lo, q * pi_hi) if q >= 0 else (q * pi_hi, q * pi_lo)
        if c_hi >= dom_lo and c_lo <= dom_hi:
            v = crit_value(k)
            lo, hi = min(lo, v), max(hi, v)
    lo, hi = _tighten(max(lo, -_ONE), min(hi, _ONE), tol)
    return max(lo, -_ONE), min(hi, _ONE)


def sin_iv(X: Interval, tol) -> Interval:
    """Enclosure of {sin x : x in X}; interior extrema are accounted for."""
    tol = _coerce_tol(tol)
    lo, hi = _trig_core(
        (X.lo, X.hi), tol, _sin_taylor,
        lambda k: _ONE if k % 2 == 0 else -_ONE, mpq(1, 2),
    )
    if X.backend is F64:
        return Interval(f64_down_from_rational(lo), f64_up_from_rational(hi), F64, _trusted=True)
    return Interval(lo, hi, RAT, _trusted=True)


def cos_iv(X: Interval, tol) -> Interval:
    tol = _coerce_tol(tol)
    lo, hi = _trig_core(
        (X.lo, X.hi), tol, _cos_taylor,
        lambda k: _ONE if k % 2 == 0 else -_ONE, mpq(0),
    )
    if X.backend is F64:
        return Interval(f64_down_from_rational(lo), f64_up_from_rational(hi), F64, _trusted=True)
    return Interval(lo, hi, RAT, _trusted=True)


# --- step functions ---------------------------------------------------------

@dataclass(frozen=True)
class StepSpec:
    """The step family s_c: value a1 for x > c, a2 for x <= c.

    delta >= 0 is the outward slack applied by the rh helper to every
    literal: 0 means exact representable endpoints; positive delta moves
    endpoints outward (one representable step on f64, the full delta on
    rat), modelling uncertainty in where the jump sits.
    """

    c: object
    a1: object
    a2: object
    delta: object = 0
    backend: object = F64

    def __post_init__(self):
        b = self.backend
        object.__setattr__(self, "c", b.coerce(self.c))
        object.__setattr__(self, "a1", b.coerce(self.a1))
        object.__setattr__(self, "a2", b.coerce(self.a2))
        d = b.coerce(self.delta)
        if d < 0:
            raise ValueError("delta must be >= 0")
        object.__setattr__(self, "delta", d)

    def _rh(self, lo, hi) -> Interval:
        b = self.backend
        if self.delta == 0:
            return Interval(lo, hi, b, _trusted=True)
        return Interval(
            b.step_out_down(lo, self.delta), b.step_out_up(hi, self.delta), b, _trusted=True
        )


def step_extension(spec: StepSpec, I: Interval) -> Interval:
    """The F_delta extension of s_c: exact on one-sided inputs, the padded
    hull of {a1, a2} when I straddles the jump."""
    if I.backend is not spec.backend:
        raise DomainError("step spec and argument use different backends")
    rc = spec._rh(spec.c, spec.c)
    if I.le(rc):
        return spec._rh(spec.a2, spec.a2)
    if rc.lt(I):
        return spec._rh(spec.a1, spec.a1)
    return spec._rh(min(spec.a1, spec.a2), max(spec.a1, spec.a2))
