"""Double-double (~31 significant digit) arithmetic on (hi, lo) float pairs.

Used by the Mittag-Leffler series evaluators, where the alternating Taylor
series cancels up to ~exp(|z|^(1/alpha)) and plain doubles lose all digits.
Only the handful of operations the series needs are provided.
"""

from __future__ import annotations

_SPLITTER = 134217729.0  # 2**27 + 1, Dekker splitting constant


def two_sum(a: float, b: float) -> tuple[float, float]:
    """Exact sum a + b = s + err with |err| <= ulp(s)/2."""
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def quick_two_sum(a: float, b: float) -> tuple[float, float]:
    """two_sum specialization valid when |a| >= |b|."""
    s = a + b
    return s, b - (s - a)


def two_prod(a: float, b: float) -> tuple[float, float]:
    """Exact product a * b = p + err via Dekker splitting."""
    p = a * b
    ta = _SPLITTER * a
    ahi = ta - (ta - a)
    alo = a - ahi
    tb = _SPLITTER * b
    bhi = tb - (tb - b)
    blo = b - bhi
    err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, err


def dd_add(x: tuple[float, float], y: tuple[float, float]) -> tuple[float, float]:
    s, e = two_sum(x[0], y[0])
    e += x[1] + y[1]
    return quick_two_sum(s, e)


def dd_mul(x: tuple[float, float], y: tuple[float, float]) -> tuple[float, float]:
    p, e = two_prod(x[0], y[0])
    e += x[0] * y[1] + x[1] * y[0]
    return quick_two_sum(p, e)


def dd_neg(x: tuple[float, float]) -> tuple[float, float]:
    return (-x[0], -x[1])


def dd_abs(x: tuple[float, float]) -> tuple[float, float]:
    return dd_neg(x) if x[0] < 0.0 else x


def dd_from_float(a: float) -> tuple[float, float]:
    return (float(a), 0.0)
