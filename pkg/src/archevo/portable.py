"""Bit-reproducible elementary math for the synthetic training formula.

Platform libm implementations of log and exp are only faithfully rounded,
so CPython and other runtimes disagree in the last ulp on a small fraction
of inputs.  The synthetic evaluator is a frozen cross-language contract,
therefore it computes its transcendentals with the routines below: just
IEEE-754 double adds, multiplies, divides and exact power-of-two scalings,
evaluated in a pinned order.  Any language that reimplements the same
sequence of operations reproduces the results bit for bit.

Accuracy is a couple of ulp against the correctly rounded result, which is
far inside every tolerance used by the objective model.
"""

from __future__ import annotations

import math

_LN2_HI = 6.93147180369123816490e-01  # high 32 bits of ln 2
_LN2_LO = 1.90821492927058770002e-10  # ln 2 - _LN2_HI
_INV_LN2 = 1.4426950408889634
_SQRT_HALF = 0.7071067811865476

_LOG_TERMS = 12  # atanh series t^(2j+1)/(2j+1), j < 12; t^2 <= 0.0295
_EXP_TERMS = 22  # Taylor depth; |r| <= ln(2)/2


def portable_log(x: float) -> float:
    """Natural log for finite x > 0, identical on every IEEE-754 runtime."""
    if x <= 0.0 or math.isinf(x) or math.isnan(x):
        raise ValueError(f"portable_log domain error: {x!r}")
    m, e = math.frexp(x)  # x = m * 2**e, m in [0.5, 1); exact
    if m < _SQRT_HALF:
        m *= 2.0
        e -= 1
    # ln(m) = 2 * atanh(t) with t = (m-1)/(m+1), |t| <= 3 - 2*sqrt(2)
    t = (m - 1.0) / (m + 1.0)
    t2 = t * t
    s = 1.0 / (2 * _LOG_TERMS - 1)
    for j in range(_LOG_TERMS - 2, -1, -1):
        s = s * t2 + 1.0 / (2 * j + 1)
    ln_m = 2.0 * t * s
    return e * _LN2_HI + (e * _LN2_LO + ln_m)


def portable_exp(x: float) -> float:
    """exp for |x| <= 700, identical on every IEEE-754 runtime."""
    if math.isnan(x) or abs(x) > 700.0:
        raise ValueError(f"portable_exp domain error: {x!r}")
    if x == 0.0:
        return 1.0
    k = math.floor(x * _INV_LN2 + 0.5)
    r = (x - k * _LN2_HI) - k * _LN2_LO
    p = 1.0
    for j in range(_EXP_TERMS, 0, -1):
        p = 1.0 + (r * p) / j
    return math.ldexp(p, k)


def round_half_up(x: float) -> int:
    """Round with halves going up: 2.5 -> 3.

    Python's round() rounds halves to even, and other runtimes disagree on
    halves in other ways; floor(x + 0.5) is unambiguous for the
    non-negative values this package rounds.
    """
    if x < 0.0:
        raise ValueError("round_half_up is pinned for non-negative values only")
    return int(math.floor(x + 0.5))
