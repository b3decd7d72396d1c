"""Welch's unequal-variance t-test with a self-contained Student-t tail.

The two-sided p-value is the regularized incomplete beta
``I_x(df/2, 1/2)`` at ``x = df / (df + t^2)``, evaluated by the modified
Lentz continued fraction.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

_TINY = 1e-300
_EPS = 1e-16


class StatsError(Exception):
    pass


def _betacf(a: float, b: float, x: float, max_iter: int = 10_000) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise StatsError(f"incomplete beta did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float, one_minus_x: float | None = None) -> float:
    """Regularized incomplete beta ``I_x(a, b)``.

    Pass ``one_minus_x`` when it is known more precisely than ``1 - x``.
    """
    if a <= 0 or b <= 0:
        raise StatsError("betainc needs a, b > 0")
    y = 1.0 - x if one_minus_x is None else one_minus_x
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log(y))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, y) / b


def t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise StatsError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    t2 = t * t
    x = df / (df + t2)
    return min(1.0, max(0.0, betainc(0.5 * df, 0.5, x, t2 / (df + t2))))


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    degrees_of_freedom: float
    p_value: float

    def to_dict(self) -> dict:
        return asdict(self)


def welch_ttest(sample_a, sample_b) -> TTestResult:
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise StatsError("each sample needs at least two values")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    sa, sb = va / a.size, vb / b.size
    se2 = sa + sb
    if se2 == 0.0:
        raise StatsError("both samples have zero variance; t is undefined")
    t = float((a.mean() - b.mean()) / math.sqrt(se2))
    df = float(se2 * se2 / (sa * sa / (a.size - 1) + sb * sb / (b.size - 1)))
    return TTestResult(t, df, t_two_sided_p(t, df))
