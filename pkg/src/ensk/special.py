"""Scalar special functions used by the stopping-rule pipeline."""

from __future__ import annotations

import math
from statistics import NormalDist
from typing import Callable, Sequence

from .errors import DomainError, NoConvergence, TooFewSamples

_TINY = 1e-300
_CF_EPS = 1e-16
_CF_MAX_ITER = 100_000
_INV_MAX_ITER = 200


def ln_gamma(x: float) -> float:
    if not x > 0:
        raise DomainError(f"ln_gamma needs x > 0, got {x!r}")
    return math.lgamma(x)


def ln_beta(a: float, b: float) -> float:
    return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)


def _beta_cf(a: float, b: float, x: float) -> float:
    # Modified Lentz evaluation of the incomplete-beta continued fraction.
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
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
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise NoConvergence(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _check_shape(a: float, b: float) -> None:
    if not (a > 0 and b > 0 and math.isfinite(a) and math.isfinite(b)):
        raise DomainError(f"beta shape parameters must be positive and finite, got a={a!r}, b={b!r}")


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    _check_shape(a, b)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x!r}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = a * math.log(x) + b * math.log1p(-x) - ln_beta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _beta_cf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _beta_cf(b, a, 1.0 - x) / b


def beta_pdf(a: float, b: float, x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return math.exp((a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - ln_beta(a, b))


def _initial_guess(a: float, b: float, q: float) -> float:
    # Starting point from Numerical Recipes' invbetai.
    if a >= 1.0 and b >= 1.0:
        pp = q if q < 0.5 else 1.0 - q
        t = math.sqrt(-2.0 * math.log(pp))
        z = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t
        if q < 0.5:
            z = -z
        al = (z * z - 3.0) / 6.0
        h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0))
        w = z * math.sqrt(al + h) / h - (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0)) * (
            al + 5.0 / 6.0 - 2.0 / (3.0 * h)
        )
        return a / (a + b * math.exp(2.0 * w))
    lna = math.log(a / (a + b))
    lnb = math.log(b / (a + b))
    t = math.exp(a * lna) / a
    u = math.exp(b * lnb) / b
    w = t + u
    if q < t / w:
        return (a * w * q) ** (1.0 / a)
    return 1.0 - (b * w * (1.0 - q)) ** (1.0 / b)


def inv_reg_inc_beta(a: float, b: float, q: float) -> float:
    """Solve ``reg_inc_beta(a, b, x) = q`` for x.

    Newton steps are kept inside a shrinking bracket [lo, hi]; any step that
    would leave it is replaced by bisection.
    """
    _check_shape(a, b)
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    lo, hi = 0.0, 1.0
    x = min(max(_initial_guess(a, b, q), 1e-300), 1.0 - 1e-16)
    best_x, best_err = x, math.inf
    for _ in range(_INV_MAX_ITER):
        f = reg_inc_beta(a, b, x) - q
        err = abs(f)
        if err < best_err:
            best_x, best_err = x, err
        if err <= 1e-14:
            return x
        if f < 0:
            lo = x
        else:
            hi = x
        if hi - lo <= 4e-16 * max(x, 1e-300):
            return best_x
        pdf = beta_pdf(a, b, x)
        step_ok = False
        if pdf > 0 and math.isfinite(pdf):
            nx = x - f / pdf
            if lo < nx < hi:
                x, step_ok = nx, True
        if not step_ok:
            # geometric bisection near zero keeps extreme left tails cheap
            if lo == 0.0 and hi < 1e-3:
                x = hi * 1e-3 if hi > 1e-300 else hi / 2.0
            else:
                x = 0.5 * (lo + hi)
    if best_err < 1e-10:
        return best_x
    raise NoConvergence(f"inverse incomplete beta failed (a={a}, b={b}, q={q})")


_STD_NORMAL = NormalDist()


def normal_quantile(q: float) -> float:
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    return _STD_NORMAL.inv_cdf(q)


def ks_statistic(sorted_sample: Sequence[float], cdf: Callable[[float], float]) -> float:
    """Kolmogorov-Smirnov distance between the empirical cdf and ``cdf``."""
    n = len(sorted_sample)
    if n < 5:
        raise TooFewSamples(f"KS statistic needs at least 5 observations, got {n}")
    d = 0.0
    for i, x in enumerate(sorted_sample):
        f = cdf(x)
        d = max(d, (i + 1) / n - f, f - i / n)
    return d


def ks_critical_value(n: int, significance: float = 0.05) -> float:
    """Asymptotic one-sample KS critical value, ``sqrt(-ln(alpha/2)/2)/sqrt(n)``."""
    return math.sqrt(-0.5 * math.log(significance / 2.0)) / math.sqrt(n)
