"""Statistical tests used by the diagnostics and the evaluation harness.

Everything here is scalar math on sequences: the two-sample Kolmogorov-Smirnov
test with the asymptotic p-value (small-sample corrected), Pearson correlation
with a Student-t p-value via the regularized incomplete beta function, and the
t-based confidence interval.
"""

from __future__ import annotations

import bisect
import math
from typing import Sequence


def ks_2sample(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Two-sample KS test: (statistic D, asymptotic two-sided p-value).

    D = sup |ECDF_x - ECDF_y|. The p-value uses the Kolmogorov series
    2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2) with
    lambda = (sqrt(m_e) + 0.12 + 0.11/sqrt(m_e)) * D and
    m_e = |x||y| / (|x| + |y|); the series is truncated once a term drops
    below 1e-12 and the result is clamped to [0, 1].
    """
    if len(x) == 0 or len(y) == 0:
        raise ValueError("ks_2sample requires nonempty samples")
    xs = sorted(x)
    ys = sorted(y)
    n, m = len(xs), len(ys)
    d = 0.0
    for v in xs + ys:
        cx = bisect.bisect_right(xs, v) / n
        cy = bisect.bisect_right(ys, v) / m
        d = max(d, abs(cx - cy))
    m_e = n * m / (n + m)
    lam = (math.sqrt(m_e) + 0.12 + 0.11 / math.sqrt(m_e)) * d
    return d, _kolmogorov_sf(lam)


def _kolmogorov_sf(lam: float) -> float:
    if lam < 1e-8:
        return 1.0
    total = 0.0
    sign = 1.0
    for k in range(1, 1001):
        term = math.exp(-2.0 * k * k * lam * lam)
        total += sign * term
        if term < 1e-12:
            break
        sign = -sign
    return min(1.0, max(0.0, 2.0 * total))


def _betacf(a: float, b: float, x: float) -> float:
    # Continued fraction for the incomplete beta function (modified Lentz).
    max_iter = 300
    eps = 3e-16
    fpmin = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            break
    return h


def regularized_incomplete_beta(x: float, a: float, b: float) -> float:
    """I_x(a, b) via the continued-fraction expansion."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: int) -> float:
    """P(|T| >= t) for Student's t with df degrees of freedom."""
    t = abs(t)
    x = df / (df + t * t)
    return min(1.0, max(0.0, regularized_incomplete_beta(x, df / 2.0, 0.5)))


def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Pearson correlation and its two-sided p-value.

    Requires n >= 3 and nonzero variance on both sides; |rho| = 1 yields p = 0.
    """
    n = len(x)
    if n != len(y):
        raise ValueError("pearson: length mismatch")
    if n < 3:
        raise ValueError("pearson requires n >= 3")
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("pearson: zero variance")
    rho = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(sxx * syy)
    rho = min(1.0, max(-1.0, rho))
    if 1.0 - rho * rho < 1e-15:
        return rho, 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return rho, student_t_two_sided_p(t, n - 2)


def t_interval(values: Sequence[float], t_value: float) -> tuple[float, float, float]:
    """Mean with a +/- t * s / sqrt(n) interval (sample standard deviation)."""
    n = len(values)
    if n < 2:
        raise ValueError("t_interval requires at least 2 values")
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    half = t_value * math.sqrt(var) / math.sqrt(n)
    return mean, mean - half, mean + half
