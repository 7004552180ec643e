"""Two-sample Student's t-test and loss-distribution moments."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidParamsError

__all__ = [
    "betainc",
    "student_t_sf",
    "ttest_two_sample",
    "verdict",
    "LossMoments",
    "loss_distribution_diagnostics",
]


def _betacf(a, b, x, max_iter=500, tol=1e-15):
    # modified Lentz evaluation of the incomplete-beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = tiny if abs(d) < tiny else d
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def betainc(a, b, x):
    """Regularised incomplete beta function I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise InvalidParamsError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf2(t, df):
    """Two-sided tail probability P(|T| >= |t|) for ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    return betainc(0.5 * df, 0.5, df / (df + t * t))


def student_t_sf(t, df):
    """One-sided upper tail P(T >= t)."""
    p2 = student_t_sf2(t, df)
    return 0.5 * p2 if t >= 0 else 1.0 - 0.5 * p2


def ttest_two_sample(a, b):
    """Pooled-variance two-sample t-test; returns ``(t, p)`` with a two-sided p.

    When both samples have zero variance: equal means give ``(0, 1)``,
    different means give ``(+-inf, 0)``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise InvalidParamsError("each sample needs at least two values")
    na, nb = a.size, b.size
    df = na + nb - 2
    diff = a.mean() - b.mean()
    pooled = (((a - a.mean()) ** 2).sum() + ((b - b.mean()) ** 2).sum()) / df
    se = math.sqrt(pooled * (1.0 / na + 1.0 / nb))
    if se == 0.0:
        if diff == 0.0:
            return 0.0, 1.0
        return math.copysign(math.inf, diff), 0.0
    t = float(diff / se)
    return t, student_t_sf2(t, df)


def verdict(method_scores, baseline_scores, threshold=0.05):
    """``better`` / ``worse`` / ``indistinguishable`` relative to the baseline."""
    t, p = ttest_two_sample(method_scores, baseline_scores)
    if p < threshold:
        return ("better" if t > 0 else "worse"), t, p
    return "indistinguishable", t, p


@dataclass(frozen=True)
class LossMoments:
    mean: float
    std: float
    skewness: float | None
    excess_kurtosis: float | None


def loss_distribution_diagnostics(losses):
    """Mean, std, skewness and excess kurtosis (population moment estimators).

    Skewness and kurtosis are ``None`` when the losses have zero variance.
    """
    x = np.asarray(losses, dtype=np.float64).ravel()
    if x.size < 4:
        raise InvalidParamsError("need at least four losses")
    mu = float(x.mean())
    d = x - mu
    m2 = float(np.mean(d**2))
    if m2 == 0.0:
        return LossMoments(mu, 0.0, None, None)
    skew = float(np.mean(d**3) / m2**1.5)
    kurt = float(np.mean(d**4) / m2**2 - 3.0)
    return LossMoments(mu, math.sqrt(m2), skew, kurt)
