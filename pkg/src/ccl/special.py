"""erf, erfc and the scaled erfcx(x) = exp(x^2) erfc(x).

Arguments up to 1 use the positive-term series
``erf(x) = 2/sqrt(pi) exp(-x^2) sum 2^n x^(2n+1) / (2n+1)!!``; large ones use
the Laplace continued fraction for erfcx evaluated with Lentz's method.
Accuracy is close to double precision on the whole real line.
"""
from __future__ import annotations

import math

import numpy as np

_SERIES_MAX = 1.0
_INV_SQRT_PI = 1.0 / math.sqrt(math.pi)


def _erf_series(x):
    if x == 0.0:
        return 0.0
    x2 = x * x
    term = x
    total = x
    n = 0
    while True:
        n += 1
        term *= 2.0 * x2 / (2 * n + 1)
        total += term
        if term <= 1e-17 * total:
            break
    return 2.0 * _INV_SQRT_PI * math.exp(-x2) * total


def _erfcx_cf(x):
    # erfcx(x) = 1/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), x > 0
    tiny = 1e-300
    f = x
    c = x
    d = 0.0
    k = 1
    while k < 5000:
        a = 0.5 * k
        d = x + a * d
        d = tiny if d == 0.0 else d
        c = x + a / c
        c = tiny if c == 0.0 else c
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 4e-16:
            break
        k += 1
    return _INV_SQRT_PI / f


def _erfc_scalar(x):
    if math.isnan(x):
        return math.nan
    if x < 0.0:
        return 2.0 - _erfc_scalar(-x)
    if x <= _SERIES_MAX:
        return 1.0 - _erf_series(x)
    if x > 27.3:
        return 0.0
    return math.exp(-x * x) * _erfcx_cf(x)


def _erfcx_scalar(x):
    if math.isnan(x):
        return math.nan
    if x < 0.0:
        if x < -26.6:
            return math.inf
        return 2.0 * math.exp(x * x) - _erfcx_scalar(-x)
    if x <= _SERIES_MAX:
        return math.exp(x * x) * (1.0 - _erf_series(x))
    return _erfcx_cf(x)


def _erf_scalar(x):
    if math.isnan(x):
        return math.nan
    if x < 0.0:
        return -_erf_scalar(-x)
    if x <= _SERIES_MAX:
        return _erf_series(x)
    return 1.0 - _erfc_scalar(x)


def _vectorised(fn):
    vec = np.vectorize(fn, otypes=[np.float64])

    def wrapper(x):
        if np.ndim(x) == 0:
            return fn(float(x))
        return vec(np.asarray(x, dtype=np.float64))

    wrapper.__name__ = fn.__name__.strip("_").replace("_scalar", "")
    wrapper.__doc__ = fn.__doc__
    return wrapper


erf = _vectorised(_erf_scalar)
erfc = _vectorised(_erfc_scalar)
erfcx = _vectorised(_erfcx_scalar)

__all__ = ["erf", "erfc", "erfcx"]
