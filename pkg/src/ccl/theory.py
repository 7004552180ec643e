"""Selection-error analysis of uniform (SGD) versus loss-weighted (ESG) sampling.

Losses are modelled as 1-D random variables standing in for per-sample
gradients. For a weighting ``w(f)`` the error of drawing one sample instead
of averaging over all of them is

    E_w[(f - B)^2],   B = uniform mean of f,

the expectation taken under the distribution reweighted by ``w``. ``uniform``
is plain SGD, ``exponential`` uses ``w = exp(-lambda f)`` (ESG) and
``inverse`` uses ``w = 1/f``, the score rule used for curriculum sampling.

Half-normal losses are ``mu + sigma |Z|`` with ``Z`` standard normal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .exceptions import InvalidParamsError
from .schedule import cyclical_sizes
from .selection import LOSS_EPS
from .special import erfcx

__all__ = [
    "DistSpec",
    "WeightingSpec",
    "ErrorEstimate",
    "analytic_error",
    "quadrature_error",
    "mc_error",
    "esg_sgd_difference",
    "sign_change_product",
    "region_grid",
    "golden_section_max",
    "theorem4_bound_check",
    "cyclical_error_simulation",
]

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
PI_E = math.pi * math.e


@dataclass(frozen=True)
class DistSpec:
    family: str
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.family not in ("normal", "half_normal"):
            raise InvalidParamsError(f"unknown family {self.family!r}")
        if not self.sigma > 0:
            raise InvalidParamsError("sigma must be positive")

    def sample(self, n, rng):
        z = rng.standard_normal(n)
        if self.family == "half_normal":
            z = np.abs(z)
        return self.mu + self.sigma * z

    def pdf(self, f):
        z = (f - self.mu) / self.sigma
        dens = math.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi))
        if self.family == "half_normal":
            return 2.0 * dens if z >= 0 else 0.0
        return dens

    @property
    def support(self):
        lo = self.mu if self.family == "half_normal" else -math.inf
        return lo, math.inf

    @property
    def mean(self):
        if self.family == "half_normal":
            return self.mu + self.sigma * SQRT_2_OVER_PI
        return self.mu


@dataclass(frozen=True)
class WeightingSpec:
    kind: str = "uniform"
    lam: float = 1.0

    def __post_init__(self):
        if self.kind not in ("uniform", "exponential", "inverse"):
            raise InvalidParamsError(f"unknown weighting {self.kind!r}")
        if self.kind == "exponential" and not self.lam > 0:
            raise InvalidParamsError("lambda must be positive")

    def weights(self, f):
        """Unnormalised weights for an array of losses."""
        if self.kind == "uniform":
            return np.ones_like(f)
        if self.kind == "exponential":
            # shift by the minimum; cancels after normalisation
            return np.exp(-self.lam * (f - f.min()))
        return 1.0 / np.maximum(f, LOSS_EPS)

    def weight(self, f):
        if self.kind == "uniform":
            return 1.0
        if self.kind == "exponential":
            return math.exp(-self.lam * f)
        return 1.0 / max(f, LOSS_EPS)


@dataclass(frozen=True)
class ErrorEstimate:
    value: float
    std_error: float
    n_samples: int


def _half_normal_c(sigma, lam):
    # sigma sqrt(2) exp(-s^2/2) / (sqrt(pi) erfc(s / sqrt 2)), s = sigma lam
    return sigma * math.sqrt(2.0 / math.pi) / float(erfcx(sigma * lam / math.sqrt(2.0)))


def analytic_error(dist, weighting):
    """Closed-form expected selection error.

    Supported: normal and half-normal losses under uniform or exponential
    weighting. Inverse weighting has no closed form.
    """
    s2 = dist.sigma**2
    if weighting.kind == "inverse":
        raise InvalidParamsError("no closed form for inverse weighting; use mc_error")
    if dist.family == "normal":
        if weighting.kind == "uniform":
            return s2
        return weighting.lam**2 * s2**2 + s2
    if weighting.kind == "uniform":
        return s2 * (1.0 - 2.0 / math.pi)
    lam = weighting.lam
    C = _half_normal_c(dist.sigma, lam)
    bias = dist.sigma * SQRT_2_OVER_PI + s2 * lam - C
    variance = s2 + C * s2 * lam - C * C
    return bias * bias + variance


def quadrature_error(dist, weighting):
    """The same expectation by adaptive quadrature over the loss density.

    Evaluates ``int w (f - B)^2 p df / int w p df`` directly. Works for every
    weighting, including inverse when the density keeps clear of zero.
    """
    lo, hi = dist.support
    B = dist.mean
    if dist.family == "normal":
        lo, hi = dist.mu - 40 * dist.sigma, dist.mu + 40 * dist.sigma
    else:
        hi = dist.mu + 40 * dist.sigma
    if weighting.kind == "inverse" and lo <= 0:
        raise InvalidParamsError("inverse weighting needs positive support")

    def w(f):
        if weighting.kind == "exponential":
            # exp(-lam (f - lo)) keeps the integrand in range
            return math.exp(-weighting.lam * (f - lo))
        return weighting.weight(f)

    opts = dict(epsabs=0.0, epsrel=1e-12, limit=500)
    mass, _ = integrate.quad(lambda f: w(f) * dist.pdf(f), lo, hi, **opts)
    num, _ = integrate.quad(lambda f: w(f) * (f - B) ** 2 * dist.pdf(f), lo, hi, **opts)
    return num / mass


def _weighted_error(f, weighting):
    B = f.mean()
    w = weighting.weights(f)
    return float(np.dot(w, (f - B) ** 2) / w.sum())


def mc_error(dist, weighting, n=10**6, seed=0, n_boot=100):
    """Monte-Carlo estimate of the selection error from ``n`` drawn losses.

    The standard error comes from ``n_boot`` bootstrap resamples of the
    population (0 disables it).
    """
    if int(n) != n or n < 10**4:
        raise InvalidParamsError("n must be an integer >= 10000")
    rng = np.random.default_rng(seed)
    f = dist.sample(int(n), rng)
    value = _weighted_error(f, weighting)
    se = 0.0
    if n_boot:
        boots = np.empty(n_boot)
        for b in range(n_boot):
            boots[b] = _weighted_error(f[rng.integers(0, f.size, f.size)], weighting)
        se = float(boots.std(ddof=1))
    return ErrorEstimate(value, se, int(n))


def esg_sgd_difference(sigma, lam):
    """E_esg - E_sgd for half-normal losses (location does not enter)."""
    dist = DistSpec("half_normal", 0.0, sigma)
    return analytic_error(dist, WeightingSpec("exponential", lam)) - analytic_error(
        dist, WeightingSpec("uniform")
    )


def sign_change_product(lo=0.5, hi=10.0):
    """The value of sigma*lambda where the half-normal difference turns positive.

    The difference is ``sigma^2 g(sigma lambda)`` so only the product matters.
    """
    return optimize.brentq(lambda s: esg_sgd_difference(1.0, s), lo, hi, xtol=1e-14)


def region_grid(sigma_range=(0.1, 4.0), lambda_range=(0.1, 4.0), steps=32):
    """Rows of ``(sigma, lambda, E_esg - E_sgd)`` on a ``steps x steps`` grid."""
    (s0, s1), (l0, l1) = sigma_range, lambda_range
    if not (0 < s0 < s1 and 0 < l0 < l1) or steps < 2:
        raise InvalidParamsError("ranges must be positive and increasing, steps >= 2")
    sig = np.linspace(s0, s1, steps)
    lam = np.linspace(l0, l1, steps)
    rows = [(s, l, esg_sgd_difference(s, l)) for s in sig for l in lam]
    return np.array(rows)


def golden_section_max(fn, a, b, tol=1e-9):
    """Maximiser of a unimodal ``fn`` on ``[a, b]``."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    while abs(b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    return (a + b) / 2.0


@dataclass
class Theorem4Report:
    argmax: float
    max_value: float
    threshold: float
    mu: float
    rows: list = field(default_factory=list)

    @property
    def all_hold(self):
        return all(r["holds"] for r in self.rows)


def theorem4_bound_check(sigma_values=(0.5, 1.0, 2.0, 4.0), n=10**6, seeds=range(5), mu=1.0):
    """Inverse-loss weighting against uniform for half-normal losses.

    ``max ln(x)/x`` is located by golden-section search. For each sigma below
    ``pi * e`` and each seed, the inverse-weighted error is compared with the
    uniform error on the same population. ``mu`` is the half-normal location;
    with ``mu = 0`` the 1/f weights diverge at the lower edge.
    """
    x_star = golden_section_max(lambda x: math.log(x) / x, 1.0, 10.0, tol=1e-10)
    report = Theorem4Report(x_star, math.log(x_star) / x_star, PI_E, mu)
    for sigma in sigma_values:
        if not sigma > 0:
            raise InvalidParamsError("sigma values must be positive")
        dist = DistSpec("half_normal", mu, sigma)
        for seed in seeds:
            rng = np.random.default_rng(seed)
            f = dist.sample(int(n), rng)
            inv = _weighted_error(f, WeightingSpec("inverse"))
            uni = _weighted_error(f, WeightingSpec("uniform"))
            report.rows.append(
                dict(sigma=sigma, seed=seed, inverse=inv, uniform=uni,
                     below_threshold=sigma < PI_E, holds=(inv < uni) or sigma >= PI_E)
            )
    return report


@dataclass
class SimulationTrace:
    fractions: np.ndarray
    regimes: list
    ccl_errors: np.ndarray
    uniform_errors: np.ndarray

    @property
    def ccl_total(self):
        return float(self.ccl_errors.sum())

    @property
    def uniform_total(self):
        return float(self.uniform_errors.sum())


def _regime_population(regime, z, mu, sigma):
    if regime == "half_normal":
        return mu + sigma * np.abs(z)
    # normal with the half-normal's mean and variance: regimes differ in shape only
    return mu + sigma * (SQRT_2_OVER_PI + math.sqrt(1.0 - 2.0 / math.pi) * z)


def cyclical_error_simulation(n=10**5, steps=100, seed=0, schedule=None, mu=3.0,
                              sigma=1.0, switch="phase", weighting=None):
    """Cumulative selection error of the cyclical policy versus always-uniform.

    The loss population is either normal-like or half-normal-like (same mean
    and variance). It starts normal. A uniform step leaves it half-normal; a
    weighted step on a half-normal population returns it to normal. With
    ``switch="phase"`` that return happens when a run of weighted steps ends
    (normal at the cycle tops, half-normal through the dips); with
    ``switch="step"`` it happens after every weighted step.

    The cyclical policy applies uniform weights when the schedule fraction is
    1 and ``weighting`` (inverse loss by default) otherwise. The uniform policy
    follows its own trajectory. Both see the same standard-normal draws each
    step.
    """
    if int(n) != n or n < 10**4 or steps < 1:
        raise InvalidParamsError("need n >= 10000 and steps >= 1")
    if switch not in ("phase", "step"):
        raise InvalidParamsError(f"unknown switch mode {switch!r}")
    if not (mu >= 0 and sigma > 0):
        raise InvalidParamsError("need mu >= 0 and sigma > 0")
    weighting = weighting or WeightingSpec("inverse")
    fractions = np.asarray(
        cyclical_sizes(0.25, 1.0, 0.5, steps) if schedule is None else schedule, dtype=float
    )
    if fractions.size != steps:
        raise InvalidParamsError("schedule length must equal steps")
    uniform = WeightingSpec("uniform")
    rng = np.random.default_rng(seed)

    ccl_state = uni_state = "normal"
    regimes, ccl_err, uni_err = [], np.empty(steps), np.empty(steps)
    for t in range(steps):
        z = rng.standard_normal(int(n))
        regimes.append(ccl_state)
        f = _regime_population(ccl_state, z, mu, sigma)
        if fractions[t] >= 1.0:
            ccl_err[t] = _weighted_error(f, uniform)
            ccl_state = "half_normal"
        else:
            ccl_err[t] = _weighted_error(f, weighting)
            run_ends = t + 1 >= steps or fractions[t + 1] >= 1.0
            if ccl_state == "half_normal" and (switch == "step" or run_ends):
                ccl_state = "normal"
        g = _regime_population(uni_state, z, mu, sigma)
        uni_err[t] = _weighted_error(g, uniform)
        uni_state = "half_normal"
    return SimulationTrace(fractions, regimes, ccl_err, uni_err)
