"""Stochastic model of the ensemble energy and the derived stopping rule.

Member accuracies are treated as an i.i.d. sample (beta-fitted when a KS test
allows it, empirical moments otherwise).  From the mean and variance of that
sample we get closed forms for the mean and variance of the majority-vote
accuracy at an estimated ensemble size, fit a beta (or fall back to a normal)
law to it, and read off the STOP threshold and the MAXSTEP escape bound.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import decision_curve
from .errors import (
    DegenerateVariance,
    DomainError,
    InvalidMoments,
    TooFewInteriorPoints,
    TooFewSamples,
)
from .special import inv_reg_inc_beta, ks_critical_value, ks_statistic, normal_quantile, reg_inc_beta

BETA_FIT = "beta"
EMPIRICAL = "empirical"

ELL_BETA = "beta"
ELL_MEAN_COST = "mean-cost"
ELL_POISSON = "poisson-quantile"
ELL_ESTIMATORS = (ELL_BETA, ELL_MEAN_COST, ELL_POISSON)

# Pearson skewness -> stopping probability, upper-closed rows.
SKEWNESS_TABLE = ((1.0, 0.6), (2.5, 0.8), (3.5, 0.9), (math.inf, 0.95))
NORMAL_STOP_QUANTILE = 0.9
POISSON_Z = 1.64
STIRLING_RATIO = 0.25
MAXSTEP_FLOOR = 1000
MAXSTEP_CAP = 10**9
_EXACT_COMB_MAX = 1000


def _ceil(x: float) -> int:
    # guards against ceil(4.000000000000001) == 5 from rounding noise
    return math.ceil(x - 1e-9 * max(1.0, abs(x)))


def _clamp(ell: int, n: int | None) -> int:
    ell = max(1, ell)
    return min(ell, n) if n is not None else ell


def beta_moments(alpha: float, beta: float) -> tuple[float, float]:
    s = alpha + beta
    return alpha / s, alpha * beta / (s * s * (s + 1.0))


@dataclass(frozen=True)
class AccuracyDistribution:
    source: str
    mean: float
    variance: float
    alpha: float | None = None
    beta: float | None = None
    ks_statistic: float | None = None
    ks_critical: float | None = None
    n: int = 0

    def __post_init__(self):
        if not (0.0 <= self.mean <= 1.0) or self.variance < 0:
            raise InvalidMoments(f"invalid accuracy moments ({self.mean}, {self.variance})")
        if self.variance > self.mean * (1.0 - self.mean) + 1e-12:
            raise InvalidMoments("variance exceeds mean*(1-mean)")

    @property
    def is_beta(self) -> bool:
        return self.source == BETA_FIT

    def to_dict(self) -> dict:
        return asdict(self)


def fit_accuracy_distribution(accuracies: Sequence[float], significance: float = 0.05) -> AccuracyDistribution:
    """Beta fit by the method of moments, kept only if KS does not reject it.

    Values on the boundary of [0, 1], fewer than five observations, a
    variance no beta law can have, or a KS rejection all lead to the
    empirical moments (unbiased variance).
    """
    x = np.asarray(accuracies, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise TooFewSamples(f"need at least 2 accuracies, got {n}")
    mu = math.fsum(x) / n
    var = math.fsum((x - mu) ** 2) / (n - 1)
    empirical = AccuracyDistribution(EMPIRICAL, mu, min(var, mu * (1.0 - mu)), n=n)
    if n < 5 or np.any(x <= 0.0) or np.any(x >= 1.0) or not 0.0 < var < mu * (1.0 - mu):
        return empirical
    common = mu * (1.0 - mu) / var - 1.0
    alpha, beta = mu * common, (1.0 - mu) * common
    d = ks_statistic(np.sort(x).tolist(), lambda v: reg_inc_beta(alpha, beta, v))
    crit = ks_critical_value(n, significance)
    if d > crit:
        return AccuracyDistribution(EMPIRICAL, mu, var, ks_statistic=d, ks_critical=crit, n=n)
    bmean, bvar = beta_moments(alpha, beta)
    return AccuracyDistribution(BETA_FIT, bmean, bvar, alpha, beta, d, crit, n)


def _log_comb(n: int, k) -> np.ndarray | float:
    k = np.asarray(k)
    from scipy.special import gammaln  # vectorised lgamma

    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _xlog(e, logv):
    e = np.asarray(e, dtype=float)
    with np.errstate(invalid="ignore"):
        return np.where(e == 0, 0.0, e * logv)


def mean_q(mu_p: float, ell: int) -> float:
    """Mean majority-vote accuracy of ``ell`` i.i.d. members with mean accuracy ``mu_p``."""
    if not 0.0 <= mu_p <= 1.0:
        raise DomainError(f"mu_p must lie in [0, 1], got {mu_p!r}")
    if ell < 1:
        raise DomainError("ell must be positive")
    if mu_p == 0.5 and ell % 2:
        return 0.5
    # sum the smaller tail; above 1/2 that is the complement of the majority
    upper = mu_p <= 0.5
    ks = range(ell // 2 + 1, ell + 1) if upper else range(0, ell // 2 + 1)
    if ell <= _EXACT_COMB_MAX:
        # exact integer coefficients keep symmetric cases exact
        q = 1.0 - mu_p
        tail = math.fsum(math.comb(ell, k) * mu_p**k * q ** (ell - k) for k in ks)
    else:
        k = np.arange(ks.start, ks.stop)
        logs = _log_comb(ell, k) + _xlog(k, _log(mu_p)) + _xlog(ell - k, _log(1.0 - mu_p))
        tail = math.fsum(np.exp(logs))
    return min(1.0, tail) if upper else max(0.0, 1.0 - tail)


def var_q(mu_p: float, var_p: float, ell: int) -> float:
    """Variance of the majority-vote accuracy over i.i.d. member accuracies.

    Triple sum over the number ``k`` of correct votes in one outcome, the
    overlap ``m`` with a second outcome and the extra correct votes ``h`` of
    the second, weighted by the mixed second moments of the accuracy.
    """
    if ell < 1:
        raise DomainError("ell must be positive")
    s_t = var_p + mu_p * mu_p
    s_f = var_p + (1.0 - mu_p) ** 2
    s_tf = mu_p * (1.0 - mu_p) - var_p
    if var_p < 0 or not 0.0 <= mu_p <= 1.0 or s_tf < -1e-12:
        raise InvalidMoments(f"({mu_p}, {var_p}) are not the moments of a [0, 1] variable")
    if var_p == 0.0:
        # deterministic accuracies give a deterministic energy
        return 0.0
    s_tf = max(s_tf, 0.0)
    l_t, l_f, l_tf = _log(s_t), _log(s_f), _log(s_tf)
    k_ell = ell // 2 + 1
    pieces = []
    for k in range(k_ell, ell + 1):
        base_k = _log_comb(ell, k)
        for m in range(max(1, k_ell - (ell - k)), k + 1):
            h = np.arange(max(0, k_ell - m), ell - k + 1)
            logs = (
                base_k
                + _log_comb(k, m)
                + _log_comb(ell - k, h)
                + _xlog(m, l_t)
                + _xlog(k - m + h, l_tf)
                + _xlog(ell - k - h, l_f)
            )
            pieces.append(np.exp(logs))
    second = math.fsum(np.concatenate(pieces)) if pieces else 0.0
    mu_q = mean_q(mu_p, ell)
    out = second - mu_q * mu_q
    if out < 0:
        if out < -1e-10:
            raise InvalidMoments(f"negative variance {out} from moments ({mu_p}, {var_p})")
        out = 0.0
    return out


def estimate_ell_beta(alpha_p: float, beta_p: float, T: float, n: int | None = None) -> int:
    """Ensemble size expected within budget ``T`` under the conditional-exponential cost model."""
    if not beta_p > 1.0:
        raise DomainError(f"expected cost is infinite for beta_p <= 1 (got {beta_p})")
    if not T > 0:
        raise DomainError("budget must be positive")
    return _clamp(_ceil(T * (beta_p - 1.0) / (alpha_p + beta_p - 1.0)), n)


def expected_ell_poisson_rate(alpha_p: float, beta_p: float, T: float) -> float:
    """Alternative E(ell_T) = T * beta/(alpha+beta); reported for inspection only."""
    return T * beta_p / (alpha_p + beta_p)


def estimate_ell_mean_cost(costs: Sequence[float], T: float) -> int:
    c = np.asarray(costs, dtype=float)
    mean_cost = math.fsum(c) / c.size
    return _clamp(_ceil(T / mean_cost), c.size)


def estimate_ell_poisson_quantile(costs: Sequence[float], T: float) -> int:
    c = np.asarray(costs, dtype=float)
    rate = T / math.fsum(c)
    return _clamp(_ceil(rate + 0.5 + POISSON_Z * math.sqrt(rate)), c.size)


def q_beta_params(mu_q: float, var_q: float) -> tuple[float, float]:
    if not 0.0 < mu_q < 1.0 or not 0.0 < var_q < mu_q * (1.0 - mu_q):
        raise DegenerateVariance(f"no beta law has mean {mu_q} and variance {var_q}")
    alpha = ((1.0 - mu_q) / var_q - 1.0 / mu_q) * mu_q * mu_q
    return alpha, alpha * (1.0 / mu_q - 1.0)


def mode_and_skewness(alpha_q: float, beta_q: float, sigma_q: float) -> tuple[float, float]:
    if not (alpha_q > 1.0 and beta_q > 1.0 and sigma_q > 0.0):
        raise DomainError("mode/skewness need alpha > 1, beta > 1 and sigma > 0")
    nu = (alpha_q - 1.0) / (alpha_q + beta_q - 2.0)
    return nu, (1.0 - nu) / sigma_q


def stop_probability(gamma: float) -> float:
    for upper, rho in SKEWNESS_TABLE:
        if gamma <= upper:
            return rho
    return SKEWNESS_TABLE[-1][1]


def maxstep_bound(n: int, ell: int, floor: int = MAXSTEP_FLOOR, cap: int = MAXSTEP_CAP) -> int:
    """Number of subsets of size ``ell``: Stirling-style n^ell/ell! when ell/n is small."""
    if ell / n <= STIRLING_RATIO:
        raw = round(Fraction(n**ell, math.factorial(ell)))
    else:
        raw = math.comb(n, ell)
    return int(min(cap, max(floor, raw)))


@dataclass(frozen=True)
class EnergyDistribution:
    ell_hat: int
    mean: float
    variance: float
    shape: str
    alpha: float | None = None
    beta: float | None = None
    mode: float | None = None
    skewness: float | None = None
    stop_prob: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class StopRule:
    """STOP threshold and MAXSTEP escape bound.

    ``stop = math.inf`` disables the threshold so that only MAXSTEP ends a
    search.
    """

    stop: float
    maxstep: int
    derivation: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.maxstep < 1:
            raise ValueError("maxstep must be at least 1")
        if not (0.0 <= self.stop <= 1.0 or self.stop == math.inf):
            raise ValueError(f"stop must lie in [0, 1] or be inf, got {self.stop}")

    @classmethod
    def maxstep_only(cls, maxstep: int) -> "StopRule":
        return cls(math.inf, int(maxstep), {"branch": "none"})

    def with_maxstep(self, maxstep: int) -> "StopRule":
        return StopRule(self.stop, int(maxstep), dict(self.derivation, maxstep_override=int(maxstep)))

    def to_dict(self) -> dict:
        stop = None if self.stop == math.inf else self.stop
        return {"stop": stop, "maxstep": self.maxstep, "derivation": self.derivation}


def estimate_ell(
    dist: AccuracyDistribution,
    n: int,
    budget: float | None = None,
    costs: Sequence[float] | None = None,
    estimator: str | None = None,
) -> tuple[int, str]:
    """Estimated ensemble size and the name of the estimator actually used."""
    if budget is None:
        return n, "pool-size"
    if costs is None:
        raise ValueError("a budget needs member costs to estimate the ensemble size")
    if estimator is None:
        estimator = ELL_BETA if dist.is_beta else ELL_MEAN_COST
    if estimator not in ELL_ESTIMATORS:
        raise ValueError(f"unknown ensemble-size estimator {estimator!r}")
    if estimator == ELL_BETA:
        if dist.is_beta and dist.beta > 1.0:
            return estimate_ell_beta(dist.alpha, dist.beta, budget, n), ELL_BETA
        estimator = ELL_MEAN_COST
    if estimator == ELL_POISSON:
        return estimate_ell_poisson_quantile(costs, budget), ELL_POISSON
    return estimate_ell_mean_cost(costs, budget), ELL_MEAN_COST


def energy_distribution(dist: AccuracyDistribution, ell_hat: int, curve=None) -> EnergyDistribution:
    """Mean/variance of the energy at ``ell_hat`` and the fitted shape.

    With a constraint ``curve`` the mean comes from the curve-weighted binomial
    mixture; the variance always uses the plain majority formula.
    """
    if curve is None:
        mu = mean_q(dist.mean, ell_hat)
    else:
        mu = constrained_mean_q(curve, dist.mean, ell_hat)
    var = var_q(dist.mean, dist.variance, ell_hat)
    try:
        a, b = q_beta_params(mu, var)
    except DegenerateVariance:
        return EnergyDistribution(ell_hat, mu, var, "normal")
    if not 1.0 < b < a:
        return EnergyDistribution(ell_hat, mu, var, "normal", a, b)
    nu, gamma = mode_and_skewness(a, b, math.sqrt(var))
    return EnergyDistribution(ell_hat, mu, var, "beta", a, b, nu, gamma, stop_probability(gamma))


def derive_stop_rule(
    dist: AccuracyDistribution,
    n: int,
    budget: float | None = None,
    costs: Sequence[float] | None = None,
    *,
    ell_estimator: str | None = None,
    curve=None,
    maxstep_floor: int = MAXSTEP_FLOOR,
    maxstep_cap: int = MAXSTEP_CAP,
) -> StopRule:
    """STOP/MAXSTEP for a pool of ``n`` members.

    Without a budget the ensemble size estimate is the pool size.  The beta
    branch is used when the fitted shape satisfies ``1 < beta_q < alpha_q``;
    otherwise STOP is the 0.9 normal quantile rule, capped at 1.
    """
    ell_hat, used = estimate_ell(dist, n, budget, costs, ell_estimator)
    shape = energy_distribution(dist, ell_hat, curve)
    if shape.shape == "beta":
        stop = inv_reg_inc_beta(shape.alpha, shape.beta, shape.stop_prob)
    else:
        z = normal_quantile(NORMAL_STOP_QUANTILE)
        stop = min(1.0, z * math.sqrt(shape.variance) / math.sqrt(ell_hat) + shape.mean)
    maxstep = maxstep_bound(n, ell_hat, maxstep_floor, maxstep_cap)
    derivation = {
        "branch": shape.shape,
        "ell_estimator": used,
        "ell_hat": ell_hat,
        "accuracy_source": dist.source,
        "mu_p": dist.mean,
        "var_p": dist.variance,
        "energy": shape.to_dict(),
        "maxstep_rule": "stirling" if ell_hat / n <= STIRLING_RATIO else "binomial",
        "constraint_curve": list(curve) if curve is not None else None,
    }
    return StopRule(stop, maxstep, derivation)


def fit_constraint_curve(weights: Sequence[float]) -> tuple[float, float]:
    """Least-squares fit of ``b / (b + (x/(1-x))**a)`` to decision weights.

    Linear in log-odds: ``ln(1/F - 1) = a*ln(x/(1-x)) - ln b`` at ``x = k/l``,
    using only entries strictly inside (0, 1).
    """
    w = np.asarray(weights, dtype=float)
    ell = w.size - 1
    k = np.arange(w.size)
    inner = (w > 0.0) & (w < 1.0) & (k > 0) & (k < ell)
    if inner.sum() < 3:
        raise TooFewInteriorPoints(f"need 3 interior weights, got {int(inner.sum())}")
    x = k[inner] / ell
    u = np.log(x / (1.0 - x))
    y = np.log(1.0 / w[inner] - 1.0)
    a, c = np.polyfit(u, y, 1)
    return float(a), float(math.exp(-c))


def constrained_mean_q(curve, mu_p: float, ell: int | None = None) -> float:
    """Mean energy under the constraint curve.

    With ``ell`` this is the expectation of the curve-weighted vote count,
    ``sum_k F(k/ell) C(ell,k) mu^k (1-mu)^(ell-k)``; without it the curve is
    evaluated at ``mu_p`` directly.
    """
    if not 0.0 < mu_p < 1.0:
        raise DomainError(f"mu_p must lie in (0, 1), got {mu_p!r}")
    a, b = curve
    if ell is None:
        return float(decision_curve(mu_p, a, b))
    k = np.arange(ell + 1)
    pmf = np.exp(_log_comb(ell, k) + k * math.log(mu_p) + (ell - k) * math.log1p(-mu_p))
    return min(1.0, math.fsum(decision_curve(k / ell, a, b) * pmf))
