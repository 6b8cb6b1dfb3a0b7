"""Closed-form limiting quantities for the gradient-based two-sample test.

Normal CDF and quantile, the one- and two-sided limiting power curves, the
variance-minimizing sample allocation, the best-possible (likelihood-ratio)
power along a curve, and the Hellinger distance of a unit-variance Gaussian
shift family.
"""
from __future__ import annotations

import math
from statistics import NormalDist

from .errors import DegenerateGradient, DegenerateTangent, DomainError

__all__ = [
    "normal_cdf",
    "normal_quantile",
    "power_one_sided",
    "power_two_sided",
    "d_opt",
    "np_benchmark_power",
    "gauss_shift_hellinger",
]

_STANDARD_NORMAL = NormalDist()
_SQRT2 = math.sqrt(2.0)


def normal_cdf(x: float) -> float:
    """Standard normal distribution function."""
    return 0.5 * (1.0 + math.erf(float(x) / _SQRT2))


def normal_quantile(p: float) -> float:
    """Inverse of the standard normal distribution function on (0, 1)."""
    p = float(p)
    if not (0.0 < p < 1.0) or math.isnan(p):
        raise DomainError(f"quantile needs p in (0, 1), got {p}")
    return _STANDARD_NORMAL.inv_cdf(p)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0) or math.isnan(alpha):
        raise DomainError(f"level must lie in (0, 1), got {alpha}")
    return alpha


def _check_sigma1(sigma1: float) -> float:
    sigma1 = float(sigma1)
    if not (sigma1 > 0.0):
        raise DegenerateGradient(
            f"limiting power needs a positive standard deviation, got {sigma1}"
        )
    return sigma1


def power_one_sided(theta: float, sigma1: float, alpha: float) -> float:
    """Limiting power of the one-sided test at local parameter theta.

    ``sigma1`` is the null standard deviation of the test statistic, so at
    theta = 0 the value is exactly the level.
    """
    sigma1 = _check_sigma1(sigma1)
    alpha = _check_alpha(alpha)
    return normal_cdf(float(theta) / sigma1 - normal_quantile(1.0 - alpha))


def power_two_sided(theta: float, sigma1: float, alpha: float) -> float:
    """Limiting power of the two-sided test; even in theta with minimum
    alpha at theta = 0."""
    sigma1 = _check_sigma1(sigma1)
    alpha = _check_alpha(alpha)
    u = normal_quantile(1.0 - alpha / 2.0)
    z = float(theta) / sigma1
    return normal_cdf(z - u) + normal_cdf(-z - u)


def d_opt(norm1: float, norm2: float) -> float:
    """Allocation fraction for the second sample minimizing the limiting
    variance, norm2 / (norm1 + norm2), from the two marginal gradient
    norms."""
    norm1 = float(norm1)
    norm2 = float(norm2)
    if norm1 < 0.0 or norm2 < 0.0 or math.isnan(norm1) or math.isnan(norm2):
        raise DomainError("gradient norms must be nonnegative")
    if norm1 == 0.0 or norm2 == 0.0:
        raise DegenerateGradient(
            "the optimal allocation needs both marginal gradient norms positive"
        )
    return norm2 / (norm1 + norm2)


def np_benchmark_power(t: float, g1_norm2: float, g2_norm2: float,
                       d: float, alpha: float) -> float:
    """Best attainable limiting power along the curve with the given
    tangent, from the likelihood-ratio test of the curve endpoints.

    ``g1_norm2`` and ``g2_norm2`` are squared marginal tangent norms; the
    benchmark upper-bounds the gradient test's power at the implied local
    parameter and matches it when the tangent is proportional to the
    allocation-weighted gradient.
    """
    alpha = _check_alpha(alpha)
    d = float(d)
    if not (0.0 < d < 1.0):
        raise DomainError(f"allocation fraction must lie in (0, 1), got {d}")
    g1_norm2 = float(g1_norm2)
    g2_norm2 = float(g2_norm2)
    if g1_norm2 < 0.0 or g2_norm2 < 0.0:
        raise DomainError("squared tangent norms must be nonnegative")
    sigma_sq = (1.0 - d) * g1_norm2 + d * g2_norm2
    if sigma_sq <= 0.0:
        raise DegenerateTangent("the benchmark needs a tangent with positive norm")
    return normal_cdf(float(t) * math.sqrt(sigma_sq) - normal_quantile(1.0 - alpha))


def gauss_shift_hellinger(h_distance: float) -> float:
    """Hellinger distance of a Gaussian shift experiment with shift norm
    ``h_distance``: (1 - exp(-h_distance^2 / 8))^(1/2).

    For the real line this is the Hellinger distance between N(0, 1) and
    N(h_distance, 1).
    """
    h_distance = float(h_distance)
    if h_distance < 0.0 or math.isnan(h_distance):
        raise DomainError(f"shift norm must be nonnegative, got {h_distance}")
    return math.sqrt(-math.expm1(-h_distance * h_distance / 8.0))
