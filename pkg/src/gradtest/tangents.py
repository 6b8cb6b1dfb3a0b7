"""Score functions and local alternatives.

A tangent is a zero-mean, square-integrable score attached to a base
measure, stored as one value per atom or per segment. Scaling a tangent by
t bends the base into the reweighted measure with density factor
(1 + t*g/2)^2 / c(t), the constructive local alternative used throughout
the package. This module also provides the differentiability diagnostic for
those curves, the normalized score sum (central sequence), the expansion
remainder of the local log-likelihood ratio, and the allocation-weighted
inner product geometry.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import measures
from .errors import (
    BaseMismatch,
    DegenerateDensity,
    InvalidTangent,
    NonFiniteFunctionValue,
)
from .measures import (
    DiscreteMeasure,
    Measure,
    PiecewiseUniformMeasure,
    ProductSample,
)

__all__ = [
    "Tangent",
    "ProductTangent",
    "DWeightedGradient",
    "center",
    "curve_measure",
    "l2_derivative_residual",
    "central_sequence",
    "lan_remainder",
    "d_inner",
]

_CENTERING_TOLERANCE = 1e-10


def _cell_weights(base: Measure) -> np.ndarray:
    if isinstance(base, DiscreteMeasure):
        return base.weights
    return base.segment_masses


def _cell_count(base: Measure) -> int:
    if isinstance(base, DiscreteMeasure):
        return base.n_atoms
    return base.n_segments


def same_base(a: Measure, b: Measure) -> bool:
    """Structural identity of two measures (same kind, same arrays)."""
    if a is b:
        return True
    if isinstance(a, DiscreteMeasure) and isinstance(b, DiscreteMeasure):
        return (np.array_equal(a.locations, b.locations)
                and np.array_equal(a.weights, b.weights))
    if isinstance(a, PiecewiseUniformMeasure) and isinstance(b, PiecewiseUniformMeasure):
        return (np.array_equal(a.breakpoints, b.breakpoints)
                and np.array_equal(a.segment_masses, b.segment_masses))
    return False


@dataclass(frozen=True, eq=False)
class Tangent:
    """Zero-mean score on a base measure, one value per support cell.

    On a discrete base ``values[i]`` is the score at atom i; on a piecewise
    uniform base it is the constant score on segment i. The mean under the
    base must vanish to 1e-10; use :func:`center` to build tangents from
    raw functions.
    """

    base: Measure
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float).ravel()
        if vals.size != _cell_count(self.base):
            raise InvalidTangent(
                f"{vals.size} values for a base with {_cell_count(self.base)} cells"
            )
        if not np.all(np.isfinite(vals)):
            raise InvalidTangent("tangent values must be finite")
        mean = float(np.dot(_cell_weights(self.base), vals))
        if abs(mean) > _CENTERING_TOLERANCE:
            raise InvalidTangent(f"tangent mean under the base is {mean!r}, not 0")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def zero(cls, base: Measure) -> "Tangent":
        return cls(base, np.zeros(_cell_count(base)))

    @cached_property
    def l2_norm(self) -> float:
        """Root of the second moment under the base."""
        w = _cell_weights(self.base)
        return float(np.sqrt(max(0.0, float(np.dot(w, self.values ** 2)))))

    def values_at(self, points) -> np.ndarray:
        """Score values at data points (which must lie in the support)."""
        if isinstance(self.base, DiscreteMeasure):
            idx = measures.locate_atoms(self.base, points)
        else:
            idx = measures.locate_segments(self.base, points)
        return self.values[idx]

    def scaled(self, factor: float) -> "Tangent":
        return Tangent(self.base, self.values * float(factor))

    def inner(self, other: "Tangent") -> float:
        """L2 inner product under the shared base."""
        if not same_base(self.base, other.base):
            raise BaseMismatch("tangents live on different base measures")
        w = _cell_weights(self.base)
        return float(np.dot(w, self.values * other.values))


@dataclass(frozen=True, eq=False)
class ProductTangent:
    """Pair of tangents, one per marginal of a product footpoint."""

    g1: Tangent
    g2: Tangent

    @classmethod
    def zero(cls, p0: Measure, q0: Measure) -> "ProductTangent":
        return cls(Tangent.zero(p0), Tangent.zero(q0))

    def scaled(self, factor: float) -> "ProductTangent":
        return ProductTangent(self.g1.scaled(factor), self.g2.scaled(factor))


@dataclass(frozen=True, eq=False)
class DWeightedGradient:
    """Gradient components rescaled by the allocation fraction d.

    Stores k1_tilde/(1-d) and k2_tilde/d; its norm under the d-weighted
    inner product equals the null standard deviation sigma1 of the test
    statistic.
    """

    k_hat1: Tangent
    k_hat2: Tangent
    d: float

    def __post_init__(self) -> None:
        if not 0.0 < self.d < 1.0:
            raise InvalidTangent(f"allocation d must be in (0,1), got {self.d!r}")

    @classmethod
    def from_components(cls, k1_tilde: Tangent, k2_tilde: Tangent, d: float) -> "DWeightedGradient":
        if not 0.0 < d < 1.0:
            raise InvalidTangent(f"allocation d must be in (0,1), got {d!r}")
        return cls(k1_tilde.scaled(1.0 / (1.0 - d)), k2_tilde.scaled(1.0 / d), d)

    @cached_property
    def d_norm(self) -> float:
        """sqrt of the d-weighted squared norm; equals sigma1."""
        pair = ProductTangent(self.k_hat1, self.k_hat2)
        return float(np.sqrt(max(0.0, d_inner(pair, pair, self.d))))


def _raw_values(base: Measure, raw) -> np.ndarray:
    """Per-cell values of a raw score given as callable, array, or Tangent."""
    if isinstance(raw, Tangent):
        if not same_base(raw.base, base):
            raise BaseMismatch("tangent given on a different base measure")
        return np.array(raw.values)
    if callable(raw):
        if isinstance(base, DiscreteMeasure):
            points = base.locations
        else:
            points = 0.5 * (base.breakpoints[:-1] + base.breakpoints[1:])
        vals = measures._apply(raw, points)
    else:
        vals = np.asarray(raw, dtype=float).ravel()
        if vals.size != _cell_count(base):
            raise InvalidTangent(
                f"{vals.size} values for a base with {_cell_count(base)} cells"
            )
    if not np.all(np.isfinite(vals)):
        raise NonFiniteFunctionValue("raw score is not finite on the support")
    return vals


def center(base: Measure, raw) -> Tangent:
    """Project a raw score onto the zero-mean tangent space of the base.

    ``raw`` may be a callable (evaluated at atoms, or at segment midpoints
    for a piecewise uniform base), a per-cell value array, or an existing
    Tangent. Centering is idempotent.
    """
    vals = _raw_values(base, raw)
    centered = vals - float(np.dot(_cell_weights(base), vals))
    # Remove the rounding dust so the Tangent invariant holds exactly.
    residual = float(np.dot(_cell_weights(base), centered))
    centered = centered - residual
    return Tangent(base, centered)


def curve_measure(base: Measure, g: Tangent, t: float) -> Measure:
    """The local alternative at parameter t along tangent g.

    Reweights the base by (1 + t*g/2)^2 / c(t) with
    c(t) = 1 + t^2/4 * ||g||^2, which keeps the result a probability
    measure of the same kind for every real t. Atoms whose new weight is
    exactly zero (a root of the density factor) are dropped from the
    discrete representation.
    """
    if not same_base(g.base, base):
        raise BaseMismatch("tangent is not attached to this base measure")
    t = float(t)
    if t == 0.0:
        return base
    c = 1.0 + t * t * g.l2_norm ** 2 / 4.0
    factor = (1.0 + 0.5 * t * g.values) ** 2 / c
    if isinstance(base, DiscreteMeasure):
        new_weights = base.weights * factor
        keep = new_weights > 0.0
        return DiscreteMeasure(base.locations[keep], new_weights[keep])
    new_masses = base.segment_masses * factor
    return PiecewiseUniformMeasure(base.breakpoints, new_masses)


def l2_derivative_residual(base: Measure, g: Tangent, t: float) -> float:
    """L2 gap between the rescaled root-density increment and the tangent.

    Returns || (2/t) (sqrt(dP_t/dP) - 1) - g || in L2(base). For the curves
    built by :func:`curve_measure` this is O(t), vanishing as t -> 0, which
    is the defining property of an L2-differentiable path.
    """
    t = float(t)
    if t == 0.0:
        raise ValueError("t must be nonzero")
    if not same_base(g.base, base):
        raise BaseMismatch("tangent is not attached to this base measure")
    c = 1.0 + t * t * g.l2_norm ** 2 / 4.0
    sqrt_ratio = np.abs(1.0 + 0.5 * t * g.values) / np.sqrt(c)
    residual = (2.0 / t) * (sqrt_ratio - 1.0) - g.values
    w = _cell_weights(base)
    return float(np.sqrt(max(0.0, float(np.dot(w, residual ** 2)))))


def central_sequence(pt: ProductTangent, s: ProductSample) -> float:
    """Normalized score sum X_n = (sum g1(x_i) + sum g2(y_j)) / sqrt(n)."""
    total = float(np.sum(pt.g1.values_at(s.x))) + float(np.sum(pt.g2.values_at(s.y)))
    return total / np.sqrt(s.n)


def _log_density_factors(g: Tangent, t: float, points: np.ndarray) -> float:
    vals = g.values_at(points)
    inner = 1.0 + 0.5 * t * vals
    if np.any(inner == 0.0):
        raise DegenerateDensity(
            "curve density vanishes at a sampled point; log-likelihood is -inf"
        )
    c = 1.0 + t * t * g.l2_norm ** 2 / 4.0
    return float(2.0 * np.sum(np.log(np.abs(inner))) - points.size * np.log(c))


def lan_remainder(p0: Measure, q0: Measure, pt: ProductTangent,
                  theta: float, s: ProductSample) -> float:
    """Remainder of the quadratic expansion of the local log-likelihood.

    With t = theta / sqrt(n), returns

        sum log f_{t g1}(x_i) + sum log f_{t g2}(y_j)
            - theta * X_n + theta^2 * sigma^2 / 2,

    where sigma^2 = (1 - d_hat) ||g1||^2 + d_hat ||g2||^2. Under the null
    this is the quantity that must vanish in probability for local
    asymptotic normality. Exactly zero when theta = 0.
    """
    if not same_base(pt.g1.base, p0) or not same_base(pt.g2.base, q0):
        raise BaseMismatch("product tangent does not live on the footpoint")
    theta = float(theta)
    if theta == 0.0:
        return 0.0
    t = theta / np.sqrt(s.n)
    log_lr = (_log_density_factors(pt.g1, t, s.x)
              + _log_density_factors(pt.g2, t, s.y))
    x_n = central_sequence(pt, s)
    sigma2 = ((1.0 - s.d_hat) * pt.g1.l2_norm ** 2
              + s.d_hat * pt.g2.l2_norm ** 2)
    return float(log_lr - theta * x_n + 0.5 * theta * theta * sigma2)


def d_inner(a: ProductTangent, b: ProductTangent, d: float) -> float:
    """Allocation-weighted inner product of two product tangents.

    Equals (1-d) < a1, b1 >_{P0} + d < a2, b2 >_{Q0}. Symmetric, bilinear,
    positive semidefinite for d in (0,1).
    """
    if not 0.0 < d < 1.0:
        raise ValueError(f"d must be in (0,1), got {d!r}")
    return ((1.0 - d) * a.g1.inner(b.g1)) + d * a.g2.inner(b.g2)
