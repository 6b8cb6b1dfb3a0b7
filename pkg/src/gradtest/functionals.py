"""Statistical functionals of a product measure and their gradients.

Four families are implemented, covering every functional the test machinery
works with:

* ``VonMisesFunctional``: k(P, Q) = integral of a kernel h(x, y) against
  P (x) Q.
* ``WilcoxonFunctional``: the stochastic-ordering functional
  k(P, Q) = (P (x) Q)(Y <= X), kept as its own variant so the left-limit
  CDF handling stays exact on atomic measures.
* ``InvariantFunctional``: k(P, Q) = integral of h(F_Q(x)) dP(x) for a
  differentiable h with bounded derivative; invariant under strictly
  increasing transformations of the data scale.
* ``CompositeFunctional``: f(k1(P), k2(Q)) for f in {sum, product,
  quotient} of two one-sample means.

Gradients are pairs of zero-mean scores (one per marginal) computed in
closed form on atomic footpoints; their defining property, matching the
derivative of k along every local-alternative curve, is what the test
statistic is built from.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np

from . import measures
from .errors import (
    ConfigError,
    DegenerateGradient,
    NonFiniteFunctionValue,
    QuotientByZero,
    UnsupportedFootpoint,
)
from .measures import (
    DiscreteMeasure,
    Measure,
    PiecewiseUniformMeasure,
    cdf,
    cdf_polynomial,
    integrate,
    mean,
    product_integrate,
)
from .tangents import DWeightedGradient, ProductTangent, Tangent, center, curve_measure

__all__ = [
    "Kernel1",
    "Kernel2",
    "kernel1_from_name",
    "kernel2_from_name",
    "REGISTRY_NAMES",
    "VonMisesFunctional",
    "WilcoxonFunctional",
    "InvariantFunctional",
    "CompositeFunctional",
    "Functional",
    "GradientPair",
    "evaluate",
    "gradient",
    "gradient_tangent_inner",
    "directional_derivative",
    "functional_to_dict",
    "functional_from_dict",
]

# Total squared gradient norm at or below this is treated as degenerate.
_DEGENERACY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Kernel2:
    """Named two-argument kernel from the registry; callable as h(x, y)."""

    name: str
    fn: Callable
    parameter: Optional[float] = None

    def __call__(self, x, y):
        return self.fn(x, y)


@dataclass(frozen=True)
class Kernel1:
    """Named one-argument function from the registry.

    Carries its derivative and a derivative bound when differentiable
    (required for invariant functionals) and polynomial coefficients when
    it is a polynomial (enables exact continuous-footpoint evaluation).
    """

    name: str
    fn: Callable
    derivative: Optional[Callable] = None
    derivative_bound: Optional[float] = None
    poly: Optional[tuple] = None
    parameter: Optional[float] = None

    def __call__(self, z):
        return self.fn(z)


_NAME_WITH_PARAM = re.compile(r"^([a-z_]+)(?:\(([-+0-9.eE]+)\))?$")

REGISTRY_NAMES = "x_ge_y, x_minus_y, product_xy, indicator_leq(q), id, neg_id, square"


def _parse_name(text: str):
    match = _NAME_WITH_PARAM.match(text.strip())
    if not match:
        raise ConfigError(
            f"unrecognized kernel {text!r}; registry: {REGISTRY_NAMES}"
        )
    base, param = match.group(1), match.group(2)
    return base, (float(param) if param is not None else None)


def kernel2_from_name(text: str) -> Kernel2:
    """Look up a two-argument kernel by registry name."""
    base, param = _parse_name(text)
    if base == "x_ge_y":
        return Kernel2("x_ge_y", lambda x, y: (np.asarray(x) >= np.asarray(y)).astype(float))
    if base == "x_minus_y":
        return Kernel2("x_minus_y", lambda x, y: np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    if base == "product_xy":
        return Kernel2("product_xy", lambda x, y: np.asarray(x, dtype=float) * np.asarray(y, dtype=float))
    if base == "indicator_leq":
        if param is None:
            raise ConfigError("indicator_leq needs a threshold, e.g. indicator_leq(1.5)")
        q = param

        def indicator(x, y, q=q):
            return (np.asarray(x) <= q).astype(float) * np.ones_like(np.asarray(y, dtype=float))

        return Kernel2("indicator_leq", indicator, parameter=q)
    raise ConfigError(
        f"unknown two-argument kernel {text!r}; registry: {REGISTRY_NAMES}"
    )


def kernel1_from_name(text: str) -> Kernel1:
    """Look up a one-argument function by registry name."""
    base, param = _parse_name(text)
    if base == "id":
        return Kernel1("id", lambda z: np.asarray(z, dtype=float),
                       derivative=lambda z: np.ones_like(np.asarray(z, dtype=float)),
                       derivative_bound=1.0, poly=(1.0, 0.0))
    if base == "neg_id":
        return Kernel1("neg_id", lambda z: -np.asarray(z, dtype=float),
                       derivative=lambda z: -np.ones_like(np.asarray(z, dtype=float)),
                       derivative_bound=1.0, poly=(-1.0, 0.0))
    if base == "square":
        return Kernel1("square", lambda z: np.asarray(z, dtype=float) ** 2,
                       derivative=lambda z: 2.0 * np.asarray(z, dtype=float),
                       derivative_bound=2.0, poly=(1.0, 0.0, 0.0))
    if base == "indicator_leq":
        if param is None:
            raise ConfigError("indicator_leq needs a threshold, e.g. indicator_leq(1.5)")
        q = param
        return Kernel1("indicator_leq", lambda z, q=q: (np.asarray(z) <= q).astype(float),
                       parameter=q)
    raise ConfigError(
        f"unknown one-argument kernel {text!r}; registry: {REGISTRY_NAMES}"
    )


@dataclass(frozen=True, eq=False)
class VonMisesFunctional:
    """k(P, Q) = integral of h(x, y) against the product measure."""

    h: Callable


@dataclass(frozen=True, eq=False)
class WilcoxonFunctional:
    """k(P, Q) = (P (x) Q)(Y <= X), the stochastic-ordering functional."""


@dataclass(frozen=True, eq=False)
class InvariantFunctional:
    """k(P, Q) = integral of h(F_Q(x)) dP(x) for differentiable h.

    ``hdot`` is the derivative of ``h`` and ``bound`` a bound for |hdot| on
    [0, 1]; both are supplied, not derived.
    """

    h: Callable
    hdot: Callable
    bound: float


@dataclass(frozen=True, eq=False)
class CompositeFunctional:
    """f(k1(P), k2(Q)) with k_i one-sample means of f1, f2."""

    op: str
    f1: Callable
    f2: Callable

    def __post_init__(self) -> None:
        if self.op not in ("sum", "product", "quotient"):
            raise ConfigError(f"composite op must be sum, product, or quotient, got {self.op!r}")


Functional = Union[VonMisesFunctional, WilcoxonFunctional, InvariantFunctional,
                   CompositeFunctional]


@dataclass(frozen=True, eq=False)
class GradientPair:
    """Canonical gradient of a functional at a product footpoint.

    ``k1_tilde`` and ``k2_tilde`` are the zero-mean marginal components;
    their sum over coordinates is the full gradient. A pair with total norm
    zero is representable and merely flagged; the tests refuse it.
    """

    k1_tilde: Tangent
    k2_tilde: Tangent
    value_at_footpoint: float

    @property
    def degenerate(self) -> bool:
        return (self.k1_tilde.l2_norm ** 2 + self.k2_tilde.l2_norm ** 2
                <= _DEGENERACY_TOLERANCE ** 2)

    def d_weighted(self, d: float) -> DWeightedGradient:
        return DWeightedGradient.from_components(self.k1_tilde, self.k2_tilde, d)


def _stochastic_order_value(p: Measure, q: Measure) -> float:
    """(P (x) Q)(Y <= X), exactly, for any measure kinds."""
    if isinstance(q, DiscreteMeasure):
        # Integrate over the atoms of Q: sum v_j * P([y_j, inf)).
        upper = 1.0 - cdf(p, q.locations, side="left")
        return float(np.dot(q.weights, upper))
    if isinstance(p, DiscreteMeasure):
        return float(np.dot(p.weights, cdf(q, p.locations, side="right")))
    return integrate(p, cdf_polynomial(q))


def _invariant_value(k: InvariantFunctional, p: Measure, q: Measure) -> float:
    if isinstance(p, DiscreteMeasure):
        vals = np.asarray(k.h(cdf(q, p.locations, side="right")), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise NonFiniteFunctionValue("h(F_Q) is not finite on the support")
        return float(np.dot(p.weights, vals))
    poly = getattr(k.h, "poly", None)
    if isinstance(q, PiecewiseUniformMeasure) and poly is not None:
        return integrate(p, cdf_polynomial(q).compose_polynomial(poly))
    if isinstance(q, DiscreteMeasure):
        # h(F_Q(x)) is a step function of x with jumps at the atoms of Q.
        levels = np.concatenate(([0.0], q.cumulative_weights))
        h_levels = np.asarray(k.h(levels), dtype=float)
        edges = np.concatenate(([-np.inf], q.locations, [np.inf]))
        probs = np.diff([cdf(p, e, side="left") if np.isfinite(e) else (0.0 if e < 0 else 1.0)
                         for e in edges])
        return float(np.dot(h_levels, probs))
    return integrate(p, lambda x: k.h(cdf(q, x, side="right")))


def evaluate(k: Functional, p: Measure, q: Measure) -> float:
    """Exact value of the functional at the product measure p (x) q."""
    if isinstance(k, WilcoxonFunctional):
        return _stochastic_order_value(p, q)
    if isinstance(k, VonMisesFunctional):
        name = getattr(k.h, "name", None)
        if name == "x_ge_y":
            return _stochastic_order_value(p, q)
        if name == "x_minus_y":
            return mean(p) - mean(q)
        if name == "product_xy":
            return mean(p) * mean(q)
        if name == "indicator_leq":
            return cdf(p, k.h.parameter, side="right")
        return product_integrate(p, q, k.h)
    if isinstance(k, InvariantFunctional):
        return _invariant_value(k, p, q)
    if isinstance(k, CompositeFunctional):
        k1 = integrate(p, k.f1)
        k2 = integrate(q, k.f2)
        if k.op == "sum":
            return k1 + k2
        if k.op == "product":
            return k1 * k2
        if k2 == 0.0:
            raise QuotientByZero("quotient functional needs a nonzero second mean")
        return k1 / k2
    raise TypeError(f"not a functional: {k!r}")


def _composite_coefficients(k: CompositeFunctional, k1: float, k2: float):
    if k.op == "sum":
        return 1.0, 1.0
    if k.op == "product":
        return k2, k1
    if k2 == 0.0:
        raise QuotientByZero("quotient functional needs a nonzero second mean")
    return 1.0 / k2, -k1 / (k2 * k2)


def _require_atomic(p0: Measure, q0: Measure) -> None:
    if not (isinstance(p0, DiscreteMeasure) and isinstance(q0, DiscreteMeasure)):
        raise UnsupportedFootpoint(
            "exact gradients need atomic footpoints; continuous footpoints "
            "are served by the sample-based statistics"
        )


def _kernel_matrix(h: Callable, p0: DiscreteMeasure, q0: DiscreteMeasure) -> np.ndarray:
    xs = p0.locations[:, None]
    ys = q0.locations[None, :]
    try:
        grid = np.asarray(h(xs, ys), dtype=float)
        if grid.shape != (p0.n_atoms, q0.n_atoms):
            raise ValueError
    except (TypeError, ValueError):
        grid = np.array([[float(h(a, b)) for b in q0.locations] for a in p0.locations])
    if not np.all(np.isfinite(grid)):
        raise NonFiniteFunctionValue("kernel is not finite on the support product")
    return grid


def gradient(k: Functional, p0: Measure, q0: Measure) -> GradientPair:
    """Canonical gradient components of ``k`` at an atomic footpoint.

    The families here are full, so no projection step is needed: the
    computed gradient already is the canonical one, split into its two
    marginal components. Each component integrates to zero under its
    footpoint marginal.
    """
    _require_atomic(p0, q0)
    value = evaluate(k, p0, q0)
    if isinstance(k, WilcoxonFunctional):
        v1 = cdf(q0, p0.locations, side="right") - value
        v2 = (1.0 - cdf(p0, q0.locations, side="left")) - value
    elif isinstance(k, VonMisesFunctional):
        grid = _kernel_matrix(k.h, p0, q0)
        v1 = grid @ q0.weights - value
        v2 = p0.weights @ grid - value
    elif isinstance(k, InvariantFunctional):
        f_at_x = cdf(q0, p0.locations, side="right")
        v1 = np.asarray(k.h(f_at_x), dtype=float) - value
        hdot_at_x = np.asarray(k.hdot(f_at_x), dtype=float)
        if not np.all(np.isfinite(hdot_at_x)):
            raise NonFiniteFunctionValue("hdot(F_Q) is not finite on the support")
        # k2 at y: E_P0[ hdot(F_Q0(X)) 1{X >= y} ], centered under Q0.
        indicator = p0.locations[:, None] >= q0.locations[None, :]
        v2_raw = (p0.weights * hdot_at_x) @ indicator
        v2 = v2_raw - float(np.dot(p0.weights, hdot_at_x * f_at_x))
    elif isinstance(k, CompositeFunctional):
        k1 = integrate(p0, k.f1)
        k2 = integrate(q0, k.f2)
        c1, c2 = _composite_coefficients(k, k1, k2)
        f1_vals = measures._apply(k.f1, p0.locations)
        f2_vals = measures._apply(k.f2, q0.locations)
        v1 = c1 * (f1_vals - k1)
        v2 = c2 * (f2_vals - k2)
    else:
        raise TypeError(f"not a functional: {k!r}")
    return GradientPair(center(p0, v1), center(q0, v2), value)


def gradient_tangent_inner(gp: GradientPair, pt: ProductTangent) -> float:
    """Derivative of k along the curve with tangent pt: the pairing
    <k1_tilde, g1> + <k2_tilde, g2>."""
    return gp.k1_tilde.inner(pt.g1) + gp.k2_tilde.inner(pt.g2)


def directional_derivative(k: Functional, p0: Measure, q0: Measure,
                           pt: ProductTangent, t: float) -> float:
    """Difference quotient of k along the local-alternative curve.

    Returns (k(P_t (x) Q_t) - k(P0 (x) Q0)) / t; as t -> 0 this converges
    to gradient_tangent_inner(gradient(k, p0, q0), pt).
    """
    t = float(t)
    if t == 0.0:
        raise ValueError("t must be nonzero")
    p_t = curve_measure(p0, pt.g1, t)
    q_t = curve_measure(q0, pt.g2, t)
    return (evaluate(k, p_t, q_t) - evaluate(k, p0, q0)) / t


def functional_to_dict(k: Functional) -> dict:
    """Registry descriptor of a functional; only registry-built kernels
    serialize."""

    def named(obj, what: str) -> str:
        name = getattr(obj, "name", None)
        if name is None:
            raise ConfigError(f"{what} was not built from the registry; cannot serialize")
        if getattr(obj, "parameter", None) is not None:
            return f"{name}({obj.parameter!r})"
        return name

    if isinstance(k, WilcoxonFunctional):
        return {"kind": "wilcoxon"}
    if isinstance(k, VonMisesFunctional):
        return {"kind": "vonmises", "h": named(k.h, "kernel")}
    if isinstance(k, InvariantFunctional):
        return {"kind": "invariant", "h": named(k.h, "transform")}
    if isinstance(k, CompositeFunctional):
        return {"kind": "composite", "op": k.op,
                "f1": named(k.f1, "f1"), "f2": named(k.f2, "f2")}
    raise TypeError(f"not a functional: {k!r}")


def functional_from_dict(obj: dict) -> Functional:
    """Build a functional from its JSON descriptor."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError("functional descriptor must be an object with a 'kind'")
    kind = obj["kind"]
    if kind == "wilcoxon":
        return WilcoxonFunctional()
    if kind == "vonmises":
        if "h" not in obj:
            raise ConfigError("vonmises descriptor needs a kernel name 'h'")
        return VonMisesFunctional(kernel2_from_name(obj["h"]))
    if kind == "invariant":
        if "h" not in obj:
            raise ConfigError("invariant descriptor needs a transform name 'h'")
        k1 = kernel1_from_name(obj["h"])
        if k1.derivative is None:
            raise ConfigError(
                f"invariant functionals need a differentiable transform; {k1.name!r} is not"
            )
        return InvariantFunctional(k1, k1.derivative, k1.derivative_bound)
    if kind == "composite":
        for field in ("op", "f1", "f2"):
            if field not in obj:
                raise ConfigError(f"composite descriptor needs {field!r}")
        return CompositeFunctional(obj["op"],
                                   kernel1_from_name(obj["f1"]),
                                   kernel1_from_name(obj["f2"]))
    raise ConfigError(
        f"unknown functional kind {kind!r}; expected wilcoxon, vonmises, "
        f"invariant, or composite (registry: {REGISTRY_NAMES})"
    )
