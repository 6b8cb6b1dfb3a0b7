"""Two-sample tests built from gradient scores.

The statistic is a weighted sum of the two marginal gradient components
over the samples. Critical values come from one of five sources: the exact
footpoint variance, two plug-in variance estimators for sum and product
functionals of one-sample means, a U-statistic variance estimator for the
stochastic-ordering functional, or the permutation distribution of the
linear rank statistic. The one-sample special case is included.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .asymptotics import normal_quantile
from .errors import (
    ConfigError,
    DegenerateGradient,
    TiedObservations,
    TooFewObservations,
)
from .functionals import (
    CompositeFunctional,
    Functional,
    GradientPair,
    InvariantFunctional,
    VonMisesFunctional,
    WilcoxonFunctional,
    evaluate,
    gradient,
    kernel1_from_name,
)
from .measures import Measure, ProductSample, as_generator
from .tangents import Tangent

__all__ = [
    "TestSpec",
    "TestReport",
    "t_statistic",
    "sigma1_exact",
    "critical_value",
    "sigma1_plugin_sum",
    "sigma1_plugin_product",
    "u_variance_estimator",
    "wilcoxon_w_estimators",
    "wilcoxon_tilde_statistic",
    "rank_statistic",
    "permutation_critical",
    "one_sample_statistic",
    "run_test",
    "report_to_dict",
    "load_sample_csv",
    "load_sample_files",
]

SOURCES = ("exact", "plugin_sum", "plugin_product", "ustat_w", "permutation")

# Assignments up to this count are enumerated exactly; beyond it the
# permutation distribution is sampled.
_EXHAUSTIVE_LIMIT = 200_000
_DEFAULT_PERMUTATION_REPS = 100_000


@dataclass(frozen=True, eq=False)
class TestSpec:
    """What to test: functional, null boundary, sidedness, level, and how
    to calibrate the critical value."""

    functional: Functional
    null_value: float
    sided: str
    alpha: float
    source: str
    permutation_reps: int = _DEFAULT_PERMUTATION_REPS

    # Not a pytest test class.
    __test__ = False

    def __post_init__(self) -> None:
        if self.sided not in ("one", "two"):
            raise ConfigError(f"sided must be 'one' or 'two', got {self.sided!r}")
        alpha = float(self.alpha)
        if not (0.0 < alpha < 1.0) or math.isnan(alpha):
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.source not in SOURCES:
            raise ConfigError(
                f"unknown critical value source {self.source!r}; "
                f"expected one of {', '.join(SOURCES)}"
            )
        if self.source == "permutation" and self.permutation_reps < 1000:
            raise ConfigError("permutation needs at least 1000 replications")
        if not math.isfinite(float(self.null_value)):
            raise ConfigError("null boundary must be finite")


@dataclass(frozen=True, eq=False)
class TestReport:
    """Outcome of one test run."""

    statistic: float
    critical_value: float
    gamma: float
    reject: bool
    sigma1_estimate: Optional[float]
    provenance: str

    __test__ = False


def report_to_dict(report: TestReport) -> dict:
    """JSON-ready view of a report with fixed key names."""
    sigma1 = report.sigma1_estimate
    return {
        "statistic": report.statistic,
        "critical_value": report.critical_value,
        "gamma": report.gamma,
        "reject": bool(report.reject),
        "sigma1": None if sigma1 is None else sigma1,
        "source": report.provenance,
    }


def t_statistic(gp: GradientPair, s: ProductSample) -> float:
    """Gradient test statistic: (sqrt(n)/n1) sum k1_tilde(x_i) +
    (sqrt(n)/n2) sum k2_tilde(y_j).

    Equals sqrt(n) times the two-sample U-statistic with the summed
    gradient as kernel.
    """
    root_n = math.sqrt(s.n)
    part1 = float(np.sum(gp.k1_tilde.values_at(s.x))) / s.n1
    part2 = float(np.sum(gp.k2_tilde.values_at(s.y))) / s.n2
    return root_n * (part1 + part2)


def sigma1_exact(gp: GradientPair, d: float) -> float:
    """Null standard deviation of the statistic at the footpoint:
    (norm1^2/(1-d) + norm2^2/d)^(1/2)."""
    d = float(d)
    if not (0.0 < d < 1.0):
        raise ConfigError(f"allocation fraction must lie in (0, 1), got {d}")
    if gp.degenerate:
        raise DegenerateGradient(
            "the functional has a vanishing gradient at this footpoint"
        )
    n1sq = gp.k1_tilde.l2_norm ** 2
    n2sq = gp.k2_tilde.l2_norm ** 2
    return math.sqrt(n1sq / (1.0 - d) + n2sq / d)


def critical_value(alpha: float, sided: str, sigma1: float) -> float:
    """Normal-calibrated critical value: the (1-alpha) or (1-alpha/2)
    standard normal quantile scaled by sigma1."""
    if sided not in ("one", "two"):
        raise ConfigError(f"sided must be 'one' or 'two', got {sided!r}")
    sigma1 = float(sigma1)
    if not (sigma1 > 0.0):
        raise DegenerateGradient(
            f"critical values need a positive standard deviation, got {sigma1}"
        )
    level = alpha if sided == "one" else alpha / 2.0
    if not (0.0 < level < 1.0):
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    return normal_quantile(1.0 - level) * sigma1


def _columns(s: ProductSample, f: Callable) -> Tuple[np.ndarray, np.ndarray]:
    return (np.asarray(f(s.x), dtype=float), np.asarray(f(s.y), dtype=float))


def sigma1_plugin_sum(s: ProductSample, f1: Callable, f2: Callable) -> float:
    """Plug-in standard deviation for the sum-of-means functional:
    (n/n1 var(f1(x)) + n/n2 var(f2(y)))^(1/2) with (n_i - 1) denominators."""
    if s.n1 < 2 or s.n2 < 2:
        raise TooFewObservations("plug-in variances need at least two points per sample")
    v1 = float(np.var(np.asarray(f1(s.x), dtype=float), ddof=1))
    v2 = float(np.var(np.asarray(f2(s.y), dtype=float), ddof=1))
    return math.sqrt(s.n / s.n1 * v1 + s.n / s.n2 * v2)


def sigma1_plugin_product(s: ProductSample, f1: Callable, f2: Callable) -> float:
    """Plug-in standard deviation for the product-of-means functional,
    from the delta method: (n/n1 mean(f2(y))^2 var(f1(x)) +
    n/n2 mean(f1(x))^2 var(f2(y)))^(1/2)."""
    if s.n1 < 2 or s.n2 < 2:
        raise TooFewObservations("plug-in variances need at least two points per sample")
    a1 = np.asarray(f1(s.x), dtype=float)
    a2 = np.asarray(f2(s.y), dtype=float)
    v1 = float(np.var(a1, ddof=1))
    v2 = float(np.var(a2, ddof=1))
    m1 = float(np.mean(a1))
    m2 = float(np.mean(a2))
    return math.sqrt(s.n / s.n1 * m2 * m2 * v1 + s.n / s.n2 * m1 * m1 * v2)


def u_variance_estimator(h: Callable, s: ProductSample) -> float:
    """Unbiased estimator of the integral of (integral of h(x, y) dQ(y))^2
    dP(x): the normalized sum over i and ordered pairs j != k of
    h(x_i, y_j) h(x_i, y_k).

    The caller is responsible for centering h so that its product-measure
    mean is zero.
    """
    if s.n2 < 2:
        raise TooFewObservations("the variance estimator needs n2 >= 2")
    try:
        grid = np.asarray(h(s.x[:, None], s.y[None, :]), dtype=float)
        if grid.shape != (s.n1, s.n2):
            raise ValueError
    except (TypeError, ValueError):
        grid = np.array([[float(h(a, b)) for b in s.y] for a in s.x])
    # Sum over j != k of h_ij h_ik is (row sum)^2 minus the diagonal terms.
    row_sums = grid.sum(axis=1)
    total = float(np.sum(row_sums ** 2) - np.sum(grid ** 2))
    return total / (s.n1 * s.n2 * (s.n2 - 1))


def wilcoxon_w_estimators(s: ProductSample) -> Tuple[float, float]:
    """Variance components of the stochastic-ordering statistic, estimated
    with the centered indicator kernel 1{x <= y} - 1/2 conditioned on each
    coordinate in turn.
    """
    if s.n1 < 2 or s.n2 < 2:
        raise TooFewObservations("the component estimators need two points per sample")
    sorted_x = np.sort(s.x)
    sorted_y = np.sort(s.y)
    # Row sums of the kernel: #(y_j >= x_i) - n2 / 2.
    ge_counts = s.n2 - np.searchsorted(sorted_y, s.x, side="left")
    row = ge_counts - s.n2 / 2.0
    w1 = float(np.sum(row ** 2) - s.n2 / 4.0 * s.n1) / (s.n1 * s.n2 * (s.n2 - 1))
    # Column sums: #(x_i <= y_j) - n1 / 2.
    le_counts = np.searchsorted(sorted_x, s.y, side="right")
    col = le_counts - s.n1 / 2.0
    w2 = float(np.sum(col ** 2) - s.n1 / 4.0 * s.n2) / (s.n2 * s.n1 * (s.n1 - 1))
    return w1, w2


def _successes(s: ProductSample) -> int:
    """Number of pairs with y_j <= x_i, in O(n log n)."""
    sorted_y = np.sort(s.y)
    return int(np.sum(np.searchsorted(sorted_y, s.x, side="right")))


def wilcoxon_tilde_statistic(s: ProductSample) -> float:
    """sqrt(n) (U_n - 1/2) where U_n is the fraction of pairs with
    y_j <= x_i; the empirical-CDF form of the stochastic-ordering
    statistic. Valid with ties."""
    u_n = _successes(s) / (s.n1 * s.n2)
    return math.sqrt(s.n) * (u_n - 0.5)


def _pooled_ranks(s: ProductSample) -> np.ndarray:
    pooled = np.concatenate([s.x, s.y])
    order = np.argsort(pooled, kind="stable")
    sorted_vals = pooled[order]
    if np.any(sorted_vals[1:] == sorted_vals[:-1]):
        raise TiedObservations(
            "the rank statistic needs a tie-free pooled sample"
        )
    ranks = np.empty(pooled.size, dtype=float)
    ranks[order] = np.arange(1, pooled.size + 1, dtype=float)
    return ranks


def _rank_sum_to_statistic(rank_sum_x, n1: int, n2: int):
    """Linear rank statistic from the sum of first-sample ranks."""
    n = n1 + n2
    root_n = math.sqrt(n)
    scale = (1.0 / n1 + 1.0 / n2) / root_n
    offset = n * (n + 1) / (2.0 * n2 * root_n)
    return scale * np.asarray(rank_sum_x, dtype=float) - offset


def rank_statistic(s: ProductSample) -> float:
    """Joint-rank statistic: the mean rank of the first sample minus the
    mean rank of the second, each scaled by 1/sqrt(n). Rejects tied pooled
    data.

    Computed from the first-sample rank sum through the same affine map
    that builds the permutation reference distribution, so an observed
    value and its lattice twin are equal bit for bit and randomized
    verdicts on the boundary atom apply their weight exactly.
    """
    ranks = _pooled_ranks(s)
    return float(_rank_sum_to_statistic(float(np.sum(ranks[: s.n1])), s.n1, s.n2))


def _distribution_quantile(values: np.ndarray, weights: np.ndarray,
                           alpha: float) -> Tuple[float, float]:
    """Smallest support point c with P(T > c) <= alpha, plus the
    randomization weight gamma = (alpha - P(T > c)) / P(T = c)."""
    order = np.argsort(values)
    vals = values[order]
    wts = weights[order]
    uniq, start = np.unique(vals, return_index=True)
    pmf = np.add.reduceat(wts, start)
    pmf = pmf / pmf.sum()
    survival = np.concatenate([np.cumsum(pmf[::-1])[::-1][1:], [0.0]])
    idx = int(np.argmax(survival <= alpha + 1e-15))
    c = float(uniq[idx])
    tail = float(survival[idx])
    gamma = (alpha - tail) / float(pmf[idx])
    return c, float(min(max(gamma, 0.0), 1.0))


def permutation_critical(s: ProductSample, alpha: float, B: int,
                         rng=None, two_sided: bool = False) -> Tuple[float, float]:
    """Critical value and randomization weight of the permutation test of
    the rank statistic.

    All group assignments are enumerated when there are at most 200000 of
    them; otherwise ``B`` uniformly random assignments are drawn. The pair
    (c, gamma) makes the randomized test exactly level alpha under
    exchangeability. With ``two_sided`` the distribution of the absolute
    statistic is used.
    """
    if not (0.0 < alpha < 1.0):
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    _pooled_ranks(s)  # tie check
    n, n1 = s.n, s.n1
    if math.comb(n, n1) <= _EXHAUSTIVE_LIMIT:
        rank_sums = np.fromiter(
            (sum(c) for c in combinations(range(1, n + 1), n1)),
            dtype=float, count=math.comb(n, n1),
        )
    else:
        if B < 1000:
            raise ConfigError("sampled permutation needs at least 1000 replications")
        gen = as_generator(rng if rng is not None else 0)
        rank_sums = np.empty(B, dtype=float)
        base = np.tile(np.arange(1, n + 1, dtype=float), (min(B, 10_000), 1))
        done = 0
        while done < B:
            batch = min(B - done, base.shape[0])
            block = gen.permuted(base[:batch], axis=1)
            rank_sums[done : done + batch] = block[:, :n1].sum(axis=1)
            done += batch
    stats = _rank_sum_to_statistic(rank_sums, n1, s.n2)
    if two_sided:
        stats = np.abs(stats)
    weights = np.full(stats.size, 1.0 / stats.size)
    return _distribution_quantile(stats, weights, alpha)


def one_sample_statistic(k_tilde: Tangent, z: Sequence[float]) -> float:
    """One-sample statistic n^(-1/2) sum k_tilde(z_i); its test rejects
    beyond the normal quantile scaled by the gradient norm."""
    z = np.asarray(z, dtype=float)
    if z.size == 0:
        raise TooFewObservations("the one-sample statistic needs data")
    return float(np.sum(k_tilde.values_at(z))) / math.sqrt(z.size)


def _sum_components(k: Functional) -> Tuple[Callable, Callable]:
    if isinstance(k, CompositeFunctional) and k.op == "sum":
        return k.f1, k.f2
    if isinstance(k, VonMisesFunctional) and getattr(k.h, "name", None) == "x_minus_y":
        return kernel1_from_name("id"), kernel1_from_name("neg_id")
    raise ConfigError(
        "the plugin_sum source needs a sum-of-means functional "
        "(composite op 'sum', or the mean-difference kernel)"
    )


def _product_components(k: Functional) -> Tuple[Callable, Callable]:
    if isinstance(k, CompositeFunctional) and k.op == "product":
        return k.f1, k.f2
    if isinstance(k, VonMisesFunctional) and getattr(k.h, "name", None) == "product_xy":
        return kernel1_from_name("id"), kernel1_from_name("id")
    raise ConfigError(
        "the plugin_product source needs a product-of-means functional "
        "(composite op 'product', or the product kernel)"
    )


def _is_stochastic_order(k: Functional) -> bool:
    return isinstance(k, WilcoxonFunctional) or (
        isinstance(k, VonMisesFunctional) and getattr(k.h, "name", None) == "x_ge_y"
    )


def _decide(statistic: float, c: float, gamma: float, sided: str, rng) -> bool:
    observed = statistic if sided == "one" else abs(statistic)
    if observed > c:
        return True
    if gamma > 0.0 and observed == c:
        if isinstance(rng, np.random.Generator):
            aux = rng
        else:
            # Offset the key so the verdict draw does not reuse the stream
            # that sampled the permutation distribution.
            aux = as_generator(int(rng) ^ 0x9E3779B97F4A7C15)
        return bool(aux.uniform() < gamma)
    return False


def run_test(spec: TestSpec, s: ProductSample, footpoint=None, rng=0) -> TestReport:
    """Run the test described by ``spec`` on the sample.

    ``footpoint`` is required for the exact source: a pair (P0, Q0) of
    null marginals, optionally extended with the allocation fraction d
    (default: the sample's own n2/n). ``rng`` seeds the auxiliary draw
    used only when a randomized verdict lands exactly on the critical
    value.
    """
    a = float(spec.null_value)
    root_n = math.sqrt(s.n)
    gamma = 0.0
    if spec.source == "exact":
        if footpoint is None:
            raise ConfigError("the exact source needs a footpoint (P0, Q0)")
        p0, q0 = footpoint[0], footpoint[1]
        d = float(footpoint[2]) if len(footpoint) > 2 else s.d_hat
        gp = gradient(spec.functional, p0, q0)
        statistic = t_statistic(gp, s) + root_n * (gp.value_at_footpoint - a)
        sigma1 = sigma1_exact(gp, d)
        c = critical_value(spec.alpha, spec.sided, sigma1)
    elif spec.source == "plugin_sum":
        f1, f2 = _sum_components(spec.functional)
        m1 = float(np.mean(np.asarray(f1(s.x), dtype=float)))
        m2 = float(np.mean(np.asarray(f2(s.y), dtype=float)))
        statistic = root_n * (m1 + m2 - a)
        sigma1 = sigma1_plugin_sum(s, f1, f2)
        c = critical_value(spec.alpha, spec.sided, sigma1)
    elif spec.source == "plugin_product":
        f1, f2 = _product_components(spec.functional)
        m1 = float(np.mean(np.asarray(f1(s.x), dtype=float)))
        m2 = float(np.mean(np.asarray(f2(s.y), dtype=float)))
        statistic = root_n * (m1 * m2 - a)
        sigma1 = sigma1_plugin_product(s, f1, f2)
        c = critical_value(spec.alpha, spec.sided, sigma1)
    elif spec.source == "ustat_w":
        if not _is_stochastic_order(spec.functional):
            raise ConfigError(
                "the ustat_w source applies to the stochastic-ordering functional"
            )
        u_n = _successes(s) / (s.n1 * s.n2)
        statistic = root_n * (u_n - a)
        w1, w2 = wilcoxon_w_estimators(s)
        variance = s.n / s.n1 * w1 + s.n / s.n2 * w2
        if variance <= 0.0:
            raise DegenerateGradient("the estimated statistic variance is zero")
        sigma1 = math.sqrt(variance)
        c = critical_value(spec.alpha, spec.sided, sigma1)
    elif spec.source == "permutation":
        if not _is_stochastic_order(spec.functional):
            raise ConfigError(
                "the permutation source applies to the stochastic-ordering functional"
            )
        statistic = rank_statistic(s)
        sigma1 = None
        c, gamma = permutation_critical(
            s, spec.alpha, spec.permutation_reps, rng=rng,
            two_sided=(spec.sided == "two"),
        )
    else:  # pragma: no cover - TestSpec already validated
        raise ConfigError(f"unknown source {spec.source!r}")
    reject = _decide(statistic, c, gamma, spec.sided, rng)
    return TestReport(float(statistic), float(c), float(gamma), reject,
                      sigma1, spec.source)


def _parse_value(token: str, path: str, line_no: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ConfigError(
            f"{path}:{line_no}: not a number: {token!r}"
        ) from None


def load_sample_csv(path: str) -> ProductSample:
    """Read a two-column CSV of (sample_id, value) rows, sample_id in
    {1, 2}. A non-numeric first row is treated as a header."""
    xs: list = []
    ys: list = []
    with open(path, newline="") as handle:
        for line_no, row in enumerate(csv.reader(handle), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 2:
                raise ConfigError(f"{path}:{line_no}: expected two columns")
            first = row[0].strip()
            if line_no == 1 and not _is_number(first):
                continue
            label = _parse_value(first, path, line_no)
            value = _parse_value(row[1].strip(), path, line_no)
            if label == 1:
                xs.append(value)
            elif label == 2:
                ys.append(value)
            else:
                raise ConfigError(
                    f"{path}:{line_no}: sample_id must be 1 or 2, got {first}"
                )
    if not xs or not ys:
        raise ConfigError(f"{path}: need observations for both samples")
    return ProductSample(np.array(xs), np.array(ys))


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def _load_column(path: str) -> np.ndarray:
    values: list = []
    with open(path, newline="") as handle:
        for line_no, row in enumerate(csv.reader(handle), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            token = row[0].strip()
            if line_no == 1 and not _is_number(token):
                continue
            values.append(_parse_value(token, path, line_no))
    if not values:
        raise ConfigError(f"{path}: no observations found")
    return np.array(values)


def load_sample_files(path_x: str, path_y: str) -> ProductSample:
    """Read the two samples from two one-column files."""
    return ProductSample(_load_column(path_x), _load_column(path_y))
