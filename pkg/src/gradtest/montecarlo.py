"""Seeded simulation experiments for the asymptotic claims.

Five experiments: null rejection rate, power along local-alternative
curves, the joint second moments of the test statistic and the central
sequence, the quadratic-expansion remainder of the log likelihood ratio,
and a scan of power over the sample-allocation fraction.

Reproducibility contract: replicate r draws from counter-based streams
keyed by seed XOR r (one stream per marginal), so results are bit
identical for a given config no matter how replicates are scheduled
across workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .asymptotics import d_opt, normal_quantile, power_one_sided, power_two_sided
from .errors import (
    ConfigError,
    DegenerateDensity,
    DegenerateGradient,
    OrthogonalTangent,
    UnsupportedFootpoint,
)
from .functionals import (
    CompositeFunctional,
    Functional,
    GradientPair,
    evaluate,
    gradient,
    gradient_tangent_inner,
)
from .measures import (
    DiscreteMeasure,
    Measure,
    ProductSample,
    as_generator,
    cdf_polynomial,
    integrate,
    sample,
)
from .tangents import ProductTangent, central_sequence, curve_measure, lan_remainder
from .testing import (
    SOURCES,
    _is_stochastic_order,
    _product_components,
    _successes,
    _sum_components,
    permutation_critical,
    rank_statistic,
    sigma1_exact,
    sigma1_plugin_product,
    sigma1_plugin_sum,
    t_statistic,
    wilcoxon_w_estimators,
)

__all__ = [
    "SimConfig",
    "SimRow",
    "SimResult",
    "simulate_level",
    "simulate_power",
    "simulate_joint",
    "simulate_lan",
    "simulate_d_scan",
    "result_to_csv",
    "result_to_dict",
]

# Secondary stream key offsets so the two marginals and auxiliary verdict
# draws never share a counter stream with each other.
_Y_STREAM_SALT = 0xD1B54A32D192ED03
_PERMUTATION_SALT = 0x94D049BB133111EB


@dataclass(frozen=True, eq=False)
class SimConfig:
    """One simulation experiment: footpoint, functional, optional tangent
    direction, size grid, allocation, and calibration choices.

    Each total size n splits as n2 = round(d n), n1 = n - n2; both parts
    must be at least 2.
    """

    footpoint: Tuple[Measure, Measure]
    functional: Functional
    tangent: Optional[ProductTangent] = None
    n_grid: Tuple[int, ...] = (100, 400, 1600)
    d: float = 0.5
    replications: int = 10_000
    alpha: float = 0.05
    seed: int = 0
    test_source: str = "exact"
    sided: str = "one"
    workers: int = 1

    def __post_init__(self) -> None:
        if len(self.footpoint) != 2:
            raise ConfigError("footpoint must be a pair of measures")
        if self.replications < 100:
            raise ConfigError("need at least 100 replications")
        if not (0.0 < float(self.d) < 1.0):
            raise ConfigError(f"allocation fraction must lie in (0, 1), got {self.d}")
        if not (0.0 < float(self.alpha) < 1.0):
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.test_source not in SOURCES:
            raise ConfigError(
                f"unknown test source {self.test_source!r}; expected one of "
                + ", ".join(SOURCES)
            )
        if self.sided not in ("one", "two"):
            raise ConfigError(f"sided must be 'one' or 'two', got {self.sided!r}")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        if not self.n_grid:
            raise ConfigError("n_grid must be nonempty")
        for n in self.n_grid:
            self.split(int(n))

    def split(self, n: int) -> Tuple[int, int]:
        """Sample sizes (n1, n2) for total size n."""
        n2 = int(round(float(self.d) * n))
        n1 = n - n2
        if n1 < 2 or n2 < 2:
            raise ConfigError(
                f"n = {n} with d = {self.d} leaves a sample below two points"
            )
        return n1, n2


@dataclass(frozen=True)
class SimRow:
    """One grid point of a simulation result.

    For level, power, and allocation-scan runs ``rate`` is a rejection
    rate with binomial standard error and ``analytic`` its limiting value;
    ``diagnostic`` is the standardized deviation. Joint runs put the
    empirical cross moment in ``rate``; expansion-remainder runs put the
    median absolute remainder there and its 0.9 quantile in
    ``diagnostic``.
    """

    n: int
    theta_or_d: float
    rate: float
    se: float
    analytic: float
    diagnostic: float


@dataclass(frozen=True, eq=False)
class SimResult:
    kind: str
    rows: Tuple[SimRow, ...]
    diagnostics: dict = field(default_factory=dict)


def result_to_csv(result: SimResult) -> str:
    """Delimited view, stable column order."""
    lines = ["n,theta_or_d,rate,se,analytic,diagnostic"]
    for row in result.rows:
        lines.append(
            f"{row.n},{row.theta_or_d!r},{row.rate!r},{row.se!r},"
            f"{row.analytic!r},{row.diagnostic!r}"
        )
    return "\n".join(lines) + "\n"


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def result_to_dict(result: SimResult) -> dict:
    """JSON-ready view; diagnostics keys starting with '_' (raw replicate
    arrays) are omitted."""
    return {
        "kind": result.kind,
        "rows": [
            {
                "n": row.n,
                "theta_or_d": row.theta_or_d,
                "rate": row.rate,
                "se": row.se,
                "analytic": row.analytic,
                "diagnostic": row.diagnostic,
            }
            for row in result.rows
        ],
        "diagnostics": {
            key: _jsonable(val)
            for key, val in result.diagnostics.items()
            if not key.startswith("_")
        },
    }


def _replicate_streams(seed: int, r: int):
    gx = as_generator(seed ^ r)
    gy = as_generator((seed ^ r) ^ _Y_STREAM_SALT)
    return gx, gy


def _run_replicates(cfg: SimConfig, n: int, p: Measure, q: Measure,
                    fn: Callable, width: int) -> np.ndarray:
    """Fill an (R, width) array with fn(sample, aux_generator) rows.

    Aggregation is by replicate index, so the worker count cannot change
    the result.
    """
    n1, n2 = cfg.split(n)
    reps = cfg.replications
    out = np.empty((reps, width), dtype=float)

    def fill(lo: int, hi: int) -> None:
        for r in range(lo, hi):
            gx, gy = _replicate_streams(cfg.seed, r)
            s = ProductSample(sample(p, gx, n1), sample(q, gy, n2))
            out[r] = fn(s, gx)

    if cfg.workers <= 1:
        fill(0, reps)
    else:
        chunk = -(-reps // cfg.workers)
        bounds = [(lo, min(lo + chunk, reps)) for lo in range(0, reps, chunk)]
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            list(pool.map(lambda b: fill(*b), bounds))
    return out


def _rate_row(n: int, grid_value: float, rejections: np.ndarray,
              analytic: float) -> SimRow:
    r = float(np.mean(rejections))
    se = math.sqrt(r * (1.0 - r) / rejections.size)
    if se > 0.0:
        z = (r - analytic) / se
    else:
        z = 0.0 if r == analytic else math.inf
    return SimRow(n, grid_value, r, se, analytic, z)


def _footpoint_gradient(cfg: SimConfig) -> GradientPair:
    p0, q0 = cfg.footpoint
    return gradient(cfg.functional, p0, q0)


def _pairing(cfg: SimConfig) -> float:
    """Derivative of the functional along the configured tangent.

    Exact through the gradient on atomic footpoints; on continuous
    footpoints a second-order central difference of the exact curve
    values (step 1e-5) is used.
    """
    if cfg.tangent is None:
        raise ConfigError("this experiment needs a tangent direction")
    p0, q0 = cfg.footpoint
    try:
        return gradient_tangent_inner(gradient(cfg.functional, p0, q0), cfg.tangent)
    except UnsupportedFootpoint:
        h = 1e-5
        up = evaluate(cfg.functional, curve_measure(p0, cfg.tangent.g1, h),
                      curve_measure(q0, cfg.tangent.g2, h))
        down = evaluate(cfg.functional, curve_measure(p0, cfg.tangent.g1, -h),
                        curve_measure(q0, cfg.tangent.g2, -h))
        return (up - down) / (2.0 * h)


def _variance_under(m: Measure, f: Callable) -> float:
    first = integrate(m, f)
    second = integrate(m, lambda z: np.asarray(f(z), dtype=float) ** 2)
    return max(second - first * first, 0.0)


def _sigma1_true(cfg: SimConfig, d_hat: float) -> float:
    """Limiting standard deviation of the statistic for the configured
    functional at the footpoint, or NaN when no closed form applies."""
    p0, q0 = cfg.footpoint
    k = cfg.functional
    if isinstance(p0, DiscreteMeasure) and isinstance(q0, DiscreteMeasure):
        return sigma1_exact(gradient(k, p0, q0), d_hat)
    if _is_stochastic_order(k):
        value = evaluate(k, p0, q0)
        f_q = cdf_polynomial(q0)
        w1 = integrate(p0, f_q.compose_polynomial((1.0, -2.0 * value, value * value)))
        f_p = cdf_polynomial(p0)
        # (1 - F_P(y) - value)^2 as a polynomial in F_P(y).
        c0 = 1.0 - value
        w2 = integrate(q0, f_p.compose_polynomial((1.0, -2.0 * c0, c0 * c0)))
        return math.sqrt(w1 / (1.0 - d_hat) + w2 / d_hat)
    if isinstance(k, CompositeFunctional) and k.op in ("sum", "product"):
        m1 = integrate(p0, k.f1)
        m2 = integrate(q0, k.f2)
        c1, c2 = (1.0, 1.0) if k.op == "sum" else (m2, m1)
        v1 = _variance_under(p0, k.f1)
        v2 = _variance_under(q0, k.f2)
        return math.sqrt(c1 * c1 * v1 / (1.0 - d_hat) + c2 * c2 * v2 / d_hat)
    return math.nan


def _prepared_test(cfg: SimConfig, n: int) -> Callable:
    """Build the per-replicate (reject, statistic) closure for one total
    size, hoisting everything that does not depend on the data."""
    p0, q0 = cfg.footpoint
    n1, n2 = cfg.split(n)
    d_hat = n2 / n
    root_n = math.sqrt(n)
    level = cfg.alpha if cfg.sided == "one" else cfg.alpha / 2.0
    u = normal_quantile(1.0 - level)
    one_sided = cfg.sided == "one"
    k0 = evaluate(cfg.functional, p0, q0)
    source = cfg.test_source

    def decide(statistic: float, c: float) -> float:
        observed = statistic if one_sided else abs(statistic)
        return 1.0 if observed > c else 0.0

    if source == "exact":
        gp = gradient(cfg.functional, p0, q0)
        c = u * sigma1_exact(gp, d_hat)

        def fn(s: ProductSample, aux) -> Tuple[float, float]:
            statistic = t_statistic(gp, s)
            return decide(statistic, c), statistic

        return fn

    if source == "plugin_sum":
        f1, f2 = _sum_components(cfg.functional)

        def fn(s: ProductSample, aux) -> Tuple[float, float]:
            a1 = np.asarray(f1(s.x), dtype=float)
            a2 = np.asarray(f2(s.y), dtype=float)
            statistic = root_n * (float(np.mean(a1)) + float(np.mean(a2)) - k0)
            sigma = sigma1_plugin_sum(s, f1, f2)
            return decide(statistic, u * sigma), statistic

        return fn

    if source == "plugin_product":
        f1, f2 = _product_components(cfg.functional)

        def fn(s: ProductSample, aux) -> Tuple[float, float]:
            a1 = np.asarray(f1(s.x), dtype=float)
            a2 = np.asarray(f2(s.y), dtype=float)
            statistic = root_n * (float(np.mean(a1)) * float(np.mean(a2)) - k0)
            sigma = sigma1_plugin_product(s, f1, f2)
            return decide(statistic, u * sigma), statistic

        return fn

    if source == "ustat_w":
        if not _is_stochastic_order(cfg.functional):
            raise ConfigError(
                "the ustat_w source applies to the stochastic-ordering functional"
            )

        def fn(s: ProductSample, aux) -> Tuple[float, float]:
            u_n = _successes(s) / (s.n1 * s.n2)
            statistic = root_n * (u_n - k0)
            w1, w2 = wilcoxon_w_estimators(s)
            sigma = math.sqrt(max(s.n / s.n1 * w1 + s.n / s.n2 * w2, 0.0))
            return decide(statistic, u * sigma), statistic

        return fn

    # Permutation: the tie-free permutation distribution of the rank
    # statistic depends only on (n1, n2), so calibrate once per size.
    if not _is_stochastic_order(cfg.functional):
        raise ConfigError(
            "the permutation source applies to the stochastic-ordering functional"
        )
    calibration = ProductSample(
        np.arange(1, n1 + 1, dtype=float), np.arange(n1 + 1, n + 1, dtype=float)
    )
    c_perm, gamma = permutation_critical(
        calibration, cfg.alpha, 100_000,
        rng=(cfg.seed ^ _PERMUTATION_SALT), two_sided=not one_sided,
    )

    def fn(s: ProductSample, aux) -> Tuple[float, float]:
        statistic = rank_statistic(s)
        observed = statistic if one_sided else abs(statistic)
        if observed > c_perm:
            return 1.0, statistic
        if gamma > 0.0 and observed == c_perm:
            return (1.0 if aux.uniform() < gamma else 0.0), statistic
        return 0.0, statistic

    return fn


def simulate_level(cfg: SimConfig) -> SimResult:
    """Null rejection rate of the configured test on the footpoint
    product, per total size."""
    p0, q0 = cfg.footpoint
    rows = []
    statistics = {}
    for n in cfg.n_grid:
        test = _prepared_test(cfg, n)
        data = _run_replicates(cfg, n, p0, q0, test, width=2)
        rows.append(_rate_row(n, 0.0, data[:, 0], cfg.alpha))
        statistics[n] = data[:, 1]
    return SimResult("level", tuple(rows), {"_statistics": statistics})


def simulate_power(cfg: SimConfig, theta_grid: Sequence[float],
                   raw_t: bool = False) -> SimResult:
    """Rejection rate along the local-alternative curve, next to the
    limiting power value.

    Grid entries are local parameters theta; the curve parameter is
    theta / (sqrt(n) <gradient, tangent>). With ``raw_t`` the entries are
    instead sqrt(n)-scaled curve parameters applied directly, which is the
    only way to walk a curve orthogonal to the gradient (there the
    limiting rate is the level for every entry).
    """
    if cfg.tangent is None:
        raise ConfigError("power simulation needs a tangent direction")
    p0, q0 = cfg.footpoint
    rho = _pairing(cfg)
    if not raw_t and abs(rho) < 1e-10:
        raise OrthogonalTangent(
            "the tangent is orthogonal to the gradient; no local parameter "
            "localization exists (use raw_t to walk the curve directly)"
        )
    power = power_one_sided if cfg.sided == "one" else power_two_sided
    rows = []
    for n in cfg.n_grid:
        n1, n2 = cfg.split(n)
        d_hat = n2 / n
        sigma1 = _sigma1_true(cfg, d_hat)
        test = _prepared_test(cfg, n)
        for entry in theta_grid:
            entry = float(entry)
            if raw_t:
                t = entry / math.sqrt(n)
                theta = entry * rho
            else:
                t = entry / (math.sqrt(n) * rho)
                theta = entry
            p_t = curve_measure(p0, cfg.tangent.g1, t)
            q_t = curve_measure(q0, cfg.tangent.g2, t)
            data = _run_replicates(cfg, n, p_t, q_t, test, width=2)
            analytic = (power(theta, sigma1, cfg.alpha)
                        if math.isfinite(sigma1) else math.nan)
            rows.append(_rate_row(n, entry, data[:, 0], analytic))
    return SimResult("power", tuple(rows), {"pairing": rho})


def simulate_joint(cfg: SimConfig) -> SimResult:
    """Empirical second moments of (statistic, central sequence) under the
    null, next to their limiting values."""
    if cfg.tangent is None:
        raise ConfigError("the joint experiment needs a tangent direction")
    p0, q0 = cfg.footpoint
    gp = _footpoint_gradient(cfg)
    pt = cfg.tangent
    rho = gradient_tangent_inner(gp, pt)
    rows = []
    empirical = {}
    analytic_cov = {}
    samples = {}
    for n in cfg.n_grid:
        n1, n2 = cfg.split(n)
        d_hat = n2 / n
        sigma1_sq = sigma1_exact(gp, d_hat) ** 2
        sigma2_sq = ((1.0 - d_hat) * pt.g1.l2_norm ** 2
                     + d_hat * pt.g2.l2_norm ** 2)

        def fn(s: ProductSample, aux) -> Tuple[float, float]:
            return t_statistic(gp, s), central_sequence(pt, s)

        data = _run_replicates(cfg, n, p0, q0, fn, width=2)
        cov = np.cov(data, rowvar=False, ddof=1)
        c12 = float(cov[0, 1])
        se = math.sqrt(
            (float(cov[0, 0]) * float(cov[1, 1]) + c12 * c12) / cfg.replications
        )
        ratio = float(cov[0, 0]) / sigma1_sq
        rows.append(SimRow(n, 0.0, c12, se, rho, ratio))
        empirical[n] = np.asarray(cov)
        analytic_cov[n] = np.array([[sigma1_sq, rho], [rho, sigma2_sq]])
        samples[n] = data
    return SimResult("joint", tuple(rows), {
        "empirical_covariance": empirical,
        "analytic_covariance": analytic_cov,
        "_samples": samples,
    })


def simulate_lan(cfg: SimConfig, theta: float) -> SimResult:
    """Distribution of the quadratic-expansion remainder of the log
    likelihood ratio under the null, per total size.

    Rows carry the median absolute remainder and its 0.9 quantile;
    replicates where the curve density vanishes on a drawn point are
    counted separately.
    """
    if cfg.tangent is None:
        raise ConfigError("the expansion experiment needs a tangent direction")
    p0, q0 = cfg.footpoint
    pt = cfg.tangent
    theta = float(theta)
    rows = []
    degenerate = {}
    for n in cfg.n_grid:

        def fn(s: ProductSample, aux) -> Tuple[float]:
            try:
                return (lan_remainder(p0, q0, pt, theta, s),)
            except DegenerateDensity:
                return (math.nan,)

        data = _run_replicates(cfg, n, p0, q0, fn, width=1)[:, 0]
        finite = np.abs(data[np.isfinite(data)])
        frequency = 1.0 - finite.size / data.size
        if finite.size == 0:
            median = q90 = math.nan
        else:
            median = float(np.median(finite))
            q90 = float(np.quantile(finite, 0.9))
        rows.append(SimRow(n, theta, median, math.nan, 0.0, q90))
        degenerate[n] = frequency
    return SimResult("lan", tuple(rows), {"degenerate_frequency": degenerate})


def simulate_d_scan(cfg: SimConfig, d_grid: Sequence[float],
                    theta: float) -> SimResult:
    """Rejection rate as the allocation fraction varies, at a fixed local
    parameter, with the analytic optimum alongside.

    Replicate streams are shared across the grid (common random numbers),
    so the empirical curve varies smoothly in d.
    """
    p0, q0 = cfg.footpoint
    gp = _footpoint_gradient(cfg)
    if gp.k1_tilde.l2_norm == 0.0 or gp.k2_tilde.l2_norm == 0.0:
        raise DegenerateGradient(
            "the allocation scan needs both gradient components nonzero"
        )
    if cfg.tangent is None:
        raise ConfigError("the allocation scan needs a tangent direction")
    rho = _pairing(cfg)
    if abs(rho) < 1e-10:
        raise OrthogonalTangent("the tangent is orthogonal to the gradient")
    theta = float(theta)
    power = power_one_sided if cfg.sided == "one" else power_two_sided
    optimum = d_opt(gp.k1_tilde.l2_norm, gp.k2_tilde.l2_norm)
    rows = []
    argmax = {}
    for n in cfg.n_grid:
        t = theta / (math.sqrt(n) * rho)
        p_t = curve_measure(p0, cfg.tangent.g1, t)
        q_t = curve_measure(q0, cfg.tangent.g2, t)
        best_rate, best_d = -1.0, math.nan
        for d in d_grid:
            sub = SimConfig(
                footpoint=cfg.footpoint, functional=cfg.functional,
                tangent=cfg.tangent, n_grid=(n,), d=float(d),
                replications=cfg.replications, alpha=cfg.alpha, seed=cfg.seed,
                test_source=cfg.test_source, sided=cfg.sided,
                workers=cfg.workers,
            )
            n1, n2 = sub.split(n)
            d_hat = n2 / n
            test = _prepared_test(sub, n)
            data = _run_replicates(sub, n, p_t, q_t, test, width=2)
            analytic = power(theta, sigma1_exact(gp, d_hat), cfg.alpha)
            row = _rate_row(n, float(d), data[:, 0], analytic)
            rows.append(row)
            if row.rate > best_rate:
                best_rate, best_d = row.rate, float(d)
        argmax[n] = best_d
    return SimResult("d_scan", tuple(rows), {
        "argmax_d": argmax, "d_opt": optimum, "pairing": rho,
    })
