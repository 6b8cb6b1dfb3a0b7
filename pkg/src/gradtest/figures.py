"""Figure rendering for simulation results and power tables.

Each renderer writes one PNG next to the delimited report. Rendering is
headless (Agg) and optional: callers skip it entirely with a flag, and
nothing here is needed for the numeric outputs.
"""
from __future__ import annotations

from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .montecarlo import SimResult  # noqa: E402

__all__ = ["render_result", "render_power_table"]

_RATE_KINDS = {"level", "power", "d_scan"}


def _grouped(result: SimResult):
    by_n: dict = {}
    for row in result.rows:
        by_n.setdefault(row.n, []).append(row)
    return by_n


def _render_level(result: SimResult, ax) -> None:
    ns = [row.n for row in result.rows]
    rates = [row.rate for row in result.rows]
    errs = [2.0 * row.se for row in result.rows]
    ax.errorbar(ns, rates, yerr=errs, fmt="o-", capsize=3, label="empirical")
    if result.rows:
        ax.axhline(result.rows[0].analytic, color="tab:red", linestyle="--",
                   label="level")
    ax.set_xscale("log")
    ax.set_xlabel("total sample size n")
    ax.set_ylabel("rejection rate")
    ax.set_title("Null rejection rate")
    ax.legend()


def _render_power(result: SimResult, ax) -> None:
    for n, rows in sorted(_grouped(result).items()):
        thetas = [row.theta_or_d for row in rows]
        ax.errorbar(thetas, [row.rate for row in rows],
                    yerr=[2.0 * row.se for row in rows], fmt="o-", capsize=3,
                    label=f"empirical, n={n}")
        analytic = [row.analytic for row in rows]
        if all(np.isfinite(analytic)):
            ax.plot(thetas, analytic, "--", color="gray")
    ax.set_xlabel("local parameter")
    ax.set_ylabel("rejection rate")
    ax.set_title("Power along the local alternative (dashed: limit)")
    ax.legend()


def _render_joint(result: SimResult, ax) -> None:
    samples = result.diagnostics.get("_samples", {})
    if samples:
        n = max(samples)
        data = np.asarray(samples[n])
        keep = min(len(data), 2000)
        ax.plot(data[:keep, 1], data[:keep, 0], ".", alpha=0.3, markersize=3)
        ax.set_xlabel("central sequence")
        ax.set_ylabel("test statistic")
        ax.set_title(f"Joint null sample at n={n}")
    else:
        ns = [row.n for row in result.rows]
        ax.plot(ns, [row.rate for row in result.rows], "o-", label="empirical")
        ax.plot(ns, [row.analytic for row in result.rows], "--",
                label="limit")
        ax.set_xscale("log")
        ax.set_xlabel("total sample size n")
        ax.set_ylabel("cross moment")
        ax.legend()


def _render_lan(result: SimResult, ax) -> None:
    ns = [row.n for row in result.rows]
    ax.plot(ns, [row.rate for row in result.rows], "o-",
            label="median |remainder|")
    ax.plot(ns, [row.diagnostic for row in result.rows], "s--",
            label="0.9 quantile")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("total sample size n")
    ax.set_ylabel("absolute remainder")
    ax.set_title("Quadratic expansion remainder")
    ax.legend()


def _render_d_scan(result: SimResult, ax) -> None:
    for n, rows in sorted(_grouped(result).items()):
        ds = [row.theta_or_d for row in rows]
        ax.errorbar(ds, [row.rate for row in rows],
                    yerr=[2.0 * row.se for row in rows], fmt="o-", capsize=3,
                    label=f"empirical, n={n}")
        ax.plot(ds, [row.analytic for row in rows], "--", color="gray")
    optimum = result.diagnostics.get("d_opt")
    if optimum is not None:
        ax.axvline(optimum, color="tab:red", linestyle=":",
                   label="analytic optimum")
    ax.set_xlabel("allocation fraction of the second sample")
    ax.set_ylabel("rejection rate")
    ax.set_title("Power over the sample allocation (dashed: limit)")
    ax.legend()


def render_result(result: SimResult, path: str) -> Optional[str]:
    """Render one simulation result to ``path``; returns the path, or
    None when the result kind has no figure."""
    renderers = {
        "level": _render_level,
        "power": _render_power,
        "joint": _render_joint,
        "lan": _render_lan,
        "d_scan": _render_d_scan,
    }
    renderer = renderers.get(result.kind)
    if renderer is None:
        return None
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    try:
        renderer(result, ax)
        fig.tight_layout()
        fig.savefig(path, dpi=120)
    finally:
        plt.close(fig)
    return path


def render_power_table(thetas: Sequence[float], one_sided: Sequence[float],
                       two_sided: Sequence[float], path: str) -> str:
    """Render the analytic power curves of a power table."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    try:
        ax.plot(thetas, one_sided, "-", label="one-sided")
        ax.plot(thetas, two_sided, "--", label="two-sided")
        ax.set_xlabel("local parameter")
        ax.set_ylabel("limiting power")
        ax.set_title("Limiting power")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, dpi=120)
    finally:
        plt.close(fig)
    return path
