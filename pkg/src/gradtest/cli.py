"""Batch command line front end.

Commands: ``test`` runs one two-sample test on data files; the ``sim-*``
commands run the seeded simulation experiments; ``power-table`` tabulates
the limiting power curves. Configuration comes from a JSON file, flags, or
both (flags win). Reports are written as JSON or CSV; simulation reports
get a rendered figure next to the table unless figures are switched off.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .asymptotics import power_one_sided, power_two_sided
from .errors import ConfigError, GradtestError
from .functionals import (
    Functional,
    functional_from_dict,
    CompositeFunctional,
)
from .measures import Measure, measure_from_dict
from .montecarlo import (
    SimConfig,
    SimResult,
    result_to_csv,
    result_to_dict,
    simulate_d_scan,
    simulate_joint,
    simulate_lan,
    simulate_level,
    simulate_power,
)
from .tangents import ProductTangent, center
from .testing import (
    TestSpec,
    _is_stochastic_order,
    load_sample_csv,
    load_sample_files,
    report_to_dict,
    run_test,
)

__all__ = ["RunConfig", "parse_config", "execute", "main"]

COMMANDS = ("test", "sim-level", "sim-power", "sim-joint", "sim-lan",
            "sim-dscan", "power-table")
FORMATS = ("json", "csv")

_DEFAULT_THETA_GRID = (0.5, 1.0, 2.0)
_DEFAULT_D_GRID = tuple(round(0.1 * k, 1) for k in range(1, 10))


@dataclass
class RunConfig:
    """Validated description of one command invocation."""

    command: str
    x_path: Optional[str] = None
    y_path: Optional[str] = None
    out: Optional[str] = None
    format: str = "json"
    seed: int = 0
    alpha: float = 0.05
    sided: str = "one"
    source: Optional[str] = None
    d: float = 0.5
    n_grid: Optional[Tuple[int, ...]] = None
    reps: Optional[int] = None
    functional: Optional[Functional] = None
    footpoint: Optional[Tuple[Measure, Measure]] = None
    tangent: Optional[ProductTangent] = None
    null_value: Optional[float] = None
    theta: float = 1.0
    theta_grid: Tuple[float, ...] = _DEFAULT_THETA_GRID
    d_grid: Tuple[float, ...] = _DEFAULT_D_GRID
    sigma1: float = 1.0
    figures: bool = True
    workers: int = 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradtest",
        description="Two-sample tests of differentiable statistical "
                    "functionals, with simulation experiments.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--x", help="first sample file (or two-column CSV alone)")
    parser.add_argument("--y", help="second sample file")
    parser.add_argument("--functional",
                        help="functional descriptor: JSON object or 'wilcoxon'")
    parser.add_argument("--alpha", type=float, help="test level (default 0.05)")
    parser.add_argument("--sided", choices=("one", "two"))
    parser.add_argument("--source",
                        help="critical value source: exact, plugin_sum, "
                             "plugin_product, ustat_w, permutation")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="output file for the report table")
    parser.add_argument("--format", choices=FORMATS)
    parser.add_argument("--reps", type=int, help="simulation replications")
    parser.add_argument("--n-grid", help="comma list of total sizes, e.g. 100,400")
    parser.add_argument("--d", type=float, help="second-sample allocation fraction")
    parser.add_argument("--null-value", type=float,
                        help="null boundary a (default: 0.5 for the "
                             "stochastic-ordering functional, else 0)")
    parser.add_argument("--theta", type=float, help="local parameter (sim-lan, sim-dscan)")
    parser.add_argument("--theta-grid", help="comma list of local parameters (sim-power)")
    parser.add_argument("--d-grid", help="comma list of allocations (sim-dscan)")
    parser.add_argument("--sigma1", type=float, help="scale for power-table")
    parser.add_argument("--workers", type=int, help="simulation worker threads")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip figure rendering next to the report")
    return parser


def _number_list(text, what: str) -> Tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [tok for tok in str(text).split(",") if tok.strip()]
    try:
        values = tuple(float(tok) for tok in items)
    except (TypeError, ValueError):
        raise ConfigError(f"{what}: expected a comma list of numbers, got {text!r}") from None
    if not values:
        raise ConfigError(f"{what}: empty list")
    return values


def _int_list(text, what: str) -> Tuple[int, ...]:
    values = _number_list(text, what)
    out = tuple(int(v) for v in values)
    if any(v != int(v) for v in values):
        raise ConfigError(f"{what}: expected integers, got {text!r}")
    return out


def _parse_functional(value) -> Functional:
    if isinstance(value, dict):
        return functional_from_dict(value)
    text = str(value).strip()
    if text.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"functional: invalid JSON ({exc})") from None
        return functional_from_dict(obj)
    if text == "wilcoxon":
        return functional_from_dict({"kind": "wilcoxon"})
    raise ConfigError(
        f"functional: expected 'wilcoxon' or a JSON descriptor, got {value!r}"
    )


def _parse_footpoint(obj) -> Tuple[Measure, Measure]:
    if not isinstance(obj, dict) or "p" not in obj or "q" not in obj:
        raise ConfigError("footpoint must be an object with 'p' and 'q' measures")
    return measure_from_dict(obj["p"]), measure_from_dict(obj["q"])


def _parse_tangent(obj, footpoint) -> ProductTangent:
    if footpoint is None:
        raise ConfigError("a tangent needs a footpoint to live on")
    if not isinstance(obj, dict) or "g1" not in obj or "g2" not in obj:
        raise ConfigError("tangent must be an object with 'g1' and 'g2' value lists")
    p0, q0 = footpoint
    g1 = center(p0, np.asarray(obj["g1"], dtype=float))
    g2 = center(q0, np.asarray(obj["g2"], dtype=float))
    return ProductTangent(g1, g2)


def _require_file(path: Optional[str], what: str) -> None:
    if path is not None and not os.path.isfile(path):
        raise ConfigError(f"{what}: no such file: {path}")


def parse_config(argv: Sequence[str]) -> RunConfig:
    """Parse flags (and an optional JSON config file) into a validated
    RunConfig. Flags override file values; defaults are level 0.05,
    one-sided, JSON output."""
    try:
        args = _build_parser().parse_args(list(argv))
    except SystemExit as exc:
        # argparse already printed its message; surface as a config error
        # for programmatic callers.
        if exc.code not in (0, None):
            raise ConfigError("invalid command line") from None
        raise
    file_cfg = {}
    if args.config is not None:
        _require_file(args.config, "--config")
        with open(args.config) as handle:
            try:
                file_cfg = json.load(handle)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(file_cfg, dict):
            raise ConfigError(f"{args.config}: config must be a JSON object")

    def pick(flag_value, key, default=None):
        if flag_value is not None:
            return flag_value
        return file_cfg.get(key, default)

    cfg = RunConfig(command=args.command)
    cfg.x_path = pick(args.x, "x")
    cfg.y_path = pick(args.y, "y")
    cfg.out = pick(args.out, "out")
    cfg.format = str(pick(args.format, "format", "json"))
    if cfg.format not in FORMATS:
        raise ConfigError(f"format must be one of {', '.join(FORMATS)}, got {cfg.format!r}")
    cfg.seed = int(pick(args.seed, "seed", 0))
    cfg.alpha = float(pick(args.alpha, "alpha", 0.05))
    if not (0.0 < cfg.alpha < 1.0) or math.isnan(cfg.alpha):
        raise ConfigError(f"alpha must lie in (0, 1), got {cfg.alpha}")
    cfg.sided = str(pick(args.sided, "sided", "one"))
    if cfg.sided not in ("one", "two"):
        raise ConfigError(f"sided must be 'one' or 'two', got {cfg.sided!r}")
    source = pick(args.source, "source")
    cfg.source = None if source is None else str(source)
    cfg.d = float(pick(args.d, "d", 0.5))
    if not (0.0 < cfg.d < 1.0):
        raise ConfigError(f"d must lie in (0, 1), got {cfg.d}")
    n_grid = pick(args.n_grid, "n_grid")
    cfg.n_grid = None if n_grid is None else _int_list(n_grid, "n_grid")
    reps = pick(args.reps, "reps")
    cfg.reps = None if reps is None else int(reps)
    functional = pick(args.functional, "functional")
    cfg.functional = None if functional is None else _parse_functional(functional)
    footpoint = file_cfg.get("footpoint")
    cfg.footpoint = None if footpoint is None else _parse_footpoint(footpoint)
    tangent = file_cfg.get("tangent")
    cfg.tangent = None if tangent is None else _parse_tangent(tangent, cfg.footpoint)
    null_value = pick(args.null_value, "null_value")
    cfg.null_value = None if null_value is None else float(null_value)
    cfg.theta = float(pick(args.theta, "theta", 1.0))
    theta_grid = pick(args.theta_grid, "theta_grid")
    if theta_grid is not None:
        cfg.theta_grid = _number_list(theta_grid, "theta_grid")
    d_grid = pick(args.d_grid, "d_grid")
    if d_grid is not None:
        cfg.d_grid = _number_list(d_grid, "d_grid")
    cfg.sigma1 = float(pick(args.sigma1, "sigma1", 1.0))
    if cfg.sigma1 <= 0.0:
        raise ConfigError(f"sigma1 must be positive, got {cfg.sigma1}")
    cfg.workers = int(pick(args.workers, "workers", 1))
    if args.no_figures:
        cfg.figures = False
    else:
        cfg.figures = bool(file_cfg.get("figures", True))
    _require_file(cfg.x_path, "--x")
    _require_file(cfg.y_path, "--y")
    return cfg


def _resolve_functional(cfg: RunConfig) -> Functional:
    if cfg.functional is not None:
        return cfg.functional
    return functional_from_dict({"kind": "wilcoxon"})


def _resolve_source(cfg: RunConfig, functional: Functional) -> str:
    if cfg.source is not None:
        return cfg.source
    if _is_stochastic_order(functional):
        return "ustat_w"
    if isinstance(functional, CompositeFunctional):
        if functional.op == "sum":
            return "plugin_sum"
        if functional.op == "product":
            return "plugin_product"
    if cfg.footpoint is not None:
        return "exact"
    raise ConfigError(
        "no critical value source given and none is implied by the "
        "functional; pass --source"
    )


def _resolve_null_value(cfg: RunConfig, functional: Functional) -> float:
    if cfg.null_value is not None:
        return cfg.null_value
    return 0.5 if _is_stochastic_order(functional) else 0.0


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(out, "w") as handle:
            handle.write(text)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    return repr(value)


def _report_text(report_dict: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report_dict, indent=2, sort_keys=True) + "\n"
    keys = ["statistic", "critical_value", "gamma", "reject", "sigma1", "source"]
    row = ",".join(_format_cell(report_dict[k]) for k in keys)
    return ",".join(keys) + "\n" + row + "\n"


def _result_text(result: SimResult, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(result_to_dict(result), indent=2, sort_keys=True) + "\n"
    return result_to_csv(result)


def _figure_path(out: str) -> str:
    stem, _ = os.path.splitext(out)
    return stem + ".png"


def _maybe_render(cfg: RunConfig, result: SimResult) -> Optional[str]:
    if cfg.out is None or not cfg.figures:
        return None
    from . import figures

    return figures.render_result(result, _figure_path(cfg.out))


def _sim_config(cfg: RunConfig, need_tangent: bool) -> SimConfig:
    if cfg.footpoint is None:
        raise ConfigError("simulation commands need a footpoint in the config file")
    if need_tangent and cfg.tangent is None:
        raise ConfigError("this simulation needs a tangent in the config file")
    functional = _resolve_functional(cfg)
    kwargs = dict(
        footpoint=cfg.footpoint,
        functional=functional,
        tangent=cfg.tangent,
        d=cfg.d,
        alpha=cfg.alpha,
        seed=cfg.seed,
        test_source=_resolve_source(cfg, functional),
        sided=cfg.sided,
        workers=cfg.workers,
    )
    if cfg.n_grid is not None:
        kwargs["n_grid"] = cfg.n_grid
    if cfg.reps is not None:
        kwargs["replications"] = cfg.reps
    return SimConfig(**kwargs)


def _run_test_command(cfg: RunConfig) -> str:
    if cfg.x_path is None:
        raise ConfigError("the test command needs data: --x (and usually --y)")
    if cfg.y_path is None:
        s = load_sample_csv(cfg.x_path)
    else:
        s = load_sample_files(cfg.x_path, cfg.y_path)
    functional = _resolve_functional(cfg)
    source = _resolve_source(cfg, functional)
    spec_kwargs = dict(
        functional=functional,
        null_value=_resolve_null_value(cfg, functional),
        sided=cfg.sided,
        alpha=cfg.alpha,
        source=source,
    )
    if source == "permutation" and cfg.reps is not None:
        spec_kwargs["permutation_reps"] = cfg.reps
    spec = TestSpec(**spec_kwargs)
    footpoint = None
    if cfg.footpoint is not None:
        footpoint = (cfg.footpoint[0], cfg.footpoint[1], cfg.d)
    report = run_test(spec, s, footpoint=footpoint, rng=cfg.seed)
    report_dict = report_to_dict(report)
    _emit(_report_text(report_dict, cfg.format), cfg.out)
    verdict = "reject" if report.reject else "accept"
    print(f"test: {verdict} at alpha={cfg.alpha:g} "
          f"(statistic {report.statistic:.6g}, critical {report.critical_value:.6g}, "
          f"source {report.provenance})")
    return verdict


def _summarize(result: SimResult) -> str:
    if result.kind == "level":
        worst = max((abs(r.rate - r.analytic) for r in result.rows), default=0.0)
        return f"sim-level: {len(result.rows)} sizes, worst |rate - alpha| = {worst:.4f}"
    if result.kind == "power":
        finite = [abs(r.rate - r.analytic) for r in result.rows
                  if math.isfinite(r.analytic)]
        worst = max(finite, default=math.nan)
        return (f"sim-power: {len(result.rows)} grid points, "
                f"worst |rate - limit| = {worst:.4f}")
    if result.kind == "joint":
        gaps = [abs(r.rate - r.analytic) for r in result.rows]
        return (f"sim-joint: {len(result.rows)} sizes, "
                f"worst cross-moment gap = {max(gaps):.4f}")
    if result.kind == "lan":
        medians = ", ".join(f"n={r.n}: {r.rate:.4g}" for r in result.rows)
        return f"sim-lan: median |remainder| {medians}"
    if result.kind == "d_scan":
        argmax = result.diagnostics.get("argmax_d", {})
        shown = ", ".join(f"n={n}: {d:g}" for n, d in sorted(argmax.items()))
        return (f"sim-dscan: empirical optimum {shown}; "
                f"analytic {result.diagnostics.get('d_opt'):.4f}")
    return f"{result.kind}: {len(result.rows)} rows"


def _run_sim_command(cfg: RunConfig) -> None:
    if cfg.command == "sim-level":
        result = simulate_level(_sim_config(cfg, need_tangent=False))
    elif cfg.command == "sim-power":
        result = simulate_power(_sim_config(cfg, need_tangent=True), cfg.theta_grid)
    elif cfg.command == "sim-joint":
        result = simulate_joint(_sim_config(cfg, need_tangent=True))
    elif cfg.command == "sim-lan":
        result = simulate_lan(_sim_config(cfg, need_tangent=True), cfg.theta)
    else:
        result = simulate_d_scan(_sim_config(cfg, need_tangent=True),
                                 cfg.d_grid, cfg.theta)
    _emit(_result_text(result, cfg.format), cfg.out)
    figure = _maybe_render(cfg, result)
    summary = _summarize(result)
    if figure is not None:
        summary += f" (figure: {figure})"
    print(summary)


def _run_power_table(cfg: RunConfig) -> None:
    thetas = cfg.theta_grid
    if thetas == _DEFAULT_THETA_GRID:
        thetas = tuple(round(0.25 * k, 2) for k in range(0, 13))
    one = [power_one_sided(t, cfg.sigma1, cfg.alpha) for t in thetas]
    two = [power_two_sided(t, cfg.sigma1, cfg.alpha) for t in thetas]
    if cfg.format == "json":
        payload = {
            "alpha": cfg.alpha,
            "sigma1": cfg.sigma1,
            "rows": [
                {"theta": t, "one_sided": o, "two_sided": w}
                for t, o, w in zip(thetas, one, two)
            ],
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        lines = ["theta,one_sided,two_sided"]
        lines.extend(f"{t!r},{o!r},{w!r}" for t, o, w in zip(thetas, one, two))
        text = "\n".join(lines) + "\n"
    _emit(text, cfg.out)
    figure = None
    if cfg.out is not None and cfg.figures:
        from . import figures

        figure = figures.render_power_table(thetas, one, two, _figure_path(cfg.out))
    summary = (f"power-table: {len(thetas)} rows at alpha={cfg.alpha:g}, "
               f"sigma1={cfg.sigma1:g}")
    if figure is not None:
        summary += f" (figure: {figure})"
    print(summary)


def execute(cfg: RunConfig) -> int:
    """Run one parsed command; writes artifacts and prints a one-line
    summary. Returns the process exit status."""
    if cfg.command == "test":
        _run_test_command(cfg)
    elif cfg.command == "power-table":
        _run_power_table(cfg)
    elif cfg.command.startswith("sim-"):
        _run_sim_command(cfg)
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown command {cfg.command!r}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Console entry point: parse, execute, map errors to exit codes."""
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return execute(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except GradtestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
