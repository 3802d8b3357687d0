"""Command-line front end.

Subcommands operate on a scenario file and print CSV (12 significant
digits, header row) to stdout or ``--output``:

    riskalloc evaluate SCENARIO --k 0.6,0.4
    riskalloc optimize SCENARIO
    riskalloc kkt-check SCENARIO --k 0.6,0.4
    riskalloc sweep SCENARIO --rho-grid 0:1:0.1
    riskalloc density SCENARIO --grid-points 101
    riskalloc convexity SCENARIO --k2-grid 0.02:0.98:0.02

Exit codes: 0 success, 1 parse/validation failure, 2 numerical failure,
3 optimality conditions violated (kkt-check only).  ``RISKALLOC_SEED``
overrides any configured Monte Carlo seed; ``RISKALLOC_THREADS`` sets the
worker count for grid commands.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Optional

import numpy as np

from .errors import (
    CapExceeded,
    DimensionMismatch,
    DimensionTooLarge,
    DomainError,
    NoConvergence,
    NonPositiveReturn,
    ParseError,
    QuadratureNotConverged,
    RiskAllocError,
    ValidationError,
)
from .objective import (
    AllocationVector,
    McConfig,
    build_evaluator,
    continuous_logvar_second_derivative,
    evaluate_mc,
    log_variance,
)
from .kkt import certify
from .optimize import grid_refine, maximize, sweep_rho
from .payoffs import (
    ContinuousUniform,
    DiscreteJoint,
    ErlangCompoundDensity,
    build_discrete_compound,
    erlang_compound_cdf,
    erlang_compound_pdf,
)
from .scenario import Scenario, parse_scenario

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2
EXIT_KKT_VIOLATED = 3

_NUMERICAL_ERRORS = (
    CapExceeded,
    QuadratureNotConverged,
    NoConvergence,
    NonPositiveReturn,
    FloatingPointError,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(message)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


def _write_csv(header, rows, output: Optional[str]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(cell) for cell in row])
    text = buf.getvalue()
    if output:
        with open(output, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _parse_grid(text: str, where: str) -> list[float]:
    """Parse 'a:b:step' into the inclusive grid a, a+step, ..., b.

    Values snap to the 1e-12 lattice so grids like 0:1:0.1 land exactly on
    the decimals they name.
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise ParseError(f"{where} must look like a:b:step, got {text!r}")
    try:
        a, b, step = (float(p) for p in parts)
    except ValueError:
        raise ParseError(f"{where} must contain numbers, got {text!r}") from None
    if step <= 0 or b < a:
        raise ParseError(f"{where} needs step > 0 and b >= a, got {text!r}")
    count = int(np.floor((b - a) / step + 1e-9)) + 1
    return [round(a + i * step, 12) for i in range(count)]


def _parse_k(text: str) -> AllocationVector:
    try:
        values = [float(part) for part in text.split(",")]
    except ValueError:
        raise ParseError(f"--k must be comma-separated numbers, got {text!r}") from None
    return AllocationVector(np.array(values))


def _seed_override(args_seed: Optional[int]) -> Optional[int]:
    env = os.environ.get("RISKALLOC_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ParseError(f"RISKALLOC_SEED must be an integer, got {env!r}") from None
    return args_seed


def _thread_count() -> int:
    env = os.environ.get("RISKALLOC_THREADS")
    if env is None:
        return 1
    try:
        threads = int(env)
    except ValueError:
        raise ParseError(f"RISKALLOC_THREADS must be an integer, got {env!r}") from None
    return max(threads, 1)


def _grid_map(fn, items):
    threads = _thread_count()
    if threads == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _mc_config(scenario: Scenario, args) -> McConfig:
    base = scenario.mc or McConfig(seed=0, samples=100_000)
    seed = _seed_override(getattr(args, "seed", None))
    if seed is not None:
        base = replace(base, seed=seed)
    samples = getattr(args, "samples", None)
    if samples is not None:
        base = replace(base, samples=samples)
    return base


def _default_k(scenario: Scenario) -> AllocationVector:
    m = scenario.model.m
    return AllocationVector(np.full(m, 1.0 / m))


def cmd_evaluate(scenario: Scenario, args) -> int:
    k = _parse_k(args.k) if args.k else _default_k(scenario)
    is_uniform = isinstance(scenario.model, ContinuousUniform)
    method = args.method
    if method == "auto":
        method = "quadrature" if is_uniform else "exact"
    if method == "quadrature" and not is_uniform:
        raise ValidationError("quadrature evaluation requires a uniform model")
    if method == "exact" and is_uniform:
        raise ValidationError("the uniform model has no finite atom set; use quadrature or mc")

    header = ["method", "u", "mean_log", "var_log", "stderr_u"]
    evaluator = None
    if method != "mc":
        try:
            evaluator = build_evaluator(scenario.model, scenario.spec)
        except CapExceeded:
            if args.method != "auto":
                raise
            method = "mc"  # too many atoms to enumerate; estimate instead
    if method == "mc":
        value, stderr = evaluate_mc(scenario.model, k, scenario.spec, _mc_config(scenario, args))
        _write_csv(header, [["mc", value.u, value.mean_log, value.var_log, stderr]], args.output)
        return EXIT_OK
    value = evaluator.value(k.values)
    _write_csv(header, [[method, value.u, value.mean_log, value.var_log, ""]], args.output)
    return EXIT_OK


def cmd_optimize(scenario: Scenario, args) -> int:
    evaluator = build_evaluator(scenario.model, scenario.spec)
    if args.grid_oracle:
        result = grid_refine(evaluator, scenario.spec)
    else:
        result = maximize(evaluator, scenario.spec, scenario.solver)
    m = evaluator.m
    header = [f"k{i + 1}" for i in range(m)] + [
        "u",
        "iterations",
        "converged",
        "kkt_satisfied",
        "kkt_max_violation",
    ]
    row = list(result.k_star.values) + [
        result.u_star,
        result.iterations,
        result.converged,
        result.kkt.satisfied,
        result.kkt.max_violation,
    ]
    _write_csv(header, [row], args.output)
    return EXIT_OK


def cmd_kkt_check(scenario: Scenario, args) -> int:
    if not args.k:
        raise ParseError("kkt-check requires --k")
    k = _parse_k(args.k)
    evaluator = build_evaluator(scenario.model, scenario.spec)
    report = certify(evaluator, k, scenario.spec, tol=args.tol)
    header = ["alternative", "k", "residual", "active", "violation"]
    rows = []
    for i in range(k.m):
        active = bool(report.active[i])
        g = float(report.residuals[i])
        violation = abs(g - 1.0) if active else max(g - 1.0, 0.0)
        rows.append([i + 1, float(k.values[i]), g, active, violation])
    _write_csv(header, rows, args.output)
    return EXIT_OK if report.satisfied else EXIT_KKT_VIOLATED


def cmd_sweep(scenario: Scenario, args) -> int:
    rho_grid = _parse_grid(args.rho_grid, "--rho-grid")
    factory = lambda spec: build_evaluator(scenario.model, spec)
    rows = sweep_rho(factory, scenario.spec, rho_grid, scenario.solver)
    m = scenario.model.m
    header = ["rho"] + [f"k{i + 1}" for i in range(m)] + ["u", "converged", "error"]
    out = []
    for row in rows:
        if row.result is None:
            out.append([row.rho] + [""] * m + ["", "", row.error])
        else:
            out.append(
                [row.rho]
                + list(row.result.k_star.values)
                + [row.result.u_star, row.result.converged, ""]
            )
    _write_csv(header, out, args.output)
    return EXIT_OK


def cmd_density(scenario: Scenario, args) -> int:
    if not isinstance(scenario.model, ContinuousUniform):
        raise ValidationError("density requires a uniform model")
    density = ErlangCompoundDensity(n=scenario.spec.n, x_max=scenario.model.x_max)
    lo, hi = density.support
    if args.z_grid:
        zs = _parse_grid(args.z_grid, "--z-grid")
    else:
        edges = np.linspace(lo, hi, args.grid_points + 2)
        zs = list(edges[1:-1])
    rows = _grid_map(
        lambda z: [z, erlang_compound_pdf(z, density), erlang_compound_cdf(z, density)], zs
    )
    _write_csv(["z", "pdf", "cdf"], rows, args.output)
    return EXIT_OK


def cmd_convexity(scenario: Scenario, args) -> int:
    if args.k2_grid:
        grid = _parse_grid(args.k2_grid, "--k2-grid")
    else:
        grid = [round(0.02 * i, 12) for i in range(1, args.grid_points + 1)]
    model = scenario.model
    if isinstance(model, ContinuousUniform):
        x_max, n = model.x_max, scenario.spec.n

        def probe(k2: float) -> list:
            return [k2, continuous_logvar_second_derivative(x_max, n, k2)]

    elif isinstance(model, DiscreteJoint) and model.m == 2:
        dist = build_discrete_compound(model, scenario.spec.n)
        h = 1e-4

        def probe(k2: float) -> list:
            vs = [
                log_variance(dist, np.array([1.0 - c, c]))
                for c in (k2 - h, k2, k2 + h)
            ]
            return [k2, (vs[2] - 2.0 * vs[1] + vs[0]) / (h * h)]

    else:
        raise ValidationError("convexity requires a uniform or two-alternative discrete model")
    rows = _grid_map(probe, grid)
    _write_csv(["k2", "second_derivative"], rows, args.output)
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="riskalloc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn):
        cmd = sub.add_parser(name)
        cmd.add_argument("scenario", help="path to a scenario JSON file")
        cmd.add_argument("--output", default=None, help="write CSV here instead of stdout")
        cmd.add_argument("--format", default="csv", choices=["csv"])
        cmd.set_defaults(handler=fn)
        return cmd

    cmd = add("evaluate", cmd_evaluate)
    cmd.add_argument("--k", default=None, help="allocation, e.g. 0.6,0.4")
    cmd.add_argument("--method", default="auto", choices=["auto", "exact", "quadrature", "mc"])
    cmd.add_argument("--seed", type=int, default=None)
    cmd.add_argument("--samples", type=int, default=None)

    cmd = add("optimize", cmd_optimize)
    cmd.add_argument("--grid-oracle", action="store_true", help="use the refined-grid search")

    cmd = add("kkt-check", cmd_kkt_check)
    cmd.add_argument("--k", default=None, help="allocation to certify")
    cmd.add_argument("--tol", type=float, default=1e-6)

    cmd = add("sweep", cmd_sweep)
    cmd.add_argument("--rho-grid", required=True, help="risk weights as a:b:step")

    cmd = add("density", cmd_density)
    cmd.add_argument("--z-grid", default=None, help="evaluation points as a:b:step")
    cmd.add_argument("--grid-points", type=int, default=101)

    cmd = add("convexity", cmd_convexity)
    cmd.add_argument("--k2-grid", default=None, help="risky weights as a:b:step")
    cmd.add_argument("--grid-points", type=int, default=49)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        scenario = parse_scenario(args.scenario)
        return args.handler(scenario, args)
    except (ParseError, ValidationError, DomainError, DimensionMismatch, DimensionTooLarge, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except RiskAllocError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
