"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 input error, 3 infeasible / no
feasible plan found.  Log verbosity comes from ``ISC3_LOG`` (error, info,
debug).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

from .constraints import FeasibilityChecker, PhysicsModels, penalty
from .errors import InstanceInfeasible, Isc3Error, NoFeasibleFound, NoFeasiblePlan, ParseError
from .instance import (
    Isc3Demands,
    canonical_instance,
    dumps_instance,
    generate_instance,
    load_instance,
)
from .pipeline import RunConfig, run_pipeline
from .plan import RoutePlan
from .render import RenderSpec, render_svg
from .routing import Objective
from .solvers import (
    ALGORITHMS,
    ComparisonRow,
    SolverConfig,
    SolverResult,
    compare,
    penalty_weights_from_dict,
    solve,
)

log = logging.getLogger("isc3route")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INFEASIBLE = 0, 1, 2, 3
CSV_COLUMNS = ("algorithm", "total_length_km", "feasible", "evaluations", "wall_time_s", "seed")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise _UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _json_dump(data: Any) -> str:
    return json.dumps(data, indent=2, allow_nan=False) + "\n"


def _write(out: str | None, text: str) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _settings(args) -> tuple[Isc3Demands, PhysicsModels, dict[str, Any]]:
    """Demands, physics and solver overrides from --config and --demands."""
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    demands = cfg.demands
    if getattr(args, "demands", None):
        try:
            raw = json.loads(Path(args.demands).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read demands {args.demands}: {exc}") from None
        demands = Isc3Demands.from_dict(raw.get("demands", raw) if isinstance(raw, dict) else raw)
    return demands, cfg.models, dict(cfg.solver)


def _solver_config(algorithm: str, seed: int, budget: int | None, overrides: dict[str, Any],
                   time_limit: float | None = None) -> SolverConfig:
    data = {k: v for k, v in overrides.items() if k != "algorithm"}
    data.update(algorithm=algorithm, seed=seed)
    if budget is not None:
        data["eval_budget"] = budget
    if time_limit is not None:
        data["time_limit"] = time_limit
    return SolverConfig.from_dict(data)


def bench_csv(rows: Sequence[ComparisonRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r.algorithm, repr(r.total_length_km), str(r.feasible).lower(), r.evaluations,
                    repr(r.wall_time_s), r.seed])
    return buf.getvalue()


def emit_bench_table(rows: Sequence[ComparisonRow], csv_path: str | Path | None = None) -> str:
    """Write the comparison CSV (full float precision) and return an aligned text table."""
    if not rows:
        raise ValueError("empty comparison table")
    if csv_path is not None:
        Path(csv_path).write_text(bench_csv(rows), encoding="utf-8")
    cells = [list(CSV_COLUMNS)] + [
        [r.algorithm, f"{r.total_length_km:.3f}", "yes" if r.feasible else "no", str(r.evaluations),
         f"{r.wall_time_s:.6f}", str(r.seed)] for r in rows
    ]
    widths = [max(len(row[k]) for row in cells) for k in range(len(CSV_COLUMNS))]
    lines = ["  ".join(c.ljust(wd) if k == 0 else c.rjust(wd) for k, (c, wd) in enumerate(zip(row, widths)))
             for row in cells]
    lines.insert(1, "  ".join("-" * wd for wd in widths))
    return "\n".join(lines) + "\n"


def _result_json(result: SolverResult, timing: bool) -> str:
    return _json_dump(result.to_dict(include_wall_time=timing))


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    inst = generate_instance(args.seed, args.n_stations, args.area, args.base_stations,
                             (args.demand_lo, args.demand_hi))
    _write(args.out, dumps_instance(inst))
    return EXIT_OK


def cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    demands, models, overrides = _settings(args)
    cfg = _solver_config(args.algorithm, args.seed, args.budget, overrides, args.time_limit)
    if args.edge:
        from .edge import solve_remote

        result = solve_remote(args.edge, instance, demands, cfg, models)
        code = EXIT_OK
    else:
        try:
            result, code = solve(instance, demands, models, cfg), EXIT_OK
        except NoFeasibleFound as exc:
            print(f"error: {exc}", file=sys.stderr)
            result, code = exc.result, EXIT_INFEASIBLE
    _write(args.out, _result_json(result, not args.no_timing))
    return code


def _load_plan(path: str) -> RoutePlan:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read plan {path}: {exc}") from None
    if isinstance(data, dict) and "best_plan" in data:
        data = data["best_plan"]
    return RoutePlan.from_dict(data)


def cmd_evaluate(args) -> int:
    instance = load_instance(args.instance)
    demands, models, overrides = _settings(args)
    weights = penalty_weights_from_dict(overrides["penalty_weights"]) if "penalty_weights" in overrides else None
    checker = FeasibilityChecker(instance, demands, models.link, models.energy, models.sensing)
    plan = checker.recompute(_load_plan(args.plan))
    report = checker.check(plan)
    objective = Objective(plan.total_length, penalty(report, weights))
    _write(args.out, _json_dump({"objective": objective.to_dict(), "plan": plan.to_dict(),
                                 "feasibility": report.to_dict()}))
    return EXIT_OK if report.passed else EXIT_INFEASIBLE


def cmd_bench(args) -> int:
    instance = load_instance(args.instance) if args.instance else canonical_instance(args.seed)
    demands, models, overrides = _settings(args)
    configs = [_solver_config(alg, args.seed, args.budget, overrides) for alg in ALGORITHMS]
    rows = compare(instance, demands, models, configs)
    to_file = args.out not in (None, "-")
    if args.format == "json":
        payload = [r.result.to_dict(include_wall_time=not args.no_timing) if r.result else
                   {"algorithm": r.algorithm, "error": r.error} for r in rows]
        _write(args.out, _json_dump(payload))
        table = emit_bench_table(rows)
    else:
        table = emit_bench_table(rows, args.out if to_file else None)
        if not to_file:
            sys.stdout.write(bench_csv(rows))
    (sys.stdout if to_file else sys.stderr).write(table)
    for r in rows:
        if r.error:
            print(f"{r.algorithm}: {r.error}", file=sys.stderr)
    return EXIT_OK if all(r.feasible for r in rows) else EXIT_INFEASIBLE


def cmd_pipeline(args) -> int:
    cfg = RunConfig.load(args.config)
    if args.edge:
        cfg = replace(cfg, edge=args.edge)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    report = run_pipeline(cfg)
    _write(args.out, _json_dump(report.to_dict(include_timing=not args.no_timing)))
    if args.telemetry_csv and report.telemetry is not None:
        Path(args.telemetry_csv).write_text(report.telemetry.to_csv(), encoding="utf-8")
    if report.error:
        print(f"error at step {report.error['step']} ({report.error['name']}): {report.error['type']}: "
              f"{report.error['message']}", file=sys.stderr)
        return EXIT_INFEASIBLE if report.error["type"] in ("NoFeasibleFound", "InstanceInfeasible") else EXIT_INPUT
    return EXIT_OK


def cmd_serve(args) -> int:
    from .edge import serve

    serve(args.bind)
    return EXIT_OK


def cmd_render(args) -> int:
    instance = load_instance(args.instance)
    demands, models, _ = _settings(args)
    plan = _load_plan(args.plan) if args.plan else None
    spec = RenderSpec(Path(args.out) if args.out else None, args.size, coverage=not args.no_coverage)
    _write(args.out, render_svg(instance, plan, spec, demands, models.link))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="isc3route", description="UAV delivery routing under ISC3 constraints")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed_default: int | None = 0):
        sp.add_argument("--config", help="run-config JSON (demands, link/energy/sensing, solver overrides)")
        sp.add_argument("--demands", help="JSON file with the ISC3 demand block")
        sp.add_argument("--out", help="output path (default stdout)")
        if seed_default is not None:
            sp.add_argument("--seed", type=int, default=seed_default)

    g = sub.add_parser("generate", help="write a seeded random instance")
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--n-stations", type=int, default=10)
    g.add_argument("--area", type=float, default=40.0, help="square side in km")
    g.add_argument("--base-stations", type=int, default=5)
    g.add_argument("--demand-lo", type=int, default=1)
    g.add_argument("--demand-hi", type=int, default=5)
    g.add_argument("--out")
    g.add_argument("--format", choices=["json"], default="json")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve one instance with one algorithm")
    s.add_argument("--instance", required=True)
    s.add_argument("--algorithm", choices=ALGORITHMS, default="sa")
    s.add_argument("--budget", type=int, help="objective evaluations")
    s.add_argument("--time-limit", type=float)
    s.add_argument("--edge", metavar="HOST:PORT", help="solve on the edge service")
    s.add_argument("--no-timing", action="store_true", help="omit wall time for byte-stable output")
    s.add_argument("--format", choices=["json"], default="json")
    common(s)
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("evaluate", help="feasibility report for a plan")
    e.add_argument("--instance", required=True)
    e.add_argument("--plan", required=True, help="plan JSON or solve result JSON")
    e.add_argument("--format", choices=["json"], default="json")
    common(e, seed_default=None)
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("bench", help="compare the four solvers")
    b.add_argument("--instance", help="instance JSON (default: canonical generated scene for --seed)")
    b.add_argument("--budget", type=int, default=20_000)
    b.add_argument("--format", choices=["csv", "json"], default="csv")
    b.add_argument("--no-timing", action="store_true")
    common(b, seed_default=7)
    b.set_defaults(func=cmd_bench)

    pl = sub.add_parser("pipeline", help="run the five-step pipeline")
    pl.add_argument("--config", required=True)
    pl.add_argument("--edge", metavar="HOST:PORT")
    pl.add_argument("--seed", type=int)
    pl.add_argument("--out")
    pl.add_argument("--telemetry-csv")
    pl.add_argument("--no-timing", action="store_true")
    pl.add_argument("--format", choices=["json"], default="json")
    pl.set_defaults(func=cmd_pipeline)

    sv = sub.add_parser("serve", help="run the edge solve service")
    sv.add_argument("--bind", default="127.0.0.1:7878", metavar="HOST:PORT")
    sv.set_defaults(func=cmd_serve)

    r = sub.add_parser("render", help="SVG of a scene and plan")
    r.add_argument("--instance", required=True)
    r.add_argument("--plan")
    r.add_argument("--size", type=int, default=800)
    r.add_argument("--no-coverage", action="store_true")
    r.add_argument("--format", choices=["svg"], default="svg")
    common(r, seed_default=None)
    r.set_defaults(func=cmd_render)
    return p


def _configure_logging() -> None:
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("ISC3_LOG", "error").lower(), logging.ERROR)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        sys.stderr.write(str(exc))
        return EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as exc:
        sys.stderr.write(str(exc))
        return EXIT_USAGE
    except (InstanceInfeasible, NoFeasiblePlan, NoFeasibleFound) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (Isc3Error, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
