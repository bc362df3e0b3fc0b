"""Five-step pipeline on the canonical run config, optionally offloading to a local edge service.

    python3 scripts/pipeline_demo.py [--edge] [--svg results/plan.svg]
"""

import argparse
import json
from dataclasses import replace
from pathlib import Path

from isc3route.edge import EdgeServer
from isc3route.instance import load_instance
from isc3route.pipeline import RunConfig, run_pipeline
from isc3route.render import write_svg

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=str(ROOT / "data" / "run_config.json"))
    ap.add_argument("--edge", action="store_true", help="start an in-process edge service and offload to it")
    ap.add_argument("--svg", default=str(ROOT / "results" / "plan.svg"))
    args = ap.parse_args()

    cfg = RunConfig.load(args.config)
    server = None
    if args.edge:
        server = EdgeServer(("127.0.0.1", 0))
        server.start_background()
        cfg = replace(cfg, edge=server.address)
    try:
        report = run_pipeline(cfg)
    finally:
        if server is not None:
            server.shutdown()
            server.server_close()

    for s in report.steps:
        print(f"step {s['step']} {s['name']:<10} {s['status']:<6} {s['elapsed_s'] * 1000:8.1f} ms")
    if not report.completed:
        print(json.dumps(report.error, indent=2))
        raise SystemExit(1)
    res = report.decision.result
    print(f"{res.algorithm} via {report.decision.transport}: {res.best_objective.total_length:.3f} km, "
          f"{len(res.best_plan.trips)} trips, {len(report.telemetry.events)} telemetry events")
    if report.decision.notice:
        print(f"notice: {report.decision.notice}")
    Path(args.svg).parent.mkdir(parents=True, exist_ok=True)
    write_svg(args.svg, load_instance(cfg.scene_path), res.best_plan, demands=cfg.demands, link=cfg.models.link)
    print(f"svg: {args.svg}")


if __name__ == "__main__":
    main()
