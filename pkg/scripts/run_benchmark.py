"""Four-solver comparison on the canonical scene; writes a CSV and prints a table.

    python3 scripts/run_benchmark.py [--seed 0] [--budget 20000] [--out results/bench.csv]
"""

import argparse
from pathlib import Path

from isc3route.cli import emit_bench_table
from isc3route.instance import Isc3Demands, load_instance
from isc3route.solvers import compare, default_configs

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--instance", default=str(ROOT / "data" / "canonical.json"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--budget", type=int, default=20_000)
    ap.add_argument("--out", default=str(ROOT / "results" / "bench.csv"))
    args = ap.parse_args()

    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    rows = compare(load_instance(args.instance), Isc3Demands(), None, default_configs(args.seed, args.budget))
    print(emit_bench_table(rows, args.out), end="")
    print(f"csv: {args.out}")


if __name__ == "__main__":
    main()
