"""Write the canonical benchmark scene and its run config into data/."""

import json
from pathlib import Path

from isc3route.instance import canonical_instance, save_instance

DATA = Path(__file__).resolve().parent.parent / "data"


def main() -> None:
    DATA.mkdir(exist_ok=True)
    save_instance(canonical_instance(), DATA / "canonical.json")
    run_config = {
        "demands": {"min_data_rate": 200000.0, "min_sensing_accuracy": 0.95, "energy_budget_per_trip": 200.0,
                    "capacity": 20, "max_trip_distance": 75.0},
        "scene": {"instance": "canonical.json"},
        "agent": {"kind": "rule_based"},
        "solver": {"eval_budget": 20000},
        "seed": 0,
        "cruise_speed_mps": 15.0,
        "turnaround_s": 60.0,
    }
    (DATA / "run_config.json").write_text(json.dumps(run_config, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {DATA / 'canonical.json'} and {DATA / 'run_config.json'}")


if __name__ == "__main__":
    main()
