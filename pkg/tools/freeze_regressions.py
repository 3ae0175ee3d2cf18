"""Recompute the frozen scaling-regression constants and write the table.

Run from the repository root after any intentional change to the signer
or the reductions, then eyeball the diff before committing it.
"""

import json
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from balancer.harness import (CONFIG_FORMAT_VERSION, REGRESSION_PATH,
                              compute_regression_metrics, regression_configs)


def main() -> int:
    metrics = compute_regression_metrics()
    entries = {}
    for key, (cfg, field_name) in sorted(regression_configs().items()):
        entries[key] = {"value": metrics[key], "field": field_name,
                        "subcommand": cfg.subcommand, "T": cfg.T,
                        "seed": cfg.seed_base}
    table = {"format_version": CONFIG_FORMAT_VERSION, "entries": entries}
    os.makedirs(os.path.dirname(REGRESSION_PATH), exist_ok=True)
    with open(REGRESSION_PATH, "w", encoding="utf-8") as fh:
        json.dump(table, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(table, indent=2, sort_keys=True))
    print(f"\nwrote {REGRESSION_PATH}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
