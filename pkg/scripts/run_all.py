"""Run every experiment with its config from configs/ and write CSVs to results/.

    python scripts/run_all.py [--jobs 4] [--out results]

Prints one summary line per experiment; exit status is 1 if any row fails.
"""

import argparse
import dataclasses
import sys
import time
from pathlib import Path

from bsml.harness import EXPERIMENTS, load_config, run_experiment, write_results

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default=str(ROOT / "results"))
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()

    failed = []
    for name in EXPERIMENTS:
        cfg = load_config(ROOT / "configs" / f"{name}.cfg")
        changes = dict(jobs=args.jobs, output_path=str(Path(args.out) / f"{name}.csv"))
        if args.seed is not None:
            changes["seed"] = args.seed
        cfg = dataclasses.replace(cfg, **changes).validate()
        start = time.perf_counter()
        res = run_experiment(cfg)
        write_results(res, cfg)
        print(f"{res.summary():55s} {time.perf_counter() - start:7.1f}s")
        if not res.passed:
            failed.append(name)
    if failed:
        print("failing:", ", ".join(failed))
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
