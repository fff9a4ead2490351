"""Run every INI campaign in scripts/campaigns and print one summary line per group."""
import argparse
import logging
from pathlib import Path

from hal.campaign import run_campaign

HERE = Path(__file__).resolve().parent

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("configs", nargs="*", help="INI files (default: all bundled campaigns)")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    configs = args.configs or sorted((HERE / "campaigns").glob("*.ini"))
    failed = 0
    for cfg in configs:
        rep = run_campaign(cfg, args.out, args.threads)
        failed += not rep.passed
        for row in rep.summary["cases"]:
            if "rejected" in row:
                logging.info("%-8s %-22s %-14s rejected: %s", rep.config.name, row["inequality_id"],
                             row["fixture"], row["rejected"])
            else:
                logging.info("%-8s %-22s %-14s ratios %s stable=%s", rep.config.name, row["inequality_id"],
                             row["fixture"], " -> ".join(f"{r:.4f}" for r in row["ratios"]), row["stable"])
    raise SystemExit(1 if failed else 0)
