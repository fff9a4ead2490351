"""Recompute the golden regression sets and write them to tests/golden/."""
import argparse
import logging
from pathlib import Path

from hal.golden import freeze

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dir", default=str(Path(__file__).resolve().parents[1] / "tests" / "golden"))
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    for p in freeze(args.dir):
        logging.info("wrote %s", p)
