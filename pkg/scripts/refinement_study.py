"""Grid-refinement orders: counterexample residual, smooth-gauge discrepancy and
Poisson error on the disk. Writes plot-ready CSV and prints the fitted orders."""
import argparse
import csv
import logging
from pathlib import Path

import numpy as np

from hal import pde_system as ps
from hal.field import Grid, ScalarField
from hal.hodge import PoissonProblem, solve_dirichlet


def counterexample(cells_list, eps):
    for cells in cells_list:
        g = Grid.cube(2, cells, 0.5)
        ce = ps.counterexample(g, eps)
        yield g.h, float(ps.residual(ce.u, ce.omega).values[ce.mask].max())


def gauge(cells_list):
    for cells in cells_list:
        g = Grid.cube(2, cells)
        X, Y = g.mesh()
        u = ps.VectorField(g, np.stack([np.sin(X) * np.exp(Y), X * Y ** 2]))
        om = ps.ConnectionForm(g, 2, np.stack([np.stack([np.cos(Y), X * Y])]))
        P = ps.GaugeField.planar_rotation(g, 0.7 * np.sin(X + 2 * Y))
        yield g.h, ps.gauge_discrepancy(u, om, P)


def poisson(cells_list):
    for cells in cells_list:
        g = Grid.cube(2, cells)
        X, Y = g.mesh()
        r2 = X ** 2 + Y ** 2
        exact = np.where(r2 < 1, (1 - r2) ** 2, 0.0)
        w = solve_dirichlet(PoissonProblem(ScalarField(g, np.where(r2 < 1, 8 - 16 * r2, 0.0))))
        yield g.h, float(np.abs(w.values - exact).max())


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--eps", type=float, default=2.0 ** -4)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    studies = {"counterexample": counterexample((128, 256, 512, 1024), args.eps),
               "gauge": gauge((32, 64, 128, 256, 512)),
               "poisson": poisson((32, 64, 128, 256))}
    for name, rows in studies.items():
        rows = list(rows)
        with open(out / f"refinement_{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["h", "error"])
            w.writerows(rows)
        h, e = zip(*rows)
        logging.info("%-15s fitted order %.3f", name, ps.fit_power(h, e))
