"""Dirichlet Poisson solves on balls and the Hodge decomposition of 1-forms on the disk.

The decomposition works on a staggered complex over the cells whose centres
lie in the disk: ``a`` on interior nodes (zero tangential part), the 2-form
``b`` on cells (zero outside, vanishing normal part), the 1-form on edges.
With edge differences D0 and cell circulations D1 one has D1 D0 = 0, so the
three parts are orthogonal in the edge inner product up to solver error.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .field import Ball, FormField, Grid, ScalarField, codifferential, exterior_derivative, unit_ball_volume

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class PoissonProblem:
    rhs: ScalarField
    region: Ball | None = None
    boundary: str = "dirichlet"
    tolerance: float = 1e-10
    max_iterations: int = 20000
    method: str = "direct"

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.boundary not in ("dirichlet", "normal"):
            raise ValueError(f"unknown boundary kind {self.boundary!r}")
        if self.method not in ("direct", "cg"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.region is None:
            object.__setattr__(self, "region", Ball.unit(self.rhs.grid.dim))


@dataclass(frozen=True)
class PoissonSolution:
    field: ScalarField
    residual: float
    iterations: int
    log: list = field(default_factory=list)


def _lattice_laplacian(active: np.ndarray, spacing) -> tuple[sp.csr_matrix, np.ndarray]:
    """-Lap_h on the active nodes of a lattice, zero values assumed elsewhere."""
    idx = -np.ones(active.shape, int)
    nodes = np.nonzero(active)
    count = len(nodes[0])
    idx[nodes] = np.arange(count)
    rows, cols, vals = [np.arange(count)], [np.arange(count)], [np.full(count, sum(2 / h ** 2 for h in spacing))]
    for ax, h in enumerate(spacing):
        for step in (-1, 1):
            nb = list(nodes)
            nb[ax] = nodes[ax] + step
            inside = (nb[ax] >= 0) & (nb[ax] < active.shape[ax])
            j = np.full(count, -1)
            j[inside] = idx[tuple(c[inside] for c in nb)]
            ok = j >= 0
            rows.append(np.nonzero(ok)[0])
            cols.append(j[ok])
            vals.append(np.full(ok.sum(), -1 / h ** 2))
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(count, count))
    return A, idx


def _solve_spd(A: sp.csr_matrix, b: np.ndarray, tol: float, method: str,
               max_iterations: int) -> tuple[np.ndarray, float, int, list]:
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0:
        return np.zeros_like(b), 0.0, 0, []
    history = []
    if method == "direct":
        x = spla.spsolve(A.tocsc(), b)
        iters = 1
    else:
        def record(xk):
            history.append(float(np.linalg.norm(A @ xk - b)) / bnorm)
        x, info = spla.cg(A, b, rtol=tol, maxiter=max_iterations, callback=record)
        iters = len(history)
    res = float(np.linalg.norm(A @ x - b)) / bnorm
    if method == "direct":
        history.append(res)
    for k, r in enumerate(history[:: max(1, len(history) // 20)]):
        log.debug("poisson iteration %d residual %.3e", k, r)
    if not res <= max(tol, 1e-12) * 10:
        raise SolverError("Poisson solve did not reach the tolerance", res)
    return x, res, iters, history


def solve_dirichlet(problem: PoissonProblem, return_log: bool = False):
    """Solve -Lap w = rhs on nodes strictly inside the region, w = 0 elsewhere,
    with the 5-point (n=2) or 7-point (n=3) stencil."""
    g = problem.rhs.grid
    ball = problem.region
    if not g.contains_box(np.array(ball.center) - ball.radius, np.array(ball.center) + ball.radius):
        raise ValueError("region is not inside the grid box")
    active = g.radius(ball.center) < ball.radius - 1e-12
    A, idx = _lattice_laplacian(active, g.spacing)
    x, res, iters, history = _solve_spd(A, problem.rhs.values[active], problem.tolerance,
                                        problem.method, problem.max_iterations)
    out = np.zeros(g.shape)
    out[active] = x
    w = ScalarField(g, out)
    if return_log:
        return PoissonSolution(w, res, iters, history)
    return w


# -- Hodge decomposition on the disk --------------------------------------------

@dataclass(frozen=True)
class DiskComplex:
    """Staggered cochain complex of the cells whose centres lie in a disk."""
    grid: Grid
    cells: np.ndarray      # (N0-1, N1-1) domain cells
    xedges: np.ndarray     # (N0-1, N1): edge from node (i,j) to (i+1,j)
    yedges: np.ndarray     # (N0, N1-1): edge from node (i,j) to (i,j+1)
    nodes: np.ndarray      # (N0, N1): nodes with all four edges in the domain

    @classmethod
    def build(cls, grid: Grid, region: Ball) -> "DiskComplex":
        if grid.dim != 2:
            raise ValueError("the Hodge decomposition is implemented for n = 2")
        if abs(grid.spacing[0] - grid.spacing[1]) > 1e-12 * grid.spacing[0]:
            raise ValueError("the Hodge decomposition needs square cells")
        x, y = grid.axes()
        cx, cy = (x[:-1] + x[1:]) / 2, (y[:-1] + y[1:]) / 2
        X, Y = np.meshgrid(cx, cy, indexing="ij")
        cells = np.hypot(X - region.center[0], Y - region.center[1]) < region.radius
        n0, n1 = grid.shape
        xe = np.zeros((n0 - 1, n1), bool)
        xe[:, :-1] |= cells
        xe[:, 1:] |= cells
        ye = np.zeros((n0, n1 - 1), bool)
        ye[:-1, :] |= cells
        ye[1:, :] |= cells
        nodes = np.zeros((n0, n1), bool)
        nodes[1:-1, 1:-1] = xe[:-1, 1:-1] & xe[1:, 1:-1] & ye[1:-1, :-1] & ye[1:-1, 1:]
        if cells[0, :].any() or cells[-1, :].any() or cells[:, 0].any() or cells[:, -1].any():
            raise ValueError("region touches the grid boundary")
        return cls(grid, cells, xe, ye, nodes)

    @property
    def h(self) -> float:
        return self.grid.spacing[0]

    def _edge_index(self):
        nx = int(self.xedges.sum())
        ix = -np.ones(self.xedges.shape, int)
        ix[self.xedges] = np.arange(nx)
        iy = -np.ones(self.yedges.shape, int)
        iy[self.yedges] = nx + np.arange(int(self.yedges.sum()))
        return ix, iy, nx + int(self.yedges.sum())

    def d0(self) -> sp.csr_matrix:
        """Interior nodes -> edges: (a_head - a_tail) / h."""
        ix, iy, ne = self._edge_index()
        nid = -np.ones(self.nodes.shape, int)
        nid[self.nodes] = np.arange(int(self.nodes.sum()))
        rows, cols, vals = [], [], []
        for eidx, (di, dj) in ((ix, (1, 0)), (iy, (0, 1))):
            I, J = np.nonzero(eidx >= 0)
            e = eidx[I, J]
            for (a, b), sgn in (((I, J), -1.0), ((I + di, J + dj), 1.0)):
                v = nid[a, b]
                ok = v >= 0
                rows.append(e[ok])
                cols.append(v[ok])
                vals.append(np.full(ok.sum(), sgn / self.h))
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(ne, int(self.nodes.sum())))

    def d1(self) -> sp.csr_matrix:
        """Edges -> cells: counter-clockwise circulation / h."""
        ix, iy, ne = self._edge_index()
        I, J = np.nonzero(self.cells)
        f = np.arange(len(I))
        parts = ((ix[I, J], 1.0), (iy[I + 1, J], 1.0), (ix[I, J + 1], -1.0), (iy[I, J], -1.0))
        rows = np.concatenate([f] * 4)
        cols = np.concatenate([p for p, _ in parts])
        vals = np.concatenate([np.full(len(f), s / self.h) for _, s in parts])
        return sp.csr_matrix((vals, (rows, cols)), shape=(len(f), ne))

    def sample(self, w: FormField) -> np.ndarray:
        """Edge values of a nodal 1-form (trapezoid line integral / h)."""
        c1, c2 = w.components
        ex = 0.5 * (c1[:-1, :] + c1[1:, :])
        ey = 0.5 * (c2[:, :-1] + c2[:, 1:])
        return np.concatenate([ex[self.xedges], ey[self.yedges]])

    def to_nodes(self, e: np.ndarray) -> FormField:
        """Average edge values back to nodes (absent edges count as zero)."""
        n0, n1 = self.grid.shape
        nx = int(self.xedges.sum())
        ex = np.zeros((n0 - 1, n1))
        ex[self.xedges] = e[:nx]
        ey = np.zeros((n0, n1 - 1))
        ey[self.yedges] = e[nx:]
        c1 = np.zeros((n0, n1))
        c1[:-1, :] += 0.5 * ex
        c1[1:, :] += 0.5 * ex
        c2 = np.zeros((n0, n1))
        c2[:, :-1] += 0.5 * ey
        c2[:, 1:] += 0.5 * ey
        return FormField(self.grid, 1, np.stack([c1, c2]))

    def node_values(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros(self.grid.shape)
        out[self.nodes] = v
        return out

    def cell_to_nodes(self, v: np.ndarray) -> np.ndarray:
        c = np.zeros(self.cells.shape)
        c[self.cells] = v
        out = np.zeros(self.grid.shape)
        for di in (0, 1):
            for dj in (0, 1):
                out[di:di + c.shape[0], dj:dj + c.shape[1]] += 0.25 * c
        return out


@dataclass(frozen=True)
class HodgeDecomposition:
    a: ScalarField
    b: FormField
    h: FormField
    da: FormField
    dstar_b: FormField
    residual: float
    pythagoras_defect: float
    orthogonality_defect: float
    norm2: float
    harmonic_defect: float
    b_gradient_ratio: float = math.nan
    edges: dict = field(default_factory=dict, repr=False)

    def to_json(self) -> dict:
        return {"residual": self.residual, "pythagoras_defect": self.pythagoras_defect,
                "orthogonality_defect": self.orthogonality_defect, "norm2": self.norm2,
                "harmonic_defect": self.harmonic_defect, "b_gradient_ratio": self.b_gradient_ratio,
                "energies": {k: float(v) for k, v in self.edges.get("energies", {}).items()}}


def decompose_edges(cx: "DiskComplex", w: np.ndarray, tolerance: float = 1e-10,
                    method: str = "direct"):
    """Edge-level split w = D0 a + D1^T beta + h. Returns (a, beta, da, dstar_b, h)."""
    D0, D1 = cx.d0(), cx.d1()
    a, _, _, _ = _solve_spd((D0.T @ D0).tocsr(), D0.T @ w, tolerance, method, 20000)
    beta, _, _, _ = _solve_spd((D1 @ D1.T).tocsr(), D1 @ w, tolerance, method, 20000)
    da = D0 @ a
    dsb = D1.T @ beta
    return a, beta, da, dsb, w - da - dsb


def hodge_decompose(omega: FormField, tolerance: float = 1e-10, region: Ball | None = None,
                    method: str = "direct") -> HodgeDecomposition:
    """omega = da + d*b + h on the disk (n = 2).

    Defects are measured in the edge inner product (each edge carries area h^2):
    ``pythagoras_defect`` is relative to ||omega||^2, ``orthogonality_defect`` is
    the absolute |<da, d*b>|, ``harmonic_defect`` the largest of |D1 h| and
    |D0^T h| relative to |omega| / h.
    """
    if omega.degree != 1:
        raise ValueError("hodge_decompose takes a 1-form")
    grid = omega.grid
    region = region or Ball.unit(2)
    cx = DiskComplex.build(grid, region)
    w = cx.sample(omega)
    D0, D1 = cx.d0(), cx.d1()
    area = cx.h ** 2
    a, beta, da, dsb, hh = decompose_edges(cx, w, tolerance, method)
    ip = lambda u, v: float(np.dot(u, v) * area)  # noqa: E731
    n2 = ip(w, w)
    parts = {"da": ip(da, da), "dstar_b": ip(dsb, dsb), "h": ip(hh, hh), "omega": n2}
    scale = max(n2, 1e-300)
    recon = float(np.sqrt(ip(w - da - dsb - hh, w - da - dsb - hh)))
    wmax = max(float(np.max(np.abs(w))), 1e-300)
    harm = max(float(np.max(np.abs(D1 @ hh), initial=0)), float(np.max(np.abs(D0.T @ hh), initial=0)))
    bn = cx.cell_to_nodes(beta)
    dsb_nodes = cx.to_nodes(dsb)
    # full gradient of b against d*b (equal in norm for n = 2); an empirical ratio only
    gb = np.sqrt(sum(c ** 2 for c in np.gradient(bn, *grid.spacing)).sum())
    ds = np.sqrt((dsb_nodes.components ** 2).sum())
    return HodgeDecomposition(
        a=ScalarField(grid, cx.node_values(a)),
        b=FormField(grid, 2, bn[None]),
        h=cx.to_nodes(hh), da=cx.to_nodes(da), dstar_b=dsb_nodes,
        residual=recon,
        pythagoras_defect=abs(parts["da"] + parts["dstar_b"] + parts["h"] - n2) / scale,
        orthogonality_defect=abs(ip(da, dsb)),
        norm2=n2,
        harmonic_defect=harm * cx.h / wmax,
        b_gradient_ratio=float(gb / ds) if ds > 0 else math.nan,
        edges={"omega": w, "da": da, "dstar_b": dsb, "h": hh, "energies": parts},
    )


# -- harmonic decay -----------------------------------------------------------

@dataclass(frozen=True)
class DecayReport:
    radii: list
    values: list
    monotone: bool
    worst_step: float
    screen: float

    def rows(self):
        return list(zip(self.radii, self.values))


def harmonic_screen(h: FormField, center=None, radius: float = 0.75) -> float:
    """max(|dh|, |d*h|) on B_radius relative to the largest first derivative of h."""
    n = h.grid.dim
    center = np.zeros(n) if center is None else np.asarray(center, float)
    inside = h.grid.radius(center) <= radius
    dh = np.abs(exterior_derivative(h).components).max(axis=0)
    dsh = np.abs(codifferential(h).components).max(axis=0)
    grads = [np.abs(np.gradient(c, *h.grid.spacing)) for c in h.components]
    scale = max(max(float(g[inside].max()) for gs in grads for g in gs), 1e-300)
    return max(float(dh[inside].max()), float(dsh[inside].max())) / scale


def harmonic_decay_check(h: FormField, center=None, radii=None, tolerance: float = 0.01,
                         screen_tol: float = 0.05, screen: bool = True) -> DecayReport:
    """Table of r^-n ||h||^2_{L^2(B_r)} over increasing radii.

    The ball integral is normalized by the quadrature volume of the same ball,
    omega_n * (weighted mean of |h|^2), so that a constant form gives a constant
    table exactly. Each step may drop by at most ``tolerance`` (relative).
    """
    from .field import ball_weights

    if h.degree != 1:
        raise ValueError("expected a 1-form")
    n = h.grid.dim
    center = tuple(np.zeros(n)) if center is None else tuple(center)
    radii = sorted(radii or [2.0 ** -k for k in range(5, 0, -1)])
    s = harmonic_screen(h, center, min(0.75, max(radii) * 1.5)) if screen else 0.0
    if screen and s > screen_tol:
        raise ValueError(f"input fails the harmonicity screen ({s:.3g} > {screen_tol})")
    h2 = h.pointwise_norm2()
    vals = []
    for r in radii:
        w = ball_weights(h.grid, Ball(center, r))
        vals.append(unit_ball_volume(n) * float(np.sum(w * h2) / np.sum(w)))
    worst = min((b - a) / max(abs(a), 1e-300) for a, b in zip(vals, vals[1:])) if len(vals) > 1 else 0.0
    return DecayReport(list(radii), vals, worst >= -tolerance, worst, s)


def energy_inequality(h: FormField, radii, center=None) -> list[tuple[float, float]]:
    """Pairs (r, ||h||^2_{B_r} / (r^n ||h||^2_{B_1})), both ball integrals normalized
    by their quadrature volume; harmonic h keeps these <= 1."""
    from .field import ball_weights

    center = tuple(np.zeros(h.grid.dim)) if center is None else tuple(center)
    h2 = h.pointwise_norm2()

    def mean(r):
        w = ball_weights(h.grid, Ball(center, r))
        return float(np.sum(w * h2) / np.sum(w))

    full = mean(1.0)
    return [(r, mean(r) / full) for r in radii]
