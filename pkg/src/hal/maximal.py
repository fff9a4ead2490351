"""Maximal operators: fractional maximal M_beta, Hardy-Littlewood M, and the
smooth maximal functions g_* (all scales) and local g_~* (scales below 1).

Continuous sups are replaced by sups over dyadic radii/scales. Radii and
scales shorter than ``min_cells`` grid steps are not resolved by a kernel table;
their contribution is replaced by the t -> 0 (Lebesgue point) limit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as sint

from .conv import convolve, kernel_table
from .field import Ball, Grid, ScalarField, region_weights, sphere_area, unit_ball_volume

MIN_CELLS = 2.0
SUPPORT_TOL = 1e-12


def dyadic_radii(j_max: int, j_min: int = 0) -> tuple[float, ...]:
    """Decreasing radii 2^-j for j = j_min..j_max (j_min may be negative)."""
    return tuple(2.0 ** -j for j in range(j_min, j_max + 1))


def default_radii(grid: Grid, min_cells: float = MIN_CELLS) -> tuple[float, ...]:
    """Dyadic radii from 4 (covers the default box from any node) down to ``min_cells`` steps."""
    out = []
    r = 4.0
    while r >= min_cells * grid.h:
        out.append(r)
        r /= 2
    return tuple(out)


@dataclass(frozen=True)
class MaximalField:
    grid: Grid
    values: np.ndarray
    argmax_scale: np.ndarray
    kind: str
    info: dict = field(default_factory=dict)

    def as_scalar(self) -> ScalarField:
        return ScalarField(self.grid, self.values)


def ball_table(grid: Grid, r: float) -> np.ndarray:
    """Partial-cell indicator of B_r(0) on grid offsets, times the cell volume."""
    h = grid.h
    return kernel_table(grid, lambda *X: np.clip(0.5 + (r - np.sqrt(sum(x * x for x in X))) / h, 0, 1),
                        radius=r + h)


def ball_integrals(values: np.ndarray, grid: Grid, r: float, region: Ball | None = None,
                   method: str = "fft") -> np.ndarray:
    """For every node x: the quadrature of ``values`` over B_r(x) ∩ region."""
    data = values if region is None else values * region_weights(grid, region)
    return convolve(data, ball_table(grid, r), method)


def fractional_maximal(g: ScalarField, beta: float, p: float = 1.0,
                       radii: Sequence[float] | None = None, region: Ball | None = None,
                       min_cells: float = MIN_CELLS, method: str = "fft") -> MaximalField:
    """sup over radii of r^-beta * integral over B_r(x) ∩ region of |g|^p, at every node."""
    n = g.grid.dim
    if not 0 <= beta <= n:
        raise ValueError(f"beta must lie in [0, {n}], got {beta}")
    if p < 1:
        raise ValueError("p must be at least 1")
    radii = default_radii(g.grid, min_cells) if radii is None else tuple(radii)
    h = g.grid.h
    used = [r for r in radii if r >= min_cells * h]
    gp = np.abs(g.values) ** p
    best = np.zeros(g.grid.shape)
    arg = np.zeros(g.grid.shape)
    for r in used:
        val = ball_integrals(gp, g.grid, r, region, method) * r ** -beta
        better = val > best
        best = np.where(better, val, best)
        arg = np.where(better, r, arg)
    if beta == n and len(used) < len(radii):
        # r -> 0 limit of r^-n |B_r| |g(x)|^p
        lim = unit_ball_volume(n) * gp
        if region is not None:
            lim = lim * (region_weights(g.grid, region) > 0)
        better = lim > best
        best = np.where(better, lim, best)
        arg = np.where(better, 0.0, arg)
    return MaximalField(g.grid, best, arg, "mbeta",
                        {"beta": beta, "p": p, "radii": list(used), "min_cells": min_cells})


def hl_maximal(g: ScalarField, radii: Sequence[float] | None = None,
               min_cells: float = MIN_CELLS) -> MaximalField:
    """Hardy-Littlewood maximal function: sup of ball averages, the ball volume
    taken from the same quadrature (so constants are reproduced exactly)."""
    radii = default_radii(g.grid, min_cells) if radii is None else tuple(radii)
    absg = np.abs(g.values)
    ones = np.ones(g.grid.shape)
    best = absg.copy()
    arg = np.zeros(g.grid.shape)
    for r in radii:
        if r < min_cells * g.grid.h:
            continue
        val = ball_integrals(absg, g.grid, r) / ball_integrals(ones, g.grid, r)
        better = val > best
        best = np.where(better, val, best)
        arg = np.where(better, r, arg)
    return MaximalField(g.grid, best, arg, "hl", {"radii": list(radii)})


# -- mollifiers ---------------------------------------------------------------

def _bump_lipschitz_constant() -> float:
    # max over r of |d/dr (1 - r^2)^4| = 8 r (1 - r^2)^3, attained at r^2 = 1/7
    r = 1 / math.sqrt(7)
    return 8 * r * (1 - r * r) ** 3


DEFAULT_SCALES = tuple(2.0 ** k for k in range(-10, 5))


@dataclass(frozen=True)
class Mollifier:
    """A test function supported in the closed unit ball.

    ``profile(*X)`` evaluates the raw function (with ``|grad| <= 1``); kernels use
    ``normalization * profile``. With ``normalization = 1/mass`` the mollifier has
    unit mass.
    """
    profile: Callable[..., np.ndarray]
    scales: tuple[float, ...]
    dim: int
    name: str = "custom"
    normalization: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(sorted(float(t) for t in self.scales)))
        if any(t <= 0 for t in self.scales):
            raise ValueError("mollifier scales must be positive")

    @classmethod
    def default(cls, n: int, scales: Sequence[float] = DEFAULT_SCALES,
                unit_mass: bool = True) -> "Mollifier":
        c = 1.0 / _bump_lipschitz_constant()

        def bump(*X):
            r2 = sum(x * x for x in X)
            return np.where(r2 < 1, c * np.clip(1 - r2, 0, None) ** 4, 0.0)

        raw = cls(bump, tuple(scales), n, "poly-bump")
        if not unit_mass:
            return raw
        # (1 - r^2)^4 integrates to |S^{n-1}| * B(n/2, 5) / 2 over the unit ball
        mass = c * sphere_area(n) * math.gamma(n / 2) * math.gamma(5) / math.gamma(n / 2 + 5) / 2
        return cls(bump, tuple(scales), n, "poly-bump", 1.0 / mass)

    def with_scales(self, scales: Sequence[float]) -> "Mollifier":
        return Mollifier(self.profile, tuple(scales), self.dim, self.name, self.normalization)

    def local(self) -> "Mollifier":
        return self.with_scales([t for t in self.scales if t < 1])

    @cached_property
    def _fine_stats(self) -> tuple[float, float, float]:
        cells = 400 if self.dim <= 2 else 80
        g = Grid.cube(self.dim, cells, half_width=1.0)
        vals = self.profile(*g.mesh())
        grads = np.gradient(vals, *g.spacing)
        grads = grads if isinstance(grads, (list, tuple)) else [grads]
        lip = float(np.max(np.sqrt(sum(d * d for d in grads))))
        return float(np.sum(vals) * g.cell_volume), float(np.max(np.abs(vals))), lip

    @property
    def mass(self) -> float:
        """Mass of the normalized mollifier."""
        return self.normalization * self._fine_stats[0]

    @property
    def sup(self) -> float:
        return self.normalization * self._fine_stats[1]

    @property
    def lipschitz(self) -> float:
        return self.normalization * self._fine_stats[2]

    def table(self, grid: Grid, t: float) -> np.ndarray:
        """Kernel table of phi_t(x) = t^-n phi(x/t), normalized."""
        n = grid.dim
        s = self.normalization * t ** -n
        return kernel_table(grid, lambda *X: s * self.profile(*(x / t for x in X)), radius=t)

    def report(self) -> dict:
        return {"name": self.name, "normalization": self.normalization, "mass": self.mass,
                "sup": self.sup, "lipschitz": self.lipschitz, "scales": list(self.scales)}


def smooth_maximal(g: ScalarField, moll: Mollifier, local: bool = False,
                   min_cells: float = MIN_CELLS, method: str = "fft") -> MaximalField:
    """sup over the scale list of |phi_t * g| at every node (g_* or, if local, g_~*)."""
    scales = [t for t in moll.scales if t < 1] if local else list(moll.scales)
    if not scales:
        raise ValueError("scale list is empty")
    h = g.grid.h
    used = [t for t in scales if t >= min_cells * h]
    best = np.zeros(g.grid.shape)
    arg = np.zeros(g.grid.shape)
    for t in used:
        val = np.abs(convolve(g.values, moll.table(g.grid, t), method))
        better = val > best
        best = np.where(better, val, best)
        arg = np.where(better, t, arg)
    if len(used) < len(scales):
        lim = np.abs(g.values) * moll.mass
        better = lim > best
        best = np.where(better, lim, best)
        arg = np.where(better, 0.0, arg)
    return MaximalField(g.grid, best, arg, "localstar" if local else "star",
                        {"scales": used, "limit_term": len(used) < len(scales),
                         "mollifier": moll.name})


def support_margin(g: ScalarField, tol: float = SUPPORT_TOL) -> float:
    """Distance from the box boundary to the nearest node where |g| is not negligible."""
    a = np.abs(g.values)
    top = a.max()
    if top == 0:
        return math.inf
    pts = np.nonzero(a > tol * top)
    margin = math.inf
    for ax, idx in enumerate(pts):
        h = g.grid.spacing[ax]
        margin = min(margin, idx.min() * h, (g.grid.shape[ax] - 1 - idx.max()) * h)
    return margin


def _require_margin(g: ScalarField, moll: Mollifier) -> None:
    local_scales = [t for t in moll.scales if t < 1]
    need = max(local_scales) if local_scales else 0.0
    if support_margin(g) < need:
        raise ValueError(f"support of g comes within {support_margin(g):.3g} of the box boundary; "
                         f"scales up to {need:.3g} would be truncated")


def hardy_norm(g: ScalarField, moll: Mollifier, min_cells: float = MIN_CELLS) -> float:
    """Box integral of g_*. The part of R^n outside the box is bounded by ``hardy_tail_bound``."""
    _require_margin(g, moll)
    return float(np.sum(smooth_maximal(g, moll, False, min_cells).values
                        * region_weights(g.grid, None)) * g.grid.cell_volume)


def local_hardy_norm(g: ScalarField, moll: Mollifier, min_cells: float = MIN_CELLS) -> float:
    """Integral of g_~*; complete (no tail) once the support margin covers the local scales."""
    _require_margin(g, moll)
    return float(np.sum(smooth_maximal(g, moll, True, min_cells).values
                        * region_weights(g.grid, None)) * g.grid.cell_volume)


def hardy_tail_bound(g: ScalarField, moll: Mollifier, mean_tol: float = 1e-10) -> float:
    """Bound on the integral of g_* over R^n outside the box.

    Outside the box |x - c| >= rho_b (c the box centre); with the support inside
    B_{R_s}(c), phi_t * g(x) is nonzero only for t > |x - c| - R_s and
    |phi_t * g(x)| <= sup|phi| t^-n |int g| + Lip(phi) t^-(n+1) R_s ||g||_1.
    A nonzero mean makes the bound (and the H^1 norm) infinite.
    """
    grid = g.grid
    n = grid.dim
    cvol = grid.cell_volume
    l1 = float(np.sum(np.abs(g.values)) * cvol)
    if l1 == 0:
        return 0.0
    mean = float(np.sum(g.values) * cvol)
    if abs(mean) > mean_tol * l1:
        return math.inf
    c = np.array([o + 0.5 * (u - o) for o, u in zip(grid.origin, grid.upper)])
    a = np.abs(g.values)
    mask = a > SUPPORT_TOL * a.max()
    r = grid.radius(c)
    R_s = float(r[mask].max())
    rho_b = min(0.5 * (u - o) for o, u in zip(grid.origin, grid.upper))
    if R_s >= rho_b:
        return math.inf
    radial, _ = sint.quad(lambda rho: rho ** (n - 1) * (rho - R_s) ** (-n - 1), rho_b, math.inf)
    return sphere_area(n) * moll.lipschitz * R_s * l1 * radial
