"""Closed-form test fields with symbolic oracles.

A fixture is a sum of pieces, each a sympy expression that is valid on an
optional support ball and zero outside it. Sampling is pointwise, so sampling
at h and keeping every other node equals sampling at 2h bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import sympy as sp

from .field import Grid, ScalarField, VectorField, sphere_area, unit_ball_volume

X, Y, Z = sp.symbols("x y z", real=True)
SYMBOLS = (X, Y, Z)


def symbols(n: int):
    return SYMBOLS[:n]


def radius_expr(n: int, center: Sequence[float] | None = None):
    c = center or (0,) * n
    return sp.sqrt(sum((s - ci) ** 2 for s, ci in zip(symbols(n), c)))


@dataclass(frozen=True)
class Piece:
    expr: sp.Expr
    support_center: tuple | None = None
    support_radius: float | None = None


@dataclass(frozen=True)
class Fixture:
    name: str
    n: int
    pieces: tuple[Piece, ...]
    flags: frozenset = frozenset()
    oracle: dict = field(default_factory=dict, hash=False, compare=False)
    singular_point: tuple | None = None
    singular_power: float | None = None

    @property
    def capabilities(self) -> dict:
        return {"gradient": True, "hessian": True, "mean_zero": "mean-zero" in self.flags,
                "hardy": "hardy" in self.flags, "compact": "compact" in self.flags,
                "singular": self.singular_point is not None, **{k: True for k in self.oracle}}

    @cached_property
    def _funcs(self):
        syms = symbols(self.n)
        return [sp.lambdify(syms, p.expr, "numpy") for p in self.pieces]

    def _eval(self, funcs, pts) -> np.ndarray:
        out = np.zeros(np.shape(pts[0]))
        for p, f in zip(self.pieces, funcs):
            with np.errstate(divide="ignore", invalid="ignore"):
                v = np.broadcast_to(np.asarray(f(*pts), float), out.shape)
            if p.support_radius is not None:
                r = np.sqrt(sum((x - c) ** 2 for x, c in zip(pts, p.support_center)))
                v = np.where(r < p.support_radius, v, 0.0)
            out = out + v
        return out

    def values(self, *pts) -> np.ndarray:
        return self._eval(self._funcs, pts)

    def sample(self, grid: Grid) -> ScalarField:
        if grid.dim != self.n:
            raise ValueError(f"fixture {self.name} lives in dimension {self.n}")
        pts = grid.mesh()
        v = self.values(*pts)
        if self.singular_point is not None:
            r = np.sqrt(sum((x - c) ** 2 for x, c in zip(pts, self.singular_point)))
            at = r == 0
            v = np.where(at, self.singular_cell_value(grid), v)
        return ScalarField(grid, v)

    def singular_mask(self, grid: Grid) -> np.ndarray:
        if self.singular_point is None:
            return np.zeros(grid.shape, bool)
        return grid.radius(self.singular_point) == 0

    def singular_cell_value(self, grid: Grid) -> float:
        """Mean of |x|^sigma over the ball of one cell volume around the singular node."""
        n, s = self.n, self.singular_power
        rho0 = (grid.cell_volume / unit_ball_volume(n)) ** (1 / n)
        return sphere_area(n) * rho0 ** (s + n) / (s + n) / grid.cell_volume

    @cached_property
    def gradient_exprs(self):
        return [[sp.diff(p.expr, s) for s in symbols(self.n)] for p in self.pieces]

    @cached_property
    def hessian_exprs(self):
        syms = symbols(self.n)
        return [[[sp.diff(p.expr, a, b) for b in syms] for a in syms] for p in self.pieces]

    def gradient(self, *pts) -> list[np.ndarray]:
        syms = symbols(self.n)
        comps = []
        for k in range(self.n):
            funcs = [sp.lambdify(syms, g[k], "numpy") for g in self.gradient_exprs]
            comps.append(self._eval(funcs, pts))
        return comps

    def hessian(self, *pts) -> list[list[np.ndarray]]:
        syms = symbols(self.n)
        out = []
        for a in range(self.n):
            row = []
            for b in range(self.n):
                funcs = [sp.lambdify(syms, H[a][b], "numpy") for H in self.hessian_exprs]
                row.append(self._eval(funcs, pts))
            out.append(row)
        return out

    def laplacian(self, *pts) -> np.ndarray:
        H = self.hessian(*pts)
        return sum(H[i][i] for i in range(self.n))


@dataclass(frozen=True)
class VectorFixture:
    """An R^m-valued closed-form field (used for the counterexample)."""
    name: str
    n: int
    components: tuple
    flags: frozenset = frozenset()
    oracle: dict = field(default_factory=dict, hash=False, compare=False)

    @property
    def capabilities(self) -> dict:
        return {"gradient": True, "hessian": True, **{k: True for k in self.oracle}}

    @cached_property
    def hessian_exprs(self):
        syms = symbols(self.n)
        return [[[sp.diff(c, a, b) for b in syms] for a in syms] for c in self.components]

    def sample(self, grid: Grid) -> VectorField:
        syms = symbols(self.n)
        pts = grid.mesh()
        r = np.sqrt(sum(p * p for p in pts))
        out = []
        for c in self.components:
            f = sp.lambdify(syms, c, "numpy")
            with np.errstate(divide="ignore", invalid="ignore"):
                v = np.broadcast_to(np.asarray(f(*pts), float), grid.shape)
            out.append(np.where(r > 0, v, 0.0))
        return VectorField(grid, np.stack(out))


# -- builders ---------------------------------------------------------------------

def bump_expr(n: int, center, radius: float, power: int = 4):
    r2 = sum((s - c) ** 2 for s, c in zip(symbols(n), center))
    return (1 - r2 / sp.Float(radius) ** 2) ** power


def bump(name, n, center, radius, amp=1.0, flags=()) -> Fixture:
    return Fixture(name, n, (Piece(amp * bump_expr(n, center, radius), tuple(center), radius),),
                   frozenset({"compact", *flags}))


def dipole(name, n, offset, radius, flags=()) -> Fixture:
    c1 = tuple(offset)
    c2 = tuple(-o for o in offset)
    return Fixture(name, n, (Piece(bump_expr(n, c1, radius), c1, radius),
                             Piece(-bump_expr(n, c2, radius), c2, radius)),
                   frozenset({"compact", "mean-zero", "hardy", *flags}))


def derivative_fixture(name, n, center, radius, direction: Sequence[float]) -> Fixture:
    """Directional derivative of a bump: compactly supported with zero mean."""
    e = bump_expr(n, center, radius, power=5)
    expr = sum(d * sp.diff(e, s) for d, s in zip(direction, symbols(n)))
    return Fixture(name, n, (Piece(sp.expand(expr), tuple(center), radius),),
                   frozenset({"compact", "mean-zero", "hardy"}))


def laplacian_fixture(name, n, center, radius) -> Fixture:
    e = bump_expr(n, center, radius, power=5)
    expr = sum(sp.diff(e, s, 2) for s in symbols(n))
    return Fixture(name, n, (Piece(sp.expand(expr), tuple(center), radius),),
                   frozenset({"compact", "mean-zero", "hardy"}))


def radial_power(name, n, sigma) -> Fixture:
    r = radius_expr(n)
    singular = sigma < 0
    oracle = {"unit_ball_integral": sphere_area(n) / (sigma + n)}
    return Fixture(name, n, (Piece(r ** sp.nsimplify(sigma)),), frozenset({"radial"}), oracle,
                   (0.0,) * n if singular else None, sigma if singular else None)


def counterexample_fixture() -> VectorFixture:
    r = radius_expr(2)
    L = sp.log(r)
    comps = (L ** 2 * X, L ** 2 * Y)
    return VectorFixture("counterexample-logsq", 2, comps, frozenset({"singular"}),
                         {"second_derivatives": True, "hessian_density": "4(4L^2+2L+1)/r^2"})


@dataclass(frozen=True)
class JacobianPair:
    name: str
    u: Fixture
    v: Fixture

    def jacobian_expr(self):
        """<du, grad-perp v> = u_x v_y - u_y v_x, assuming single-piece fixtures."""
        a, b = self.u.pieces[0].expr, self.v.pieces[0].expr
        return sp.diff(a, X) * sp.diff(b, Y) - sp.diff(a, Y) * sp.diff(b, X)

    def sample_jacobian(self, grid: Grid) -> ScalarField:
        pu, pv = self.u.pieces[0], self.v.pieces[0]
        f = sp.lambdify((X, Y), self.jacobian_expr(), "numpy")
        Xg, Yg = grid.mesh()
        inside = ((np.hypot(Xg - pu.support_center[0], Yg - pu.support_center[1]) < pu.support_radius)
                  & (np.hypot(Xg - pv.support_center[0], Yg - pv.support_center[1]) < pv.support_radius))
        return ScalarField(grid, np.where(inside, f(Xg, Yg), 0.0))

    def gradient_l2(self, which: str, grid: Grid) -> float:
        """||grad u||_{L^2} (or v) by the trapezoid rule on the oracle gradient."""
        from .field import integrate

        fx = self.u if which == "u" else self.v
        g = fx.gradient(*grid.mesh())
        return math.sqrt(integrate(ScalarField(grid, sum(c * c for c in g))))


# -- catalog ----------------------------------------------------------------------

def mean_zero_family(n: int = 2) -> list[Fixture]:
    """Ten compactly supported mean-zero fields of varied shape and scale."""
    out = [
        dipole("dipole", n, (0.3, 0.0), 0.25),
        dipole("dipole-diag", n, (0.2, 0.2), 0.2),
        dipole("dipole-wide", n, (0.45, 0.1), 0.4),
        dipole("dipole-tight", n, (0.0, 0.12), 0.1),
        derivative_fixture("dbump-x", n, (0.0, 0.0), 0.5, (1.0, 0.0)),
        derivative_fixture("dbump-xy", n, (0.1, -0.2), 0.35, (0.6, 0.8)),
        derivative_fixture("dbump-small", n, (-0.3, 0.2), 0.2, (0.0, 1.0)),
        laplacian_fixture("lapbump", n, (0.0, 0.0), 0.6),
        laplacian_fixture("lapbump-off", n, (0.25, -0.15), 0.3),
        laplacian_fixture("lapbump-small", n, (-0.2, -0.3), 0.18),
    ]
    return out


def jacobian_pairs() -> list[JacobianPair]:
    return [
        JacobianPair("jac-centred", bump("ju1", 2, (0.0, 0.0), 0.6), bump("jv1", 2, (0.15, 0.1), 0.5)),
        JacobianPair("jac-shifted", bump("ju2", 2, (-0.2, 0.0), 0.5), bump("jv2", 2, (0.2, 0.05), 0.5)),
        JacobianPair("jac-small", bump("ju3", 2, (0.1, -0.1), 0.25), bump("jv3", 2, (0.0, 0.0), 0.3)),
        JacobianPair("jac-mixed", bump("ju4", 2, (0.0, 0.2), 0.7), bump("jv4", 2, (0.1, -0.1), 0.2)),
    ]


def _catalog() -> dict:
    fx = {}

    def add(f):
        fx[f.name] = f

    r2 = X ** 2 + Y ** 2
    add(Fixture("gaussian", 2, (Piece(sp.exp(-20 * r2)),), frozenset({"smooth"}),
                {"integral": float(sp.pi / 20)}))
    add(Fixture("gaussian-wide", 2, (Piece(sp.exp(-8 * r2)),), frozenset({"smooth"}),
                {"integral": float(sp.pi / 8)}))
    add(Fixture("gaussian-off", 2, (Piece(sp.exp(-30 * ((X - 0.2) ** 2 + (Y + 0.1) ** 2))),),
                frozenset({"smooth"}), {"integral": float(sp.pi / 30)}))
    add(bump("poly-bump", 2, (0.0, 0.0), 0.8))
    add(Fixture("gaussian-3d", 3, (Piece(sp.exp(-20 * (r2 + Z ** 2))),), frozenset({"smooth"})))
    for f in mean_zero_family():
        add(f)
    add(radial_power("radial-sqrt", 2, 0.5))
    add(radial_power("radial-inverse", 2, -1.0))
    add(radial_power("radial-linear", 2, 1.0))
    add(Fixture("harmonic-quadratic", 2, (Piece(X ** 2 - Y ** 2),), frozenset({"harmonic"}),
                {"harmonic": True}))
    add(Fixture("quartic-zero-boundary", 2, (Piece((1 - r2) ** 2, (0.0, 0.0), 1.0),),
                frozenset({"compact"}), {"grad_l2_squared": float(4 * sp.pi / 3)}))
    add(Fixture("disk-indicator", 2, (Piece(sp.Integer(1), (0.0, 0.0), 0.5),),
                frozenset({"compact"}), {"integral": float(sp.pi / 4)}))
    add(Fixture("affine-x", 2, (Piece(X),), frozenset({"affine"})))
    add(counterexample_fixture())
    return fx


CATALOG = _catalog()


def fixture_catalog() -> list[dict]:
    """Stable ids with capability flags."""
    return [{"name": name, "dim": f.n, "flags": sorted(f.flags), "capabilities": f.capabilities}
            for name, f in sorted(CATALOG.items())]


def get_fixture(name: str):
    try:
        return CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}") from None
