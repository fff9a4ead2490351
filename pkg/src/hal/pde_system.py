"""The critical system -Lap u = Omega . grad u + f: residuals, the antisymmetric
product, gauge transforms, the (log r)^2 counterexample, decay profiles and the
rescaling identities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as sint

from .field import (Ball, FormField, Grid, ScalarField, VectorField, ball_weights, codifferential,
                    gradient, interior_mask, restrict_rescale, unit_ball_volume)

ORTHO_TOL = 1e-10
DET_TOL = 1e-8
INTERIOR_LAYERS = 2


# -- connection forms -----------------------------------------------------------

@dataclass(frozen=True)
class MatrixForm:
    """A matrix-valued 1-form, ``entries[i, j, k]`` the dx_k component of the (i, j) entry."""
    grid: Grid
    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, float)
        m = e.shape[0]
        if e.shape != (m, m, self.grid.dim) + self.grid.shape:
            raise ValueError(f"entries must have shape (m, m, n, *grid.shape), got {e.shape}")
        if not np.all(np.isfinite(e)):
            raise ValueError("non-finite connection entries")
        object.__setattr__(self, "entries", e)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def antisymmetry_defect(self) -> float:
        e = self.entries
        return float(np.max(np.abs(e + e.transpose(1, 0, 2, *range(3, e.ndim))), initial=0.0))

    def matrix(self) -> np.ndarray:
        return self.entries


@dataclass(frozen=True)
class ConnectionForm:
    """so(m)-valued 1-form stored by its strictly upper entries (i < j)."""
    grid: Grid
    m: int
    upper: np.ndarray  # (m(m-1)/2, n, *grid.shape)

    def __post_init__(self):
        count = self.m * (self.m - 1) // 2
        u = np.asarray(self.upper, float)
        if u.shape != (count, self.grid.dim) + self.grid.shape:
            raise ValueError(f"upper entries must have shape ({count}, n, *grid.shape)")
        if not np.all(np.isfinite(u)):
            raise ValueError("non-finite connection entries")
        object.__setattr__(self, "upper", u)

    @staticmethod
    def pairs(m: int) -> list[tuple[int, int]]:
        return [(i, j) for i in range(m) for j in range(i + 1, m)]

    @classmethod
    def zeros(cls, grid: Grid, m: int) -> "ConnectionForm":
        return cls(grid, m, np.zeros((m * (m - 1) // 2, grid.dim) + grid.shape))

    @classmethod
    def from_matrix(cls, grid: Grid, entries: np.ndarray) -> "ConnectionForm":
        """Keep the upper triangle of an (m, m, n, ...) array."""
        m = entries.shape[0]
        return cls(grid, m, np.stack([entries[i, j] for i, j in cls.pairs(m)])
                   if m > 1 else np.zeros((0, grid.dim) + grid.shape))

    def matrix(self) -> np.ndarray:
        out = np.zeros((self.m, self.m, self.grid.dim) + self.grid.shape)
        for c, (i, j) in enumerate(self.pairs(self.m)):
            out[i, j] = self.upper[c]
            out[j, i] = -self.upper[c]
        return out

    def as_matrix_form(self) -> MatrixForm:
        return MatrixForm(self.grid, self.matrix())

    def entry(self, i: int, j: int) -> FormField:
        return FormField(self.grid, 1, self.matrix()[i, j])

    def pointwise_norm(self) -> ScalarField:
        return ScalarField(self.grid, np.sqrt(np.sum(self.matrix() ** 2, axis=(0, 1, 2))))


@dataclass(frozen=True)
class GaugeField:
    grid: Grid
    matrices: np.ndarray  # (m, m, *grid.shape)

    def __post_init__(self):
        P = np.asarray(self.matrices, float)
        m = P.shape[0]
        if P.shape != (m, m) + self.grid.shape:
            raise ValueError("matrices must have shape (m, m, *grid.shape)")
        Pm = np.moveaxis(P, (0, 1), (-2, -1))
        ortho = np.max(np.abs(np.swapaxes(Pm, -1, -2) @ Pm - np.eye(m)))
        if ortho > ORTHO_TOL:
            raise ValueError(f"gauge is not orthogonal (defect {ortho:.2e})")
        det = np.linalg.det(Pm)
        if np.max(np.abs(det - 1)) > DET_TOL:
            raise ValueError("gauge leaves SO(m): det P != 1")
        object.__setattr__(self, "matrices", P)

    @property
    def m(self) -> int:
        return self.matrices.shape[0]

    @classmethod
    def constant(cls, grid: Grid, P: np.ndarray) -> "GaugeField":
        P = np.asarray(P, float)
        return cls(grid, np.broadcast_to(P[(...,) + (None,) * grid.dim], P.shape + grid.shape).copy())

    @classmethod
    def identity(cls, grid: Grid, m: int) -> "GaugeField":
        return cls.constant(grid, np.eye(m))

    @classmethod
    def planar_rotation(cls, grid: Grid, angle: np.ndarray, m: int = 2, axes=(0, 1)) -> "GaugeField":
        """Rotation by ``angle`` (per node) in the (axes[0], axes[1]) plane of R^m."""
        angle = np.broadcast_to(np.asarray(angle, float), grid.shape)
        P = np.zeros((m, m) + grid.shape)
        for i in range(m):
            P[i, i] = 1.0
        a, b = axes
        c, s = np.cos(angle), np.sin(angle)
        P[a, a], P[a, b], P[b, a], P[b, b] = c, -s, s, c
        return cls(grid, P)

    def transpose(self) -> np.ndarray:
        return self.matrices.transpose(1, 0, *range(2, self.matrices.ndim))


def _check_grids(*objs) -> Grid:
    g = objs[0].grid
    for o in objs[1:]:
        if o.grid != g:
            raise ValueError("fields live on different grids")
    return g


def _du(u: VectorField) -> np.ndarray:
    """(m, n, *shape) array of du^j."""
    return np.stack([gradient(u.component(j)).components for j in range(u.m)])


def connection_product(omega, du: np.ndarray) -> np.ndarray:
    """[Omega . grad u]^i = sum_j <Omega^i_j, du^j>."""
    return np.einsum("ijk...,jk...->i...", omega.matrix(), du)


def antisymmetric_pairing(omega: ConnectionForm, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Per 1-form slot k: sum_ij v^i Omega^i_{j,k} w^j, shape (n, *grid.shape)."""
    return np.einsum("i...,ijk...,j...->k...", v, omega.matrix(), w)


# -- residuals ------------------------------------------------------------------

def residual_vector(u: VectorField, omega, f: VectorField | None = None,
                    layers: int = INTERIOR_LAYERS) -> VectorField:
    """-Lap u - Omega . grad u - f with -Lap = d* d (central differences), zero on
    the outer ``layers`` node layers."""
    g = _check_grids(u, omega) if f is None else _check_grids(u, omega, f)
    if omega.m != u.m or (f is not None and f.m != u.m):
        raise ValueError("component counts of u, Omega and f differ")
    du = _du(u)
    lap = np.stack([codifferential(FormField(g, 1, du[j])).components[0] for j in range(u.m)])
    res = lap - connection_product(omega, du)
    if f is not None:
        res = res - f.components
    res = res * interior_mask(g, layers)
    return VectorField(g, res)


def residual(u: VectorField, omega, f: VectorField | None = None,
             layers: int = INTERIOR_LAYERS) -> ScalarField:
    return residual_vector(u, omega, f, layers).norm()


def gauge_transform(omega, P: GaugeField) -> MatrixForm:
    """Omega_P = P^T dP + P^T Omega P, stored as a general matrix form."""
    g = _check_grids(omega, P)
    Pm, Pt = P.matrices, P.transpose()
    dP = np.stack([np.gradient(Pm, g.spacing[k], axis=k + 2, edge_order=2)
                   for k in range(g.dim)], axis=2)  # (m, m, n, ...)
    om = omega.matrix()
    first = np.einsum("ij...,jlk...->ilk...", Pt, dP)
    second = np.einsum("ij...,jlk...,lq...->iqk...", Pt, om, Pm)
    return MatrixForm(g, first + second)


def gauge_residual(u: VectorField, omega, P: GaugeField, f: VectorField | None = None,
                   layers: int = INTERIOR_LAYERS) -> VectorField:
    """d*(P^T du) - <Omega_P, P^T du> - P^T f."""
    g = _check_grids(u, omega, P)
    Pt = P.transpose()
    pdu = np.einsum("ij...,jk...->ik...", Pt, _du(u))
    lap = np.stack([codifferential(FormField(g, 1, pdu[i])).components[0] for i in range(u.m)])
    op = gauge_transform(omega, P)
    res = lap - np.einsum("ijk...,jk...->i...", op.entries, pdu)
    if f is not None:
        res = res - np.einsum("ij...,j...->i...", Pt, f.components)
    return VectorField(g, res * interior_mask(g, layers))


def rotate(P: GaugeField, v: VectorField, transpose: bool = True) -> VectorField:
    M = P.transpose() if transpose else P.matrices
    return VectorField(v.grid, np.einsum("ij...,j...->i...", M, v.components))


def gauge_discrepancy(u: VectorField, omega, P: GaugeField, f: VectorField | None = None,
                      layers: int = INTERIOR_LAYERS) -> float:
    """max over interior nodes of |gauge_residual - P^T residual_vector|; zero in exact arithmetic."""
    a = gauge_residual(u, omega, P, f, layers).components
    b = rotate(P, residual_vector(u, omega, f, layers)).components
    m = interior_mask(u.grid, layers)
    return float(np.abs(a - b)[:, m].max())


# -- counterexample --------------------------------------------------------------

# Omega^1_2 = -c(r) (-y dx + x dy); the sign is the one that makes the residual vanish.
COUNTEREXAMPLE_SIGN = -1.0
OUTER_RADIUS = math.exp(-1.0)


def counterexample_coefficient(r: np.ndarray) -> np.ndarray:
    """c(r) = 2 (1 + 2 log r) / (r log r)^2."""
    L = np.log(r)
    return 2 * (1 + 2 * L) / (r * L) ** 2


@dataclass(frozen=True)
class Counterexample:
    u: VectorField
    omega: ConnectionForm
    mask: np.ndarray  # True on the annulus eps < r < e^-1
    eps: float


def counterexample(grid: Grid, eps: float) -> Counterexample:
    """u = (log r)^2 (x, y) with its antisymmetric Omega, sampled at every node with
    0 < r < 1 (zero at r = 0); ``mask`` marks the annulus where the pair is a solution."""
    if grid.dim != 2:
        raise ValueError("the counterexample lives in two dimensions")
    if not 0 < eps < OUTER_RADIUS:
        raise ValueError(f"eps must lie in (0, 1/e), got {eps}")
    if not grid.contains_box([-OUTER_RADIUS] * 2, [OUTER_RADIUS] * 2):
        raise ValueError("grid must cover the disk of radius 1/e")
    X, Y = grid.mesh()
    r = np.hypot(X, Y)
    ok = (r > 0) & (r < 1)
    rs = np.where(ok, r, 0.5)
    L = np.log(rs)
    u = np.where(ok, L ** 2, 0.0) * np.stack([X, Y])
    c = np.where(ok, counterexample_coefficient(rs), 0.0)
    w12 = COUNTEREXAMPLE_SIGN * c * np.stack([-Y, X])
    omega = ConnectionForm(grid, 2, w12[None])
    return Counterexample(VectorField(grid, u), omega, (r > eps) & (r < OUTER_RADIUS), eps)


def hessian_density(r):
    """|grad^2 u|^2 for the counterexample: 4 (4 L^2 + 2 L + 1) / r^2, L = log r."""
    L = np.log(r)
    return 4 * (4 * L ** 2 + 2 * L + 1) / r ** 2


def hessian_energy(eps: float, closed_form: bool = True) -> float:
    """Integral of |grad^2 u|^2 over eps < r < 1/e."""
    if closed_form:
        T = abs(math.log(eps))
        return 8 * math.pi * (4 / 3 * T ** 3 - T ** 2 + T - 4 / 3)
    val, _ = sint.quad(lambda t: 2 * math.pi * math.exp(2 * t) * hessian_density(math.exp(t)),
                       math.log(eps), -1.0, limit=200)
    return val


def fit_power(x, y) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


# -- decay -----------------------------------------------------------------------

@dataclass(frozen=True)
class DecayProfile:
    radii: list
    energies: list
    kappa: float

    def rows(self):
        return list(zip(self.radii, self.energies))


def ball_energy(values2: np.ndarray, grid: Grid, center, r: float) -> float:
    """omega_n r^n times the quadrature mean over B_r(center) (exact on constants)."""
    w = ball_weights(grid, Ball(center, r))
    return unit_ball_volume(grid.dim) * r ** grid.dim * float(np.sum(w * values2) / np.sum(w))


def decay_profile(u: VectorField | ScalarField, center=None, radii=None,
                  exclude: float = 0.0) -> DecayProfile:
    """r -> ||grad u||^2_{L^2(B_r(center))} and its log-log slope kappa.

    ``exclude`` removes B_exclude(center) (the masked core of a singular field)."""
    g = u.grid
    center = tuple(np.zeros(g.dim)) if center is None else tuple(center)
    radii = sorted(radii or [2.0 ** -k for k in range(5, 0, -1)])
    if len(radii) < 3:
        raise ValueError("need at least three radii")
    comps = [u] if isinstance(u, ScalarField) else [u.component(j) for j in range(u.m)]
    e2 = sum(gradient(c).pointwise_norm2() for c in comps)
    if exclude > 0:
        e2 = np.where(g.radius(center) > exclude, e2, 0.0)
    energies = [ball_energy(e2, g, center, r) for r in radii]
    return DecayProfile(list(radii), energies, fit_power(radii, energies))


def holder_target_exponent(n: int, p: float) -> float:
    """n - 2 + 2 gamma with gamma = 2 - n/p."""
    gamma = 2 - n / p
    return n - 2 + 2 * gamma


# -- rescaling identities ----------------------------------------------------------

@dataclass
class ScalingCheck:
    name: str
    lhs: float
    rhs: float
    kind: str = "identity"  # or "inequality": lhs <= rhs

    @property
    def rel_error(self) -> float:
        if self.kind == "inequality":
            return max(0.0, (self.lhs - self.rhs) / max(abs(self.rhs), 1e-300))
        return abs(self.lhs - self.rhs) / max(abs(self.rhs), 1e-300)


@dataclass
class ScalingSample:
    """Fields on the small ball B_R(x0) (``source``) and their rescalings on B_1."""
    x0: tuple
    R: float
    u: ScalarField
    grad_u: FormField
    omega: ScalarField  # |Omega|
    f: ScalarField
    u_hat: ScalarField
    grad_u_hat: FormField
    omega_hat: ScalarField
    f_hat: ScalarField
    extra: dict = field(default_factory=dict)


def rescaled_sample(u: ScalarField, omega_norm: ScalarField, f: ScalarField, x0, R: float) -> ScalingSample:
    """Rescale by node copying (x0 must be a node for exact alignment)."""
    grad = gradient(u)
    return ScalingSample(tuple(x0), R, u, grad, omega_norm, f,
                         restrict_rescale(u, x0, R, "u"), restrict_rescale(grad, x0, R, "omega"),
                         restrict_rescale(omega_norm, x0, R, "omega"), restrict_rescale(f, x0, R, "f"))


def scaling_identities(s: ScalingSample, gamma: float = 0.5, l: float = 2.0, nu: float = 0.0,
                       p: float = 2.0, s_exp: float = 1.0, levels: int = 5) -> list[ScalingCheck]:
    """The seven rescaling laws on B_1 versus B_R(x0)."""
    from .norms import MorreyParams, holder_seminorm, lp_norm, morrey_norm, weak_lp_norm

    n = s.u.grid.dim
    R = s.R
    small, unit = Ball(s.x0, R), Ball((0.0,) * n, 1.0)
    unit_radii = MorreyParams.dyadic(levels)
    small_radii = MorreyParams.dyadic(levels, R)
    gnorm = s.grad_u.pointwise_norm2() ** 0.5
    gnorm_hat = s.grad_u_hat.pointwise_norm2() ** 0.5
    G, Gh = ScalarField(s.u.grid, gnorm), ScalarField(s.u_hat.grid, gnorm_hat)
    out = [
        ScalingCheck("morrey-omega",
                     morrey_norm(s.omega_hat, MorreyParams(2, n - 2, unit_radii), unit).value,
                     morrey_norm(s.omega, MorreyParams(2, n - 2, small_radii), small).value),
        ScalingCheck("holder-u", holder_seminorm(s.u_hat, gamma, unit),
                     R ** gamma * holder_seminorm(s.u, gamma, small)),
        ScalingCheck("l1-u", lp_norm(s.u_hat, 1, unit), R ** -n * lp_norm(s.u, 1, small)),
        ScalingCheck("morrey-grad-u",
                     morrey_norm(Gh, MorreyParams(l, nu, unit_radii), unit).value,
                     R ** ((l - (n - nu)) / l) * morrey_norm(G, MorreyParams(l, nu, small_radii), small).value),
        ScalingCheck("weak-grad-u", weak_lp_norm(Gh, l, unit), R ** (1 - n / l) * weak_lp_norm(G, l, small)),
        ScalingCheck("lp-f", lp_norm(s.f_hat, p, unit), R ** (2 - n / p) * lp_norm(s.f, p, small)),
    ]
    beta = n * (1 - s_exp / p)
    lhs = morrey_norm(s.f_hat, MorreyParams(s_exp, beta, unit_radii), unit).value
    out.append(ScalingCheck("morrey-embedding-f", lhs,
                            embedding_constant(s.f_hat.grid, unit, s_exp, p, unit_radii)
                            * lp_norm(s.f_hat, p, unit), "inequality"))
    return out


def embedding_constant(grid: Grid, region: Ball, s: float, p: float, radii) -> float:
    """C with ||f||_{M^{s, n(1-s/p)}(region)} <= C ||f||_{L^p(region)} from the discrete
    Hoelder inequality: max_r (V_r / r^n)^((1 - s/p)/s), V_r the largest discrete
    volume of B_r(x) ∩ region over nodes x of the region (omega_n^((1-s/p)/s) in the limit)."""
    from .maximal import ball_integrals

    n = grid.dim
    mask = grid.radius(region.center) <= region.radius + 1e-12
    c = unit_ball_volume(n)
    for r in radii:
        vol = float(np.max(np.where(mask, ball_integrals(np.ones(grid.shape), grid, r, region), 0)))
        c = max(c, vol / r ** n)
    return c ** ((1 - s / p) / s)


def analytic_sample(u, grad_u, omega_norm, f, source: Grid, unit: Grid, x0, R: float) -> ScalingSample:
    """Evaluate closed-form fields on both grids directly (no interpolation).

    ``u``, ``omega_norm`` and ``f`` map coordinate arrays to values, ``grad_u``
    to a list of n component arrays. The unit grid receives u(x0 + R x),
    R grad u(x0 + R x), R |Omega|(x0 + R x) and R^2 f(x0 + R x).
    """
    X = source.mesh()
    Z = [np.asarray(x0[i]) + R * z for i, z in enumerate(unit.mesh())]
    sf = lambda grid, v: ScalarField(grid, np.broadcast_to(v, grid.shape))  # noqa: E731
    return ScalingSample(
        tuple(x0), R, sf(source, u(*X)), FormField(source, 1, np.stack(grad_u(*X))),
        sf(source, omega_norm(*X)), sf(source, f(*X)),
        sf(unit, u(*Z)), FormField(unit, 1, R * np.stack(grad_u(*Z))),
        sf(unit, R * omega_norm(*Z)), sf(unit, R ** 2 * f(*Z)))


def quadrature_tolerance(grid: Grid, ball: Ball) -> float:
    """Relative error of the partial-cell quadrature for the volume of ``ball``."""
    vol = float(np.sum(ball_weights(grid, ball)) * grid.cell_volume)
    exact = unit_ball_volume(grid.dim) * ball.radius ** grid.dim
    return abs(vol - exact) / exact
