import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from hal import pde_system as ps
from hal.field import Ball, Grid, ScalarField, VectorField, interior_mask
from hal.fixtures import get_fixture


def smooth_pair(g):
    X, Y = g.mesh()
    u = VectorField(g, np.stack([np.sin(X) * np.exp(Y), X * Y ** 2]))
    om = ps.ConnectionForm(g, 2, np.stack([np.stack([np.cos(Y), X * Y])]))
    return u, om


def test_connection_storage_is_antisymmetric():
    g = Grid.cube(2, 16)
    rng = np.random.default_rng(0)
    om = ps.ConnectionForm(g, 3, rng.normal(size=(3, 2) + g.shape))
    M = om.matrix()
    assert np.array_equal(M, -M.transpose(1, 0, 2, 3, 4))
    assert om.as_matrix_form().antisymmetry_defect() == 0
    back = ps.ConnectionForm.from_matrix(g, M)
    assert np.array_equal(back.upper, om.upper)


def test_gauge_field_invariants():
    g = Grid.cube(2, 8)
    with pytest.raises(ValueError, match="orthogonal"):
        ps.GaugeField.constant(g, np.array([[1.0, 0.1], [0.0, 1.0]]))
    with pytest.raises(ValueError, match="SO"):
        ps.GaugeField.constant(g, np.diag([1.0, -1.0]))


def test_harmonic_quadratic_residual_is_zero():
    g = Grid.cube(2, 64)
    X, Y = g.mesh()
    u = VectorField(g, np.stack([X ** 2 - Y ** 2, X * Y]))
    r = ps.residual(u, ps.ConnectionForm.zeros(g, 2)).values
    assert np.abs(r).max() < 1e-10


def test_zero_u_gives_zero_residual():
    g = Grid.cube(2, 32)
    _, om = smooth_pair(g)
    assert np.all(ps.residual(VectorField(g, np.zeros((2,) + g.shape)), om).values == 0)


def test_residual_rejects_mismatch():
    g, g2 = Grid.cube(2, 16), Grid.cube(2, 32)
    u, om = smooth_pair(g)
    with pytest.raises(ValueError):
        ps.residual(u, smooth_pair(g2)[1])
    with pytest.raises(ValueError):
        ps.residual(u, ps.ConnectionForm.zeros(g, 3))


@given(st.integers(0, 10_000))
def test_antisymmetric_pairing_skew(seed):
    g = Grid.cube(2, 8)
    rng = np.random.default_rng(seed)
    om = ps.ConnectionForm(g, 3, rng.normal(size=(3, 2) + g.shape))
    v, w = rng.normal(size=(2, 3) + g.shape)
    a = ps.antisymmetric_pairing(om, v, w)
    assert np.allclose(a, -ps.antisymmetric_pairing(om, w, v), atol=1e-12)
    assert np.abs(ps.antisymmetric_pairing(om, v, v)).max() < 1e-12


def test_identity_gauge_is_trivial():
    g = Grid.cube(2, 32)
    _, om = smooth_pair(g)
    op = ps.gauge_transform(om, ps.GaugeField.identity(g, 2))
    assert np.allclose(op.entries, om.matrix(), rtol=0, atol=1e-13)


def test_constant_gauge_covariance_exact():
    g = Grid.cube(2, 64)
    u, om = smooth_pair(g)
    t = 0.83
    P = ps.GaugeField.constant(g, [[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    op = ps.gauge_transform(om, P)
    expect = np.einsum("ji...,jlk...,lq...->iqk...", P.matrices, om.matrix(), P.matrices)
    assert np.allclose(op.entries, expect, atol=1e-14)
    assert ps.gauge_discrepancy(u, om, P) < 1e-10
    res = ps.residual_vector(u, om).components
    back = ps.rotate(P, ps.gauge_residual(u, om, P), transpose=False).components
    assert np.allclose(back, res, atol=1e-10)


def test_smooth_gauge_discrepancy_second_order():
    hs, ds = [], []
    for cells in (32, 64, 128):
        g = Grid.cube(2, cells)
        u, om = smooth_pair(g)
        X, Y = g.mesh()
        P = ps.GaugeField.planar_rotation(g, 0.7 * np.sin(X + 2 * Y))
        hs.append(g.h)
        ds.append(ps.gauge_discrepancy(u, om, P))
    assert abs(ps.fit_power(hs, ds) - 2.0) <= 0.3


def test_smooth_gauge_defect_is_reported():
    g = Grid.cube(2, 64)
    X, Y = g.mesh()
    P = ps.GaugeField.planar_rotation(g, 0.7 * np.sin(X + 2 * Y))
    op = ps.gauge_transform(ps.ConnectionForm.zeros(g, 2), P)
    d = op.antisymmetry_defect()
    assert 0 <= d < 1e-1


def test_counterexample_boundary_value_and_antisymmetry():
    g = Grid.cube(2, 256, 0.5)
    ce = ps.counterexample(g, 2 ** -4)
    assert ce.omega.as_matrix_form().antisymmetry_defect() == 0
    r = g.radius((0, 0))
    near = np.abs(r - ps.OUTER_RADIUS) < g.h
    mag = np.linalg.norm(ce.u.components, axis=0)
    assert np.allclose(mag[near], np.log(r[near]) ** 2 * r[near], rtol=1e-13)
    x = np.array([ps.OUTER_RADIUS * math.cos(0.4), ps.OUTER_RADIUS * math.sin(0.4)])
    L = math.log(ps.OUTER_RADIUS)
    assert np.linalg.norm(L ** 2 * x) == pytest.approx(math.exp(-1), rel=1e-15)


def test_counterexample_sign_against_symbolic_oracle():
    fx = get_fixture("counterexample-logsq")
    syms = sorted(fx.components[0].free_symbols, key=lambda s: s.name)
    lap = [sum(fx.hessian_exprs[i][k][k] for k in range(2)) for i in range(2)]
    grad = [[sp.diff(c, s) for s in syms] for c in fx.components]
    rng = np.random.default_rng(1)
    for _ in range(5):
        rad = rng.uniform(0.07, 0.36)
        th = rng.uniform(0, 2 * math.pi)
        pt = {syms[0]: rad * math.cos(th), syms[1]: rad * math.sin(th)}
        c = ps.COUNTEREXAMPLE_SIGN * float(ps.counterexample_coefficient(np.array(rad)))
        w = (-float(pt[syms[1]]) * c, float(pt[syms[0]]) * c)  # Omega^1_2
        du = [[float(gk.subs(pt)) for gk in gi] for gi in grad]
        rhs = [w[0] * du[1][0] + w[1] * du[1][1], -(w[0] * du[0][0] + w[1] * du[0][1])]
        for i in range(2):
            assert -float(lap[i].subs(pt)) == pytest.approx(rhs[i], rel=1e-10, abs=1e-10)


def test_counterexample_residual_order():
    hs, rs = [], []
    for cells in (128, 256, 512):
        g = Grid.cube(2, cells, 0.5)
        ce = ps.counterexample(g, 2 ** -4)
        r = ps.residual(ce.u, ce.omega).values
        hs.append(g.h)
        rs.append(float(r[ce.mask].max()))
    assert abs(ps.fit_power(hs, rs) - 2.0) <= 0.3


def test_counterexample_rejects_bad_eps():
    g = Grid.cube(2, 64, 0.5)
    for eps in (0.0, 0.5):
        with pytest.raises(ValueError):
            ps.counterexample(g, eps)
    with pytest.raises(ValueError):
        ps.counterexample(Grid.cube(2, 64, 0.3), 0.1)


def test_hessian_energy_log_cubed():
    eps = [2.0 ** -k for k in range(4, 10)]
    E = [ps.hessian_energy(e) for e in eps]
    assert abs(ps.fit_power([abs(math.log(e)) for e in eps], E) - 3) <= 0.2
    for e, v in zip(eps, E):
        assert ps.hessian_energy(e, closed_form=False) == pytest.approx(v, rel=1e-10)


def test_hessian_density_matches_fixture_oracle():
    fx = get_fixture("counterexample-logsq")
    syms = sorted(fx.components[0].free_symbols, key=lambda s: s.name)
    pt = {syms[0]: 0.13, syms[1]: -0.21}
    total = sum(float(fx.hessian_exprs[i][a][b].subs(pt)) ** 2
                for i in range(2) for a in range(2) for b in range(2))
    assert total == pytest.approx(float(ps.hessian_density(math.hypot(0.13, 0.21))), rel=1e-12)


def test_decay_profile_linear():
    g = Grid.cube(2, 256)
    X, _ = g.mesh()
    prof = ps.decay_profile(ScalarField(g, X))
    for r, e in prof.rows():
        assert e == pytest.approx(math.pi * r ** 2, rel=1e-12)
    assert prof.kappa == pytest.approx(2.0, abs=1e-12)


def test_decay_profile_vanishing_gradient():
    g = Grid.cube(2, 256)
    X, Y = g.mesh()
    prof = ps.decay_profile(ScalarField(g, X ** 2 - Y ** 2))
    assert prof.kappa >= 2
    assert ps.holder_target_exponent(3, 2.0) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        ps.decay_profile(ScalarField(g, X), radii=[0.1, 0.2])


def test_counterexample_decay_profile():
    g = Grid.cube(2, 256, 0.5)
    ce = ps.counterexample(g, 2 ** -6)
    prof = ps.decay_profile(ce.u, radii=list(np.geomspace(2 ** -5, 0.35, 5)), exclude=2 ** -6)
    assert 0 < prof.kappa < 2  # slower than any gradient in L^infinity


def analytic(g_src, g_unit, x0, R):
    return ps.analytic_sample(
        lambda x, y: np.sin(x) * np.exp(y) + x * y,
        lambda x, y: [np.cos(x) * np.exp(y) + y, np.sin(x) * np.exp(y) + x],
        lambda x, y: 1 / np.sqrt(0.01 + (x - 0.12) ** 2 + y ** 2),
        lambda x, y: np.cos(3 * x) * (1 + y ** 2), g_src, g_unit, x0, R)


@pytest.mark.parametrize("x0,R", [((0.1, 0.05), 0.25), ((-0.2, 0.3), 0.125)])
def test_scaling_identities(x0, R):
    unit = Grid.cube(2, 128)
    src = Grid.cube(2, 128, 1.25 * R, center=x0)
    tol = 2 * ps.quadrature_tolerance(unit, Ball.unit(2))
    for chk in ps.scaling_identities(analytic(src, unit, x0, R)):
        assert chk.rel_error <= tol, chk.name


def test_residual_scaling_covariance():
    x0, R = (0.1, -0.05), 0.3
    unit = Grid.cube(2, 64)
    src = Grid.cube(2, 64, 1.25 * R, center=x0)
    def fields(g, scale_omega, scale_f, shift):
        X, Y = [shift[i] + scale_omega[1] * z for i, z in enumerate(g.mesh())]
        u = VectorField(g, np.stack([np.sin(X) * np.exp(Y), X * Y ** 2]))
        om = ps.ConnectionForm(g, 2, scale_omega[0] * np.stack([np.stack([np.cos(Y), X * Y])]))
        f = VectorField(g, scale_f * np.stack([X, np.cos(Y)]))
        return u, om, f
    a = ps.residual_vector(*fields(src, (1.0, 1.0), 1.0, (0.0, 0.0))).components
    b = ps.residual_vector(*fields(unit, (R, R), R ** 2, x0)).components
    m = interior_mask(unit, ps.INTERIOR_LAYERS)
    assert np.allclose(b[:, m], R ** 2 * a[:, m], rtol=1e-8, atol=1e-10)
