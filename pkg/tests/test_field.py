import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hal.field import (Ball, FormField, Grid, ScalarField, VectorField, codifferential,
                       exterior_derivative, gradient, hodge_star, integrate, interior_mask,
                       laplacian, restrict_rescale)


def test_grid_invariants():
    with pytest.raises(ValueError):
        Grid((4, 4), (0.1, 0.1), (0.0, 0.0))
    with pytest.raises(ValueError):
        Grid((16, 16), (0.1, -0.1), (0.0, 0.0))
    g = Grid.cube(2, 64)
    assert g.covers_unit_ball
    assert g.index_of((0.0, 0.0)) == (32, 32)


def test_fields_reject_non_finite():
    g = Grid.cube(2, 16)
    v = np.zeros(g.shape)
    v[3, 3] = np.nan
    with pytest.raises(ValueError):
        ScalarField(g, v)
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros((5, 5)))


def test_gradient_of_affine_is_exact():
    g = Grid.cube(2, 64)
    X, Y = g.mesh()
    d = gradient(ScalarField(g, X))
    assert np.allclose(d.components[0], 1, atol=1e-12)
    assert np.allclose(d.components[1], 0, atol=1e-12)


def test_gradient_of_constant_is_zero():
    g = Grid.cube(2, 32)
    d = gradient(ScalarField(g, np.full(g.shape, 5.0)))
    assert np.all(d.components == 0)


def test_gradient_of_quadratic_is_exact_inside():
    g = Grid.cube(2, 320)  # h = 2^-7
    assert g.h == 2.0 ** -7
    X, _ = g.mesh()
    d = gradient(ScalarField(g, X ** 2)).components[0]
    m = interior_mask(g)
    assert np.max(np.abs(d[m] - 2 * X[m])) < 1e-12


def test_dx1_is_closed_and_coclosed():
    g = Grid.cube(2, 32)
    w = FormField(g, 1, np.stack([np.ones(g.shape), np.zeros(g.shape)]))
    m = interior_mask(g)
    assert np.all(exterior_derivative(w).components[:, m] == 0)
    assert np.all(codifferential(w).components[:, m] == 0)


def test_star_convention_2d():
    g = Grid.cube(2, 16)
    one, zero = np.ones(g.shape), np.zeros(g.shape)
    s1 = hodge_star(FormField(g, 1, np.stack([one, zero]))).components
    s2 = hodge_star(FormField(g, 1, np.stack([zero, one]))).components
    assert np.array_equal(s1, np.stack([zero, one]))
    assert np.array_equal(s2, np.stack([-one, zero]))


def test_codifferential_matches_star_formula():
    g = Grid.cube(2, 48)
    X, Y = g.mesh()
    w = FormField(g, 1, np.stack([np.sin(X) * Y, np.cos(X * Y)]))
    n, k = 2, 1
    alt = hodge_star(exterior_derivative(hodge_star(w)))
    sign = (-1) ** (n * (k + 1) + 1)
    assert np.allclose(codifferential(w).components, sign * alt.components, atol=1e-12)


def test_dd_is_second_order():
    errs, hs = [], []
    for cells in (32, 64, 128):
        g = Grid.cube(2, cells)
        X, Y = g.mesh()
        f = ScalarField(g, np.exp(-8 * (X ** 2 + Y ** 2)))
        dd = exterior_derivative(gradient(f)).components
        errs.append(np.abs(dd[:, interior_mask(g, 2)]).max())
        hs.append(g.h)
    rate = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert errs[-1] < 1e-12 or rate > 1.7


def test_integrate_unit_disk():
    g = Grid.cube(2, 640)  # h = 2^-8
    one = ScalarField(g, np.ones(g.shape))
    assert abs(integrate(one, Ball.unit(2)) - math.pi) / math.pi < 0.01
    assert integrate(ScalarField.zeros(g), Ball.unit(2)) == 0.0
    r = ScalarField(g, g.radius())
    assert abs(integrate(r, Ball.unit(2)) - 2 * math.pi / 3) / (2 * math.pi / 3) < 0.01


def test_integrate_outside_box_is_zero():
    g = Grid.cube(2, 32)
    assert integrate(ScalarField(g, np.ones(g.shape)), Ball((10.0, 10.0), 1.0)) == 0.0


@given(st.floats(0.1, 0.9), st.floats(0.1, 0.9))
def test_integrate_monotone_in_radius(r1, r2):
    g = Grid.cube(2, 64)
    f = ScalarField(g, 1 + g.radius() ** 2)
    a, b = sorted((r1, r2))
    assert integrate(f, Ball((0.0, 0.0), a)) <= integrate(f, Ball((0.0, 0.0), b)) + 1e-15


def test_integrate_additive_over_disjoint_balls():
    g = Grid.cube(2, 256)
    f = ScalarField(g, np.ones(g.shape))
    b1, b2 = Ball((-0.5, 0.0), 0.3), Ball((0.5, 0.0), 0.3)
    w = integrate(f, b1) + integrate(f, b2)
    assert abs(w - 2 * math.pi * 0.09) < 2e-3


def test_restrict_rescale_affine_exact():
    g = Grid.cube(2, 64)
    X, Y = g.mesh()
    u = VectorField(g, np.stack([X, Y]))
    target = Grid.cube(2, 32, 1.0)
    uh = restrict_rescale(u, (0.0, 0.0), 0.5, target=target)
    TX, _ = target.mesh()
    assert np.allclose(uh.components[0], TX / 2, atol=1e-14)


def test_restrict_rescale_identity():
    g = Grid.cube(2, 32, 1.0)
    f = ScalarField(g, np.random.default_rng(0).normal(size=g.shape))
    out = restrict_rescale(f, (0.0, 0.0), 1.0, target=g)
    assert np.allclose(out.values, f.values, atol=1e-14)


def test_restrict_rescale_powers_and_errors():
    g = Grid.cube(2, 64)
    f = ScalarField(g, np.ones(g.shape))
    assert np.allclose(restrict_rescale(f, (0, 0), 0.5, "f").values, 0.25)
    assert np.allclose(restrict_rescale(f, (0, 0), 0.5, "omega").values, 0.5)
    with pytest.raises(ValueError):
        restrict_rescale(f, (1.0, 0.0), 0.5)


def test_laplacian_stencils_agree_on_quadratics():
    g = Grid.cube(2, 32)
    X, Y = g.mesh()
    f = ScalarField(g, X ** 2 - Y ** 2 + 3 * X * Y)
    m = interior_mask(g, 2)
    assert np.abs(laplacian(f).values[m]).max() < 1e-9
    assert np.abs(laplacian(f, "compact").values[m]).max() < 1e-9
