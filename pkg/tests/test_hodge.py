import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hal.field import Ball, FormField, Grid, ScalarField
from hal.hodge import (DiskComplex, PoissonProblem, SolverError, decompose_edges, energy_inequality,
                       harmonic_decay_check, hodge_decompose, solve_dirichlet)


def quartic(g):
    X, Y = g.mesh()
    r2 = X ** 2 + Y ** 2
    w = np.where(r2 < 1, (1 - r2) ** 2, 0.0)
    rhs = np.where(r2 < 1, 8 - 16 * r2, 0.0)  # -Lap (1-r^2)^2
    return ScalarField(g, w), ScalarField(g, rhs)


def smooth_form(g, coeffs):
    X, Y = g.mesh()
    a, b, c, d, e = coeffs
    c1 = a * np.sin(X + b * Y) + c * X * Y
    c2 = d * np.cos(2 * X - Y) + e * X ** 2
    return FormField(g, 1, np.stack([c1, c2]))


def test_zero_rhs_gives_zero():
    g = Grid.cube(2, 64)
    w = solve_dirichlet(PoissonProblem(ScalarField.zeros(g)))
    assert np.all(w.values == 0)


@pytest.mark.parametrize("method", ["direct", "cg"])
def test_poisson_recovers_quartic(method):
    errs = []
    for cells in (64, 128):
        g = Grid.cube(2, cells)
        exact, rhs = quartic(g)
        w = solve_dirichlet(PoissonProblem(rhs, method=method))
        errs.append(float(np.abs(w.values - exact.values).max()))
    assert errs[1] < 2e-3
    assert errs[0] / errs[1] > 2.0  # staircase boundary limits the observed order


def test_poisson_log_and_residual():
    g = Grid.cube(2, 64)
    _, rhs = quartic(g)
    sol = solve_dirichlet(PoissonProblem(rhs, method="cg", tolerance=1e-9), return_log=True)
    assert sol.residual <= 1e-8
    assert sol.iterations == len(sol.log) > 0


def test_maximum_principle():
    g = Grid.cube(2, 96)
    X, Y = g.mesh()
    rhs = -np.exp(-(X - 0.2) ** 2 - Y ** 2)
    w = solve_dirichlet(PoissonProblem(ScalarField(g, rhs)))
    assert w.values.max() <= 1e-12
    assert w.values.min() < 0


def test_solver_error_on_too_few_iterations():
    g = Grid.cube(2, 64)
    _, rhs = quartic(g)
    with pytest.raises(SolverError) as exc:
        solve_dirichlet(PoissonProblem(rhs, method="cg", max_iterations=2))
    assert exc.value.residual > 1e-9


def test_problem_validation():
    g = Grid.cube(2, 16)
    with pytest.raises(ValueError):
        PoissonProblem(ScalarField.zeros(g), tolerance=0)
    with pytest.raises(ValueError):
        PoissonProblem(ScalarField.zeros(g), method="multigrid")
    with pytest.raises(ValueError):
        solve_dirichlet(PoissonProblem(ScalarField.zeros(g), region=Ball((0, 0), 2.0)))


def test_constant_form_is_harmonic():
    g = Grid.cube(2, 128)
    omega = FormField(g, 1, np.stack([np.ones(g.shape), np.zeros(g.shape)]))
    dec = hodge_decompose(omega)
    e = dec.edges
    assert np.abs(e["da"]).max() < 1e-9
    assert np.abs(e["dstar_b"]).max() < 1e-9
    assert np.allclose(e["h"], e["omega"], atol=1e-9)


def test_exact_form_has_only_exact_part():
    g = Grid.cube(2, 128)
    X, Y = g.mesh()
    f = np.where(X ** 2 + Y ** 2 < 1, (1 - X ** 2 - Y ** 2) ** 2 * np.cos(X), 0.0)
    omega = FormField(g, 1, np.stack(np.gradient(f, *g.spacing)))
    dec = hodge_decompose(omega)
    assert np.sqrt(dec.edges["energies"]["da"] / dec.norm2) > 0.999
    inside = g.radius((0, 0)) < 0.8
    assert np.abs(dec.a.values - f)[inside].max() < 5e-3


@settings(max_examples=5)
@given(st.lists(st.floats(-2, 2), min_size=5, max_size=5))
def test_decomposition_defects(coeffs):
    g = Grid.cube(2, 128)
    dec = hodge_decompose(smooth_form(g, coeffs))
    if dec.norm2 < 1e-6:
        return
    assert dec.pythagoras_defect <= 1e-4
    assert dec.orthogonality_defect <= 1e-6 * dec.norm2
    assert dec.residual <= 1e-10 * np.sqrt(dec.norm2) + 1e-14
    assert dec.harmonic_defect <= 1e-6


def test_parts_are_fixed_by_redecomposition():
    g = Grid.cube(2, 96)
    cx = DiskComplex.build(g, Ball.unit(2))
    w = cx.sample(smooth_form(g, (1.0, 0.5, -0.7, 0.8, 0.3)))
    _, _, da, dsb, hh = decompose_edges(cx, w)
    scale = np.abs(w).max()
    for slot, part in enumerate((da, dsb, hh)):
        again = decompose_edges(cx, part)[2:]
        for k, q in enumerate(again):
            target = part if k == slot else 0.0
            assert np.abs(q - target).max() <= 1e-8 * scale


def test_complex_is_a_complex():
    g = Grid.cube(2, 48)
    cx = DiskComplex.build(g, Ball.unit(2))
    assert abs(cx.d1() @ cx.d0()).max() == 0


def test_rejects_non_one_forms_and_bad_grids():
    g = Grid.cube(2, 32)
    with pytest.raises(ValueError):
        hodge_decompose(FormField(g, 2, np.zeros((1,) + g.shape)))
    with pytest.raises(ValueError):
        DiskComplex.build(g, Ball((0, 0), 1.3))


def test_decay_constant_for_constant_form():
    g = Grid.cube(2, 256)
    h = FormField(g, 1, np.stack([np.ones(g.shape), np.zeros(g.shape)]))
    rep = harmonic_decay_check(h)
    assert rep.monotone
    assert np.allclose(rep.values, rep.values[0], rtol=1e-12)


def test_decay_strictly_increasing_for_saddle():
    g = Grid.cube(2, 256)
    X, Y = g.mesh()
    h = FormField(g, 1, np.stack([X, -Y]))  # d((x^2 - y^2)/2)
    rep = harmonic_decay_check(h)
    assert rep.monotone
    assert all(b > a for a, b in zip(rep.values, rep.values[1:]))
    ratios = energy_inequality(h, [0.125, 0.25, 0.5])
    assert all(r <= 1 for _, r in ratios)


def test_decay_of_harmonic_part():
    g = Grid.cube(2, 256)
    dec = hodge_decompose(smooth_form(g, (1.0, 0.3, 0.5, -0.6, 0.2)))
    rep = harmonic_decay_check(dec.h, screen_tol=0.1)
    assert rep.monotone


def test_screen_rejects_non_harmonic():
    g = Grid.cube(2, 128)
    X, Y = g.mesh()
    h = FormField(g, 1, np.stack([-Y, X]))  # curl 2
    with pytest.raises(ValueError, match="screen"):
        harmonic_decay_check(h)


def test_b_gradient_ratio_tends_to_one():
    vals = []
    for cells in (64, 128):
        g = Grid.cube(2, cells)
        vals.append(hodge_decompose(smooth_form(g, (1.0, 0.5, -0.7, 0.8, 0.3))).b_gradient_ratio)
    assert abs(vals[1] - 1) < abs(vals[0] - 1) < 0.1
