import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from hal import bootstrap as bs
from hal.field import Grid, ScalarField


def test_params_derived_quantities():
    p = bs.BootstrapParams(3, 2)
    assert p.exact
    assert p.gamma == Fraction(1, 2)
    assert p.s_limit == Fraction(4, 3)
    assert p.contraction() == Fraction(1, 3)
    with pytest.raises(ValueError):
        bs.BootstrapParams(3, Fraction(3, 2))
    with pytest.raises(ValueError):
        bs.BootstrapParams(3, 3)
    with pytest.raises(ValueError):
        bs.BootstrapParams(1, Fraction(3, 4))


def test_fixed_point_exact():
    for n, p in ((3, 2), (2, Fraction(3, 2)), (4, 3), (5, Fraction(7, 2))):
        params = bs.BootstrapParams(n, p)
        assert bs.exact_fixed_point_check(params)
    with pytest.raises(ValueError):
        bs.exact_fixed_point_check(bs.BootstrapParams(3, 2.0))


def test_first_step_rational():
    st_ = bs.exponent_iterate(Fraction(11, 10), bs.BootstrapParams(3, 2), k_max=2)
    assert st_.sequence[1] == Fraction(66, 53)
    assert bs.exponent_iterate("1.1", bs.BootstrapParams(3, 2), k_max=2).sequence[1] == Fraction(66, 53)


def test_float_input_runs_at_128_bits():
    st_ = bs.exponent_iterate(1.1, bs.BootstrapParams(3, 2), k_max=2)
    assert not isinstance(st_.sequence[1], Fraction)
    assert float(st_.sequence[1]) == pytest.approx(66 / 53, rel=1e-15)


def test_start_outside_interval_rejected():
    params = bs.BootstrapParams(3, 2)
    for s1 in (1, Fraction(4, 3), 2, "0.9"):
        with pytest.raises(ValueError):
            bs.exponent_iterate(s1, params)


@pytest.mark.parametrize("n,p", [(3, 2), (2, Fraction(3, 2)), (4, 3)])
def test_monotone_convergence(n, p):
    params = bs.BootstrapParams(n, p)
    rng = random.Random(n)
    lim = float(params.s_limit)
    for _ in range(5):
        s1 = 1 + (lim - 1) * rng.uniform(0.01, 0.99)
        state = bs.exponent_iterate(s1, params, k_max=200)
        assert state.monotone
        assert state.gaps[-1] < 1e-12
        assert bs.steps_to_gap(s1, params, 1e-12) <= 200


def test_exact_iterates_stay_below_limit():
    params = bs.BootstrapParams(3, 2)
    state = bs.exponent_iterate(Fraction(101, 100), params, k_max=30)
    assert state.monotone
    assert all(isinstance(g, Fraction) and g > 0 for g in state.gaps)
    # the gap contracts by (n - p)/n asymptotically
    assert float(state.gaps[-1] / state.gaps[-2]) == pytest.approx(1 / 3, rel=1e-6)


@given(st.fractions(Fraction(1), Fraction(4, 3)), st.fractions(Fraction(1), Fraction(4, 3)))
def test_order_preserving(a, b):
    if not (1 < a < b < Fraction(4, 3)):
        return
    params = bs.BootstrapParams(3, 2)
    sa = bs.exponent_iterate(a, params, k_max=6).sequence
    sb = bs.exponent_iterate(b, params, k_max=6).sequence
    assert all(x < y for x, y in zip(sa, sb))


def test_decay_pure_geometric():
    st_ = bs.decay_iterate(Fraction(3), Fraction(1, 4), Fraction(1, 2), 0, k_max=20)
    assert all(a == Fraction(3) * Fraction(1, 4) ** k for k, a in enumerate(st_.sequence))


def test_decay_matches_closed_form():
    st_ = bs.decay_iterate(1.0, 0.25, 0.5, 1.0, k_max=50)
    assert st_.monotone
    for a, b in zip(st_.sequence, st_.bounds):
        assert a == pytest.approx(b, rel=1e-14)
    ex = bs.decay_iterate(Fraction(1), Fraction(1, 4), Fraction(1, 2), Fraction(1), k_max=50)
    assert ex.sequence == ex.bounds


def test_decay_random_regime():
    rng = random.Random(7)
    for _ in range(30):
        Lam = rng.uniform(0.05, 0.99)
        lam = Lam * rng.uniform(0.01, 0.99)
        K, a1 = rng.uniform(0, 5), rng.uniform(0, 5)
        st_ = bs.decay_iterate(a1, lam, Lam, K, k_max=60)
        C = bs.decay_constant(a1, lam, Lam, K)
        for k, (a, b) in enumerate(zip(st_.sequence, st_.bounds)):
            assert abs(a - b) <= 1e-12 * max(abs(b), 1e-300)
            assert a <= C * Lam ** k * (1 + 1e-12)


def test_decay_regime_rejected():
    with pytest.raises(ValueError, match="lambda"):
        bs.decay_iterate(1.0, 0.5, 0.5, 1.0)
    with pytest.raises(ValueError):
        bs.decay_closed_form(0, 1.0, 0.25, 0.5, 1.0)


def test_max_delta_keeps_regime():
    for n in (2, 3, 4):
        for gamma in (0.1, 0.5, 0.9):
            Lam = bs.decay_Lambda(n, gamma)
            dmax = bs.max_delta(n, gamma)
            assert bs.decay_lambda(n, 0.999 * dmax) < Lam
            assert bs.decay_lambda(n, dmax) == pytest.approx(Lam)


def test_absorption_zero_table():
    radii = [2.0 ** -j for j in range(5)]
    table = bs.power_table([(0.0, 0.0)], radii, 1.0, scale=0.0)
    v = bs.absorption_check(table, 2.0, 1.0, 0.0)
    assert v.hypothesis_holds
    assert v.conclusion_ratio == 0


def test_absorption_power_table():
    n, gamma = 2, 0.5
    radii = [2.0 ** -j for j in range(6)]
    table = bs.power_table([(0.0, 0.0), (0.1, 0.0)], radii, n - 2 + 2 * gamma)
    k, eps0 = 1.0, 0.1
    G = bs.minimal_gamma(table, k, eps0)
    v = bs.absorption_check(table, k, G, eps0)
    assert G > 0
    assert v.hypothesis_holds
    assert math.isfinite(v.conclusion_ratio)
    assert not bs.absorption_check(table, k, 0.5 * G, eps0).hypothesis_holds


def test_absorption_rejects_non_monotone_table():
    table = {((0.0, 0.0), 1.0): 1.0, ((0.0, 0.0), 0.5): 2.0}
    with pytest.raises(ValueError, match="subadditivity"):
        bs.absorption_check(table, 1.0, 1.0, 0.1)
    with pytest.raises(ValueError):
        bs.absorption_check({}, 1.0, -1.0, 0.1)


def test_morrey_tables_pass_screen():
    g = Grid.cube(2, 64)
    X, Y = g.mesh()
    f = ScalarField(g, 1 / (0.05 + X ** 2 + Y ** 2))
    table = bs.morrey_table(f, 2.0, 1.0, [(0.0, 0.0), (0.2, 0.1)], [0.25, 0.5, 1.0], scan_levels=3)
    assert bs.subadditivity_screen(table) == []
