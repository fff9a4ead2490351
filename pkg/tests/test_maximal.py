import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hal.field import Ball, Grid, ScalarField, integrate, unit_ball_volume
from hal.fixtures import get_fixture, jacobian_pairs
from hal.maximal import (Mollifier, fractional_maximal, hardy_norm, hardy_tail_bound, hl_maximal,
                         local_hardy_norm, smooth_maximal)

MOLL = Mollifier.default(2)


def test_mollifier_contract():
    raw = Mollifier.default(2, unit_mass=False)
    assert raw.lipschitz <= 1 + 0.01
    assert MOLL.mass == pytest.approx(1.0, abs=1e-3)
    assert all(t < 1 for t in MOLL.local().scales)
    with pytest.raises(ValueError):
        Mollifier(raw.profile, (0.0, 1.0), 2)


def test_fractional_maximal_constant_beta_n():
    g = Grid.cube(2, 256)
    mf = fractional_maximal(ScalarField(g, np.ones(g.shape)), 2.0)
    assert mf.values[g.index_of((0.0, 0.0))] == pytest.approx(math.pi, rel=0.01)


def test_fractional_maximal_zero():
    g = Grid.cube(2, 64)
    assert np.all(fractional_maximal(ScalarField.zeros(g), 1.0).values == 0)


def test_fractional_maximal_disk_indicator():
    g = Grid.cube(2, 256)
    f = get_fixture("disk-indicator").sample(g)
    mf = fractional_maximal(f, 0.0)
    assert mf.values[g.index_of((0.0, 0.0))] == pytest.approx(math.pi / 4, rel=0.01)


@given(st.floats(0.01, 100.0), st.floats(0.0, 2.0))
def test_fractional_maximal_homogeneous(c, beta):
    g = Grid.cube(2, 32)
    f = get_fixture("gaussian").sample(g)
    a = fractional_maximal(ScalarField(g, c * f.values), beta).values
    b = c * fractional_maximal(f, beta).values
    assert np.allclose(a, b, rtol=1e-12, atol=1e-300)


def test_refining_radius_scan_never_decreases():
    g = Grid.cube(2, 64)
    f = get_fixture("dipole").sample(g)
    coarse = fractional_maximal(f, 1.0, radii=(1.0, 0.25)).values
    fine = fractional_maximal(f, 1.0, radii=(1.0, 0.5, 0.25, 0.125)).values
    assert np.all(fine >= coarse)


def test_smooth_maximal_reproduces_constants():
    g = Grid.cube(2, 128, 3.0)
    c = 2.5
    mf = smooth_maximal(ScalarField(g, np.full(g.shape, c)), MOLL.local())
    assert mf.values[g.index_of((0.0, 0.0))] == pytest.approx(c, rel=0.01)
    with pytest.raises(ValueError):
        smooth_maximal(ScalarField(g, np.ones(g.shape)), MOLL.with_scales([2.0, 4.0]), local=True)


def test_pointwise_chain_local_star_hl():
    g = Grid.cube(2, 128)
    f = get_fixture("dipole").sample(g)
    loc = smooth_maximal(f, MOLL, local=True).values
    glob = smooth_maximal(f, MOLL).values
    M = hl_maximal(f).values
    c_n = MOLL.sup * unit_ball_volume(2)
    assert np.all(loc <= glob)
    assert np.all(glob <= c_n * M * 1.02 + 1e-14)


def _ball_integrals(values, g, radii):
    return [integrate(ScalarField(g, values), Ball((0.0, 0.0), R)) for R in radii]


def test_dipole_hardy_integral_bounded_and_indicator_grows_like_log():
    g = Grid.cube(2, 640, 16.5)
    radii = [2.0, 4.0, 8.0, 16.0]
    moll = MOLL.with_scales([2.0 ** k for k in range(-10, 7)])  # t up to 64 > |x|
    dip = smooth_maximal(get_fixture("dipole").sample(g), moll).values
    ind = smooth_maximal(get_fixture("disk-indicator").sample(g), moll).values
    I_dip = _ball_integrals(dip, g, [1.0] + radii)
    I_ind = _ball_integrals(ind, g, radii)
    # cancellation: g_* ~ |x|^-3, so the increments over dyadic annuli shrink geometrically
    inc = np.diff(I_dip)
    assert np.all(inc[1:] <= 0.6 * inc[:-1])
    # no cancellation: g_* ~ |x|^-2, increments over dyadic annuli are constant
    slope, icpt = np.polyfit(np.log(radii), I_ind, 1)
    fit = slope * np.log(radii) + icpt
    assert slope > 0.5
    assert np.max(np.abs(fit - I_ind)) < 0.02 * (I_ind[-1] - I_ind[0])


def test_hardy_norms_ordering_and_zero():
    g = Grid.cube(2, 128, 1.5)
    f = get_fixture("dipole").sample(g)
    assert local_hardy_norm(f, MOLL) <= hardy_norm(f, MOLL)
    assert hardy_norm(ScalarField.zeros(g), MOLL) == 0.0


def test_hardy_support_margin_rejected():
    g = Grid.cube(2, 64)
    f = get_fixture("gaussian-wide").sample(g)
    with pytest.raises(ValueError, match="boundary"):
        hardy_norm(f, MOLL)


def test_tail_bound_infinite_for_nonzero_mean():
    g = Grid.cube(2, 64, 2.0)
    f = get_fixture("disk-indicator").sample(g)
    assert hardy_tail_bound(f, MOLL) == math.inf
    assert math.isfinite(hardy_tail_bound(get_fixture("dipole").sample(g), MOLL))


def test_jacobian_integrates_to_zero():
    g = Grid.cube(2, 256)
    for pair in jacobian_pairs():
        J = pair.sample_jacobian(g)
        l1 = integrate(ScalarField(g, np.abs(J.values)))
        assert abs(integrate(J)) < 1e-6 * l1
