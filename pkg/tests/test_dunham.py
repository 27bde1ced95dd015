import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wkbresum import dunham as dn
from wkbresum import resummed as rs
from wkbresum.potentials import make

from .conftest import NAMED


def test_binomial_coefficients():
    assert [dn.binomial_coefficient_c(n) for n in (1, 2, 3, 4)] == pytest.approx([-1 / 2, -1 / 8, -1 / 16, -5 / 128])
    with pytest.raises(ValueError):
        dn.binomial_coefficient_c(0)


def test_binomial_closed_form_agrees_with_gamma():
    for n in range(1, 12):
        g = math.gamma(n - 0.5) / (math.gamma(-0.5) * math.gamma(n + 1))
        assert dn.binomial_coefficient_c(n) == pytest.approx(g, rel=1e-13)


@given(st.floats(-0.7, 0.7))
def test_binomial_partial_sum_converges(x):
    assert dn.binomial_partial_sum(x, 30).real == pytest.approx(math.sqrt(1 + x * x), abs=1e-8)


def test_s_prime_at_flat_point(sho):
    s = dn.s_prime_values(sho, 1.0, np.array([0.0 + 0j]), 4)
    assert abs(s[1, 0]) < 1e-14
    s0 = dn.s_prime_values(sho, 1.0, np.array([2j]), 2)[0, 0]
    assert s0 * s0 == pytest.approx(-5)


def test_order_underflow(sho):
    from wkbresum.errors import OrderUnderflow

    with pytest.raises(OrderUnderflow):
        dn.s_prime_values(sho, 1.0, np.array([2j]), 6, order=3)


@pytest.mark.parametrize("family,params", NAMED)
def test_riccati_recurrence_closes(family, params):
    m = make(family, **params)
    E = dn.mid_well_energy(m)
    z = dn._geometry(m, E).series_contour.points(64)[0]
    assert dn.riccati_residual(m, E, z, 8) < 1e-9


def test_sho_terms(sho):
    assert dn.dunham_term_integral(sho, 3.0, 0) == pytest.approx(1.5 * math.pi, abs=1e-10)
    assert dn.dunham_term_integral(sho, 3.0, 1) == pytest.approx(-0.5 * math.pi, abs=1e-10)
    assert abs(dn.dunham_term_integral(sho, 3.0, 2)) < 1e-8
    with pytest.raises(ValueError):
        dn.dunham_term_integral(sho, 3.0, -1)


@pytest.mark.parametrize("family,params", NAMED)
def test_maslov_and_odd_orders(family, params):
    m = make(family, **params)
    E = dn.mid_well_energy(m)
    t = dn.partial_sum_table(m, E, 6, with_resummed=False)
    I = dict(t.orders)
    assert I[0].real > 0 and abs(I[0].imag) < 1e-8 * abs(I[0])
    assert I[1] == pytest.approx(-0.5 * math.pi, abs=1e-8)
    for n in (3, 5):
        assert abs(I[n]) < 1e-6 * (1 + abs(I[0]))


def test_rosen_morse_series_values(rosen_morse):
    t = dn.partial_sum_table(rosen_morse, -2.0, 8)
    I = dict(t.orders)
    assert I[0].real == pytest.approx(1.99168993403, abs=1e-9)
    assert I[2].real == pytest.approx(math.pi / 16, abs=1e-9)
    assert I[4].real == pytest.approx(-math.pi / 1024, abs=1e-9)
    assert t.resummed_action == pytest.approx(2.18506379856, abs=1e-9)
    # the first corrections move the partial sums towards the resummed action
    sums = dict(t.partial_sums)
    gaps = [abs(sums[n].real - t.resummed_action) for n in (0, 2, 4)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_partial_sum_table_shape(sho):
    t = dn.partial_sum_table(sho, 3.0, 8)
    assert [n for n, _ in t.orders] == list(range(9))
    assert [n for n, _ in t.partial_sums] == [0, 2, 4, 6, 8]
    # the even sums are constant after order 0 on the oscillator
    vals = [v.real for _, v in t.partial_sums]
    assert np.ptp(vals) < 1e-8
    assert t.resummed_action == pytest.approx(vals[0], abs=1e-9)
    for bad in (1, 3):
        with pytest.raises(ValueError):
            dn.partial_sum_table(sho, 3.0, bad)


def test_dunham_action_sums_even_orders(rosen_morse):
    t = dn.partial_sum_table(rosen_morse, -2.0, 4, with_resummed=False)
    assert dn.dunham_action(rosen_morse, -2.0, 4) == pytest.approx(t.partial_sums[-1][1], abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("name", ["sho", "rosen_morse"])
def test_hypothesis_residual(request, name, n):
    m = request.getfixturevalue(name)
    r = dn.hypothesis_residual(m, dn.mid_well_energy(m), n)
    assert r.coefficient == dn.binomial_coefficient_c(n)
    assert r.defect < 1e-6 * (1 + abs(r.lhs))


def test_hypothesis_residual_fourth_order(rosen_morse):
    r = dn.hypothesis_residual(rosen_morse, -2.0, 4)
    assert r.defect < 1e-5 * (1 + abs(r.lhs))
    with pytest.raises(ValueError):
        dn.hypothesis_residual(rosen_morse, -2.0, 5)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.15, 0.85), st.integers(1, 2))
def test_hypothesis_residual_across_energies(frac, n):
    m = make("rosen_morse", U0=4, U1=1, a=1)
    lo, hi = m.energy_range()
    r = dn.hypothesis_residual(m, lo + frac * (hi - lo), n)
    assert r.defect < 1e-6 * (1 + abs(r.lhs))
