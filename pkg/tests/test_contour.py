import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wkbresum import contour as ct
from wkbresum.errors import ContourInfeasible, OnContour, QuadratureNoConverge
from wkbresum.potentials import known_singularities, make


def test_build_contour_sho():
    tp = make("sho").turning_points(1.0)
    c = ct.build_contour(tp, margin=0.5)
    assert c.center == pytest.approx(0)
    assert c.semi_major == pytest.approx(1.5)
    assert ct.winding_number(c, tp.z_a) == ct.winding_number(c, tp.z_b) == 1


def test_build_contour_respects_clearance():
    m = make("rosen_morse", U0=4, U1=0, a=1)
    sing = known_singularities(m)
    E = -4 * (1 - math.tanh(0.8) ** 2)
    tp = m.turning_points(E)
    assert tp.z_b.real == pytest.approx(0.8)
    c = ct.build_contour(tp, sing.points, margin=0.5, clearance=sing.clearance)
    assert c.semi_minor <= 0.9 * math.pi / 2
    assert all(ct.winding_number(c, p) == 0 for p in sing.points if abs(p) < 10)


def test_build_contour_origin_exclusion():
    # r^2 + c / r^2 = E with turning points 0.3 and 2.1
    m = make("harmonic3d", b=0.3**2 * 2.1**2, l=0)
    tp = m.turning_points(0.3**2 + 2.1**2)
    assert (tp.z_a.real, tp.z_b.real) == pytest.approx((0.3, 2.1))
    with pytest.raises(ContourInfeasible, match="0j"):
        ct.build_contour(tp, [0j], margin=0.5)
    c = ct.build_contour(tp, [0j], margin=0.2)
    assert ct.winding_number(c, 0j) == 0


def test_build_contour_rejects_bad_margin():
    tp = make("sho").turning_points(1.0)
    with pytest.raises(ValueError):
        ct.build_contour(tp, margin=1.5)


def test_simple_integrals():
    c = ct.ContourSpec(0.2 + 0.1j, 2.0, 1.0, 0.3)
    assert ct.integrate_closed(lambda z: 1 / (z - 0.5), c).value == pytest.approx(2j * math.pi, abs=1e-12)
    assert abs(ct.integrate_closed(lambda z: z**2, c).value) < 1e-12
    assert abs(ct.integrate_closed(lambda z: 6 * z**3, c).value) < 1e-12


def test_winding_numbers():
    c = ct.ContourSpec(1.0, 2.0, 0.5, 0.4)
    assert ct.winding_number(c, 1.0) == 1
    assert ct.winding_number(c, 50.0) == 0
    z, _ = c.points(16)
    with pytest.raises(OnContour):
        ct.winding_number(c, z[3])


def test_winding_agrees_with_interior_test():
    rng = np.random.default_rng(3)
    c = ct.ContourSpec(0.5 - 0.2j, 1.7, 0.4, 1.1)
    pts = rng.uniform(-2, 3, 200) + 1j * rng.uniform(-2, 2, 200)
    inside = c.contains(pts)
    assert [ct.winding_number(c, p) for p in pts] == inside.astype(int).tolist()


def test_contour_deformation_independence():
    f = lambda z: 1 / (z - (0.3 + 0.2j))  # noqa: E731
    a = ct.integrate_closed(f, ct.ContourSpec(0, 1.0, 0.6)).value
    b = ct.integrate_closed(f, ct.ContourSpec(0.5, 3.0, 1.2, 0.7)).value
    assert abs(a - b) < 1e-10


def test_branch_tracked_closure():
    c = ct.ContourSpec(0, 1.6, 0.8)
    res = ct.integrate_closed(ct.BranchIntegrand(lambda z: z * z - 1), c, branch_tracked=True)
    assert res.closure_defect < 1e-10
    # sqrt(z^2 - 1) = z - 1/(2z) + ...: the loop picks up -pi i
    assert abs(abs(res.value) - math.pi) < 1e-10


def test_spectral_convergence_history():
    # pole at distance from the contour: errors shrink geometrically with doubling
    c = ct.ContourSpec(0, 1.0, 0.6, nodes=8)
    exact = 2j * math.pi
    errs = []
    for n in (8, 16, 32):
        z, dz = c.points(n)
        errs.append(abs(np.sum(dz / (z - 0.2)) - exact))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < errs[1] ** 1.5
    res = ct.integrate_closed(lambda z: 1 / (z - 1.5), ct.ContourSpec(0, 1.0, 0.6, nodes=8))
    steps = [abs(b - a) for (_, a), (_, b) in zip(res.history, res.history[1:])]
    assert all(x > y for x, y in zip(steps, steps[1:]))


def test_no_convergence_reported():
    c = ct.ContourSpec(0, 1.0, 0.6)
    with pytest.raises(QuadratureNoConverge):
        ct.integrate_closed(lambda z: 1 / (z - 1.0000001), c, nodes_cap=512)


def test_fit_contour_separates():
    inner = np.array([-1.0, 1.0, 0.2 + 0.3j])
    outer = np.array([0.5 + 1.0j, 0.5 - 1.0j, 3.0])
    c = ct.fit_contour(inner, outer)
    assert all(ct.winding_number(c, p) == 1 for p in inner)
    assert all(ct.winding_number(c, p) == 0 for p in outer)
    assert c.gap > 0


def test_exact_derivative_examples():
    c = ct.ContourSpec(0.1, 1.5, 0.9, 0.2)
    assert ct.exact_derivative_product_check([0, 0, 1], [0, 0, 0, 1], c) < 1e-12
    big = ct.ContourSpec(0, 8.0, 5.0)
    z5 = [0, 0, 0, 0, 0, 1]
    z, dz = big.points(64)
    scale = np.sum(np.abs(25 * z**8 * dz))
    assert ct.exact_derivative_product_check(z5, z5, big) < 1e-12 * scale


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_exact_derivative_random_pairs(seed):
    rng = np.random.default_rng(seed)
    f = rng.normal(size=9) + 1j * rng.normal(size=9)
    g = rng.normal(size=9)
    a = rng.uniform(0.3, 3)
    c = ct.ContourSpec(complex(*rng.normal(size=2)), a, a * rng.uniform(0.2, 1), rng.uniform(0, math.pi))
    P = np.polynomial.Polynomial
    z, _ = c.points(512)
    scale = np.max(np.abs(P(f).deriv()(z) * P(g).deriv()(z)))
    assert ct.exact_derivative_product_check(f, g, c) < 1e-10 * scale
