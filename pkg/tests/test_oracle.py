import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import eigh_tridiagonal

from wkbresum import _sturm_py, oracle
from wkbresum._kernels import BACKEND, bisect_eigenvalues, sturm_count
from wkbresum.errors import GridTooCoarse, InvalidParameters
from wkbresum.oracle import GridSpec, compare_spectra, solve_eigenvalues
from wkbresum.potentials import analytic_level, make


def test_sho_box():
    s = solve_eigenvalues(make("sho"), GridSpec(-8, 8, 4000), 4)
    assert s.energies == pytest.approx([1, 3, 5, 7], abs=1e-5)
    assert np.all(np.diff(s.energies) > 0)
    assert s.discretization_estimate < 1e-4


def test_morse_box(morse):
    s = solve_eigenvalues(morse, GridSpec(-3, 12, 6000), 4)
    # only two levels lie below the continuum
    assert s.energies == pytest.approx([-2.25, -0.25], abs=1e-4)


def test_radial_box():
    m = make("harmonic3d", b=1, l=1)
    s = solve_eigenvalues(m, GridSpec.radial(10, 6000), 3)
    assert s.energies == pytest.approx([analytic_level(m, K) for K in range(3)], abs=1e-4)
    assert s.grid.kind == "half-line" and s.grid.x_min == pytest.approx(10 / 6000)


def test_grid_validation():
    for args in [(-1, 1, 50), (1, -1, 200)]:
        with pytest.raises(InvalidParameters):
            GridSpec(*args)
    with pytest.raises(InvalidParameters):
        GridSpec(0, 1, 200, "half-line")


def test_grid_too_coarse():
    with pytest.raises(GridTooCoarse):
        solve_eigenvalues(make("sho"), GridSpec(-8, 8, 400), 4, tol=1e-6)


def test_compare_spectra_examples():
    r = compare_spectra([1, 3], [1, 3], 1e-4)
    assert r["passed"] and r["max_abs_diff"] == 0
    r = compare_spectra([1, 3], [1, 3 + 2e-5], 1e-4)
    assert r["passed"] and r["max_abs_diff"] == pytest.approx(2e-5)
    r = compare_spectra([1, 3, 5], [1.1, 3], 1e-4)
    assert r["count"] == 2 and not r["passed"]


def test_resummed_vs_oracle_sho(sho):
    from wkbresum.resummed import spectrum

    res = [r.E for r in spectrum(sho, 3)]
    assert compare_spectra(res, solve_eigenvalues(sho, count=4).energies, 1e-4)["passed"]


def test_second_order_convergence(sho):
    order = oracle.convergence_order(sho, GridSpec(-8, 8, 4000), 4)
    assert order == pytest.approx([2, 2, 2, 2], abs=0.05)


def test_box_insensitivity(sho):
    # same spacing h = 0.004 on a box 25% wider
    a = solve_eigenvalues(sho, GridSpec(-8, 8, 3999), 4).raw_energies
    b = solve_eigenvalues(sho, GridSpec(-10, 10, 4999), 4).raw_energies
    assert np.max(np.abs(a - b)) < 1e-8


def test_richardson_improves_raw(rosen_morse):
    s = solve_eigenvalues(rosen_morse, count=1, n_points=2000)
    exact = analytic_level(rosen_morse, 0)
    assert abs(s.energies[0] - exact) < abs(s.raw_energies[0] - exact) / 10
    raw = solve_eigenvalues(rosen_morse, count=1, n_points=2000, richardson=False)
    assert raw.energies == pytest.approx(s.raw_energies, abs=0)


@pytest.mark.parametrize("family,params,count", [
    ("coulomb", {"V0": 2, "b": 0, "l": 0}, 4),
    ("eckart", {"lambda": 10, "b": 2, "alpha": 1}, 2),
    ("harmonic3d", {"b": 0, "l": 2}, 4),
])
def test_default_grid_accuracy(family, params, count):
    m = make(family, **params)
    s = solve_eigenvalues(m, count=count, n_points=8000)
    exact = [analytic_level(m, K) for K in range(len(s.energies))]
    assert np.max(np.abs(s.energies - exact)) < 1e-5


def test_level_estimate_tracks_levels(sho):
    # the real-axis phase integral is exact for the oscillator
    assert oracle.level_estimate(sho, 3) == pytest.approx(7, abs=1e-4)


def test_agrees_with_dense_tridiagonal_solver(eckart):
    grid = GridSpec(-12, 12, 1500)
    d, e = oracle._matrix(eckart, grid)
    ref = eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, 3))
    ours = oracle._lowest(d, e, 4)
    assert ours == pytest.approx(ref, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(100, 400), st.integers(0, 2**31 - 1))
def test_backends_agree(n, seed):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=n)
    e = rng.normal(size=n - 1)
    e2 = e * e
    for sigma in rng.normal(size=4):
        assert int(sturm_count(d, e2, sigma)[0]) == int(_sturm_py.sturm_count(d, e2, sigma)[0])
    lo, hi = float(np.min(d) - 4), float(np.max(d) + 4)
    a = bisect_eigenvalues(d, e, 0, 5, lo, hi, 1e-15)
    b = _sturm_py.bisect_eigenvalues(d, e, 0, 5, lo, hi, 1e-15)
    assert a == pytest.approx(b, abs=1e-12)
    ref = eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, 4))
    assert a == pytest.approx(ref, abs=1e-10)


def test_backend_name():
    assert BACKEND in ("cython", "python")


def test_quartic_reference_values():
    m = make("user_rational", num=[0, 0, 0, 0, 1])
    s = solve_eigenvalues(m, count=4, n_points=8000)
    assert s.energies == pytest.approx([1.0603620905, 3.7996730298, 7.4556979380, 11.6447455114], abs=1e-6)
