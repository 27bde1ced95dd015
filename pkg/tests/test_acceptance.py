"""Acceptance criteria, one check per criterion at its stated tolerance.

Each check returns ``(passed, detail)``.  Under pytest every criterion is a
parametrized test and a PASS/FAIL line per criterion is printed in the
terminal summary; ``python tests/test_acceptance.py`` prints the same lines.
"""
import math
import time
import warnings

import numpy as np
import pytest

from wkbresum import dunham, oracle, resummed
from wkbresum.cli import _suite_exact_derivative, RunConfig
from wkbresum.errors import LevelNotBound
from wkbresum.potentials import analytic_level, analytic_relation_residual, make

try:
    from .conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = {}


def _levels(model, Ks):
    return [resummed.solve_level(model, K).E for K in Ks]


def sho_exactness():
    m = make("sho")
    t = time.perf_counter()
    E = _levels(m, range(6))
    dt = time.perf_counter() - t
    err = max(abs(e - 2 * (K + 0.5)) for K, e in enumerate(E))
    return err < 1e-8 and dt < 1.0, f"max |dE| {err:.1e}, {dt:.2f} s for K=0..5"


def harmonic3d():
    worst = 0.0
    for b in (0, 1, 2):
        for l in (0, 1, 2):
            m = make("harmonic3d", b=b, l=l)
            for K, e in enumerate(_levels(m, range(4))):
                exact = 2 * (2 * K + 1 + math.sqrt((l + 0.5) ** 2 + b))
                worst = max(worst, abs(e - exact))
    return worst < 1e-7, f"max |dE| {worst:.1e} over b,l in {{0,1,2}}, K=0..3"


def coulomb():
    worst = 0.0
    for b in (0, 1):
        for l in (0, 1):
            m = make("coulomb", V0=2, b=b, l=l)
            for K, e in enumerate(_levels(m, range(4))):
                exact = -1.0 / (K + 0.5 + math.sqrt(b + (l + 0.5) ** 2)) ** 2
                worst = max(worst, abs(e - exact) / abs(exact))
    return worst < 1e-7, f"max relative error {worst:.1e} over b,l in {{0,1}}, K=0..3"


def _relation_levels(model):
    """Residuals of every bound level, stopping at the first unbound one."""
    res, K = [], 0
    while True:
        try:
            E = resummed.solve_level(model, K).E
        except LevelNotBound:
            return res, K
        res.append(abs(analytic_relation_residual(model, E, K)))
        K += 1


def eckart():
    m = make("eckart", **{"lambda": 10, "b": 2, "alpha": 1})
    res, n = _relation_levels(m)
    ok = n > 0 and max(res) < 1e-7 and analytic_level(m, n) is None
    return ok, f"{n} bound levels, max relation residual {max(res):.1e}"


def morse():
    m = make("morse", A=1, B=4, alpha=1)
    E = _levels(m, range(2))
    err = max(abs(E[0] + 2.25), abs(E[1] + 0.25))
    try:
        resummed.solve_level(m, 2)
        unbound = False
    except LevelNotBound:
        unbound = True
    return err < 1e-8 and unbound, f"max |dE| {err:.1e}, level 2 {'unbound' if unbound else 'returned a value'}"


def rosen_morse():
    m = make("rosen_morse", U0=4, U1=1, a=1)
    parts, ok = [], True
    for K in range(3):
        try:
            E = resummed.solve_level(m, K).E
        except LevelNotBound:
            # consistent with the closed form, but the criterion asks for a residual here
            ok = False
            closed = "no root below the continuum" if analytic_level(m, K) is None else "closed form has a root"
            parts.append(f"K={K} unbound ({closed})")
            continue
        r = abs(analytic_relation_residual(m, E, K))
        ok &= r < 1e-7
        parts.append(f"K={K} residual {r:.1e}")
    return ok, "; ".join(parts)


MID_WELL = [("sho", {}), ("morse", {"A": 1, "B": 4, "alpha": 1}), ("rosen_morse", {"U0": 4, "U1": 1, "a": 1})]


def maslov():
    worst = 0.0
    for f, p in MID_WELL:
        m = make(f, **p)
        I1 = dunham.dunham_term_integral(m, dunham.mid_well_energy(m), 1)
        worst = max(worst, abs(I1 + math.pi / 2))
    return worst < 1e-8, f"max |I_1 + pi/2| {worst:.1e}"


def odd_orders():
    worst = 0.0
    for f, p in MID_WELL:
        m = make(f, **p)
        I = dict(dunham.partial_sum_table(m, dunham.mid_well_energy(m), 6, with_resummed=False).orders)
        worst = max(worst, max(abs(I[n]) / (1 + abs(I[0])) for n in (3, 5)))
    return worst < 1e-6, f"max |I_n| / (1 + |I_0|) for n=3,5: {worst:.1e}"


def hypothesis_check():
    worst = {n: 0.0 for n in range(1, 5)}
    for f, p in (MID_WELL[0], MID_WELL[2]):
        m = make(f, **p)
        E = dunham.mid_well_energy(m)
        for n in worst:
            r = dunham.hypothesis_residual(m, E, n)
            worst[n] = max(worst[n], r.defect / (1 + abs(r.lhs)))
    ok = all(worst[n] < 1e-6 for n in (1, 2, 3)) and worst[4] < 1e-5
    return ok, "relative defects " + ", ".join(f"n={n}: {v:.1e}" for n, v in worst.items())


def exact_derivative():
    recs = _suite_exact_derivative(RunConfig(subcommand="verify", suite="exact_derivative"))
    ratio = max(r["defect"] / (r["tol"] / 1e-10) for r in recs)
    return len(recs) == 50 and all(r["passed"] for r in recs), f"50 pairs, max |oint| / scale {ratio:.1e}"


ORACLE_CASES = (
    [("sho", {}, 6)]
    + [("harmonic3d", {"b": b, "l": l}, 4) for b in (0, 1, 2) for l in (0, 1, 2)]
    + [("coulomb", {"V0": 2, "b": b, "l": l}, 4) for b in (0, 1) for l in (0, 1)]
    + [("eckart", {"lambda": 10, "b": 2, "alpha": 1}, 3), ("morse", {"A": 1, "B": 4, "alpha": 1}, 3),
       ("rosen_morse", {"U0": 4, "U1": 1, "a": 1}, 3)]
)


def oracle_cross_validation():
    t = time.perf_counter()
    worst, orders = 0.0, []
    for f, p, count in ORACLE_CASES:
        m = make(f, **p)
        s = oracle.solve_eigenvalues(m, count=count, n_points=8000)
        exact = [analytic_level(m, K) for K in range(len(s.energies))]
        worst = max(worst, float(np.max(np.abs(s.energies - exact))))
        orders.append(float(oracle.convergence_order(m, s.grid, 1)[0]))
    dt = time.perf_counter() - t
    ok = worst < 1e-4 and dt < 30 and all(abs(o - 2) < 0.2 for o in orders)
    return ok, f"max |dE| {worst:.1e}, observed order {min(orders):.2f}..{max(orders):.2f}, {dt:.1f} s"


def dunham_partial_sums():
    sums = [v.real for _, v in dunham.partial_sum_table(make("sho"), 3.0, 8, with_resummed=False).partial_sums]
    drift = float(np.ptp(sums))
    rm = make("rosen_morse", U0=4, U1=1, a=1)
    t = dunham.partial_sum_table(rm, -2.0, 4)
    ps = dict(t.partial_sums)
    g0, g4 = abs(ps[0].real - t.resummed_action), abs(ps[4].real - t.resummed_action)
    return drift < 1e-8 and g4 < g0, f"sho drift {drift:.1e}; rosen_morse gap order 0 {g0:.1e} -> order 4 {g4:.1e}"


QUARTIC_TABLE = []


def quartic_exploration():
    m = make("user_rational", num=[0, 0, 0, 0, 1])
    ref = oracle.solve_eigenvalues(m, count=4, n_points=8000).energies
    QUARTIC_TABLE.clear()
    for K in range(4):
        E = resummed.solve_level(m, K).E
        QUARTIC_TABLE.append((K, E, float(ref[K]), E - float(ref[K])))
    rows = "; ".join(f"K={K} resummed {e:.6f} oracle {o:.6f} diff {d:+.1e}" for K, e, o, d in QUARTIC_TABLE)
    return True, f"exploratory, not asserted: {rows}"


CRITERIA = [
    (1, "SHO exactness", sho_exactness),
    (2, "3-D harmonic oscillator", harmonic3d),
    (3, "Coulomb", coulomb),
    (4, "Eckart", eckart),
    (5, "Morse", morse),
    (6, "Rosen-Morse", rosen_morse),
    (7, "Maslov term", maslov),
    (8, "odd-order vanishing", odd_orders),
    (9, "hypothesis check", hypothesis_check),
    (10, "exact-derivative property", exact_derivative),
    (11, "oracle cross-validation", oracle_cross_validation),
    (12, "partial-sum behaviour", dunham_partial_sums),
    (13, "quartic exploration", quartic_exploration),
]


def evaluate(number, title, check):
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        passed, detail = check()
    line = f"[{'PASS' if passed else 'FAIL'}] {number:2d} {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed, line


@pytest.mark.parametrize("number,title,check", CRITERIA, ids=[f"{n:02d}-{t.replace(' ', '_')}" for n, t, _ in CRITERIA])
def test_criterion(number, title, check):
    passed, line = evaluate(number, title, check)
    assert passed, line


if __name__ == "__main__":
    results = [evaluate(*c)[0] for c in CRITERIA]
    raise SystemExit(0 if all(results) else 1)
