"""Order-by-order WKB terms and their loop integrals.

The exponent derivatives obey the Riccati recurrence

    S'_0 = sqrt(Q),   S'_1 = -(1/2) (ln S'_0)',
    2 S'_0 S'_n + sum_{j=1}^{n-1} S'_j S'_{n-j} + S''_{n-1} = 0,

which is run in jet arithmetic at every contour node so that the
derivatives ``S''_{n-1}`` come out exactly.  ``I_n = (1/2i) oint S'_n dz``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import contour as ct
from .errors import ContourInfeasible, QuadratureNoConverge
from .jets import Jet, jet_derivative, jet_sqrt
from .potentials import PotentialModel, known_singularities

log = logging.getLogger(__name__)

MAX_ORDER_DEFAULT = 12
TOL_SERIES = 1e-10


@dataclass
class SeriesTable:
    E: float
    orders: list  # (n, I_n)
    partial_sums: list  # (n, sum of I_k over even k <= n)
    max_order: int
    resummed_action: float | None = None
    nodes: int = 0
    est_errors: list = field(default_factory=list)


@dataclass
class HypothesisReport:
    n: int
    lhs: complex
    rhs: complex
    defect: float
    coefficient: float = 0.0


def binomial_coefficient_c(n: int) -> float:
    """``c_n = Gamma(n - 1/2) / (Gamma(-1/2) Gamma(n + 1))`` via its ratio recurrence."""
    if n < 1:
        raise ValueError("n must be >= 1")
    c = -0.5
    for k in range(1, n):
        c *= (k - 0.5) / (k + 1)
    return c


def _sqrt_q_jet(model, E, z, order, seed):
    q = model.V_jet(z, order) - E
    return jet_sqrt(q, seed)


def _series_jets(s0: Jet, max_n: int):
    """Jets of S'_0..S'_max_n from the S'_0 jet (orders shrink by one per step)."""
    out = [s0]
    d0 = jet_derivative(s0)
    s1 = d0 / s0.truncate(d0.order) * (-0.5)
    out.append(s1)
    for n in range(2, max_n + 1):
        prev = jet_derivative(out[n - 1])
        m = prev.order
        acc = prev
        for j in range(1, n):
            acc = acc + out[j].truncate(m) * out[n - j].truncate(m)
        out.append(acc / (out[0].truncate(m) * -2.0))
    return out


def _oriented_root(model, E, z):
    """Continuous branch of sqrt(Q) along the loop, negative real part at the rightmost node."""
    w = ct.track_branch(np.sqrt(model.V(z) - E))
    k = int(np.argmax(z.real))
    return -w if w[k].real > 0 else w


def s_prime_values(model: PotentialModel, E: float, z, max_n: int, seed=None, order: int | None = None):
    """Values ``S'_0(z) .. S'_max_n(z)``, shape ``(max_n + 1, *z.shape)``.

    The branch of ``sqrt(Q)`` follows ``seed`` when given (nearest root at
    every point) and is otherwise continued along the sequence of points.
    """
    z = np.asarray(z, dtype=complex)
    order = max_n + 2 if order is None else order
    if order < max_n:
        from .errors import OrderUnderflow

        raise OrderUnderflow(f"jet order {order} too small for S'_{max_n}")
    flat = z.ravel()
    if seed is None:
        seed = ct.track_branch(np.sqrt(model.V(flat) - E))
    else:
        seed = np.broadcast_to(np.asarray(seed, dtype=complex), z.shape).ravel()
    s0 = _sqrt_q_jet(model, E, flat, order, seed)
    vals = np.array([j.value for j in _series_jets(s0, max_n)])
    return vals.reshape((max_n + 1,) + z.shape)


def riccati_residual(model: PotentialModel, E: float, z, max_n: int) -> float:
    """Largest relative defect of the recurrence over points and orders 2..max_n."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    s0 = _sqrt_q_jet(model, E, z, max_n + 2, ct.track_branch(np.sqrt(model.V(z) - E)))
    js = _series_jets(s0, max_n)
    worst = 0.0
    for n in range(2, max_n + 1):
        terms = [2 * js[0].value * js[n].value, jet_derivative(js[n - 1]).value]
        terms += [js[j].value * js[n - j].value for j in range(1, n)]
        total = np.abs(sum(terms))
        scale = np.max(np.abs(np.array(terms)), axis=0)
        worst = max(worst, float(np.max(total / scale)))
    return worst


def _geometry(model, E, geometry=None):
    from .resummed import well_geometry

    geo = geometry if geometry is not None else well_geometry(model, E)
    if geo.mode != "direct":
        raise ContourInfeasible("series terms need a loop that excludes the origin")
    # the series terms are singular only at the turning points, so the loop can
    # stay further from them than the resummed one (which must enclose branch points)
    if geo.series_contour is None:
        zt = np.array([geo.tp.z_a, geo.tp.z_b])
        sing = known_singularities(model)
        try:
            geo.series_contour = ct.fit_contour(zt, geo.outer, sing.clearance)
        except ContourInfeasible:
            geo.series_contour = geo.contour
    return geo


def _loop_integrals(model, E, contour, max_n, extra=None, tol=TOL_SERIES):
    """``(1/2i) oint`` of every S'_n (and optional extra integrands) with node doubling."""
    n_nodes = contour.nodes
    prev = None
    while True:
        z, dz = contour.points(n_nodes)
        seed = _oriented_root(model, E, z)
        s0 = _sqrt_q_jet(model, E, z, max_n + 2, seed)
        js = _series_jets(s0, max_n)
        integrands = [j.value for j in js]
        if extra is not None:
            integrands += extra(js)
        vals = np.array([np.sum(f * dz) / 2j for f in integrands])
        # floor set by cancellation among large node values
        noise = np.array([1e3 * np.finfo(float).eps * np.sum(np.abs(f * dz)) for f in integrands])
        if prev is not None:
            err = np.abs(vals - prev)
            if np.all(err < np.maximum(tol * (1 + np.abs(vals)), noise)):
                return vals, n_nodes, err
        if n_nodes >= ct.NODES_CAP:
            raise QuadratureNoConverge(f"series integrals not converged at {n_nodes} nodes")
        prev = vals
        n_nodes *= 2


def dunham_term_integral(model: PotentialModel, E: float, n: int, geometry=None) -> complex:
    """``I_n = (1/2i) oint S'_n dz`` around the well."""
    if n < 0 or n > 2 * MAX_ORDER_DEFAULT:
        raise ValueError(f"order {n} outside the supported range")
    geo = _geometry(model, E, geometry)
    vals, _, _ = _loop_integrals(model, E, geo.series_contour, max(n, 1))
    return complex(vals[n])


def dunham_action(model: PotentialModel, E: float, max_order: int, geometry=None) -> complex:
    """Sum of the even-order integrals up to ``max_order`` (odd orders moved to the right-hand side)."""
    geo = _geometry(model, E, geometry)
    vals, _, _ = _loop_integrals(model, E, geo.series_contour, max(max_order, 1))
    return complex(np.sum(vals[: max_order + 1 : 2]))


def partial_sum_table(model: PotentialModel, E: float, max_order: int = MAX_ORDER_DEFAULT,
                      with_resummed: bool = True) -> SeriesTable:
    if max_order < 2 or max_order % 2:
        raise ValueError("max_order must be even and at least 2")
    geo = _geometry(model, E)
    vals, nodes, err = _loop_integrals(model, E, geo.series_contour, max_order)
    orders = [(n, complex(v)) for n, v in enumerate(vals)]
    partial, acc = [], 0.0
    for n in range(0, max_order + 1, 2):
        acc = acc + vals[n]
        partial.append((n, complex(acc)))
    resummed = None
    if with_resummed:
        from .resummed import action_detail

        resummed = action_detail(model, E, "resummed").value
    return SeriesTable(float(E), orders, partial, max_order, resummed, nodes, [float(e) for e in err])


def hypothesis_residual(model: PotentialModel, E: float, n: int, geometry=None) -> HypothesisReport:
    """Compare ``oint S'_0 T_{2n}`` with ``oint S'_0 c_n (T_1/i)^{2n}``, ``T_1 = L'/2``, ``L = 1/S'_0``."""
    if not 1 <= n <= 4:
        raise ValueError("hypothesis check supports n = 1..4")
    geo = _geometry(model, E, geometry)
    c = binomial_coefficient_c(n)

    def extra(js):
        s0 = js[0]
        L = 1.0 / s0
        t1 = jet_derivative(L).value / 2
        return [s0.value * c * (-1) ** n * t1 ** (2 * n)]

    vals, _, _ = _loop_integrals(model, E, geo.series_contour, 2 * n, extra)
    lhs, rhs = complex(vals[2 * n]), complex(vals[-1])
    return HypothesisReport(n, lhs, rhs, abs(lhs - rhs), c)


def binomial_partial_sum(x, N: int):
    """``1 + sum_{n<=N} c_n (-1)^n x^{2n}``; tends to ``sqrt(1 + x^2)`` for ``|x| < 1``."""
    x = np.asarray(x, dtype=complex)
    total = np.ones_like(x)
    for n in range(1, N + 1):
        total = total + binomial_coefficient_c(n) * (-1) ** n * x ** (2 * n)
    return total


def mid_well_energy(model: PotentialModel) -> float:
    """Energy halfway up the well (or at 2x the bottom scale when unbounded)."""
    lo, hi = model.energy_range()
    if math.isfinite(lo) and math.isfinite(hi):
        return 0.5 * (lo + hi)
    if math.isfinite(lo):
        return lo + max(1.0, abs(lo)) * 2
    return hi - 1.0
