"""Finite-difference eigenvalue oracle for ``-psi'' + V psi = E psi``.

Second-order central differences with Dirichlet ends give a symmetric
tridiagonal matrix whose lowest eigenvalues are found by Sturm-sequence
bisection.  A second solve on half the points provides a Richardson
estimate of the discretization error.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ._kernels import BACKEND, bisect_eigenvalues, sturm_count
from .errors import GridTooCoarse, InvalidParameters
from .potentials import PotentialModel

log = logging.getLogger(__name__)

DECAY_LENGTHS = 18.0  # integral of sqrt(V - E) beyond each turning point


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    n_points: int
    kind: str = "full-line"

    def __post_init__(self):
        if self.n_points < 100:
            raise InvalidParameters("a grid needs at least 100 points")
        if not self.x_max > self.x_min:
            raise InvalidParameters("grid bounds must satisfy x_min < x_max")
        if self.kind == "half-line" and self.x_min <= 0:
            raise InvalidParameters("half-line grids start at x_min > 0")

    @classmethod
    def radial(cls, R: float, n_points: int) -> "GridSpec":
        return cls(R / n_points, R, n_points, "half-line")

    def nodes(self):
        """Interior nodes and spacing; the wavefunction vanishes one step outside."""
        if self.kind == "half-line":
            h = self.x_max / self.n_points
            return h * np.arange(1, self.n_points + 1), h
        h = (self.x_max - self.x_min) / (self.n_points + 1)
        return self.x_min + h * np.arange(1, self.n_points + 1), h

    def halved(self) -> "GridSpec":
        if self.kind == "half-line":
            return GridSpec.radial(self.x_max, self.n_points // 2)
        # keep the same end points with twice the spacing
        return GridSpec(self.x_min, self.x_max, (self.n_points + 1) // 2 - 1, self.kind)


@dataclass
class OracleSpectrum:
    energies: np.ndarray
    grid: GridSpec
    discretization_estimate: float
    raw_energies: np.ndarray | None = None
    coarse_energies: np.ndarray | None = None
    backend: str = BACKEND


def _matrix(model: PotentialModel, grid: GridSpec):
    x, h = grid.nodes()
    v = np.real(model.V(x.astype(complex)))
    if not np.all(np.isfinite(v)):
        raise InvalidParameters("potential is not finite on the grid")
    d = 2.0 / h**2 + v
    e = np.full(x.size - 1, -1.0 / h**2)
    return d, e


def _lowest(d, e, count):
    e_abs = np.abs(e)
    radius = np.r_[e_abs, 0.0] + np.r_[0.0, e_abs]
    lo, hi = float(np.min(d - radius)), float(np.max(d + radius))
    return bisect_eigenvalues(d, e, 0, count, lo, hi, 1e-15)


def eigenvalues_below(model: PotentialModel, grid: GridSpec, E_max: float) -> int:
    """Number of grid eigenvalues below ``E_max``."""
    d, e = _matrix(model, grid)
    return int(sturm_count(d, e**2, E_max)[0])


def solve_eigenvalues(model: PotentialModel, grid: GridSpec | None = None, count: int = 4,
                      tol: float | None = None, n_points: int = 4000, richardson: bool = True) -> OracleSpectrum:
    """Lowest ``count`` eigenvalues below the continuum on ``grid``.

    Levels above the bound range of the model are dropped.  By default the
    reported energies are Richardson-extrapolated from the ``n`` and ``n/2``
    solves; the raw fine-grid values are kept in ``raw_energies``.  With ``tol`` the
    Richardson estimate is enforced: ``GridTooCoarse`` is raised when it exceeds ``tol``.
    """
    if grid is None:
        grid = default_grid(model, count, n_points)
    hi = model.energy_range()[1]
    d, e = _matrix(model, grid)
    fine = _lowest(d, e, count)
    dc, ec = _matrix(model, grid.halved())
    coarse = _lowest(dc, ec, count)
    keep = fine < hi if math.isfinite(hi) else np.ones(fine.size, bool)
    keep &= coarse < hi if math.isfinite(hi) else True
    fine, coarse = fine[keep], coarse[keep]
    # second-order scheme: E_h = E + C h^2, so E = E_h + (E_h - E_2h) / 3
    extrap = fine + (fine - coarse) / 3.0
    est = float(np.max(np.abs(fine - coarse)) / 3.0) if fine.size else 0.0
    if tol is not None and est > tol:
        raise GridTooCoarse(f"discretization estimate {est:.2e} exceeds {tol:.2e}")
    return OracleSpectrum(extrap if richardson else fine, grid, est, fine, coarse)


def convergence_order(model: PotentialModel, grid: GridSpec, count: int) -> np.ndarray:
    """Observed order ``log2((E_4h - E_2h) / (E_2h - E_h))`` per level (about 2 here)."""
    g2 = grid.halved()
    g4 = g2.halved()
    e1, e2, e4 = (_lowest(*_matrix(model, g), count) for g in (grid, g2, g4))
    return np.log2(np.abs(e4 - e2) / np.abs(e2 - e1))


def _decay_point(model, E, x0, direction, limit):
    """Point beyond ``x0`` where ``int sqrt(V - E) dx`` reaches ``DECAY_LENGTHS``."""
    span = max(1.0, abs(x0))
    for _ in range(60):
        end = x0 + direction * span
        if limit is not None and direction * (end - limit) > 0:
            end = limit
        xs = np.linspace(x0, end, 4001)
        kappa = np.sqrt(np.maximum(np.real(model.V(xs.astype(complex))) - E, 0.0))
        acc = cumulative_trapezoid(kappa, xs) * direction
        hit = np.flatnonzero(acc >= DECAY_LENGTHS)
        if hit.size:
            return float(xs[hit[0] + 1])
        if limit is not None and end == limit:
            return float(limit)
        span *= 2
    return float(end)


def _real_axis_action(model, E):
    """``int sqrt(E - V) dx`` between the turning points (box sizing only)."""
    tp = model.turning_points(E)
    a, b = (0.0, tp.z_b.real) if tp.origin_limit else (tp.z_a.real, tp.z_b.real)
    # x = mid + half sin(theta) on open midpoints removes the endpoint behaviour
    theta = -np.pi / 2 + np.pi * (np.arange(800) + 0.5) / 800
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    x = mid + half * np.sin(theta)
    k = np.sqrt(np.maximum(E - np.real(model.V(x.astype(complex))), 0.0))
    return float(np.sum(k * half * np.cos(theta)) * np.pi / 800)


def level_estimate(model: PotentialModel, K: int) -> float:
    """Rough energy of level K from the real-axis phase integral; capped below the continuum."""
    lo, hi = model.energy_range()
    target = (K + 0.5) * np.pi
    a = lo + 1e-9 * (1 + abs(lo)) if math.isfinite(lo) else None
    b = hi - 1e-6 * (1 + abs(hi)) if math.isfinite(hi) else None
    if a is None:
        a = hi - 1.0
        while _real_axis_action(model, a) > target:
            a = hi - 2 * (hi - a)
    if b is None:
        b = a + 1.0
        while _real_axis_action(model, b) < target:
            b = a + 2 * (b - a)
    if _real_axis_action(model, b) < target:
        return b
    for _ in range(100):
        m = 0.5 * (a + b)
        if _real_axis_action(model, m) < target:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def default_grid(model: PotentialModel, count: int, n_points: int = 4000) -> GridSpec:
    """Box reaching ``DECAY_LENGTHS`` into the forbidden region of the highest requested level."""
    E = level_estimate(model, count - 1)
    lo, hi = model.energy_range()
    if math.isfinite(hi):
        # shallow levels just below the continuum: do not chase the tail to infinity
        span = hi - lo if math.isfinite(lo) else max(1.0, abs(hi))
        E = min(E + 0.02 * span, hi - 0.02 * span)
    return _grid_for_energy(model, E, n_points)


def _grid_for_energy(model, E, n_points):
    tp = model.turning_points(E)
    za, zb = tp.z_a.real, tp.z_b.real
    right = _decay_point(model, E, zb, +1, None)
    if model.domain_kind == "half-line":
        return GridSpec.radial(right, n_points)
    left = _decay_point(model, E, za, -1, None)
    return GridSpec(left, right, n_points)


def compare_spectra(a, b, tol: float) -> dict:
    """Per-level differences of two spectra over their common length."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m = min(a.size, b.size)
    diff = np.abs(a[:m] - b[:m])
    rel = diff / np.maximum(np.abs(b[:m]), 1e-300)
    return {
        "count": int(m),
        "abs_diff": diff.tolist(),
        "rel_diff": rel.tolist(),
        "max_abs_diff": float(diff.max()) if m else 0.0,
        "passed": bool(np.all(diff < tol)),
        "tol": float(tol),
    }
