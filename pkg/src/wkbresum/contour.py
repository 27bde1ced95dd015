"""Closed elliptic contours and spectrally accurate loop integrals.

Contours are ellipses ``z(t) = c + exp(i theta) (a cos t + i b sin t)``
traversed anticlockwise.  The periodic trapezoidal rule on ``t`` converges
geometrically for analytic integrands, with a rate set by the elliptic
distance from the contour to the nearest singularity on either side.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .errors import BranchInconsistency, ContourInfeasible, OnContour, QuadratureNoConverge

log = logging.getLogger(__name__)

TOL_QUAD = 1e-10
TOL_CLOSURE = 1e-8
NODES_START = 64
NODES_CAP = 65536
ASPECT_DEFAULT = 0.5


@dataclass(frozen=True)
class ContourSpec:
    center: complex
    semi_major: float
    semi_minor: float
    rotation: float = 0.0
    nodes: int = NODES_START
    kind: str = "ellipse"
    # elliptic-radius gap between enclosed and excluded points (nan if unknown)
    gap: float = float("nan")

    def __post_init__(self):
        if not (self.semi_major > 0 and self.semi_minor > 0):
            raise ContourInfeasible("ellipse axes must be positive")
        if self.nodes < 4 or self.nodes & (self.nodes - 1):
            raise ValueError("node count must be a power of two")

    def points(self, n: int | None = None, closed: bool = False):
        """Nodes ``z_j`` and trapezoid weights ``dz_j`` (including ``2 pi / n``)."""
        n = self.nodes if n is None else n
        t = 2 * np.pi * np.arange(n + int(closed)) / n
        rot = np.exp(1j * self.rotation)
        z = self.center + rot * (self.semi_major * np.cos(t) + 1j * self.semi_minor * np.sin(t))
        dz = rot * (-self.semi_major * np.sin(t) + 1j * self.semi_minor * np.cos(t)) * (2 * np.pi / n)
        return z, dz

    def contains(self, p) -> np.ndarray:
        """Exact interior test (used to cross-check the winding number)."""
        w = (np.asarray(p, dtype=complex) - self.center) * np.exp(-1j * self.rotation)
        return (w.real / self.semi_major) ** 2 + (w.imag / self.semi_minor) ** 2 < 1.0


@dataclass
class IntegralResult:
    value: complex
    node_count_used: int
    closure_defect: float
    est_error: float
    history: list = field(default_factory=list)


# geometry -------------------------------------------------------------------


def winding_number(contour: ContourSpec, point, tol: float = 1e-12) -> int:
    """Winding number by accumulating ``arg(z(t) - point)`` around the loop."""
    point = complex(point)
    scale = contour.semi_major
    # the nearest node distance bounds the true distance from above; refine until
    # successive nodes subtend less than a quarter turn
    n = 1024
    while True:
        z, _ = contour.points(n, closed=True)
        d = z - point
        dist = np.min(np.abs(d))
        if dist < tol * (1 + scale):
            raise OnContour(f"point {point} lies on the contour")
        steps = np.angle(d[1:] / d[:-1])
        if np.max(np.abs(steps)) < np.pi / 2 or n >= 1 << 22:
            return int(round(np.sum(steps) / (2 * np.pi)))
        n *= 4


def build_contour(tp, exclusions=(), margin: float = 0.5, clearance: float = math.inf,
                  aspect: float = ASPECT_DEFAULT, nodes: int = NODES_START) -> ContourSpec:
    """Ellipse on the turning-point segment with fixed relative margin.

    The semi-major axis is ``(1 + margin) |z_b - z_a| / 2`` and the semi-minor
    axis ``aspect`` times that, capped at ``0.9 * clearance``.
    """
    if not 0 < margin < 1:
        raise ValueError("margin must lie in (0, 1)")
    za, zb = complex(tp.z_a), complex(tp.z_b)
    half = abs(zb - za) / 2
    if half == 0:
        raise ContourInfeasible("turning points coincide")
    a = (1 + margin) * half
    b = min(aspect * a, 0.9 * clearance)
    spec = ContourSpec((za + zb) / 2, a, b, float(np.angle(zb - za)), nodes)
    for z in (za, zb):
        if winding_number(spec, z) != 1:
            raise ContourInfeasible(f"turning point {z} not enclosed")
    for s in exclusions:
        if winding_number(spec, s) != 0:
            raise ContourInfeasible(f"excluded singularity {s} is enclosed")
    return spec


def elliptic_radius(z, center, focal):
    """Confocal elliptic radius ``mu`` of ``z`` for foci ``center +- focal`` (real axis)."""
    w = (np.asarray(z, dtype=complex) - center) / focal
    return np.arccosh(np.maximum((np.abs(w - 1) + np.abs(w + 1)) / 2, 1.0))


def fit_contour(inner, outer=(), clearance: float = math.inf, nodes: int = NODES_START) -> ContourSpec:
    """Ellipse with foci on the real axis separating ``inner`` from ``outer`` points.

    Maximizes the gap between the largest elliptic radius of the enclosed
    points and the smallest one of the excluded points, then places the
    contour halfway.  With nothing to exclude the contour sits one unit of
    elliptic radius outside the enclosed set.
    """
    inner = np.asarray(inner, dtype=complex)
    outer = np.asarray(outer, dtype=complex)
    lo, hi = inner.real.min(), inner.real.max()
    mid, half = 0.5 * (lo + hi), max(0.5 * (hi - lo), 1e-3 * (1 + abs(lo) + abs(hi)))
    bounded = outer.size > 0 or math.isfinite(clearance)

    def radii(p):
        c, f = p[0], math.exp(p[1])
        mi = elliptic_radius(inner, c, f).max()
        mo = elliptic_radius(outer, c, f).min() if outer.size else math.inf
        if math.isfinite(clearance):
            mo = min(mo, math.asinh(0.9 * clearance / f))
        return mi, mo

    def cost(p):
        if abs(p[1] - math.log(half)) > 30:
            return math.inf
        mi, mo = radii(p)
        return mi if not bounded else -(mo - mi)

    if bounded:
        best = None
        for c0 in (mid, mid - 0.3 * half, mid + 0.3 * half):
            r = minimize(cost, [c0, math.log(half)], method="Nelder-Mead",
                         options={"xatol": 1e-6, "fatol": 1e-9, "maxiter": 400})
            if best is None or r.fun < best.fun:
                best = r
            if best.fun < -0.5:
                break
        p = best.x
    else:
        # no exterior obstruction: centre on the set and use the spread as focal length
        p = np.array([mid, math.log(half)])
    mi, mo = radii(p)
    if bounded and not mo > mi:
        blocking = outer[np.argmin(elliptic_radius(outer, p[0], math.exp(p[1])))] if outer.size else None
        raise ContourInfeasible(f"no ellipse separates the enclosed points from {blocking}")
    mu = 0.5 * (mi + mo) if bounded else mi + 1.0
    f = math.exp(p[1])
    gap = (mo - mi) if bounded else math.inf
    return ContourSpec(complex(p[0]), f * math.cosh(mu), f * math.sinh(mu), 0.0, nodes, gap=gap)


def still_separates(contour: ContourSpec, inner, outer=(), min_gap: float = 0.05) -> bool:
    """True when ``contour`` keeps ``inner`` inside and ``outer`` outside with room to spare."""
    if contour.rotation != 0.0:
        return False
    f = math.sqrt(contour.semi_major**2 - contour.semi_minor**2)
    if f == 0:
        return False
    mu = math.atanh(contour.semi_minor / contour.semi_major)
    c = contour.center.real
    if elliptic_radius(inner, c, f).max() > mu - min_gap:
        return False
    outer = np.asarray(outer, dtype=complex)
    return not (outer.size and elliptic_radius(outer, c, f).min() < mu + min_gap)


# branch tracking ----------------------------------------------------------------


def track_branch(values) -> np.ndarray:
    """Flip signs of a two-valued sequence so consecutive entries stay continuous.

    ``values`` holds one representative of ``+-w`` per node; each node keeps
    the sign nearest to its predecessor.
    """
    p = np.asarray(values, dtype=complex)
    flip = np.abs(p[1:] + p[:-1]) < np.abs(p[1:] - p[:-1])
    sign = np.concatenate([[1.0], np.cumprod(np.where(flip, -1.0, 1.0))])
    return p * sign


class BranchIntegrand:
    """Integrand of the form ``pre(z) * w(z)`` where ``w`` is a square root.

    Parameters
    ----------
    radicand : callable
        ``z -> R(z)``; the integrand uses a continuous branch of ``sqrt(R)``.
    prefactor : callable, optional
        Single-valued factor multiplying the root.
    orient : callable, optional
        ``(z, f) -> +-1`` fixing the global sign after tracking.
    """

    def __init__(self, radicand, prefactor=None, orient=None):
        self.radicand = radicand
        self.prefactor = prefactor
        self.orient = orient

    def tracked_root(self, z):
        return track_branch(np.sqrt(self.radicand(z)))

    def __call__(self, z):
        w = self.tracked_root(z)
        f = w if self.prefactor is None else w * self.prefactor(z[: w.size])
        if self.orient is not None:
            f = f * self.orient(z, f)
        return f


def _closure(vals_closed):
    v0, vend = vals_closed[0], vals_closed[-1]
    return float(abs(vend - v0) / max(abs(v0), 1e-300))


def integrate_closed(f, contour: ContourSpec, branch_tracked: bool = False, tol: float = TOL_QUAD,
                     nodes_cap: int = NODES_CAP, tol_closure: float = TOL_CLOSURE) -> IntegralResult:
    """``oint f(z) dz`` by the periodic trapezoid rule with node doubling.

    When ``branch_tracked`` is set, ``f`` is evaluated on the closed node set
    (first node repeated at the end) so the loop closure can be certified.
    """
    n = contour.nodes
    prev = None
    history = []
    closure = 0.0
    while True:
        z, dz = contour.points(n, closed=branch_tracked)
        vals = np.asarray(f(z), dtype=complex)
        if branch_tracked:
            closure = _closure(vals)
            vals, z, dz = vals[:-1], z[:-1], dz[:-1]
        if not np.all(np.isfinite(vals)):
            raise QuadratureNoConverge(f"integrand not finite on the contour (n={n})")
        val = complex(np.sum(vals * dz))
        history.append((n, val))
        if prev is not None:
            err = abs(val - prev)
            if err < tol * (1 + abs(val)):
                break
        if n >= nodes_cap:
            err = abs(val - prev) if prev is not None else math.inf
            raise QuadratureNoConverge(f"no convergence at {n} nodes (last change {err:.2e})")
        prev = val
        n *= 2
    if branch_tracked and closure > tol_closure:
        raise BranchInconsistency(f"branch closure defect {closure:.2e} exceeds {tol_closure:g}")
    log.debug("contour integral converged with %d nodes, change %.2e", n, err)
    return IntegralResult(val, n, closure, err, history)


def exact_derivative_product_check(f_coeffs, g_coeffs, contour: ContourSpec) -> float:
    """``|oint f'(z) g'(z) dz|`` for polynomials given by ascending coefficients.

    The trapezoid rule on an ellipse is exact for a polynomial integrand once
    the node count exceeds its degree plus one, so no refinement is needed and
    the result is zero up to roundoff of order ``eps * sum |f' g' dz|``.
    """
    P = np.polynomial.Polynomial
    prod = P(f_coeffs).deriv() * P(g_coeffs).deriv()
    n = max(contour.nodes, 1 << int(np.ceil(np.log2(prod.degree() + 3))))
    z, dz = contour.points(n)
    return float(abs(np.sum(prod(z) * dz)))


def with_nodes(contour: ContourSpec, nodes: int) -> ContourSpec:
    return replace(contour, nodes=nodes)
