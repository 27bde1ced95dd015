"""Resummed quantization: the k*tau integrand, its contour action, and the level solver.

With ``Q = V - E`` the all-orders integrand is

    f(z) = sqrt(16 Q^3 + V'^2) / (4 Q) = S'_0 * sqrt(1 + T_1^2),   T_1^2 = V'^2 / (16 Q^3),

and a level K satisfies ``(1/2i) oint f dz = (K + 1/2) pi`` on a loop around
both turning points.  The square root in the numerator has three branch
points attached to every turning point, so the loop has to enclose those as
well.  They are located by continuation in a bookkeeping parameter ``eps``
that scales ``V'^2`` from 0 (where they collapse onto the turning point) to 1.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import contour as ct
from .errors import (
    ContourInfeasible,
    KVanishes,
    LevelNotBound,
    NoConvergence,
    NodeTooCloseToTurningPoint,
    WKBError,
)
from .potentials import PotentialModel, TurningPointPair, known_singularities, rational_foreign_roots

log = logging.getLogger(__name__)

TOL_POLE = 1e-12
HOMOTOPY_STEPS = 30
MAX_ITER = 200
METHODS = ("resummed", "bohr_sommerfeld")


def tol_quant(E: float) -> float:
    return 1e-9 * (1 + abs(E))


@dataclass
class QuantizationResult:
    K: int
    E: float
    action_value: float
    residual: float
    method: str
    iterations: int = 0
    contour_diag: dict = field(default_factory=dict)
    status: str = "ok"
    message: str = ""


@dataclass
class WellGeometry:
    """Everything needed to integrate around the well at one energy."""

    E: float
    tp: TurningPointPair
    branch_points: np.ndarray
    inner: np.ndarray
    outer: np.ndarray
    contour: ct.ContourSpec
    # "direct": loop around the turning points only.  "outer": loop also encloses
    # the origin (and mirror images for the radial oscillator); the action is then
    # (A_outer - pi * origin_residue) / multiplicity.
    mode: str = "direct"
    multiplicity: int = 1
    origin_residue: float = 0.0
    # loop around the turning points alone, used for the series terms
    series_contour: ct.ContourSpec | None = None


# pointwise quantities ----------------------------------------------------------


def _derivs(model: PotentialModel, z):
    """V, V', V'' at ``z``."""
    return model.V(z), model.dV(z), model.d2V(z)


def numerator(model: PotentialModel, E: float, z):
    """``16 Q^3 + V'^2``."""
    Q = model.V(z) - E
    return 16 * Q**3 + model.dV(z) ** 2


def integrand_ktau(model: PotentialModel, E: float, z, branch_state=None):
    """Resummed integrand on a path of points ``z``, branch-continued along the path.

    Parameters
    ----------
    branch_state : complex, optional
        Seed for the first point; the sign nearest to it is kept.  Without a
        seed the principal root is used at the first point.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    Q = model.V(z) - E
    if np.any(np.abs(Q) < TOL_POLE * (1 + abs(E))):
        raise NodeTooCloseToTurningPoint("integrand evaluated at a turning point")
    w = ct.track_branch(np.sqrt(16 * Q**3 + model.dV(z) ** 2))
    f = w / (4 * Q)
    if branch_state is not None and abs(f[0] + branch_state) < abs(f[0] - branch_state):
        f = -f
    return f


def transmissivity(model: PotentialModel, E: float, z):
    """Layer transmissivity ``tau^2 = 1 - (d(1/k)/dz / 2)^2`` and reflection ``r``.

    With ``k^2 = E - V`` one has ``d(1/k)/dz = V' / (2 k^3)`` and
    ``r = -(dk/dxi) / (2k) = V' / (4 k^3)`` where ``dxi = k dz``.
    """
    z = np.asarray(z, dtype=complex)
    k = np.sqrt(E - model.V(z))
    if np.any(np.abs(k) < math.sqrt(TOL_POLE) * (1 + math.sqrt(abs(E)))):
        raise KVanishes("wavenumber vanishes (turning point)")
    r = model.dV(z) / (4 * k**3)
    tau_sq = 1 - r**2
    return tau_sq, r


# branch points attached to turning points -----------------------------------------


def _newton_numerator(model, E, z, eps, iters=60):
    """Refine several zeros of ``16 Q^3 + eps^2 V'^2`` at once.

    Aberth's correction deflates every Newton step by the other current
    estimates, so two zeros that approach each other (a collision on the real
    axis near the well bottom) stay distinct instead of merging.
    """
    z = np.array(z, dtype=complex)
    for _ in range(iters):
        try:
            with np.errstate(all="ignore"):
                V, d1, d2 = _derivs(model, z)
        except (ValueError, WKBError):
            return np.full_like(z, np.nan)
        Q = V - E
        F = 16 * Q**3 + eps**2 * d1 * d1
        Fp = 48 * Q * Q * d1 + 2 * eps**2 * d1 * d2
        with np.errstate(all="ignore"):
            w = F / Fp
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, np.inf)
            step = np.where(F == 0, 0, w / (1 - w * np.sum(1 / diff, axis=1)))
        if not np.all(np.isfinite(step)):
            return np.full_like(z, np.nan)
        z -= step
        if np.all(np.abs(step) <= 1e-14 * (1 + np.abs(z))):
            return z
    # accept a stalled iteration only when the residual is already tiny
    with np.errstate(all="ignore"):
        scale = np.abs(16 * Q**3) + np.abs(eps**2 * d1 * d1)
        ok = np.all(np.abs(F) <= 1e-10 * np.maximum(scale, 1e-300))
    return z if ok else np.full_like(z, np.nan)


def attached_branch_points(model: PotentialModel, E: float, turning, steps: int = HOMOTOPY_STEPS):
    """Zeros of ``16 Q^3 + V'^2`` that merge into the given turning points as V'^2 is switched off.

    Returns an array of shape ``(3 * len(turning),)``.
    """
    zt = np.atleast_1d(np.asarray(turning, dtype=complex))
    eps0 = 1e-3
    d1 = model.dV(zt)
    delta = (-(eps0**2) / (16 * d1) + 0j) ** (1 / 3)
    rot = np.exp(2j * np.pi * np.arange(3) / 3)
    z = (zt[:, None] + delta[:, None] * rot[None, :]).ravel()
    owner = zt.repeat(3)
    # march log(eps) from eps0 to 1, halving the step whenever Newton fails or a
    # point jumps (attached points drift like eps^(2/3) from their turning point)
    t, dt = math.log(eps0), -math.log(eps0) / steps
    min_dt = dt / 256
    while t < 0:
        dt = min(dt, -t)
        trial = _newton_numerator(model, E, z, math.exp(t + dt))
        if (np.all(np.isfinite(trial)) and _distinct(trial)
                and np.all(np.abs(trial - z) <= 0.5 * np.abs(z - owner))):
            z, t = trial, t + dt
            dt *= 1.5
            continue
        dt /= 2
        if dt < min_dt:
            raise ContourInfeasible(f"branch-point continuation failed at E={E}")
    return z


def _distinct(z, tol=1e-7):
    d = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(d, np.inf)
    return bool(np.all(d > tol * (1 + np.abs(z)[:, None])))


# geometry -------------------------------------------------------------------------------


def _images(points, period, copies=2):
    ks = [k for k in range(-copies, copies + 1) if k]
    return np.concatenate([points + k * period for k in ks])


def _all_numerator_zeros_rational(model, E):
    P = np.polynomial.polynomial
    p = np.asarray(model.params["num"], float)
    q = np.asarray(model.params["den"], float)
    pe = P.polysub(p, E * q)
    dp = P.polyder(p) if p.size > 1 else np.zeros(1)
    dq = P.polyder(q) if q.size > 1 else np.zeros(1)
    w = P.polysub(P.polymul(dp, q), P.polymul(p, dq))
    poly = P.polyadd(16 * P.polymul(P.polypow(pe, 3), q), P.polymul(w, w))
    return P.polyroots(np.trim_zeros(poly, "b"))


def well_geometry(model: PotentialModel, E: float, previous: WellGeometry | None = None) -> WellGeometry:
    """Turning points, attached branch points and a separating contour at energy E."""
    tp = model.turning_points(E)
    sing = known_singularities(model)
    fam = model.family

    if tp.origin_limit:
        return _origin_geometry(model, E, tp)

    zt = np.array([tp.z_a, tp.z_b], dtype=complex)
    bps = None
    if previous is not None and previous.mode == "direct" and previous.branch_points.size == 6:
        guess = previous.branch_points + (zt - np.array([previous.tp.z_a, previous.tp.z_b])).repeat(3)
        cand = _newton_numerator(model, E, guess, 1.0)
        near = np.abs(cand - zt.repeat(3)) < 0.75 * abs(zt[1] - zt[0])
        if np.all(np.isfinite(cand)) and _distinct(cand) and near.all():
            bps = cand
    if bps is None:
        bps = attached_branch_points(model, E, zt)
    inner = np.concatenate([zt, bps])

    poles = np.asarray(sing.points, dtype=complex)
    if sing.period is not None:
        outer = np.concatenate([poles, _images(inner, sing.period)])
    elif sing.mirror:
        outer = np.concatenate([poles, -inner])
    elif fam == "user_rational":
        foreign = rational_foreign_roots(model, E, tp)
        allz = _all_numerator_zeros_rational(model, E)
        if allz.size:
            d = np.min(np.abs(allz[:, None] - bps[None, :]), axis=1)
            allz = allz[d > 1e-6 * (1 + np.abs(allz))]
        outer = np.concatenate([poles, foreign, allz])
    else:
        outer = poles

    contour = None
    if previous is not None and previous.mode == "direct":
        if ct.still_separates(previous.contour, inner, outer, min_gap=0.2 * min(previous.contour.gap, 1.0)):
            contour = previous.contour
    if contour is None:
        try:
            contour = ct.fit_contour(inner, outer, sing.clearance)
        except ContourInfeasible:
            if model.is_radial:
                return _origin_geometry(model, E, tp, bps)
            raise
    return WellGeometry(E, tp, bps, inner, outer, contour)


def _origin_geometry(model, E, tp, bps=None):
    """Loop enclosing the origin for radial wells.

    Used when the inner turning point has merged with the origin
    (``b + l(l+1) = 0``) or when no ellipse separates the inner cluster from
    the origin.
    """
    c = model.centrifugal
    mirror = model.family == "harmonic3d"
    if c == 0 and model.family == "coulomb":
        V0 = model.params["V0"]
        P = np.polynomial.polynomial
        quartic = P.polyadd(16 * P.polymul([0.0, 1.0], P.polypow([-V0, -E], 3)), [V0 * V0])
        bps = P.polyroots(quartic)
        zt = np.array([tp.z_b], dtype=complex)
    else:
        zt = np.array([tp.z_b] if c == 0 else [tp.z_a, tp.z_b], dtype=complex)
        if mirror:
            zt = np.concatenate([zt, -zt])
        if bps is None or mirror:
            bps = attached_branch_points(model, E, zt)
    inner = np.concatenate([zt, bps, [0.0]])
    outer = np.zeros(0, dtype=complex)
    contour = ct.fit_contour(inner, outer)
    if c == 0:
        # limit of the origin residue of f as b + l(l+1) -> 0+
        rho = 0.5
    else:
        rho = _origin_residue(model, E, np.concatenate([zt, bps]))
    return WellGeometry(E, tp, bps, inner, outer, contour, "outer", 2 if mirror else 1, rho)


def _origin_residue(model, E, features):
    radius = 0.5 * np.min(np.abs(features))
    spec = ct.ContourSpec(0j, radius, radius, nodes=256)
    f = ct.BranchIntegrand(lambda z: numerator(model, E, z), lambda z: 1 / (4 * (model.V(z) - E)))
    res = ct.integrate_closed(f, spec, branch_tracked=True)
    return abs(res.value / (2j * np.pi))


# action -------------------------------------------------------------------------------


def _orient(z, f):
    """Global sign: f is negative real-part at the rightmost node (decaying side)."""
    k = int(np.argmax(z[: f.size].real))
    return -1.0 if f[k].real > 0 else 1.0


def _integrand(model, E, method):
    Q = lambda z: model.V(z) - E  # noqa: E731
    if method == "resummed":
        return ct.BranchIntegrand(lambda z: numerator(model, E, z), lambda z: 1 / (4 * Q(z)), _orient)
    if method == "bohr_sommerfeld":
        return ct.BranchIntegrand(Q, None, _orient)
    raise ValueError(f"unknown method {method!r}")


def normalize_method(method: str) -> str:
    m = method.strip().lower()
    if m in ("bohr", "bs", "bohr_sommerfeld", "bohr-sommerfeld"):
        return "bohr_sommerfeld"
    if m.startswith("dunham"):
        order = m.split(":", 1)[1] if ":" in m else "12"
        return f"dunham:{int(order)}"
    if m == "resummed":
        return m
    raise ValueError(f"unknown method {method!r}")


@dataclass
class ActionValue:
    value: float
    raw: complex
    integral: ct.IntegralResult | None
    geometry: WellGeometry


def action_detail(model: PotentialModel, E: float, method: str = "resummed", previous=None) -> ActionValue:
    method = normalize_method(method)
    geo = well_geometry(model, E, previous)
    if method.startswith("dunham"):
        from .dunham import dunham_action

        raw = dunham_action(model, E, int(method.split(":")[1]), geo)
        return ActionValue(raw.real, raw, None, geo)
    res = ct.integrate_closed(_integrand(model, E, method), geo.contour, branch_tracked=True)
    raw = res.value / 2j
    if geo.mode == "outer":
        rho = geo.origin_residue if method == "resummed" else 0.0
        raw = (raw - np.pi * rho) / geo.multiplicity
    return ActionValue(raw.real, raw, res, geo)


def action(model: PotentialModel, E: float, method: str = "resummed") -> float:
    """``(1/2i) oint`` of the chosen integrand around the well at energy E."""
    return action_detail(model, E, method).value


# level solver ---------------------------------------------------------------------------


class _ActionFunction:
    """Action minus target, caching geometry between nearby energies."""

    def __init__(self, model, method, target):
        self.model, self.method, self.target = model, method, target
        self.last = None
        self.calls = 0

    def detail(self, E):
        self.calls += 1
        prev = self.last.geometry if self.last is not None else None
        if prev is not None and abs(E - prev.E) > 0.25 * (1 + abs(prev.E)):
            prev = None
        self.last = action_detail(self.model, E, self.method, prev)
        return self.last

    def __call__(self, E):
        return self.detail(E).value - self.target


def _probe(fun, E):
    """Action residual at E, or None where the well has no usable geometry."""
    try:
        return fun(E)
    except WKBError as exc:
        log.debug("probe at E=%g failed: %s", E, exc)
        return None


def _threshold_limit(pair, hi):
    """Residual at ``hi`` assuming ``v = v_hi - c sqrt(hi - E)`` through two probes."""
    (e1, v1), (e2, v2) = pair
    s1, s2 = math.sqrt(hi - e1), math.sqrt(hi - e2)
    return v2 + (v2 - v1) / (s1 - s2) * s2


def _bracket(fun, model, K):
    lo, hi = model.energy_range()
    span = hi - lo if math.isfinite(hi) and math.isfinite(lo) else None
    # points approaching the bottom and the top of the well
    if span is not None:
        bottoms = [lo + span * 0.5**j for j in range(2, 40)]
        tops = [hi - span * 0.5**j for j in range(1, 30)]
    elif math.isfinite(lo):  # unbounded above
        scale = max(1.0, abs(lo))
        bottoms = [lo + scale * 0.5**j for j in range(1, 40)]
        tops = [lo + scale * 2.0**j for j in range(0, 60)]
    else:  # unbounded below, top finite (Coulomb without centrifugal term)
        scale = 1.0
        bottoms = [hi - scale * 2.0**j for j in range(0, 60)]
        tops = [hi - scale * 0.5**j for j in range(1, 60)]

    a = fa = None
    for E in bottoms:
        v = _probe(fun, E)
        if v is None:
            continue
        if v == 0:
            return E, E
        if v < 0:
            a, fa = E, v
            break
        # level lies below this point; keep descending toward the bottom
    if a is None:
        raise LevelNotBound(f"level {K}: action never drops below the target near the well bottom")
    prev_E = a
    seen = [(a, fa)]
    failures = 0
    for E in tops:
        if E <= a:
            continue
        v = _probe(fun, E)
        if v is None:
            failures += 1
            if failures >= 3:
                break
            continue
        failures = 0
        if v == 0:
            return E, E
        if v > 0:
            return prev_E, E
        prev_E = E
        seen.append((E, v))
        if span is not None and len(seen) >= 3 and hi - E < 1e-3 * span:
            l1, l2 = _threshold_limit(seen[-3:-1], hi), _threshold_limit(seen[-2:], hi)
            if l2 < 0 and abs(l1 - l2) < 0.01 * abs(l2):
                raise LevelNotBound(f"level {K} is not bound: the action tends to {l2 + fun.target:.6g} "
                                    f"< (K+1/2)pi at the dissociation limit")
    if math.isfinite(hi) and len(seen) >= 2:
        limit = _threshold_limit(seen[-2:], hi)
        if limit >= 0:
            raise NoConvergence(f"level {K}: no geometry closer than E={e2:.6g} to the threshold and the "
                                f"extrapolated action reaches the target there")
    raise LevelNotBound(f"level {K} is not bound: action stays below (K+1/2)pi up to the dissociation limit")


def _bracket_near(fun, guess, model, K):
    lo, hi = model.energy_range()
    width = 0.5 * max(abs(guess), 1e-3 * (1 + abs(guess)))
    a, b = max(guess - width, lo + 1e-12 * (1 + abs(lo)) if math.isfinite(lo) else -math.inf), guess + width
    if math.isfinite(hi):
        b = min(b, hi - 1e-12 * (1 + abs(hi)))
    if not math.isfinite(a):
        a = guess - width
    fa, fb = _probe(fun, a), _probe(fun, b)
    if fa is not None and fb is not None and fa <= 0 <= fb:
        return (a, a) if fa == 0 else (b, b) if fb == 0 else (a, b)
    return _bracket(fun, model, K)


def solve_level(model: PotentialModel, K: int, method: str = "resummed", tol: float | None = None,
                guess: float | None = None) -> QuantizationResult:
    """Energy of level K from ``action(E) = (K + 1/2) pi``.

    The bracket is seeded around ``guess`` (the Bohr-Sommerfeld level when not
    given) and widened toward the ends of the bound range if needed; the root
    is then polished with Brent's method.
    """
    if K < 0:
        raise ValueError("level index must be non-negative")
    method = normalize_method(method)
    target = (K + 0.5) * math.pi
    fun = _ActionFunction(model, method, target)
    if guess is None and method != "bohr_sommerfeld":
        try:
            guess = solve_level(model, K, "bohr_sommerfeld").E
        except WKBError:
            guess = None
    a, b = _bracket_near(fun, guess, model, K) if guess is not None else _bracket(fun, model, K)
    scale = 1 + max(abs(a), abs(b))
    if a == b:
        E, iterations = a, 0
    else:
        try:
            E, info = brentq(fun, a, b, xtol=1e-14 * scale, rtol=4 * np.finfo(float).eps, maxiter=MAX_ITER,
                             full_output=True)
        except RuntimeError as exc:
            raise NoConvergence(str(exc)) from exc
        iterations = info.iterations
    det = fun.detail(E)
    residual = abs(det.value - target)
    if abs(det.raw.imag) > 1e-8 * (1 + abs(det.value)):
        log.warning("level %d: imaginary part %.2e of the action is not negligible", K, det.raw.imag)
    tolq = tol if tol is not None else tol_quant(E)
    if residual > tolq:
        raise NoConvergence(f"level {K}: residual {residual:.2e} above tolerance {tolq:.2e}")
    diag = {
        "nodes": det.integral.node_count_used if det.integral else None,
        "est_error": det.integral.est_error if det.integral else None,
        "closure_defect": det.integral.closure_defect if det.integral else None,
        "imag": float(det.raw.imag),
        "mode": det.geometry.mode,
        "gap": det.geometry.contour.gap,
    }
    return QuantizationResult(K, float(E), float(det.value), float(residual), method, iterations, diag)


def spectrum(model: PotentialModel, K_max: int, method: str = "resummed") -> list[QuantizationResult]:
    """Levels 0..K_max; the first unbound level is reported and ends the list."""
    out = []
    for K in range(K_max + 1):
        try:
            r = solve_level(model, K, method)
        except LevelNotBound as exc:
            out.append(QuantizationResult(K, math.nan, math.nan, math.nan, normalize_method(method),
                                          status="unbound", message=str(exc)))
            break
        except WKBError as exc:
            out.append(QuantizationResult(K, math.nan, math.nan, math.nan, normalize_method(method),
                                          status="error", message=f"{type(exc).__name__}: {exc}"))
            continue
        out.append(r)
    return out
