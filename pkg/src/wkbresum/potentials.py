"""Potential families, their analytic continuation, and turning points.

Units follow hbar^2 = 2m = 1, so the wave equation reads
``psi'' = (V - E) psi`` and ``Q = V - E``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from . import jets
from .errors import (
    DegenerateTurningPoints,
    InvalidParameters,
    NoBoundTurningPoints,
    SingularEvaluation,
)
from .jets import Jet

FAMILIES = ("sho", "harmonic3d", "coulomb", "eckart", "morse", "rosen_morse", "user_rational")

_PARAMS = {
    "sho": (),
    "harmonic3d": ("b", "l"),
    "coulomb": ("V0", "b", "l"),
    "eckart": ("lambda", "b", "alpha"),
    "morse": ("A", "B", "alpha"),
    "rosen_morse": ("U0", "U1", "a"),
    "user_rational": ("num", "den"),
}
_DEFAULTS = {
    "harmonic3d": {"b": 0.0, "l": 0.0},
    "coulomb": {"b": 0.0, "l": 0.0},
    "user_rational": {"den": (1.0,)},
}
_ALIASES = {"λ": "lambda", "lam": "lambda", "α": "alpha"}

TOL_MERGE = 1e-8
TOL_SING = 1e-10


@dataclass(frozen=True)
class TurningPointPair:
    z_a: complex
    z_b: complex
    residual: float
    # radial wells with b + l(l+1) = 0: the inner turning point sits on the origin pole
    origin_limit: bool = False


@dataclass(frozen=True)
class Singularities:
    """Points a contour must not enclose, plus the safe imaginary clearance."""

    points: tuple
    clearance: float
    # shift between equivalent sheets of the physical variable (exp families)
    period: complex | None = None
    # radial oscillator: features mirrored through r = 0 lie outside the contour
    mirror: bool = False


@dataclass(frozen=True)
class PotentialModel:
    family: str
    params: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))
    domain_kind: str = "full-line"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParameters(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        raw = dict(_DEFAULTS.get(self.family, {}))
        for k, v in dict(self.params).items():
            raw[_ALIASES.get(k, k)] = v
        allowed = set(_PARAMS[self.family])
        unknown = set(raw) - allowed
        if unknown:
            raise InvalidParameters(f"unknown parameters for {self.family}: {sorted(unknown)}")
        missing = allowed - set(raw)
        if missing:
            raise InvalidParameters(f"missing parameters for {self.family}: {sorted(missing)}")
        clean = {}
        for k, v in raw.items():
            if k in ("num", "den"):
                v = tuple(float(c) for c in v)
            else:
                v = float(v)
                if not math.isfinite(v):
                    raise InvalidParameters(f"parameter {k} must be finite")
            clean[k] = v
        object.__setattr__(self, "params", MappingProxyType(clean))
        if self.family in ("harmonic3d", "coulomb", "eckart"):
            object.__setattr__(self, "domain_kind", "half-line")
        self._validate()

    def _validate(self):
        p = self.params
        fam = self.family
        if fam in ("harmonic3d", "coulomb"):
            if p["l"] < 0:
                raise InvalidParameters("l must be non-negative")
            if self.centrifugal < 0:
                raise InvalidParameters("b + l(l+1) must be non-negative")
            if fam == "coulomb" and p["V0"] <= 0:
                raise InvalidParameters("coulomb needs V0 > 0")
        elif fam == "eckart":
            if p["alpha"] <= 0 or p["b"] <= 0 or p["lambda"] <= p["b"]:
                raise InvalidParameters("eckart needs alpha > 0, b > 0, lambda > b")
        elif fam == "morse":
            if min(p["A"], p["B"], p["alpha"]) <= 0:
                raise InvalidParameters("morse needs A > 0, B > 0, alpha > 0")
        elif fam == "rosen_morse":
            if p["U0"] <= 0 or p["a"] <= 0:
                raise InvalidParameters("rosen_morse needs U0 > 0, a > 0")
            if abs(p["U1"]) >= 2 * p["U0"]:
                raise InvalidParameters("rosen_morse needs |U1| < 2 U0 for a well")
        elif fam == "user_rational":
            den = np.trim_zeros(np.asarray(p["den"]), "b")
            num = np.trim_zeros(np.asarray(p["num"]), "b")
            if den.size == 0:
                raise InvalidParameters("user_rational denominator is identically zero")
            if num.size == 0:
                raise InvalidParameters("user_rational numerator is identically zero")
            object.__setattr__(self, "params", MappingProxyType({"num": tuple(num), "den": tuple(den)}))

    # convenience ------------------------------------------------------------
    @property
    def centrifugal(self) -> float:
        """``b + l(l+1)`` for the radial families, 0 otherwise."""
        if self.family in ("harmonic3d", "coulomb"):
            return self.params["b"] + self.params["l"] * (self.params["l"] + 1)
        return 0.0

    @property
    def is_radial(self) -> bool:
        return self.family in ("harmonic3d", "coulomb")

    def to_spec(self) -> str:
        parts = [f"family={self.family}"]
        for k, v in self.params.items():
            if isinstance(v, tuple):
                parts.append(f"{k}=" + ",".join(_fmt(c) for c in v))
            else:
                parts.append(f"{k}={_fmt(v)}")
        return " ".join(parts)

    # evaluation -------------------------------------------------------------
    def _formula(self, x):
        """V written once for arrays and jets alike."""
        p = self.params
        fam = self.family
        if fam == "sho":
            return x * x
        if fam == "harmonic3d":
            return x * x + self.centrifugal / (x * x)
        if fam == "coulomb":
            return -p["V0"] / x + self.centrifugal / (x * x)
        if fam == "eckart":
            g = jets.expm1_inv(p["alpha"] * x)  # = y / (1 - y), y = exp(-alpha x)
            return -p["lambda"] * g + p["b"] * g * (1.0 + g)
        if fam == "morse":
            y = jets.exp(-p["alpha"] * x)
            return p["A"] * y * y - p["B"] * y
        if fam == "rosen_morse":
            t = jets.tanh(x / p["a"])
            return -p["U0"] * (1.0 - t * t) + p["U1"] * t
        num = _horner(p["num"], x)
        if len(p["den"]) == 1:
            return num / p["den"][0]
        return num / _horner(p["den"], x)

    def V(self, z):
        z = np.asarray(z, dtype=complex)
        self._check_regular(z)
        with np.errstate(over="ignore", invalid="ignore"):
            return self._formula(z)

    def dV(self, z):
        """Closed-form first derivative (independent of the jet machinery)."""
        z = np.asarray(z, dtype=complex)
        self._check_regular(z)
        p = self.params
        fam = self.family
        c = self.centrifugal
        with np.errstate(over="ignore", invalid="ignore"):
            if fam == "sho":
                return 2 * z
            if fam == "harmonic3d":
                return 2 * z - 2 * c / z**3
            if fam == "coulomb":
                return p["V0"] / z**2 - 2 * c / z**3
            if fam == "eckart":
                al = p["alpha"]
                g = jets.expm1_inv(al * z)
                dg = -al * g * (1 + g)
                return -p["lambda"] * dg + p["b"] * dg * (1 + 2 * g)
            if fam == "morse":
                al = p["alpha"]
                y = np.exp(-al * z)
                return -2 * al * p["A"] * y * y + al * p["B"] * y
            if fam == "rosen_morse":
                a = p["a"]
                t = np.tanh(z / a)
                s2 = 1 - t * t
                return (2 * p["U0"] * t * s2 + p["U1"] * s2) / a
            num, den = p["num"], p["den"]
            dnum = np.polynomial.polynomial.polyder(num) if len(num) > 1 else [0.0]
            dden = np.polynomial.polynomial.polyder(den) if len(den) > 1 else [0.0]
            n, d = _horner(num, z), _horner(den, z)
            return (_horner(dnum, z) * d - n * _horner(dden, z)) / d**2

    def d2V(self, z):
        """Closed-form second derivative."""
        z = np.asarray(z, dtype=complex)
        self._check_regular(z)
        p = self.params
        fam = self.family
        c = self.centrifugal
        with np.errstate(over="ignore", invalid="ignore"):
            if fam == "sho":
                return np.full(z.shape, 2.0 + 0j)
            if fam == "harmonic3d":
                return 2 + 6 * c / z**4
            if fam == "coulomb":
                return -2 * p["V0"] / z**3 + 6 * c / z**4
            if fam == "eckart":
                al = p["alpha"]
                g = jets.expm1_inv(al * z)
                dg = -al * g * (1 + g)
                d2g = -al * dg * (1 + 2 * g)
                return -p["lambda"] * d2g + p["b"] * (d2g * (1 + 2 * g) + 2 * dg * dg)
            if fam == "morse":
                al = p["alpha"]
                y = np.exp(-al * z)
                return al * al * (4 * p["A"] * y * y - p["B"] * y)
            if fam == "rosen_morse":
                a = p["a"]
                t = np.tanh(z / a)
                s2 = 1 - t * t
                return (2 * p["U0"] * s2 * (1 - 3 * t * t) - 2 * p["U1"] * t * s2) / a**2
            P = np.polynomial.polynomial
            num, den = np.asarray(p["num"]), np.asarray(p["den"])
            d1n, d1d = P.polyder(num) if num.size > 1 else [0.0], P.polyder(den) if den.size > 1 else [0.0]
            d2n, d2d = P.polyder(num, 2) if num.size > 2 else [0.0], P.polyder(den, 2) if den.size > 2 else [0.0]
            n, d = _horner(num, z), _horner(den, z)
            n1, dd1 = _horner(d1n, z), _horner(d1d, z)
            n2, dd2 = _horner(d2n, z), _horner(d2d, z)
            return n2 / d - (2 * n1 * dd1 + n * dd2) / d**2 + 2 * n * dd1**2 / d**3

    def V_jet(self, z, order: int) -> Jet:
        z = np.asarray(z, dtype=complex)
        self._check_regular(z)
        return self._formula(Jet.variable(z, order))

    def Q(self, z, E):
        return self.V(z) - E

    # singularities ----------------------------------------------------------
    def poles(self, radius: float = 50.0):
        """Poles of V within ``radius`` of the origin."""
        p = self.params
        fam = self.family
        if fam in ("harmonic3d", "coulomb"):
            return np.array([0.0 + 0j])
        if fam == "eckart":
            step = 2 * np.pi / p["alpha"]
            n = int(radius // step) + 1
            return 1j * step * np.arange(-n, n + 1)
        if fam == "rosen_morse":
            step = np.pi * p["a"]
            n = int(radius // step) + 1
            return 1j * step * (np.arange(-n - 1, n + 1) + 0.5)
        if fam == "user_rational" and len(p["den"]) > 1:
            return np.roots(p["den"][::-1]).astype(complex)
        return np.zeros(0, dtype=complex)

    def _check_regular(self, z):
        if self.family in ("sho", "morse"):
            return
        if self.family == "user_rational" and len(self.params["den"]) == 1:
            return
        dist = _pole_distance(self, z)
        if np.any(dist < TOL_SING):
            raise SingularEvaluation(f"{self.family}: evaluation at a pole of the potential")

    # bound-state structure ----------------------------------------------------
    def energy_range(self) -> tuple[float, float]:
        """Open interval of energies with two simple turning points."""
        p = self.params
        fam = self.family
        c = self.centrifugal
        if fam == "sho":
            return 0.0, math.inf
        if fam == "harmonic3d":
            return 2 * math.sqrt(c), math.inf
        if fam == "coulomb":
            return (-p["V0"] ** 2 / (4 * c) if c > 0 else -math.inf), 0.0
        if fam == "eckart":
            return -((p["lambda"] - p["b"]) ** 2) / (4 * p["b"]), 0.0
        if fam == "morse":
            return -p["B"] ** 2 / (4 * p["A"]), 0.0
        if fam == "rosen_morse":
            return -p["U0"] - p["U1"] ** 2 / (4 * p["U0"]), -abs(p["U1"])
        return _rational_range(self)

    def turning_points(self, E: float) -> TurningPointPair:
        E = float(E)
        lo, hi = self.energy_range()
        if not lo < E < hi:
            raise NoBoundTurningPoints(f"E={E} outside the bound range ({lo}, {hi}) of {self.family}")
        p = self.params
        fam = self.family
        c = self.centrifugal
        origin = False
        if fam == "sho":
            za, zb = -math.sqrt(E), math.sqrt(E)
        elif fam == "harmonic3d":
            disc = math.sqrt(max(E * E / 4 - c, 0.0))
            ub = E / 2 + disc
            ua = c / ub  # product of roots; stable for small c
            za, zb = math.sqrt(ua), math.sqrt(ub)
            origin = c == 0
        elif fam == "coulomb":
            # E r^2 + V0 r - c = 0
            V0 = p["V0"]
            disc = math.sqrt(max(V0 * V0 + 4 * E * c, 0.0))
            rb = (-V0 - disc) / (2 * E)
            ra = -c / (E * rb) if rb else 0.0
            za, zb = ra, rb
            origin = c == 0
        elif fam == "eckart":
            # b w^2 + (b - lambda) w - E = 0 with w = 1/(e^{alpha x} - 1)
            b, lam, al = p["b"], p["lambda"], p["alpha"]
            w = np.sort(np.real(np.roots([b, b - lam, -E])))
            xs = sorted(math.log1p(1.0 / wi) / al for wi in w)
            za, zb = xs
        elif fam == "morse":
            A, B, al = p["A"], p["B"], p["alpha"]
            y = np.real(np.roots([A, -B, -E]))
            za, zb = sorted(-math.log(yi) / al for yi in y)
        elif fam == "rosen_morse":
            U0, U1, a = p["U0"], p["U1"], p["a"]
            t = np.real(np.roots([U0, U1, -(U0 + E)]))
            za, zb = sorted(a * math.atanh(ti) for ti in t)
        else:
            za, zb = _rational_turning_points(self, E)
        za, zb = self._polish(za, E, origin), self._polish(zb, E, False)
        if abs(zb - za) < TOL_MERGE:
            raise DegenerateTurningPoints(f"turning points merge at E={E}")
        pts = [zb] if origin else [za, zb]
        resid = float(np.max(np.abs(self.V(np.array(pts)) - E)))
        return TurningPointPair(complex(za), complex(zb), resid, origin)

    def _polish(self, x, E, skip):
        if skip:
            return float(x)
        for _ in range(3):
            f = float(np.real(self.V(x))) - E
            d = float(np.real(self.dV(x)))
            if d == 0 or f == 0:
                break
            step = f / d
            x -= step
            if abs(step) <= 1e-16 * (1 + abs(x)):
                break
        return float(x)

    def classical_region_guess(self):
        """A real point inside the well, used to seed numerical searches."""
        lo, hi = self.energy_range()
        if math.isfinite(hi):
            E = lo + 0.5 * (hi - lo)
        elif math.isfinite(lo):
            E = lo + 1.0 + abs(lo)
        else:
            E = hi - 1.0
        tp = self.turning_points(E)
        return 0.5 * (tp.z_a.real + tp.z_b.real)


def _fmt(v):
    return repr(float(v)) if not float(v).is_integer() else str(int(v))


def _horner(coefs, x):
    out = 0.0 * x
    for a in reversed(list(coefs)):
        out = out * x + a
    return out


def _pole_distance(model, z):
    p = model.params
    fam = model.family
    if fam in ("harmonic3d", "coulomb"):
        return np.abs(z)
    if fam == "eckart":
        step = 2 * np.pi / p["alpha"]
        k = np.round(z.imag / step)
        return np.abs(z - 1j * step * k)
    if fam == "rosen_morse":
        step = np.pi * p["a"]
        k = np.round(z.imag / step - 0.5)
        return np.abs(z - 1j * step * (k + 0.5))
    poles = model.poles()
    if poles.size == 0:
        return np.full(np.shape(z), np.inf)
    return np.min(np.abs(np.asarray(z)[..., None] - poles), axis=-1)


# user-defined rational potentials ---------------------------------------------


def _real_line_samples(model):
    if model.domain_kind == "half-line":
        return np.geomspace(1e-3, 1e3, 4001)
    return np.sinh(np.linspace(-8.0, 8.0, 4001))


def _rational_range(model):
    xs = _real_line_samples(model)
    poles = model.poles()
    real_poles = poles[np.abs(poles.imag) < 1e-12].real
    if real_poles.size and model.domain_kind == "full-line":
        raise InvalidParameters("user_rational potential has a pole on the real line")
    v = np.real(model._formula(xs.astype(complex)))
    i = int(np.argmin(v))
    from scipy.optimize import minimize_scalar

    lo_x = xs[max(i - 1, 0)]
    hi_x = xs[min(i + 1, xs.size - 1)]
    res = minimize_scalar(lambda t: float(np.real(model._formula(complex(t)))), bounds=(lo_x, hi_x), method="bounded",
                          options={"xatol": 1e-12})
    vmin = float(min(res.fun, v[i]))
    num, den = np.asarray(model.params["num"]), np.asarray(model.params["den"])
    dn, dd = num.size - 1, den.size - 1

    def edge(sign):
        if dn > dd:
            lead = num[-1] / den[-1] * (sign**dn) * (sign**dd)
            return math.inf if lead > 0 else -math.inf
        if dn == dd:
            return float(num[-1] / den[-1])
        return 0.0

    if model.domain_kind == "half-line":
        hi = edge(1)
    else:
        hi = min(edge(1), edge(-1))
    if not vmin < hi:
        raise InvalidParameters("user_rational potential has no well")
    return vmin, hi


def _rational_turning_points(model, E):
    num = np.asarray(model.params["num"], dtype=float)
    den = np.asarray(model.params["den"], dtype=float)
    poly = np.polynomial.polynomial.polysub(num, E * den)
    roots = np.polynomial.polynomial.polyroots(poly)
    real = np.sort(roots[np.abs(roots.imag) <= 1e-9 * (1 + np.abs(roots))].real)
    if model.domain_kind == "half-line":
        real = real[real > 0]
    x0 = model_well_center(model)
    left = real[real < x0]
    right = real[real > x0]
    if left.size == 0 or right.size == 0:
        raise NoBoundTurningPoints(f"no turning-point pair around the well at E={E}")
    return float(left[-1]), float(right[0])


def model_well_center(model):
    xs = _real_line_samples(model)
    v = np.real(model._formula(xs.astype(complex)))
    return float(xs[int(np.argmin(v))])


def rational_foreign_roots(model, E, tp: TurningPointPair):
    """Zeros of V - E other than the chosen turning-point pair."""
    num = np.asarray(model.params["num"], dtype=float)
    den = np.asarray(model.params["den"], dtype=float)
    roots = np.polynomial.polynomial.polyroots(np.polynomial.polynomial.polysub(num, E * den))
    keep = [r for r in roots if min(abs(r - tp.z_a), abs(r - tp.z_b)) > 1e-8 * (1 + abs(r))]
    return np.array(keep, dtype=complex)


# singularity report ------------------------------------------------------------


def known_singularities(model: PotentialModel, radius: float = 50.0) -> Singularities:
    p = model.params
    fam = model.family
    pts = tuple(complex(z) for z in model.poles(radius))
    if fam == "eckart":
        return Singularities(pts, 2 * np.pi / p["alpha"], period=2j * np.pi / p["alpha"])
    if fam == "rosen_morse":
        return Singularities(pts, np.pi * p["a"] / 2, period=1j * np.pi * p["a"])
    if fam == "morse":
        return Singularities(pts, np.pi / p["alpha"], period=2j * np.pi / p["alpha"])
    if fam == "harmonic3d":
        return Singularities(pts, math.inf, mirror=True)
    if fam == "coulomb":
        return Singularities(pts, math.inf)
    if fam == "user_rational" and pts:
        clear = min((abs(z.imag) for z in pts if abs(z.imag) > 0), default=math.inf)
        return Singularities(pts, clear)
    return Singularities(pts, math.inf)


# module-level wrappers matching the operation names -----------------------------


def eval_V(model: PotentialModel, z):
    return model.V(z)


def eval_V_jet(model: PotentialModel, z, order: int) -> Jet:
    return model.V_jet(z, order)


def turning_points(model: PotentialModel, E: float) -> TurningPointPair:
    return model.turning_points(E)


# text format ---------------------------------------------------------------------


def parse_potential(text) -> PotentialModel:
    """Parse ``family=morse A=1 B=4 alpha=1`` (string or token list)."""
    tokens = text.split() if isinstance(text, str) else list(text)
    fields = {}
    for tok in tokens:
        if "=" not in tok:
            raise InvalidParameters(f"expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        fields[k.strip()] = v.strip()
    if "family" not in fields:
        raise InvalidParameters("potential spec needs family=...")
    family = fields.pop("family")
    domain = fields.pop("domain", None)
    params = {}
    for k, v in fields.items():
        if k in ("num", "den"):
            params[k] = tuple(float(c) for c in v.split(",") if c)
        else:
            try:
                params[k] = float(v)
            except ValueError as exc:
                raise InvalidParameters(f"parameter {k} is not a number: {v!r}") from exc
    kind = "full-line"
    if domain is not None:
        kind = {"full": "full-line", "half": "half-line"}.get(domain, domain)
        if kind not in ("full-line", "half-line"):
            raise InvalidParameters(f"domain must be full or half, got {domain!r}")
    return PotentialModel(family, MappingProxyType(params), kind)


def make(family: str, domain_kind: str = "full-line", **params) -> PotentialModel:
    return PotentialModel(family, MappingProxyType(params), domain_kind)


# reference closed forms --------------------------------------------------------------


def analytic_level(model: PotentialModel, K: int):
    """Closed-form level K for the solvable families, None when unbound or unknown."""
    p = model.params
    fam = model.family
    h = K + 0.5
    if fam == "sho":
        return 2 * h
    if fam == "harmonic3d":
        return 2 * (2 * K + 1 + math.sqrt((p["l"] + 0.5) ** 2 + p["b"]))
    if fam == "coulomb":
        return -p["V0"] ** 2 / (4 * (h + math.sqrt(p["b"] + (p["l"] + 0.5) ** 2)) ** 2)
    if fam == "morse":
        s = p["B"] / (2 * math.sqrt(p["A"])) - p["alpha"] * h
        return -s * s if s > 0 else None
    if fam == "eckart":
        lam, b, al = p["lambda"], p["b"], p["alpha"]
        m = al * (h + 0.5 * math.sqrt(1 + 4 * b / al**2))
        s = (lam - m * m) / (2 * m)
        return -s * s if s > 0 else None
    if fam == "rosen_morse":
        U0, U1, a = p["U0"], p["U1"], p["a"]
        rhs = -h / (a * math.sqrt(U0)) + math.sqrt(1 + 4 * a * a * U0) / (2 * a * math.sqrt(U0))
        S = 2 * rhs * math.sqrt(U0)
        if S <= 0:
            return None
        P = 0.5 * (S - 2 * abs(U1) / S)
        return -abs(U1) - P * P if P > 0 else None
    return None


def analytic_relation_residual(model: PotentialModel, E: float, K: int):
    """Residual of the implicit level relation (Eckart, Morse, Rosen-Morse)."""
    p = model.params
    fam = model.family
    h = K + 0.5
    if fam == "eckart":
        lam, b, al = p["lambda"], p["b"], p["alpha"]
        return -0.5 * math.sqrt(1 + 4 * b / al**2) + math.sqrt(lam - E) / al - math.sqrt(-E) / al - h
    if fam == "morse":
        return p["B"] / (2 * p["alpha"] * math.sqrt(p["A"])) - math.sqrt(-E) / p["alpha"] - h
    if fam == "rosen_morse":
        U0, U1, a = p["U0"], p["U1"], p["a"]
        lhs = 0.5 * math.sqrt((-E - U1) / U0) + 0.5 * math.sqrt((-E + U1) / U0)
        rhs = -h / (a * math.sqrt(U0)) + math.sqrt(1 + 4 * a * a * U0) / (2 * a * math.sqrt(U0))
        return lhs - rhs
    raise ValueError(f"no implicit relation for {fam}")
