"""Truncated Taylor series ("jets") over the complex numbers.

A :class:`Jet` holds the coefficients ``c_0 .. c_M`` of ``f(z0 + h)`` in
powers of ``h``, i.e. ``c_j = f^{(j)}(z0) / j!``.  Coefficients are stored
densely with shape ``(M + 1, *batch)`` so one jet object can describe the
same function expanded at every node of a contour at once.

Elementary functions (``exp``, ``log``, ``sqrt``, ``tanh`` ...) accept both
jets and plain numpy arrays, which lets potential formulas be written once
and evaluated either as values or as jets.
"""
from __future__ import annotations

import numpy as np

from .errors import BranchPointProximity, DegenerateJet, OrderUnderflow

#: relative threshold below which a constant term counts as a branch point
TOL_BRANCH = 1e-12


def _as_complex(x):
    return np.asarray(x, dtype=complex)


class Jet:
    """Taylor coefficients of an analytic function at a (batch of) base point(s)."""

    __slots__ = ("base_point", "coeffs")
    __array_priority__ = 1000  # make numpy defer to our reflected operators

    def __init__(self, base_point, coeffs):
        coeffs = _as_complex(coeffs)
        if coeffs.ndim == 0:
            coeffs = coeffs.reshape(1)
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("jet coefficients must be finite")
        self.base_point = _as_complex(base_point)
        self.coeffs = coeffs

    # construction ---------------------------------------------------------
    @classmethod
    def variable(cls, z0, order: int) -> "Jet":
        """Jet of the identity map ``z`` at ``z0``."""
        z0 = _as_complex(z0)
        c = np.zeros((order + 1,) + z0.shape, dtype=complex)
        c[0] = z0
        if order >= 1:
            c[1] = 1.0
        return cls(z0, c)

    @classmethod
    def constant(cls, value, z0, order: int) -> "Jet":
        z0 = _as_complex(z0)
        c = np.zeros((order + 1,) + z0.shape, dtype=complex)
        c[0] = value
        return cls(z0, c)

    @classmethod
    def from_polynomial(cls, coefs, z0, order: int) -> "Jet":
        """Jet of ``sum_k coefs[k] z**k`` (ascending powers) at ``z0``."""
        z = cls.variable(z0, order)
        out = cls.constant(0.0, z0, order)
        for a in reversed(list(coefs)):
            out = out * z + a
        return out

    # basic properties -----------------------------------------------------
    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def value(self):
        return self.coeffs[0]

    def __len__(self):
        return self.coeffs.shape[0]

    def __repr__(self):
        return f"Jet(base_point={self.base_point!r}, coeffs={self.coeffs!r})"

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise OrderUnderflow(f"cannot raise jet order {self.order} to {order}")
        return Jet(self.base_point, self.coeffs[: order + 1])

    def derivative_values(self):
        """All derivatives ``f^{(j)}(z0)``, j = 0..M."""
        fact = np.cumprod(np.r_[1.0, np.arange(1, self.order + 1)])
        return self.coeffs * fact.reshape((-1,) + (1,) * (self.coeffs.ndim - 1))

    # arithmetic -----------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            if (
                other.base_point is not self.base_point
                and other.base_point.shape == self.base_point.shape
                and not np.allclose(other.base_point, self.base_point, rtol=1e-14, atol=1e-300)
            ):
                raise ValueError("jets expanded at different base points")
            m = min(self.order, other.order)
            return self.coeffs[: m + 1], other.coeffs[: m + 1]
        c = np.zeros_like(self.coeffs)
        c[0] = other
        return self.coeffs, c

    def __add__(self, other):
        a, b = self._coerce(other)
        return Jet(self.base_point, a + b)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.base_point, -self.coeffs)

    def __pos__(self):
        return self

    def __sub__(self, other):
        a, b = self._coerce(other)
        return Jet(self.base_point, a - b)

    def __rsub__(self, other):
        a, b = self._coerce(other)
        return Jet(self.base_point, b - a)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.base_point, self.coeffs * _as_complex(other))
        return jet_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.base_point, self.coeffs / _as_complex(other))
        return jet_div(self, other)

    def __rtruediv__(self, other):
        return jet_div(Jet.constant(other, self.base_point, self.order), self)

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = Jet.constant(1.0, self.base_point, self.order)
            base = self
            while p:
                if p & 1:
                    out = out * base
                p >>= 1
                if p:
                    base = base * base
            return out
        return jet_pow(self, p)


def _conv(a, b, k):
    """k-th coefficient of the product of coefficient stacks a and b."""
    return np.sum(a[: k + 1] * b[k::-1], axis=0)


def jet_add(a: Jet, b: Jet) -> Jet:
    return a + b


def jet_mul(a: Jet, b: Jet) -> Jet:
    x, y = a._coerce(b)
    out = np.empty_like(x)
    for k in range(x.shape[0]):
        out[k] = _conv(x, y, k)
    return Jet(a.base_point, out)


def _check_nonzero(c, what):
    scale = np.max(np.abs(c), axis=0)
    if np.any(np.abs(c[0]) <= TOL_BRANCH * scale) or np.any(c[0] == 0):
        raise what


def jet_div(a: Jet, b: Jet) -> Jet:
    x, y = a._coerce(b)
    if np.any(y[0] == 0):
        raise DegenerateJet("division by a jet whose constant term vanishes")
    out = np.empty_like(x)
    for k in range(x.shape[0]):
        s = x[k] - np.sum(y[1 : k + 1] * out[k - 1 :: -1][:k], axis=0) if k else x[0]
        out[k] = s / y[0]
    return Jet(a.base_point, out)


def _pick_root(principal, seed):
    if seed is None:
        return principal
    seed = _as_complex(seed)
    return np.where(np.abs(principal - seed) <= np.abs(principal + seed), principal, -principal)


def jet_sqrt(a: Jet, seed=None) -> Jet:
    """Square root; ``seed`` selects the sign of the constant term (nearest wins)."""
    c = a.coeffs
    _check_nonzero(c, BranchPointProximity("square root at a branch point"))
    out = np.empty_like(c)
    out[0] = _pick_root(np.sqrt(c[0]), seed)
    two_b0 = 2.0 * out[0]
    for k in range(1, c.shape[0]):
        s = c[k] - np.sum(out[1:k] * out[k - 1 : 0 : -1], axis=0) if k > 1 else c[k]
        out[k] = s / two_b0
    return Jet(a.base_point, out)


def jet_ln(a: Jet, seed=None) -> Jet:
    """Logarithm; ``seed`` picks the sheet (imaginary part nearest the seed's)."""
    c = a.coeffs
    _check_nonzero(c, BranchPointProximity("logarithm at a branch point"))
    out = np.empty_like(c)
    l0 = np.log(c[0])
    if seed is not None:
        turns = np.round((_as_complex(seed).imag - l0.imag) / (2 * np.pi))
        l0 = l0 + 2j * np.pi * turns
    out[0] = l0
    for k in range(1, c.shape[0]):
        j = np.arange(1, k).reshape((-1,) + (1,) * (c.ndim - 1))
        s = k * c[k] - np.sum(j * out[1:k] * c[k - 1 : 0 : -1], axis=0)
        out[k] = s / (k * c[0])
    return Jet(a.base_point, out)


def jet_exp(a: Jet) -> Jet:
    c = a.coeffs
    out = np.empty_like(c)
    out[0] = np.exp(c[0])
    for k in range(1, c.shape[0]):
        j = np.arange(1, k + 1).reshape((-1,) + (1,) * (c.ndim - 1))
        out[k] = np.sum(j * c[1 : k + 1] * out[k - 1 :: -1][:k], axis=0) / k
    return Jet(a.base_point, out)


def jet_pow(a: Jet, p, seed=None) -> Jet:
    """``a**p`` for real or complex ``p``; the seed fixes the constant term's branch."""
    c = a.coeffs
    _check_nonzero(c, BranchPointProximity("non-integer power at a branch point"))
    out = np.empty_like(c)
    b0 = c[0] ** p
    if seed is not None:
        # any branch of a**p differs by exp(2 pi i p k); pick the nearest to seed
        seed = _as_complex(seed)
        ks = np.arange(-3, 4).reshape((-1,) + (1,) * c[0].ndim)
        cands = b0 * np.exp(2j * np.pi * p * ks)
        b0 = np.take_along_axis(cands, np.argmin(np.abs(cands - seed), axis=0)[None], 0)[0]
    out[0] = b0
    for k in range(1, c.shape[0]):
        j = np.arange(1, k + 1).reshape((-1,) + (1,) * (c.ndim - 1))
        s = np.sum((p * j - (k - j)) * c[1 : k + 1] * out[k - 1 :: -1][:k], axis=0)
        out[k] = s / (k * c[0])
    return Jet(a.base_point, out)


def jet_derivative(a: Jet) -> Jet:
    if a.order < 1:
        raise OrderUnderflow("derivative of an order-0 jet")
    k = np.arange(1, a.order + 1).reshape((-1,) + (1,) * (a.coeffs.ndim - 1))
    return Jet(a.base_point, k * a.coeffs[1:])


# numpy/jet dispatching elementary functions ---------------------------------


def exp(x):
    return jet_exp(x) if isinstance(x, Jet) else np.exp(x)


def log(x, seed=None):
    return jet_ln(x, seed) if isinstance(x, Jet) else np.log(x)


def sqrt(x, seed=None):
    if isinstance(x, Jet):
        return jet_sqrt(x, seed)
    return _pick_root(np.sqrt(_as_complex(x)), seed)


def tanh(x):
    """Hyperbolic tangent, evaluated through whichever exponential stays bounded."""
    if not isinstance(x, Jet):
        return np.tanh(_as_complex(x))
    right = np.real(x.base_point) >= 0
    xr = _masked(x, right, 0.0)
    xl = _masked(x, ~right, 0.0)
    em = jet_exp(-2.0 * xr)
    ep = jet_exp(2.0 * xl)
    t_right = (1.0 - em) / (1.0 + em)
    t_left = (ep - 1.0) / (ep + 1.0)
    return Jet(x.base_point, np.where(right, t_right.coeffs, t_left.coeffs))


def expm1_inv(x):
    """``1 / (exp(x) - 1)``, kept finite for large |Re x|."""
    if not isinstance(x, Jet):
        x = _as_complex(x)
        with np.errstate(over="ignore"):
            return 1.0 / np.expm1(x)
    right = np.real(x.base_point) >= 0
    xr = _masked(x, right, 1.0)
    xl = _masked(x, ~right, -1.0)
    em = jet_exp(-1.0 * xr)
    ep = jet_exp(xl)
    g_right = em / (1.0 - em)
    g_left = 1.0 / (ep - 1.0)
    return Jet(x.base_point, np.where(right, g_right.coeffs, g_left.coeffs))


def _masked(x: Jet, keep, filler) -> Jet:
    """Copy of ``x`` with batch entries outside ``keep`` replaced by the constant ``filler``."""
    c = np.where(keep, x.coeffs, 0.0)
    c[0] = np.where(keep, x.coeffs[0], filler)
    return Jet(np.where(keep, x.base_point, filler), c)
