"""Numerical holomorphic germs: truncated Taylor series with a certified radius.

A :class:`Germ` stores Taylor coefficients at a center together with a radius
that is a certified lower bound for the disk of validity, never an estimate
from coefficient decay.  All operations are pure; germs are immutable values.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from ._util import ENTIRE_RADIUS, as_complex, pair, parse_complex
from .errors import (
    CenterMismatchError,
    GermDomainError,
    SchemaError,
    ShiftTooLargeError,
    TailAccuracyError,
)
from .models import AnalyticModel

__all__ = [
    "Germ",
    "convolve_at_origin",
    "named_germ",
    "pole_germ",
    "log_pole_germ",
    "DEFAULT_ORDER",
    "TAIL_TOL",
]

DEFAULT_ORDER = 64
TAIL_TOL = 1e-12
_CENTER_TOL = 1e-12
_EVAL_SAFETY = 0.7
_SHIFT_SAFETY = 0.5


@dataclass(frozen=True, eq=False)
class Germ:
    center: complex
    coeffs: np.ndarray = field(repr=False)
    radius: float
    model: object | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=complex).copy()
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("coeffs must be a nonempty 1-D sequence")
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def __repr__(self):
        return f"Germ(center={self.center}, order={self.order}, radius={self.radius:.6g})"

    # ------------------------------------------------------------------
    # evaluation

    def tail_estimate(self, r: float) -> float:
        """Geometric extrapolation of the dropped tail at radius ``r``."""
        q = r / self.radius
        if q >= 1.0:
            return math.inf
        last = abs(self.coeffs[-1])
        if last == 0.0:
            return 0.0
        return last * r**self.order * q / (1.0 - q)

    def eval_with_error(self, z, tail_tol: float | None = TAIL_TOL):
        """Horner evaluation plus a tail-error estimate.

        ``z`` may be a scalar or an array; every point must lie within
        0.7 * radius of the center.  When ``tail_tol`` is not None the tail
        estimate is checked against ``tail_tol * max|coeff|`` and a
        :class:`TailAccuracyError` is raised on violation.
        """
        zz = np.asarray(z, dtype=complex)
        dz = zz - self.center
        rmax = float(np.max(np.abs(dz))) if dz.size else 0.0
        if rmax > _EVAL_SAFETY * self.radius * (1 + 1e-12):
            raise GermDomainError(
                f"evaluation at distance {rmax:.3g} exceeds 0.7 * radius {self.radius:.3g}"
            )
        err = self.tail_estimate(rmax)
        if tail_tol is not None:
            scale = float(np.max(np.abs(self.coeffs)))
            if err > tail_tol * scale:
                raise TailAccuracyError(
                    f"tail estimate {err:.3g} exceeds {tail_tol:.1g} * {scale:.3g}"
                )
        value = np.polynomial.polynomial.polyval(dz, self.coeffs)
        if np.isscalar(z) or zz.ndim == 0:
            return complex(value), err
        return value, err

    def eval(self, z, tail_tol: float | None = TAIL_TOL):
        return self.eval_with_error(z, tail_tol)[0]

    # ------------------------------------------------------------------
    # recentering

    def recenter(self, new_center: complex) -> "Germ":
        """Taylor-shift the series to ``new_center``.

        The shift must not exceed half the certified radius.  The new radius
        is the conservative ``radius - |shift|``; continuation refreshes it
        from the singular-set distance separately.
        """
        d = complex(new_center) - self.center
        dist = abs(d)
        if dist > _SHIFT_SAFETY * self.radius * (1 + 1e-12):
            raise ShiftTooLargeError(
                f"shift {dist:.3g} exceeds half of radius {self.radius:.3g}"
            )
        if dist == 0.0:
            return Germ(new_center, self.coeffs, self.radius, self.model)
        new_coeffs = _taylor_shift(self.coeffs, d)
        new_radius = self.radius - dist
        if math.isinf(self.radius) or self.radius >= ENTIRE_RADIUS / 2:
            new_radius = self.radius
        model = None
        if self.model is not None:
            model = self.model.advanced(self.center, complex(new_center))
        return Germ(new_center, new_coeffs, new_radius, model)

    def regenerated(self, new_center: complex) -> "Germ":
        """Recenter through the analytic model when one is attached.

        Falls back to the Taylor shift for data-only germs.  Model germs get
        machine-accurate local coefficients at the new center, so chained
        continuation does not lose the function outside the original disk.
        """
        if self.model is None:
            return self.recenter(new_center)
        d = complex(new_center) - self.center
        if abs(d) > _SHIFT_SAFETY * self.radius * (1 + 1e-12):
            raise ShiftTooLargeError(
                f"shift {abs(d):.3g} exceeds half of radius {self.radius:.3g}"
            )
        model = self.model.advanced(self.center, complex(new_center))
        coeffs = model.coeffs_at(complex(new_center), self.order)
        return Germ(new_center, coeffs, max(self.radius - abs(d), 1e-300), model)

    # ------------------------------------------------------------------
    # arithmetic

    def _check_center(self, other: "Germ"):
        if abs(self.center - other.center) > _CENTER_TOL:
            raise CenterMismatchError(
                f"centers {self.center} and {other.center} differ"
            )

    def add(self, other: "Germ") -> "Germ":
        self._check_center(other)
        n = max(self.coeffs.size, other.coeffs.size)
        a = np.zeros(n, dtype=complex)
        a[: self.coeffs.size] = self.coeffs
        a[: other.coeffs.size] += other.coeffs
        model = None
        if self.model is not None and other.model is not None:
            model = self.model.plus(other.model)
        return Germ(self.center, a, min(self.radius, other.radius), model)

    def subtract(self, other: "Germ") -> "Germ":
        return self.add(other.scale(-1.0))

    def scale(self, factor: complex) -> "Germ":
        model = self.model.scaled(factor) if self.model is not None else None
        return Germ(self.center, self.coeffs * factor, self.radius, model)

    def multiply(self, other: "Germ", order: int | None = None) -> "Germ":
        self._check_center(other)
        if order is None:
            order = max(self.order, other.order)
        prod = np.convolve(self.coeffs, other.coeffs)[: order + 1]
        model = None
        if self.model is not None and other.model is not None:
            model = self.model.times(other.model)
        return Germ(self.center, prod, min(self.radius, other.radius), model)

    def differentiate(self) -> "Germ":
        if self.coeffs.size == 1:
            return Germ(self.center, np.zeros(1, dtype=complex), self.radius)
        k = np.arange(1, self.coeffs.size)
        return Germ(self.center, self.coeffs[1:] * k, self.radius)

    def integrate_from_zero(self) -> "Germ":
        """Primitive vanishing at 0; requires a germ centered at the origin."""
        if abs(self.center) > _CENTER_TOL:
            raise CenterMismatchError("integrate_from_zero needs center 0")
        out = np.zeros(self.coeffs.size + 1, dtype=complex)
        out[1:] = self.coeffs / np.arange(1, self.coeffs.size + 1)
        return Germ(0j, out, self.radius)

    def truncated(self, order: int) -> "Germ":
        if order >= self.order:
            return self
        return Germ(self.center, self.coeffs[: order + 1], self.radius, self.model)

    def with_radius(self, radius: float) -> "Germ":
        return Germ(self.center, self.coeffs, radius, self.model)

    # ------------------------------------------------------------------
    # JSON

    def to_dict(self) -> dict:
        return {
            "center": pair(self.center),
            "coeffs": [pair(c) for c in self.coeffs],
            "radius": self.radius,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Germ":
        if not isinstance(data, dict):
            raise SchemaError("germ JSON must be an object")
        try:
            return cls(
                as_complex(data["center"]),
                np.array([as_complex(c) for c in data["coeffs"]], dtype=complex),
                float(data["radius"]),
            )
        except KeyError as exc:
            raise SchemaError(f"germ JSON missing field {exc}") from exc


# ----------------------------------------------------------------------
# Taylor shift


def _taylor_shift(coeffs: np.ndarray, d: complex) -> np.ndarray:
    """Coefficients of p(u + d) given those of p(u).

    Uses the binomial matrix with log-gamma magnitudes so arbitrary orders
    stay clear of factorial overflow.
    """
    n = coeffs.size
    k = np.arange(n)
    lg = gammaln(k + 1.0)
    jj, ii = np.meshgrid(k, k)  # ii = output index, jj = input index
    diff = jj - ii
    mask = diff >= 0
    dpos = np.where(mask, diff, 0)
    logmag = lg[jj] - lg[ii] - gammaln(dpos + 1.0) + dpos * math.log(abs(d))
    rot = np.exp(1j * np.angle(d) * dpos)
    m = np.where(mask, np.exp(logmag) * rot, 0.0)
    return m @ coeffs


# ----------------------------------------------------------------------
# convolution at the origin


def _beta_weights(nj: int, nk: int) -> np.ndarray:
    """Matrix of j! k! / (j + k + 1)! computed via log-gamma differences."""
    j = np.arange(nj)[:, None]
    k = np.arange(nk)[None, :]
    return np.exp(gammaln(j + 1.0) + gammaln(k + 1.0) - gammaln(j + k + 2.0))


def beta_convolve_coeffs(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    """Coefficients of ``int_0^z f(w) g(z - w) dw`` truncated at ``order``.

    The contribution matrix is symmetrized before accumulation so swapping
    the factors yields bit-identical coefficients.
    """
    n = min(max(a.size, b.size), order)
    out = np.zeros(order + 1, dtype=complex)
    if n <= 0:
        return out
    aa = np.zeros(n, dtype=complex)
    bb = np.zeros(n, dtype=complex)
    aa[: min(a.size, n)] = a[:n]
    bb[: min(b.size, n)] = b[:n]
    # canonical operand order: vectorized complex products are not bitwise
    # commutative, and the symmetrized matrix must not depend on call order
    if bb.tobytes() < aa.tobytes():
        aa, bb = bb, aa
    w = _beta_weights(n, n)
    prod = np.outer(aa, bb) * w
    prod = 0.5 * (prod + prod.T)
    j = np.arange(n)[:, None]
    k = np.arange(n)[None, :]
    idx = (j + k + 1).ravel()
    sel = idx <= order
    np.add.at(out, idx[sel], prod.ravel()[sel])
    return out


def convolve_at_origin(phi: Germ, psi: Germ, order: int = DEFAULT_ORDER) -> Germ:
    """Convolution product of two germs at the origin.

    The coefficient of ``z**(j+k+1)`` receives ``a_j b_k j! k! / (j+k+1)!``;
    the certified radius is the smaller of the input radii.
    """
    if abs(phi.center) > _CENTER_TOL or abs(psi.center) > _CENTER_TOL:
        raise CenterMismatchError("convolution at the origin needs centers 0")
    coeffs = beta_convolve_coeffs(phi.coeffs, psi.coeffs, order)
    return Germ(0j, coeffs, min(phi.radius, psi.radius))


# ----------------------------------------------------------------------
# named germs

_NAMED_RE = re.compile(r"^(?P<name>[a-zA-Z_][a-zA-Z0-9_]*)(?:\((?P<args>.*)\))?$")


def named_germ(literal: str, order: int = DEFAULT_ORDER) -> Germ:
    """Builtin germ literals.

    ``one``          constant 1 (entire)
    ``geom(w)``      1 / (z - w) expanded at 0, radius |w|
    ``log1m(w)``     log(1 - z / w) expanded at 0, radius |w|
    ``poly(c0,...)`` polynomial with the given coefficients (entire)
    """
    m = _NAMED_RE.match(literal.strip())
    if not m:
        raise SchemaError(f"bad germ literal {literal!r}")
    name = m.group("name")
    args = m.group("args")
    if name == "one":
        return Germ(0j, np.array([1.0 + 0j]), ENTIRE_RADIUS)
    if name == "geom":
        w = parse_complex(args)
        if w == 0:
            raise SchemaError("geom pole must be nonzero")
        return pole_germ(w, order)
    if name == "log1m":
        w = parse_complex(args)
        if w == 0:
            raise SchemaError("log1m pole must be nonzero")
        coeffs = np.zeros(order + 1, dtype=complex)
        inv_powers = np.cumprod(np.full(order, 1.0 / w, dtype=complex))
        coeffs[1:] = -inv_powers / np.arange(1, order + 1)
        model = AnalyticModel.log_pole(w, cmath.log(-w)).plus(
            AnalyticModel.constant(-cmath.log(-w))
        )
        return Germ(0j, coeffs, abs(w), model)
    if name == "poly":
        cs = [parse_complex(x) for x in args.split(",")] if args else [0.0]
        return Germ(0j, np.array(cs, dtype=complex), ENTIRE_RADIUS)
    raise SchemaError(f"unknown named germ {name!r}")


def pole_germ(omega: complex, order: int = DEFAULT_ORDER) -> Germ:
    """Germ of 1 / (z - omega) at the origin, with its analytic model."""
    w = complex(omega)
    inv_powers = np.cumprod(np.full(order + 1, 1.0 / w, dtype=complex))
    return Germ(0j, -inv_powers, abs(w), AnalyticModel.pole(w))


def log_pole_germ(omega: complex, order: int = DEFAULT_ORDER) -> Germ:
    """Germ of log(z - omega) at the origin, principal branch value there."""
    w = complex(omega)
    value = cmath.log(-w)
    model = AnalyticModel.log_pole(w, value)
    return Germ(0j, model.coeffs_at(0j, order), abs(w), model)
