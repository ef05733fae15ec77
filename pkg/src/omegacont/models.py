"""Closed-form regeneration of germ coefficients during continuation.

A truncated Taylor shift is exact polynomial algebra: chaining shifts can
never recover a function beyond the disk where the original truncation is
accurate.  Germs whose provenance is known therefore carry an analytic
model, a sum of terms ``weight * poly(z) * prod(atoms)`` where atoms are
simple poles ``1/(z - w)^m`` (single valued) and logarithms ``log(z - w)``
(branch tracked).  The walker advances the branch values with principal-log
increments, legal because every hop stays inside the certified
singularity-free disk, and regenerates machine-accurate local coefficients
at each center.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

__all__ = ["PoleAtom", "LogAtom", "ModelTerm", "AnalyticModel"]


@dataclass(frozen=True)
class PoleAtom:
    """1 / (z - omega)^power; single valued off its pole."""

    omega: complex
    power: int = 1

    def local_coeffs(self, center: complex, order: int) -> np.ndarray:
        d = center - self.omega
        if d == 0:
            raise ZeroDivisionError("expansion center sits on the pole")
        m = self.power
        k = np.arange(order + 1)
        # 1/(z-w)^m = d^-m * sum C(m-1+k, k) (-u/d)^k
        binom = np.ones(order + 1)
        for i in range(1, order + 1):
            binom[i] = binom[i - 1] * (m - 1 + i) / i
        ratio = np.cumprod(np.concatenate([[1.0 + 0j], np.full(order, -1.0 / d)]))
        return binom * ratio * d ** (-m)  # integer exponent, exact power

    def advanced(self, old_center: complex, new_center: complex) -> "PoleAtom":
        return self


@dataclass(frozen=True)
class LogAtom:
    """log(z - omega) with the branch pinned by its value at the center."""

    omega: complex
    value: complex

    def local_coeffs(self, center: complex, order: int) -> np.ndarray:
        d = center - self.omega
        if d == 0:
            raise ZeroDivisionError("expansion center sits on the branch point")
        out = np.empty(order + 1, dtype=complex)
        out[0] = self.value
        if order >= 1:
            k = np.arange(1, order + 1)
            # log(z-w) = value + sum (-1)^(k-1) u^k / (k d^k)
            ratio = np.cumprod(np.full(order, 1.0 / d, dtype=complex))
            out[1:] = (-1.0) ** (k - 1) * ratio / k
        return out

    def advanced(self, old_center: complex, new_center: complex) -> "LogAtom":
        num = new_center - self.omega
        den = old_center - self.omega
        return LogAtom(self.omega, self.value + cmath.log(num / den))


@dataclass(frozen=True)
class ModelTerm:
    weight: complex
    poly: tuple = ()  # polynomial factor, coefficients at 0 (entire, exact)
    atoms: tuple = ()

    def local_coeffs(self, center: complex, order: int) -> np.ndarray:
        out = np.zeros(order + 1, dtype=complex)
        out[0] = 1.0
        if self.poly:
            shifted = _shift_poly(np.asarray(self.poly, dtype=complex), center)
            out = _trunc_mul(out, shifted, order)
        for atom in self.atoms:
            out = _trunc_mul(out, atom.local_coeffs(center, order), order)
        return self.weight * out

    def advanced(self, old_center, new_center) -> "ModelTerm":
        return ModelTerm(
            self.weight,
            self.poly,
            tuple(a.advanced(old_center, new_center) for a in self.atoms),
        )


@dataclass(frozen=True)
class AnalyticModel:
    terms: tuple

    def coeffs_at(self, center: complex, order: int) -> np.ndarray:
        out = np.zeros(order + 1, dtype=complex)
        for term in self.terms:
            out += term.local_coeffs(center, order)
        return out

    def advanced(self, old_center, new_center) -> "AnalyticModel":
        return AnalyticModel(
            tuple(t.advanced(old_center, new_center) for t in self.terms)
        )

    def scaled(self, factor: complex) -> "AnalyticModel":
        return AnalyticModel(
            tuple(
                ModelTerm(t.weight * factor, t.poly, t.atoms) for t in self.terms
            )
        )

    def plus(self, other: "AnalyticModel") -> "AnalyticModel":
        return AnalyticModel(self.terms + other.terms)

    def times(self, other: "AnalyticModel") -> "AnalyticModel":
        terms = []
        for a in self.terms:
            for b in other.terms:
                poly = _poly_product(a.poly, b.poly)
                terms.append(
                    ModelTerm(a.weight * b.weight, poly, a.atoms + b.atoms)
                )
        return AnalyticModel(tuple(terms))

    @classmethod
    def constant(cls, value: complex) -> "AnalyticModel":
        return cls((ModelTerm(complex(value)),))

    @classmethod
    def polynomial(cls, coeffs) -> "AnalyticModel":
        return cls((ModelTerm(1.0 + 0j, tuple(complex(c) for c in coeffs)),))

    @classmethod
    def pole(cls, omega: complex, power: int = 1) -> "AnalyticModel":
        return cls((ModelTerm(1.0 + 0j, (), (PoleAtom(complex(omega), power),)),))

    @classmethod
    def log_pole(cls, omega: complex, value_at_zero: complex) -> "AnalyticModel":
        """log(z - omega) with the stated branch value at the origin."""
        return cls(
            (ModelTerm(1.0 + 0j, (), (LogAtom(complex(omega), complex(value_at_zero)),)),)
        )


def _trunc_mul(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    return np.convolve(a, b)[: order + 1]


def _poly_product(a: tuple, b: tuple) -> tuple:
    if not a:
        return b
    if not b:
        return a
    return tuple(
        np.convolve(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))
    )


def _shift_poly(coeffs: np.ndarray, center: complex) -> np.ndarray:
    out = coeffs.copy()
    n = out.size
    for k in range(n):
        for i in range(n - 2, k - 1, -1):
            out[i] = out[i] + center * out[i + 1]
    return out
