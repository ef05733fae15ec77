"""Closed discrete singular-support sets in the complex plane.

An :class:`OmegaSet` is given by a finite point list plus generator rules
(rays and lattices), never materialized: every query reduces to a bounded
enumeration.  Instances are immutable and safe for concurrent reads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import as_complex, pair
from .errors import MalformedGeneratorError, SchemaError

__all__ = ["OmegaSet", "Ray", "Lattice", "StabilityReport"]

_DEDUP_TOL = 1e-12
_ENUM_LIMIT = 20_000_000  # guard against runaway generator boxes
DEFAULT_POINT_TOL = 1e-9


@dataclass(frozen=True)
class Ray:
    """Points ``base + k*step`` for integer ``k >= 0``.

    The base point itself belongs to the set, so ``Ray(1, 1)`` is the
    positive integers.
    """

    base: complex
    step: complex

    def __post_init__(self):
        if abs(self.step) < 1e-15:
            raise MalformedGeneratorError("ray step must be nonzero")


@dataclass(frozen=True)
class Lattice:
    """Points ``base + m*p1 + n*p2`` for integers m, n.

    ``p2 = 0`` selects a one-dimensional lattice.  Nonzero parallel periods
    are rejected: they can generate a non-discrete set.
    """

    base: complex
    p1: complex
    p2: complex = 0j

    def __post_init__(self):
        a, b = self.p1, self.p2
        if abs(a) < 1e-15 and abs(b) >= 1e-15:
            a, b = b, a
            object.__setattr__(self, "p1", a)
            object.__setattr__(self, "p2", b)
        if abs(a) < 1e-15:
            raise MalformedGeneratorError("lattice needs a nonzero period")
        if abs(b) >= 1e-15:
            det = a.real * b.imag - a.imag * b.real
            if abs(det) < 1e-12 * abs(a) * abs(b):
                raise MalformedGeneratorError(
                    "parallel lattice periods; use p2 = 0 for a 1-D lattice"
                )

    def reduced_basis(self) -> tuple[complex, complex]:
        """Lagrange-reduced basis (shortest vectors) for a 2-D lattice."""
        a, b = self.p1, self.p2
        if abs(b) < 1e-15:
            return a, 0j
        if abs(a) < abs(b):
            a, b = b, a
        # Gauss reduction: |b| <= |a| and |proj coefficient| <= 1/2
        for _ in range(64):
            mu = round((a.real * b.real + a.imag * b.imag) / abs(b) ** 2)
            a = a - mu * b
            if abs(a) >= abs(b) * (1.0 - 1e-15):
                break
            a, b = b, a
        return b, a  # |b| <= |a|


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of the finite-window addition-stability check."""

    stable: bool
    window: float
    witness: tuple[complex, complex] | None = None
    witness_sum: complex | None = None

    def __bool__(self):
        return self.stable


class OmegaSet:
    """Non-empty closed discrete subset of the plane with geometric queries."""

    def __init__(self, finite=(), generators=()):
        pts = [complex(p) for p in finite]
        gens = tuple(generators)
        if not pts and not gens:
            raise SchemaError("omega set must contain at least one point")
        for g in gens:
            if not isinstance(g, (Ray, Lattice)):
                raise SchemaError(f"unknown generator {g!r}")
        self._finite = np.array(pts, dtype=complex) if pts else np.zeros(0, dtype=complex)
        self._finite.flags.writeable = False
        self._generators = gens
        self._rho_cache = None

    @property
    def finite_points(self) -> np.ndarray:
        return self._finite

    @property
    def generators(self) -> tuple:
        return self._generators

    def __repr__(self):
        return f"OmegaSet(finite={list(self._finite)}, generators={list(self._generators)})"

    def __eq__(self, other):
        if not isinstance(other, OmegaSet):
            return NotImplemented
        return (
            self._finite.shape == other._finite.shape
            and np.allclose(self._finite, other._finite, atol=1e-15)
            and self._generators == other._generators
        )

    # ------------------------------------------------------------------
    # distance machinery

    def distance_many(self, z) -> np.ndarray:
        """Exact distance from each entry of ``z`` to the set (vectorized)."""
        z = np.asarray(z, dtype=complex)
        best = np.full(z.shape, np.inf)
        if self._finite.size:
            for p in self._finite:
                np.minimum(best, np.abs(z - p), out=best)
        for g in self._generators:
            np.minimum(best, _generator_distance(g, z), out=best)
        return best

    def distance(self, z: complex) -> float:
        """min over omega in the set of ``|z - omega|``."""
        return float(self.distance_many(np.array([z]))[0])

    def contains(self, z: complex, tol: float = DEFAULT_POINT_TOL) -> bool:
        if tol <= 0:
            raise ValueError("tol must be positive")
        return self.distance(z) <= tol

    # ------------------------------------------------------------------
    # enumeration

    def enumerate_in_disk(self, center: complex, radius: float) -> list[complex]:
        """All points within the closed disk, sorted by (modulus, argument)."""
        if not (radius >= 0 and math.isfinite(radius)):
            raise ValueError("radius must be finite and nonnegative")
        center = complex(center)
        cands: list[np.ndarray] = []
        if self._finite.size:
            sel = np.abs(self._finite - center) <= radius + _DEDUP_TOL
            cands.append(self._finite[sel])
        for g in self._generators:
            cands.append(_generator_enumerate(g, center, radius))
        if not cands:
            return []
        merged = np.concatenate(cands)
        merged = merged[np.abs(merged - center) <= radius + _DEDUP_TOL]
        return _dedup_sorted(merged)

    def rho(self) -> float:
        """Minimum modulus over the nonzero points of the set."""
        if self._rho_cache is not None:
            return self._rho_cache
        r = self._initial_probe_radius()
        for _ in range(80):
            pts = self.enumerate_in_disk(0j, r)
            nz = [abs(p) for p in pts if abs(p) > _DEDUP_TOL]
            if nz:
                value = min(nz)
                self._rho_cache = value
                return value
            if not self._generators and pts:
                break  # finite set reduced to {0}
            r *= 2.0
        raise ValueError("omega set has no nonzero point within reach")

    def _initial_probe_radius(self) -> float:
        scale = 1.0
        if self._finite.size:
            scale = max(scale, float(np.max(np.abs(self._finite))))
        for g in self._generators:
            if isinstance(g, Ray):
                scale = max(scale, abs(g.base) + abs(g.step))
            else:
                scale = max(scale, abs(g.base) + abs(g.p1) + abs(g.p2))
        return 2.0 * scale

    # ------------------------------------------------------------------
    # addition stability on a finite window

    def is_addition_stable_window(
        self, window: float, tol: float = DEFAULT_POINT_TOL
    ) -> StabilityReport:
        """Check ``w1 + w2 in set`` for pairs drawn from the window disk.

        Pairs are taken from the set's points of modulus <= window, and only
        sums of modulus <= window are required to land back in the set.
        Returns the first counterexample in (modulus, argument) order.
        """
        if not (window > 0 and math.isfinite(window)):
            raise ValueError("window must be positive and finite")
        pts = np.array(self.enumerate_in_disk(0j, window), dtype=complex)
        for i in range(pts.size):
            w1 = pts[i]
            sums = w1 + pts[i:]
            mask = np.abs(sums) <= window + tol
            if not mask.any():
                continue
            cand = sums[mask]
            dist = self.distance_many(cand)
            bad = np.nonzero(dist > tol)[0]
            if bad.size:
                j = int(bad[0])
                w2 = pts[i:][mask][j]
                return StabilityReport(False, window, (complex(w1), complex(w2)), complex(cand[j]))
        return StabilityReport(True, window)

    # ------------------------------------------------------------------
    # structural helpers

    def min_gap(self, probe_radius: float = 16.0) -> float:
        """Lower estimate of the minimum pairwise distance between points.

        Combines exact per-generator spacings with pairwise distances among
        the points inside the probe disk; cross-generator near misses outside
        the probe disk are not seen.
        """
        gap = math.inf
        for g in self._generators:
            if isinstance(g, Ray):
                gap = min(gap, abs(g.step))
            else:
                short, _ = g.reduced_basis()
                gap = min(gap, abs(short))
        pts = self.enumerate_in_disk(0j, probe_radius)
        arr = np.array(pts, dtype=complex)
        for i in range(arr.size - 1):
            gap = min(gap, float(np.min(np.abs(arr[i + 1 :] - arr[i]))))
        return gap

    # ------------------------------------------------------------------
    # JSON

    def to_dict(self) -> dict:
        gens = []
        for g in self._generators:
            if isinstance(g, Ray):
                gens.append({"kind": "ray", "base": pair(g.base), "step": pair(g.step)})
            else:
                gens.append(
                    {
                        "kind": "lattice",
                        "base": pair(g.base),
                        "p1": pair(g.p1),
                        "p2": pair(g.p2),
                    }
                )
        return {"finite": [pair(p) for p in self._finite], "generators": gens}

    @classmethod
    def from_dict(cls, data: dict) -> "OmegaSet":
        if not isinstance(data, dict):
            raise SchemaError("omega JSON must be an object")
        finite = [as_complex(p) for p in data.get("finite", [])]
        gens = []
        for g in data.get("generators", []):
            kind = g.get("kind")
            if kind == "ray":
                gens.append(Ray(as_complex(g["base"]), as_complex(g["step"])))
            elif kind == "lattice":
                gens.append(
                    Lattice(
                        as_complex(g["base"]),
                        as_complex(g["p1"]),
                        as_complex(g.get("p2", [0.0, 0.0])),
                    )
                )
            else:
                raise SchemaError(f"unknown generator kind {kind!r}")
        return cls(finite, gens)

    # common sets used throughout tests and docs
    @classmethod
    def positive_integers(cls) -> "OmegaSet":
        return cls(generators=[Ray(1.0, 1.0)])

    @classmethod
    def two_pi_i_lattice(cls) -> "OmegaSet":
        return cls(generators=[Lattice(0j, 2j * math.pi)])

    @classmethod
    def gauss_integers(cls) -> "OmegaSet":
        return cls(generators=[Lattice(0j, 1.0, 1j)])


# ----------------------------------------------------------------------
# generator geometry


def _generator_distance(g, z: np.ndarray) -> np.ndarray:
    if isinstance(g, Ray):
        w = (z - g.base) / g.step
        k = np.real(w)
        best = np.full(z.shape, np.inf)
        for kk in (np.floor(k), np.ceil(k)):
            kk = np.maximum(kk, 0.0)
            np.minimum(best, np.abs(z - (g.base + kk * g.step)), out=best)
        np.minimum(best, np.abs(z - g.base), out=best)
        return best
    # lattice
    u, v = g.reduced_basis()
    w = z - g.base
    if abs(v) < 1e-15:
        k = (w.real * u.real + w.imag * u.imag) / abs(u) ** 2
        best = np.full(z.shape, np.inf)
        for kk in (np.floor(k), np.ceil(k)):
            np.minimum(best, np.abs(w - kk * u), out=best)
        return best
    det = u.real * v.imag - u.imag * v.real
    a = (w.real * v.imag - w.imag * v.real) / det
    b = (u.real * w.imag - u.imag * w.real) / det
    a0 = np.round(a)
    b0 = np.round(b)
    best = np.full(z.shape, np.inf)
    for da in (-1.0, 0.0, 1.0):
        for db in (-1.0, 0.0, 1.0):
            p = (a0 + da) * u + (b0 + db) * v
            np.minimum(best, np.abs(w - p), out=best)
    return best


def _generator_enumerate(g, center: complex, radius: float) -> np.ndarray:
    if isinstance(g, Ray):
        w = (center - g.base) / g.step
        q = radius / abs(g.step)
        disc = q * q - w.imag**2
        if disc < 0:
            return np.zeros(0, dtype=complex)
        half = math.sqrt(disc)
        kmin = max(0, math.ceil(w.real - half - 1e-12))
        kmax = math.floor(w.real + half + 1e-12)
        if kmax < kmin:
            return np.zeros(0, dtype=complex)
        if kmax - kmin > _ENUM_LIMIT:
            raise MalformedGeneratorError("ray enumeration too large")
        k = np.arange(kmin, kmax + 1)
        return g.base + k * g.step
    u, v = g.reduced_basis()
    w = center - g.base
    if abs(v) < 1e-15:
        proj = (w.real * u.real + w.imag * u.imag) / abs(u) ** 2
        half = radius / abs(u) + 1.0
        kmin = math.ceil(proj - half)
        kmax = math.floor(proj + half)
        if kmax - kmin > _ENUM_LIMIT:
            raise MalformedGeneratorError("lattice enumeration too large")
        k = np.arange(kmin, kmax + 1)
        pts = g.base + k * u
        return pts[np.abs(pts - center) <= radius + _DEDUP_TOL]
    mat = np.array([[u.real, v.real], [u.imag, v.imag]])
    sig = np.linalg.svd(mat, compute_uv=False)
    smin = sig[-1]
    a0, b0 = np.linalg.solve(mat, np.array([w.real, w.imag]))
    half = radius / smin + 1.0
    na = (math.floor(a0 - half), math.ceil(a0 + half))
    nb = (math.floor(b0 - half), math.ceil(b0 + half))
    count = (na[1] - na[0] + 1) * (nb[1] - nb[0] + 1)
    if count > _ENUM_LIMIT:
        raise MalformedGeneratorError("lattice enumeration too large")
    aa, bb = np.meshgrid(
        np.arange(na[0], na[1] + 1), np.arange(nb[0], nb[1] + 1), indexing="ij"
    )
    pts = g.base + aa.ravel() * u + bb.ravel() * v
    return pts[np.abs(pts - center) <= radius + _DEDUP_TOL]


def _dedup_sorted(points: np.ndarray) -> list[complex]:
    if points.size == 0:
        return []
    mod = np.abs(points)
    ang = np.angle(points)
    order = np.lexsort((ang, mod))
    pts = points[order]
    seen: dict[tuple[int, int], complex] = {}
    out: list[complex] = []
    inv = 1.0 / _DEDUP_TOL
    for p in pts:
        key = (round(p.real * inv), round(p.imag * inv))
        dup = False
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                q = seen.get((key[0] + dx, key[1] + dy))
                if q is not None and abs(q - p) <= _DEDUP_TOL:
                    dup = True
                    break
            if dup:
                break
        if not dup:
            seen[key] = p
            out.append(complex(p))
    return out
