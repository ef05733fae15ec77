"""Piecewise-C1 paths in the plane: evaluation, truncation, winding numbers,
certified clearance from a singular set, and the zero-set segmentation that
drives the staged homotopy construction.

Paths are reparametrized to [0, 1] on ingestion, with each piece receiving a
parameter share proportional to its arclength, so |gamma'| is roughly the
total length everywhere.  Instances are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import as_complex, pair
from .errors import PathDomainError, PathGeometryError, SchemaError
from .omega import OmegaSet

__all__ = [
    "PiecewisePath",
    "Segmentation",
    "clearance",
    "winding_number",
    "segment_around_zeros",
]

_JUNCTION_TOL = 1e-12


# ----------------------------------------------------------------------
# pieces


@dataclass(frozen=True)
class _Segment:
    start: complex
    end: complex

    def point(self, u):
        return self.start + np.asarray(u) * (self.end - self.start)

    def velocity(self, u):
        return np.full(np.shape(u), self.end - self.start, dtype=complex)

    def length(self):
        return abs(self.end - self.start)

    def slice(self, u0, u1):
        return _Segment(complex(self.point(u0)), complex(self.point(u1)))

    def to_dict(self):
        return {"kind": "segment", "from": pair(self.start), "to": pair(self.end)}


@dataclass(frozen=True)
class _Arc:
    center: complex
    radius: float
    angle0: float
    angle1: float

    def point(self, u):
        ang = self.angle0 + np.asarray(u) * (self.angle1 - self.angle0)
        return self.center + self.radius * np.exp(1j * ang)

    def velocity(self, u):
        ang = self.angle0 + np.asarray(u) * (self.angle1 - self.angle0)
        return 1j * (self.angle1 - self.angle0) * self.radius * np.exp(1j * ang)

    def length(self):
        return abs(self.angle1 - self.angle0) * self.radius

    def slice(self, u0, u1):
        a0 = self.angle0 + u0 * (self.angle1 - self.angle0)
        a1 = self.angle0 + u1 * (self.angle1 - self.angle0)
        return _Arc(self.center, self.radius, a0, a1)

    def to_dict(self):
        return {
            "kind": "arc",
            "center": pair(self.center),
            "radius": self.radius,
            "from_angle": self.angle0,
            "to_angle": self.angle1,
        }


class _Samples:
    """Catmull-Rom interpolation through a dense point table."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=complex)
        if pts.size < 2:
            raise SchemaError("sampled piece needs at least two points")
        self.points = pts
        d = np.empty(pts.size, dtype=complex)
        d[1:-1] = (pts[2:] - pts[:-2]) / 2.0
        d[0] = pts[1] - pts[0]
        d[-1] = pts[-1] - pts[-2]
        self.tangents = d  # derivative w.r.t. the cell index

    def _locate(self, u):
        u = np.asarray(u, dtype=float)
        x = u * (self.points.size - 1)
        i = np.clip(np.floor(x).astype(int), 0, self.points.size - 2)
        return i, x - i

    def point(self, u):
        i, w = self._locate(u)
        p0, p1 = self.points[i], self.points[i + 1]
        m0, m1 = self.tangents[i], self.tangents[i + 1]
        h00 = 2 * w**3 - 3 * w**2 + 1
        h10 = w**3 - 2 * w**2 + w
        h01 = -2 * w**3 + 3 * w**2
        h11 = w**3 - w**2
        return h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1

    def velocity(self, u):
        i, w = self._locate(u)
        p0, p1 = self.points[i], self.points[i + 1]
        m0, m1 = self.tangents[i], self.tangents[i + 1]
        d00 = 6 * w**2 - 6 * w
        d10 = 3 * w**2 - 4 * w + 1
        d01 = -6 * w**2 + 6 * w
        d11 = 3 * w**2 - 2 * w
        return (d00 * p0 + d10 * m0 + d01 * p1 + d11 * m1) * (self.points.size - 1)

    def length(self):
        return float(np.sum(np.abs(np.diff(self.points))))

    def slice(self, u0, u1):
        n = max(int(math.ceil((u1 - u0) * (self.points.size - 1))) + 2, 2)
        u = np.linspace(u0, u1, n)
        return _Samples(self.point(u))

    def to_dict(self):
        return {"kind": "samples", "points": [pair(p) for p in self.points]}


# ----------------------------------------------------------------------
# path


class PiecewisePath:
    """Piecewise-C1 curve with derivative access and truncation.

    The natural domain after construction is [0, 1]; restriction produces
    paths on subintervals with identical values.
    """

    def __init__(self, pieces, breaks=None, domain=(0.0, 1.0)):
        if not pieces:
            raise SchemaError("path needs at least one piece")
        self._pieces = tuple(pieces)
        if breaks is None:
            lengths = np.array([max(p.length(), 1e-12) for p in pieces])
            breaks = np.concatenate([[0.0], np.cumsum(lengths) / lengths.sum()])
            breaks[-1] = 1.0
        self._breaks = np.asarray(breaks, dtype=float)
        if self._breaks.size != len(pieces) + 1:
            raise SchemaError("breaks must bracket every piece")
        self._domain = (float(domain[0]), float(domain[1]))
        for k in range(len(pieces) - 1):
            a = complex(np.asarray(pieces[k].point(1.0)))
            b = complex(np.asarray(pieces[k + 1].point(0.0)))
            if abs(a - b) > 1e-9:
                raise PathGeometryError(
                    f"pieces {k} and {k + 1} are discontinuous: {a} vs {b}"
                )

    # -- basic accessors -------------------------------------------------

    @property
    def domain(self) -> tuple[float, float]:
        return self._domain

    @property
    def start(self) -> complex:
        return self.eval(self._domain[0])

    @property
    def end(self) -> complex:
        return self.eval(self._domain[1])

    def length(self) -> float:
        t = np.linspace(self._domain[0], self._domain[1], 2049)
        return float(np.sum(np.abs(np.diff(self.eval_many(t)))))

    def _check_domain(self, t) -> None:
        a, b = self._domain
        tmin = float(np.min(t))
        tmax = float(np.max(t))
        if tmin < a - 1e-12 or tmax > b + 1e-12:
            raise PathDomainError(f"t in [{tmin}, {tmax}] outside domain [{a}, {b}]")

    def _locate(self, t):
        t = np.clip(np.asarray(t, dtype=float), self._domain[0], self._domain[1])
        idx = np.searchsorted(self._breaks, t, side="right") - 1
        idx = np.clip(idx, 0, len(self._pieces) - 1)
        return t, idx

    def eval_many(self, t) -> np.ndarray:
        self._check_domain(t)
        t, idx = self._locate(t)
        out = np.empty(t.shape, dtype=complex)
        for k in np.unique(idx):
            sel = idx == k
            lo, hi = self._breaks[k], self._breaks[k + 1]
            u = (t[sel] - lo) / (hi - lo)
            out[sel] = self._pieces[k].point(u)
        return out

    def eval(self, t: float) -> complex:
        return complex(self.eval_many(np.array([t]))[0])

    def derivative_many(self, t) -> np.ndarray:
        self._check_domain(t)
        t, idx = self._locate(t)
        out = np.empty(t.shape, dtype=complex)
        for k in np.unique(idx):
            sel = idx == k
            lo, hi = self._breaks[k], self._breaks[k + 1]
            u = (t[sel] - lo) / (hi - lo)
            out[sel] = self._pieces[k].velocity(u) / (hi - lo)
        return out

    def derivative(self, t: float) -> complex:
        return complex(self.derivative_many(np.array([t]))[0])

    # -- restriction -----------------------------------------------------

    def restrict(self, a: float, b: float) -> "PiecewisePath":
        """Restriction to [a, b] with the same parametrization."""
        lo, hi = self._domain
        if not (lo - 1e-12 <= a <= b <= hi + 1e-12):
            raise PathDomainError(f"[{a}, {b}] not inside [{lo}, {hi}]")
        return PiecewisePath(self._pieces, self._breaks, (a, b))

    def truncate(self, s: float) -> "PiecewisePath":
        """Restriction of the path to [start, s]."""
        return self.restrict(self._domain[0], s)

    def extended_by_segment(self, target: complex, new_end: float) -> "PiecewisePath":
        """Append a straight segment from the endpoint, keeping parametrization."""
        a, b = self._domain
        if not new_end > b:
            raise PathDomainError("extension must lengthen the domain")
        endpoint = self.eval(b)
        seg = _Segment(endpoint, complex(target))
        # place the new piece on [b, new_end] in the existing break scale
        pieces = self._pieces + (seg,)
        breaks = np.concatenate([self._breaks, [self._breaks[-1]]])
        # breaks live on the original [0, 1] scale; extend proportionally
        span = self._breaks[-1] - self._breaks[0]
        scale = span / (b - a) if b > a else 1.0
        breaks[-1] = self._breaks[-1] + (new_end - b) * scale
        return PiecewisePath(pieces, breaks, (a, new_end))

    # -- constructors ------------------------------------------------------

    @classmethod
    def segment(cls, start: complex, end: complex) -> "PiecewisePath":
        return cls([_Segment(complex(start), complex(end))])

    @classmethod
    def arc(
        cls, center: complex, radius: float, from_angle: float, to_angle: float
    ) -> "PiecewisePath":
        return cls([_Arc(complex(center), float(radius), from_angle, to_angle)])

    @classmethod
    def circle(cls, center: complex, radius: float, base_angle: float = 0.0) -> "PiecewisePath":
        return cls.arc(center, radius, base_angle, base_angle + 2 * math.pi)

    @classmethod
    def polyline(cls, points) -> "PiecewisePath":
        pts = [complex(p) for p in points]
        if len(pts) < 2:
            raise SchemaError("polyline needs at least two points")
        return cls([_Segment(a, b) for a, b in zip(pts[:-1], pts[1:])])

    @classmethod
    def from_samples(cls, points) -> "PiecewisePath":
        return cls([_Samples(points)])

    @classmethod
    def concatenate(cls, *paths: "PiecewisePath") -> "PiecewisePath":
        pieces = []
        for p in paths:
            a, b = p.domain
            if (a, b) != (0.0, 1.0):
                p = PiecewisePath(
                    [pc.slice(*_clip_unit(p, k)) for k, pc in enumerate(p._pieces) if _overlaps(p, k)]
                )
            pieces.extend(p._pieces)
        return cls(pieces)

    # -- JSON --------------------------------------------------------------

    def to_dict(self) -> dict:
        return {"pieces": [p.to_dict() for p in self._pieces]}

    @classmethod
    def from_dict(cls, data: dict) -> "PiecewisePath":
        if not isinstance(data, dict) or "pieces" not in data:
            raise SchemaError("path JSON must be an object with 'pieces'")
        pieces = []
        for item in data["pieces"]:
            kind = item.get("kind")
            if kind == "segment":
                pieces.append(_Segment(as_complex(item["from"]), as_complex(item["to"])))
            elif kind == "arc":
                pieces.append(
                    _Arc(
                        as_complex(item["center"]),
                        float(item["radius"]),
                        float(item["from_angle"]),
                        float(item["to_angle"]),
                    )
                )
            elif kind == "samples":
                pieces.append(_Samples([as_complex(p) for p in item["points"]]))
            else:
                raise SchemaError(f"unknown piece kind {kind!r}")
        return cls(pieces)

    def piece_breaks(self) -> np.ndarray:
        """Junction parameters clipped to the current domain."""
        a, b = self._domain
        inner = self._breaks[(self._breaks > a + 1e-15) & (self._breaks < b - 1e-15)]
        return np.concatenate([[a], inner, [b]])

    def min_speed(self, n: int = 2048) -> float:
        t = np.linspace(self._domain[0], self._domain[1], n)
        return float(np.min(np.abs(self.derivative_many(t))))


def _overlaps(path, k):
    a, b = path.domain
    return path._breaks[k + 1] > a and path._breaks[k] < b


def _clip_unit(path, k):
    a, b = path.domain
    lo, hi = path._breaks[k], path._breaks[k + 1]
    u0 = min(max((a - lo) / (hi - lo), 0.0), 1.0)
    u1 = min(max((b - lo) / (hi - lo), 0.0), 1.0)
    return u0, u1


# ----------------------------------------------------------------------
# clearance


def clearance(path: PiecewisePath, omega: OmegaSet, n_samples: int = 10_000) -> float:
    """Certified lower bound on dist(omega, path).

    Samples the distance and subtracts the Lipschitz correction
    max|gamma'| * step / 2, so the result is a true lower bound (clamped
    at zero).
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    a, b = path.domain
    t = np.linspace(a, b, n_samples)
    pts = path.eval_many(t)
    dist = omega.distance_many(pts)
    speed = np.abs(path.derivative_many(t))
    step = (b - a) / (n_samples - 1)
    bound = float(np.min(dist)) - float(np.max(speed)) * step / 2.0
    return max(bound, 0.0)


# ----------------------------------------------------------------------
# winding number


def winding_number(loop: PiecewisePath, p: complex, n_samples: int = 4096) -> int:
    """Winding number of a closed path around ``p`` by argument accumulation.

    Rejects points on the curve and pre-rounding values farther than 0.1
    from an integer.
    """
    a, b = loop.domain
    if abs(loop.eval(a) - loop.eval(b)) > 1e-9:
        raise PathGeometryError("winding number needs a closed path")
    n = max(n_samples, 64)
    for _ in range(8):
        t = np.linspace(a, b, n)
        rel = loop.eval_many(t) - p
        if float(np.min(np.abs(rel))) < 1e-12:
            raise PathGeometryError("point lies on the curve")
        steps = np.angle(rel[1:] / rel[:-1])
        if float(np.max(np.abs(steps))) < math.pi / 2:
            total = float(np.sum(steps)) / (2 * math.pi)
            nearest = round(total)
            if abs(total - nearest) > 0.1:
                raise PathGeometryError(
                    f"winding accumulation {total:.4f} too far from an integer"
                )
            return int(nearest)
        n *= 2
    raise PathGeometryError("winding sampling did not resolve the loop")


# ----------------------------------------------------------------------
# segmentation around the zeros of a path


@dataclass(frozen=True)
class Segmentation:
    """Partition of the domain isolating the times where the path hits 0.

    ``intervals`` alternates J0, K1, J1, ..., KN, JN; the path stays inside
    the closed disk of radius eps/2 on every K and off 0 on every J.
    """

    zero_times: tuple[float, ...]
    intervals: tuple[tuple[str, float, float], ...]
    delta: float
    delta0: float
    epsilon: float

    @property
    def n_zeros(self) -> int:
        return len(self.zero_times)


def _refine_zero(path: PiecewisePath, lo: float, hi: float) -> float:
    """Bisection on d|path|^2/dt between bracketing samples."""

    def slope(t):
        return (np.conj(path.eval(t)) * path.derivative(t)).real

    slo = slope(lo)
    for _ in range(200):
        if hi - lo <= 1e-14:
            break
        mid = 0.5 * (lo + hi)
        sm = slope(mid)
        if sm == 0.0:
            return mid
        if (sm > 0) == (slo > 0):
            lo, slo = mid, sm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _find_zero_times(path: PiecewisePath, n0: int) -> list[float]:
    a, b = path.domain
    t = np.linspace(a, b, n0)
    mod = np.abs(path.eval_many(t))
    speed = np.abs(path.derivative_many(t))
    lip = float(np.max(speed))
    step = (b - a) / (n0 - 1)
    reach = lip * step
    zeros: list[float] = []
    for k in range(n0 - 1):
        if min(mod[k], mod[k + 1]) > reach:
            continue
        lo = t[max(k - 1, 0)]
        hi = t[min(k + 2, n0 - 1)]
        tz = _refine_zero(path, lo, hi)
        if abs(path.eval(tz)) > 1e-9:
            continue
        if zeros and abs(tz - zeros[-1]) <= 1e-7:
            continue  # same zero re-found from the next bracket
        if zeros and tz - zeros[-1] < 4 * step:
            raise PathGeometryError("two zeros closer than the sampling resolution")
        zeros.append(tz)
    return zeros


def _level_crossing(path, lo, hi, level):
    """t in [lo, hi] with |path(t)| = level, assuming a sign change."""
    flo = abs(path.eval(lo)) - level
    for _ in range(200):
        if hi - lo <= 1e-14:
            break
        mid = 0.5 * (lo + hi)
        fm = abs(path.eval(mid)) - level
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def segment_around_zeros(
    path: PiecewisePath,
    omega: OmegaSet,
    n_samples: int | None = None,
    clearance_samples: int = 10_000,
    delta0_cap: float | None = None,
) -> Segmentation:
    """Build the J/K interval decomposition of the path's domain.

    Requires a path that starts and ends off 0 with positive certified
    clearance from the singular set.  The quantities follow

        delta0 = min(delta / 2, rho - |gamma(start)|) / 2
        eps    = min(|gamma(start)|, |gamma(end)|, delta0 / (N + 1))

    with N the number of zeros.  Each K interval is the maximal interval
    around its zero on which |gamma| <= eps/2, shrunk to keep the K's
    pairwise disjoint.
    """
    a, b = path.domain
    ga, gb = path.eval(a), path.eval(b)
    rho = omega.rho()
    if abs(ga) <= 1e-12 or abs(ga) >= rho:
        raise PathGeometryError("path must start inside the punctured initial disk")
    if abs(gb) <= 1e-12:
        raise PathGeometryError("path ends at 0; extend it first")
    delta = clearance(path, omega, clearance_samples)
    if delta <= 0:
        raise PathGeometryError("path clearance from the singular set is zero")
    delta0 = 0.5 * min(delta / 2.0, rho - abs(ga))
    if delta0_cap is not None:
        delta0 = min(delta0, delta0_cap)
    length = path.length()

    n0 = n_samples or max(1000, int(math.ceil(100.0 * length / delta0)))
    zeros = _find_zero_times(path, n0)
    n = len(zeros)
    eps = min(abs(ga), abs(gb), delta0 / (n + 1))
    if n_samples is None:
        n1 = max(1000, int(math.ceil(100.0 * length / eps)))
        if n1 > n0:
            zeros = _find_zero_times(path, n1)
            n = len(zeros)
            eps = min(abs(ga), abs(gb), delta0 / (n + 1))

    if n == 0:
        return Segmentation((), (("J", a, b),), delta, delta0, eps)

    level = eps / 2.0
    raw: list[tuple[float, float]] = []
    bounds = [a] + zeros + [b]
    for j, tz in enumerate(zeros):
        lo = _level_crossing(path, bounds[j], tz, level)
        hi = _level_crossing(path, tz, bounds[j + 2], level)
        raw.append((lo, hi))
    # shrink overlapping K's to the midpoint between consecutive zeros
    ks: list[tuple[float, float]] = []
    for j, (lo, hi) in enumerate(raw):
        if j > 0:
            mid = 0.5 * (zeros[j - 1] + zeros[j])
            lo = max(lo, mid)
        if j < n - 1:
            mid = 0.5 * (zeros[j] + zeros[j + 1])
            hi = min(hi, mid)
        if not (lo < zeros[j] < hi):
            raise PathGeometryError("could not isolate a zero in its own interval")
        ks.append((lo, hi))

    intervals: list[tuple[str, float, float]] = []
    cursor = a
    for j, (lo, hi) in enumerate(ks):
        intervals.append(("J", cursor, lo))
        intervals.append(("K", lo, hi))
        cursor = hi
    intervals.append(("J", cursor, b))
    for kind, lo, hi in intervals:
        if not hi > lo:
            raise PathGeometryError("degenerate interval in segmentation")
    return Segmentation(tuple(zeros), tuple(intervals), delta, delta0, eps)
