"""Analytic continuation of germs along paths by disc chaining.

The walker recenters the current truncated series along the path with hops
bounded by 0.4 of the certified radius, refreshing the radius at each new
center: while the traversed prefix is still inside the half initial disk the
refresh floor is half the minimal modulus of the nonzero singular points,
afterwards it is the distance from the new center to the singular set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    GermDomainError,
    PathTouchesOmegaError,
    RadiusCollapseError,
    ShiftTooLargeError,
    StepFailureError,
    TailAccuracyError,
)
from .germs import Germ, TAIL_TOL
from .omega import OmegaSet
from .paths import PiecewisePath

__all__ = ["ContinuationResult", "continue_along", "continue_with_stops", "monodromy_delta"]

RADIUS_FLOOR = 1e-6
_MAX_STEPS = 200_000


@dataclass
class ContinuationResult:
    final_germ: Germ
    trace: list[tuple[float, complex, float]] = field(default_factory=list)
    status: str = "converged"


def _effective_rho(omega: OmegaSet, phi: Germ) -> float:
    try:
        return omega.rho()
    except ValueError:
        return phi.radius


def _certify_path(path: PiecewisePath, omega: OmegaSet, rho: float, n: int = 4096):
    """Check the path off the singular set beyond the initial half disk."""
    a, b = path.domain
    if b - a <= 0:
        return
    t = np.linspace(a, b, n)
    pts = path.eval_many(t)
    speed = np.abs(path.derivative_many(t))
    step = (b - a) / (n - 1)
    lip = float(np.max(speed)) * step / 2.0
    inside = np.abs(pts) <= rho / 2.0
    exited = np.logical_not(inside)
    if not exited.any():
        return
    first = int(np.argmax(exited))
    dist = omega.distance_many(pts[first:])
    bad = np.nonzero(dist - lip <= 0.0)[0]
    if bad.size:
        t_bad = float(t[first + bad[0]])
        raise PathTouchesOmegaError(
            f"path clearance is zero at t={t_bad:.6g}", t=t_bad
        )


class _Walker:
    """Marches a germ along a path, recentering adaptively."""

    def __init__(self, phi, path, omega, rho, tail_tol, radius_floor, probe_tol):
        self.path = path
        self.omega = omega
        self.rho = rho
        self.tail_tol = tail_tol
        self.radius_floor = radius_floor
        self.probe_tol = probe_tol
        a, _ = path.domain
        self.t = a
        start = path.eval(a)
        self.in_disk = abs(start) <= rho / 2.0
        germ = self._seed(phi, start)
        self.germ = self._refresh(germ)
        self.trace = [(self.t, self.germ.center, self.germ.radius)]
        self.steps = 0

    def _seed(self, phi, start) -> Germ:
        if abs(phi.center - start) <= 1e-12:
            return Germ(start, phi.coeffs, phi.radius, phi.model)
        if abs(phi.center - start) <= 0.5 * phi.radius:
            return phi.regenerated(start)
        raise GermDomainError(
            f"germ at {phi.center} cannot reach path start {start}; "
            "continue it there first"
        )

    def _refresh(self, germ: Germ) -> Germ:
        if self.in_disk:
            floor = self.rho / 2.0
        else:
            floor = self.omega.distance(germ.center)
        radius = max(germ.radius, floor)
        if radius < self.radius_floor:
            raise RadiusCollapseError(
                f"radius {radius:.3g} collapsed at t={self.t:.6g}",
                t=self.t,
                trace=self.trace if hasattr(self, "trace") else [],
            )
        return germ.with_radius(radius)

    def advance_to(self, t_target: float) -> Germ:
        """March until ``t_target`` and return the germ centered there."""
        while self.t < t_target - 1e-15:
            self._step(t_target)
        return self.germ

    def _step(self, t_limit: float):
        if self.steps > _MAX_STEPS:
            raise StepFailureError("continuation exceeded the step budget")
        g = self.germ
        speed = abs(self.path.derivative(self.t)) + 1e-30
        dt = min(0.4 * g.radius / speed, t_limit - self.t)
        dt = max(dt, 1e-15)
        span = t_limit - self.t
        for _ in range(60):
            t2 = min(self.t + dt, t_limit)
            c2 = self.path.eval(t2)
            hop = abs(c2 - g.center)
            if hop > 0.45 * g.radius:
                dt *= 0.5
                continue
            try:
                g2 = g.regenerated(c2)
                if hop > 0:
                    mid = 0.5 * (g.center + c2)
                    v1 = g.eval(mid, tail_tol=self.tail_tol)
                    v2 = g2.eval(mid, tail_tol=self.tail_tol)
                    if abs(v1 - v2) > self.probe_tol * max(1.0, abs(v1)):
                        raise TailAccuracyError("recentering consistency probe")
            except (TailAccuracyError, ShiftTooLargeError):
                dt *= 0.5
                if dt < 1e-12 * max(span, 1.0):
                    raise StepFailureError(
                        f"step collapsed near t={self.t:.6g}"
                    ) from None
                continue
            break
        else:
            raise StepFailureError(f"no admissible step at t={self.t:.6g}")
        if self.in_disk:
            probe = self.path.eval_many(np.linspace(self.t, t2, 8))
            if np.any(np.abs(probe) > self.rho / 2.0):
                self.in_disk = False
        self.t = t2
        self.germ = self._refresh(g2)
        self.trace.append((self.t, self.germ.center, self.germ.radius))
        self.steps += 1


def continue_along(
    phi: Germ,
    path: PiecewisePath,
    omega: OmegaSet,
    *,
    tail_tol: float = TAIL_TOL,
    radius_floor: float = RADIUS_FLOOR,
    probe_tol: float = 1e-8,
    certify: bool = True,
) -> ContinuationResult:
    """Continue ``phi`` along ``path``, returning the germ at the endpoint.

    The path interior must avoid the singular set; this is certified by
    sampling with a Lipschitz correction on the part of the path beyond the
    initial half disk (the part inside is harmless while it has not yet
    been left).
    """
    rho = _effective_rho(omega, phi)
    if certify:
        _certify_path(path, omega, rho)
    walker = _Walker(phi, path, omega, rho, tail_tol, radius_floor, probe_tol)
    germ = walker.advance_to(path.domain[1])
    return ContinuationResult(germ, walker.trace)


def continue_with_stops(
    phi: Germ,
    path: PiecewisePath,
    omega: OmegaSet,
    stops,
    *,
    tail_tol: float = TAIL_TOL,
    radius_floor: float = RADIUS_FLOOR,
    probe_tol: float = 1e-8,
    certify: bool = True,
) -> list[Germ]:
    """Continue ``phi`` along ``path`` and snapshot germs at given parameters.

    ``stops`` must be nondecreasing values in the path domain.  The germ
    returned for each stop is centered exactly at ``path.eval(stop)``.
    """
    a, b = path.domain
    stops = list(stops)
    if any(s1 > s2 + 1e-15 for s1, s2 in zip(stops, stops[1:])):
        raise ValueError("stops must be nondecreasing")
    if stops and (stops[0] < a - 1e-12 or stops[-1] > b + 1e-12):
        raise ValueError("stops outside the path domain")
    rho = _effective_rho(omega, phi)
    if certify:
        _certify_path(path, omega, rho)
    walker = _Walker(phi, path, omega, rho, tail_tol, radius_floor, probe_tol)
    out = []
    for s in stops:
        s = min(max(s, a), b)
        germ = walker.advance_to(s)
        center = path.eval(s)
        if abs(germ.center - center) > 1e-15:
            germ = walker._refresh(germ.regenerated(center))
        out.append(germ)
    return out


def monodromy_delta(
    phi: Germ,
    around: complex,
    base: complex,
    omega: OmegaSet,
    *,
    loop_radius: float | None = None,
    **kwargs,
) -> Germ:
    """Germ difference produced by one counterclockwise loop around a point.

    Continues ``phi`` from its own center to ``base`` along a straight
    segment, then around the circle centered at ``around``, and returns
    (germ after loop) - (germ before loop) at ``base``.
    """
    around = complex(around)
    base = complex(base)
    if abs(base - around) < 1e-12:
        raise ValueError("base must differ from the loop center")
    if loop_radius is None:
        rest = _distance_to_others(omega, around)
        loop_radius = min(0.5 * rest, 0.5)
    direction = (base - around) / abs(base - around)
    p = around + loop_radius * direction
    if abs(phi.center - base) <= 1e-12:
        g0 = Germ(base, phi.coeffs, phi.radius, phi.model)
        g0 = continue_along(g0, PiecewisePath.segment(base, base), omega, **kwargs).final_germ
    else:
        g0 = continue_along(
            phi, PiecewisePath.segment(phi.center, base), omega, **kwargs
        ).final_germ
    base_angle = math.atan2(p.imag - around.imag, p.real - around.real)
    loop = PiecewisePath.concatenate(
        PiecewisePath.segment(base, p),
        PiecewisePath.circle(around, loop_radius, base_angle),
        PiecewisePath.segment(p, base),
    )
    g1 = continue_along(g0, loop, omega, **kwargs).final_germ
    return g1.subtract(g0)


def _distance_to_others(omega: OmegaSet, w: complex) -> float:
    """Distance from ``w`` to the singular set with ``w`` itself removed."""
    r = 1.0
    for _ in range(40):
        pts = [p for p in omega.enumerate_in_disk(w, r) if abs(p - w) > 1e-9]
        if pts:
            return min(abs(p - w) for p in pts)
        r *= 2.0
        if r > 1e9:
            break
    return math.inf
