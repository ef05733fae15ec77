import math

import numpy as np
import pytest
from scipy.integrate import quad

from omegacont import (
    OmegaSet,
    PiecewisePath,
    continue_along,
    continue_with_stops,
    monodromy_delta,
    named_germ,
)
from omegacont.errors import PathTouchesOmegaError, RadiusCollapseError
from omegacont.germs import log_pole_germ, pole_germ


def quad_complex(f, a, b):
    re = quad(lambda t: f(t).real, a, b, limit=400)[0]
    im = quad(lambda t: f(t).imag, a, b, limit=400)[0]
    return complex(re, im)


def residue_circle_integral(center, radius, pole, n=20000):
    """Quadrature oracle for the counterclockwise loop integral of 1/(z-pole)."""
    th = np.linspace(0.0, 2 * math.pi, n)
    z = center + radius * np.exp(1j * th)
    vals = 1j * radius * np.exp(1j * th) / (z - pole)
    return np.trapezoid(vals, th)


NEG_LOG = named_germ("log1m(1)").scale(-1.0)  # -log(1 - z)


def test_quadrature_fixes_residue_sign():
    assert abs(residue_circle_integral(1.0, 0.5, 1.0) - 2j * math.pi) < 1e-9


def test_continue_log_to_minus_one():
    oracle = quad_complex(lambda t: -1.0 / (1.0 + t), 0.0, 1.0)  # -log 2
    result = continue_along(NEG_LOG, PiecewisePath.segment(0.0, -1.0), OmegaSet([1.0]))
    assert abs(result.final_germ.coeffs[0] - oracle) < 1e-8
    assert result.status == "converged"


def test_entire_polynomial_continues_trivially():
    p = named_germ("poly(1,2,0,-0.5)")
    path = PiecewisePath.polyline([0.0, 1.5 + 2j, 3.0 - 1j])
    result = continue_along(p, path, OmegaSet([1.0]))
    assert abs(result.final_germ.coeffs[0] - p.eval(3.0 - 1j)) < 1e-10


def test_loop_around_pole_adds_constant():
    one_set = OmegaSet([1.0])
    loop = PiecewisePath.concatenate(
        PiecewisePath.segment(0.0, 0.5),
        PiecewisePath.circle(1.0, 0.5, math.pi),
        PiecewisePath.segment(0.5, 0.5),
    )
    after = continue_along(NEG_LOG, loop, one_set).final_germ
    straight = continue_along(NEG_LOG, PiecewisePath.segment(0.0, 0.5), one_set).final_germ
    diff = after.subtract(straight)
    # sign fixed by the residue quadrature oracle
    expected = -residue_circle_integral(1.0, 0.5, 1.0)
    assert abs(diff.coeffs[0] - expected) < 1e-8
    assert np.max(np.abs(diff.coeffs[1:])) < 1e-10


def test_trace_structure():
    result = continue_along(NEG_LOG, PiecewisePath.segment(0.0, -1.0), OmegaSet([1.0]))
    trace = result.trace
    assert trace[0][1] == 0.0
    assert trace[-1][1] == pytest.approx(-1.0)
    for (t0, c0, r0), (t1, c1, r1) in zip(trace, trace[1:]):
        assert t1 >= t0
        assert abs(c1 - c0) <= 0.5 * r0 * (1 + 1e-9)


def test_radius_lower_bound_along_trace():
    one_set = OmegaSet([1.0])
    path = PiecewisePath.polyline([0.0, -0.5 + 0.8j, 2.0 + 0.8j])
    result = continue_along(NEG_LOG, path, one_set)
    rho = one_set.rho()
    t = np.linspace(0, 1, 4096)
    from omegacont import clearance

    delta = clearance(path, one_set)
    floor = min(delta, rho / 2.0)
    for _, _, r in result.trace:
        assert r >= floor - 1e-9


def test_path_concatenation_matches_single_run():
    one_set = OmegaSet([1.0])
    p1 = PiecewisePath.polyline([0.0, 0.4 + 0.5j])
    p2 = PiecewisePath.polyline([0.4 + 0.5j, 1.6 + 0.5j, 1.6 - 0.3j])
    whole = PiecewisePath.polyline([0.0, 0.4 + 0.5j, 1.6 + 0.5j, 1.6 - 0.3j])
    direct = continue_along(NEG_LOG, whole, one_set).final_germ
    g_mid = continue_along(NEG_LOG, p1, one_set).final_germ
    chained = continue_along(g_mid, p2, one_set).final_germ
    assert abs(direct.coeffs[0] - chained.coeffs[0]) < 1e-8
    assert np.max(np.abs(direct.coeffs[:20] - chained.coeffs[:20])) < 1e-8


def test_reparametrization_invariance():
    one_set = OmegaSet([1.0])
    a = PiecewisePath.polyline([0.0, 0.5 + 0.6j, 2.0 + 0.2j])
    b = PiecewisePath.polyline([0.0, 0.5 + 0.6j, 1.25 + 0.4j, 2.0 + 0.2j])  # same trace
    ga = continue_along(NEG_LOG, a, one_set).final_germ
    gb = continue_along(NEG_LOG, b, one_set).final_germ
    assert abs(ga.coeffs[0] - gb.coeffs[0]) < 1e-9


def test_homotopy_invariance_same_class():
    one_set = OmegaSet([1.0])
    a = PiecewisePath.polyline([0.0, 0.3 + 0.5j, 2.0 + 0.4j, 2.0])
    b = PiecewisePath.polyline([0.0, 0.1 + 0.9j, 1.4 + 0.9j, 2.0 + 0.9j, 2.0])
    ga = continue_along(NEG_LOG, a, one_set).final_germ
    gb = continue_along(NEG_LOG, b, one_set).final_germ
    assert abs(ga.coeffs[0] - gb.coeffs[0]) < 1e-7


def test_path_through_singularity_rejected():
    with pytest.raises(PathTouchesOmegaError):
        continue_along(NEG_LOG, PiecewisePath.segment(0.0, 2.0), OmegaSet([1.0]))


def test_stops_yield_intermediate_germs():
    one_set = OmegaSet([1.0])
    path = PiecewisePath.segment(0.0, -1.0)
    germs = continue_with_stops(NEG_LOG, path, one_set, [0.0, 0.25, 0.5, 1.0])
    for s, g in zip([0.0, 0.25, 0.5, 1.0], germs):
        point = path.eval(s)
        assert abs(g.center - point) < 1e-12
        assert abs(g.coeffs[0] - (-np.log(1 - point))) < 1e-9


# ----------------------------------------------------------------------
# monodromy


def test_monodromy_of_log_is_minus_two_pi_i():
    delta = monodromy_delta(NEG_LOG, 1.0, 0.35, OmegaSet([1.0]))
    expected = -residue_circle_integral(1.0, 0.5, 1.0)
    assert abs(delta.coeffs[0] - expected) < 1e-7
    assert abs(delta.coeffs[0] + 2j * math.pi) < 1e-7
    assert np.max(np.abs(delta.coeffs[1:])) < 1e-7


def test_monodromy_of_entire_is_zero():
    p = named_germ("poly(1,0,2,1)")
    delta = monodromy_delta(p, 1.0, 0.3, OmegaSet([1.0]))
    assert np.max(np.abs(delta.coeffs)) < 1e-10


def test_monodromy_product_germ():
    # psi * log(z - 1) with psi = 1/(z - 2): loop around 1 adds 2*pi*i*psi
    omega = OmegaSet([1.0, 2.0])
    phi = pole_germ(2.0).multiply(log_pole_germ(1.0))
    delta = monodromy_delta(phi, 1.0, 0.4, omega)
    ref = continue_along(
        pole_germ(2.0).scale(2j * math.pi), PiecewisePath.segment(0.0, 0.4), omega
    ).final_germ
    assert np.max(np.abs(delta.coeffs[:40] - ref.coeffs[:40])) < 1e-6


def test_monodromy_around_nonadjacent_point_is_zero():
    omega = OmegaSet([1.0, 2.0])
    phi = log_pole_germ(1.0)
    delta = monodromy_delta(phi, 2.0, 1.5 + 0.02j, omega)
    assert np.max(np.abs(delta.coeffs[:20])) < 1e-9


def test_radius_collapse_reports_parameter():
    # spiral into the singular point: certified clearance check must fire,
    # or the walker must collapse with the offending parameter
    path = PiecewisePath.polyline([0.0, 0.5, 0.9, 0.99, 0.999999999])
    with pytest.raises((PathTouchesOmegaError, RadiusCollapseError)):
        continue_along(NEG_LOG, path, OmegaSet([1.0]))
