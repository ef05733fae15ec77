import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omegacont import Lattice, OmegaSet, Ray
from omegacont.errors import MalformedGeneratorError, SchemaError

TWO_PI = 2 * math.pi


def test_contains_ray_member(nstar):
    assert nstar.contains(3.0, 1e-9)


def test_contains_ray_nonmember(nstar):
    assert not nstar.contains(0.5, 1e-9)


def test_contains_lattice(two_pi_i):
    assert two_pi_i.contains(2j * math.pi, 1e-9)


def test_distance_gauss_center(gauss):
    assert gauss.distance(0.5 + 0.5j) == pytest.approx(math.sqrt(2) / 2, abs=1e-12)


def test_distance_finite():
    assert OmegaSet([1.0, 2.0]).distance(0.0) == pytest.approx(1.0)


def test_distance_ray_clamps_at_base(nstar):
    assert nstar.distance(-3.0) == pytest.approx(4.0)


def test_enumerate_ray(nstar):
    assert nstar.enumerate_in_disk(0.0, 3.5) == [1.0, 2.0, 3.0]


def test_enumerate_lattice(two_pi_i):
    pts = two_pi_i.enumerate_in_disk(0.0, 7.0)
    assert pts[0] == 0.0
    assert {round(p.imag, 9) for p in pts} == {0.0, round(TWO_PI, 9), round(-TWO_PI, 9)}
    # sorted by modulus, then argument
    assert pts == sorted(pts, key=lambda p: (abs(p), np.angle(p)))


def test_enumerate_outside():
    assert OmegaSet([1 + 1j]).enumerate_in_disk(0.0, 1.0) == []


def test_rho_examples(nstar, two_pi_i):
    assert two_pi_i.rho() == pytest.approx(TWO_PI)
    assert nstar.rho() == pytest.approx(1.0)
    assert OmegaSet([-0.5, 3.0]).rho() == pytest.approx(0.5)


def test_rho_origin_only_errors():
    with pytest.raises(ValueError):
        OmegaSet([0.0]).rho()


def test_addition_stable_nstar(nstar):
    assert nstar.is_addition_stable_window(100.0).stable


def test_addition_unstable_witness():
    report = OmegaSet([1.0, 2.0]).is_addition_stable_window(10.0)
    assert not report.stable
    assert report.witness == (1.0 + 0j, 2.0 + 0j)
    assert report.witness_sum == pytest.approx(3.0 + 0j)


def test_addition_stable_gauss(gauss):
    assert gauss.is_addition_stable_window(50.0).stable


def test_window_monotone():
    omega = OmegaSet([1.0, 2.0, 3.0])  # 1+1=2, 1+2=3 ok; 1+3=4 missing
    assert omega.is_addition_stable_window(3.0).stable
    assert not omega.is_addition_stable_window(10.0).stable


def test_distance_contains_consistency(nstar, rng):
    for _ in range(200):
        z = complex(rng.uniform(-3, 6), rng.uniform(-3, 3))
        assert (nstar.distance(z) <= 1e-12) == nstar.contains(z, 1e-12)


def test_enumerate_monotone_in_radius(gauss):
    small = set(map(lambda p: (round(p.real, 9), round(p.imag, 9)), gauss.enumerate_in_disk(0.3 + 0.1j, 2.0)))
    big = set(map(lambda p: (round(p.real, 9), round(p.imag, 9)), gauss.enumerate_in_disk(0.3 + 0.1j, 3.7)))
    assert small <= big


@settings(max_examples=150, deadline=None)
@given(
    re1=st.floats(-5, 5),
    im1=st.floats(-5, 5),
    re2=st.floats(-5, 5),
    im2=st.floats(-5, 5),
)
def test_distance_lipschitz(re1, im1, re2, im2):
    omega = OmegaSet.gauss_integers()
    a = complex(re1, im1)
    b = complex(re2, im2)
    assert abs(omega.distance(a) - omega.distance(b)) <= abs(a - b) + 1e-12


def test_distance_many_matches_bruteforce(gauss, rng):
    z = rng.uniform(-4, 4, 64) + 1j * rng.uniform(-4, 4, 64)
    fast = gauss.distance_many(z)
    pts = np.array(gauss.enumerate_in_disk(0.0, 12.0))
    brute = np.min(np.abs(z[:, None] - pts[None, :]), axis=1)
    assert np.max(np.abs(fast - brute)) < 1e-12


def test_skewed_lattice_distance():
    omega = OmegaSet(generators=[Lattice(0.0, 1.0, 0.6 + 0.2j)])
    pts = np.array(omega.enumerate_in_disk(0.0, 4.0))
    z = np.array([0.3 + 0.1j, -1.2 + 0.05j, 2.0 - 0.3j])
    brute = np.min(np.abs(z[:, None] - pts[None, :]), axis=1)
    assert np.max(np.abs(omega.distance_many(z) - brute)) < 1e-12


def test_zero_step_ray_rejected():
    with pytest.raises(MalformedGeneratorError):
        Ray(1.0, 0.0)


def test_parallel_lattice_rejected():
    with pytest.raises(MalformedGeneratorError):
        Lattice(0.0, 1.0, math.sqrt(2))


def test_empty_set_rejected():
    with pytest.raises(SchemaError):
        OmegaSet()


def test_json_round_trip(gauss, nstar):
    for omega in (gauss, nstar, OmegaSet([1 + 2j, -0.5])):
        again = OmegaSet.from_dict(omega.to_dict())
        assert again == omega


def test_min_gap():
    assert OmegaSet.positive_integers().min_gap() == pytest.approx(1.0)
    assert OmegaSet.two_pi_i_lattice().min_gap() == pytest.approx(TWO_PI)
    assert OmegaSet([0.0, 0.25]).min_gap() == pytest.approx(0.25)
