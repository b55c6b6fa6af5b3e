import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hinfcalc.errors import DomainError, PreconditionError
from hinfcalc.geometry import (DiscUnionDomain, Sector, ShiftedStolz, StolzDomain, minimal_stolz_angle,
                               sector_boundary_contour, sector_contains, sector_tail_bound,
                               shifted_stolz_contour, stolz_boundary_contour, stolz_contains)
from hinfcalc.symbols import DecayCertificate

# bisection against the support-function membership test, kinks included
MIN_ANGLE_05_03 = 0.540419500270584


def support_gap(gamma, z, samples=10**6):
    """min_t max(sin gamma, cos t) - Re(z e^{-it}); the hull of 1 and D(0, sin gamma) has support max(r, cos t)."""
    t = np.linspace(-np.pi, np.pi, samples, endpoint=False)
    return float(np.min(np.maximum(math.sin(gamma), np.cos(t)) - (z * np.exp(-1j * t)).real))


def test_stolz_membership_examples():
    assert stolz_contains(StolzDomain(math.pi / 6), 0)
    assert not stolz_contains(StolzDomain(math.pi / 6), 1)


def test_stolz_membership_matches_support_grid():
    z = 0.9 + 0.05j
    assert support_gap(math.pi / 4, z) > 0
    assert stolz_contains(StolzDomain(math.pi / 4), z)


def test_stolz_membership_random_points_match_support_grid():
    rng = np.random.default_rng(3)
    for _ in range(40):
        g = rng.uniform(0.1, 1.4)
        z = complex(rng.uniform(-1.1, 1.1), rng.uniform(-1.1, 1.1))
        gap = support_gap(g, z, 20000)
        if abs(gap) > 1e-6:
            assert stolz_contains(StolzDomain(g), z) == (gap > 0)


def test_sector_membership_examples():
    assert sector_contains(Sector(math.pi / 4), 1)
    assert not sector_contains(Sector(math.pi / 4), -1)
    assert not sector_contains(Sector(math.pi / 3), np.exp(1j * math.pi / 3))


def test_domain_parameters_validated():
    with pytest.raises(DomainError):
        StolzDomain(0.0)
    with pytest.raises(DomainError):
        StolzDomain(math.pi / 2)
    with pytest.raises(DomainError):
        Sector(math.pi + 0.1)


def test_minimal_angle_trivial_points():
    assert minimal_stolz_angle([0]).at_floor
    assert minimal_stolz_angle([1]).at_floor
    assert minimal_stolz_angle([0, 1, 0.3]).alpha < 1e-9


def test_minimal_angle_bisection_oracle():
    ang = minimal_stolz_angle([0.5 + 0.3j])
    assert abs(ang.alpha - MIN_ANGLE_05_03) <= 1e-10
    assert ang.ritt_compatible


def test_minimal_angle_outside_unit_disc():
    ang = minimal_stolz_angle([1.2])
    assert not ang.ritt_compatible
    with pytest.raises(PreconditionError):
        minimal_stolz_angle([])


@pytest.mark.parametrize("beta", [0.3, 0.8, 1.3])
def test_stolz_contour_closed_and_residues(beta):
    c = stolz_boundary_contour(beta, singular_points=[0.5, 2.0])
    for a, b in zip(c.pieces, c.pieces[1:] + c.pieces[:1]):
        assert abs(a.end_point - b.start_point) < 1e-14
    assert abs(c.integrate(1.0 / (c.nodes - 0.5)) - 2j * math.pi) < 1e-10
    assert abs(c.integrate(1.0 / (c.nodes - 2.0))) < 1e-10


def test_contour_reversal_flips_sign():
    f = lambda z: np.exp(z) / (z - 0.2)
    c = stolz_boundary_contour(1.0)
    r = c.reversed()
    assert abs(c.integrate(f(c.nodes)) + r.integrate(f(r.nodes))) < 1e-12


def test_shifted_contour_encloses_interior_point():
    c = shifted_stolz_contour(0.9, levels_at_zero=30)
    z = 0.3
    assert ShiftedStolz(0.9).contains(z)
    assert abs(c.integrate(1.0 / (c.nodes - z)) - 2j * math.pi) < 1e-9


def test_sector_tail_bound_meets_target():
    cert = DecayCertificate(1.0, 1.0, "sector")
    c = sector_boundary_contour(math.pi / 3, cert, target_tail=1e-12)
    t = c.truncation
    assert sector_tail_bound(1.0, 1.0, t["t_max"]) <= 1e-12
    assert t["tail_bound"] <= 1e-12


def test_sector_integral_self_consistent_under_refinement():
    cert = DecayCertificate(1.0, 1.0, "sector")
    f = lambda z: z / (1 + z) ** 2
    a = sector_boundary_contour(math.pi / 3, cert, 1e-13, nodes_per_piece=16, singular_points=[-1.0])
    b = sector_boundary_contour(math.pi / 3, cert, 1e-13, nodes_per_piece=32, singular_points=[-1.0])
    assert abs(a.integrate(f(a.nodes)) - b.integrate(f(b.nodes))) < 1e-10


def test_sector_contour_needs_certificate():
    with pytest.raises(PreconditionError):
        sector_boundary_contour(1.0, None)


def test_disc_union_boundary_on_circles():
    dom = DiscUnionDomain(2.0)
    pts = dom.boundary_point(np.linspace(0, 1, 50, endpoint=False))
    assert np.all(dom.contains_closure(pts, 1e-9))


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 1.5), st.floats(0.0, 0.999))
def test_stolz_boundary_is_in_closure_not_interior(gamma, u):
    dom = StolzDomain(gamma)
    z = dom.boundary_point(np.array([u]))[0]
    assert dom.contains_closure(z, 1e-12)
    assert not dom.contains(z * (1 + 1e-9) + 1e-9 * (z - 1) / max(abs(z - 1), 1e-300)) or abs(z - 1) < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 1.4), st.floats(0.01, 0.15), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_stolz_domains_nested(g, dg, x, y):
    z = complex(x, y)
    if StolzDomain(g).contains(z):
        assert StolzDomain(min(g + dg, 1.5)).contains(z)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 1.5), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_shifted_domain_is_reflection(g, x, y):
    z = complex(x, y)
    assert ShiftedStolz(g).contains(1 - z) == StolzDomain(g).contains(z)
