import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hinfcalc.errors import ArityError, PoleProximityError, PreconditionError
from hinfcalc.geometry import Sector, StolzDomain
from hinfcalc.symbols import (DecayCertificate, ExpressionSymbol, ExtendedSymbol, FunctionSymbol, PolynomialSymbol,
                              RationalSymbol, product, pullback_one_minus, scaled, sup_norm, verify_decay)

# boundary grid of 1e5 points on B_{pi/4} refined near the arg-max; attained at z = -sin(pi/4)
SUP_Z_ONE_MINUS_Z_PI4 = 1.2071067811865475

complex_pts = st.tuples(st.floats(-2, 2), st.floats(-2, 2)).map(lambda t: complex(*t))


def bump():
    return ExpressionSymbol(["div", ["var", 0], ["pow", ["add", 1, ["var", 0]], 2]], 1, [[-1.0]],
                            DecayCertificate(1.0, 1.0, "sector"))


def test_polynomial_evaluation():
    assert PolynomialSymbol([0, 0, 1])(3) == 9
    phi = PolynomialSymbol.from_terms({(0, 0): 1, (1, 0): -1, (0, 1): -1, (1, 1): 1}, 2)
    assert phi(1, 1) == 0


def test_closed_form_matches_expanded_polynomial():
    # (1 - z1)^2 (1 + z2) expanded by hand
    expanded = PolynomialSymbol([[1, 1], [-2, -2], [1, 1]])
    closed = ExpressionSymbol(["mul", ["pow", ["sub", 1, ["var", 0]], 2], ["add", 1, ["var", 1]]], 2)
    rng = np.random.default_rng(0)
    z1, z2 = rng.normal(size=(2, 100)) + 1j * rng.normal(size=(2, 100))
    assert np.max(np.abs(expanded(z1, z2) - closed(z1, z2))) < 1e-12


def test_pullback_examples():
    assert pullback_one_minus(PolynomialSymbol([0, 1]))(0.25) == pytest.approx(0.75)
    phi = pullback_one_minus(bump())
    assert phi(0) == pytest.approx(0.25)
    assert phi.certificate.flavor == "stolz"


def test_pullback_is_an_involution():
    rng = np.random.default_rng(1)
    z = rng.normal(size=100) + 1j * rng.normal(size=100)
    f = bump()
    back = pullback_one_minus(pullback_one_minus(f))
    assert np.max(np.abs(back(z) - f(z))) < 1e-12


def test_rational_pole_list_checked():
    num = PolynomialSymbol([0, 1])
    den = PolynomialSymbol([2, -1])
    RationalSymbol(num, den, [2.0])
    with pytest.raises(PreconditionError):
        RationalSymbol(num, den, [3.0])


def test_pole_proximity_raises():
    with pytest.raises(PoleProximityError):
        bump()(-1.0)


def test_arity_checked():
    with pytest.raises(ArityError):
        bump()(1.0, 2.0)


def test_sup_norm_examples():
    assert sup_norm(PolynomialSymbol([1.0]), StolzDomain(0.7)).value == pytest.approx(1.0)
    assert sup_norm(PolynomialSymbol([0, 1.0]), StolzDomain(0.7)).value == pytest.approx(1.0, abs=1e-12)


def test_sup_norm_boundary_oracle():
    val = sup_norm(PolynomialSymbol([0, 1, -1]), StolzDomain(math.pi / 4)).value
    assert abs(val - SUP_Z_ONE_MINUS_Z_PI4) < 1e-9


def test_sup_norm_rejects_poles_in_domain():
    f = ExpressionSymbol(["div", 1, ["sub", 0.5, ["var", 0]]], 1, [[0.5]])
    with pytest.raises(PreconditionError):
        sup_norm(f, StolzDomain(0.7))


def test_verify_decay_examples():
    assert verify_decay(bump(), bump().certificate, Sector(math.pi / 4)).passed
    one = PolynomialSymbol([1.0])
    assert not verify_decay(one, DecayCertificate(1.0, 1.0, "stolz"), StolzDomain(0.7)).passed
    phi = PolynomialSymbol([1.0, -1.0])
    assert verify_decay(phi, DecayCertificate(1.0, 1.0, "stolz"), StolzDomain(0.7)).passed


def test_certificate_validation():
    with pytest.raises(PreconditionError):
        DecayCertificate(0.0, 1.0)
    with pytest.raises(PreconditionError):
        DecayCertificate(1.0, 1.0, "bogus")


def test_extended_symbol_evaluation_and_keys():
    top = PolynomialSymbol([[0, 0], [0, 1]])
    low = {(1,): PolynomialSymbol([0, 2])}
    e = ExtendedSymbol(top, low, 3.0)
    assert e(2.0, 5.0) == pytest.approx(10 + 4 + 3)
    with pytest.raises(PreconditionError):
        ExtendedSymbol(top, {(0, 1): PolynomialSymbol([1.0])})


def test_product_and_scaling_certificates():
    a = PolynomialSymbol([1.0, -1.0], DecayCertificate(1.0, 1.0, "stolz"))
    p = product(a, a)
    assert p.certificate.s == 2.0
    assert p(0.5) == pytest.approx(0.25)
    s = scaled(a, -3.0)
    assert s.certificate.c == 3.0
    assert s(0.0) == pytest.approx(-3.0)


def test_function_symbol_grid_shape():
    f = FunctionSymbol(lambda a, b: a + 2 * b, 2)
    g = f.grid(np.arange(3), np.arange(4))
    assert g.shape == (3, 4)
    assert g[2, 3] == 8


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=5), complex_pts)
def test_pullback_polynomial_matches_substitution(coeffs, z):
    P = PolynomialSymbol(coeffs)
    assert abs(pullback_one_minus(P)(z) - P(1 - z)) <= 1e-9 * (1 + sum(abs(c) for c in coeffs) * 3 ** len(coeffs))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10.0))
def test_sup_norm_is_homogeneous(c):
    P = PolynomialSymbol([0.2, 1.0, -0.5])
    dom = StolzDomain(0.8)
    assert sup_norm(PolynomialSymbol(c * P.coeffs), dom).value == pytest.approx(c * sup_norm(P, dom).value, rel=1e-12)
