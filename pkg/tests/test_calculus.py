import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import commuting_pair, one_variable_bump, product_bump, rel_err
from hinfcalc.calculus import (approximant, calc_extended, calc_ritt, calc_sectorial, calculus_bound_estimate,
                               limit_check_r_to_1, poly_eval, sectorial_approximation, spectral_oracle)
from hinfcalc.errors import PreconditionError
from hinfcalc.geometry import StolzDomain
from hinfcalc.symbols import DecayCertificate, ExtendedSymbol, PolynomialSymbol
from hinfcalc.workbench import counterexample_diagonal

STOLZ = DecayCertificate(1.0, 1.0, "stolz")


def test_sectorial_diagonal_scalar_values():
    out = calc_sectorial(one_variable_bump(), [np.diag([1.0, 2.0])])
    assert np.allclose(out, np.diag([0.25, 2.0 / 9.0]), atol=1e-10)


def test_sectorial_product_on_commuting_diagonals():
    A1, A2 = np.diag([0.5, 2.0, 3.0]), np.diag([1.0, 0.25, 4.0])
    u = lambda z: z / (1 + z) ** 2
    expect = np.diag(u(np.diag(A1)) * u(np.diag(A2)))
    assert np.allclose(calc_sectorial(product_bump(), [A1, A2]), expect, atol=1e-10)


def test_sectorial_random_pair_vs_oracle():
    rng = np.random.default_rng(4)
    T = commuting_pair(rng, 4)
    A = [np.eye(4) - t for t in T]
    assert rel_err(calc_sectorial(product_bump(), A), spectral_oracle(product_bump(), A)) <= 1e-8


def test_sectorial_needs_sector_certificate():
    with pytest.raises(PreconditionError):
        calc_sectorial(PolynomialSymbol([0, 1]), [np.eye(2)])


def test_ritt_scalar_example():
    phi = PolynomialSymbol([0, 1, -1], STOLZ)
    assert np.allclose(calc_ritt(phi, [np.diag([0.5])]), [[0.25]], atol=1e-12)


def test_ritt_zero_symbol():
    out = calc_ritt(PolynomialSymbol([0.0], STOLZ), [np.diag([0.5, 0.2])])
    assert np.allclose(out, 0)


def test_ritt_polynomial_on_counterexample_pair_matches_horner():
    D = np.diag(counterexample_diagonal(2))
    pair = [D, D[::-1, ::-1]]
    coeffs = np.zeros((3, 3))
    # (1 - l1)(1 - l2) l1 l2 = l1 l2 - l1^2 l2 - l1 l2^2 + l1^2 l2^2
    coeffs[1, 1], coeffs[2, 1], coeffs[1, 2], coeffs[2, 2] = 1, -1, -1, 1
    phi = PolynomialSymbol(coeffs, STOLZ)
    assert np.max(np.abs(calc_ritt(phi, pair) - poly_eval(phi, pair))) < 1e-9


def test_ritt_strict_mode_requires_certificate():
    with pytest.raises(PreconditionError):
        calc_ritt(PolynomialSymbol([1.0, 2.0]), [np.diag([0.5])])
    out = calc_ritt(PolynomialSymbol([1.0, 2.0]), [np.diag([0.5])], strict=False)
    assert np.allclose(out, [[2.0]], atol=1e-10)


def test_poly_eval_examples():
    T = [np.diag([0.3, 0.6]), np.diag([0.5, 0.1])]
    assert np.allclose(poly_eval(PolynomialSymbol(np.ones((1, 1))), T), np.eye(2))
    assert np.allclose(poly_eval(PolynomialSymbol([[0, 0], [0, 1]]), T), np.diag([0.15, 0.06]))


def test_poly_eval_degree_five_vs_oracle():
    rng = np.random.default_rng(9)
    T = commuting_pair(rng, 5)
    P = PolynomialSymbol(rng.normal(size=(6, 6)))
    assert rel_err(poly_eval(P, T), spectral_oracle(P, T)) < 1e-9
    assert rel_err(poly_eval(P, T, order=[1, 0]), poly_eval(P, T)) < 1e-12


def test_extended_constant_and_top_only():
    T = [np.diag([0.5, 0.2]), np.diag([0.3, 0.7])]
    top = PolynomialSymbol(np.zeros((1, 1)), STOLZ)
    assert np.allclose(calc_extended(ExtendedSymbol(top, {}, 1.0), T), np.eye(2))
    phi = PolynomialSymbol([[1, -1], [-1, 1]], STOLZ)
    assert np.allclose(calc_extended(ExtendedSymbol(phi), T), calc_ritt(phi, T))


def test_extended_split_of_product_matches_horner():
    # l1 l2 = (1 - l1)(1 - l2) - (1 - l1) - (1 - l2) + 1
    top = PolynomialSymbol([[1, -1], [-1, 1]], STOLZ)
    lower = {(1,): PolynomialSymbol([-1, 1], STOLZ), (0,): PolynomialSymbol([-1, 1], STOLZ)}
    esym = ExtendedSymbol(top, lower, 1.0)
    rng = np.random.default_rng(2)
    T = commuting_pair(rng, 4)
    target = poly_eval(PolynomialSymbol([[0, 0], [0, 1]]), T)
    assert rel_err(calc_extended(esym, T), target) < 1e-9


def test_limit_check_zero_and_scalar():
    zero = limit_check_r_to_1(PolynomialSymbol([0.0], STOLZ), [np.diag([0.5])])
    assert max(zero.deviations) == 0.0
    phi = PolynomialSymbol([0, 1, -1], STOLZ)
    rep = limit_check_r_to_1(phi, [np.diag([0.5])])
    scalar = [abs(r * 0.5 * (1 - r * 0.5) - 0.25) for r in rep.r_grid]
    assert np.allclose(rep.deviations, scalar, atol=1e-10)
    assert rep.monotone and rep.passed


def test_approximant_examples():
    A = np.diag([0.5, 2.0, 7.0])
    eps = 1e-2
    a = np.diag(A)
    assert np.allclose(np.diag(approximant(A, eps)), (a + eps) / (1 + eps * a))
    assert np.allclose(approximant(A, 0.0), A)
    assert sectorial_approximation(A, 0.0, one_variable_bump()).deviation == 0.0


def test_bound_estimate_examples():
    dom = StolzDomain(1.0)
    one = calculus_bound_estimate([np.diag([0.5, 0.1])], [PolynomialSymbol([1.0])], [dom])
    assert one.K_est == pytest.approx(1.0)
    T = np.diag([0.2, 0.5 + 0.1j, 0.8])
    fam = [PolynomialSymbol(c) for c in ([0, 1], [1, -1], [0, 0, 1], [0.5, 1, -1])]
    assert calculus_bound_estimate([T], fam, [dom]).K_est <= 1 + 1e-6


@settings(max_examples=10, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=1, max_size=4), st.integers(0, 10_000))
def test_ritt_calculus_agrees_with_horner_on_polynomials(coeffs, seed):
    rng = np.random.default_rng(seed)
    T = [np.diag(StolzDomain(math.pi / 6).sample_interior(rng, 3))]
    P = PolynomialSymbol(coeffs)
    out = calc_ritt(P, T, strict=False)
    assert np.max(np.abs(out - poly_eval(P, T))) <= 1e-9 * (1 + np.sum(np.abs(coeffs)))
