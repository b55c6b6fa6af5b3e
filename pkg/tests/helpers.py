"""Shared corpora for the test suite: commuting pairs and certified symbol families."""
import math

import numpy as np

from hinfcalc.geometry import StolzDomain
from hinfcalc.symbols import DecayCertificate, ExpressionSymbol


def commuting_pair(rng, d, gamma=math.pi / 6, spread=0.3):
    """Two matrices V diag(.) V^{-1} with a shared, well-conditioned V and spectra inside B_gamma."""
    dom = StolzDomain(gamma)
    Q = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    V = np.eye(d) + spread * Q / np.linalg.norm(Q, 2)
    Vi = np.linalg.inv(V)
    return [V @ np.diag(dom.sample_interior(rng, d)) @ Vi for _ in range(2)]


def pair_corpus(count=50, seed=2024, dims=(2, 6)):
    rng = np.random.default_rng(seed)
    return [commuting_pair(rng, int(rng.integers(dims[0], dims[1] + 1))) for _ in range(count)]


def _var(i):
    return ["var", i]


def _one_minus(i):
    return ["sub", 1, _var(i)]


def stolz_family():
    """Ten two-variable symbols vanishing at the vertex 1, each with a certificate checked on B_gamma."""
    base = ["mul", _one_minus(0), _one_minus(1)]

    def sym(tree, c, poles=((), ()), s=1.0):
        return ExpressionSymbol(tree, 2, poles, DecayCertificate(c, s, "stolz"))

    return [
        sym(base, 1.0),
        sym(["mul", base, ["mul", _var(0), _var(1)]], 1.0),
        sym(["mul", base, ["mul", 0.5, ["add", _var(0), _var(1)]]], 1.0),
        sym(["div", base, ["mul", ["pow", ["sub", 2, _var(0)], 2], ["pow", ["sub", 2, _var(1)], 2]]], 1.0,
            ((2,), (2,))),
        sym(["div", base, ["mul", ["sub", 2, _var(0)], ["sub", 2, _var(1)]]], 1.0, ((2,), (2,))),
        sym(["mul", base, _one_minus(0)], 2.0),
        sym(["mul", base, ["exp", ["mul", _var(0), _var(1)]]], math.e),
        sym(["div", base, ["mul", ["sub", 1.5, _var(0)], ["sub", 1.5, _var(1)]]], 4.0, ((1.5,), (1.5,))),
        sym(["mul", base, base], 1.0, s=2.0),
        sym(["mul", base, ["pow", _var(0), 3]], 1.0),
    ]


def _plus_one(i):
    return ["add", 1, _var(i)]


def _u(i):
    return ["div", _var(i), ["pow", _plus_one(i), 2]]


def _v(i):
    return ["div", _var(i), ["mul", _plus_one(i), ["add", 2, _var(i)]]]


def _w(i):
    return ["div", ["pow", _var(i), 2], ["pow", _plus_one(i), 4]]


def _x(i):
    return ["div", _var(i), ["pow", _plus_one(i), 3]]


def _y(i):
    return ["mul", _u(i), ["exp", ["neg", _var(i)]]]


SECTOR_POLES = ((-1.0, -2.0), (-1.0, -2.0))


def sector_family():
    """Ten two-variable H0-infinity symbols on sectors, certificates valid up to half-angle 1.4."""

    def sym(tree, c=1.0):
        return ExpressionSymbol(tree, 2, SECTOR_POLES, DecayCertificate(c, 1.0, "sector", 1.4))

    pairs = [(_u, _u), (_u, _v), (_v, _w), (_w, _x), (_x, _u), (_y, _u), (_y, _y), (_v, _v), (_w, _w)]
    fam = [sym(["mul", a(0), b(1)]) for a, b in pairs]
    mixed = ["div", ["add", 1, ["mul", _var(0), _var(1)]], ["mul", _plus_one(0), _plus_one(1)]]
    fam.append(sym(["mul", ["mul", _u(0), _u(1)], mixed], 2.0))
    return fam


def one_variable_bump():
    """z / (1 + z)^2 with its sector certificate."""
    return ExpressionSymbol(["div", _var(0), ["pow", _plus_one(0), 2]], 1, [[-1.0]],
                            DecayCertificate(1.0, 1.0, "sector"))


def product_bump():
    """z1 z2 / ((1 + z1)^2 (1 + z2)^2)."""
    return ExpressionSymbol(["mul", _u(0), _u(1)], 2, ((-1.0,), (-1.0,)), DecayCertificate(1.0, 1.0, "sector"))


def rel_err(A, B):
    nb = np.linalg.norm(B, 2)
    return float(np.linalg.norm(A - B, 2) / (nb if nb > 0 else 1.0))
