"""Holomorphic symbols in one or several variables.

Every symbol is a vectorized callable: ``sym(z1, ..., zn)`` broadcasts its
arguments like numpy ufuncs.  Four concrete kinds exist:

* ``PolynomialSymbol``: dense coefficient tensor, ``coeffs[k1, ..., kn]`` multiplies z1^k1 ... zn^kn.
* ``RationalSymbol``: quotient of two polynomial symbols plus per-variable pole lists.
* ``ExpressionSymbol``: prefix expression tree (see ``EXPRESSION_OPS``).
* ``FunctionSymbol``: any vectorized python callable, used for derived objects.

A symbol may carry a ``DecayCertificate``; the calculus routines read it to
truncate unbounded contours and to check admissibility.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import comb

from .errors import ArityError, PoleProximityError, PreconditionError

POLE_TOL = 1e-12
SUP_SAMPLE_BUDGET = 2_000_000

FLAVORS = ("sector", "stolz", "shifted")


@dataclass(frozen=True)
class DecayCertificate:
    """Claimed bound |f| <= c * prod b(z_i).

    flavor 'sector':  b(z) = |z|^s / (1 + |z|^{2s})   (H0-infinity on sectors)
    flavor 'stolz':   b(z) = |1 - z|^s                 (vanishing at the vertex 1)
    flavor 'shifted': b(z) = |z|^s                     (vanishing at the vertex 0)
    """
    c: float
    s: float
    flavor: str = "sector"
    angle: float | None = None

    def __post_init__(self):
        if not (self.c > 0 and self.s > 0):
            raise PreconditionError("decay certificate needs c > 0 and s > 0")
        if self.flavor not in FLAVORS:
            raise PreconditionError(f"unknown certificate flavor {self.flavor!r}")

    def factor(self, z):
        a = np.abs(np.asarray(z, dtype=complex))
        if self.flavor == "sector":
            return a ** self.s / (1.0 + a ** (2 * self.s))
        if self.flavor == "stolz":
            return np.abs(1.0 - np.asarray(z, dtype=complex)) ** self.s
        return a ** self.s

    def bound(self, *zs):
        out = self.c
        for z in zs:
            out = out * self.factor(z)
        return out

    def after_pullback(self) -> "DecayCertificate":
        new = {"sector": "stolz", "stolz": "shifted", "shifted": "stolz"}[self.flavor]
        return DecayCertificate(self.c, self.s, new, self.angle)

    def to_json(self):
        return {"c": self.c, "s": self.s, "flavor": self.flavor, "angle": self.angle}


def _as_points(zs, arity):
    if len(zs) != arity:
        raise ArityError(f"symbol of arity {arity} called with {len(zs)} arguments")
    return [np.asarray(z, dtype=complex) for z in zs]


class Symbol:
    """Base class; subclasses implement ``_evaluate`` on broadcast arrays."""

    arity: int = 1
    poles: tuple = ()
    certificate: DecayCertificate | None = None

    def _evaluate(self, zs):
        raise NotImplementedError

    def __call__(self, *zs):
        zs = _as_points(zs, self.arity)
        self.check_poles(zs)
        out = self._evaluate(np.broadcast_arrays(*zs))
        return out if np.ndim(out) else complex(out)

    def eval(self, z):
        """Value at a single point given as an n-tuple."""
        return complex(self(*[complex(v) for v in z]))

    def grid(self, *axes):
        """Values on the tensor grid axes[0] x axes[1] x ..., shape (len(axes[0]), ...)."""
        n = len(axes)
        shaped = []
        for i, ax in enumerate(axes):
            shape = [1] * n
            shape[i] = -1
            shaped.append(np.asarray(ax, dtype=complex).reshape(shape))
        out = self(*shaped)
        return np.broadcast_to(out, tuple(len(a) for a in axes)).astype(complex)

    def variable_poles(self, i):
        return tuple(self.poles[i]) if self.poles and i < len(self.poles) else ()

    def check_poles(self, zs):
        if not self.poles:
            return
        for i, z in enumerate(zs):
            for p in self.variable_poles(i):
                if np.any(np.abs(z - p) <= POLE_TOL):
                    raise PoleProximityError(f"variable {i} within {POLE_TOL} of declared pole {p}")

    def with_certificate(self, cert):
        new = self._copy()
        new.certificate = cert
        return new

    def _copy(self):
        import copy
        return copy.copy(self)

    def pullback_one_minus(self) -> "Symbol":
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(arity={self.arity})"


class PolynomialSymbol(Symbol):
    def __init__(self, coeffs, certificate=None):
        c = np.asarray(coeffs, dtype=complex)
        if c.ndim == 0:
            c = c.reshape(1)
        self.coeffs = c
        self.arity = c.ndim
        self.poles = ()
        self.certificate = certificate

    @classmethod
    def from_terms(cls, terms: dict, arity: int, certificate=None):
        """Build from {(k1, ..., kn): coefficient}."""
        if not terms:
            return cls(np.zeros((1,) * arity), certificate)
        deg = [max(k[i] for k in terms) + 1 for i in range(arity)]
        c = np.zeros(deg, dtype=complex)
        for k, v in terms.items():
            c[tuple(k)] += v
        return cls(c, certificate)

    @property
    def degrees(self):
        return tuple(d - 1 for d in self.coeffs.shape)

    def _evaluate(self, zs):
        shape = zs[0].shape
        flat = [z.reshape(-1) for z in zs]
        acc = None
        for i, z in enumerate(flat):
            # Horner in variable i, contracting the leading coefficient axis
            c = self.coeffs if acc is None else acc
            deg = c.shape[1 if acc is not None else 0]
            if acc is None:
                res = np.broadcast_to(c[deg - 1], (z.size,) + c.shape[1:]).copy()
                zz = z.reshape((-1,) + (1,) * (c.ndim - 1))
                for k in range(deg - 2, -1, -1):
                    res = res * zz + c[k]
            else:
                res = c[:, deg - 1].copy()
                zz = z.reshape((-1,) + (1,) * (c.ndim - 2))
                for k in range(deg - 2, -1, -1):
                    res = res * zz + c[:, k]
            acc = res
        return acc.reshape(shape)

    def pullback_one_minus(self):
        c = self.coeffs
        for ax, d in enumerate(c.shape):
            j = np.arange(d)
            # coefficient of z^k in (1 - z)^j
            b = comb(j[:, None], j[None, :]) * (-1.0) ** j[None, :]
            c = np.moveaxis(np.tensordot(c, b, axes=([ax], [0])), -1, ax)
        cert = self.certificate.after_pullback() if self.certificate else None
        return PolynomialSymbol(c, cert)

    def to_json(self):
        return {"kind": "polynomial", "arity": self.arity, "shape": list(self.coeffs.shape),
                "coeffs": [[v.real, v.imag] for v in self.coeffs.ravel()]}


class RationalSymbol(Symbol):
    """num / den with per-variable pole lists.

    For arity 1 the declared poles must cover every root of the denominator;
    for arity 2 the denominator must factor into univariate pieces (rank-one
    coefficient matrix) whose roots are declared for the matching variable.
    """

    def __init__(self, num: PolynomialSymbol, den: PolynomialSymbol, poles, certificate=None, check=True):
        if num.arity != den.arity:
            raise ArityError("numerator and denominator arities differ")
        self.num, self.den = num, den
        self.arity = num.arity
        if self.arity == 1 and poles and not isinstance(poles[0], (list, tuple, np.ndarray)):
            poles = [poles]
        self.poles = tuple(tuple(complex(p) for p in ps) for ps in poles) if poles else tuple(() for _ in range(self.arity))
        self.certificate = certificate
        if check:
            self._check_pole_list()

    def _univariate_roots(self):
        c = self.den.coeffs
        if self.arity == 1:
            return [_poly_roots(c)]
        if self.arity == 2:
            u, s, vh = np.linalg.svd(c)
            if s.size > 1 and s[1] > 1e-10 * s[0]:
                return None
            return [_poly_roots(u[:, 0]), _poly_roots(vh[0])]
        return None

    def _check_pole_list(self):
        roots = self._univariate_roots()
        if roots is None:
            return
        for i, rs in enumerate(roots):
            declared = np.asarray(self.variable_poles(i), dtype=complex)
            for r in rs:
                if declared.size == 0 or np.min(np.abs(declared - r)) > 1e-8:
                    raise PreconditionError(f"denominator root {r} of variable {i} is not in the pole list")

    def _evaluate(self, zs):
        return self.num._evaluate(zs) / self.den._evaluate(zs)

    def pullback_one_minus(self):
        poles = tuple(tuple(1.0 - p for p in ps) for ps in self.poles)
        cert = self.certificate.after_pullback() if self.certificate else None
        return RationalSymbol(self.num.pullback_one_minus(), self.den.pullback_one_minus(), poles, cert, check=False)

    def to_json(self):
        return {"kind": "rational", "arity": self.arity, "num": self.num.to_json(), "den": self.den.to_json(),
                "poles": [[[p.real, p.imag] for p in ps] for ps in self.poles]}


def _poly_roots(c):
    c = np.trim_zeros(np.asarray(c, dtype=complex), "b")
    if c.size <= 1:
        return np.array([], dtype=complex)
    return np.roots(c[::-1])


# --- expression trees -------------------------------------------------------

EXPRESSION_OPS = ("add", "sub", "mul", "div", "pow", "exp", "neg", "var", "const")


def _is_polynomial_tree(node) -> bool:
    if isinstance(node, (int, float, complex)):
        return True
    op = node[0]
    if op in ("var", "const"):
        return True
    if op in ("add", "sub", "mul", "neg"):
        return all(_is_polynomial_tree(a) for a in node[1:])
    if op == "pow":
        return int(node[2]) >= 0 and _is_polynomial_tree(node[1])
    return False


def _validate_tree(node, arity):
    if isinstance(node, (int, float, complex)):
        return
    if not isinstance(node, (list, tuple)) or not node or node[0] not in EXPRESSION_OPS:
        raise PreconditionError(f"bad expression node {node!r}")
    op = node[0]
    if op == "var":
        if not 0 <= int(node[1]) < arity:
            raise ArityError(f"variable index {node[1]} out of range for arity {arity}")
        return
    if op == "const":
        return
    if op == "pow":
        if float(node[2]) != int(node[2]):
            raise PreconditionError("only integer powers are allowed")
        _validate_tree(node[1], arity)
        return
    if op == "exp":
        if not _is_polynomial_tree(node[1]):
            raise PreconditionError("exp takes a polynomial argument only")
    for a in node[1:]:
        _validate_tree(a, arity)


def _const_value(node):
    v = node[1]
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def _eval_tree(node, zs):
    if isinstance(node, (int, float, complex)):
        return complex(node)
    op = node[0]
    if op == "var":
        return zs[int(node[1])]
    if op == "const":
        return _const_value(node)
    if op == "neg":
        return -_eval_tree(node[1], zs)
    if op == "exp":
        return np.exp(_eval_tree(node[1], zs))
    if op == "pow":
        return _eval_tree(node[1], zs) ** int(node[2])
    args = [_eval_tree(a, zs) for a in node[1:]]
    if op == "add":
        out = args[0]
        for a in args[1:]:
            out = out + a
        return out
    if op == "mul":
        out = args[0]
        for a in args[1:]:
            out = out * a
        return out
    if op == "sub":
        return args[0] - args[1]
    return args[0] / args[1]


def _substitute_one_minus(node):
    if isinstance(node, (int, float, complex)):
        return node
    if node[0] == "var":
        return ["sub", 1, ["var", int(node[1])]]
    if node[0] in ("const",):
        return list(node)
    if node[0] == "pow":
        return ["pow", _substitute_one_minus(node[1]), node[2]]
    return [node[0]] + [_substitute_one_minus(a) for a in node[1:]]


class ExpressionSymbol(Symbol):
    """Prefix expression tree, e.g. ["div", ["var", 0], ["pow", ["add", 1, ["var", 0]], 2]].

    Allowed operators: add, sub, mul, div, integer pow, neg, exp (polynomial
    argument only), var (index), const (number or [re, im]).  Division is only
    holomorphic away from the declared per-variable poles.
    """

    def __init__(self, tree, arity: int, poles=(), certificate=None):
        _validate_tree(tree, arity)
        self.tree = tree
        self.arity = arity
        self.poles = tuple(tuple(complex(p) for p in ps) for ps in poles) if poles else ()
        self.certificate = certificate

    def _evaluate(self, zs):
        out = _eval_tree(self.tree, zs)
        return np.broadcast_to(out, zs[0].shape).astype(complex) if np.ndim(out) < zs[0].ndim else out

    def pullback_one_minus(self):
        poles = tuple(tuple(1.0 - p for p in ps) for ps in self.poles)
        cert = self.certificate.after_pullback() if self.certificate else None
        return ExpressionSymbol(_substitute_one_minus(self.tree), self.arity, poles, cert)

    def to_json(self):
        return {"kind": "expression", "arity": self.arity, "tree": self.tree,
                "poles": [[[p.real, p.imag] for p in ps] for ps in self.poles]}


class FunctionSymbol(Symbol):
    """Wraps a vectorized callable f(z1, ..., zn)."""

    def __init__(self, func: Callable, arity: int, poles=(), certificate=None, name: str = ""):
        self.func = func
        self.arity = arity
        self.poles = tuple(tuple(complex(p) for p in ps) for ps in poles) if poles else ()
        self.certificate = certificate
        self.name = name

    def _evaluate(self, zs):
        out = np.asarray(self.func(*zs), dtype=complex)
        return np.broadcast_to(out, zs[0].shape) if out.shape != zs[0].shape else out

    def pullback_one_minus(self):
        f = self.func
        poles = tuple(tuple(1.0 - p for p in ps) for ps in self.poles)
        cert = self.certificate.after_pullback() if self.certificate else None
        return FunctionSymbol(lambda *zs: f(*[1.0 - z for z in zs]), self.arity, poles, cert,
                              name=f"pullback({self.name})")


def pullback_one_minus(sym: Symbol) -> Symbol:
    """The symbol z -> sym(1 - z1, ..., 1 - zn), with the certificate transported."""
    return sym.pullback_one_minus()


def scaled(sym: Symbol, factor: complex) -> Symbol:
    cert = sym.certificate
    if cert is not None:
        cert = replace(cert, c=cert.c * abs(factor)) if factor != 0 else cert
    return FunctionSymbol(lambda *zs: factor * sym(*zs), sym.arity, sym.poles, cert, name="scaled")


def product(a: Symbol, b: Symbol) -> Symbol:
    """Pointwise product; certificates of equal flavor combine."""
    poles = tuple(tuple(a.variable_poles(i)) + tuple(b.variable_poles(i)) for i in range(a.arity))
    ca, cb = a.certificate, b.certificate
    cert = None
    if ca and cb and ca.flavor == cb.flavor:
        if ca.flavor == "sector":
            # each sector factor is at most 1/2, so one of them can be absorbed
            cert = DecayCertificate(ca.c * cb.c / 2.0, ca.s, "sector")
        else:
            cert = DecayCertificate(ca.c * cb.c, ca.s + cb.s, ca.flavor)
    return FunctionSymbol(lambda *zs: a(*zs) * b(*zs), a.arity, poles, cert, name="product")


# --- extended class ---------------------------------------------------------

@dataclass
class ExtendedSymbol:
    """g(z) = top(z) + sum_S lower[S](z with the coordinates in S removed) + constant.

    Keys of ``lower`` are sorted tuples of removed (0-based) variable indices,
    each a proper non-empty subset of range(n).
    """
    top: Symbol
    lower: dict = field(default_factory=dict)
    constant: complex = 0.0

    def __post_init__(self):
        n = self.top.arity
        for key, sym in self.lower.items():
            key = tuple(key)
            if not key or len(key) >= n or sorted(set(key)) != list(key) or key[-1] >= n:
                raise PreconditionError(f"lower key {key} must be a proper sorted subset of range({n})")
            if sym.arity != n - len(key):
                raise ArityError(f"lower symbol for {key} must have arity {n - len(key)}")

    @property
    def arity(self) -> int:
        return self.top.arity

    def __call__(self, *zs):
        zs = _as_points(zs, self.arity)
        out = self.top(*zs) + self.constant
        for key, sym in self.lower.items():
            kept = [z for i, z in enumerate(zs) if i not in key]
            out = out + sym(*kept)
        return out

    def components(self):
        """(removed indices, symbol) pairs including the top term with key ()."""
        return [((), self.top)] + [(tuple(k), s) for k, s in self.lower.items()]


# --- norms and certificates -------------------------------------------------

class SupNorm(NamedTuple):
    value: float
    argmax: tuple
    samples: int


def _domains_for(sym_arity, domains):
    if not isinstance(domains, (list, tuple)):
        domains = [domains] * sym_arity
    if len(domains) != sym_arity:
        raise ArityError("one domain per variable is required")
    return list(domains)


def _check_poles_outside(sym, domains):
    for i, dom in enumerate(domains):
        for p in sym.variable_poles(i) if isinstance(sym, Symbol) else ():
            if dom.contains_closure(p, 1e-9):
                raise PreconditionError(f"pole {p} of variable {i} lies in the closed domain")


def sup_norm(sym, domains, samples: int = 400, refine_rounds: int = 8) -> SupNorm:
    """Sampled sup of |sym| over a product of domains.

    By the maximum modulus principle, applied one variable at a time, the sup
    over the product is attained on the product of the one-dimensional
    boundaries, so only boundary points are sampled.  The best grid point is
    then refined by shrinking local grids.
    """
    n = sym.arity
    domains = _domains_for(n, domains)
    _check_poles_outside(sym, domains)
    m = max(8, min(samples, int(SUP_SAMPLE_BUDGET ** (1.0 / n))))
    u = (np.arange(m) + 0.0) / m
    axes = [d.boundary_point(u) for d in domains]
    vals = np.abs(_grid(sym, axes))
    flat = int(np.argmax(vals))
    idx = np.unravel_index(flat, vals.shape)
    best_u = np.array([u[i] for i in idx])
    best = float(vals[idx])
    h = 1.0 / m
    local = np.linspace(-1.0, 1.0, 11 if n <= 2 else 5)
    for _ in range(refine_rounds):
        laxes_u = [(best_u[i] + h * local) % 1.0 for i in range(n)]
        laxes = [domains[i].boundary_point(laxes_u[i]) for i in range(n)]
        lv = np.abs(_grid(sym, laxes))
        j = np.unravel_index(int(np.argmax(lv)), lv.shape)
        if lv[j] > best:
            best = float(lv[j])
            best_u = np.array([laxes_u[i][j[i]] for i in range(n)])
        h *= 0.3
    arg = tuple(complex(domains[i].boundary_point(np.array([best_u[i]]))[0]) for i in range(n))
    return SupNorm(best, arg, m ** n)


def _grid(sym, axes):
    if isinstance(sym, Symbol):
        return sym.grid(*axes)
    n = len(axes)
    shaped = [np.asarray(a).reshape([-1 if j == i else 1 for j in range(n)]) for i, a in enumerate(axes)]
    return np.broadcast_to(sym(*shaped), tuple(len(a) for a in axes))


@dataclass
class DecayReport:
    max_ratio: float
    argmax: tuple
    samples: int
    passed: bool

    def to_json(self):
        return {"max_ratio": self.max_ratio, "argmax": [[z.real, z.imag] for z in self.argmax],
                "samples": self.samples, "pass": self.passed}


def verify_decay(sym, cert: DecayCertificate, domains, samples: int = 10_000, seed: int = 0) -> DecayReport:
    """Largest observed |f| / bound over random interior and boundary samples."""
    n = sym.arity
    domains = _domains_for(n, domains)
    rng = np.random.default_rng(seed)
    pts = []
    for d in domains:
        inner = d.sample_interior(rng, samples // 2)
        edge = d.boundary_point(rng.uniform(0, 1, samples - inner.size))
        z = np.concatenate([inner, edge])
        rng.shuffle(z)
        pts.append(z)
    vals = np.abs(np.asarray(sym(*pts)))
    bound = np.asarray(cert.bound(*pts), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, vals / bound, np.where(vals > 0, np.inf, 0.0))
    k = int(np.argmax(ratio))
    mr = float(ratio[k])
    return DecayReport(mr, tuple(complex(p[k]) for p in pts), int(samples), bool(mr <= 1.0 + 1e-9))
