"""Norms of polynomials in the shift tuple on l_p(Z^n).

P(S) acts by (P(S) x)(m) = sum_a c_a x(m + a), the j-th shift moving the
sequence one step to the left in coordinate j.  At p = 2 its norm is the sup
of |P| over the torus; for other p only brackets are available: the torus sup
and window compressions from below, the l^1 mass of the coefficients from
above.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .calculus import poly_eval
from .errors import BudgetExceeded, PreconditionError
from .geometry import DiscUnionDomain
from .operators import as_matrix, opnorm
from .symbols import PolynomialSymbol

WINDOW_BUDGET = 4_000_000


@dataclass
class ShiftPolynomial:
    """Finitely supported coefficients {multi-index: value} in n variables."""
    n: int
    coeffs: dict

    def __post_init__(self):
        clean = {}
        for k, v in self.coeffs.items():
            k = tuple(int(i) for i in (k if isinstance(k, (tuple, list)) else (k,)))
            if len(k) != self.n or min(k) < 0:
                raise PreconditionError(f"bad multi-index {k} for n={self.n}")
            if v != 0:
                clean[k] = clean.get(k, 0) + complex(v)
        self.coeffs = clean

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=complex)
        return cls(arr.ndim, {idx: arr[idx] for idx in itertools.product(*map(range, arr.shape)) if arr[idx] != 0})

    @classmethod
    def monomial(cls, n, index, value=1.0):
        return cls(n, {tuple(index): value})

    def to_array(self):
        deg = self.degrees
        a = np.zeros([d + 1 for d in deg], dtype=complex)
        for k, v in self.coeffs.items():
            a[k] = v
        return a

    def to_symbol(self) -> PolynomialSymbol:
        return PolynomialSymbol(self.to_array())

    @property
    def degrees(self):
        if not self.coeffs:
            return [0] * self.n
        return [max(k[i] for k in self.coeffs) for i in range(self.n)]

    def __call__(self, *zs):
        zs = np.broadcast_arrays(*[np.asarray(z, dtype=complex) for z in zs])
        out = np.zeros(zs[0].shape, dtype=complex)
        for k, v in self.coeffs.items():
            term = v
            for z, e in zip(zs, k):
                term = term * z ** e
            out = out + term
        return out

    def __mul__(self, other: "ShiftPolynomial"):
        if other.n != self.n:
            raise PreconditionError("arity mismatch")
        out = {}
        for (a, u), (b, v) in itertools.product(self.coeffs.items(), other.coeffs.items()):
            k = tuple(i + j for i, j in zip(a, b))
            out[k] = out.get(k, 0) + u * v
        return ShiftPolynomial(self.n, out)

    def l1(self) -> float:
        return float(sum(abs(v) for v in self.coeffs.values()))

    def to_json(self):
        return {"n": self.n, "terms": [[list(k), [v.real, v.imag]] for k, v in sorted(self.coeffs.items())]}

    @classmethod
    def from_json(cls, obj):
        return cls(int(obj["n"]), {tuple(k): complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)
                                   for k, v in obj["terms"]})


def _torus(P, thetas):
    return P(*[np.exp(1j * t) for t in thetas])


def torus_argmax(P: ShiftPolynomial, grid: int | None = None):
    """(sup |P| on the torus, maximizing angles): dense grid, then local polishing from the best cells."""
    n = P.n
    if not P.coeffs:
        return 0.0, np.zeros(n)
    if grid is None:
        grid = {1: 4096, 2: 512}.get(n, 48)
    t = np.linspace(0, 2 * np.pi, grid, endpoint=False)
    mesh = np.meshgrid(*([t] * n), indexing="ij")
    vals = np.abs(_torus(P, mesh))
    flat = np.argsort(vals.ravel())[-5:]
    best, arg = float(vals.ravel()[flat[-1]]), np.array([m.ravel()[flat[-1]] for m in mesh])
    for i in flat:
        x0 = np.array([m.ravel()[i] for m in mesh])
        res = minimize(lambda th: -abs(_torus(P, th)), x0, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
        if -res.fun > best:
            best, arg = float(-res.fun), np.mod(res.x, 2 * np.pi)
    return best, arg


def shift_norm_p2(P: ShiftPolynomial) -> float:
    """||P(S)|| on l_2(Z^n) = sup of |P| over the n-torus."""
    return torus_argmax(P)[0]


def _apply(P, x, adjoint=False):
    """Compression of P(S) (or its adjoint) to the window carrying x."""
    out = np.zeros_like(x)
    W = x.shape
    for k, c in P.coeffs.items():
        if adjoint:
            c, k = np.conj(c), tuple(-i for i in k)
        # out[m] += c x[m + k] for m, m + k inside the window
        src = tuple(slice(max(0, a), w + min(0, a)) for a, w in zip(k, W))
        dst = tuple(slice(max(0, -a), w - max(0, a)) for a, w in zip(k, W))
        if all(s.start < s.stop for s in src):
            out[dst] += c * x[src]
    return out


def _pnorm(x, p):
    a = np.abs(x)
    return float(np.max(a)) if math.isinf(p) else float(np.sum(a ** p) ** (1.0 / p))


def _phase(y):
    # angle-based, so subnormal entries cannot overflow y / |y|
    return np.where(y != 0, np.exp(1j * np.angle(y)), 0)


def _dual(y, p):
    """Unit vector in l_{p'} aligned with y: |y|^{p-1} sgn(y) / ||y||_p^{p-1}."""
    a = np.abs(y)
    nrm = _pnorm(y, p)
    if nrm == 0:
        return np.zeros_like(y)
    return _phase(y) * (a / nrm) ** (p - 1)


def _structured_start(P, W, n):
    _, arg = torus_argmax(P)
    m = np.arange(-W, W + 1)
    env = np.sin(np.pi * (m + W + 1) / (2 * W + 2))
    x = np.ones([2 * W + 1] * n, dtype=complex)
    for j in range(n):
        shape = [1] * n
        shape[j] = -1
        x = x * (env * np.exp(1j * arg[j] * m)).reshape(shape)
    return x


@dataclass
class WindowEstimate:
    value: float
    W: int
    p: float
    iterations: int
    history: list = field(default_factory=list)
    vector: np.ndarray | None = None

    def to_json(self):
        return {"value": self.value, "W": self.W, "p": self.p, "iterations": self.iterations}


def _embed_center(x, W):
    n = x.ndim
    w_old = (x.shape[0] - 1) // 2
    out = np.zeros([2 * W + 1] * n, dtype=complex)
    sl = tuple(slice(W - w_old, W + w_old + 1) for _ in range(n))
    out[sl] = x
    return out


def truncated_window_norm(P: ShiftPolynomial, p: float, W: int, iterations: int = 200, seed: int = 0,
                          restarts: int = 2, start=None, tol: float = 1e-13) -> WindowEstimate:
    """Lower bound for ||P(S)||_{p->p} from the compression to the window {-W..W}^n.

    Boyd's dual-alignment ascent x <- dual_{p'}(P(S)* dual_p(P(S) x)) from a
    sine-enveloped plane wave at the torus maximizer, from seeded random
    vectors, and from ``start`` when given (e.g. the optimizer of a smaller
    window, which makes the estimate nondecreasing in W).
    """
    n = P.n
    size = (2 * W + 1) ** n
    if size > WINDOW_BUDGET:
        raise BudgetExceeded(f"window with {size} points exceeds {WINDOW_BUDGET}")
    if p < 1:
        raise PreconditionError("p must be >= 1")
    if not P.coeffs:
        return WindowEstimate(0.0, W, p, 0)
    if p == 1 or math.isinf(p):
        # extreme points: a delta (p = 1) or an aligned sign pattern (p = inf) at the center
        deg = P.degrees
        if all(W >= d for d in deg):
            return WindowEstimate(P.l1(), W, p, 0)
    q = math.inf if p == 1 else (1.0 if math.isinf(p) else p / (p - 1))
    rng = np.random.default_rng(seed)
    starts = [_structured_start(P, W, n)]
    if start is not None:
        starts.insert(0, _embed_center(np.asarray(start), W))
    for _ in range(restarts):
        starts.append(rng.normal(size=[2 * W + 1] * n) + 1j * rng.normal(size=[2 * W + 1] * n))
    best, best_x, hist, used = 0.0, None, [], 0
    for x in starts:
        xn = _pnorm(x, p)
        if not 0 < xn < math.inf:
            continue
        x = x / xn
        val = _pnorm(_apply(P, x), p)
        for it in range(iterations):
            y = _apply(P, x)
            z = _apply(P, _dual(y, p), adjoint=True)
            zn = _pnorm(z, q)
            if zn == 0:
                break
            x_new = _dual(z, q) if not math.isinf(q) else _phase(z)
            xn = _pnorm(x_new, p)
            if not 0 < xn < math.inf:
                break
            x_new = x_new / xn
            new = _pnorm(_apply(P, x_new), p)
            used += 1
            if new <= val * (1 + tol):
                if new > val:
                    x, val = x_new, new
                break
            x, val = x_new, new
        hist.append(val)
        if val > best:
            best, best_x = val, x
    return WindowEstimate(best, W, p, used, hist, best_x)


def window_sweep(P: ShiftPolynomial, p: float, windows, **kw):
    """Estimates for increasing windows, each warm-started from the previous optimizer."""
    out, prev = [], None
    for W in sorted(windows):
        est = truncated_window_norm(P, p, W, start=prev, **kw)
        if out and est.value < out[-1].value:
            est.value = out[-1].value
        out.append(est)
        prev = est.vector
    return out


@dataclass
class Bracket:
    lower: float
    upper: float
    torus: float
    window: float

    def to_json(self):
        return {"lower": self.lower, "upper": self.upper, "torus": self.torus, "window": self.window}


def shift_norm_bracket(P: ShiftPolynomial, p: float, W: int = 64, **kw) -> Bracket:
    """(lower, upper) for ||P(S)||_{p->p}; the torus sup is a lower bound for every p."""
    torus = shift_norm_p2(P)
    win = truncated_window_norm(P, p, W, **kw).value if P.n <= 2 else 0.0
    upper = P.l1()
    lower = min(max(torus, win), upper)
    return Bracket(lower, upper, torus, win)


@dataclass
class PolyRatioReport:
    rows: list
    max_vs_upper: float
    max_vs_lower: float

    def to_json(self):
        return {"rows": self.rows, "K_interval": [self.max_vs_upper, self.max_vs_lower]}


def p_poly_ratio(tup, family, p: float, W: int = 32, op_norm=None) -> PolyRatioReport:
    """||P(T)|| against both ends of the bracket of ||P(S)||; the max ratios bound the best constant K."""
    family = list(family)
    if not family:
        raise PreconditionError("empty family")
    ops = [as_matrix(T) for T in tup]
    op_norm = op_norm or opnorm
    rows = []
    for P in family:
        val = float(op_norm(poly_eval(P.to_symbol(), ops)))
        br = shift_norm_bracket(P, p, W)
        rows.append({"poly": P.to_json(), "norm_P_T": val, "bracket": br.to_json(),
                     "ratio_upper": val / br.upper if br.upper else 0.0,
                     "ratio_lower": val / br.lower if br.lower else 0.0})
    return PolyRatioReport(rows, max(r["ratio_upper"] for r in rows), max(r["ratio_lower"] for r in rows))


def dtheta_sup(P: ShiftPolynomial, theta: float, samples: int = 2048) -> float:
    """Sup of |P| over the product of outer boundaries of the two-disc domain of angle theta."""
    dom = DiscUnionDomain(theta)
    u = np.arange(samples) / samples
    pts = dom.boundary_point(u)
    mesh = np.meshgrid(*([pts] * P.n), indexing="ij")
    vals = np.abs(P(*mesh))
    i = np.unravel_index(int(np.argmax(vals)), vals.shape)
    best = float(vals[i])
    # local refinement around the best sample
    cur = [u[k] for k in i]
    h = 1.0 / samples
    loc = np.linspace(-1, 1, 21)
    for _ in range(8):
        axes = [dom.boundary_point(c + h * loc) for c in cur]
        m2 = np.meshgrid(*axes, indexing="ij")
        v2 = np.abs(P(*m2))
        j = np.unravel_index(int(np.argmax(v2)), v2.shape)
        if v2[j] >= best:
            best = float(v2[j])
            cur = [c + h * loc[k] for c, k in zip(cur, j)]
        h /= 5
    return best
