"""Truncated loose dilation of a Ritt matrix on Hilbert space (p = 2).

The enlarged space is C^d (the kernel block) plus Rademacher levels -K..K,
each carrying a vector of C^d.  A vector of it is stored as an array of shape
(1 + L, d) with L = 2K + 1: row 0 is the kernel block and row 1 + (k + K)
holds level k.  At p = 2 the Rademacher functions are orthonormal, so the
norm is the plain Euclidean norm of that array.

With S = (I - T)^{1/2} on Ran(I - T) and the split x = x0 + x1 along
Ker(I - T) + Ran(I - T):

    J(x)        = x0  +  sum_{k=0..K} e_k (x) T^k S x1
    Jtilde(y)   = y0  +  sum_{k=0..K} e_k (x) (T*)^k S* y1      (dual split)
    Theta       = x0 + x1  ->  x0 + (I + T) x1,   J1 = J Theta
    U           = identity on the kernel block, level shift k -> k + 1
    Q           = Jtilde*

Summing the geometric series gives Q U^m J1 = T^m - T^{2K+2-m} P_ran, so the
truncation error decays like the spectral radius of T on the range.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import BudgetExceeded, NonCommutingError, PreconditionError
from .geometry import minimal_stolz_angle
from .operators import as_matrix, mean_ergodic_decompose, opnorm, ritt_classify, spectrum

DIMENSION_CAP = 2_000_000
EPS = np.finfo(float).eps


def _power_on_range(T, alpha: float, split=None):
    """(I - T)^alpha restricted to Ran(I - T), extended by 0 on Ker(I - T)."""
    T = as_matrix(T).astype(complex)
    d = T.shape[0]
    split = split or mean_ergodic_decompose(T)
    # eigenvalue 0 of I - T lives on the kernel block; move it to 1 there
    B = (np.eye(d) - T) @ split.P_ran + split.P_ker
    sd = spectrum(B)
    mu = sd.eigenvalues
    scale = max(1.0, opnorm(B))
    if np.any((mu.real <= 0) & (np.abs(mu.imag) <= 1e-12 * scale)):
        raise PreconditionError("spectrum of I - T meets the branch cut (-inf, 0]")
    if sd.diagonalizable:
        V = sd.eigenvectors
        root = V @ np.diag(mu ** alpha) @ np.linalg.inv(V)
        route = "diagonalization"
    elif alpha == 0.5:
        root = sla.sqrtm(B)
        route = "schur"
    else:
        root = sla.fractional_matrix_power(B, alpha)
        route = "schur"
    return root @ split.P_ran, route


def principal_sqrt_I_minus_T(T) -> np.ndarray:
    """Principal square root of I - T on Ran(I - T), zero on Ker(I - T)."""
    root, _ = _power_on_range(T, 0.5)
    return root


def fractional_power_I_minus_T(T, alpha: float) -> np.ndarray:
    if not alpha > 0:
        raise PreconditionError("alpha must be positive")
    root, _ = _power_on_range(T, alpha)
    return root


def _range_radius(T, split):
    """Spectral radius of T on Ran(I - T) and the eigenvector condition number of T."""
    sd = spectrum(T)
    w = sd.eigenvalues
    keep = np.abs(w - 1.0) > 1e-7
    rho = float(np.max(np.abs(w[keep]))) if np.any(keep) else 0.0
    return rho, sd.condition


@dataclass
class SquareFunctionReport:
    value: float
    K: int
    alpha: float
    tail_bound: float
    terms: int

    def to_json(self):
        return {"value": self.value, "K": self.K, "alpha": self.alpha, "tail_bound": self.tail_bound}


def square_function_norm(T, x, alpha: float = 0.5, K: int = 512) -> SquareFunctionReport:
    """(sum_{k=0..K} (k+1)^{2 alpha - 1} ||T^k (I - T)^alpha x||^2)^{1/2}.

    The tail bound estimates the omitted k > K terms from the spectral radius
    rho of T on the range: ||T^k v|| <= kappa(V) rho^k ||v||.  It is infinite
    when rho >= 1.
    """
    T = as_matrix(T).astype(complex)
    x = np.asarray(x, dtype=complex)
    split = mean_ergodic_decompose(T)
    v = fractional_power_I_minus_T(T, alpha) @ x
    q = 2 * alpha - 1
    total = 0.0
    for k in range(K + 1):
        total += (k + 1) ** q * float(np.vdot(v, v).real)
        v = T @ v
    rho, kappa = _range_radius(T, split)
    if rho >= 1.0:
        tail = math.inf
    else:
        r = rho ** 2 * ((K + 3) / (K + 2)) ** max(q, 0.0)
        first = (K + 2) ** q * kappa ** 2 * rho ** (2 * (K + 1)) * float(
            np.linalg.norm(fractional_power_I_minus_T(T, alpha) @ x)) ** 2
        tail = math.sqrt(first / (1 - r)) if r < 1 else math.inf
    return SquareFunctionReport(math.sqrt(total), K, alpha, tail, K + 1)


@dataclass
class DilationSystem:
    T: np.ndarray
    K: int
    P_ker: np.ndarray
    P_ran: np.ndarray
    sqrtIminusT: np.ndarray
    forward: np.ndarray     # (K+1, d, d): T^k S (I + T) P_ran, the coefficients of J1
    plain: np.ndarray       # (K+1, d, d): T^k S P_ran, the coefficients of J
    dual: np.ndarray        # (K+1, d, d): (T*)^k S* P_ran*, the coefficients of Jtilde
    Theta: np.ndarray
    rho: float
    kappa: float
    meta: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.T.shape[0]

    @property
    def levels(self) -> int:
        return 2 * self.K + 1

    @property
    def shape(self):
        return (1 + self.levels, self.d)

    def _embed(self, coeffs, x0, x):
        # x: (..., d) -> (..., 1 + L, d); levels 0..K sit at rows 1 + K .. 1 + 2K
        x = np.asarray(x, dtype=complex)
        out = np.zeros(x.shape[:-1] + self.shape, dtype=complex)
        out[..., 0, :] = x @ x0.T
        out[..., 1 + self.K:, :] = np.einsum("kij,...j->...ki", coeffs, x)
        return out

    def J(self, x):
        return self._embed(self.plain, self.P_ker, x)

    def J1(self, x):
        return self._embed(self.forward, self.P_ker, x)

    def Jtilde(self, y):
        return self._embed(self.dual, self.P_ker.conj().T, y)

    def Q(self, v):
        """Adjoint of Jtilde: (..., 1 + L, d) -> (..., d)."""
        v = np.asarray(v, dtype=complex)
        out = v[..., 0, :] @ self.P_ker.T
        adj = np.conj(np.transpose(self.dual, (0, 2, 1)))
        return out + np.einsum("kij,...kj->...i", adj, v[..., 1 + self.K:, :])

    def U(self, v, m: int = 1, axis: int = -2):
        """m-fold level shift on the Rademacher rows; the kernel row is fixed and mass leaving level K is lost."""
        v = np.moveaxis(np.asarray(v, dtype=complex), axis, -1)
        out = np.zeros_like(v)
        out[..., 0] = v[..., 0]
        L = self.levels
        if m < L:
            out[..., 1 + m:] = v[..., 1: 1 + L - m]
        return np.moveaxis(out, -1, axis)

    def J1_matrix(self):
        return self.J1(np.eye(self.d)).reshape(self.d, -1).T

    def Jtilde_matrix(self):
        return self.Jtilde(np.eye(self.d)).reshape(self.d, -1).T

    def factor(self, m: int):
        """Q U^m J1 as a d x d matrix."""
        return self.Q(self.U(self.J1(np.eye(self.d)), m)).T

    def tail(self, m: int) -> float:
        """Analytic bound on ||T^m - Q U^m J1|| = ||T^{2K+2-m} P_ran|| plus a roundoff allowance."""
        return self.truncation_tail(m) + self.roundoff(m)

    def truncation_tail(self, m: int) -> float:
        e = 2 * self.K + 2 - m
        if e <= 0:
            return math.inf
        if not math.isfinite(self.kappa) or self.kappa >= 1e8:
            # defective T: no eigenvector bound, use the exact remainder norm
            return opnorm(np.linalg.matrix_power(self.T, e) @ self.P_ran)
        return self.kappa * self.rho ** e * opnorm(self.P_ran)

    def roundoff(self, m: int = 0) -> float:
        scale = self.meta["norm_J1"] * self.meta["norm_Jtilde"] + opnorm(np.linalg.matrix_power(self.T, m))
        return 64 * EPS * (self.K + 1) * scale


def build_dilation(T, K: int, check_ritt: bool = True) -> DilationSystem:
    """Assemble J, Jtilde, Theta, U and Q for a Ritt matrix T with truncation level K."""
    T = as_matrix(T).astype(complex)
    d = T.shape[0]
    if K < 0:
        raise PreconditionError("K must be nonnegative")
    if (1 + 2 * K + 1) * d > DIMENSION_CAP:
        raise BudgetExceeded(f"dilation space dimension {(2 * K + 2) * d} exceeds {DIMENSION_CAP}")
    eig = np.linalg.eigvals(T)
    if np.any(np.abs(eig + 1.0) < 1e-10):
        raise PreconditionError("-1 is an eigenvalue of T, Theta would not be invertible")
    meta = {}
    if check_ritt:
        ang = minimal_stolz_angle(eig)
        if not ang.ritt_compatible:
            raise PreconditionError("spectrum of T is not inside a Stolz domain")
        beta = min(0.5 * (ang.alpha + math.pi / 2), ang.alpha + 0.3)
        rep = ritt_classify(T, beta)
        if not rep.verdict:
            raise PreconditionError("T failed the Ritt classification")
        meta["ritt"] = {"alpha_min": rep.alpha_min, "diff_sup": rep.diff_sup}
    split = mean_ergodic_decompose(T)
    S, route = _power_on_range(T, 0.5, split)
    eye = np.eye(d)
    Theta = split.P_ker + (eye + T) @ split.P_ran
    Tc = T.conj().T
    plain = np.empty((K + 1, d, d), complex)
    dual = np.empty((K + 1, d, d), complex)
    cur, curd = S @ split.P_ran, S.conj().T @ split.P_ran.conj().T
    for k in range(K + 1):
        plain[k], dual[k] = cur, curd
        cur, curd = T @ cur, Tc @ curd
    forward = plain @ ((eye + T) @ split.P_ran)
    rho, kappa = _range_radius(T, split)
    sysm = DilationSystem(T, K, split.P_ker, split.P_ran, S, forward, plain, dual, Theta, rho, kappa,
                          {"sqrt_route": route, **meta})
    sysm.meta["norm_J1"] = opnorm(sysm.J1_matrix())
    sysm.meta["norm_Jtilde"] = opnorm(sysm.Jtilde_matrix())
    sysm.meta["sqrt_residual"] = float(opnorm(S @ S - (eye - T) @ split.P_ran))
    return sysm


@dataclass
class DilationReport:
    factorization: list   # per m: {"m", "error", "tail", "pass"}
    pairing: list
    passed: bool
    meta: dict = field(default_factory=dict)

    def to_json(self):
        return {"factorization": self.factorization, "pairing": self.pairing, "pass": self.passed, **self.meta}


def verify_dilation(sysm: DilationSystem, m_max: int = 8, trials: int = 8, seed: int = 0) -> DilationReport:
    """Check T^m = Q U^m J1 in operator norm and the pairing identity on random vectors, for m <= m_max.

    Pairing: <U^m J Theta x, Jtilde y> = <x0, y0> + <T^m x1, y1>, where x = x0 + x1
    splits along Ker + Ran and y = y0 + y1 along the dual splitting.
    """
    rng = np.random.default_rng(seed)
    d = sysm.d
    T = sysm.T
    fac, pair = [], []
    ok = True
    X = rng.normal(size=(trials, d)) + 1j * rng.normal(size=(trials, d))
    Y = rng.normal(size=(trials, d)) + 1j * rng.normal(size=(trials, d))
    JY = sysm.Jtilde(Y)
    for m in range(m_max + 1):
        Tm = np.linalg.matrix_power(T, m)
        err = float(opnorm(Tm - sysm.factor(m)))
        tail = sysm.tail(m)
        good = err <= tail
        fac.append({"m": m, "error": err, "tail": tail, "pass": good})
        lhs = np.einsum("tij,tij->t", sysm.U(sysm.J(X @ sysm.Theta.T), m), JY.conj())
        x0, x1 = X @ sysm.P_ker.T, X @ sysm.P_ran.T
        y0, y1 = Y @ sysm.P_ker.conj(), Y @ sysm.P_ran.conj()
        rhs = np.einsum("ti,ti->t", x0, y0.conj()) + np.einsum("ti,ti->t", x1 @ Tm.T, y1.conj())
        scale = np.linalg.norm(X, axis=1) * np.linalg.norm(Y, axis=1)
        perr = float(np.max(np.abs(lhs - rhs) / scale))
        pgood = perr <= tail
        pair.append({"m": m, "error": perr, "tail": tail, "pass": pgood})
        ok = ok and good and pgood
    return DilationReport(fac, pair, ok, {"K": sysm.K, "rho": sysm.rho, "kappa": sysm.kappa,
                                          "U_nonnegative": True})


@dataclass
class IntertwineReport:
    error: float
    threshold: float
    passed: bool

    def to_json(self):
        return {"error": self.error, "threshold": self.threshold, "pass": self.passed}


def intertwine_check(sysm: DilationSystem, S, tol: float = 1e-8) -> IntertwineReport:
    """||J1 S - (S + I (x) S) J1|| <= tol ||S|| for S commuting with T."""
    S = as_matrix(S).astype(complex)
    if opnorm(S @ sysm.T - sysm.T @ S) > 1e-10 * max(1.0, opnorm(S) * opnorm(sysm.T)):
        raise NonCommutingError("S does not commute with T")
    eye = np.eye(sysm.d)
    left = sysm.J1(S.T)                       # rows: J1 applied to the columns of S
    right = np.einsum("ij,tkj->tki", S, sysm.J1(eye))
    diff = (left - right).reshape(sysm.d, -1)
    err = float(np.linalg.norm(diff, 2))
    thr = tol * max(opnorm(S), EPS)
    return IntertwineReport(err, thr, err <= thr)


@dataclass
class JointDilation:
    systems: list
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return len(self.systems)

    def embed(self, x):
        """J1 of the first operator, then J1 of the next one on every block, and so on."""
        v = np.asarray(x, dtype=complex)
        for s in self.systems:
            v = s.J1(v)
        return v

    def compress(self, v):
        for s in reversed(self.systems):
            v = s.Q(v)
        return v

    def shift(self, v, powers):
        # after n embeddings the level axis of system i sits at position i from the left of the trailing d axis
        n = self.n
        for i, m in enumerate(powers):
            if m:
                v = self.systems[i].U(v, m, axis=-(n - i) - 1)
        return v

    def factor(self, powers):
        d = self.systems[0].d
        return self.compress(self.shift(self.embed(np.eye(d)), powers)).T


@dataclass
class JointDilationReport:
    rows: list
    passed: bool
    dimension: int

    def to_json(self):
        return {"rows": self.rows, "pass": self.passed, "dimension": self.dimension}


def joint_dilation(tup, K: int, max_total: int = 6, check_ritt: bool = True):
    """Nested dilation of a commuting tuple and the check of T_1^{i_1}...T_n^{i_n} = Q U_1^{i_1}...U_n^{i_n} J.

    Returns (JointDilation, JointDilationReport).  The combined tail propagates
    each single-operator bound through the norms of the outer embeddings.
    """
    ops = [as_matrix(T).astype(complex) for T in tup]
    if not ops:
        raise PreconditionError("empty tuple")
    d = ops[0].shape[0]
    dim = d * (2 * K + 2) ** len(ops)
    if dim > DIMENSION_CAP:
        raise BudgetExceeded(f"joint dilation dimension {dim} exceeds {DIMENSION_CAP}")
    for a, b in itertools.combinations(ops, 2):
        if opnorm(a @ b - b @ a) > 1e-10 * max(1.0, opnorm(a) * opnorm(b)):
            raise NonCommutingError("tuple does not commute")
    systems = [build_dilation(T, K, check_ritt) for T in ops]
    jd = JointDilation(systems, {"K": K})
    rows = []
    ok = True
    n = len(ops)
    for powers in itertools.product(range(max_total + 1), repeat=n):
        if sum(powers) > max_total:
            continue
        target = np.eye(d, dtype=complex)
        for T, m in zip(ops, powers):
            target = target @ np.linalg.matrix_power(T, m)
        err = float(opnorm(target - jd.factor(powers)))
        # the i-th factorization error is carried by the outer compressions and embeddings
        tail = 0.0
        for i, (s, m) in enumerate(zip(systems, powers)):
            outer = 1.0
            for t in systems[:i]:
                outer *= t.meta["norm_J1"] * t.meta["norm_Jtilde"]
            rest = 1.0
            for T, mm in zip(ops[i + 1:], powers[i + 1:]):
                rest *= opnorm(np.linalg.matrix_power(T, mm))
            tail += outer * s.tail(m) * rest
        good = err <= tail
        ok = ok and good
        rows.append({"powers": list(powers), "error": err, "tail": tail, "pass": good})
    return jd, JointDilationReport(rows, ok, dim)
