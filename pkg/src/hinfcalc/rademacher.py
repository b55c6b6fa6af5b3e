"""Rademacher averages: Rad_p norms, R-boundedness lower bounds and the property A^n ratio."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded, PreconditionError
from .operators import _outside_stolz_samples, as_matrix, opnorm, resolvents, ritt_classify

EXACT_LIMIT = 14
PATTERN_BUDGET = 1 << 20


@dataclass(frozen=True)
class SignEnumeration:
    """Sign patterns for K Rademacher variables: every pattern once (exact) or seeded draws (mc)."""
    K: int
    mode: str = "exact"
    seed: int = 0
    samples: int = 4096

    def __post_init__(self):
        if self.mode not in ("exact", "mc"):
            raise PreconditionError(f"unknown enumeration mode {self.mode!r}")
        if self.mode == "exact" and self.K > EXACT_LIMIT:
            raise BudgetExceeded(f"exact enumeration needs K <= {EXACT_LIMIT}, got {self.K}")

    @classmethod
    def auto(cls, K, seed=0, samples=4096):
        return cls(K, "exact" if K <= EXACT_LIMIT else "mc", seed, samples)

    @classmethod
    def parse(cls, text: str, K: int):
        """'exact', 'exact:10', 'mc:SEED:SAMPLES'."""
        parts = text.split(":")
        if parts[0] == "exact":
            return cls(int(parts[1]) if len(parts) > 1 else K, "exact")
        if parts[0] == "mc":
            seed = int(parts[1]) if len(parts) > 1 else 0
            samples = int(parts[2]) if len(parts) > 2 else 4096
            return cls(K, "mc", seed, samples)
        raise PreconditionError(f"bad enumeration spec {text!r}")

    def signs(self) -> np.ndarray:
        if self.K == 0:
            return np.ones((1, 0))
        if self.mode == "exact":
            # row r holds the binary digits of r mapped to +-1
            r = np.arange(1 << self.K)[:, None]
            return 1.0 - 2.0 * ((r >> np.arange(self.K)[None, :]) & 1)
        rng = np.random.default_rng(self.seed)
        return rng.choice([-1.0, 1.0], size=(self.samples, self.K))


def schatten_norm(M, q: float) -> float:
    s = np.linalg.svd(np.asarray(M), compute_uv=False)
    if math.isinf(q):
        return float(s[0]) if s.size else 0.0
    return float(np.sum(s ** q) ** (1.0 / q))


def _base_norms(vals, base):
    """Norms of the rows of vals (M, *shape) in the configured base norm."""
    if base is None or base == "euclidean":
        return np.linalg.norm(vals.reshape(vals.shape[0], -1), axis=1)
    if callable(base):
        return np.array([base(v) for v in vals])
    q = float(base)
    if vals.ndim != 3:
        raise PreconditionError("Schatten base norm needs matrix terms")
    return np.array([schatten_norm(v, q) for v in vals])


def rad_norm(xs, p: float = 2.0, enum: SignEnumeration | None = None, base=None, method: str = "auto") -> float:
    """(E ||sum_k e_k x_k||^p)^{1/p}.

    ``base`` selects the norm of a single term: Euclidean (default), a
    Schatten exponent for matrix terms, or a callable.  With p = 2 and the
    Euclidean norm the Pythagorean formula (sum ||x_k||^2)^{1/2} is exact and
    is used unless ``method='enumerate'``.
    """
    xs = np.asarray(xs, dtype=complex)
    if xs.ndim == 1:
        xs = xs[:, None]
    K = xs.shape[0]
    if K == 0:
        return 0.0
    hilbert = base is None or base == "euclidean" or (not callable(base) and float(base) == 2.0)
    if method == "auto" and p == 2 and hilbert:
        return float(math.sqrt(np.sum(np.abs(xs) ** 2)))
    enum = enum or SignEnumeration.auto(K)
    if enum.K != K:
        enum = SignEnumeration(K, enum.mode, enum.seed, enum.samples)
    eps = enum.signs()
    sums = np.tensordot(eps, xs, axes=([1], [0]))
    norms = _base_norms(sums, base)
    if math.isinf(p):
        return float(np.max(norms))
    return float(np.mean(norms ** p) ** (1.0 / p))


@dataclass
class RBoundEstimate:
    value: float
    kind: str
    trials: int
    mode: str
    seed: int
    best_sequence_length: int

    def to_json(self):
        return {"value": self.value, "kind": self.kind, "trials": self.trials, "mode": self.mode,
                "seed": self.seed, "best_sequence_length": self.best_sequence_length}


def r_bounded_constant(family, trials: int = 200, max_len: int = 6, p: float = 2.0, seed: int = 0,
                       enum_mode: str = "exact") -> RBoundEstimate:
    """Lower bound for the R-bound of a finite family of matrices.

    Evaluates Rad(T_k x_k) / Rad(x_k) on singleton sequences built from top
    singular vectors and on seeded random sequences of length <= max_len.
    Any such ratio is attained by an admissible sequence, so the maximum is a
    lower bound; no upper bound is claimed.
    """
    fam = [as_matrix(T).astype(complex) for T in family]
    if not fam:
        raise PreconditionError("empty family")
    d = fam[0].shape[1]
    if any(T.shape != fam[0].shape for T in fam):
        raise PreconditionError("family members must share a shape")
    best, best_len = max(opnorm(T) for T in fam), 1
    rng = np.random.default_rng(seed)
    for t in range(trials):
        K = int(rng.integers(1, max_len + 1))
        idx = rng.integers(0, len(fam), size=K)
        X = rng.normal(size=(K, d)) + 1j * rng.normal(size=(K, d))
        if t % 2:
            # bias toward directions each operator amplifies most
            for k, i in enumerate(idx):
                _, _, vh = np.linalg.svd(fam[i])
                X[k] = vh[0].conj() * (1.0 + 0.1 * rng.normal())
        num = rad_norm(np.stack([fam[i] @ X[k] for k, i in enumerate(idx)]), p,
                       SignEnumeration(K, enum_mode, seed + t))
        den = rad_norm(X, p, SignEnumeration(K, enum_mode, seed + t))
        if den > 0 and num / den > best:
            best, best_len = num / den, K
    return RBoundEstimate(float(best), "lower bound", trials, enum_mode, seed, best_len)


@dataclass
class RRittEstimate:
    rbound: RBoundEstimate
    uniform_bound: float
    lambdas: int

    def to_json(self):
        return {"rbound": self.rbound.to_json(), "uniform_bound": self.uniform_bound, "lambdas": self.lambdas}


def r_ritt_sample(T, beta: float, lambda_samples: int = 64, trials: int = 200, seed: int = 0,
                  check: bool = True) -> RRittEstimate:
    """R-bound lower estimate for {(1 - lam) R(lam, T)} with lam sampled outside closure(B_beta)."""
    T = as_matrix(T)
    if check and not ritt_classify(T, beta).verdict:
        raise PreconditionError("T failed the Ritt classification")
    lam = _outside_stolz_samples(beta, lambda_samples)
    rng = np.random.default_rng(seed)
    if lam.size > lambda_samples:
        lam = lam[np.sort(rng.choice(lam.size, lambda_samples, replace=False))]
    fam = (1.0 - lam)[:, None, None] * resolvents(T, lam)
    est = r_bounded_constant(list(fam), trials, seed=seed)
    return RRittEstimate(est, max(opnorm(M) for M in fam), int(lam.size))


def tensor_rad_norm(X, n: int, k: int, enumerate_signs: bool = True) -> float:
    """L^2 norm of sum_i prod_j e_{i_j}(w_j) x_i over n independent copies of k signs.

    X has shape (k,)*n + (d,).  Enumeration runs over all 2^{nk} patterns; the
    products of independent signs are orthonormal, so the result equals
    (sum_i ||x_i||^2)^{1/2}.
    """
    X = np.asarray(X, dtype=complex)
    if not enumerate_signs:
        return float(math.sqrt(np.sum(np.abs(X) ** 2)))
    if (1 << (n * k)) > PATTERN_BUDGET:
        raise BudgetExceeded(f"2^{n * k} sign patterns exceed the enumeration budget")
    eps = SignEnumeration(k, "exact").signs()          # (2^k, k)
    total = 0.0
    for combo in itertools.product(range(eps.shape[0]), repeat=n):
        v = X
        for j in range(n):
            v = np.tensordot(eps[combo[j]], v, axes=([0], [0]))
        total += float(np.sum(np.abs(v) ** 2))
    return math.sqrt(total / eps.shape[0] ** n)


def property_An_ratio(alpha, x, xstar, enumerate_signs: bool = True) -> float:
    """|sum_i alpha_i <x_i, x*_i>| / (sup|alpha| Rad(x) Rad(x*)) with the bilinear pairing <x, x*> = sum x x*."""
    alpha = np.asarray(alpha, dtype=complex)
    x = np.asarray(x, dtype=complex)
    xstar = np.asarray(xstar, dtype=complex)
    n = alpha.ndim
    k = alpha.shape[0] if n else 0
    num = abs(np.sum(alpha * np.sum(x * xstar, axis=-1)))
    amax = float(np.max(np.abs(alpha))) if alpha.size else 0.0
    if amax == 0.0 or num == 0.0:
        return 0.0
    den = amax * tensor_rad_norm(x, n, k, enumerate_signs) * tensor_rad_norm(xstar, n, k, enumerate_signs)
    return float(num / den)


@dataclass
class PropertyAnEstimate:
    value: float
    trials: int
    d: int
    n: int
    k: int

    def to_json(self):
        return {"value": self.value, "trials": self.trials, "d": self.d, "n": self.n, "k": self.k,
                "kind": "lower bound for the best constant"}


def property_An_test(d: int, n: int, k: int, trials: int = 50, seed: int = 0) -> PropertyAnEstimate:
    """Largest property A^n ratio over seeded random data and aligned data (x* = conj(x), alpha = 1)."""
    if k > 3 and (1 << (n * k)) > PATTERN_BUDGET:
        raise BudgetExceeded("enumeration budget exceeded")
    rng = np.random.default_rng(seed)
    shape = (k,) * n
    best = 0.0
    for t in range(trials):
        x = rng.normal(size=shape + (d,)) + 1j * rng.normal(size=shape + (d,))
        if t == 0:
            alpha = np.ones(shape, complex)
            xs = x.conj()
        else:
            alpha = np.exp(2j * np.pi * rng.random(shape)) * rng.random(shape)
            xs = rng.normal(size=shape + (d,)) + 1j * rng.normal(size=shape + (d,))
        best = max(best, property_An_ratio(alpha, x, xs))
    return PropertyAnEstimate(best, trials, d, n, k)
