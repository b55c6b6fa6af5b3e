"""Joint holomorphic functional calculus by tensor-product contour quadrature.

For a commuting tuple the calculus is

    phi(T) = (2 pi i)^{-n} int ... int phi(l_1, ..., l_n) R(l_1, T_1) ... R(l_n, T_n) dl_1 ... dl_n

taken over the boundary of a Stolz domain (Ritt tuples, ``calc_ritt``) or of a
sector (sectorial tuples, ``calc_sectorial``).  The n-fold sum is contracted
one variable at a time, so the cost is about prod(K_i) * d^2 for K_i nodes
per variable instead of a loop over node tuples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .geometry import (StolzDomain, minimal_stolz_angle, sector_boundary_contour, stolz_boundary_contour)
from .operators import (as_matrix, as_tuple, mean_ergodic_decompose, opnorm, require_commuting, resolvents,
                        scale_tuple, _resolvent_norms, is_normal)
from .symbols import DecayCertificate, ExtendedSymbol, PolynomialSymbol, Symbol, sup_norm

TWO_PI_I = 2j * math.pi
DEFLATION_POINT = 3.0


@dataclass
class CalculusResult:
    matrix: np.ndarray
    delta: float
    nodes: list
    angles: list
    tail_bound: float = 0.0
    meta: dict = field(default_factory=dict)

    def to_json(self):
        from .jsonio import matrix_to_json
        return {"matrix": matrix_to_json(self.matrix), "self_consistency_delta": self.delta,
                "nodes_per_variable": self.nodes, "angles": self.angles, "tail_bound": self.tail_bound,
                **self.meta}


@dataclass
class CalculusRequest:
    tuple: object
    symbol: Symbol
    angles: list | None = None
    nodes_per_piece: int = 16
    tol: float = 1e-9

    def run(self, mode: str = "ritt", **kw):
        if mode == "ritt":
            return calc_ritt(self.symbol, self.tuple, self.angles, self.nodes_per_piece, self.tol, **kw)
        if mode == "sectorial":
            return calc_sectorial(self.symbol, self.tuple, self.angles, self.nodes_per_piece, self.tol, **kw)
        raise PreconditionError(f"unknown calculus mode {mode!r}")


def contract(values, weights, res_stacks):
    """(2 pi i)^{-n} sum_k w_k values[k] R_1[k_1] ... R_n[k_n] for commuting resolvent stacks."""
    n = len(weights)
    M = np.asarray(values, dtype=complex)
    for i, w in enumerate(weights):
        shape = [1] * n
        shape[i] = -1
        M = M * (np.asarray(w) / TWO_PI_I).reshape(shape)
    M = np.tensordot(M, res_stacks[-1], axes=([n - 1], [0]))
    for i in range(n - 2, -1, -1):
        M = np.einsum("kij,...kjl->...il", res_stacks[i], M)
    return M


def _grid_values(symbol, axes):
    if hasattr(symbol, "grid"):
        return symbol.grid(*axes)
    n = len(axes)
    shaped = [np.asarray(a).reshape([-1 if j == i else 1 for j in range(n)]) for i, a in enumerate(axes)]
    return np.broadcast_to(symbol(*shaped), tuple(len(a) for a in axes))


def _symbol_poles(symbol, i):
    return symbol.variable_poles(i) if hasattr(symbol, "variable_poles") else ()


# ---------------------------------------------------------------------------
# Ritt calculus
# ---------------------------------------------------------------------------

def _default_beta(alpha, gamma):
    return 0.5 * (alpha + gamma) if alpha > 1e-6 else min(0.5 * gamma + 0.25, 0.5 * (alpha + gamma) + 0.3)


def ritt_angles(tup, symbol, angles=None):
    """Contour angles beta_i with alpha_i < beta_i < gamma_i, validated."""
    cert = getattr(symbol, "certificate", None)
    gamma = cert.angle if cert is not None and cert.angle is not None else math.pi / 2
    out = []
    for i, T in enumerate(tup):
        ang = minimal_stolz_angle(np.linalg.eigvals(T))
        if not ang.ritt_compatible:
            raise PreconditionError(f"operator {i} has spectrum outside every closed Stolz domain")
        beta = _default_beta(ang.alpha, gamma) if angles is None else float(np.broadcast_to(angles, (len(tup),))[i])
        if not ang.alpha < beta < gamma:
            raise PreconditionError(f"variable {i}: need alpha={ang.alpha:.6g} < beta={beta:.6g} < gamma={gamma:.6g}")
        out.append(beta)
    return out


def _deflate(T, symbol_vanishes_at_one: bool):
    """Move an eigenvalue 1 off the contour vertex.

    T is replaced by T P_ran + 3 P_ker.  The point 3 lies outside every Stolz
    contour, so the contour integral annihilates the kernel block, which is
    the correct value for symbols vanishing at 1.
    """
    eig = np.linalg.eigvals(T)
    if np.min(np.abs(eig - 1.0)) > 1e-9 * max(1.0, opnorm(T)):
        return T, False
    if not symbol_vanishes_at_one:
        raise PreconditionError("eigenvalue 1 lies on the contour vertex and the symbol is not certified to vanish there")
    split = mean_ergodic_decompose(T)
    return T @ split.P_ran + DEFLATION_POINT * split.P_ker, True


def _ritt_pass(symbol, ops, betas, nodes, rho):
    axes, weights, res = [], [], []
    for i, (T, beta) in enumerate(zip(ops, betas)):
        sing = list(np.linalg.eigvals(T)) + list(_symbol_poles(symbol, i))
        c = stolz_boundary_contour(beta, nodes, sing, rho_min=rho)
        axes.append(c.nodes)
        weights.append(c.weights)
        res.append(resolvents(T, c.nodes))
    F = _grid_values(symbol, axes)
    return contract(F, weights, res), [len(a) for a in axes]


def calc_ritt(symbol, tup, angles=None, nodes_per_piece: int = 16, tol: float = 1e-9,
              check: bool = True, strict: bool = True, return_info: bool = False):
    """phi(T) over the product of Stolz boundaries of angles beta_i.

    ``strict`` requires a stolz-type certificate (the bounded-operator
    construction only needs holomorphy near the closed contour, so
    polynomials may be passed with strict=False).  With ``check`` the
    quadrature is repeated on a finer rule and the difference is reported
    as ``delta``; a delta above ``tol`` relative raises NumericalFailure.
    """
    tup = as_tuple(tup)
    require_commuting(tup, max(tup.commutator_tol, 1e-10))
    cert = getattr(symbol, "certificate", None)
    if symbol.arity != len(tup):
        raise PreconditionError(f"symbol arity {symbol.arity} does not match tuple length {len(tup)}")
    if strict and (cert is None or cert.flavor != "stolz"):
        raise PreconditionError("calc_ritt needs a stolz-type decay certificate (or strict=False)")
    betas = ritt_angles(tup, symbol, angles)
    vanishes = cert is not None and cert.flavor == "stolz"
    ops = []
    deflated = []
    for T in tup:
        T2, did = _deflate(T, vanishes)
        ops.append(T2)
        deflated.append(did)
    result, nodes = _ritt_pass(symbol, ops, betas, nodes_per_piece, 3.0)
    delta = 0.0
    if check:
        finer, _ = _ritt_pass(symbol, ops, betas, nodes_per_piece + 8, 4.5)
        delta = float(opnorm(finer - result))
        scale = max(1.0, opnorm(finer))
        if delta > tol * scale:
            from .errors import NumericalFailure
            raise NumericalFailure(f"quadrature self-consistency {delta:.2e} exceeds {tol:.1e} x {scale:.3g}")
        result = finer
    if return_info:
        return CalculusResult(result, delta, nodes, betas, 0.0, {"mode": "ritt", "deflated_kernel": deflated})
    return result


# ---------------------------------------------------------------------------
# sectorial calculus
# ---------------------------------------------------------------------------

def sectorial_angles(tup, symbol, angles=None):
    cert = getattr(symbol, "certificate", None)
    theta = cert.angle if cert is not None and cert.angle is not None else math.pi / 2
    out = []
    for i, A in enumerate(tup):
        eig = np.linalg.eigvals(A)
        nz = eig[np.abs(eig) > 1e-14 * max(1.0, opnorm(A))]
        omega = float(np.max(np.abs(np.angle(nz)))) if nz.size else 0.0
        nu = 0.5 * (omega + theta) if angles is None else float(np.broadcast_to(angles, (len(tup),))[i])
        if not omega < nu < theta:
            raise PreconditionError(f"variable {i}: need omega={omega:.6g} < nu={nu:.6g} < theta={theta:.6g}")
        out.append(nu)
    return out


def sector_resolvent_constant(A, nu, radii=(1e-12, 1e12), samples=241) -> float:
    """Sampled sup of |z| ||R(z, A)|| on both rays of angle nu."""
    r = np.geomspace(radii[0], radii[1], samples)
    z = np.concatenate([r * np.exp(1j * nu), r * np.exp(-1j * nu)])
    return float(np.max(np.abs(z) * _resolvent_norms(A, z, is_normal(A))))


def _sector_contours(cert, ops, nus, nodes, rho, trunc_tol, symbol, arity):
    Ms = [1.5 * sector_resolvent_constant(A, nu) for A, nu in zip(ops, nus)]
    s = cert.s
    masses = [2.0 * M / (math.pi * s) for M in Ms]
    contours = []
    for i, (A, nu) in enumerate(zip(ops, nus)):
        others = float(np.prod([m for j, m in enumerate(masses) if j != i])) if arity > 1 else 1.0
        sing = [e for e in np.linalg.eigvals(A) if abs(e) > 0] + list(_symbol_poles(symbol, i))
        contours.append(sector_boundary_contour(nu, cert, trunc_tol / arity, nodes, sing,
                                                resolvent_constant=Ms[i], mass_factor=others, rho_min=rho))
    return contours


def _sector_pass(symbol, ops, contours):
    axes = [c.nodes for c in contours]
    F = _grid_values(symbol, axes)
    res = [resolvents(A, c.nodes) for A, c in zip(ops, contours)]
    return contract(F, [c.weights for c in contours], res), [len(a) for a in axes]


def calc_sectorial(symbol, tup, angles=None, nodes_per_piece: int = 16, tol: float = 1e-9,
                   check: bool = True, truncation_tol: float | None = None, certificate=None,
                   return_info: bool = False):
    """f(A) over the product of sector boundaries of angles nu_i.

    The sector-type certificate (|f| <= c prod |z|^s / (1 + |z|^{2s})) sets the
    radial truncation of each contour so that the neglected tails sum to at
    most ``truncation_tol`` (default tol / 10).
    """
    tup = as_tuple(tup)
    require_commuting(tup, max(tup.commutator_tol, 1e-10))
    cert = certificate if certificate is not None else getattr(symbol, "certificate", None)
    if cert is None or cert.flavor != "sector":
        raise PreconditionError("calc_sectorial needs a sector-type decay certificate")
    if symbol.arity != len(tup):
        raise PreconditionError(f"symbol arity {symbol.arity} does not match tuple length {len(tup)}")
    nus = sectorial_angles(tup, _with_cert(symbol, cert), angles)
    trunc = tol / 10 if truncation_tol is None else truncation_tol
    ops = list(tup)
    contours = _sector_contours(cert, ops, nus, nodes_per_piece, 3.0, trunc, symbol, len(ops))
    result, nodes = _sector_pass(symbol, ops, contours)
    delta = 0.0
    if check:
        fine = _sector_contours(cert, ops, nus, nodes_per_piece + 8, 4.5, trunc, symbol, len(ops))
        finer, _ = _sector_pass(symbol, ops, fine)
        delta = float(opnorm(finer - result))
        scale = max(1.0, opnorm(finer))
        if delta > tol * scale:
            from .errors import NumericalFailure
            raise NumericalFailure(f"quadrature self-consistency {delta:.2e} exceeds {tol:.1e} x {scale:.3g}")
        result = finer
    tail = float(sum(c.truncation["tail_bound"] for c in contours))
    if return_info:
        return CalculusResult(result, delta, nodes, nus, tail,
                              {"mode": "sectorial", "t_cut": [c.truncation["t_max"] for c in contours]})
    return result


class _CertView:
    def __init__(self, sym, cert):
        self._sym, self.certificate = sym, cert

    def __getattr__(self, name):
        return getattr(self._sym, name)


def _with_cert(symbol, cert):
    return symbol if getattr(symbol, "certificate", None) is cert else _CertView(symbol, cert)


# ---------------------------------------------------------------------------
# exact evaluations
# ---------------------------------------------------------------------------

def poly_eval(P: PolynomialSymbol, tup, order=None) -> np.ndarray:
    """Multivariate Horner evaluation of P at a commuting tuple.

    ``order`` permutes the variables before nesting the Horner scheme; for a
    commuting tuple every order gives the same matrix.
    """
    tup = as_tuple(tup)
    if P.arity != len(tup):
        raise PreconditionError("polynomial arity does not match tuple length")
    d = tup.dim
    eye = np.eye(d, dtype=complex)
    order = list(range(P.arity)) if order is None else list(order)
    c = np.transpose(P.coeffs, order)
    ops = [tup[i] for i in order]

    def horner(coef, k):
        if k == len(ops):
            return complex(coef) * eye
        acc = horner(coef[-1], k + 1)
        for j in range(coef.shape[0] - 2, -1, -1):
            acc = ops[k] @ acc + horner(coef[j], k + 1)
        return acc

    return horner(c, 0)


@dataclass
class JointDiagonalization:
    V: np.ndarray
    Vinv: np.ndarray
    eigenvalues: list
    condition: float


def joint_diagonalize(tup, seed: int = 0, tol: float = 1e-8) -> JointDiagonalization:
    """Common eigenbasis from a seeded random linear combination of the tuple."""
    tup = as_tuple(tup)
    rng = np.random.default_rng(seed)
    coef = rng.normal(size=len(tup)) + 1j * rng.normal(size=len(tup))
    C = sum(c * T for c, T in zip(coef, tup))
    _, V = np.linalg.eig(C)
    kappa = float(np.linalg.cond(V))
    if not kappa < 1e8:
        raise PreconditionError(f"no common diagonalizer: condition {kappa:.2e}")
    Vinv = np.linalg.inv(V)
    eigs = []
    for T in tup:
        D = Vinv @ T @ V
        off = D - np.diag(np.diag(D))
        if np.linalg.norm(off) > tol * kappa * max(1.0, opnorm(T)):
            raise PreconditionError("no common diagonalizer: residual off-diagonal part too large")
        eigs.append(np.diag(D).copy())
    return JointDiagonalization(V, Vinv, eigs, kappa)


def spectral_oracle(symbol, tup, seed: int = 0) -> np.ndarray:
    """V diag(symbol(joint eigenvalues)) V^{-1} for simultaneously diagonalizable tuples."""
    jd = joint_diagonalize(tup, seed)
    vals = np.asarray(symbol(*jd.eigenvalues), dtype=complex)
    vals = np.broadcast_to(vals, jd.eigenvalues[0].shape)
    return (jd.V * vals[None, :]) @ jd.Vinv


def calc_extended(esym: ExtendedSymbol, tup, angles=None, **kw) -> np.ndarray:
    """top(T) + sum over removed index sets S of lower[S](T without S) + c I."""
    tup = as_tuple(tup)
    n = esym.arity
    if len(tup) != n:
        raise PreconditionError("extended symbol arity does not match tuple length")
    betas = None if angles is None else list(np.broadcast_to(angles, (n,)))
    out = esym.constant * np.eye(tup.dim, dtype=complex)
    for key, sym in esym.components():
        cert = getattr(sym, "certificate", None)
        if cert is None:
            raise PreconditionError(f"component {key} carries no certificate")
        keep = [i for i in range(n) if i not in key]
        sub = [tup[i] for i in keep]
        ang = None if betas is None else [betas[i] for i in keep]
        out = out + calc_ritt(sym, sub, ang, **kw)
    return out


@dataclass
class LimitReport:
    r_grid: list
    deviations: list
    monotone: bool
    passed: bool

    def to_json(self):
        return {"r_grid": self.r_grid, "deviations": self.deviations, "monotone": self.monotone,
                "pass": self.passed}


def limit_check_r_to_1(phi, tup, r_grid=None, angles=None, final_tol: float = 1e-6, **kw) -> LimitReport:
    """Table of ||phi(rT) - phi(T)|| as r increases to 1."""
    if r_grid is None:
        r_grid = [1.0 - 10.0 ** (-k) for k in range(1, 9)]
    tup = as_tuple(tup)
    base = calc_ritt(phi, tup, angles, **kw)
    devs = []
    for r in r_grid:
        devs.append(float(opnorm(calc_ritt(phi, scale_tuple(tup, r), angles, **kw) - base)))
    slack = 1e-10 * max(1.0, opnorm(base))
    mono = all(b <= a + slack for a, b in zip(devs, devs[1:]))
    return LimitReport(list(r_grid), devs, mono, bool(mono and devs[-1] < final_tol))


@dataclass
class ApproximationResult:
    A_eps: np.ndarray
    deviation: float


def approximant(A, eps: float) -> np.ndarray:
    """(A + eps I)(I + eps A)^{-1}, bounded and invertible for small eps > 0."""
    A = as_matrix(A)
    eye = np.eye(A.shape[0])
    M = eye + eps * A
    if np.linalg.cond(M) > 1e12:
        raise PreconditionError("I + eps A is singular")
    return (A + eps * eye) @ np.linalg.inv(M)


def sectorial_approximation(A, eps: float, f, angles=None, **kw) -> ApproximationResult:
    A = as_matrix(A)
    Ae = approximant(A, eps)
    if eps == 0:
        return ApproximationResult(Ae, 0.0)
    fa = calc_sectorial(f, [A], angles, **kw)
    fe = calc_sectorial(f, [Ae], angles, **kw)
    return ApproximationResult(Ae, float(opnorm(fe - fa)))


@dataclass
class BoundEstimate:
    K_est: float
    argmax: int
    ratios: list

    def to_json(self):
        return {"K_est": self.K_est, "argmax": self.argmax, "ratios": self.ratios}


def calculus_bound_estimate(tup, family, domains, apply=None, norm=None, samples: int = 400) -> BoundEstimate:
    """max over the family of ||phi(T)|| / sup |phi| over the product of domains.

    ``apply`` maps (symbol, tuple) to an operator (default: Horner for
    polynomials, Ritt calculus otherwise) and ``norm`` measures it (default:
    spectral norm).
    """
    family = list(family)
    if not family:
        raise PreconditionError("empty symbol family")
    tup = as_tuple(tup)

    def default_apply(sym, t):
        if isinstance(sym, PolynomialSymbol):
            return poly_eval(sym, t)
        return calc_ritt(sym, t)

    apply = apply or default_apply
    norm = norm or opnorm
    ratios = []
    for sym in family:
        sn = sup_norm(sym, domains, samples).value
        if sn == 0:
            raise PreconditionError("symbol with zero sup norm in family")
        ratios.append(float(norm(apply(sym, tup)) / sn))
    k = int(np.argmax(ratios))
    return BoundEstimate(ratios[k], k, ratios)
