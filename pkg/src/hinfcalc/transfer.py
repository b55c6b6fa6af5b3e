"""Transfer between the Ritt calculus of T and the sectorial calculus of A = I - T.

A symbol f living on the product of reflected Stolz domains 1 - B_gamma_i is
split by Cauchy's formula over the boundary of 1 - B_beta_i, which in each
variable consists of

* ``gamma1``: the two segments through the vertex 0, and
* ``gamma2``: the arc of radius sin(beta_i) about 1.

For j in {1, 2}^n the piece f_j is the Cauchy integral of f over the product
of the selected boundary parts; the pieces add up to f inside the domain.
The auxiliary function g replaces every arc piece by its value at 0 divided
by (1 + z_i), which turns the sum into a function decaying at 0 and at
infinity on a sector, so that the sectorial calculus applies to it.

All quantities here are contractions of one tensor F = f(nodes_1 x ... x nodes_n)
with per-variable kernel matrices, so pieces, g and the operator-side terms
share the same quadrature.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .calculus import TWO_PI_I, _sector_contours, calc_ritt, calc_sectorial, contract
from .errors import PoleProximityError, PreconditionError
from .geometry import ShiftedStolz, shifted_stolz_contour
from .operators import as_matrix, opnorm, require_commuting, resolvents
from .symbols import DecayCertificate, Symbol, pullback_one_minus, sup_norm, verify_decay

SMALL_REGIME = 0.25
LARGE_REGIME = 4.0


@dataclass
class TransferContext:
    f: Symbol
    gammas: list
    betas: list
    theta: float
    nodes: list          # per variable: gamma1 nodes followed by gamma2 nodes
    weights: list
    n_gamma1: list       # number of gamma1 nodes per variable
    F: np.ndarray
    decay: DecayCertificate | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.betas)

    def part(self, i, j):
        """(nodes, weights) of boundary part j in {1, 2} of variable i."""
        k = self.n_gamma1[i]
        sl = slice(0, k) if j == 1 else slice(k, None)
        return self.nodes[i][sl], self.weights[i][sl]

    def arc_at_zero(self, i):
        """Row vector w / (2 pi i lam) over the arc nodes: the arc Cauchy kernel at z = 0."""
        lam, w = self.part(i, 2)
        return w / (TWO_PI_I * lam)


def _kernel(lam, w, z):
    z = np.asarray(z, dtype=complex).ravel()
    return w[None, :] / (TWO_PI_I * (lam[None, :] - z[:, None]))


def _segment_distance(z, a, b):
    t = np.clip(((z - a) * np.conj(b - a)).real / abs(b - a) ** 2, 0.0, 1.0)
    return np.abs(z - (a + t * (b - a)))


def build_context(f: Symbol, gammas, betas, theta: float, nodes_per_panel: int = 16, levels_at_zero: int = 40,
                  arc_panels: int = 32, validate: bool = True, samples: int = 2000, seed: int = 0) -> TransferContext:
    """Contours, node tensor and validated angle chain theta < beta_i < gamma_i < pi/2."""
    n = f.arity
    gammas = [float(g) for g in np.broadcast_to(gammas, (n,))]
    betas = [float(b) for b in np.broadcast_to(betas, (n,))]
    for g, b in zip(gammas, betas):
        if not (0 < theta < b < g < math.pi / 2):
            raise PreconditionError(f"angle chain theta={theta} < beta={b} < gamma={g} < pi/2 violated")
    cert = f.certificate
    decay = None
    if cert is not None:
        # a sector-type bound restricted to the reflected domain is a bound c |z|^s there
        decay = DecayCertificate(cert.c, cert.s, "shifted") if cert.flavor in ("sector", "shifted") else None
    if validate:
        if decay is None:
            raise PreconditionError("f needs a sector- or shifted-type certificate |f| <= c prod |z_i|^s")
        rep = verify_decay(f, decay, [ShiftedStolz(g) for g in gammas], samples, seed)
        if not rep.passed:
            raise PreconditionError(f"certificate violated on samples (ratio {rep.max_ratio:.4g})")
    nodes, weights, n1 = [], [], []
    for i, b in enumerate(betas):
        c = shifted_stolz_contour(b, nodes_per_panel, f.variable_poles(i), levels_at_zero, arc_panels)
        g1 = np.array([c.pieces[k].label == "gamma1" for k in c.piece_index])
        nodes.append(np.concatenate([c.nodes[g1], c.nodes[~g1]]))
        weights.append(np.concatenate([c.weights[g1], c.weights[~g1]]))
        n1.append(int(g1.sum()))
    F = f.grid(*nodes)
    return TransferContext(f, gammas, betas, theta, nodes, weights, n1, F, decay,
                           {"nodes_per_panel": nodes_per_panel, "levels_at_zero": levels_at_zero,
                            "arc_panels": arc_panels})


def distance_to_part(ctx: TransferContext, i: int, j: int, z):
    z = np.asarray(z, dtype=complex)
    b = ctx.betas[i]
    top = math.cos(b) * complex(math.cos(b), math.sin(b))
    if j == 1:
        return np.minimum(_segment_distance(z, top, 0j), _segment_distance(z, 0j, top.conjugate()))
    r = math.sin(b)
    ang = np.angle(z - 1.0)
    on_arc = np.abs(ang) <= math.pi / 2 + b
    radial = np.abs(np.abs(z - 1.0) - r)
    ends = np.minimum(np.abs(z - top), np.abs(z - top.conjugate()))
    return np.where(on_arc, radial, ends)


def _contract_paired(T, mats):
    """sum_k T[k_1..k_n] prod_i mats[i][p, k_i] for paired evaluation points p."""
    M = np.tensordot(mats[0], T, axes=([1], [0]))
    for K in mats[1:]:
        M = np.einsum("pk...,pk->p...", M, K)
    return M


def _contract_grid(T, mats):
    M = T
    for i, K in enumerate(mats):
        M = np.moveaxis(np.tensordot(K, M, axes=([1], [i])), 0, i)
    return M


class PieceEvaluator:
    """f_j(z) = (2 pi i)^{-n} int_{part j_1} ... int_{part j_n} f(lam) / prod (lam_i - z_i) dlam."""

    def __init__(self, ctx: TransferContext, index, min_distance: float = 1e-6):
        self.ctx = ctx
        self.index = tuple(int(j) for j in index)
        if len(self.index) != ctx.n or any(j not in (1, 2) for j in self.index):
            raise PreconditionError(f"bad piece index {index}")
        sl = []
        for i, j in enumerate(self.index):
            k = ctx.n_gamma1[i]
            sl.append(slice(0, k) if j == 1 else slice(k, None))
        self.block = ctx.F[tuple(sl)]
        self.min_distance = min_distance

    def _mats(self, zs):
        mats = []
        for i, (j, z) in enumerate(zip(self.index, zs)):
            z = np.asarray(z, dtype=complex).ravel()
            if np.any(distance_to_part(self.ctx, i, j, z) <= self.min_distance):
                raise PoleProximityError(f"evaluation point on contour part {j} of variable {i}")
            mats.append(_kernel(*self.ctx.part(i, j), z))
        return mats

    def __call__(self, *zs):
        zs = np.broadcast_arrays(*[np.asarray(z, dtype=complex) for z in zs])
        shape = zs[0].shape
        return _contract_paired(self.block, self._mats(zs)).reshape(shape)

    def grid(self, *axes):
        return _contract_grid(self.block, self._mats(axes))


def build_pieces(ctx: TransferContext) -> dict:
    return {idx: PieceEvaluator(ctx, idx) for idx in itertools.product((1, 2), repeat=ctx.n)}


def cauchy_residual(ctx: TransferContext, points) -> float:
    """max |sum_j f_j(z) - f(z)| over the given points (rows are n-tuples)."""
    pts = np.asarray(points, dtype=complex)
    zs = [pts[:, i] for i in range(ctx.n)]
    total = sum(p(*zs) for p in build_pieces(ctx).values())
    return float(np.max(np.abs(total - ctx.f(*zs))))


# ---------------------------------------------------------------------------
# auxiliary function
# ---------------------------------------------------------------------------

def _reduction(ctx, i):
    """Map the node axis of variable i to (gamma1 nodes, one slot for the arc evaluated at 0)."""
    k = ctx.n_gamma1[i]
    K = ctx.nodes[i].size
    Rd = np.zeros((K, k + 1), dtype=complex)
    Rd[:k, :k] = np.eye(k)
    Rd[k:, k] = ctx.arc_at_zero(i)
    return Rd


class CauchyTensorSymbol(Symbol):
    """z -> sum_k T[k] prod_i E_i(z_i)[k_i] where E_i = [gamma1 Cauchy kernel, 1 / (1 + z)].

    This is the shape shared by g, by g-tilde and by the one-variable
    auxiliary functions used in the operator assembly.
    """

    def __init__(self, ctx: TransferContext, tensor, variables, certificate=None, name=""):
        self.ctx = ctx
        self.T = tensor
        self.vars = list(variables)
        self.arity = len(self.vars)
        self.poles = tuple((-1.0,) for _ in self.vars)
        self.certificate = certificate
        self.name = name

    def _mats(self, zs):
        mats = []
        for v, z in zip(self.vars, zs):
            z = np.asarray(z, dtype=complex).ravel()
            lam, w = self.ctx.part(v, 1)
            mats.append(np.hstack([_kernel(lam, w, z), (1.0 / (1.0 + z))[:, None]]))
        return mats

    def _evaluate(self, zs):
        shape = zs[0].shape
        return _contract_paired(self.T, self._mats(zs)).reshape(shape)

    def grid(self, *axes):
        return _contract_grid(self.T, self._mats(axes))


def build_auxiliary_g(ctx: TransferContext) -> CauchyTensorSymbol:
    """g(z) = sum_j F_j(z) with F_j(z) = f_j(z with arc coordinates set to 0) / prod_{arc coords}(1 + z_i)."""
    T = ctx.F
    for i in range(ctx.n):
        T = np.moveaxis(np.tensordot(_reduction(ctx, i), T, axes=([0], [i])), 0, i)
    return CauchyTensorSymbol(ctx, T, range(ctx.n), name="g")


def single_variable_g(ctx: TransferContext, z):
    """The one-variable formula g(z) = F_1(z) + F_2(0) / (1 + z), computed from the pieces directly."""
    if ctx.n != 1:
        raise PreconditionError("single-variable formula needs n = 1")
    f1 = PieceEvaluator(ctx, (1,))
    f2 = PieceEvaluator(ctx, (2,))
    z = np.asarray(z, dtype=complex)
    return f1(z) + f2(np.zeros(1))[0] / (1.0 + z)


# ---------------------------------------------------------------------------
# sampled decay and sup-norm control
# ---------------------------------------------------------------------------

def _rays(theta, radii, angles=None):
    ang = [theta, 0.0, -theta] if angles is None else angles
    return np.concatenate([radii * np.exp(1j * a) for a in ang])


def _weight(z, s):
    a = np.abs(z)
    return np.minimum(a ** s, 1.0 / a)


@dataclass
class DecayCheck:
    regimes: dict
    passed: bool
    exponent: float
    meta: dict = field(default_factory=dict)

    def to_json(self):
        return {"regimes": self.regimes, "pass": self.passed, "exponent": self.exponent, **self.meta}


def _regime_ratios(g, theta, s, per_decade, span):
    small = np.geomspace(span[0], SMALL_REGIME, max(2, int(per_decade * math.log10(SMALL_REGIME / span[0])) + 1))
    large = np.geomspace(LARGE_REGIME, span[1], max(2, int(per_decade * math.log10(span[1] / LARGE_REGIME)) + 1))
    zs = {"small": _rays(theta, small), "large": _rays(theta, large)}
    out = {}
    for combo in itertools.product(("small", "large"), repeat=g.arity):
        axes = [zs[c] for c in combo]
        vals = np.abs(g.grid(*axes))
        w = 1.0
        for i, a in enumerate(axes):
            shape = [1] * g.arity
            shape[i] = -1
            w = w * _weight(a, s).reshape(shape)
        out["/".join(combo)] = float(np.max(vals / w))
    return out


def check_g_decay(g, theta: float, grid_spec: dict | None = None) -> DecayCheck:
    """Per-regime max of |g| / prod min(|z_i|^s, |z_i|^{-1}) on log grids along the rays 0, +-theta.

    Small means |z| < 1/4 and large |z| > 4.  The grid density is doubled and
    the radial span widened by a decade at both ends; a regime passes when its
    ratio is finite and moves by less than ``rel_tol`` under both changes.
    """
    spec = {"per_decade": 40, "span": (1e-6, 1e6), "rel_tol": 0.02, "s": None}
    spec.update(grid_spec or {})
    s = spec["s"]
    if s is None:
        cert = getattr(getattr(g, "ctx", None), "decay", None)
        s = min(cert.s, 1.0) if cert is not None else 1.0
    lo, hi = spec["span"]
    base = _regime_ratios(g, theta, s, spec["per_decade"], (lo, hi))
    dense = _regime_ratios(g, theta, s, 2 * spec["per_decade"], (lo, hi))
    wide = _regime_ratios(g, theta, s, spec["per_decade"], (lo / 10, hi * 10))
    regimes = {}
    ok = True
    for key in base:
        b, d, w = base[key], dense[key], wide[key]
        ref = max(b, d, w)
        change = 0.0 if ref == 0 else max(abs(d - b), abs(w - b)) / ref
        stable = math.isfinite(ref) and change < spec["rel_tol"]
        regimes[key] = {"ratio": d, "coarse": b, "wide": w, "relative_change": change, "stable": stable}
        ok = ok and stable
    return DecayCheck(regimes, ok, s, {"per_decade": spec["per_decade"], "span": list(spec["span"])})


def sampled_sector_sup(g, theta: float, per_decade: int = 10, span=(1e-6, 1e6), refine_rounds: int = 6):
    """sup |g| over the product of the boundary rays of the sector of angle theta, with local refinement."""
    n = g.arity
    tmin, tmax = math.log(span[0]), math.log(span[1])
    m = int(per_decade * (tmax - tmin) / math.log(10)) + 1
    t = np.linspace(tmin, tmax, m)
    signs = (1.0, -1.0)

    def pts(tt, sg):
        return np.exp(tt + 1j * sg * theta)

    axes = [np.concatenate([pts(t, sg) for sg in signs]) for _ in range(n)]
    vals = np.abs(g.grid(*axes))
    idx = np.unravel_index(int(np.argmax(vals)), vals.shape)
    best = float(vals[idx])
    cur_t = [t[k % m] for k in idx]
    cur_s = [signs[k // m] for k in idx]
    h = (t[1] - t[0]) if m > 1 else 1.0
    loc = np.linspace(-1, 1, 9)
    for _ in range(refine_rounds):
        laxes = [pts(cur_t[i] + h * loc, cur_s[i]) for i in range(n)]
        lv = np.abs(g.grid(*laxes))
        j = np.unravel_index(int(np.argmax(lv)), lv.shape)
        if lv[j] >= best:
            best = float(lv[j])
            cur_t = [cur_t[i] + h * loc[j[i]] for i in range(n)]
        h *= 0.35
    return best


@dataclass
class SupNormCheck:
    ratios: list
    ratios_dense: list
    max_ratio: float
    max_change: float
    passed: bool

    def to_json(self):
        return {"ratios": self.ratios, "ratios_dense": self.ratios_dense, "max_ratio": self.max_ratio,
                "max_relative_change": self.max_change, "pass": self.passed}


def check_g_supnorm(contexts, per_decade: int = 10, f_samples: int = 200, rel_tol: float = 0.02) -> SupNormCheck:
    """Ratios ||g||_sector / ||f||_domain, recomputed at doubled sampling density."""
    contexts = list(contexts)
    if len(contexts) < 1:
        raise PreconditionError("empty family")
    ratios, dense = [], []
    for ctx in contexts:
        g = build_auxiliary_g(ctx)
        doms = [ShiftedStolz(gm) for gm in ctx.gammas]
        fn = sup_norm(ctx.f, doms, f_samples).value
        fn2 = sup_norm(ctx.f, doms, 2 * f_samples).value
        if fn == 0:
            raise PreconditionError("f = 0 has no defined ratio")
        ratios.append(sampled_sector_sup(g, ctx.theta, per_decade) / fn)
        dense.append(sampled_sector_sup(g, ctx.theta, 2 * per_decade) / fn2)
    change = max(abs(a - b) / max(a, b) for a, b in zip(ratios, dense))
    return SupNormCheck(ratios, dense, max(dense), change, bool(change < rel_tol))


def estimate_sector_certificate(sym, theta: float, s: float, per_decade: int = 10, span=(1e-4, 1e4),
                                safety: float = 4.0) -> DecayCertificate:
    """Sector-type certificate for a computed symbol, from samples on the rays 0 and +-theta.

    With s' = min(s, 1), min(|z|^s', |z|^{-1}) <= 2 |z|^s' / (1 + |z|^{2 s'}), so
    a sampled constant C for the first weight gives c = safety * 2^n * C for
    the second.  This is a sampled bound, not a proof.  The span stays
    moderate because for tiny |z| the computed values sit at the roundoff
    floor and the ratio measures noise rather than the function.
    """
    sp = min(s, 1.0)
    radii = np.geomspace(span[0], span[1], int(per_decade * math.log10(span[1] / span[0])) + 1)
    z = _rays(theta, radii)
    vals = np.abs(sym.grid(*([z] * sym.arity)))
    w = 1.0
    for i in range(sym.arity):
        shape = [1] * sym.arity
        shape[i] = -1
        w = w * _weight(z, sp).reshape(shape)
    C = float(np.max(vals / w))
    return DecayCertificate(max(C, 1e-300) * safety * 2 ** sym.arity, sp, "sector", theta)


# ---------------------------------------------------------------------------
# operator side
# ---------------------------------------------------------------------------

@dataclass
class ForwardReport:
    difference: float
    norm_fA: float
    threshold: float
    passed: bool

    def to_json(self):
        return {"difference": self.difference, "norm_fA": self.norm_fA, "threshold": self.threshold,
                "pass": self.passed}


def transfer_forward(f: Symbol, tup, sector_angles=None, ritt_angles=None, tol: float = 1e-7, **kw) -> ForwardReport:
    """Compare f(I - T) from the sectorial calculus with phi(T), phi(l) = f(1 - l), from the Ritt calculus."""
    ops = [as_matrix(T) for T in tup]
    A = [np.eye(T.shape[0]) - T for T in ops]
    fA = calc_sectorial(f, A, sector_angles, **kw)
    phi = pullback_one_minus(f)
    phiT = calc_ritt(phi, ops, ritt_angles, **kw)
    diff = float(opnorm(fA - phiT))
    nf = float(opnorm(fA))
    thr = tol * (1.0 + nf)
    return ForwardReport(diff, nf, thr, diff <= thr)


@dataclass
class ReverseReport:
    difference: float
    norm_phiT: float
    relative: float
    passed: bool
    terms: dict
    meta: dict = field(default_factory=dict)

    def to_json(self):
        return {"difference": self.difference, "norm_phiT": self.norm_phiT, "relative": self.relative,
                "pass": self.passed, "term_norms": self.terms, **self.meta}


class _NoPoles:
    def variable_poles(self, i):
        return (-1.0,)


def assemble_reverse_n2(ctx: TransferContext, A1, A2, nu=None, tol: float = 1e-6, quad_tol: float = 1e-9,
                        compare: bool = True):
    """Sum of the four operator pieces f_{ij}(A1, A2), assembled through g and the one-variable auxiliaries.

    f_11(A) = g(A) - (I+A2)^{-1} f_12(A1, 0) - (I+A1)^{-1} f_21(0, A2) - (I+A1)^{-1}(I+A2)^{-1} f_22(0, 0)
    f_12(A1, 0) = gt(A1) - (I+A1)^{-1} f_22(0, 0), gt(z) = f_12(z, 0) + f_22(0, 0) / (1 + z)
    f_12(A1, A2) = (2 pi i)^{-1} int_arc [g^{l}(A1) - (I+A1)^{-1} c(l)] R(l, A2) dl
    f_22(A1, A2) = arc x arc contour integral of f R(., A1) R(., A2)

    Returns (matrix, report); the report compares with the Ritt calculus of
    phi(l) = f(1 - l) at T_i = I - A_i.
    """
    if ctx.n != 2:
        raise PreconditionError("the reverse assembly is implemented for n = 2")
    A1, A2 = as_matrix(A1), as_matrix(A2)
    require_commuting([A1, A2])
    d = A1.shape[0]
    eye = np.eye(d)
    theta = ctx.theta
    for i, A in enumerate((A1, A2)):
        eig = np.linalg.eigvals(A)
        nz = eig[np.abs(eig) > 1e-14]
        om = float(np.max(np.abs(np.angle(nz)))) if nz.size else 0.0
        if not om < theta:
            raise PreconditionError(f"A{i + 1} has sectoriality angle {om:.4g} >= theta={theta:.4g}")
        lam, _ = ctx.part(i, 2)
        if np.min(np.abs(eig[:, None] - lam[None, :])) <= 1e-3 or np.any(distance_to_part(ctx, i, 2, eig) <= 1e-3):
            raise PreconditionError(f"spectrum of A{i + 1} within 1e-3 of the arc")
    if nu is None:
        om = max(float(np.max(np.abs(np.angle(e[np.abs(e) > 1e-14])))) if np.any(np.abs(e) > 1e-14) else 0.0
                 for e in (np.linalg.eigvals(A1), np.linalg.eigvals(A2)))
        nu = 0.5 * (om + theta)
    s = ctx.decay.s if ctx.decay is not None else 1.0
    inv1, inv2 = np.linalg.inv(eye + A1), np.linalg.inv(eye + A2)

    g = build_auxiliary_g(ctx)
    Rd1, Rd2 = _reduction(ctx, 0), _reduction(ctx, 1)
    k1, k2 = ctx.n_gamma1
    f22_00 = complex(g.T[k1, k2])

    # g(A1, A2)
    g.certificate = estimate_sector_certificate(g, theta, s)
    gA = calc_sectorial(g, [A1, A2], nu, tol=quad_tol, return_info=True)

    # f_12(A1, 0) and f_21(0, A2) via the one-variable auxiliaries
    gt1 = CauchyTensorSymbol(ctx, g.T[:, k2], [0], name="gt1")
    gt1.certificate = estimate_sector_certificate(gt1, theta, s)
    gt2 = CauchyTensorSymbol(ctx, g.T[k1, :], [1], name="gt2")
    gt2.certificate = estimate_sector_certificate(gt2, theta, s)
    f12_0 = calc_sectorial(gt1, [A1], nu, tol=quad_tol) - inv1 * f22_00
    f21_0 = calc_sectorial(gt2, [A2], nu, tol=quad_tol) - inv2 * f22_00

    f11 = gA.matrix - inv2 @ f12_0 - inv1 @ f21_0 - inv1 @ inv2 * f22_00

    # mixed pieces: one arc variable handled by direct quadrature, the other by the sectorial calculus
    def mixed(sector_var):
        other = 1 - sector_var
        A_s, A_o = (A1, A2) if sector_var == 0 else (A2, A1)
        inv_s = inv1 if sector_var == 0 else inv2
        Rd = Rd1 if sector_var == 0 else Rd2
        k_o = ctx.n_gamma1[other]
        # T_red[a, l]: sector variable reduced (gamma1 nodes + arc-at-0 slot), other variable on its arc nodes
        Fm = ctx.F if sector_var == 0 else ctx.F.T
        T_red = Rd.T @ Fm[:, k_o:]
        aux = CauchyTensorSymbol(ctx, T_red, [sector_var], name="g_lambda")
        # a certificate valid for every arc node: sample the worst column
        cols = np.abs(T_red).sum(axis=0)
        worst = int(np.argmax(cols))
        probe = CauchyTensorSymbol(ctx, T_red[:, worst], [sector_var])
        cert = estimate_sector_certificate(probe, theta, s, safety=16.0)
        cert = DecayCertificate(cert.c * float(np.max(cols) / max(cols[worst], 1e-300)), cert.s, "sector", theta)
        cont = _sector_contours(cert, [A_s], [nu], 24, 4.5, quad_tol / 10, _NoPoles(), 1)[0]
        G = aux._mats([cont.nodes])[0] @ T_red            # (K_sector, L_arc)
        R_s = resolvents(A_s, cont.nodes)
        gl = np.einsum("k,kl,kij->lij", cont.weights / TWO_PI_I, G, R_s)
        c_l = T_red[-1, :]
        h = gl - inv_s[None] * c_l[:, None, None]
        lam, w = ctx.part(other, 2)
        R_o = resolvents(A_o, lam)
        return np.einsum("l,lij,ljk->ik", w / TWO_PI_I, h, R_o)

    f12 = mixed(0)
    f21 = mixed(1)

    lam1, w1 = ctx.part(0, 2)
    lam2, w2 = ctx.part(1, 2)
    f22 = contract(ctx.F[k1:, k2:], [w1, w2], [resolvents(A1, lam1), resolvents(A2, lam2)])

    total = f11 + f12 + f21 + f22
    terms = {"f11": float(opnorm(f11)), "f12": float(opnorm(f12)), "f21": float(opnorm(f21)),
             "f22": float(opnorm(f22)), "g(A)": float(opnorm(gA.matrix))}
    meta = {"nu": nu, "g_certificate": g.certificate.to_json(), "g_quadrature_delta": gA.delta}
    if not compare:
        return total, ReverseReport(math.nan, math.nan, math.nan, True, terms, meta)
    phi = pullback_one_minus(ctx.f)
    if phi.certificate is None or phi.certificate.flavor != "stolz":
        phi = phi.with_certificate(DecayCertificate(ctx.decay.c, ctx.decay.s, "stolz"))
    ref = calc_ritt(phi, [eye - A1, eye - A2], tol=quad_tol)
    diff = float(opnorm(total - ref))
    nref = float(opnorm(ref))
    rel = diff / (1.0 + nref)
    return total, ReverseReport(diff, nref, rel, bool(rel <= tol), terms, meta)
