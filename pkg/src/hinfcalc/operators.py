"""Matrix operators: spectra, resolvents, Ritt and sectorial classification,
commutation checks and the mean-ergodic splitting.

Matrices are plain 2-d complex numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import NonCommutingError, PoleProximityError, PreconditionError
from .geometry import StolzDomain, minimal_stolz_angle

DIAG_COND_LIMIT = 1e8
EIGENVALUE_ONE_TOL = 1e-9
RESOLVENT_TOL = 1e-12


def as_matrix(T) -> np.ndarray:
    a = np.asarray(T, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise PreconditionError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise PreconditionError("matrix has non-finite entries")
    return a


def opnorm(T) -> float:
    return float(np.linalg.norm(T, 2)) if np.size(T) else 0.0


def is_normal(T, tol: float = 1e-12) -> bool:
    T = as_matrix(T)
    scale = max(opnorm(T), 1e-300) ** 2
    return float(np.linalg.norm(T @ T.conj().T - T.conj().T @ T)) <= tol * scale


@dataclass
class SpectralData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    inverse_condition: float
    diagonalizable: bool

    @property
    def condition(self) -> float:
        return self.inverse_condition


def spectrum(T) -> SpectralData:
    """Eigen-decomposition with a conditioning-based diagonalizability flag.

    ``inverse_condition`` holds kappa(V) = ||V|| ||V^{-1}||; the matrix counts as
    diagonalizable when kappa(V) < 1e8.
    """
    T = as_matrix(T)
    try:
        w, V = sla.eig(T)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise PreconditionError(f"eigensolver failed: {exc}") from exc
    kappa = float(np.linalg.cond(V))
    if not math.isfinite(kappa):
        kappa = math.inf
    return SpectralData(w, V, kappa, kappa < DIAG_COND_LIMIT)


def resolvent(T, lam: complex, check: bool = True) -> np.ndarray:
    """(lam I - T)^{-1}."""
    T = as_matrix(T)
    w = np.linalg.eigvals(T)
    if np.min(np.abs(w - lam)) <= RESOLVENT_TOL * max(1.0, abs(lam)):
        raise PoleProximityError(f"lambda={lam} is within tolerance of the spectrum")
    eye = np.eye(T.shape[0])
    R = np.linalg.solve(lam * eye - T, eye)
    if check:
        res = np.linalg.norm((lam * eye - T) @ R - eye)
        if res > 1e-10 * max(1.0, np.linalg.norm(R)):
            raise PoleProximityError(f"resolvent residual {res:.2e} too large near lambda={lam}")
    return R


def resolvents(T, lams) -> np.ndarray:
    """Stack of resolvents (lam_k I - T)^{-1}, shape (K, d, d)."""
    T = as_matrix(T)
    lams = np.asarray(lams, dtype=complex).ravel()
    eye = np.eye(T.shape[0])
    return np.linalg.inv(lams[:, None, None] * eye - T[None])


def _resolvent_norms(T, lams, normal: bool):
    T = as_matrix(T)
    lams = np.asarray(lams, dtype=complex).ravel()
    if normal:
        w = np.linalg.eigvals(T)
        return 1.0 / np.min(np.abs(lams[:, None] - w[None, :]), axis=1)
    out = np.empty(lams.size)
    for start in range(0, lams.size, 512):
        R = resolvents(T, lams[start:start + 512])
        out[start:start + 512] = np.linalg.norm(R, 2, axis=(1, 2))
    return out


# ---------------------------------------------------------------------------
# power constants
# ---------------------------------------------------------------------------

@dataclass
class PowerWindow:
    dense: int
    geometric_powers: list
    power_sup: float
    diff_sup: float
    diff_sup_dense: float
    diff_argmax: int
    stabilized: bool
    slope: float

    def to_json(self):
        return {"dense_window": self.dense, "geometric_powers": self.geometric_powers,
                "power_sup": self.power_sup, "diff_sup": self.diff_sup, "diff_sup_dense": self.diff_sup_dense,
                "diff_argmax": self.diff_argmax, "stabilized": self.stabilized, "slope": self.slope}


def power_constants(T, N: int = 2048, max_doublings: int = 48, normal: bool | None = None) -> PowerWindow:
    """sup ||T^n|| and sup n ||T^n - T^{n-1}|| over n <= N, extended geometrically.

    Past the dense window, n - 1 runs over N * 2^j (j = 1, 2, ...) using repeated
    squaring.  The window counts as stabilized once four consecutive geometric
    samples of both sequences are nonincreasing and the differences stay below
    half of their running sup,
    so eigenvalues extremely close to 1 are followed until their powers decay.
    """
    T = as_matrix(T)
    d = T.shape[0]
    if normal is None:
        normal = is_normal(T)
    eye = np.eye(d)
    ns = np.arange(1, N + 1)
    if normal:
        w = np.linalg.eigvals(T)
        logw = np.log(np.where(w == 0, 1e-300, w).astype(complex))
        pw = np.exp(np.outer(ns, logw))
        pw[:, w == 0] = 0.0
        pw_prev = np.exp(np.outer(ns - 1, logw))
        pw_prev[:, w == 0] = 0.0
        pw_prev[0, :] = 1.0
        powers = np.max(np.abs(pw), axis=1)
        diffs = ns * np.max(np.abs(pw - pw_prev), axis=1)
    else:
        powers = np.empty(N)
        diffs = np.empty(N)
        P_prev = eye
        for n in range(1, N + 1):
            P = P_prev @ T
            powers[n - 1] = opnorm(P)
            diffs[n - 1] = n * opnorm(P - P_prev)
            P_prev = P
    power_sup = max(1.0, float(np.max(powers)))
    k = int(np.argmax(diffs))
    diff_dense = float(diffs[k])
    diff_sup, argmax = diff_dense, k + 1
    slope = float(np.polyfit(ns[N // 2:], diffs[N // 2:], 1)[0]) if N >= 4 else 0.0

    geo = []
    calm = 0
    stabilized = False
    m = N
    if normal:
        TmI = w - 1.0
    else:
        P = np.linalg.matrix_power(T, N)
        TmI = T - eye
    last_pair = (float(powers[-1]), float(diffs[-1]))
    for j in range(1, max_doublings + 1):
        m *= 2
        if normal:
            Pm = np.exp(m * logw)
            Pm[w == 0] = 0.0
            pn = float(np.max(np.abs(Pm)))
            dn = float((m + 1) * np.max(np.abs(Pm * TmI)))
        else:
            P = P @ P
            pn = opnorm(P)
            dn = float((m + 1) * opnorm(P @ TmI))
        geo.append(m)
        if dn > diff_sup:
            diff_sup, argmax = dn, m + 1
        power_sup = max(power_sup, pn)
        decreasing = pn <= last_pair[0] * (1 + 1e-12) and dn <= last_pair[1] * (1 + 1e-12)
        # powers only need to stop growing (eigenvalue 1 keeps them at 1); the differences must decay
        small = dn <= 0.5 * diff_sup or dn < 1e-12
        calm = calm + 1 if (decreasing and small) else 0
        last_pair = (pn, dn)
        if calm >= 4:
            stabilized = True
            break
        if pn == 0.0 and dn == 0.0:
            stabilized = True
            break
    return PowerWindow(N, geo, power_sup, diff_sup, diff_dense, argmax, stabilized, slope)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

@dataclass
class RittReport:
    alpha_min: float
    alpha_at_floor: bool
    beta: float
    resolvent_constant: float
    resolvent_window: dict
    power_sup: float
    diff_sup: float
    power_window: PowerWindow
    verdict: bool
    notes: list = field(default_factory=list)

    def to_json(self):
        return {"alpha_min": self.alpha_min, "alpha_at_floor": self.alpha_at_floor, "beta": self.beta,
                "resolvent_constant": self.resolvent_constant, "resolvent_window": self.resolvent_window,
                "power_sup": self.power_sup, "diff_sup": self.diff_sup,
                "power_window": self.power_window.to_json(), "verdict": self.verdict, "notes": self.notes}


def _outside_stolz_samples(beta, count):
    """Points outside closure(B_beta) with |lam - 1| <= 3: the boundary pushed outward plus circles about 1."""
    dom = StolzDomain(beta)
    u = np.arange(count) / count
    edge = dom.boundary_point(u)
    out = [1.0 + (edge - 1.0) * (1 + 1e-9) + 1e-9 * (edge - 1.0) / np.maximum(np.abs(edge - 1.0), 1e-300)]
    out.append(edge * (1 + 1e-6))
    radii = np.geomspace(1e-6, 3.0, 25)
    ang = np.linspace(0, 2 * np.pi, max(16, count // 8), endpoint=False)
    circ = (1.0 + radii[:, None] * np.exp(1j * ang[None, :])).ravel()
    out.append(circ[~dom.contains_closure(circ, 1e-12)])
    lam = np.concatenate(out)
    lam = lam[(np.abs(lam - 1.0) > 0) & ~dom.contains_closure(lam, 0.0)]
    return lam


def ritt_classify(T, beta: float, boundary_samples: int = 512, N: int = 2048) -> RittReport:
    """Sampled Ritt diagnostics for T against the contour angle beta."""
    T = as_matrix(T)
    notes = []
    eig = np.linalg.eigvals(T)
    ang = minimal_stolz_angle(eig)
    if not ang.ritt_compatible:
        pw = PowerWindow(0, [], math.inf, math.inf, math.inf, 0, False, math.nan)
        return RittReport(math.pi / 2, False, beta, math.inf, {}, math.inf, math.inf, pw, False,
                          ["spectrum outside every closed Stolz domain: not Ritt"])
    if not beta > ang.alpha:
        raise PreconditionError(f"beta={beta} must exceed the minimal Stolz angle {ang.alpha}")
    normal = is_normal(T)
    lam = _outside_stolz_samples(beta, boundary_samples)
    vals = np.abs(1.0 - lam) * _resolvent_norms(T, lam, normal)
    res_const = float(np.max(vals))
    # far field |lam| > 10: ||R|| <= 1 / (|lam| - ||T||) gives |1 - lam| ||R|| <= (|lam| + 1) / (|lam| - ||T||)
    nT = opnorm(T)
    far = (10.0 + 1.0) / (10.0 - nT) if nT < 10.0 else math.inf
    window = {"near": "|lam - 1| <= 3 outside closure(B_beta)", "samples": int(lam.size),
              "far_field_bound": far, "far_field_radius": 10.0}
    pw = power_constants(T, N, normal=normal)
    verdict = bool(pw.stabilized and math.isfinite(res_const) and res_const < 1e12 and ang.alpha < math.pi / 2)
    if not pw.stabilized:
        notes.append("power constants still growing at the end of the window")
    return RittReport(ang.alpha, ang.at_floor, beta, res_const, window, pw.power_sup, pw.diff_sup, pw, verdict, notes)


@dataclass
class SectorialReport:
    omega_min: float
    omega_at_floor: bool
    nu: float
    resolvent_constant: float
    window: dict
    verdict: bool

    def to_json(self):
        return {"omega_min": self.omega_min, "omega_at_floor": self.omega_at_floor, "nu": self.nu,
                "resolvent_constant": self.resolvent_constant, "window": self.window, "verdict": self.verdict}


def sectorial_classify(A, nu: float, samples: int = 64, window=(1e-6, 1e6)) -> SectorialReport:
    """Sampled sup of |z| ||R(z, A)|| over rays with nu <= |arg z| <= pi, log-spaced radii."""
    A = as_matrix(A)
    eig = np.linalg.eigvals(A)
    nz = eig[np.abs(eig) > 1e-14 * max(1.0, opnorm(A))]
    omega = float(np.max(np.abs(np.angle(nz)))) if nz.size else 0.0
    at_floor = omega <= 1e-12
    normal = is_normal(A)
    radii = np.geomspace(window[0], window[1], samples)
    angles = np.linspace(nu, math.pi, max(8, samples // 4))
    z = (radii[:, None] * np.exp(1j * angles[None, :])).ravel()
    z = np.concatenate([z, z.conj()])
    if omega >= nu:
        return SectorialReport(omega, at_floor, nu, math.inf,
                               {"radii": list(window), "samples": int(z.size)}, False)
    vals = np.abs(z) * _resolvent_norms(A, z, normal)
    const = float(np.max(vals))
    return SectorialReport(omega, at_floor, nu, const, {"radii": list(window), "samples": int(z.size)},
                           bool(math.isfinite(const) and const < 1e12))


# ---------------------------------------------------------------------------
# tuples
# ---------------------------------------------------------------------------

@dataclass
class CommutingTuple:
    ops: list
    commutator_tol: float = 1e-10

    def __post_init__(self):
        self.ops = [as_matrix(T) for T in self.ops]
        dims = {T.shape[0] for T in self.ops}
        if len(dims) != 1:
            raise PreconditionError("tuple members must have equal dimensions")

    @property
    def dim(self) -> int:
        return self.ops[0].shape[0]

    def __len__(self):
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    def __getitem__(self, i):
        return self.ops[i]


def as_tuple(ops, tol: float = 1e-10) -> CommutingTuple:
    if isinstance(ops, CommutingTuple):
        return ops
    if isinstance(ops, np.ndarray) and ops.ndim == 2:
        ops = [ops]
    return CommutingTuple(list(ops), tol)


@dataclass
class CommutationReport:
    max_commutator: float
    passed: bool

    def to_json(self):
        return {"max_commutator": self.max_commutator, "pass": self.passed}


def verify_commuting(tup, tol: float | None = None) -> CommutationReport:
    tup = as_tuple(tup)
    tol = tup.commutator_tol if tol is None else tol
    worst = 0.0
    for i in range(len(tup)):
        for j in range(i + 1, len(tup)):
            a, b = tup[i], tup[j]
            scale = opnorm(a) * opnorm(b)
            c = opnorm(a @ b - b @ a)
            worst = max(worst, c / scale if scale > 0 else c)
    return CommutationReport(worst, worst <= tol)


def require_commuting(tup, tol: float | None = None):
    rep = verify_commuting(tup, tol)
    if not rep.passed:
        raise NonCommutingError(f"normalized commutator {rep.max_commutator:.2e} exceeds tolerance")
    return rep


def scale_tuple(tup, r: float) -> CommutingTuple:
    if not 0.0 < r < 1.0:
        raise PreconditionError("scaling factor must lie in (0, 1)")
    tup = as_tuple(tup)
    return CommutingTuple([r * T for T in tup], tup.commutator_tol)


# ---------------------------------------------------------------------------
# mean-ergodic splitting
# ---------------------------------------------------------------------------

@dataclass
class ErgodicSplit:
    P_ker: np.ndarray
    P_ran: np.ndarray
    kernel_dim: int
    defect: float


def mean_ergodic_decompose(T, tol: float = EIGENVALUE_ONE_TOL) -> ErgodicSplit:
    """Projections onto Ker(I - T) along Ran(I - T) and vice versa.

    Requires the eigenvalue 1 to be semisimple; the ranges need not be
    orthogonal unless T is normal.
    """
    T = as_matrix(T)
    d = T.shape[0]
    eye = np.eye(d)
    scale = max(1.0, opnorm(T))
    eig = np.linalg.eigvals(T)
    alg = int(np.sum(np.abs(eig - 1.0) <= max(tol * scale, 1e-7)))
    M = eye - T
    U, s, Vh = np.linalg.svd(M)
    geo = int(np.sum(s <= max(tol * scale, 1e-7) * max(1.0, s[0] if s.size else 1.0)))
    if alg != geo:
        raise PreconditionError(f"eigenvalue 1 is not semisimple (algebraic {alg}, geometric {geo})")
    if geo == 0:
        return ErgodicSplit(np.zeros((d, d), complex), eye.astype(complex), 0, 0.0)
    if geo == d:
        return ErgodicSplit(eye.astype(complex), np.zeros((d, d), complex), d, 0.0)
    ker = Vh[d - geo:].conj().T
    ran = U[:, : d - geo]
    B = np.hstack([ker, ran])
    Binv = np.linalg.inv(B)
    P_ker = ker @ Binv[:geo]
    P_ran = eye - P_ker
    defect = float(max(np.linalg.norm(P_ker @ P_ker - P_ker), np.linalg.norm(T @ P_ker - P_ker)))
    if defect > 1e-8 * max(1.0, np.linalg.cond(B)):
        raise PreconditionError(f"ergodic projection defect {defect:.2e}")
    return ErgodicSplit(P_ker, P_ran, geo, defect)
