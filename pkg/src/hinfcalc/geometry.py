"""Spectral domains and boundary contours with Gauss-Legendre quadrature.

Domains
-------
``StolzDomain(gamma)``
    open convex hull of the point 1 and the disc D(0, sin gamma).
``Sector(omega)``
    open sector {z != 0 : |arg z| < omega}.
``ShiftedStolz(gamma)``
    the reflected domain {1 - z : z in StolzDomain(gamma)}; its vertex sits at 0.
``DiscUnionDomain(theta)``
    D(-i cot theta, 1/sin theta) union D(i cot theta, 1/sin theta).

Contours are stored as flat node/weight arrays (weights already include the
dz factor) plus the list of smooth pieces they came from, so that an
integral is just ``contour.integrate(values_at_nodes)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, PreconditionError

MEMBERSHIP_TOL = 1e-12
ANGLE_FLOOR = 1e-12
# Gauss-Legendre with m nodes on a panel whose nearest singularity sits on the
# Bernstein ellipse of parameter rho converges like rho**(-2m).
DEFAULT_RHO = 3.0


def _check_open(name, value, lo, hi):
    if not (lo < value < hi) or not math.isfinite(value):
        raise DomainError(f"{name}={value!r} must lie in the open interval ({lo}, {hi})")


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StolzDomain:
    gamma: float

    def __post_init__(self):
        _check_open("gamma", self.gamma, 0.0, math.pi / 2)

    @property
    def radius(self) -> float:
        return math.sin(self.gamma)

    def hull_gap(self, z):
        """min over t in [0, 1] of |z - (1 - t)| - t sin(gamma).

        The hull is the union of the discs D(1 - t, t sin gamma), so the sign
        of this minimum decides membership.  The function is convex in t and
        its stationary point has a closed form, which is then clipped to [0, 1].
        """
        z = np.asarray(z, dtype=complex)
        r = self.radius
        w = z - 1.0
        t = np.clip(-w.real + r * np.abs(w.imag) / math.cos(self.gamma), 0.0, 1.0)
        return np.abs(w + t) - t * r

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        out = (self.hull_gap(z) < 0.0) & (z != 1.0)
        return bool(out) if out.ndim == 0 else out

    def contains_closure(self, z, tol: float = MEMBERSHIP_TOL):
        out = self.hull_gap(z) <= tol
        return bool(out) if np.ndim(out) == 0 else out

    @property
    def tangent_point(self) -> complex:
        """Upper point where the boundary segment from 1 touches the circle."""
        return self.radius * complex(math.cos(math.pi / 2 - self.gamma), math.sin(math.pi / 2 - self.gamma))

    def boundary_point(self, u):
        """Counterclockwise parametrization of the boundary by normalized arc length, u in [0, 1]."""
        u = np.asarray(u, dtype=float) % 1.0
        g, r = self.gamma, self.radius
        seg = math.cos(g)
        arc = r * (math.pi + 2 * g)
        total = 2 * seg + arc
        s = u * total
        p_up = self.tangent_point
        p_dn = p_up.conjugate()
        out = np.empty(u.shape, dtype=complex)
        a = s < seg
        out[a] = 1.0 + (p_up - 1.0) * (s[a] / seg)
        b = (~a) & (s < seg + arc)
        ang = (math.pi / 2 - g) + (s[b] - seg) / r
        out[b] = r * np.exp(1j * ang)
        c = ~(a | b)
        out[c] = p_dn + (1.0 - p_dn) * ((s[c] - seg - arc) / seg)
        return out

    def sample_interior(self, rng, count):
        pts = []
        while sum(len(p) for p in pts) < count:
            z = rng.uniform(-1, 1, 2 * count) + 1j * rng.uniform(-1, 1, 2 * count)
            pts.append(z[self.contains(z)])
        return np.concatenate(pts)[:count]

    def to_json(self):
        return {"kind": "stolz", "gamma": self.gamma}


@dataclass(frozen=True)
class Sector:
    omega: float

    def __post_init__(self):
        _check_open("omega", self.omega, 0.0, math.pi)

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        out = (z != 0) & (np.abs(np.angle(z)) < self.omega)
        return bool(out) if out.ndim == 0 else out

    def contains_closure(self, z, tol: float = MEMBERSHIP_TOL):
        z = np.asarray(z, dtype=complex)
        out = (np.abs(z) <= tol) | (np.abs(np.angle(z)) <= self.omega + tol)
        return bool(out) if out.ndim == 0 else out

    def boundary_point(self, u, rmin: float = 1e-6, rmax: float = 1e6):
        """Both boundary rays over the radial window [rmin, rmax], log-uniform in u."""
        u = np.asarray(u, dtype=float) % 1.0
        lo, hi = math.log(rmin), math.log(rmax)
        upper = u < 0.5
        t = np.where(upper, hi + (lo - hi) * (2 * u), lo + (hi - lo) * (2 * u - 1))
        ang = np.where(upper, self.omega, -self.omega)
        return np.exp(t + 1j * ang)

    def sample_interior(self, rng, count, rmin=1e-4, rmax=1e4):
        ang = rng.uniform(-self.omega, self.omega, count)
        rad = np.exp(rng.uniform(math.log(rmin), math.log(rmax), count))
        return rad * np.exp(1j * ang)

    def to_json(self):
        return {"kind": "sector", "omega": self.omega}


@dataclass(frozen=True)
class ShiftedStolz:
    gamma: float

    def __post_init__(self):
        _check_open("gamma", self.gamma, 0.0, math.pi / 2)

    @property
    def stolz(self) -> StolzDomain:
        return StolzDomain(self.gamma)

    def contains(self, z):
        return self.stolz.contains(1.0 - np.asarray(z, dtype=complex))

    def contains_closure(self, z, tol: float = MEMBERSHIP_TOL):
        return self.stolz.contains_closure(1.0 - np.asarray(z, dtype=complex), tol)

    def boundary_point(self, u):
        # z -> 1 - z is a rotation by pi, so orientation is preserved
        return 1.0 - self.stolz.boundary_point(u)

    def sample_interior(self, rng, count):
        return 1.0 - self.stolz.sample_interior(rng, count)

    def to_json(self):
        return {"kind": "shifted_stolz", "gamma": self.gamma}


@dataclass(frozen=True)
class DiscUnionDomain:
    theta: float

    def __post_init__(self):
        _check_open("theta", self.theta, math.pi / 2, math.pi)

    @property
    def centers(self):
        c = 1j / math.tan(self.theta)
        return -c, c

    @property
    def radius(self) -> float:
        return 1.0 / math.sin(self.theta)

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        c1, c2 = self.centers
        out = (np.abs(z - c1) < self.radius) | (np.abs(z - c2) < self.radius)
        return bool(out) if out.ndim == 0 else out

    def contains_closure(self, z, tol: float = MEMBERSHIP_TOL):
        z = np.asarray(z, dtype=complex)
        c1, c2 = self.centers
        out = np.minimum(np.abs(z - c1), np.abs(z - c2)) <= self.radius + tol
        return bool(out) if out.ndim == 0 else out

    def boundary_point(self, u):
        """Outer boundary: the upper circle's arc above the real axis, then the lower one."""
        u = np.asarray(u, dtype=float) % 1.0
        c_up, c_dn = self.centers  # c_up = -i cot(theta) has positive imaginary part
        delta = self.theta - math.pi / 2
        span = math.pi + 2 * delta
        upper = u < 0.5
        ang_up = -delta + span * (2 * u)
        ang_dn = (math.pi - delta) + span * (2 * u - 1)
        return np.where(upper, c_up + self.radius * np.exp(1j * ang_up),
                        c_dn + self.radius * np.exp(1j * ang_dn))

    def to_json(self):
        return {"kind": "disc_union", "theta": self.theta}


def domain_from_json(obj):
    kind = obj.get("kind")
    table = {"stolz": (StolzDomain, "gamma"), "sector": (Sector, "omega"),
             "shifted_stolz": (ShiftedStolz, "gamma"), "disc_union": (DiscUnionDomain, "theta")}
    if kind not in table:
        raise PreconditionError(f"unknown domain kind {kind!r}")
    cls, key = table[kind]
    return cls(float(obj[key]))


def stolz_contains(domain: StolzDomain, z) -> bool:
    return domain.contains(z)


def sector_contains(domain: Sector, z) -> bool:
    return domain.contains(z)


@dataclass(frozen=True)
class StolzAngle:
    """Result of ``minimal_stolz_angle``.

    ``at_floor`` means every point lies in every closed Stolz domain, so the
    angle is only the bisection floor.  ``ritt_compatible`` is False when some
    point stays outside the closure of B_gamma for all gamma < pi/2.
    """
    alpha: float
    at_floor: bool
    ritt_compatible: bool

    def __float__(self):
        return self.alpha


def minimal_stolz_angle(points, tol: float = 1e-12, membership_tol: float = MEMBERSHIP_TOL) -> StolzAngle:
    pts = np.atleast_1d(np.asarray(points, dtype=complex)).ravel()
    if pts.size == 0:
        raise PreconditionError("minimal_stolz_angle needs at least one point")

    def inside(g):
        return bool(np.all(StolzDomain(g).contains_closure(pts, membership_tol)))

    # sin(pi/2 - 1e-5) = 1 - 5e-11 keeps unit-circle points other than 1 outside
    lo, hi = ANGLE_FLOOR, math.pi / 2 - 1e-5
    if inside(lo):
        return StolzAngle(lo, True, True)
    if not inside(hi):
        return StolzAngle(math.pi / 2, False, False)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if inside(mid):
            hi = mid
        else:
            lo = mid
    return StolzAngle(hi, False, True)


# ---------------------------------------------------------------------------
# contours
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def gauss_legendre(m: int):
    x, w = np.polynomial.legendre.leggauss(m)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass(frozen=True)
class ContourPiece:
    """A smooth piece z(u), u running from u0 to u1 (u1 < u0 reverses it).

    kind 'segment': z = start + (end - start) u.
    kind 'arc':     z = center + radius exp(i u).
    kind 'ray':     z = exp(u + i angle)  (log-radius parameter).
    """
    kind: str
    u0: float
    u1: float
    start: complex = 0j
    end: complex = 0j
    center: complex = 0j
    radius: float = 0.0
    angle: float = 0.0
    label: str = ""

    def point(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "segment":
            return self.start + (self.end - self.start) * u
        if self.kind == "arc":
            return self.center + self.radius * np.exp(1j * u)
        return np.exp(u + 1j * self.angle)

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "segment":
            return np.full(u.shape, self.end - self.start, dtype=complex)
        if self.kind == "arc":
            return 1j * self.radius * np.exp(1j * u)
        return np.exp(u + 1j * self.angle)

    def preimage(self, p, near: float):
        """Complex parameter mapped to p by the analytic continuation of z(u)."""
        if self.kind == "segment":
            return (p - self.start) / (self.end - self.start)
        if self.kind == "arc":
            w = (p - self.center) / self.radius
            if w == 0:
                return complex(near, 1e300)
            u = -1j * np.log(w)
        else:
            if p == 0:
                return complex(-1e300, 0)
            u = np.log(p) - 1j * self.angle
            # branch of the imaginary part closest to the real parameter line
            k = np.round(u.imag / (2 * math.pi))
            return complex(u.real, u.imag - 2 * math.pi * k)
        k = np.round((u.real - near) / (2 * math.pi))
        return complex(u.real - 2 * math.pi * k, u.imag)

    @property
    def start_point(self) -> complex:
        return complex(self.point(self.u0))

    @property
    def end_point(self) -> complex:
        return complex(self.point(self.u1))

    def to_json(self):
        d = {"kind": self.kind, "u0": self.u0, "u1": self.u1, "label": self.label,
             "start": [self.start_point.real, self.start_point.imag],
             "end": [self.end_point.real, self.end_point.imag]}
        if self.kind == "arc":
            d.update(center=[self.center.real, self.center.imag], radius=self.radius)
        if self.kind == "ray":
            d.update(angle=self.angle)
        return d


def _bernstein_rho(x: complex) -> float:
    s = np.sqrt(x * x - 1.0)
    return float(max(abs(x + s), abs(x - s)))


def _refine_panels(piece, breaks, singular, nodes, rho_min, max_depth, max_len):
    out = []
    stack = [(a, b, 0) for a, b in zip(breaks[:-1], breaks[1:])][::-1]
    while stack:
        a, b, depth = stack.pop()
        m, h = 0.5 * (a + b), 0.5 * (b - a)
        split = abs(b - a) > max_len
        if not split and depth < max_depth:
            for p in singular:
                x = (piece.preimage(p, m) - m) / h
                if abs(x) < 1e12 and _bernstein_rho(x) < rho_min:
                    split = True
                    break
        if split and depth < max_depth:
            stack.append((m, b, depth + 1))
            stack.append((a, m, depth + 1))
        else:
            out.append((a, b))
    return out


@dataclass
class Contour:
    pieces: tuple
    nodes: np.ndarray
    weights: np.ndarray
    piece_index: np.ndarray
    truncation: dict | None = None
    closed: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    def integrate(self, values):
        """Sum of weights * values over the nodes (values indexed by node on axis 0)."""
        values = np.asarray(values)
        return np.tensordot(self.weights, values, axes=(0, 0))

    def reversed(self) -> "Contour":
        pieces = tuple(ContourPiece(p.kind, p.u1, p.u0, p.start, p.end, p.center, p.radius, p.angle, p.label)
                       for p in reversed(self.pieces))
        idx = len(self.pieces) - 1 - self.piece_index
        return Contour(pieces, self.nodes[::-1].copy(), -self.weights[::-1], idx[::-1].copy(),
                       self.truncation, self.closed, dict(self.meta))

    def select(self, labels) -> "Contour":
        """Sub-contour made of the pieces whose label is in ``labels``."""
        labels = {labels} if isinstance(labels, str) else set(labels)
        keep = [i for i, p in enumerate(self.pieces) if p.label in labels]
        mask = np.isin(self.piece_index, keep)
        remap = {old: new for new, old in enumerate(keep)}
        idx = np.array([remap[i] for i in self.piece_index[mask]], dtype=int)
        return Contour(tuple(self.pieces[i] for i in keep), self.nodes[mask], self.weights[mask], idx,
                       self.truncation, False, dict(self.meta))

    def to_json(self):
        return {"pieces": [p.to_json() for p in self.pieces],
                "nodes": [[z.real, z.imag] for z in self.nodes],
                "weights": [[w.real, w.imag] for w in self.weights],
                "truncation": self.truncation}


def build_contour(pieces, breakpoints=None, singular_points=(), nodes_per_panel: int = 16,
                  rho_min: float = DEFAULT_RHO, max_depth: int = 40, max_panel_length=math.inf,
                  closed=True, truncation=None) -> Contour:
    """Panel Gauss-Legendre rule over ``pieces``.

    Each piece starts from its ``breakpoints`` (default: its two ends) and a
    panel is bisected while some singular point lies inside the Bernstein
    ellipse of parameter ``rho_min`` around it.
    """
    if nodes_per_panel < 4:
        raise PreconditionError("nodes_per_panel must be at least 4")
    x, w = gauss_legendre(nodes_per_panel)
    singular = [complex(p) for p in np.ravel(np.asarray(singular_points, dtype=complex))]
    nodes, weights, index = [], [], []
    for i, piece in enumerate(pieces):
        breaks = list(breakpoints[i]) if breakpoints is not None and breakpoints[i] is not None else [piece.u0, piece.u1]
        for a, b in _refine_panels(piece, breaks, singular, nodes_per_panel, rho_min, max_depth, max_panel_length):
            m, h = 0.5 * (a + b), 0.5 * (b - a)
            u = m + h * x
            nodes.append(piece.point(u))
            weights.append(h * w * piece.derivative(u))
            index.append(np.full(u.size, i, dtype=int))
    return Contour(tuple(pieces), np.concatenate(nodes), np.concatenate(weights), np.concatenate(index),
                   truncation, closed)


def _graded(u0, u1, levels, toward_start: bool):
    """Breakpoints on [u0, u1] halving geometrically toward one end."""
    fr = [0.0] + [2.0 ** (-k) for k in range(levels, -1, -1)]
    if toward_start:
        return [u0 + (u1 - u0) * f for f in fr]
    return [u1 - (u1 - u0) * f for f in fr][::-1]


def stolz_boundary_contour(beta: float, nodes_per_piece: int = 16, singular_points=(),
                           corner_levels: int = 4, rho_min: float = DEFAULT_RHO) -> Contour:
    """Counterclockwise boundary of B_beta.

    Pieces: segment 1 -> P+, arc of radius sin(beta) about 0 from P+ through -sin(beta)
    to P-, segment P- -> 1, where P+- = 1 - cos(beta) exp(-+ i beta) are the tangent points.
    Panels are graded toward the three corners and bisected near ``singular_points``.
    """
    _check_open("beta", beta, 0.0, math.pi / 2)
    dom = StolzDomain(beta)
    p_up = dom.tangent_point
    p_dn = p_up.conjugate()
    r = dom.radius
    a0 = math.pi / 2 - beta
    pieces = (
        ContourPiece("segment", 0.0, 1.0, start=1.0 + 0j, end=p_up, label="seg_upper"),
        ContourPiece("arc", a0, 2 * math.pi - a0, center=0j, radius=r, label="arc"),
        ContourPiece("segment", 0.0, 1.0, start=p_dn, end=1.0 + 0j, label="seg_lower"),
    )
    arc_mid = [a0 + (2 * math.pi - 2 * a0) * k / 4 for k in range(5)]
    seg_up = sorted(set(_graded(0.0, 0.5, corner_levels, True) + _graded(0.5, 1.0, corner_levels, False)))
    seg_dn = sorted(set(_graded(0.0, 0.5, corner_levels, True) + _graded(0.5, 1.0, corner_levels, False)))
    c = build_contour(pieces, [seg_up, arc_mid, seg_dn], singular_points, nodes_per_piece, rho_min)
    c.meta.update(kind="stolz_boundary", beta=beta)
    return c


def shifted_stolz_contour(beta: float, nodes_per_piece: int = 16, singular_points=(),
                          levels_at_zero: int = 45, arc_panels: int = 8,
                          rho_min: float = DEFAULT_RHO) -> Contour:
    """Counterclockwise boundary of the reflected domain 1 - B_beta.

    Pieces labelled 'gamma1' are the two segments cos(beta) e^{i beta} -> 0 -> cos(beta) e^{-i beta},
    geometrically graded toward the vertex 0; the piece labelled 'gamma2' is the arc of radius
    sin(beta) about 1 joining them counterclockwise.
    """
    _check_open("beta", beta, 0.0, math.pi / 2)
    top = math.cos(beta) * complex(math.cos(beta), math.sin(beta))
    bot = top.conjugate()
    r = math.sin(beta)
    pieces = (
        ContourPiece("segment", 0.0, 1.0, start=top, end=0j, label="gamma1"),
        ContourPiece("segment", 0.0, 1.0, start=0j, end=bot, label="gamma1"),
        ContourPiece("arc", -(math.pi / 2 + beta), math.pi / 2 + beta, center=1.0 + 0j, radius=r, label="gamma2"),
    )
    span = math.pi + 2 * beta
    arc_breaks = [-(math.pi / 2 + beta) + span * k / arc_panels for k in range(arc_panels + 1)]
    breaks = [_graded(0.0, 1.0, levels_at_zero, False), _graded(0.0, 1.0, levels_at_zero, True), arc_breaks]
    c = build_contour(pieces, breaks, singular_points, nodes_per_piece, rho_min, max_depth=30)
    c.meta.update(kind="shifted_stolz_boundary", beta=beta)
    return c


def sector_tail_bound(c: float, s: float, t_cut: float, resolvent_constant: float = 1.0,
                      mass_factor: float = 1.0) -> float:
    """Bound on the part of (1/2 pi i) int f R dz lying outside e^{-t_cut} < |z| < e^{t_cut}.

    Uses |f(z)| <= c |z|^s / (1 + |z|^{2s}) <= c exp(-s |log|z||) and
    |z| ||R(z)|| <= resolvent_constant on both rays.
    """
    return c * mass_factor * 2.0 * resolvent_constant / (math.pi * s) * math.exp(-s * t_cut)


def sector_boundary_contour(nu: float, decay, target_tail: float = 1e-12, nodes_per_piece: int = 16,
                            singular_points=(), resolvent_constant: float = 1.0, mass_factor: float = 1.0,
                            max_panel_length: float = 2.0, rho_min: float = DEFAULT_RHO) -> Contour:
    """Boundary of the sector of half-angle nu, truncated with a certified tail.

    The upper ray is traversed inward and the lower ray outward (counterclockwise
    around the sector), both parametrized by t = log|z|.  The cut |t| <= T is the
    smallest one for which ``sector_tail_bound`` is at most ``target_tail``.
    Panels are composite Gauss-Legendre in t, bisected near the log-images of
    ``singular_points``.
    """
    _check_open("nu", nu, 0.0, math.pi)
    if decay is None:
        raise PreconditionError("an unbounded sector contour needs a decay certificate")
    c, s = float(decay.c), float(decay.s)
    if not (c > 0 and s > 0):
        raise PreconditionError("decay certificate needs c > 0 and s > 0")
    base = c * mass_factor * 2.0 * resolvent_constant / (math.pi * s)
    t_cut = max(1.0, math.log(max(base / target_tail, 1.0)) / s)
    pieces = (
        ContourPiece("ray", t_cut, -t_cut, angle=nu, label="upper"),
        ContourPiece("ray", -t_cut, t_cut, angle=-nu, label="lower"),
    )
    n_base = max(2, int(math.ceil(2 * t_cut / max_panel_length)))
    br = [-t_cut + 2 * t_cut * k / n_base for k in range(n_base + 1)]
    tail = sector_tail_bound(c, s, t_cut, resolvent_constant, mass_factor)
    trunc = {"t_min": -t_cut, "t_max": t_cut, "radius_min": math.exp(-t_cut), "radius_max": math.exp(t_cut),
             "tail_bound": tail}
    cont = build_contour(pieces, [br[::-1], br], singular_points, nodes_per_piece, rho_min,
                         max_depth=40, max_panel_length=max_panel_length, closed=False, truncation=trunc)
    cont.meta.update(kind="sector_boundary", nu=nu)
    return cont
