"""Relaxation with kernels concentrated at a distance ``M``.

For ``m = {m1 at distance 1, mM at distance M}`` the relaxed energy is the
convex envelope of the locking energies ``P^{M,n}``, ``n = 0..M``: the optimal
energy of an ``M``-periodic arrangement with ``n`` bonds in the upper phase,

    P^{M,n}(z) = min{(1 - t) g_-(x) + t g_+(y) : x <= z*, y >= z*, (1 - t) x + t y = z} + 2 mM M^2 z^2

with ``t = n / M`` and ``g_pm`` the branches of ``f + 2 m1 z^2``.  The plateaus
of the phase function are the intervals where the envelope follows one
``P^{M,n}``; between them the envelope is a common tangent (a bridge) and the
phase fraction interpolates linearly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .kernels import ConcentratedKernel, ExplicitKernel, Kernel
from .piecewise import (INF, PiecewiseQuadratic, QuadraticPiece, convex_envelope, from_pieces,
                        infimal_split, lower_hull, quadratic)
from .potentials import MINUS, PLUS, BiconvexPotential


# ---------------------------------------------------------------------------
# data records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Plateau:
    n: int
    theta: float
    s_minus: float
    s_plus: float


@dataclass(frozen=True)
class Bridge:
    left: int
    right: int
    z_left: float
    z_right: float
    slope: float
    intercept: float


@dataclass
class LockingDiagram:
    M: int
    plateaus: list[Plateau]
    bridges: list[Bridge]
    closed_form: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        def num(x):
            return x if np.isfinite(x) else ("inf" if x > 0 else "-inf")
        return {"M": self.M,
                "plateaus": [{"n": p.n, "theta": p.theta, "s_minus": num(p.s_minus), "s_plus": num(p.s_plus)}
                             for p in self.plateaus],
                "bridges": [{"from": b.left, "to": b.right, "z_left": b.z_left, "z_right": b.z_right,
                             "slope": b.slope, "intercept": b.intercept} for b in self.bridges]}


@dataclass
class ConcentratedTransform:
    Qhat: PiecewiseQuadratic
    Q: PiecewiseQuadratic
    diagram: LockingDiagram
    a_m: float
    degenerate: bool = False

    def theta(self, z):
        return phase_function_concentrated(self.diagram, z)

    def branch(self, z: float) -> str:
        return _branch_label(self.diagram, z)


# ---------------------------------------------------------------------------
# locking energies
# ---------------------------------------------------------------------------

def _as_concentrated(m: Kernel) -> ConcentratedKernel:
    if isinstance(m, ConcentratedKernel):
        return m
    raise TypeError("a concentrated kernel is required")


def locking_energy(f: BiconvexPotential, m: ConcentratedKernel, n: int, closed_form: bool = True
                   ) -> PiecewiseQuadratic:
    """``P^{M,n}`` as a convex piecewise quadratic, tagged ``("lock", n)``."""
    m = _as_concentrated(m)
    M = m.M
    if not 0 <= n <= M:
        raise ValueError("n must lie in [0, M]")
    if closed_form and m.m1 > 0:
        if f.family == "truncq":
            eta = f.params[0]
            return _truncq_locking(m.m1, M, m.mM, n).dilate(math.sqrt(eta)).scale(eta).retag(("lock", n))
        if f.family == "dwell":
            return _dwell_locking(m.m1, M, m.mM, n).retag(("lock", n))
    far = 2 * m.mM * M * M
    gm = f.branch_function(MINUS).shift_quadratic(2 * m.m1)
    gp = f.branch_function(PLUS).shift_quadratic(2 * m.m1)
    if n == 0:
        out = gm
    elif n == M:
        out = gp
    else:
        t = n / M
        out = infimal_split(gm, 1 - t, gp, t)
    return out.shift_quadratic(far).retag(("lock", n))


def _truncq_locking(m1: float, M: int, mM: float, n: int) -> PiecewiseQuadratic:
    """Closed form for ``min{z^2, 1}`` type fracture with threshold 1."""
    far = 2 * mM * M * M
    if n == 0:
        return quadratic(1 + 2 * m1 + far, 0, 0, hi=1.0)
    if n == M:
        return quadratic(2 * m1 + far, 0, 1.0, lo=1.0)
    t = n / M
    k = 2 * m1
    Tm, Tp = (k + t) / (k + 1), (k + t) / k
    c = (k + 1) / (1 - t)
    mid = k * (k + 1) / (k + t)
    return from_pieces([
        (-INF, Tm, c + far, -2 * c * t, c * t),
        (Tm, Tp, mid + far, 0.0, t),
        (Tp, INF, k / t + far, -2 * k / t + 2 * k, 1 + k / t - k),
    ])


def _dwell_locking(m1: float, M: int, mM: float, n: int) -> PiecewiseQuadratic:
    """Closed form for the double well ``(1 - |z|)^2``."""
    far = 2 * mM * M * M
    if n == 0:
        return quadratic(1 + 2 * m1 + far, 2.0, 1.0, hi=0.0)
    if n == M:
        return quadratic(1 + 2 * m1 + far, -2.0, 1.0, lo=0.0)
    t = n / M
    k = 1 + 2 * m1
    Tm, Tp = -2 * (1 - t) / k, 2 * t / k
    return from_pieces([
        (-INF, Tm, k / (1 - t) + far, 2.0, 1.0),
        (Tm, Tp, 1 + 2 * m1 + far, 2.0 - 4 * t, 1.0 - 4 * t * (1 - t) / k),
        (Tp, INF, k / t + far, -2.0, 1.0),
    ])


# closed-form locking thresholds ------------------------------------------------

def truncq_thresholds(m1: float, M: int, mM: float, n: int) -> tuple[float, float]:
    """``(s_n^-, s_n^+)`` for the truncated quadratic with threshold 1 and ``m1 > 0``."""
    k = 2 * m1
    th = [j / M for j in range(M + 1)]
    base = (k + th[n]) / math.sqrt(k * (k + 1))

    def ratio(other):
        num = m1 * (k + 1) + mM * M * M * (k + th[other])
        den = m1 * (k + 1) + mM * M * M * (k + th[n])
        return math.sqrt(num / den)

    s_minus = -INF if n == 0 else base * ratio(n - 1)
    s_plus = INF if n == M else base * ratio(n + 1)
    return s_minus, s_plus


def dwell_thresholds(m1: float, M: int, mM: float, n: int) -> tuple[float, float]:
    """``(s_n^-, s_n^+)`` for the double well."""
    t = n / M
    k = 1 + 2 * m1
    c = (2 * t - 1) / k
    d = 2 * mM * M / (k * (k + 2 * mM * M * M))
    return (-INF if n == 0 else c - d, INF if n == M else c + d)


def degenerate_thresholds(M: int, mM: float) -> tuple[float, float]:
    """``(z_M^-, z_M^+)`` for the truncated quadratic with ``m1 = 0``."""
    return (math.sqrt(2 * mM * M / (1 + 2 * mM * M * M)),
            math.sqrt((1 + 2 * mM * M * M) / (2 * mM * M ** 3)))


def degenerate_formula(M: int, mM: float, z):
    """Closed form of the relaxed energy for the truncated quadratic with ``m1 = 0``."""
    zm, zp = degenerate_thresholds(M, mM)
    z = np.asarray(z, dtype=float)
    c = 2 * mM * M
    mid = 2 * np.sqrt(c * (1 + c * M)) * z - c - c * M * z * z
    out = np.where(z <= zm, z * z, np.where(z <= zp, mid, 1.0 / M))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# the transform
# ---------------------------------------------------------------------------

def _lock_bridge_tag(t1, t2):
    return ("bridge", t1[1], t2[1])


def cluster_relaxation(f: BiconvexPotential, m: ConcentratedKernel) -> PiecewiseQuadratic:
    """Lower envelope ``min_n P^{M,n}`` as a (non-convex) piecewise quadratic.

    For a bi-convex ``f`` this equals the cluster energy
    ``(1/M) min{sum f_{2 m1}(z_j) : sum z_j = M z} + 2 mM M^2 z^2``.
    """
    m = _as_concentrated(m)
    locks = [locking_energy(f, m, n) for n in range(m.M + 1)]
    return _pointwise_min(locks)


def _pointwise_min(funcs: list[PiecewiseQuadratic]) -> PiecewiseQuadratic:
    cuts = sorted({b for g in funcs for b in g.breakpoints + [g.lo, g.hi] if np.isfinite(b)})
    # add crossing points between every pair of pieces
    extra = set()
    for i, g in enumerate(funcs):
        for h in funcs[i + 1:]:
            for p in g.pieces:
                for q in h.pieces:
                    lo, hi = max(p.lo, q.lo), min(p.hi, q.hi)
                    if not lo < hi:
                        continue
                    a, b, c = p.A - q.A, p.B - q.B, p.C - q.C
                    roots = np.roots([a, b, c]) if abs(a) > 1e-15 else ([-c / b] if b else [])
                    for r in np.atleast_1d(roots):
                        if np.isreal(r) and lo < float(np.real(r)) < hi:
                            extra.add(float(np.real(r)))
    pts = sorted(set(cuts) | extra)
    edges = [-INF] + pts + [INF]
    lo_dom = min(g.lo for g in funcs)
    hi_dom = max(g.hi for g in funcs)
    pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        a, b = max(a, lo_dom), min(b, hi_dom)
        if not a < b:
            continue
        mid = _mid(a, b)
        vals = [g(mid) for g in funcs]
        k = int(np.argmin(vals))
        p = funcs[k].piece_at(mid)
        pieces.append(QuadraticPiece(a, b, p.A, p.B, p.C, tag=p.tag))
    return PiecewiseQuadratic(tuple(pieces)).simplify()


def _mid(a, b):
    if np.isfinite(a) and np.isfinite(b):
        return 0.5 * (a + b)
    if np.isfinite(a):
        return a + 1.0
    if np.isfinite(b):
        return b - 1.0
    return 0.0


def m_transform_concentrated(f: BiconvexPotential, m: ConcentratedKernel, closed_form: bool = True
                             ) -> ConcentratedTransform:
    """``Qhat = (min_n P^{M,n})**`` with its locking diagram, and ``Q = Qhat - a_m z^2``."""
    m = _as_concentrated(m)
    a = m.moment().a_m
    if f.is_convex():
        # every locking energy touches f + a z^2 at z*, so only the two pure phases are kept
        zs = f.z_star
        Q = f.as_piecewise()
        diagram = LockingDiagram(m.M, [Plateau(0, 0.0, -INF, zs), Plateau(m.M, 1.0, zs, INF)], [])
        return ConcentratedTransform(Q.add_quadratic(A=a), Q, diagram, a, degenerate=(m.m1 == 0))
    locks = [locking_energy(f, m, n, closed_form) for n in range(m.M + 1)]
    Qhat = convex_envelope(locks, bridge_tag=_lock_bridge_tag)
    Q = Qhat.add_quadratic(A=-a)
    diagram = _diagram_from_envelope(Qhat, m.M)
    if closed_form and f.family in ("truncq", "dwell") and m.m1 > 0:
        fn = truncq_thresholds if f.family == "truncq" else dwell_thresholds
        scale = math.sqrt(f.params[0]) if f.family == "truncq" else 1.0
        diagram.closed_form = {n: tuple(scale * s for s in fn(m.m1, m.M, m.mM, n)) for n in range(m.M + 1)}
    elif f.family == "truncq" and m.m1 == 0:
        s = math.sqrt(f.params[0])
        zm, zp = degenerate_thresholds(m.M, m.mM)
        diagram.closed_form = {0: (-INF, s * zm), 1: (s * zp, INF)}
    return ConcentratedTransform(Qhat, Q, diagram, a, degenerate=(m.m1 == 0))


def _diagram_from_envelope(Qhat: PiecewiseQuadratic, M: int) -> LockingDiagram:
    plateaus: list[Plateau] = []
    bridges: list[Bridge] = []
    for p in Qhat.pieces:
        tag = p.tag
        if isinstance(tag, tuple) and tag[0] == "lock":
            n = tag[1]
            if plateaus and plateaus[-1].n == n and plateaus[-1].s_plus == p.lo:
                last = plateaus[-1]
                plateaus[-1] = Plateau(n, last.theta, last.s_minus, p.hi)
            else:
                plateaus.append(Plateau(n, n / M, p.lo, p.hi))
        elif isinstance(tag, tuple) and tag[0] == "bridge":
            bridges.append(Bridge(tag[1], tag[2], p.lo, p.hi, p.B, p.C))
    return LockingDiagram(M, plateaus, bridges)


def phase_function_concentrated(diagram: LockingDiagram, z):
    """Phase fraction: ``n/M`` on plateau ``n``, affine along bridges."""
    zz = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.empty_like(zz)
    for i, x in enumerate(zz):
        out[i] = _theta_scalar(diagram, x)
    return float(out[0]) if np.ndim(z) == 0 else out


def _theta_scalar(d: LockingDiagram, z: float) -> float:
    for p in d.plateaus:
        if p.s_minus <= z <= p.s_plus:
            return p.theta
    for b in d.bridges:
        if b.z_left <= z <= b.z_right:
            w = (z - b.z_left) / (b.z_right - b.z_left)
            return (b.left + w * (b.right - b.left)) / d.M
    # outside every recorded interval (only possible off the domain)
    return 0.0 if z < d.plateaus[0].s_minus else 1.0


def _branch_label(d: LockingDiagram, z: float) -> str:
    for p in d.plateaus:
        if p.s_minus <= z <= p.s_plus:
            if p.n == 0:
                return "convex"
            if p.n == d.M:
                return "broken"
            return f"lock:{p.n}"
    for b in d.bridges:
        if b.z_left <= z <= b.z_right:
            return f"bridge:{b.left}"
    return "convex"


# ---------------------------------------------------------------------------
# phase-constrained energies
# ---------------------------------------------------------------------------

def constrained_energy_concentrated(f: BiconvexPotential, m: ConcentratedKernel, theta: float
                                    ) -> PiecewiseQuadratic:
    """``z -> Qhat(theta, z)`` by interpolation between neighbouring locking states."""
    m = _as_concentrated(m)
    M = m.M
    if not 0 <= theta <= 1:
        raise ValueError("theta must lie in [0, 1]")
    x = theta * M
    n = min(int(math.floor(x + 1e-12)), M - 1)
    lam = (n + 1) - x          # weight on P^{M,n}
    if abs(lam - 1) <= 1e-12:
        return locking_energy(f, m, n)
    if abs(lam) <= 1e-12:
        return locking_energy(f, m, n + 1)
    return infimal_split(locking_energy(f, m, n), lam, locking_energy(f, m, n + 1), 1 - lam,
                         tag=("theta", theta))


def constrained_transform_concentrated(f: BiconvexPotential, m: ConcentratedKernel, theta: float, z
                                       ) -> float:
    """``Qhat(theta, z)``; subtract ``a_m z^2`` for the relaxed (non-hat) value."""
    return constrained_energy_concentrated(f, m, theta)(z)


def theta_one_sided_slopes(f: BiconvexPotential, m: ConcentratedKernel, n: int, z: float,
                           h: float = 1e-6) -> tuple[float, float]:
    """One-sided difference quotients of ``theta -> Qhat(theta, z)`` at ``theta = n / M``.

    Reported only; whether they differ is left open.
    """
    t = n / m.M
    c = constrained_transform_concentrated(f, m, t, z)
    left = (c - constrained_transform_concentrated(f, m, t - h, z)) / h if n > 0 else math.nan
    right = (constrained_transform_concentrated(f, m, t + h, z) - c) / h if n < m.M else math.nan
    return left, right


# ---------------------------------------------------------------------------
# bounds and limits
# ---------------------------------------------------------------------------

def lower_bound_general_kernel(f: BiconvexPotential, m: Kernel, z) -> float:
    """``max_M (P^M f)**(z) + 2 sum_{n >= 2, n != M} n^2 m_n z^2`` over ``2 <= M <= `` kernel length.

    A distance with ``m_M = 0`` contributes ``f_{2 m1}**(z)`` plus the whole
    far moment, which is also the value used when the kernel has no far part.
    """
    z = float(z)
    n_max = m.truncation_range()
    coeffs = {n: m.coefficient(n) for n in range(1, n_max + 1)}
    m1 = coeffs.get(1, 0.0)
    far_moment = 2 * sum(n * n * c for n, c in coeffs.items() if n >= 2)
    best = float(convex_envelope(f.as_piecewise().shift_quadratic(2 * m1))(z)) + far_moment * z * z
    for M in range(2, n_max + 1):
        if coeffs[M] <= 0:
            continue
        Qh = m_transform_concentrated(f, ConcentratedKernel(m1, M, coeffs[M])).Qhat(z)
        rest = (far_moment - 2 * M * M * coeffs[M]) * z * z
        best = max(best, Qh + rest)
    return best


def limit_M_infinity(f: BiconvexPotential, m1: float, z):
    """``lim_M Q^M f = (f + 2 m1 z^2)** - 2 m1 z^2`` for the truncated quadratic and the double well."""
    z = np.asarray(z, dtype=float)
    if f.family == "truncq" and f.params[0] == 1.0:
        k = 2 * m1
        lo, hi = math.sqrt(k / (1 + k)), math.sqrt((1 + k) / k)
        mid = -k * (z * z - 2 * z * math.sqrt((1 + k) / k) + 1)
        out = np.where(z <= lo, z * z, np.where(z <= hi, mid, 1.0))
    elif f.family == "dwell":
        k = 1 + 2 * m1
        out = np.where(np.abs(z) <= 1 / k, -2 * m1 * z * z + 2 * m1 / k, (1 - np.abs(z)) ** 2)
    elif f.family == "truncq":
        out = convex_envelope(f.as_piecewise().shift_quadratic(2 * m1))(z) - 2 * m1 * z * z
    else:
        raise ValueError("limit formula available for the truncated quadratic and the double well only")
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# iterated transform
# ---------------------------------------------------------------------------

@dataclass
class IterationResult:
    grid: np.ndarray
    iterates: list[np.ndarray]          # Q^k on the grid, k = 0..n_iter
    distances: list[float]              # sup-grid distance to the fixed point
    touch_errors: list[float]           # max deviation from the chord at the equispaced points
    S0: float
    SM: float

    def touch_points(self, k: int, M: int) -> np.ndarray:
        return self.S0 + np.arange(M ** k + 1) * (self.SM - self.S0) / M ** k

    def curve(self, k: int, m1: float) -> PiecewiseQuadratic:
        """Iterate ``Q^k`` as a piecewise quadratic: the grid interpolant of ``Q^k + 2 m1 z^2`` minus ``2 m1 z^2``."""
        x, y = self.grid, self.iterates[k] + 2 * m1 * self.grid ** 2
        slope = np.diff(y) / np.diff(x)
        icpt = y[:-1] - slope * x[:-1]
        return from_pieces([(float(x[i]), float(x[i + 1]), -2 * m1, float(slope[i]), float(icpt[i]))
                            for i in range(len(slope))])

    def curves(self, m1: float) -> list[PiecewiseQuadratic]:
        return [self.curve(k, m1) for k in range(len(self.iterates))]


def _nonconvexity_interval(g: PiecewiseQuadratic) -> tuple[float, float]:
    env = convex_envelope(g)
    bridges = [p for p in env.pieces if isinstance(p.tag, tuple) and p.tag[0] == "bridge"]
    if not bridges:
        return (math.nan, math.nan)
    return bridges[0].lo, bridges[-1].hi


def iterate_transform(f: BiconvexPotential, m: ConcentratedKernel, n_iter: int, refine: int = 2,
                      margin: float = 0.25) -> IterationResult:
    """Repeated transform ``Q^{k+1} = Q_m(Q^k)`` on a grid that contains every touch point.

    The iterates stop being bi-convex after one step, so the transform is
    evaluated on a uniform grid: the ``M``-point cluster minimum is a min-plus
    self-convolution of ``Q^k + 2 m1 z^2`` and the envelope is the exact lower
    hull of the grid values.  The grid spacing divides ``(S_M - S_0) / M^n_iter``
    so the equi-spaced touch points lie on the grid.
    """
    m = _as_concentrated(m)
    M = m.M
    g_pq = f.as_piecewise().shift_quadratic(2 * m.m1)
    S0, SM = _nonconvexity_interval(g_pq)
    if not np.isfinite(S0):
        # already convex: the sequence is constant
        grid = np.linspace(-2, 2, 401)
        vals = f(grid)
        return IterationResult(grid, [vals] * (n_iter + 1), [0.0] * (n_iter + 1), [0.0] * (n_iter + 1),
                               math.nan, math.nan)
    L = SM - S0
    h = L / (M ** n_iter * refine)
    ext = int(math.ceil(margin * L / h))
    n_inner = M ** n_iter * refine
    grid = S0 + h * np.arange(-ext, n_inner + ext + 1)
    fixed = convex_envelope(g_pq)(grid)
    g = g_pq(grid)
    far = 2 * m.mM * M * M
    iterates = [g - 2 * m.m1 * grid ** 2]
    distances = [float(np.max(np.abs(g - fixed)))]
    touch = [float(np.max(np.abs(g[[ext, ext + n_inner]] - fixed[[ext, ext + n_inner]])))]
    for k in range(1, n_iter + 1):
        P = _cluster_min_grid(g, M) + far * grid ** 2
        env = _hull_on_grid(grid, P)
        g = env - far * grid ** 2
        # outside the non-convexity interval nothing changes; guard the grid edges
        g = np.minimum(g, g_pq(grid))
        iterates.append(g - 2 * m.m1 * grid ** 2)
        distances.append(float(np.max(np.abs(g - fixed))))
        idx = ext + np.arange(M ** k + 1) * (n_inner // M ** k)
        touch.append(float(np.max(np.abs(g[idx] - fixed[idx]))))
    return IterationResult(grid, iterates, distances, touch, S0, SM)


def _cluster_min_grid(g: np.ndarray, M: int) -> np.ndarray:
    """``(1/M) min{sum g(x_j) : sum x_j = M x_i}`` over grid points (uniform grid)."""
    if M == 1:
        return g.copy()
    n = len(g)
    # repeated min-plus convolution on index sums
    conv = g.copy()
    for _ in range(M - 1):
        nxt = np.full(len(conv) + n - 1, np.inf)
        for j in range(n):
            seg = conv + g[j]
            np.minimum(nxt[j:j + len(conv)], seg, out=nxt[j:j + len(conv)])
        conv = nxt
    # conv[s] corresponds to index sum s; the mean index is s / M
    idx = np.arange(n) * M
    return conv[idx] / M


def _hull_on_grid(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    idx = lower_hull(x, y, tol=0.0)
    return np.interp(x, x[idx], y[idx])
