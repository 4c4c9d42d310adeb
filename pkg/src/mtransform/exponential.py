"""Relaxation with exponential kernels ``m_n = rho exp(-sigma n)``.

An exponential kernel is equivalent to a local chain with two fields ``u``
(positions) and ``v`` (a smoothed copy of ``u``): nearest-neighbour springs of
stiffness ``a`` on ``v`` and a coupling ``b (u - v)^2``.  In that picture the
broken bonds of a truncated convex potential cut the chain into independent
cells, and ``g_N(z)`` is the per-bond energy of a cell of ``N`` bonds whose
first bond is broken.  The relaxed energy is the convex envelope of the
``g_N``; every ``1/N`` is a locking state and the locking intervals accumulate
at a lower strain ``z_lower`` as ``N`` grows.

For ``f~(z) = z^2`` the cell energies are explicit: ``g_N(z) = c_N z^2 + eta/N``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import brentq, minimize_scalar

from .kernels import ExponentialKernel
from .piecewise import INF, PiecewiseQuadratic, QuadraticPiece, infimal_split, quadratic
from .concentrated import Plateau, Bridge
from .potentials import BiconvexPotential

N_SEARCH_MAX = 512
RESOLUTION = 1e-6


class ResolutionWarning(UserWarning):
    """The locking staircase was not resolved within the ``N`` search budget."""


# ---------------------------------------------------------------------------
# chain parameters
# ---------------------------------------------------------------------------

def chain_zeta(a: float, b: float) -> float:
    """Decay rate of the cell profiles, ``asinh(sqrt(b (a + 1) / a) / 2)``."""
    return math.asinh(0.5 * math.sqrt(b * (a + 1) / a))


@dataclass(frozen=True)
class ChainParameters:
    """Local chain coefficients ``(a, b)`` and the kernel ``(sigma, rho)`` they represent."""

    a: float
    b: float
    sigma: float
    rho: float
    zeta: float
    omega: float

    def kernel(self) -> ExponentialKernel:
        return ExponentialKernel(self.sigma, self.rho)


def chain_parameters(sigma: float, rho: float = 1.0) -> ChainParameters:
    """``(a, b)`` for the kernel ``rho exp(-sigma n)``."""
    if sigma <= 0 or rho <= 0:
        raise ValueError("sigma and rho must be positive")
    q = math.exp(-sigma)
    a = rho * 2 * (1 + q) * q / (1 - q) ** 3
    b = rho * 2 * (1 + q) / (1 - q)
    zeta = chain_zeta(a, b)
    return ChainParameters(a, b, sigma, rho, zeta, 2 * zeta)


def inverse_chain_parameters(a: float, b: float) -> tuple[float, float]:
    """Kernel ``(sigma, rho)`` reproducing the local coefficients ``(a, b)``."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    sigma = 2 * math.asinh(0.5 * math.sqrt(b / a))
    rho = b * b / (4 * a * math.sinh(sigma))
    return sigma, rho


def local_parameters(a: float, b: float) -> ChainParameters:
    sigma, rho = inverse_chain_parameters(a, b)
    zeta = chain_zeta(a, b)
    return ChainParameters(a, b, sigma, rho, zeta, 2 * zeta)


def nt_coefficient(params: ChainParameters, N) -> float:
    """Stiffness ``c_N`` of the quadratic cell energy; ``N = inf`` gives ``a + 1``."""
    a, zeta = params.a, params.zeta
    if N == math.inf:
        return a + 1.0
    if N < 1:
        raise ValueError("N must be at least 1")
    return N * a * (a + 1) / (N * a + math.tanh(N * zeta) / math.tanh(zeta))


# ---------------------------------------------------------------------------
# truncated convex potentials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncatedConvex:
    """``f~(z)`` for ``z <= z_star`` and the constant ``f~(z_star)`` beyond."""

    ftilde: PiecewiseQuadratic
    z_star: float
    name: str = "truncated-convex"

    def __post_init__(self):
        if not self.ftilde.is_convex():
            raise ValueError("the unbroken branch must be convex")
        if not (self.ftilde.lo == -INF and self.ftilde.hi == INF):
            raise ValueError("the unbroken branch must be defined on the whole line")

    @property
    def eta(self) -> float:
        return float(self.ftilde(self.z_star))

    @property
    def is_quadratic(self) -> bool:
        p = self.ftilde.pieces
        return len(p) == 1 and p[0].A == 1.0 and p[0].B == 0.0 and p[0].C == 0.0

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        out = np.where(z <= self.z_star, self.ftilde(np.minimum(z, self.z_star)), self.eta)
        return float(out) if out.ndim == 0 else out


def truncated_parabola(eta: float = 1.0) -> TruncatedConvex:
    """``min{z^2, eta}`` written as a truncated convex potential."""
    return TruncatedConvex(quadratic(1.0), math.sqrt(eta), "truncq")


def as_truncated(f) -> TruncatedConvex:
    if isinstance(f, TruncatedConvex):
        return f
    if isinstance(f, BiconvexPotential) and f.family == "truncq":
        return truncated_parabola(f.params[0])
    if isinstance(f, BiconvexPotential) and f.plus[0] == 0 and f.plus[1] == 0:
        return TruncatedConvex(quadratic(*f.minus), f.z_star, f.family)
    raise ValueError("exponential locking theory needs a truncated convex potential")


# ---------------------------------------------------------------------------
# cell energies
# ---------------------------------------------------------------------------

@dataclass
class CellSolution:
    value: float          # N g_N(z)
    slope: float          # g_N'(z)
    u: np.ndarray
    v: np.ndarray


_DENSE_LIMIT = 200


def _cell_operators(a: float, b: float, N: int, z: float):
    """Quadratic part of the cell energy in ``x = (u_1..u_N, v_1..v_{N-1})``.

    Returns ``(quad, lin, const, Du, v_N)`` with the energy
    ``sum f~(Du x) + x quad x + lin x + const``.
    """
    nu, nv = N, N - 1
    n = nu + nv
    vN = N * z
    rows = np.arange(N - 1)
    Du = sp.csr_matrix((np.r_[np.ones(N - 1), -np.ones(N - 1)], (np.r_[rows, rows], np.r_[rows + 1, rows])),
                       shape=(N - 1, n))
    # v differences v_1 - v_0, ..., v_N - v_{N-1} with v_0 = 0 and v_N fixed
    i = np.arange(N)
    r = np.r_[i[:nv], i[1:]]
    c = np.r_[nu + i[:nv], nu + i[1:] - 1]
    d = np.r_[np.ones(nv), -np.ones(N - 1)]
    Dv = sp.csr_matrix((d, (r, c)), shape=(N, n))
    dv0 = np.zeros(N)
    dv0[-1] = vN
    # coupling u_i - v_i, i = 1..N
    r = np.r_[i, i[:nv]]
    c = np.r_[i, nu + i[:nv]]
    d = np.r_[np.ones(N), -np.ones(nv)]
    Cuv = sp.csr_matrix((d, (r, c)), shape=(N, n))
    cuv0 = np.zeros(N)
    cuv0[-1] = -vN
    quad = (a * (Dv.T @ Dv) + b * (Cuv.T @ Cuv)).tocsc()
    lin = 2 * (a * (Dv.T @ dv0) + b * (Cuv.T @ cuv0))
    const = a * dv0 @ dv0 + b * cuv0 @ cuv0
    if n <= _DENSE_LIMIT:
        return quad.toarray(), lin, const, Du.toarray(), vN
    return quad, lin, const, Du, vN


def solve_cell_chain(ftilde: PiecewiseQuadratic, a: float, b: float, eta: float, N: int, z: float,
                     tol: float = 1e-12, max_iter: int = 100) -> CellSolution:
    """Minimise the local two-field energy of a cell whose first bond is broken.

    The unknowns are ``u_1..u_N`` and ``v_1..v_{N-1}`` (``v_0 = 0``, ``v_N = N z``);
    the energy is ``eta + a v_1^2 + sum_{i>=2} [f~(u_i - u_{i-1}) + a (v_i - v_{i-1})^2]
    + b sum_i (u_i - v_i)^2``.  Newton's method with backtracking; for a quadratic
    ``f~`` a single step is exact.
    """
    if N == 1:
        return CellSolution(eta + a * z * z, 2 * a * z, np.array([z]), np.array([z]))
    quad, lin, const, Du, vN = _cell_operators(a, b, N, z)
    dense = not sp.issparse(quad)
    coef = ftilde._coef

    def energy(x):
        return float(np.sum(ftilde(Du @ x)) + x @ (quad @ x) + lin @ x + const)

    x = np.r_[z * np.arange(1, N + 1), z * np.arange(1, N)]
    E = energy(x)
    for _ in range(max_iter):
        e = Du @ x
        fp = ftilde.derivative(e)
        fpp = 2 * coef[ftilde._index(e), 0]
        grad = Du.T @ fp + 2 * (quad @ x) + lin
        if dense:
            H = (Du.T * np.maximum(fpp, 1e-14)) @ Du + 2 * quad
            step = -np.linalg.solve(H, grad)
        else:
            H = (Du.T @ sp.diags(np.maximum(fpp, 1e-14)) @ Du + 2 * quad).tocsc()
            step = -spla.spsolve(H, grad)
        dec = -grad @ step
        if dec <= tol * max(1.0, abs(E)):
            break
        t = 1.0
        while True:
            xn = x + t * step
            En = energy(xn)
            if En <= E - 0.25 * t * dec:
                break
            t *= 0.5
            if t < 1e-12:
                break
        if t < 1e-12:
            break      # no further decrease representable
        x, E = xn, En
        if dec <= 1e-3 * tol * max(1.0, abs(E)):
            break
    nu = N
    u, v = x[:nu], np.r_[x[nu:], vN]
    slope = 2 * a * (v[-1] - v[-2]) - 2 * b * (u[-1] - v[-1])
    return CellSolution(E + eta, slope, u, v)


@dataclass
class GNFamily:
    """Cell energies ``g_N`` of one truncated convex potential for one chain."""

    potential: TruncatedConvex
    params: ChainParameters
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def eta(self) -> float:
        return self.potential.eta

    @property
    def closed_form(self) -> bool:
        return self.potential.is_quadratic

    def quadratic_cell(self, N) -> PiecewiseQuadratic:
        """``g_N`` for the quadratic unbroken branch (``N = inf`` is the unbroken chain)."""
        c = nt_coefficient(self.params, N)
        return quadratic(c, 0.0, 0.0 if N == math.inf else self.eta / N, tag=("cell", N))

    def value(self, N, z: float) -> float:
        if N == math.inf:
            return float(self.potential.ftilde(z)) + self.params.a * z * z
        if self.closed_form:
            return nt_coefficient(self.params, N) * z * z + self.eta / N
        return self._solve(N, z).value / N

    def slope(self, N, z: float) -> float:
        if N == math.inf:
            return float(self.potential.ftilde.derivative(z)) + 2 * self.params.a * z
        if self.closed_form:
            return 2 * nt_coefficient(self.params, N) * z
        return self._solve(N, z).slope

    def _solve(self, N: int, z: float) -> CellSolution:
        key = (N, float(z))
        if key not in self._cache:
            p = self.params
            self._cache[key] = solve_cell_chain(self.potential.ftilde, p.a, p.b, self.eta, N, z)
        return self._cache[key]

    def chain_value(self, N: int, z: float) -> float:
        """``g_N(z)`` from the chain solver, whatever the potential."""
        p = self.params
        return solve_cell_chain(self.potential.ftilde, p.a, p.b, self.eta, N, z).value / N


def gn_family(f, sigma: float | None = None, rho: float = 1.0, params: ChainParameters | None = None
              ) -> GNFamily:
    if params is None:
        params = chain_parameters(sigma, rho)
    return GNFamily(as_truncated(f), params)


def cell_energy_gN(family: GNFamily, N, z: float) -> float:
    """``g_N(z)``; ``N = math.inf`` gives the unbroken chain ``f~(z) + a z^2``."""
    return family.value(N, z)


# ---------------------------------------------------------------------------
# locking intervals
# ---------------------------------------------------------------------------

@dataclass
class ExponentialDiagram:
    plateaus: list[Plateau]              # resolved plateaus, N = 1..N_res (theta = 1/N), ordered by z
    bridges: list[Bridge]                # tangents between consecutive resolved plateaus
    z_lower: float                       # accumulation point of the locking intervals
    z_upper: float                       # full fracture threshold s_1^-
    N_resolved: int
    N_searched: int
    resolved: bool
    thresholds: dict = field(default_factory=dict)   # N -> (s_N^-, s_N^+) for every searched N
    slopes: dict = field(default_factory=dict)       # N -> slope of the tangent between g_{N+1} and g_N

    def to_json(self) -> dict:
        def num(x):
            return x if np.isfinite(x) else ("inf" if x > 0 else "-inf")
        return {"z_lower": self.z_lower, "z_upper": self.z_upper, "N_resolved": self.N_resolved,
                "N_searched": self.N_searched, "resolved": self.resolved,
                "plateaus": [{"N": p.n, "theta": p.theta, "s_minus": num(p.s_minus), "s_plus": num(p.s_plus)}
                             for p in self.plateaus]}

    def shifted(self, t: float) -> "ExponentialDiagram":
        return ExponentialDiagram(
            [Plateau(p.n, p.theta, p.s_minus + t, p.s_plus + t) for p in self.plateaus],
            [Bridge(b.left, b.right, b.z_left + t, b.z_right + t, b.slope, b.intercept) for b in self.bridges],
            self.z_lower + t, self.z_upper + t, self.N_resolved, self.N_searched, self.resolved,
            {N: (s[0] + t, s[1] + t) for N, s in self.thresholds.items()}, dict(self.slopes))


def quadratic_cell_thresholds(coef: Callable[[int], float], eta: float, N: int) -> tuple[float, float]:
    """``(s_N^-, s_N^+)`` for cells ``coef(N) z^2 + eta / N``: tangency points of consecutive cells."""
    cN = coef(N)
    if N == 1:
        s_plus = INF
    else:
        s_plus = math.sqrt(eta * coef(N - 1) / (N * (N - 1) * (cN - coef(N - 1)) * cN))
    s_minus = math.sqrt(eta * coef(N + 1) / ((N + 1) * N * (coef(N + 1) - cN) * cN))
    return s_minus, s_plus


def nt_thresholds(params: ChainParameters, eta: float, N: int) -> tuple[float, float]:
    """``(s_N^-, s_N^+)`` for the quadratic unbroken branch."""
    return quadratic_cell_thresholds(lambda k: nt_coefficient(params, k), eta, N)


def nt_accumulation(params: ChainParameters, eta: float) -> tuple[float, float]:
    """``(z_lower, z_upper)``: limit of the locking intervals and the full-fracture threshold."""
    a, b, zeta = params.a, params.b, params.zeta
    lower = math.sqrt(a * eta / ((a + 1) / math.tanh(zeta)))
    upper = math.sqrt(eta * (2 * a + b * (a + 1)) / (a * b))
    return lower, upper


def _tangent(family: GNFamily, N1, N2, bracket=(-50.0, 50.0)) -> tuple[float, float, float]:
    """Common tangent of ``g_N1`` (left) and ``g_N2`` (right): ``(slope, x1, x2)``."""
    def point(N, p):
        return brentq(lambda x: family.slope(N, x) - p, *bracket, xtol=1e-14, rtol=1e-14)

    def gap(p):
        x1, x2 = point(N1, p), point(N2, p)
        return (family.value(N1, x1) - p * x1) - (family.value(N2, x2) - p * x2)

    lo, hi = 1e-9, 1.0
    while gap(hi) < 0:
        hi *= 2
        if hi > 1e6:
            raise RuntimeError("no common tangent found")
    p = brentq(gap, lo, hi, xtol=1e-13, rtol=1e-14)
    return p, point(N1, p), point(N2, p)


def locking_intervals_exponential(family: GNFamily, N_max: int = N_SEARCH_MAX,
                                  resolution: float = RESOLUTION) -> ExponentialDiagram:
    """Locking intervals ``I_N = [s_N^-, s_N^+]`` and the accumulation points.

    ``N`` is extended until the interval width drops below ``resolution`` times
    the width of the fracture window ``z_upper - z_lower``, or ``N_max`` is reached.
    """
    eta = family.eta
    thresholds: dict[int, tuple[float, float]] = {}
    slopes: dict[int, float] = {}
    if family.closed_form:
        z_lower, z_upper = nt_accumulation(family.params, eta)

        def thr(N):
            return nt_thresholds(family.params, eta, N)

        def slope_between(N):
            s_minus = thr(N)[0]
            return 2 * nt_coefficient(family.params, N) * s_minus
    else:
        cache: dict[int, tuple[float, float, float]] = {}

        def tang(N):   # tangent between g_{N+1} (left) and g_N (right)
            if N not in cache:
                cache[N] = _tangent(family, N + 1, N)
            return cache[N]

        def thr(N):
            s_minus = tang(N)[2]
            s_plus = INF if N == 1 else tang(N - 1)[1]
            return s_minus, s_plus

        def slope_between(N):
            return tang(N)[0]

        z_upper = thr(1)[0]
        z_lower = math.nan
    window = z_upper - (z_lower if np.isfinite(z_lower) else 0.0)
    N_res = 0
    resolved = False
    N = 1
    while N <= N_max:
        s = thr(N)
        thresholds[N] = s
        slopes[N] = slope_between(N)
        if N >= 2 and s[1] - s[0] < resolution * window:
            resolved = True
            break
        N_res = N
        N += 1
    N_searched = min(N, N_max)
    if not resolved:
        warnings.warn(f"locking staircase not resolved with N <= {N_max}", ResolutionWarning, stacklevel=2)
    if not np.isfinite(z_lower):
        z_lower = thresholds[N_searched][0]
    plateaus, bridges = [], []
    for k in range(N_res, 0, -1):
        s_minus, s_plus = thresholds[k]
        plateaus.append(Plateau(k, 1.0 / k, s_minus, s_plus))
    for k in range(N_res, 1, -1):
        left, right = thresholds[k][1], thresholds[k - 1][0]
        p = slopes[k - 1]
        c = family.value(k, left) - p * left
        bridges.append(Bridge(k, k - 1, left, right, p, c))
    return ExponentialDiagram(plateaus, bridges, z_lower, z_upper, N_res, N_searched, resolved,
                              thresholds, slopes)


# ---------------------------------------------------------------------------
# the transform
# ---------------------------------------------------------------------------

@dataclass
class ExponentialTransform:
    Qhat: PiecewiseQuadratic
    Q: PiecewiseQuadratic
    diagram: ExponentialDiagram
    params: ChainParameters
    a_m: float
    family: GNFamily | None = None
    shift: float = 0.0

    def theta(self, z):
        return phase_function_exponential(self.diagram, z)

    def branch(self, z: float) -> str:
        return _branch_label(self.diagram, z)

    def active_cell(self, z: float) -> float:
        """Cell size realising ``Qhat(z)`` (``inf`` on the unbroken branch, ``nan`` on bridges)."""
        d = self.diagram
        if z <= d.z_lower:
            return math.inf
        for p in d.plateaus:
            if p.s_minus <= z <= p.s_plus:
                return float(p.n)
        return math.nan


def staircase_envelope(coef: Callable[[int], float], c_inf: float, eta: float, z_lower: float,
                       N_max: int = N_SEARCH_MAX) -> PiecewiseQuadratic:
    """Convex envelope of the cells ``coef(N) z^2 + eta / N`` and the limit ``c_inf z^2``.

    Consecutive cells are joined by their common tangents.  Cells with
    ``N <= N_max`` are kept; between ``z_lower`` and the smallest kept interval
    the envelope is replaced by the chord, with error ``O(1 / N_max^2)``.
    """
    th = {}
    for N in range(1, N_max + 1):
        s = quadratic_cell_thresholds(coef, eta, N)
        if N > 1 and not (s[0] < s[1] < th[N - 1][0]):
            break      # rounding has swallowed the interval
        th[N] = s
    Nmax = max(th)
    pieces = [QuadraticPiece(-INF, z_lower, c_inf, 0.0, 0.0, tag=("cell", math.inf))]
    left = th[Nmax][0]
    if left > z_lower:
        y0, y1 = c_inf * z_lower ** 2, coef(Nmax) * left ** 2 + eta / Nmax
        p = (y1 - y0) / (left - z_lower)
        pieces.append(QuadraticPiece(z_lower, left, 0.0, p, y0 - p * z_lower, tag=("accumulation",)))
    for N in range(Nmax, 0, -1):
        s_minus, s_plus = th[N]
        cN = coef(N)
        pieces.append(QuadraticPiece(s_minus, s_plus, cN, 0.0, eta / N, tag=("cell", N)))
        if N > 1:
            b_lo = s_plus
            p = 2 * coef(N - 1) * th[N - 1][0]
            pieces.append(QuadraticPiece(b_lo, th[N - 1][0], 0.0, p, cN * b_lo * b_lo + eta / N - p * b_lo,
                                         tag=("bridge", N, N - 1)))
    return _continuous(pieces)


def _assemble_nt(family: GNFamily, diagram: ExponentialDiagram, N_max: int = N_SEARCH_MAX
                 ) -> PiecewiseQuadratic:
    return staircase_envelope(lambda N: nt_coefficient(family.params, N), family.params.a + 1.0,
                              family.eta, diagram.z_lower, N_max)


def _continuous(pieces: list[QuadraticPiece]) -> PiecewiseQuadratic:
    """Glue pieces whose shared endpoints differ by rounding only."""
    out = []
    for p in pieces:
        if out:
            lo = out[-1].hi
            if not lo < p.hi:
                continue
            p = QuadraticPiece(lo, p.hi, p.A, p.B, p.C, tag=p.tag)
        out.append(p)
    return PiecewiseQuadratic(tuple(out))


def _assemble_sampled(family: GNFamily, diagram: ExponentialDiagram, samples: int = 4001
                      ) -> PiecewiseQuadratic:
    """Convex ``Qhat`` for a general unbroken branch as a piecewise-linear interpolant."""
    zl, zu = diagram.z_lower, diagram.z_upper
    lo, hi = zl - 1.0, zu + 1.0
    z = np.linspace(lo, hi, samples)
    vals = np.array([_qhat_value(family, diagram, t) for t in z])
    pieces = [QuadraticPiece(-INF, lo, *family_quad_left(family, lo), tag=("cell", math.inf))]
    for i in range(samples - 1):
        p = (vals[i + 1] - vals[i]) / (z[i + 1] - z[i])
        pieces.append(QuadraticPiece(z[i], z[i + 1], 0.0, p, vals[i] - p * z[i], tag=("sampled",)))
    a = family.params.a
    pieces.append(QuadraticPiece(hi, INF, a, 0.0, family.eta, tag=("cell", 1)))
    return PiecewiseQuadratic(tuple(pieces))


def family_quad_left(family: GNFamily, z0: float) -> tuple[float, float, float]:
    p = family.potential.ftilde.piece_at(z0 - 1e-9)
    return (p.A + family.params.a, p.B, p.C)


def _qhat_value(family: GNFamily, d: ExponentialDiagram, z: float) -> float:
    if z <= d.z_lower:
        return family.value(math.inf, z)
    for p in d.plateaus:
        if p.s_minus <= z <= p.s_plus:
            return family.value(p.n, z)
    for b in d.bridges:
        if b.z_left <= z <= b.z_right:
            return b.slope * z + b.intercept
    # accumulation region: chord to the first resolved interval
    first = d.plateaus[0]
    y0, y1 = family.value(math.inf, d.z_lower), family.value(first.n, first.s_minus)
    w = (z - d.z_lower) / (first.s_minus - d.z_lower)
    return y0 + w * (y1 - y0)


def m_transform_exponential(f, sigma: float, rho: float = 1.0, N_max: int = N_SEARCH_MAX
                            ) -> ExponentialTransform:
    """``Qhat = (inf_N g_N)**`` and ``Q = Qhat - a z^2`` for a truncated convex potential.

    The convex-affine potential ``z^2`` / ``2 tau (z - 1) + 1`` is handled by
    writing it as a translated and tilted truncated parabola of toughness
    ``(1 - tau)^2``.
    """
    params = chain_parameters(sigma, rho)
    if isinstance(f, BiconvexPotential) and f.family == "convaffine":
        tau = f.params[0]
        if tau >= 1:
            return _convex_result(f, params)
        inner = m_transform_exponential(truncated_quadratic_potential((1 - tau) ** 2), sigma, rho, N_max)
        a = params.a
        Q = inner.Q.translate(tau).add_quadratic(B=2 * tau, C=-tau * tau)
        return ExponentialTransform(Q.add_quadratic(A=a), Q, inner.diagram.shifted(tau), params, a,
                                    inner.family, tau)
    family = GNFamily(as_truncated(f), params)
    diagram = locking_intervals_exponential(family, N_max)
    if family.closed_form:
        Qhat = _assemble_nt(family, diagram, N_max)
    else:
        Qhat = _assemble_sampled(family, diagram)
    a = params.a
    return ExponentialTransform(Qhat, Qhat.add_quadratic(A=-a), diagram, params, a, family)


def truncated_quadratic_potential(eta: float) -> TruncatedConvex:
    return truncated_parabola(eta)


def _convex_result(f: BiconvexPotential, params: ChainParameters) -> ExponentialTransform:
    a = params.a
    Q = f.as_piecewise()
    zs = f.z_star
    d = ExponentialDiagram([Plateau(1, 1.0, zs, INF)], [], zs, zs, 1, 1, True, {1: (zs, INF)}, {})
    return ExponentialTransform(Q.add_quadratic(A=a), Q, d, params, a, None)


def phase_function_exponential(diagram: ExponentialDiagram, z):
    zz = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.array([_theta_scalar(diagram, t) for t in zz])
    return float(out[0]) if np.ndim(z) == 0 else out


def _theta_scalar(d: ExponentialDiagram, z: float) -> float:
    if z <= d.z_lower:
        return 0.0
    for p in d.plateaus:
        if p.s_minus <= z <= p.s_plus:
            return p.theta
    for b in d.bridges:
        if b.z_left <= z <= b.z_right:
            w = (z - b.z_left) / (b.z_right - b.z_left)
            return (1 - w) / b.left + w / b.right
    first = d.plateaus[0]
    if z < first.s_minus:
        w = (z - d.z_lower) / (first.s_minus - d.z_lower)
        return w * first.theta
    return 1.0


def _branch_label(d: ExponentialDiagram, z: float) -> str:
    if z <= d.z_lower:
        return "convex"
    for p in d.plateaus:
        if p.s_minus <= z <= p.s_plus:
            return "broken" if p.n == 1 else f"lock:{p.n}"
    for b in d.bridges:
        if b.z_left <= z <= b.z_right:
            return f"bridge:{b.left}"
    return "bridge:accumulation"


# ---------------------------------------------------------------------------
# phase-constrained energy and canonical microstructures
# ---------------------------------------------------------------------------

def _floor_guarded(x: float, guard: float = 1e-12) -> int:
    r = round(x)
    return int(r) if abs(x - r) <= guard else math.floor(x)


def cell_split_weights(theta) -> tuple[int, float]:
    """``(N_theta, t)`` with ``N_theta = floor(1/theta)`` and the bond fraction ``t`` in the shorter cells."""
    if isinstance(theta, Fraction):
        N = math.floor(1 / theta)
        t = N * (theta * (N + 1) - 1)
        return N, float(t)
    N = _floor_guarded(1.0 / theta)
    return N, N * (theta * (N + 1) - 1)


def constrained_transform_exponential(family: GNFamily, theta, z: float) -> float:
    """``Qhat(theta, z)``: cells of ``N_theta`` and ``N_theta + 1`` bonds mixed at fraction ``t``."""
    if not 0 <= float(theta) <= 1:
        raise ValueError("theta must lie in [0, 1]")
    if float(theta) == 0:
        return family.value(math.inf, z)
    N, t = cell_split_weights(theta)
    if abs(t - 1) <= 1e-12:
        return family.value(N, z)
    if abs(t) <= 1e-12:
        return family.value(N + 1, z)
    if family.closed_form:
        g1, g2 = family.quadratic_cell(N), family.quadratic_cell(N + 1)
        return float(infimal_split(g1, t, g2, 1 - t)(z))

    def split(x):
        y = (z - t * x) / (1 - t)
        return t * family.value(N, x) + (1 - t) * family.value(N + 1, y)

    res = minimize_scalar(split, bracket=(z - 1.0, z + 1.0), tol=1e-12)
    return float(res.fun)


@dataclass(frozen=True)
class CanonicalSet:
    """Maximally uniform integer set ``{k : floor(k theta) != floor((k + 1) theta)}``."""

    theta: float | Fraction

    def members(self, lo: int, hi: int) -> list[int]:
        return canonical_set(self.theta, (lo, hi))

    def window_counts(self, M: int, lo: int = 0, hi: int | None = None) -> list[int]:
        hi = hi if hi is not None else lo + 4 * M
        mem = set(self.members(lo, hi + M))
        return [sum(1 for k in range(s, s + M) if k in mem) for s in range(lo, hi + 1)]


def canonical_set(theta, rng: tuple[int, int]) -> list[int]:
    """Members of ``A(theta)`` in the closed range ``[lo, hi]``.

    Rational ``theta`` (``Fraction``) is exact; floats use a guard band of
    ``1e-12`` around integer crossings, so adversarial irrationals are approximate.
    """
    lo, hi = rng
    if not 0 <= theta <= 1:
        raise ValueError("theta must lie in [0, 1]")
    if isinstance(theta, Fraction):
        fl = lambda k: (k * theta.numerator) // theta.denominator
    else:
        fl = lambda k: _floor_guarded(k * theta)
    return [k for k in range(lo, hi + 1) if fl(k) != fl(k + 1)]


def canonical_spin(theta: Fraction, period: int) -> np.ndarray:
    """Spin vector (``+1`` on broken bonds) of one period of ``A(theta)``, bonds ``1..period``."""
    members = set(canonical_set(theta, (1, period)))
    return np.array([1 if k in members else -1 for k in range(1, period + 1)])
