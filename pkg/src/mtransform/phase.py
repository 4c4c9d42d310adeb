"""Phase-constrained relaxations and the phase multifunction.

Two regimes decouple the roles of the kernel and of the non-convexity:

* zero kernel, non-convex ``f``: the energy at phase fraction ``theta`` is the
  best two-phase split of ``f``;
* convex ``f``, arbitrary kernel: forcing a fraction ``theta`` of bonds past a
  threshold ``z*`` costs an explicit amount that depends on the kernel only
  through its second moment ``a_m``.

``phase_multifunction`` turns any ``theta -> E(theta, z)`` into the set of
optimal phase fractions, using the lower semicontinuous envelope in ``theta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np
from scipy.optimize import minimize_scalar

from .kernels import Kernel
from .piecewise import INF, infimal_split
from .potentials import MINUS, PLUS, BiconvexPotential, CallablePotential

DEFAULT_DENOMINATOR = 64
FLAT_TOL = 1e-10
_EDGE = 1e-13


# ---------------------------------------------------------------------------
# zero kernel
# ---------------------------------------------------------------------------

def constrained_convexification_zero_kernel(f, theta: float, z: float) -> float:
    """``inf{(1 - theta) f(t) + theta f(s) : t <= z*, s >= z*, (1 - theta) t + theta s = z}``.

    At ``theta = 0`` (resp. 1) this is ``f`` restricted to ``z <= z*`` (resp.
    ``z >= z*``), ``+inf`` elsewhere.
    """
    if not 0 <= theta <= 1:
        raise ValueError("theta must lie in [0, 1]")
    zs = f.z_star
    if theta == 0:
        return float(f(z)) if z <= zs else INF
    if theta == 1:
        return float(f(z)) if z >= zs else INF
    if isinstance(f, BiconvexPotential):
        if f.family == "biqdw":
            return _biquadratic_zero_kernel(f.params[0], theta, z)
        if f.family == "truncq":
            return _truncated_zero_kernel(lambda x: x * x, math.sqrt(f.params[0]), f.params[0], theta, z)
        return float(infimal_split(f.branch_function(MINUS), 1 - theta, f.branch_function(PLUS), theta)(z))
    return _zero_kernel_numeric(f, theta, z)


def _truncated_zero_kernel(ftilde, zs: float, eta: float, theta: float, z: float) -> float:
    """Truncated family: the broken bonds sit exactly at ``z*`` until ``z`` reaches ``theta z*``."""
    if z >= theta * zs:
        return theta * eta
    return (1 - theta) * ftilde((z - theta * zs) / (1 - theta)) + theta * eta


def _biquadratic_zero_kernel(t: float, theta: float, z: float) -> float:
    """Closed form for ``z^2`` / ``((z - t)/(1 - t))^2`` (threshold 1, ``t > 1``)."""
    lo = (1 - theta * t) / (1 - t)
    hi = 1 + theta * t * (t - 1)
    if z <= lo:
        return (z - theta) ** 2 / (1 - theta) + theta
    if z <= hi:
        return (z - theta * t) ** 2 / (1 - theta + theta * (1 - t) ** 2)
    return (z - 1 + theta * (1 - t)) ** 2 / (theta * (1 - t) ** 2) + 1 - theta


def _zero_kernel_numeric(f: CallablePotential, theta: float, z: float, max_width: float = 1e12) -> float:
    """Split for callable branches, minimised over one of the two strains.

    The strain of the phase with the larger weight is the free variable (so
    the other strain moves at least as fast and both can reach infinity).
    The objective is convex, so a geometric scan away from the feasibility
    bound brackets the minimum, or shows that the infimum is only approached at
    infinity, in which case the smallest scanned value is returned.
    """
    zs = f.z_star

    def value(t, s):
        return (1 - theta) * float(f.f_minus(np.float64(t))) + theta * float(f.f_plus(np.float64(s)))

    if theta < 0.5:
        upper = min(zs, (z - theta * zs) / (1 - theta))

        def split(w):
            t = upper - w
            return value(t, (z - (1 - theta) * t) / theta)
    else:
        lower = max(zs, (z - (1 - theta) * zs) / theta)

        def split(w):
            s = lower + w
            return value((z - theta * s) / (1 - theta), s)

    widths = [0.0]
    vals = [split(0.0)]
    w = 1e-3
    while w <= max_width:
        widths.append(w)
        vals.append(split(w))
        if vals[-1] > vals[-2]:
            break
        w *= 2
    k = int(np.argmin(vals))
    if k == len(vals) - 1:
        return float(vals[k])
    res = minimize_scalar(split, bounds=(widths[max(k - 1, 0)], widths[k + 1]), method="bounded",
                          options={"xatol": 1e-12})
    return float(min(res.fun, vals[k]))


# ---------------------------------------------------------------------------
# convex potentials with an arbitrary kernel
# ---------------------------------------------------------------------------

def constrained_convex_potential(f: Callable[[float], float], kernel: Kernel | float, theta: float, z: float,
                                 z_star: float, hat: bool = False) -> float:
    """Energy of convex ``f`` with a fraction ``theta`` of bonds forced to ``[z*, inf)``.

    This is the cost of two macroscopic phases, the constrained bonds sitting
    at ``z*``.  It is the constrained minimum for nearest-neighbour kernels;
    longer-range kernels can do better by interleaving the phases (a period-2
    alternation lowers every even-window sum), so in general it is an upper
    bound on the lattice minimum.

    ``kernel`` may be a ``Kernel`` or directly its second moment ``a_m``.
    ``hat=True`` adds ``a_m z^2`` (the energy including the affine kernel part).
    """
    a = kernel if isinstance(kernel, (int, float)) else kernel.moment().a_m
    extra = a * z * z if hat else 0.0
    if theta == 0:
        return (float(f(z)) + extra) if z <= z_star else INF
    if theta == 1:
        return (float(f(z)) + extra) if z >= z_star else INF
    if not 0 < theta < 1:
        raise ValueError("theta must lie in [0, 1]")
    d2 = (z - z_star) ** 2
    if z < z_star:
        val = theta * f(z_star) + (1 - theta) * f((z - theta * z_star) / (1 - theta)) + a * theta / (1 - theta) * d2
    else:
        val = (1 - theta) * f(z_star) + theta * f((z - (1 - theta) * z_star) / theta) + a * (1 - theta) / theta * d2
    return float(val) + extra


# ---------------------------------------------------------------------------
# phase multifunction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseMultifunction:
    """Optimal phase fractions at one strain.

    ``theta_lo..theta_hi`` is the argmin interval of the lower semicontinuous
    envelope in ``theta``; ``theta`` is its minimum (the selected phase).
    ``empty_closure`` marks infima reached only in the limit ``theta -> 0`` or
    ``theta -> 1`` and never attained; ``symmetric`` marks a tie between the
    two extreme phases resolved by the minimum convention.
    """

    z: float
    theta: float
    theta_lo: float
    theta_hi: float
    value: float
    empty_closure: bool = False
    symmetric: bool = False

    def contains(self, theta: float, tol: float = 1e-12) -> bool:
        return self.theta_lo - tol <= theta <= self.theta_hi + tol

    def to_row(self) -> dict:
        return {"z": self.z, "theta_min": self.theta, "theta_lo": self.theta_lo, "theta_hi": self.theta_hi,
                "empty_closure_flag": int(self.empty_closure)}


def farey_grid(max_denominator: int = DEFAULT_DENOMINATOR, extra: Iterable[float] = ()) -> np.ndarray:
    """All fractions ``p/q`` in ``[0, 1]`` with ``q <= max_denominator``, plus ``extra``."""
    vals = {Fraction(p, q) for q in range(1, max_denominator + 1) for p in range(q + 1)}
    out = sorted(float(v) for v in vals)
    if extra:
        out = sorted(set(out) | {float(e) for e in extra})
    return np.array(out)


def phase_multifunction(energy: Callable[[float, float], float], z: float,
                        grid: np.ndarray | None = None, tol: float = FLAT_TOL) -> PhaseMultifunction:
    """Argmin set in ``theta`` of the lower semicontinuous envelope of ``theta -> energy(theta, z)``.

    The envelope differs from the function only at ``theta = 0`` and ``1``,
    where it takes the smaller of the value and the one-sided limit (estimated
    at distance ``1e-13``) -- the energies in this package are convex in
    ``theta`` on ``(0, 1)``, so interior values need no correction.
    """
    th = farey_grid() if grid is None else np.asarray(grid, dtype=float)
    vals = np.array([energy(float(t), z) for t in th])
    env = vals.copy()
    limits = {}
    for idx, inner in ((0, _EDGE), (len(th) - 1, 1 - _EDGE)):
        lim = energy(float(inner), z)
        limits[idx] = lim
        env[idx] = min(vals[idx], lim)
    finite = np.isfinite(env)
    if not np.any(finite):
        return PhaseMultifunction(z, math.nan, math.nan, math.nan, INF, True)
    best = float(np.min(env[finite]))
    scale = tol * (1.0 + abs(best))
    arg = np.nonzero(finite & (env <= best + scale))[0]
    lo, hi = float(th[arg[0]]), float(th[arg[-1]])
    attained = [i for i in arg if vals[i] <= best + scale]
    empty = len(attained) == 0
    symmetric = (len(arg) == 2 and arg[0] == 0 and arg[-1] == len(th) - 1)
    if symmetric:
        hi = lo     # two isolated extreme phases: keep the minimum convention
    return PhaseMultifunction(z, lo, lo, hi, best, empty, symmetric)
