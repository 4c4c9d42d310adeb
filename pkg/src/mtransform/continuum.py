"""Continuum counterparts of the exponential-kernel chain.

A continuum bar with two displacement fields and fracture toughness ``eta``
homogenises to ``g_hom(z) = inf_{S > 0} lambda_S z^2 + eta / S``, where ``S`` is
the distance between cracks and ``lambda_S`` the effective stiffness of an
uncracked segment of length ``S``.  Restricting ``S`` to integers and
convexifying gives the lattice-constrained density ``g_hom^Z``; with the
parameters of ``equivalence_parameters`` its stiffnesses coincide with the
discrete cell coefficients ``c_N``, so ``g_hom^Z`` is the discrete relaxed energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .exponential import chain_zeta, staircase_envelope, N_SEARCH_MAX
from .piecewise import PiecewiseQuadratic

S_MIN, S_MAX = 1e-6, 1e6


@dataclass(frozen=True)
class ContinuumParams:
    alpha: float
    beta: float
    gamma: float
    eta: float = 1.0

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma, self.eta) <= 0:
            raise ValueError("continuum parameters must be positive")

    @property
    def omega(self) -> float:
        return math.sqrt((self.alpha + self.gamma) * self.beta / (self.alpha * self.gamma))

    @property
    def z_c(self) -> float:
        """End of the uncracked branch ``g_hom = (alpha + gamma) z^2``."""
        a, g = self.alpha, self.gamma
        return math.sqrt(2 * self.eta * self.omega * a / (4 * g * (a + g)))

    @property
    def stiffness_limit(self) -> float:
        return self.alpha + self.gamma


def _x_minus_tanh(x: float) -> float:
    if x < 1e-2:
        x2 = x * x
        return x * x2 * (1 / 3 - x2 * (2 / 15 - x2 * 17 / 315))
    return x - math.tanh(x)


def lambda_modulus(params: ContinuumParams, S: float) -> float:
    """Stiffness ``lambda_S`` of an uncracked segment of length ``S``."""
    if S <= 0:
        raise ValueError("S must be positive")
    return params.alpha + lambda_excess(params, S)


def lambda_excess(params: ContinuumParams, S: float) -> float:
    """``lambda_S - alpha`` evaluated without cancellation."""
    x = 0.5 * params.omega * S
    if math.isinf(x):
        return params.gamma
    r = params.gamma / params.alpha
    return params.gamma * _x_minus_tanh(x) / (x + r * math.tanh(x))


@dataclass(frozen=True)
class NaiveDensity:
    value: float
    S_star: float          # optimal crack spacing (inf on the uncracked branch)


def homogenized_density_naive(params: ContinuumParams, z: float) -> float:
    return homogenized_density_naive_detail(params, z).value


def homogenized_density_naive_detail(params: ContinuumParams, z: float) -> NaiveDensity:
    """``inf_{S > 0} lambda_S z^2 + eta / S`` by a log-spaced scan and a bounded polish in ``log S``."""
    z2 = z * z
    uncracked = params.stiffness_limit * z2
    if abs(z) <= params.z_c:
        return NaiveDensity(uncracked, math.inf)
    eta, alpha = params.eta, params.alpha

    def excess(logS):
        S = math.exp(logS)
        return lambda_excess(params, S) * z2 + eta / S

    grid = np.linspace(math.log(S_MIN), math.log(S_MAX), 241)
    vals = np.array([excess(t) for t in grid])
    k = int(np.argmin(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(excess, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    best, S = float(res.fun), math.exp(res.x)
    if vals[k] < best:
        best, S = float(vals[k]), math.exp(grid[k])
    value = alpha * z2 + best
    if uncracked <= value:
        return NaiveDensity(uncracked, math.inf)
    return NaiveDensity(value, S)


def naive_excess(params: ContinuumParams, z: float) -> float:
    """``g_hom(z) - alpha z^2`` computed directly (used for the large-strain exponent)."""
    d = homogenized_density_naive_detail(params, z)
    if math.isinf(d.S_star):
        return params.gamma * z * z
    return lambda_excess(params, d.S_star) * z * z + params.eta / d.S_star


def homogenized_density_lattice_function(params: ContinuumParams, N_max: int = N_SEARCH_MAX
                                         ) -> PiecewiseQuadratic:
    """``(inf_N lambda_N z^2 + eta / N)**`` as a piecewise quadratic."""
    return staircase_envelope(lambda N: lambda_modulus(params, N), params.stiffness_limit, params.eta,
                              params.z_c, N_max)


def homogenized_density_lattice(params: ContinuumParams, z, N_max: int = N_SEARCH_MAX):
    return homogenized_density_lattice_function(params, N_max)(z)


def equivalence_parameters(a: float, b: float, eta: float = 1.0) -> ContinuumParams:
    """Continuum parameters whose ``lambda_N`` equal the discrete ``c_N`` of the chain ``(a, b)``."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    zeta = chain_zeta(a, b)
    zc = zeta / math.tanh(zeta)
    den = a + zc
    alpha = a * (a + 1) / den
    beta = 4 * a * (a + 1) * zeta ** 2 * zc / den ** 2
    gamma = (a + 1) * zc / den
    return ContinuumParams(alpha, beta, gamma, eta)


def naive_parameters(a: float, b: float, eta: float = 1.0, effective_toughness: bool = False
                     ) -> ContinuumParams:
    """Direct transcription ``alpha = a, beta = b, gamma = 1``.

    With ``effective_toughness`` the toughness is divided by ``cosh(zeta)``,
    which makes the end of the uncracked branch coincide with the discrete
    accumulation point of the locking intervals.
    """
    e = eta / math.cosh(chain_zeta(a, b)) if effective_toughness else eta
    return ContinuumParams(float(a), float(b), 1.0, e)
