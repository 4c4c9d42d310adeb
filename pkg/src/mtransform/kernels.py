"""Interaction kernels ``m_n`` and the quantities derived from them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .potentials import BiconvexPotential, SmoothPotential


@dataclass(frozen=True)
class KernelMoment:
    """Second moment ``a_m = 2 sum n^2 m_n`` and first moment ``t_m = sum n m_n`` (unused)."""

    a_m: float
    t_m: float


class Kernel:
    """Base class: subclasses provide ``coefficient(n)`` for ``n >= 1``."""

    def coefficient(self, n: int) -> float:
        raise NotImplementedError

    def coefficients(self, n_max: int) -> np.ndarray:
        """Array ``[m_1, ..., m_{n_max}]``."""
        return np.array([self.coefficient(n) for n in range(1, n_max + 1)], dtype=float)

    def nearest(self) -> float:
        """Nearest-neighbour coefficient ``m_1``."""
        return self.coefficient(1)

    def scaled(self, sigma: float) -> "Kernel":
        """The kernel ``m_n / sigma``."""
        raise NotImplementedError

    def truncation_range(self, tol: float = 1e-12) -> int:
        raise NotImplementedError

    def moment(self) -> KernelMoment:
        n_max = self.truncation_range(1e-300)
        n = np.arange(1, n_max + 1)
        m = self.coefficients(n_max)
        return KernelMoment(float(2 * np.sum(n * n * m)), float(np.sum(n * m)))


@dataclass(frozen=True)
class ConcentratedKernel(Kernel):
    """Nearest neighbours ``m1`` plus a single far coefficient ``mM`` at distance ``M``."""

    m1: float
    M: int
    mM: float

    def __post_init__(self):
        if self.m1 < 0 or self.mM < 0:
            raise ValueError("kernel coefficients must be non-negative")
        if self.M < 1:
            raise ValueError("M must be at least 1")

    def coefficient(self, n: int) -> float:
        if n == 1:
            return self.m1 + (self.mM if self.M == 1 else 0.0)
        return self.mM if n == self.M else 0.0

    def scaled(self, sigma: float) -> "ConcentratedKernel":
        return ConcentratedKernel(self.m1 / sigma, self.M, self.mM / sigma)

    def truncation_range(self, tol: float = 1e-12) -> int:
        return self.M

    def moment(self) -> KernelMoment:
        if self.M == 1:
            return KernelMoment(2 * (self.m1 + self.mM), self.m1 + self.mM)
        return KernelMoment(2 * (self.m1 + self.mM * self.M ** 2), self.m1 + self.M * self.mM)


@dataclass(frozen=True)
class NearestKernel(Kernel):
    """Nearest-neighbour interactions only."""

    m1: float

    def coefficient(self, n: int) -> float:
        return self.m1 if n == 1 else 0.0

    def scaled(self, sigma: float) -> "NearestKernel":
        return NearestKernel(self.m1 / sigma)

    def truncation_range(self, tol: float = 1e-12) -> int:
        return 1

    def moment(self) -> KernelMoment:
        return KernelMoment(2 * self.m1, self.m1)


@dataclass(frozen=True)
class ExponentialKernel(Kernel):
    """``m_n = rho exp(-sigma n)``."""

    sigma: float
    rho: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0 or self.rho <= 0:
            raise ValueError("sigma and rho must be positive")

    def coefficient(self, n: int) -> float:
        return self.rho * math.exp(-self.sigma * n)

    def scaled(self, sigma: float) -> "ExponentialKernel":
        return ExponentialKernel(self.sigma, self.rho / sigma)

    def truncation_range(self, tol: float = 1e-12) -> int:
        if tol >= self.rho:
            return 0
        return int(math.ceil(-math.log(tol / self.rho) / self.sigma))

    def moment(self) -> KernelMoment:
        q = math.exp(-self.sigma)
        a = 2 * self.rho * q * (1 + q) / (1 - q) ** 3
        t = self.rho * q / (1 - q) ** 2
        return KernelMoment(a, t)


@dataclass(frozen=True)
class ExplicitKernel(Kernel):
    """Finite list ``(m_1, ..., m_K)``; ``decay`` records the tail exponent (informational)."""

    coeffs: tuple[float, ...]
    decay: float = math.inf

    def __post_init__(self):
        if any(c < 0 for c in self.coeffs):
            raise ValueError("kernel coefficients must be non-negative")
        if not self.decay > 3:
            raise ValueError("decay exponent must exceed 3")

    def coefficient(self, n: int) -> float:
        return self.coeffs[n - 1] if 1 <= n <= len(self.coeffs) else 0.0

    def scaled(self, sigma: float) -> "ExplicitKernel":
        return ExplicitKernel(tuple(c / sigma for c in self.coeffs), self.decay)

    def truncation_range(self, tol: float = 1e-12) -> int:
        return len(self.coeffs)


def zero_kernel() -> ExplicitKernel:
    return ExplicitKernel(())


def kernel_second_moment(m: Kernel) -> KernelMoment:
    return m.moment()


def kernel_truncation_range(m: Kernel, tol: float = 1e-12) -> int:
    return m.truncation_range(tol)


@dataclass(frozen=True)
class StabilityReport:
    """``stable`` is True / False / None (unknown); ``critical_sigma`` for the family ``m / sigma``."""

    stable: bool | None
    critical_sigma: float | None


def m_stability_margin(f: BiconvexPotential | SmoothPotential, m: Kernel) -> StabilityReport:
    """Stability test via convexity of ``f + 2 m1 z^2``.

    For concentrated kernels this is an equivalence; for other kernels it is
    only a sufficient condition, so a failure is reported as unknown.
    ``critical_sigma`` is the largest ``sigma`` for which ``m1 / sigma`` still
    convexifies ``f`` (``None`` when a concave kink makes that impossible).
    """
    curv = f.inf_curvature()
    kink = f.kink_jump()
    m1 = m.nearest()
    if kink < -1e-14:
        convex = False
        critical = None
    else:
        convex = curv + 4 * m1 >= -1e-14
        critical = math.inf if curv >= 0 else (4 * m1 / (-curv) if m1 > 0 else 0.0)
    if convex:
        stable: bool | None = True
    elif isinstance(m, (ConcentratedKernel, NearestKernel)):
        stable = False
    else:
        stable = None
    return StabilityReport(stable, critical)
