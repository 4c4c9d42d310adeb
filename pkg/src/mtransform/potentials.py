"""Bi-convex potentials: two convex branches glued at a threshold ``z_star``.

The named families are

* ``truncated_quadratic(eta)``: ``z^2`` up to ``sqrt(eta)``, then the constant ``eta``;
* ``double_well()``: ``(1 - |z|)^2`` with threshold 0;
* ``convex_affine(tau)``: ``z^2`` up to 1, then ``2 tau (z - 1) + 1``;
* ``double_well_biquadratic(t)``: ``z^2`` up to 1, then ``((z - t) / (1 - t))^2``.

Each branch is a quadratic ``(A, B, C)``; on its own half line it is the
potential, and on the whole line it is the branch "extension" used by the
lattice oracle for its unconstrained fast path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .piecewise import INF, PiecewiseQuadratic, QuadraticPiece, convex_envelope, quadratic

MINUS, PLUS = -1, 1


@dataclass(frozen=True)
class BiconvexPotential:
    """Bi-convex potential with branch coefficients ``(A, B, C)`` on each side of ``z_star``."""

    z_star: float
    minus: tuple[float, float, float]
    plus: tuple[float, float, float]
    family: str = "general"
    params: tuple = ()
    _pq: PiecewiseQuadratic = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for A, _, _ in (self.minus, self.plus):
            if A < 0:
                raise ValueError("branches must be convex")
        zs = self.z_star
        gap = _q(self.minus, zs) - _q(self.plus, zs)
        if abs(gap) > 1e-12 * (1.0 + abs(_q(self.minus, zs))):
            raise ValueError("branches must agree at the threshold")
        pq = PiecewiseQuadratic((QuadraticPiece(-INF, zs, *self.minus, tag=MINUS),
                                 QuadraticPiece(zs, INF, *self.plus, tag=PLUS)))
        object.__setattr__(self, "_pq", pq)

    # evaluation ---------------------------------------------------------
    def __call__(self, z):
        return self._pq(z)

    def branch(self, spin: int) -> tuple[float, float, float]:
        return self.minus if spin == MINUS else self.plus

    def branch_function(self, spin: int) -> PiecewiseQuadratic:
        """The branch on its own half line, ``+inf`` on the other side."""
        if spin == MINUS:
            return quadratic(*self.minus, lo=-INF, hi=self.z_star, tag=MINUS)
        return quadratic(*self.plus, lo=self.z_star, hi=INF, tag=PLUS)

    def as_piecewise(self) -> PiecewiseQuadratic:
        return self._pq

    # derived objects ------------------------------------------------------
    def shifted(self, lam: float) -> "BiconvexPotential":
        """``f + lam z^2`` (the family tag is kept in ``params`` for reference)."""
        return BiconvexPotential(self.z_star, _shift(self.minus, lam), _shift(self.plus, lam),
                                 self.family + "+quad", self.params + (lam,))

    def envelope(self) -> PiecewiseQuadratic:
        return convex_envelope(self._pq)

    def is_convex(self) -> bool:
        return self._pq.is_convex()

    def inf_curvature(self) -> float:
        return 2.0 * min(self.minus[0], self.plus[0])

    def kink_jump(self) -> float:
        """Slope jump at the threshold (negative means a concave kink)."""
        zs = self.z_star
        return (2 * self.plus[0] * zs + self.plus[1]) - (2 * self.minus[0] * zs + self.minus[1])

    def value_at_threshold(self) -> float:
        return _q(self.minus, self.z_star)


def _q(c, z):
    return (c[0] * z + c[1]) * z + c[2]


def _shift(c, lam):
    return (c[0] + lam, c[1], c[2])


def truncated_quadratic(eta: float = 1.0) -> BiconvexPotential:
    """``z^2`` for ``z <= sqrt(eta)`` and ``eta`` beyond: brittle fracture with toughness ``eta``."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    return BiconvexPotential(math.sqrt(eta), (1.0, 0.0, 0.0), (0.0, 0.0, eta), "truncq", (eta,))


def double_well() -> BiconvexPotential:
    """``(1 - |z|)^2`` with wells at ``-1`` and ``+1``."""
    return BiconvexPotential(0.0, (1.0, 2.0, 1.0), (1.0, -2.0, 1.0), "dwell", ())


def convex_affine(tau: float) -> BiconvexPotential:
    """``z^2`` for ``z <= 1`` continued by the line ``2 tau (z - 1) + 1``."""
    return BiconvexPotential(1.0, (1.0, 0.0, 0.0), (0.0, 2.0 * tau, 1.0 - 2.0 * tau), "convaffine",
                             (tau,))


def double_well_biquadratic(t: float) -> BiconvexPotential:
    """``z^2`` for ``z <= 1`` and ``((z - t)/(1 - t))^2`` beyond, with ``t > 1``."""
    if t <= 1:
        raise ValueError("t must exceed 1")
    k = 1.0 / (1.0 - t) ** 2
    return BiconvexPotential(1.0, (1.0, 0.0, 0.0), (k, -2.0 * t * k, t * t * k), "biqdw", (t,))


def from_branches(z_star: float, minus: tuple, plus: tuple) -> BiconvexPotential:
    """General bi-convex potential from two quadratic branches."""
    return BiconvexPotential(z_star, tuple(minus), tuple(plus), "general", ())


FAMILIES = {
    "truncq": truncated_quadratic,
    "dwell": double_well,
    "convaffine": convex_affine,
    "biqdw": double_well_biquadratic,
}


@dataclass(frozen=True)
class SmoothPotential:
    """Twice-differentiable potential given by callables (used for stability tests)."""

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    second_derivative: Callable[[np.ndarray], np.ndarray]
    inf_curvature_value: float

    def __call__(self, z):
        return self.func(np.asarray(z, dtype=float))

    def inf_curvature(self) -> float:
        return self.inf_curvature_value

    def kink_jump(self) -> float:
        return 0.0


def quartic_double_well() -> SmoothPotential:
    """``(1 - z^2)^2``; its curvature ``12 z^2 - 4`` is bounded below by ``-4``."""
    return SmoothPotential("quartic", lambda z: (1 - z * z) ** 2, lambda z: 12 * z * z - 4, -4.0)


@dataclass(frozen=True)
class CallablePotential:
    """Bi-convex potential given by two convex callables (no closed forms)."""

    name: str
    z_star: float
    f_minus: Callable[[float], float]
    f_plus: Callable[[float], float]

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        out = np.where(z <= self.z_star, self.f_minus(np.minimum(z, self.z_star)),
                       self.f_plus(np.maximum(z, self.z_star)))
        return float(out) if out.ndim == 0 else out


def exp_abs() -> CallablePotential:
    """``exp(-|z|)``: bi-convex with threshold 0, infimum 0 reached only at infinity."""
    return CallablePotential("exp-abs", 0.0, lambda z: np.exp(z), lambda z: np.exp(-z))


def exp_truncated() -> CallablePotential:
    """``min{1, exp(-z)}``: constant 1 on the left, decaying branch on the right."""
    return CallablePotential("exp-trunc", 0.0, lambda z: np.ones_like(np.asarray(z, dtype=float)),
                             lambda z: np.exp(-z))
