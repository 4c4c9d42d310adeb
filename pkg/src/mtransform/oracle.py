"""Exact minimisation of finite lattice energies.

The energy of ``N`` bonds with strains ``e_1..e_N`` (``u_i - u_{i-1} = e_i``) is

    sum_i f(e_i) + sum_{n>=1} 2 m_n sum_{windows W of n consecutive bonds} (sum_{l in W} e_l)^2

where the window sums are the differences ``u_{i+n} - u_i``; the factor 2
counts ordered pairs.  In ``endpoint`` mode only windows inside the chain
enter and the boundary condition is ``sum e = N z``; in ``periodic`` mode the
strains are extended periodically and every window starting inside one period
is counted (this is the per-period energy of a periodic profile).

A bi-convex potential makes the problem a minimum over spin vectors of convex
quadratic programmes: spin ``+1`` constrains ``e_i >= z_star`` and spin ``-1``
constrains ``e_i <= z_star``.  Each spin is first solved without bounds using
the branch quadratics on the whole line; if that solution respects the bounds
it is exact, otherwise a bound-constrained active-set solve is run.  The
unconstrained value is a lower bound, which prunes most spins.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import ExponentialKernel, Kernel
from .potentials import MINUS, PLUS, BiconvexPotential

ENUMERATION_BUDGET = 24
_CHUNK = 4096
_REG = 1e-13  # regularisation added only to degenerate (positive semi-definite) problems


@dataclass(frozen=True)
class LatticeProblem:
    """A finite lattice problem ``u_0 = 0``, ``u_N = N z``.

    ``mode`` is ``"endpoint"``, ``"periodic"`` or ``"boundary_layer"``; in the
    last case the first and last ``layer_width`` bonds are frozen at strain ``z``.
    ``phase_count`` restricts to spins with exactly that many ``+1`` entries.
    """

    N: int
    z: float
    kernel: Kernel
    potential: BiconvexPotential
    mode: str = "endpoint"
    layer_width: int = 0
    phase_count: int | None = None
    truncation_tol: float = 1e-12

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be positive")
        if self.mode not in ("endpoint", "periodic", "boundary_layer"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "boundary_layer" and not 2 * self.layer_width < self.N:
            raise ValueError("boundary layer must be narrower than N/2")
        if self.phase_count is not None and not 0 <= self.phase_count <= self.N:
            raise ValueError("phase count must lie in [0, N]")


@dataclass
class OracleResult:
    value: float
    per_site: float
    u: np.ndarray
    strains: np.ndarray
    spin: np.ndarray
    theta: float
    boundary_active: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    degenerate: bool = False

    def to_json(self) -> dict:
        return {"value": self.value, "per_site": self.per_site, "spin": self.spin.astype(int).tolist(),
                "u": self.u.tolist(), "theta": self.theta, "degenerate": self.degenerate}


# ---------------------------------------------------------------------------
# quadratic forms
# ---------------------------------------------------------------------------

def kernel_matrix(N: int, kernel: Kernel, mode: str = "endpoint", tol: float = 1e-12) -> np.ndarray:
    """Symmetric matrix ``K`` with kernel energy ``e^T K e``."""
    n_max = kernel.truncation_range(tol)
    K = np.zeros((N, N))
    if mode == "periodic":
        for n in range(1, n_max + 1):
            m = kernel.coefficient(n)
            if m == 0:
                continue
            q, r = divmod(n, N)
            c = np.full(N, float(q))
            c[:r] += 1.0
            # windows start at every bond of the period; K_n is circulant
            R = np.array([np.dot(c, np.roll(c, -d)) for d in range(N)])
            idx = (np.arange(N)[None, :] - np.arange(N)[:, None]) % N
            K += 2 * m * R[idx]
        if isinstance(kernel, ExponentialKernel):
            K += _periodic_exponential_tail(N, kernel, n_max)
        return K
    j = np.arange(N)[:, None]
    l = np.arange(N)[None, :]
    lo, hi = np.minimum(j, l), np.maximum(j, l)
    for n in range(1, min(n_max, N) + 1):
        m = kernel.coefficient(n)
        if m == 0:
            continue
        count = np.minimum(lo, N - n) - np.maximum(0, hi - n + 1) + 1
        K += 2 * m * np.maximum(count, 0)
    return K


def _periodic_exponential_tail(N: int, kernel: ExponentialKernel, n_max: int) -> np.ndarray:
    """Exact remainder of the periodic sum over window lengths ``n > n_max``.

    Writing ``n = q N + r``, a window covers every bond ``q`` times plus ``r``
    consecutive bonds once more, so each residue class ``r`` contributes
    geometric series in ``q`` (with weights ``1``, ``q`` and ``q^2``).
    """
    x = math.exp(-kernel.sigma * N)
    d = np.arange(N)
    K_row = np.zeros(N)
    for r in range(N):
        q0 = max((n_max - r) // N + 1, 1 if r == 0 else 0)
        head = x ** q0
        if head == 0.0:
            continue
        s0 = head / (1 - x)
        s1 = head * (q0 / (1 - x) + x / (1 - x) ** 2)
        s2 = head * (q0 * q0 / (1 - x) + 2 * q0 * x / (1 - x) ** 2 + x * (1 + x) / (1 - x) ** 3)
        i = np.arange(r)
        overlap = np.array([np.count_nonzero((i + k) % N < r) for k in d], dtype=float)
        K_row += 2 * kernel.rho * math.exp(-kernel.sigma * r) * (N * s2 + 2 * r * s1 + overlap * s0)
    idx = (d[None, :] - d[:, None]) % N
    return K_row[idx]


def lattice_energy(strains: np.ndarray, kernel: Kernel, potential: BiconvexPotential,
                   mode: str = "endpoint", tol: float = 1e-12) -> float:
    """Recompute the energy of a strain vector directly from window sums."""
    e = np.asarray(strains, dtype=float)
    N = len(e)
    val = float(np.sum(potential(e)))
    n_max = kernel.truncation_range(tol)
    if mode == "periodic":
        ext = np.concatenate([np.tile(e, n_max // N + 2)])
        csum = np.concatenate([[0.0], np.cumsum(ext)])
        for n in range(1, n_max + 1):
            m = kernel.coefficient(n)
            if m:
                w = csum[n:n + N] - csum[:N]
                val += 2 * m * float(np.sum(w * w))
        return val
    csum = np.concatenate([[0.0], np.cumsum(e)])
    for n in range(1, min(n_max, N) + 1):
        m = kernel.coefficient(n)
        if m:
            w = csum[n:] - csum[:-n]
            val += 2 * m * float(np.sum(w * w))
    return val


def _constrained_min_eig(K: np.ndarray, free: np.ndarray) -> float:
    """Smallest eigenvalue of ``K`` on the free coordinates with zero sum."""
    Kf = K[np.ix_(free, free)]
    n = Kf.shape[0]
    if n <= 1:
        return math.inf
    # orthonormal basis of the zero-sum subspace
    Q, _ = np.linalg.qr(np.vstack([np.ones(n), np.eye(n)[:-1]]).T)
    B = Q[:, 1:]
    return float(np.linalg.eigvalsh(B.T @ Kf @ B)[0])


# ---------------------------------------------------------------------------
# bound-constrained QP with one equality
# ---------------------------------------------------------------------------

def solve_bound_qp(H: np.ndarray, g: np.ndarray, total: float, lower: np.ndarray, upper: np.ndarray,
                   tol: float = 1e-12, x0: np.ndarray | None = None) -> np.ndarray | None:
    """Minimise ``1/2 x^T H x + g^T x`` subject to ``sum x = total`` and ``lower <= x <= upper``.

    Primal active-set method; exact after finitely many steps for positive
    definite ``H`` on the feasible subspace.  Returns ``None`` if infeasible.
    """
    n = len(g)
    x = _feasible_start(total, lower, upper) if x0 is None else np.array(x0, dtype=float)
    if x is None:
        return None
    at = {}
    for i in range(n):
        if x[i] == lower[i]:
            at[i] = -1
        elif x[i] == upper[i]:
            at[i] = 1
    scale = 1.0 + float(np.max(np.abs(H))) + float(np.max(np.abs(g), initial=0.0))
    for _ in range(50 * n + 100):
        free = np.array([i for i in range(n) if i not in at], dtype=int)
        grad = H @ x + g
        if len(free) == 0:
            # all at bounds: the feasible point is fixed; check the multiplier interval
            lo_set = [i for i, s in at.items() if s < 0]
            hi_set = [i for i, s in at.items() if s > 0]
            L = max((-grad[i] for i in lo_set), default=-math.inf)
            U = min((-grad[i] for i in hi_set), default=math.inf)
            if L <= U + tol * scale:
                return x
            # release the bound whose multiplier is most negative
            lam = 0.5 * (L + U) if np.isfinite(L) and np.isfinite(U) else (L if np.isfinite(L) else U)
            worst = min(at, key=lambda i: (grad[i] + lam) * (1 if at[i] < 0 else -1))
            del at[worst]
            continue
        fixed = np.array(sorted(at), dtype=int)
        Hff = H[np.ix_(free, free)]
        rhs = -(g[free] + (H[np.ix_(free, fixed)] @ x[fixed] if len(fixed) else 0.0))
        k = len(free)
        KKT = np.zeros((k + 1, k + 1))
        KKT[:k, :k] = Hff
        KKT[:k, k] = 1.0
        KKT[k, :k] = 1.0
        b = np.concatenate([rhs, [total - float(np.sum(x[fixed]))]])
        try:
            sol = np.linalg.solve(KKT, b)
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(KKT, b, rcond=None)[0]
        xf, lam = sol[:k], sol[k]
        p = xf - x[free]
        if np.max(np.abs(p)) <= tol * (1.0 + np.max(np.abs(x))):
            worst, worst_mult = None, -tol * scale
            for i, side in at.items():
                mult = (grad[i] + lam) if side < 0 else -(grad[i] + lam)
                if mult < worst_mult:
                    worst, worst_mult = i, mult
            if worst is None:
                x[free] = xf
                return x
            del at[worst]
            continue
        alpha, block = 1.0, None
        for j, i in enumerate(free):
            if p[j] < 0 and np.isfinite(lower[i]):
                a = (lower[i] - x[i]) / p[j]
                if a < alpha:
                    alpha, block = a, (i, -1)
            elif p[j] > 0 and np.isfinite(upper[i]):
                a = (upper[i] - x[i]) / p[j]
                if a < alpha:
                    alpha, block = a, (i, 1)
        alpha = max(alpha, 0.0)
        x[free] += alpha * p
        if block is not None:
            i, side = block
            x[i] = lower[i] if side < 0 else upper[i]
            at[i] = side
    raise RuntimeError("active-set iteration did not terminate")


def _feasible_start(total: float, lower: np.ndarray, upper: np.ndarray) -> np.ndarray | None:
    x = np.where(np.isfinite(lower), lower, np.where(np.isfinite(upper), upper, 0.0))
    d = total - float(np.sum(x))
    if d == 0:
        return x
    cand = np.nonzero(upper == math.inf)[0] if d > 0 else np.nonzero(lower == -math.inf)[0]
    if len(cand) == 0:
        # try to redistribute inside finite boxes
        room = (upper - x) if d > 0 else (x - lower)
        room = np.where(np.isfinite(room), room, 0.0)
        if np.sum(room) + 1e-14 < abs(d):
            return None
        x = x + np.sign(d) * room * (abs(d) / np.sum(room))
        return x
    x[cand] += d / len(cand)
    return x


# ---------------------------------------------------------------------------
# spin enumeration
# ---------------------------------------------------------------------------

@dataclass
class _Setup:
    N: int
    K: np.ndarray
    free: np.ndarray
    fixed: np.ndarray
    fixed_value: float
    total: float
    potential: BiconvexPotential
    fixed_spins: np.ndarray
    degenerate: bool


def _setup(N: int, z: float, kernel: Kernel, potential: BiconvexPotential, mode: str, width: int,
           tol: float) -> _Setup:
    K = kernel_matrix(N, kernel, "periodic" if mode == "periodic" else "endpoint", tol)
    fixed = np.array(list(range(width)) + list(range(N - width, N)), dtype=int) \
        if (mode == "boundary_layer" and width > 0) else np.zeros(0, dtype=int)
    free = np.setdiff1d(np.arange(N), fixed)
    spin_fixed = PLUS if z > potential.z_star else MINUS
    fixed_spins = np.full(len(fixed), spin_fixed)
    Ktest = K + np.diag(np.full(N, 0.0))
    degenerate = _constrained_min_eig(Ktest, free) <= 1e-10
    return _Setup(N, K, free, fixed, z, N * z, potential, fixed_spins, degenerate)


def _branch_arrays(potential: BiconvexPotential, S: np.ndarray):
    """Coefficient arrays for spin matrix ``S`` (entries -1/+1)."""
    Am, Bm, Cm = potential.minus
    Ap, Bp, Cp = potential.plus
    plus = S > 0
    return (np.where(plus, Ap, Am), np.where(plus, Bp, Bm), np.where(plus, Cp, Cm))


def _unconstrained_batch(st: _Setup, S_free: np.ndarray):
    """Solve every spin (rows of ``S_free``) with branch extensions; returns (values, strains)."""
    N, free, fixed = st.N, st.free, st.fixed
    B = S_free.shape[0]
    S = np.empty((B, N))
    S[:, free] = S_free
    if len(fixed):
        S[:, fixed] = st.fixed_spins
    A, Bc, C = _branch_arrays(st.potential, S)
    reg = _REG if st.degenerate else 0.0
    k = len(free)
    Kff = st.K[np.ix_(free, free)]
    H = 2 * (Kff[None] + np.einsum("bi,ij->bij", A[:, free] + reg, np.eye(k)))
    rhs = -Bc[:, free]
    if len(fixed):
        rhs = rhs - 2 * (st.K[np.ix_(free, fixed)] @ np.full(len(fixed), st.fixed_value))[None, :]
    KKT = np.zeros((B, k + 1, k + 1))
    KKT[:, :k, :k] = H
    KKT[:, :k, k] = 1.0
    KKT[:, k, :k] = 1.0
    b = np.concatenate([rhs, np.full((B, 1), st.total - len(fixed) * st.fixed_value)], axis=1)
    try:
        sol = np.linalg.solve(KKT, b[..., None])[..., 0]
    except np.linalg.LinAlgError:
        sol = np.einsum("bij,bj->bi", np.linalg.pinv(KKT), b)
    e = np.empty((B, N))
    e[:, free] = sol[:, :k]
    if len(fixed):
        e[:, fixed] = st.fixed_value
    val = np.einsum("bi,ij,bj->b", e, st.K, e) + np.sum((A * e + Bc) * e + C, axis=1)
    return val, e, S


def _constrained_single(st: _Setup, spin: np.ndarray, constrain: str = "both"):
    N, free, fixed = st.N, st.free, st.fixed
    A, Bc, C = _branch_arrays(st.potential, spin[None])
    A, Bc, C = A[0], Bc[0], C[0]
    reg = _REG if st.degenerate else 0.0
    H = 2 * (st.K + np.diag(A + reg))
    zs = st.potential.z_star
    lower = np.full(N, -math.inf)
    upper = np.full(N, math.inf)
    if constrain in ("both", "plus"):
        lower = np.where(spin > 0, zs, lower)
    if constrain in ("both", "minus"):
        upper = np.where(spin < 0, zs, upper)
    if len(fixed):
        lower[fixed] = st.fixed_value
        upper[fixed] = st.fixed_value
    x = solve_bound_qp(H, Bc, st.total, lower, upper)
    if x is None:
        return None
    val = float(x @ st.K @ x + np.sum((A * x + Bc) * x + C))
    return val, x


def _violates(e: np.ndarray, S: np.ndarray, zs: float, constrain: str, tol: float = 1e-12) -> np.ndarray:
    bad = np.zeros(e.shape[0], dtype=bool)
    if constrain in ("both", "plus"):
        bad |= np.any((S > 0) & (e < zs - tol * (1 + abs(zs))), axis=1)
    if constrain in ("both", "minus"):
        bad |= np.any((S < 0) & (e > zs + tol * (1 + abs(zs))), axis=1)
    return bad


def _patterns_all(n: int):
    total = 1 << n
    for s in range(0, total, _CHUNK):
        codes = np.arange(s, min(total, s + _CHUNK), dtype=np.int64)
        yield _codes_to_spins(codes, n)


def _patterns_count(n: int, p: int):
    combos = itertools.combinations(range(n), p)
    while True:
        block = list(itertools.islice(combos, _CHUNK))
        if not block:
            return
        S = -np.ones((len(block), n))
        for r, c in enumerate(block):
            S[r, list(c)] = 1.0
        # lexicographic order with -1 < +1 is the numeric order of the bit codes
        yield S


def _codes_to_spins(codes: np.ndarray, n: int) -> np.ndarray:
    bits = (codes[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    return np.where(bits == 1, 1.0, -1.0)


def _lex_key(spin: np.ndarray) -> tuple:
    return tuple(int(s) for s in spin)


def _enumerate(st: _Setup, spins_free_iter, constrain: str = "both") -> OracleResult:
    zs = st.potential.z_star
    exact: list[tuple[float, tuple, np.ndarray, np.ndarray]] = []
    pending: list[tuple[float, np.ndarray]] = []
    for S_free in spins_free_iter:
        val, e, S = _unconstrained_batch(st, S_free)
        bad = _violates(e, S, zs, constrain)
        for r in np.nonzero(~bad)[0]:
            exact.append((float(val[r]), _lex_key(S[r]), S[r].copy(), e[r].copy()))
        for r in np.nonzero(bad)[0]:
            pending.append((float(val[r]), S[r].copy()))
        # keep the candidate lists short: only the best exact values matter
        if len(exact) > 4 * _CHUNK:
            exact.sort(key=lambda t: t[0])
            cut = exact[0][0] + _tie_tol(exact[0][0])
            exact = [t for t in exact if t[0] <= cut]
    best = min((t[0] for t in exact), default=math.inf)
    pending.sort(key=lambda t: t[0])
    for lb, spin in pending:
        if lb > best + _tie_tol(best):
            break
        res = _constrained_single(st, spin, constrain)
        if res is None:
            continue
        val, x = res
        exact.append((val, _lex_key(spin), spin, x))
        best = min(best, val)
    if not exact:
        raise ValueError("no feasible spin configuration")
    cut = best + _tie_tol(best)
    winners = [t for t in exact if t[0] <= cut]
    val, _, spin, e = min(winners, key=lambda t: t[1])
    N = st.N
    u = np.concatenate([[0.0], np.cumsum(e)])
    on_bound = np.abs(e - zs) <= 1e-10 * (1 + abs(zs))
    return OracleResult(val, val / N, u, e, spin.astype(int), float(np.sum(spin > 0)) / N, on_bound,
                        st.degenerate)


def _tie_tol(v: float) -> float:
    return 1e-12 * (1.0 + abs(v)) if np.isfinite(v) else 0.0


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def solve_spin_subproblem(problem: LatticeProblem, spin, constrain: str = "both") -> OracleResult | None:
    """Minimum over strains compatible with ``spin`` (``None`` if the spin is infeasible)."""
    spin = np.asarray(spin, dtype=float)
    if len(spin) != problem.N:
        raise ValueError("spin length must equal N")
    st = _setup(problem.N, problem.z, problem.kernel, problem.potential, problem.mode,
                problem.layer_width, problem.truncation_tol)
    val, e, S = _unconstrained_batch(st, spin[None, st.free])
    if not _violates(e, S, problem.potential.z_star, constrain)[0]:
        v, x = float(val[0]), e[0]
    else:
        res = _constrained_single(st, S[0], constrain)
        if res is None:
            return None
        v, x = res
    u = np.concatenate([[0.0], np.cumsum(x)])
    zs = problem.potential.z_star
    return OracleResult(v, v / problem.N, u, x, S[0].astype(int), float(np.sum(S[0] > 0)) / problem.N,
                        np.abs(x - zs) <= 1e-10 * (1 + abs(zs)), st.degenerate)


def minimize_finite_lattice(problem: LatticeProblem) -> OracleResult:
    """Global minimum over all spins (or those with ``phase_count`` plus entries)."""
    st = _setup(problem.N, problem.z, problem.kernel, problem.potential, problem.mode,
                problem.layer_width, problem.truncation_tol)
    n_free = len(st.free)
    if n_free > ENUMERATION_BUDGET:
        raise ValueError(f"enumeration budget exceeded ({n_free} > {ENUMERATION_BUDGET} free bonds)")
    if problem.phase_count is None:
        return _enumerate(st, _patterns_all(n_free))
    p_free = problem.phase_count - int(np.sum(st.fixed_spins > 0))
    if not 0 <= p_free <= n_free:
        raise ValueError("phase count incompatible with the frozen boundary layer")
    return _enumerate(st, _patterns_count(n_free, p_free))


def minimize_with_phase_constraint(N: int, z: float, p: int, q: int, kernel: Kernel,
                                   potential: BiconvexPotential, mode: str = "endpoint") -> OracleResult:
    """Minimum over spins with exactly ``theta N`` plus entries, ``theta = p / q``."""
    if N % q:
        raise ValueError("N must be a multiple of q")
    if not 0 <= p <= q:
        raise ValueError("theta must lie in [0, 1]")
    return minimize_finite_lattice(LatticeProblem(N, z, kernel, potential, mode,
                                                  phase_count=N * p // q))


def periodic_cell_result(N: int, z: float, kernel: Kernel, potential: BiconvexPotential, spin,
                         tol: float = 1e-12, constrain: str = "both") -> OracleResult | None:
    return solve_spin_subproblem(LatticeProblem(N, z, kernel, potential, "periodic", truncation_tol=tol),
                                 spin, constrain)


def minimize_periodic_cell(N: int, z: float, kernel: Kernel, potential: BiconvexPotential, spin,
                           tol: float = 1e-12, constrain: str = "both") -> float:
    """Per-site energy of the optimal ``N``-periodic profile with the given spin.

    ``constrain`` selects which spin labels impose their half-line bound
    (``"both"``, ``"plus"``, ``"minus"`` or ``"none"``); unconstrained labels
    use the branch quadratic on the whole line.
    """
    res = periodic_cell_result(N, z, kernel, potential, spin, tol, constrain)
    return math.inf if res is None else res.per_site


def effective_nn_strength(kernel: Kernel, k_max: int = 24) -> float:
    """Partial estimate of the effective nearest-neighbour strength.

    For each period ``k`` the kernel energy of ``k``-periodic strains is a
    circulant quadratic form; its smallest eigenvalue over two is the best
    constant ``c`` with energy ``>= 2 c sum e_i^2``.  The minimum over
    ``k <= k_max`` is returned.
    """
    if k_max > 64:
        raise ValueError("k_max is limited to 64")
    best = math.inf
    n_max = kernel.truncation_range(1e-16)
    for k in range(1, k_max + 1):
        row = np.zeros(k)
        for n in range(1, n_max + 1):
            m = kernel.coefficient(n)
            if m == 0:
                continue
            q, r = divmod(n, k)
            c = np.full(k, float(q))
            c[:r] += 1.0
            row += 2 * m * np.array([np.dot(c, np.roll(c, -d)) for d in range(k)])
        lam = float(np.min(np.real(np.fft.fft(row)))) if n_max else 0.0
        best = min(best, lam / 2)
    return 0.0 if best == math.inf else best
