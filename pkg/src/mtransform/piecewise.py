"""Piecewise-quadratic scalar functions and their convex calculus.

A :class:`PiecewiseQuadratic` is an ordered list of :class:`QuadraticPiece`
objects covering a connected interval; the function is ``+inf`` off that
interval.  Everything downstream (potentials, locking energies, relaxed
energies) is represented this way so that convex envelopes, Legendre
conjugates and two-phase splits can be computed exactly.

The convex envelope is computed through the conjugate: the envelope of a
collection of arcs is the conjugate of the pointwise maximum of the arcs'
conjugates.  Each arc conjugate is itself piecewise quadratic in the slope
variable ``p``, so the maximum is located exactly by solving the pairwise
crossing equations, and the primal envelope is rebuilt from the active arcs
together with the affine bridges at the switching slopes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

INF = math.inf

# relative size below which a piece is considered degenerate and removed
_MIN_WIDTH = 1e-13


@dataclass(frozen=True)
class QuadraticPiece:
    """``A z^2 + B z + C`` on the interval from ``lo`` to ``hi``."""

    lo: float
    hi: float
    A: float
    B: float
    C: float
    lo_closed: bool = True
    hi_closed: bool = True
    tag: Hashable = None

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty piece [{self.lo}, {self.hi}]")
        if self.lo == INF or self.hi == -INF:
            raise ValueError("piece bounds out of order")

    def __call__(self, z):
        return (self.A * z + self.B) * z + self.C

    def slope(self, z):
        return 2.0 * self.A * z + self.B

    @property
    def coeffs(self) -> tuple[float, float, float]:
        return (self.A, self.B, self.C)

    def contains(self, z: float) -> bool:
        return self.lo <= z <= self.hi

    def with_coeffs(self, A: float, B: float, C: float) -> "QuadraticPiece":
        return replace(self, A=A, B=B, C=C)


def _apply(pieces, fn):
    return tuple(fn(p) for p in pieces)


@dataclass(frozen=True)
class PiecewiseQuadratic:
    """Continuous piecewise-quadratic function on a connected domain.

    ``convex_flag`` is ``True`` / ``False`` / ``None`` (unknown).  Values off
    the domain are ``+inf``; this is how constrained branches are encoded.
    """

    pieces: tuple[QuadraticPiece, ...]
    convex_flag: bool | None = None
    _his: np.ndarray = field(init=False, repr=False, compare=False)
    _coef: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise ValueError("a piecewise quadratic needs at least one piece")
        for left, right in zip(pieces[:-1], pieces[1:]):
            gap = right.lo - left.hi
            scale = 1.0 + max(abs(left.hi), abs(right.lo))
            if abs(gap) > 1e-9 * scale:
                raise ValueError(f"pieces are not contiguous at {left.hi} / {right.lo}")
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "_his", np.array([p.hi for p in pieces]))
        object.__setattr__(self, "_coef", np.array([p.coeffs for p in pieces]))

    # -- basic queries -------------------------------------------------
    @property
    def lo(self) -> float:
        return self.pieces[0].lo

    @property
    def hi(self) -> float:
        return self.pieces[-1].hi

    @property
    def domain(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    @property
    def breakpoints(self) -> list[float]:
        return [p.hi for p in self.pieces[:-1]]

    def __len__(self) -> int:
        return len(self.pieces)

    def _index(self, z: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self._his, z, side="left")
        return np.minimum(idx, len(self.pieces) - 1)

    def __call__(self, z):
        zz = np.asarray(z, dtype=float)
        idx = self._index(zz)
        A, B, C = self._coef[idx].T if zz.ndim else self._coef[idx]
        with np.errstate(invalid="ignore", over="ignore"):
            val = (A * zz + B) * zz + C
        # affine pieces evaluated at infinite arguments would produce nan
        val = np.where((zz >= self.lo) & (zz <= self.hi), val, INF)
        if zz.ndim == 0:
            return float(val)
        return val

    def derivative(self, z, side: str = "right"):
        zz = np.asarray(z, dtype=float)
        s = "left" if side == "left" else "right"
        idx = np.searchsorted(self._his, zz, side=s)
        idx = np.minimum(idx, len(self.pieces) - 1)
        A, B, _ = self._coef[idx].T if zz.ndim else self._coef[idx]
        out = 2.0 * A * zz + B
        return float(out) if zz.ndim == 0 else out

    def piece_at(self, z: float) -> QuadraticPiece:
        return self.pieces[int(self._index(np.asarray(z, dtype=float)))]

    def tag_at(self, z: float) -> Hashable:
        return self.piece_at(z).tag

    # -- transformations -----------------------------------------------
    def add_quadratic(self, A: float = 0.0, B: float = 0.0, C: float = 0.0) -> "PiecewiseQuadratic":
        new = _apply(self.pieces, lambda p: p.with_coeffs(p.A + A, p.B + B, p.C + C))
        flag = self.convex_flag if A >= 0 else None
        if A == 0 and self.convex_flag is False:
            flag = False
        return PiecewiseQuadratic(new, flag if A >= 0 else None)

    def shift_quadratic(self, lam: float) -> "PiecewiseQuadratic":
        """Return ``f(z) + lam z^2`` with the same breakpoints."""
        return self.add_quadratic(A=lam)

    def scale(self, r: float) -> "PiecewiseQuadratic":
        if r < 0:
            raise ValueError("negative scaling would flip convexity")
        return PiecewiseQuadratic(_apply(self.pieces, lambda p: p.with_coeffs(r * p.A, r * p.B, r * p.C)),
                                  self.convex_flag)

    def translate(self, t: float) -> "PiecewiseQuadratic":
        """Return ``z -> f(z - t)``."""
        def move(p):
            return QuadraticPiece(p.lo + t, p.hi + t, p.A, p.B - 2 * p.A * t,
                                  p.A * t * t - p.B * t + p.C, p.lo_closed, p.hi_closed, p.tag)
        return PiecewiseQuadratic(_apply(self.pieces, move), self.convex_flag)

    def dilate(self, s: float) -> "PiecewiseQuadratic":
        """Return ``z -> f(z / s)`` for ``s > 0``."""
        if s <= 0:
            raise ValueError("dilation factor must be positive")

        def stretch(p):
            return QuadraticPiece(p.lo * s, p.hi * s, p.A / (s * s), p.B / s, p.C,
                                  p.lo_closed, p.hi_closed, p.tag)
        return PiecewiseQuadratic(_apply(self.pieces, stretch), self.convex_flag)

    def retag(self, tag: Hashable) -> "PiecewiseQuadratic":
        return PiecewiseQuadratic(_apply(self.pieces, lambda p: replace(p, tag=tag)), self.convex_flag)

    def restrict(self, lo: float, hi: float) -> "PiecewiseQuadratic":
        lo = max(lo, self.lo)
        hi = min(hi, self.hi)
        if not lo < hi:
            raise ValueError("restriction is empty")
        out = []
        for p in self.pieces:
            a, b = max(p.lo, lo), min(p.hi, hi)
            if a < b:
                out.append(replace(p, lo=a, hi=b))
        return PiecewiseQuadratic(tuple(out), self.convex_flag)

    def __add__(self, other: "PiecewiseQuadratic") -> "PiecewiseQuadratic":
        """Pointwise sum on the intersection of the two domains."""
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if not lo < hi:
            raise ValueError("domains do not overlap")
        cuts = sorted({lo, hi, *[b for b in self.breakpoints + other.breakpoints if lo < b < hi]})
        out = []
        for a, b in zip(cuts[:-1], cuts[1:]):
            mid = _interior_point(a, b)
            p, q = self.piece_at(mid), other.piece_at(mid)
            out.append(QuadraticPiece(a, b, p.A + q.A, p.B + q.B, p.C + q.C, tag=p.tag))
        flag = True if (self.convex_flag and other.convex_flag) else None
        return PiecewiseQuadratic(tuple(out), flag)

    def simplify(self, tol: float = 1e-12) -> "PiecewiseQuadratic":
        """Merge adjacent pieces with equal coefficients and tags, drop slivers."""
        pieces = list(self.pieces)
        if len(pieces) > 1:
            def sliver(p):
                w = p.hi - p.lo
                return np.isfinite(w) and w <= _MIN_WIDTH * (1.0 + abs(p.lo))
            wide = [p for p in pieces if not sliver(p)]
            if wide:
                fixed = [replace(wide[0], lo=pieces[0].lo)]
                for p in wide[1:]:
                    fixed.append(replace(p, lo=fixed[-1].hi))
                fixed[-1] = replace(fixed[-1], hi=pieces[-1].hi)
                pieces = fixed
        merged = [pieces[0]]
        for p in pieces[1:]:
            q = merged[-1]
            scale = 1.0 + max(abs(q.A), abs(q.B), abs(q.C), abs(p.A), abs(p.B), abs(p.C))
            if (q.tag == p.tag and abs(q.A - p.A) <= tol * scale and abs(q.B - p.B) <= tol * scale
                    and abs(q.C - p.C) <= tol * scale):
                merged[-1] = replace(q, hi=p.hi, hi_closed=p.hi_closed)
            else:
                merged.append(p)
        return PiecewiseQuadratic(tuple(merged), self.convex_flag)

    # -- properties -----------------------------------------------------
    def is_convex(self, tol: float = 1e-10) -> bool:
        for p in self.pieces:
            if p.A < -tol:
                return False
        for left, right in zip(self.pieces[:-1], self.pieces[1:]):
            z = left.hi
            if left.slope(z) > right.slope(z) + tol * (1.0 + abs(left.slope(z))):
                return False
        return True

    def minimum(self) -> tuple[float, float]:
        """Return ``(argmin, min)`` over the domain (the function must be bounded below)."""
        best = (math.nan, INF)
        for p in self.pieces:
            cands = [p.lo, p.hi]
            if p.A > 0:
                cands.append(-p.B / (2 * p.A))
            for z in cands:
                if np.isfinite(z) and p.lo <= z <= p.hi:
                    v = p(z)
                    if v < best[1]:
                        best = (z, v)
            if not np.isfinite(p.lo) or not np.isfinite(p.hi):
                if p.A < 0 or (p.A == 0 and ((p.B > 0 and p.lo == -INF) or (p.B < 0 and p.hi == INF))):
                    return (-INF if p.lo == -INF else INF, -INF)
        return best

    def max_abs_diff(self, other: Callable, grid: np.ndarray) -> float:
        return float(np.max(np.abs(self(grid) - other(grid))))

    # -- serialisation --------------------------------------------------
    def to_json(self) -> list[dict]:
        return [{"lo": _jnum(p.lo), "hi": _jnum(p.hi), "A": p.A, "B": p.B, "C": p.C,
                 "tag": None if p.tag is None else str(p.tag)} for p in self.pieces]

    @classmethod
    def from_json(cls, data: Sequence[dict]) -> "PiecewiseQuadratic":
        return cls(tuple(QuadraticPiece(_unjnum(d["lo"]), _unjnum(d["hi"]), d["A"], d["B"], d["C"],
                                        tag=d.get("tag")) for d in data))


def _jnum(x: float):
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    return x


def _unjnum(x) -> float:
    return float(x)


def _interior_point(a: float, b: float) -> float:
    if np.isfinite(a) and np.isfinite(b):
        return 0.5 * (a + b)
    if np.isfinite(a):
        return a + max(1.0, abs(a))
    if np.isfinite(b):
        return b - max(1.0, abs(b))
    return 0.0


def quadratic(A: float, B: float = 0.0, C: float = 0.0, lo: float = -INF, hi: float = INF,
              tag: Hashable = None) -> PiecewiseQuadratic:
    """A single quadratic ``A z^2 + B z + C`` restricted to ``[lo, hi]``."""
    return PiecewiseQuadratic((QuadraticPiece(lo, hi, A, B, C, tag=tag),), True if A >= 0 else None)


def from_pieces(spec: Iterable[tuple]) -> PiecewiseQuadratic:
    """Build from tuples ``(lo, hi, A, B, C)`` or ``(lo, hi, A, B, C, tag)``."""
    return PiecewiseQuadratic(tuple(QuadraticPiece(*s[:5], tag=(s[5] if len(s) > 5 else None)) for s in spec))


# ---------------------------------------------------------------------------
# Conjugate sweep
# ---------------------------------------------------------------------------

@dataclass
class _Arcs:
    """Convex arcs (or isolated points) feeding the conjugate sweep."""

    lo: np.ndarray
    hi: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    tags: list


_TINY_CURVATURE = 1e-14


def _arcs_from(pieces: Iterable[QuadraticPiece]) -> _Arcs:
    lo, hi, A, B, C, tags = [], [], [], [], [], []

    def point(x, tag, p):
        lo.append(x); hi.append(x); A.append(0.0); B.append(0.0); C.append(p(x)); tags.append(tag)

    for p in pieces:
        if p.A >= -_TINY_CURVATURE:
            # curvatures of size ~1e-14 would only overflow the conjugate slopes; treat them as affine
            curv = p.A if p.A > _TINY_CURVATURE else 0.0
            lo.append(p.lo); hi.append(p.hi); A.append(curv); B.append(p.B); C.append(p.C)
            tags.append(p.tag)
        else:
            if not (np.isfinite(p.lo) and np.isfinite(p.hi)):
                raise ValueError("concave piece on an unbounded interval: function is unbounded below")
            point(p.lo, p.tag, p)
            point(p.hi, p.tag, p)
    return _Arcs(*(np.array(v, dtype=float) for v in (lo, hi, A, B, C)), tags)


def _segments(arcs: _Arcs):
    """Conjugate segments ``c2 p^2 + c1 p + c0`` on ``[pa, pb]`` for every arc."""
    owner, pa, pb, c2, c1, c0 = [], [], [], [], [], []

    def add(k, a, b, q2, q1, q0):
        owner.append(k); pa.append(a); pb.append(b); c2.append(q2); c1.append(q1); c0.append(q0)

    for k in range(len(arcs.A)):
        lo, hi, A, B, C = arcs.lo[k], arcs.hi[k], arcs.A[k], arcs.B[k], arcs.C[k]
        if lo == hi:
            add(k, -INF, INF, 0.0, lo, -C)
            continue
        q = lambda z: (A * z + B) * z + C
        plo = 2 * A * lo + B if np.isfinite(lo) else (-INF if A > 0 else B)
        phi = 2 * A * hi + B if np.isfinite(hi) else (INF if A > 0 else B)
        if np.isfinite(lo):
            add(k, -INF, plo, 0.0, lo, -q(lo))
        if A > 0 and plo < phi:
            add(k, plo, phi, 1.0 / (4 * A), -B / (2 * A), B * B / (4 * A) - C)
        if np.isfinite(hi):
            add(k, phi, INF, 0.0, hi, -q(hi))
        if not np.isfinite(lo) and not np.isfinite(hi) and A == 0:
            raise ValueError("affine function on the whole line mixed with other arcs")
    return (np.array(owner, dtype=int), np.array(pa), np.array(pb), np.array(c2), np.array(c1),
            np.array(c0))


def _eval_conjugates(arcs: _Arcs, p: np.ndarray) -> np.ndarray:
    """Matrix of arc conjugates, shape ``(len(p), n_arcs)``; ``+inf`` off-domain."""
    P = p[:, None]
    lo, hi, A, B, C = arcs.lo[None], arcs.hi[None], arcs.A[None], arcs.B[None], arcs.C[None]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        at_b = np.where(np.isfinite(lo), lo, hi)
        flat = np.where(P < B, lo, np.where(P > B, hi, at_b))
        zq = np.where(A > 0, (P - B) / (2 * np.where(A > 0, A, 1.0)), flat)
        z = np.clip(zq, lo, hi)
        val = P * z - ((A * z + B) * z + C)
        # affine arcs with an infinite end are +inf beyond their slope
        bad = ((A == 0) & (lo != hi) & (((lo == -INF) & (P < B)) | ((hi == INF) & (P > B))))
        val = np.where(bad, INF, val)
        # infinite touch points give nan for A>0 only if p is infinite; ignore
        val = np.where(np.isnan(val), INF, val)
    return val


def _touch(arcs: _Arcs, k: int, p: float, side: str) -> float:
    lo, hi, A, B = arcs.lo[k], arcs.hi[k], arcs.A[k], arcs.B[k]
    if lo == hi:
        return lo
    if A > 0:
        if p == -INF:
            return lo
        if p == INF:
            return hi
        return float(min(max((p - B) / (2 * A), lo), hi))
    if p < B:
        return lo
    if p > B:
        return hi
    return lo if side == "left" else hi


def _crossings(owner, pa, pb, c2, c1, c0, chunk: int = 512) -> np.ndarray:
    """All slopes where two segments of different arcs take equal values."""
    n = len(owner)
    roots = [pa[np.isfinite(pa)], pb[np.isfinite(pb)]]
    for s in range(0, n, chunk):
        sl = slice(s, min(n, s + chunk))
        lo = np.maximum(pa[sl, None], pa[None, :])
        hi = np.minimum(pb[sl, None], pb[None, :])
        mask = (owner[sl, None] < owner[None, :]) & (lo <= hi)
        if not mask.any():
            continue
        i, j = np.nonzero(mask)
        i = i + s
        qa = c2[i] - c2[j]
        qb = c1[i] - c1[j]
        qc = c0[i] - c0[j]
        lo_, hi_ = lo[i - s, j], hi[i - s, j]
        scale = np.abs(qa) + np.abs(qb) + np.abs(qc) + 1e-300
        lin = np.abs(qa) <= 1e-14 * scale
        out = []
        with np.errstate(divide="ignore", invalid="ignore"):
            # linear case
            r = np.where(lin & (qb != 0), -qc / np.where(qb != 0, qb, 1.0), np.nan)
            out.append(np.where(lin, r, np.nan))
            disc = qb * qb - 4 * qa * qc
            ok = (~lin) & (disc >= -1e-14 * (qb * qb + np.abs(4 * qa * qc)))
            sq = np.sqrt(np.maximum(disc, 0.0))
            q = -0.5 * (qb + np.copysign(sq, qb))
            r1 = np.where(ok, q / np.where(qa != 0, qa, 1.0), np.nan)
            r2 = np.where(ok & (q != 0), qc / np.where(q != 0, q, 1.0), np.nan)
            out.extend([r1, r2])
        for r in out:
            tol = 1e-12 * (1.0 + np.abs(r))
            keep = np.isfinite(r) & (r >= lo_ - tol) & (r <= hi_ + tol)
            roots.append(r[keep])
    cand = np.unique(np.concatenate(roots)) if roots else np.array([])
    return cand[np.isfinite(cand)]


def _merge_close(c: np.ndarray) -> np.ndarray:
    if len(c) == 0:
        return c
    out = [c[0]]
    for x in c[1:]:
        if x - out[-1] > 1e-13 * (1.0 + abs(x)):
            out.append(x)
    return np.array(out)


@dataclass
class _Sweep:
    bounds: list          # interval boundaries in p
    active: list          # active arc index per interval (None if +inf)


def _sweep(arcs: _Arcs) -> _Sweep:
    owner, pa, pb, c2, c1, c0 = _segments(arcs)
    cand = _merge_close(_crossings(owner, pa, pb, c2, c1, c0))
    edges = [-INF, *cand.tolist(), INF]
    samples = np.array([_interior_point(a, b) for a, b in zip(edges[:-1], edges[1:])])
    active: list = []
    for s in range(0, len(samples), 2048):
        vals = _eval_conjugates(arcs, samples[s:s + 2048])
        best = np.argmax(vals, axis=1)
        top = vals[np.arange(len(best)), best]
        active.extend([None if not np.isfinite(t) else int(b) for b, t in zip(best, top)])
    return _Sweep(edges, active)


def _conj_value(arcs: _Arcs, k: int, p: float) -> float:
    return float(_eval_conjugates(_Arcs(arcs.lo[k:k + 1], arcs.hi[k:k + 1], arcs.A[k:k + 1],
                                        arcs.B[k:k + 1], arcs.C[k:k + 1], [None]),
                                  np.array([p]))[0, 0])


def _bridge_tag(t1, t2):
    return ("bridge", t1, t2)


def _envelope_from_arcs(arcs: _Arcs, bridge_tag=_bridge_tag) -> PiecewiseQuadratic:
    if len(arcs.A) == 1 and arcs.lo[0] < arcs.hi[0]:
        return PiecewiseQuadratic((QuadraticPiece(arcs.lo[0], arcs.hi[0], arcs.A[0], arcs.B[0],
                                                  arcs.C[0], tag=arcs.tags[0]),), True)
    sw = _sweep(arcs)
    finite = [j for j, a in enumerate(sw.active) if a is not None]
    if not finite:
        raise ValueError("function is unbounded below (no affine minorant)")
    j0, j1 = finite[0], finite[-1]
    if any(sw.active[j] is None for j in range(j0, j1 + 1)):
        raise ValueError("conjugate domain is not an interval; input is inconsistent")
    pieces: list[QuadraticPiece] = []

    def emit(lo, hi, A, B, C, tag):
        if hi > lo and (not np.isfinite(hi - lo) or hi - lo > _MIN_WIDTH * (1.0 + abs(lo))):
            if pieces and pieces[-1].hi != lo:
                lo = pieces[-1].hi
                if not lo < hi:
                    return
            pieces.append(QuadraticPiece(lo, hi, A, B, C, tag=tag))

    # left tail with finite asymptotic slope
    p_left = sw.bounds[j0]
    k0 = sw.active[j0]
    if np.isfinite(p_left):
        z_start = _touch(arcs, k0, p_left, "right")
        if z_start > -INF:
            H = _conj_value(arcs, k0, p_left)
            tail = [k for k in range(len(arcs.A)) if arcs.A[k] == 0 and arcs.lo[k] == -INF
                    and abs(arcs.B[k] - p_left) <= 1e-12 * (1 + abs(p_left))]
            emit(-INF, z_start, 0.0, p_left, -H, arcs.tags[tail[0]] if tail else arcs.tags[k0])
    for j in range(j0, j1 + 1):
        k = sw.active[j]
        a, b = sw.bounds[j], sw.bounds[j + 1]
        za = _touch(arcs, k, a, "right")
        zb = _touch(arcs, k, b, "left")
        if zb > za:
            emit(za, zb, arcs.A[k], arcs.B[k], arcs.C[k], arcs.tags[k])
        if j < j1:
            k2 = sw.active[j + 1]
            zL = _touch(arcs, k, b, "left")
            zR = _touch(arcs, k2, b, "right")
            if zR > zL:
                H = _conj_value(arcs, k, b)
                tag = arcs.tags[k] if k == k2 else bridge_tag(arcs.tags[k], arcs.tags[k2])
                emit(zL, zR, 0.0, b, -H, tag)
    p_right = sw.bounds[j1 + 1]
    k1 = sw.active[j1]
    if np.isfinite(p_right):
        z_end = _touch(arcs, k1, p_right, "left")
        if z_end < INF:
            H = _conj_value(arcs, k1, p_right)
            tail = [k for k in range(len(arcs.A)) if arcs.A[k] == 0 and arcs.hi[k] == INF
                    and abs(arcs.B[k] - p_right) <= 1e-12 * (1 + abs(p_right))]
            emit(z_end, INF, 0.0, p_right, -H, arcs.tags[tail[0]] if tail else arcs.tags[k1])
    if not pieces:
        # the envelope is supported on a single point
        k = sw.active[j0]
        x = _touch(arcs, k, sw.bounds[j0 + 1], "left")
        raise ValueError(f"envelope domain degenerates to the point {x}")
    return PiecewiseQuadratic(tuple(pieces), True).simplify()


def convex_envelope(f: PiecewiseQuadratic | Sequence[PiecewiseQuadratic], bridge_tag=_bridge_tag
                    ) -> PiecewiseQuadratic:
    """Largest convex minorant of ``f`` (or of the pointwise minimum of several functions).

    Concave pieces enter only through their endpoints.  Bridges (affine pieces
    created by the envelope) are tagged ``("bridge", left_tag, right_tag)``.
    Curvatures below ``1e-14`` are treated as zero; small but larger
    curvatures on unbounded pieces put tangent points far away and lose
    accuracy in the bridge slopes.
    """
    funcs = [f] if isinstance(f, PiecewiseQuadratic) else list(f)
    pieces = [p for g in funcs for p in g.pieces]
    return _envelope_from_arcs(_arcs_from(pieces), bridge_tag)


def conjugate(f: PiecewiseQuadratic) -> PiecewiseQuadratic:
    """Legendre-Fenchel conjugate ``p -> sup_z (p z - f(z))`` as a piecewise quadratic in ``p``.

    The conjugate of any function equals the maximum of its arc conjugates, so
    ``f`` need not be convex; the result is always convex.
    """
    arcs = _arcs_from(f.pieces)
    sw = _sweep(arcs)
    finite = [j for j, a in enumerate(sw.active) if a is not None]
    if not finite:
        raise ValueError("conjugate is identically +inf")
    owner, pa, pb, c2, c1, c0 = _segments(arcs)
    out = []
    for j in range(finite[0], finite[-1] + 1):
        k = sw.active[j]
        a, b = sw.bounds[j], sw.bounds[j + 1]
        mid = _interior_point(a, b)
        seg = [i for i in np.nonzero(owner == k)[0] if pa[i] <= mid <= pb[i]][0]
        out.append(QuadraticPiece(a, b, c2[seg], c1[seg], c0[seg], tag=arcs.tags[k]))
    return PiecewiseQuadratic(tuple(out), True).simplify()


def infimal_split(f1: PiecewiseQuadratic, w1: float, f2: PiecewiseQuadratic, w2: float,
                  tag: Hashable = None) -> PiecewiseQuadratic:
    """``z -> min{w1 f1(x) + w2 f2(y) : w1 x + w2 y = z}`` for convex ``f1``, ``f2``.

    Computed as the conjugate of ``w1 f1* + w2 f2*``.  Weights must be positive;
    a zero weight degenerates to the other function.
    """
    if w1 < 0 or w2 < 0:
        raise ValueError("weights must be non-negative")
    if w1 == 0:
        return f2.dilate(w2).scale(w2)
    if w2 == 0:
        return f1.dilate(w1).scale(w1)
    h = conjugate(f1).scale(w1) + conjugate(f2).scale(w2)
    out = conjugate(h)
    if tag is not None:
        out = out.retag(tag)
    return out


def split_argmin(f1: PiecewiseQuadratic, w1: float, f2: PiecewiseQuadratic, w2: float,
                 z: float) -> tuple[float, float]:
    """Minimisers ``(x, y)`` of the two-phase split at ``z`` (equal-slope condition)."""
    h = conjugate(f1).scale(w1) + conjugate(f2).scale(w2)
    # the optimal slope p maximises p z - h(p); x = (f1*)'(p), y = (f2*)'(p)
    hc = conjugate(h)
    p = hc.derivative(z)
    c1, c2 = conjugate(f1), conjugate(f2)
    x, y = c1.derivative(p), c2.derivative(p)
    return float(x), float(y)


def common_tangent(q1: tuple[float, float, float], q2: tuple[float, float, float]
                   ) -> tuple[float, float, float] | None:
    """Common tangent of two convex parabolas on the whole line, ``q1`` touched to the left.

    Returns ``(slope, x1, x2)`` with ``x1 < x2``, or ``None`` if no such tangent
    exists.  Equal curvatures are handled as the degenerate linear case.
    """
    A1, B1, C1 = q1
    A2, B2, C2 = q2
    if A1 <= 0 or A2 <= 0:
        raise ValueError("common_tangent needs strictly convex parabolas")
    a = 1.0 / (4 * A1) - 1.0 / (4 * A2)
    b = -B1 / (2 * A1) + B2 / (2 * A2)
    c = B1 * B1 / (4 * A1) - C1 - B2 * B2 / (4 * A2) + C2
    roots = []
    if abs(A1 - A2) < 1e-14:
        if b != 0:
            roots = [-c / b]
    else:
        disc = b * b - 4 * a * c
        if disc >= 0:
            sq = math.sqrt(disc)
            q = -0.5 * (b + math.copysign(sq, b))
            roots = [q / a] + ([c / q] if q != 0 else [])
    for p in sorted(roots):
        x1 = (p - B1) / (2 * A1)
        x2 = (p - B2) / (2 * A2)
        if x2 > x1:
            return (p, x1, x2)
    return None


# ---------------------------------------------------------------------------
# Sampled fallback
# ---------------------------------------------------------------------------

def lower_hull(x: np.ndarray, y: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Indices of the lower convex hull vertices of points sorted by ``x``."""
    hull: list[int] = []
    for i in range(len(x)):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            cross = (x[i1] - x[i0]) * (y[i] - y[i0]) - (y[i1] - y[i0]) * (x[i] - x[i0])
            if cross <= tol * (1.0 + abs(x[i] - x[i0]) * (abs(y[i]) + abs(y[i0]) + 1.0)):
                hull.pop()
            else:
                break
        hull.append(i)
    return np.array(hull, dtype=int)


def sampled_convex_envelope(func: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                            samples: int = 4001, tol: float = 1e-12) -> PiecewiseQuadratic:
    """Approximate convex envelope on ``[lo, hi]``: lower hull of a dense sample.

    The result is piecewise affine between hull vertices and is exact only at
    those vertices; use the analytic :func:`convex_envelope` when possible.
    """
    x = np.linspace(lo, hi, samples)
    y = np.asarray(func(x), dtype=float)
    keep = np.isfinite(y)
    x, y = x[keep], y[keep]
    idx = lower_hull(x, y, tol)
    pieces = []
    for i0, i1 in zip(idx[:-1], idx[1:]):
        s = (y[i1] - y[i0]) / (x[i1] - x[i0])
        pieces.append(QuadraticPiece(x[i0], x[i1], 0.0, s, y[i0] - s * x[i0], tag="sampled"))
    return PiecewiseQuadratic(tuple(pieces), True)
