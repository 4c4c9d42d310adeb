"""Command line front end: ``sweep``, ``diagram`` and ``verify``.

Exit codes: 0 on success, 1 when verification fails, 2 on usage errors.
Rows are computed in index order, so identical arguments give identical
output files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import acceptance
from .concentrated import m_transform_concentrated
from .exponential import m_transform_exponential
from .kernels import ConcentratedKernel, ExplicitKernel, ExponentialKernel, Kernel, NearestKernel
from .potentials import (BiconvexPotential, convex_affine, double_well, double_well_biquadratic,
                         truncated_quadratic)

SUPPORTED_PAIRS = (
    "concentrated x {truncq, dwell, convaffine, biqdw}",
    "nn x {truncq, dwell, convaffine, biqdw}",
    "explicit with at most one coefficient beyond m_1 x {truncq, dwell, convaffine, biqdw}",
    "exp x {truncq, convaffine}",
)
ORACLE_HINT = ("other pairings have no closed form; use mtransform.oracle.minimize_finite_lattice "
               "for finite-lattice minima or mtransform.concentrated.lower_bound_general_kernel for a bound")


class UsageError(Exception):
    """Bad arguments; reported on stderr with exit status 2."""


def fmt(x: float) -> str:
    """Round-trip float formatting with 17 significant digits."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


# ---------------------------------------------------------------------------
# specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    kernel: str
    potential: BiconvexPotential
    zmin: float
    zmax: float
    samples: int
    out: str | None
    format: str = "csv"
    M: int = 2
    m1: float = 0.5
    mM: float = 0.25
    sigma: float = 1.0
    rho: float = 1.0
    coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.samples < 2:
            raise UsageError("--samples must be at least 2")
        if not self.zmin < self.zmax:
            raise UsageError("--zmin must be smaller than --zmax")
        try:
            self.kernel_object()
        except ValueError as exc:
            raise UsageError(f"invalid kernel parameters: {exc}") from exc
        if self.kernel == "concentrated" and self.M < 2:
            raise UsageError("--M must be at least 2 for the concentrated kernel (use --kernel nn for M = 1)")

    def grid(self) -> np.ndarray:
        return np.linspace(self.zmin, self.zmax, self.samples)

    def kernel_object(self) -> Kernel:
        if self.kernel == "concentrated":
            return ConcentratedKernel(self.m1, self.M, self.mM)
        if self.kernel == "nn":
            return NearestKernel(self.m1)
        if self.kernel == "exp":
            return ExponentialKernel(self.sigma, self.rho)
        return ExplicitKernel(self.coeffs)

    def describe(self) -> dict:
        k = {"concentrated": {"M": self.M, "m1": self.m1, "mM": self.mM}, "nn": {"m1": self.m1},
             "exp": {"sigma": self.sigma, "rho": self.rho}, "explicit": {"coeffs": list(self.coeffs)}}
        return {"kernel": self.kernel, "kernel_params": k[self.kernel], "potential": self.potential.family,
                "potential_params": list(self.potential.params), "zmin": self.zmin, "zmax": self.zmax,
                "samples": self.samples}


def build_potential(args) -> BiconvexPotential:
    name = args.potential
    if name == "truncq":
        if args.zstar is not None:
            if args.eta is not None and abs(args.eta - args.zstar ** 2) > 1e-15:
                raise UsageError("for truncq give either --eta or --zstar (zstar = sqrt(eta))")
            if args.zstar <= 0:
                raise UsageError("--zstar must be positive for truncq")
            return truncated_quadratic(args.zstar ** 2)
        return truncated_quadratic(1.0 if args.eta is None else args.eta)
    if name == "dwell":
        f = double_well()
    elif name == "convaffine":
        f = convex_affine(0.5 if args.tau is None else args.tau)
    else:
        f = double_well_biquadratic(2.0 if args.t is None else args.t)
    if args.zstar is not None and args.zstar != f.z_star:
        raise UsageError(f"the {name} threshold is fixed at {f.z_star}; --zstar applies to truncq only")
    return f


def spec_from_args(args) -> SweepSpec:
    try:
        f = build_potential(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    coeffs = ()
    if args.kernel == "explicit":
        if not args.coeffs:
            raise UsageError("--kernel explicit needs --coeffs m1,m2,...")
        try:
            coeffs = tuple(float(c) for c in args.coeffs.split(","))
        except ValueError as exc:
            raise UsageError(f"cannot parse --coeffs: {exc}") from exc
    return SweepSpec(args.kernel, f, args.zmin, args.zmax, args.samples, args.out, args.format,
                     args.M, args.m1, args.mM, args.sigma, args.rho, coeffs)


# ---------------------------------------------------------------------------
# transforms for a spec
# ---------------------------------------------------------------------------

def _unsupported(spec: SweepSpec, why: str) -> UsageError:
    pairs = "\n  ".join(SUPPORTED_PAIRS)
    return UsageError(f"unsupported pairing kernel={spec.kernel}, potential={spec.potential.family}: {why}\n"
                      f"supported closed-form pairs:\n  {pairs}\n{ORACLE_HINT}")


def _concentrated_equivalent(spec: SweepSpec, scale: float = 1.0) -> ConcentratedKernel | None:
    if spec.kernel == "concentrated":
        return ConcentratedKernel(spec.m1 / scale, spec.M, spec.mM / scale)
    if spec.kernel == "nn":
        return ConcentratedKernel(spec.m1 / scale, 1, 0.0)
    if spec.kernel == "explicit":
        c = spec.coeffs
        far = [n for n in range(2, len(c) + 1) if c[n - 1] != 0]
        if len(far) > 1:
            return None
        m1 = c[0] if c else 0.0
        if not far:
            return ConcentratedKernel(m1 / scale, 1, 0.0)
        return ConcentratedKernel(m1 / scale, far[0], c[far[0] - 1] / scale)
    return None


def transform_for(spec: SweepSpec, sigma: float | None = None):
    """The transform of the spec; ``sigma`` rescales concentrated kernels or sets the exponential decay."""
    f = spec.potential
    if spec.kernel == "exp":
        if f.family not in ("truncq", "convaffine"):
            raise _unsupported(spec, "the exponential kernel has a closed form for truncated convex potentials")
        return m_transform_exponential(f, spec.sigma if sigma is None else sigma, spec.rho)
    m = _concentrated_equivalent(spec, 1.0 if sigma is None else sigma)
    if m is None:
        raise _unsupported(spec, "explicit kernels need at most one coefficient beyond m_1")
    return m_transform_concentrated(f, m)


def _plateau_theta(T, branch: str) -> Fraction | None:
    """Exact phase fraction of a plateau branch label."""
    if branch == "convex":
        return Fraction(0)
    if branch == "broken":
        return Fraction(1)
    if branch.startswith("lock:"):
        n = int(branch.split(":")[1])
        if hasattr(T.diagram, "M"):
            return Fraction(n, T.diagram.M)
        return Fraction(1, n)
    return None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_sweep(spec: SweepSpec) -> str:
    T = transform_for(spec)
    z = spec.grid()
    qhat, q, theta = T.Qhat(z), T.Q(z), np.atleast_1d(T.theta(z))
    exp = spec.kernel == "exp"
    rows = []
    for i, zi in enumerate(z):
        row = {"z": fmt(zi), "Qhat": fmt(qhat[i]), "Q": fmt(q[i]), "theta": fmt(theta[i]),
               "branch": T.branch(float(zi))}
        if exp:
            row["N_star"] = fmt(T.active_cell(float(zi)))
        rows.append(row)
    header = ["z", "Qhat", "Q", "theta", "branch"] + (["N_star"] if exp else [])
    if spec.format == "json":
        return json.dumps({"spec": spec.describe(), "a_m": T.a_m, "diagram": T.diagram.to_json(),
                           "Qhat": T.Qhat.to_json(), "rows": rows}, indent=1) + "\n"
    return _csv(header, rows)


def _sigma_grid(args) -> list[float]:
    if args.inv_sigma is not None:
        try:
            inv = [float(s) for s in args.inv_sigma.split(",") if s.strip()]
        except ValueError as exc:
            raise UsageError(f"cannot parse --inv-sigma: {exc}") from exc
    else:
        if args.inv_sigma_samples < 1:
            raise UsageError("empty 1/sigma grid")
        inv = list(np.linspace(args.inv_sigma_min, args.inv_sigma_max, args.inv_sigma_samples))
    if not inv:
        raise UsageError("empty 1/sigma grid")
    if any(not (x > 0 and math.isfinite(x)) for x in inv):
        raise UsageError("1/sigma values must be positive")
    return inv


def cmd_diagram(spec: SweepSpec, inv_sigmas: list[float]) -> str:
    z = spec.grid()
    rows = []
    for inv in inv_sigmas:
        T = transform_for(spec, 1.0 / inv)
        theta = np.atleast_1d(T.theta(z))
        for i, zi in enumerate(z):
            th = _plateau_theta(T, T.branch(float(zi)))
            region = "bridge" if th is None else f"plateau:{th}"
            rows.append({"inv_sigma": fmt(inv), "z": fmt(zi), "theta": fmt(theta[i]), "region": region})
    if spec.format == "json":
        return json.dumps({"spec": spec.describe(), "rows": rows}, indent=1) + "\n"
    return _csv(["inv_sigma", "z", "theta", "region"], rows)


def cmd_verify(suite: str, cN_perturbation: float = 0.0, quiet: bool = False) -> tuple[int, dict]:
    ctx = acceptance.VerifyContext(cN_perturbation=cN_perturbation)

    def progress(res):
        if not quiet:
            print(res.line(), file=sys.stderr, flush=True)
    report = acceptance.run_suite(suite, ctx, progress)
    data = report.to_json()
    data["cN_perturbation"] = cN_perturbation
    return (0 if report.ok else 1), data


def _csv(header: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_model_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("kernel")
    g.add_argument("--kernel", choices=["concentrated", "exp", "nn", "explicit"], default="concentrated")
    g.add_argument("--M", type=int, default=2, help="far distance of the concentrated kernel")
    g.add_argument("--m1", type=float, default=0.5, help="nearest-neighbour coefficient")
    g.add_argument("--mM", type=float, default=0.25, help="far coefficient of the concentrated kernel")
    g.add_argument("--sigma", type=float, default=1.0, help="decay rate of the exponential kernel")
    g.add_argument("--rho", type=float, default=1.0, help="amplitude of the exponential kernel")
    g.add_argument("--coeffs", help="comma separated m1,m2,... for the explicit kernel")
    g = p.add_argument_group("potential")
    g.add_argument("--potential", choices=["truncq", "dwell", "convaffine", "biqdw"], default="truncq")
    g.add_argument("--eta", type=float, help="toughness of the truncated quadratic (default 1)")
    g.add_argument("--tau", type=float, help="slope parameter of the convex-affine potential (default 0.5)")
    g.add_argument("--t", type=float, help="second well of the bi-quadratic double well (default 2)")
    g.add_argument("--zstar", type=float, help="threshold (sets eta = zstar^2 for truncq)")
    g = p.add_argument_group("output")
    g.add_argument("--zmin", type=float, default=-1.0)
    g.add_argument("--zmax", type=float, default=3.0)
    g.add_argument("--samples", type=int, default=401)
    g.add_argument("--out", help="output file (default stdout)")
    g.add_argument("--format", choices=["csv", "json"], default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mtransform",
                                     description="Relaxed energies of non-convex lattice potentials "
                                                 "with long-range quadratic kernels.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("sweep", help="tabulate Qhat, Q, theta and the branch along a strain grid")
    _add_model_args(p)
    p = sub.add_parser("diagram", help="phase regions in the (1/sigma, z) plane")
    _add_model_args(p)
    g = p.add_argument_group("1/sigma grid")
    g.add_argument("--inv-sigma", help="comma separated 1/sigma values (overrides the range)")
    g.add_argument("--inv-sigma-min", type=float, default=0.25)
    g.add_argument("--inv-sigma-max", type=float, default=4.0)
    g.add_argument("--inv-sigma-samples", type=int, default=16)
    p = sub.add_parser("verify", help="run invariant checks and acceptance criteria")
    p.add_argument("--suite", choices=list(acceptance.SUITES), default="all")
    p.add_argument("--out", help="JSON report file (default stdout)")
    p.add_argument("--quiet", action="store_true", help="no per-criterion lines on stderr")
    p.add_argument("--inject-cn-perturbation", type=float, default=0.0, metavar="EPS",
                   help="multiply the closed-form c_N by 1 + EPS (harness self-test)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "verify":
            code, report = cmd_verify(args.suite, args.inject_cn_perturbation, args.quiet)
            _emit(json.dumps(report, indent=1) + "\n", args.out)
            return code
        spec = spec_from_args(args)
        if args.command == "sweep":
            text = cmd_sweep(spec)
        else:
            text = cmd_diagram(spec, _sigma_grid(args))
        _emit(text, spec.out)
        return 0
    except UsageError as exc:
        print(f"mtransform: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
