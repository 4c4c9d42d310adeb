"""Finite-lattice gaps to the concentrated closed form, by oracle mode and lattice size.

Every finite-lattice mode loses a boundary or bridge energy of order 1/N, so
the gap ratio between sizes N and N' is at best N/N': 2/3 from 8 to 12 and
3/4 from 12 to 16.

    python scripts/oracle_gaps.py --sizes 8 12 16
"""

import argparse

from mtransform.concentrated import m_transform_concentrated
from mtransform.kernels import ConcentratedKernel
from mtransform.oracle import LatticeProblem, minimize_finite_lattice
from mtransform.potentials import truncated_quadratic


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 12, 16])
    ap.add_argument("--layer-width", type=int, default=1)
    args = ap.parse_args()
    f, m = truncated_quadratic(1.0), ConcentratedKernel(0.5, 2, 0.25)
    T = m_transform_concentrated(f, m)
    plateau = next(p for p in T.diagram.plateaus if p.n == 1)
    bridge = next(b for b in T.diagram.bridges if b.right == 1)
    points = {"plateau": 0.5 * (plateau.s_minus + plateau.s_plus),
              "bridge": 0.5 * (bridge.z_left + bridge.z_right)}
    for name, z in points.items():
        print(f"{name} point z = {z:.6f}, Qhat = {float(T.Qhat(z)):.12f}")
        for mode in ("endpoint", "boundary_layer", "periodic"):
            gaps = []
            for N in args.sizes:
                width = args.layer_width if mode == "boundary_layer" else 0
                res = minimize_finite_lattice(LatticeProblem(N, z, m, f, mode=mode, layer_width=width))
                gaps.append(abs(res.per_site - float(T.Qhat(z))))
            ratios = " ".join(f"{b / a:.3f}" if a > 1e-14 else "-" for a, b in zip(gaps, gaps[1:]))
            scaled = " ".join(f"{N * g:.4f}" for N, g in zip(args.sizes, gaps))
            print(f"  {mode:>15}: N*gap = {scaled}   ratios = {ratios}")
    print("pure 1/N decay ratios:", " ".join(f"{a / b:.3f}" for a, b in zip(args.sizes, args.sizes[1:])))


if __name__ == "__main__":
    main()
