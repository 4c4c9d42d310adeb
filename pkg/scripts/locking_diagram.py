"""Print the locking plateaus of the exponential chain with local coefficients (a, b).

    python scripts/locking_diagram.py --a 1 --b 1 --eta 1
"""

import argparse
import math

from mtransform.exponential import gn_family, local_parameters, locking_intervals_exponential
from mtransform.potentials import truncated_quadratic


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--b", type=float, default=1.0)
    ap.add_argument("--eta", type=float, default=1.0)
    args = ap.parse_args()
    params = local_parameters(args.a, args.b)
    d = locking_intervals_exponential(gn_family(truncated_quadratic(args.eta), params=params))
    print(f"sigma = {params.sigma:.6f}  rho = {params.rho:.6f}  zeta = {params.zeta:.6f}")
    print(f"accumulation point {d.z_lower:.12f}, full fracture at {d.z_upper:.12f}")
    print(f"{d.N_resolved} plateaus resolved out of {d.N_searched} searched")
    print(f"{'N':>4} {'theta':>8} {'s_minus':>16} {'s_plus':>16}")
    for p in sorted(d.plateaus, key=lambda p: p.n):
        hi = "inf" if math.isinf(p.s_plus) else f"{p.s_plus:.12f}"
        print(f"{p.n:>4} {p.theta:>8.5f} {p.s_minus:>16.12f} {hi:>16}")


if __name__ == "__main__":
    main()
