"""Distance of the plateau ends s_N^- to their accumulation point, scaled by N.

The scaled distance settles near a constant, so s_N^- approaches the
accumulation point like C/N and no N of practical size brings it within 1e-6.

    python scripts/threshold_decay.py --a 1 --b 1
"""

import argparse

from mtransform.exponential import local_parameters, nt_accumulation, nt_thresholds


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--b", type=float, default=1.0)
    ap.add_argument("--eta", type=float, default=1.0)
    args = ap.parse_args()
    params = local_parameters(args.a, args.b)
    lo, _ = nt_accumulation(params, args.eta)
    print(f"accumulation point {lo:.15f}")
    print(f"{'N':>6} {'s_minus - z':>14} {'s_plus - z':>14} {'N (s_minus - z)':>16}")
    for N in (10, 20, 50, 100, 200, 500, 1000):
        sm, sp = nt_thresholds(params, args.eta, N)
        print(f"{N:>6} {sm - lo:>14.6e} {sp - lo:>14.6e} {N * (sm - lo):>16.6f}")


if __name__ == "__main__":
    main()
