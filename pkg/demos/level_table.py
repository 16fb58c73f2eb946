"""Empirical level of the test for the six reference models.

Run: python3 demos/level_table.py [--reps 1000]
"""

import argparse

from br_ar import MODELS, Bandwidth, McConfig, NoiseSpec, empirical_level, gaussian_kernel

H0 = {50: 0.10, 100: 0.14, 500: 0.14}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    f0 = NoiseSpec.normal()
    print(f"{'model':<6}" + "".join(f"{'n=' + str(n):>10}" for n in H0))
    for key, model in MODELS.items():
        row = []
        for n, h0 in H0.items():
            cfg = McConfig(model, f0, f0, gaussian_kernel(), Bandwidth(h0), n, args.reps, seed=args.seed)
            row.append(empirical_level(cfg).rejection_rate)
        print(f"{key:<6}" + "".join(f"{r:>10.3f}" for r in row))


if __name__ == "__main__":
    main()
