"""Random walk residuals: gaussian versus one-sided exponential kernel.

Medians of |T_hat - mu| under sqrt(h) and h scalings as n doubles, and the
0.95 quantile of h (T_hat - mu) next to the Wiener-functional prediction.

Run: python3 demos/unit_root_kernels.py [--reps 200]
"""

import argparse

from br_ar import asym_kernel_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--wiener-reps", type=int, default=100_000)
    args = ap.parse_args()
    r = asym_kernel_experiment(reps=args.reps, wiener_reps=args.wiener_reps)
    print(f"{'n':>6} {'gauss/sqrt(h)':>14} {'exp*h':>10} {'exp/sqrt(h)':>12} {'exp q95':>10}")
    for row in zip(r.n_grid, r.gaussian_sqrt, r.exponential_h, r.exponential_sqrt, r.exponential_q95):
        print(f"{row[0]:>6} {row[1]:>14.4f} {row[2]:>10.4f} {row[3]:>12.4f} {row[4]:>10.4f}")
    print(f"predicted q95 of the limit: {r.predicted_q95:.4f}")


if __name__ == "__main__":
    main()
