"""Log-log slopes of median magnitudes for the rate catalogue.

Run: python3 demos/rates.py [--reps 200]
"""

import argparse

from br_ar import rate_check
from br_ar.montecarlo import RATE_CATALOGUE


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=200)
    args = ap.parse_args()
    for qid, q in RATE_CATALOGUE.items():
        r = rate_check(qid, reps=args.reps)
        theory = "< -3" if r.theory is None else f"{r.theory:+.2f}"
        print(f"{qid:<22} slope {r.slope:+8.3f}  theory {theory:>6}  {'ok' if r.passed else 'off'}  {q.description}")


if __name__ == "__main__":
    main()
