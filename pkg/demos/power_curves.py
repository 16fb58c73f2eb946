"""Power against N(m, 1) and N(0, s2) alternatives, with the KS baseline for M0.

Run: python3 demos/power_curves.py [--reps 500]
"""

import argparse

from br_ar import MODELS, Bandwidth, McConfig, NoiseSpec, gaussian_kernel, power_sweep
from br_ar.montecarlo import mean_alternatives, variance_alternatives


def show(title, values, rows):
    print(title)
    print(f"{'':<8}" + "".join(f"{v:>8g}" for v in values))
    for name, r in rows:
        print(f"{name:<8}" + "".join(f"{x:>8.3f}" for x in r))
    print()


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--n", type=int, default=100)
    args = ap.parse_args()
    f0 = NoiseSpec.normal()
    means, variances = (-1, -0.5, -0.2, 0, 0.2, 0.5, 1), (0.2, 0.5, 1, 2, 3.5)
    for title, values, alts in [
        ("location N(m, 1)", means, mean_alternatives(means)),
        ("scale N(0, s2)", variances, variance_alternatives(variances)),
    ]:
        rows = []
        for key in ("m0", "m1", "m3", "m5"):
            cfg = McConfig(MODELS[key], f0, f0, gaussian_kernel(), Bandwidth(0.14), args.n, args.reps, with_ks=key == "m0")
            pts = power_sweep(cfg, alts)
            rows.append((key, [p.report.rejection_rate for p in pts]))
            if key == "m0":
                rows.append(("m0 KS", [p.report.ks_rejection_rate for p in pts]))
        show(title, values, rows)


if __name__ == "__main__":
    main()
