"""Cost and accuracy loss of FAMuS versus the number of types and of clients.

Usage: python scripts/fig2_sweep.py [--seeds 20] [--measured 1000] [--out fig2.csv]
"""
import argparse
import csv
from dataclasses import replace

from famus.config import SimConfig
from famus.engine import sweep

GAMMAS = (10, 20, 50, 100)
CLIENTS = (100, 200, 300, 400, 500)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--measured", type=int, default=1000, help="measured slots after warm-up")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="fig2.csv")
    args = ap.parse_args(argv)
    base = SimConfig()
    base = replace(base, horizon=base.warmup + args.measured)
    rows = sweep(base, "gamma", GAMMAS, args.seeds, args.workers)
    rows += sweep(base, "M", CLIENTS, args.seeds, args.workers)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["axis", "value", "cost_mean", "cost_se", "al_mean", "al_se"])
        for r in rows:
            w.writerow([r.axis, r.value, r.cost_mean, r.cost_se, r.al_mean, r.al_se])
            print(f"{r.axis:>5} {r.value:>6g}  cost {r.cost_mean:.4f} +- {r.cost_se:.4f}  "
                  f"AL {r.al_mean:.4f} +- {r.al_se:.4f}")


if __name__ == "__main__":
    main()
