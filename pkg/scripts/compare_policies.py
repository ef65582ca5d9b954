"""Time-averaged cost, accuracy loss and JFI of FAMuS and the baselines.

FAMuS is run for several Lyapunov weights V; the baselines do not depend on V.
Usage: python scripts/compare_policies.py [--seeds 20] [--measured 1000] [--v 0.1,10,50]
"""
import argparse
from dataclasses import replace

import numpy as np

from famus.config import SimConfig
from famus.engine import simulate

BASELINES = ("random", "greedy", "ncf", "ea", "fixed")


def metrics(cfg, seeds):
    out = [simulate(replace(cfg, seed=s)).summary for s in seeds]
    return {k: np.array([getattr(s, k) for s in out]) for k in ("avg_cost", "avg_accuracy_loss", "jfi")}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--measured", type=int, default=1000)
    ap.add_argument("--v", default="0.1,10,50")
    args = ap.parse_args(argv)
    base = SimConfig()
    base = replace(base, horizon=base.warmup + args.measured)
    seeds = range(args.seeds)
    table = {p: metrics(replace(base, policy=p), seeds) for p in BASELINES}
    for v in (float(x) for x in args.v.split(",")):
        table[f"famus V={v:g}"] = metrics(replace(base, policy="famus", balance=v), seeds)
    print(f"{'policy':<14} {'cost':>8} {'AL':>8} {'JFI':>8}")
    for name, m in table.items():
        print(f"{name:<14} {m['avg_cost'].mean():8.4f} {np.nanmean(m['avg_accuracy_loss']):8.4f} "
              f"{m['jfi'].mean():8.4f}")
    for name, m in table.items():
        if not name.startswith("famus"):
            continue
        wins = {
            "cost<random": int(np.sum(m["avg_cost"] < table["random"]["avg_cost"])),
            "cost<greedy": int(np.sum(m["avg_cost"] < table["greedy"]["avg_cost"])),
            "jfi>ncf": int(np.sum(m["jfi"] > table["ncf"]["jfi"])),
            "al<=ea": int(np.sum(m["avg_accuracy_loss"] <= table["ea"]["avg_accuracy_loss"])),
        }
        print(name, " ".join(f"{k} {v}/{args.seeds}" for k, v in wins.items()))


if __name__ == "__main__":
    main()
