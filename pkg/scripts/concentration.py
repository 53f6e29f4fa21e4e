"""Finite-system diagonal moments against the large-system limits as N grows.

    python3 scripts/concentration.py [--sizes 128 256 512 1024] [--seeds 5]
"""

import argparse
from dataclasses import replace
from pathlib import Path

import numpy as np

from mscdma.config import load_config
from mscdma.experiments import montecarlo_seed

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(CONFIGS / "mc_async.toml"))
    ap.add_argument("--sizes", type=int, nargs="+", default=[128, 256, 512, 1024])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--users", type=int, default=128)
    args = ap.parse_args()
    cfg = load_config(args.config)
    mc = cfg.montecarlo
    pulse = cfg.pulse.build()
    load = mc.K / mc.N
    print(f"load {load:g}, {args.seeds} seeds, {args.users} users per realization")
    print("   N   order  mean rel err   var(R_kk)")
    for N in args.sizes:
        spec = replace(mc, N=N, K=int(round(load * N)), users=args.users)
        res = [montecarlo_seed((pulse, cfg.system, spec, s)) for s in range(args.seeds)]
        emp = np.concatenate([r[2] for r in res], axis=1)
        asym = np.concatenate([r[3] for r in res], axis=1)
        for ell in range(mc.max_order):
            err = abs(emp[ell].mean() - asym[ell].mean()) / asym[ell].mean()
            print(f"{N:5d}  {ell + 1:5d}  {100 * err:11.3f}%  {np.var(emp[ell] - asym[ell]):.3e}")


if __name__ == "__main__":
    main()
