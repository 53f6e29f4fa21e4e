"""Recompute the three SINR sweeps (bandwidth, load, roll-off) and summarize them.

    python3 scripts/run_figures.py [--out results/] [--jobs 2]
"""

import argparse
from collections import defaultdict
from pathlib import Path

from mscdma.cli import SWEEP_HEADER, cmd_sinr_sweep, write_csv
from mscdma.config import load_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("fig2", "fig3", "fig4"):
        rows = cmd_sinr_sweep(load_config(CONFIGS / f"{name}.toml"), jobs=args.jobs)
        write_csv(rows, SWEEP_HEADER, str(out / f"{name}.csv"))
        curves = defaultdict(list)
        for axis, value, scenario, pulse, gamma, rolloff, snr, L, db in rows:
            # gamma follows the axis on the bandwidth sweep
            curves[(scenario, pulse, "" if axis == "bandwidth" else gamma, snr)].append((value, db))
        print(f"== {name}: {rows[0][0]} sweep, {len(rows)} points -> {out / (name + '.csv')}")
        for (scenario, pulse, gamma, snr), pts in curves.items():
            label = f"{scenario:8s} {pulse:4s} {str(gamma):5s} {snr:5.1f} dB"
            print(f"  {label}  " + " ".join(f"{db:6.2f}" for _, db in pts))


if __name__ == "__main__":
    main()
