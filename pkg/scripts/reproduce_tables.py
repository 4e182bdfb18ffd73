"""Source-estimation RMSE for full / partial sensing, with and without noise.

Usage:
    python scripts/reproduce_tables.py                 # desk scale (n_x = 51)
    python scripts/reproduce_tables.py --full-scale    # dx = dt = 0.01, n_x = 199 (slow)
    python scripts/reproduce_tables.py --margins 0.9 0.2 0.05

Noisy rows are averaged over ``--seeds`` noise realisations.  ``--margins``
repeats the table for several auto-sigma margins, which matters most for the
partial, noisy row.
"""

import argparse
import dataclasses
import time
from pathlib import Path

from waveobs.config import GridConfig, load_config
from waveobs.experiment import run_estimate, seed_average_rmse

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

ROWS = [
    ("full, noise-free", "desk_full.yaml", False),
    ("partial end 50%, noise-free", "desk_partial_end.yaml", False),
    ("full, noisy", "desk_full_noisy.yaml", True),
    ("partial middle 50%, noisy", "desk_partial_middle_noisy.yaml", True),
]


def to_full_scale(cfg):
    return dataclasses.replace(cfg, grid=GridConfig(dx=0.01, dt=0.01))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--full-scale", action="store_true", help="use the dx = dt = 0.01 grid")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--margins", type=float, nargs="+", default=[0.9])
    args = ap.parse_args()

    print(f"{'case':32s} {'margin':>7s} {'RMSE':>12s} {'time [s]':>9s}")
    for margin in args.margins:
        for label, name, noisy in ROWS:
            cfg = load_config(CONFIGS / name)
            if args.full_scale:
                cfg = to_full_scale(cfg)
            cfg = dataclasses.replace(cfg, observer=dataclasses.replace(cfg.observer, sigma_margin=margin))
            t0 = time.perf_counter()
            if noisy:
                err = seed_average_rmse(cfg, range(args.seeds))
            else:
                err = run_estimate(cfg).source_rmse
            print(f"{label:32s} {margin:7.3g} {err:12.4e} {time.perf_counter() - t0:9.1f}")


if __name__ == "__main__":
    main()
