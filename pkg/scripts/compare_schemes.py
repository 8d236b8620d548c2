#!/usr/bin/env python3
"""Paired outage comparison of several schedulers on one network.

Every scheme sees the same channel draws, so differences between the curves
come from the selection rule alone.

Example::

    python3 scripts/compare_schemes.py scripts/configs/erua_234.cfg \
        --schemes centralized-cs distributed-cs random-cs --trials 200000
"""

import argparse
from pathlib import Path

from mimoy.channel import NetworkConfig
from mimoy.harness import SCHEMES, ExperimentSpec, run_comparison, write_curves


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config", type=Path)
    ap.add_argument("--schemes", nargs="+", default=["centralized-cs", "distributed-cs", "random-cs"],
                    choices=SCHEMES)
    ap.add_argument("--snr-db", type=float, nargs="+", default=[0, 5, 10, 15, 20])
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--rss-mode", default="identity", choices=["identity", "haar"])
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out", type=Path, default=None, help="CSV file for the curves")
    args = ap.parse_args()

    cfg = NetworkConfig.from_file(args.config)
    spec = ExperimentSpec(cfg, snr_db=tuple(args.snr_db), trials=args.trials, seed=args.seed,
                          rss_mode=args.rss_mode, workers=args.workers)
    curves = run_comparison(spec, args.schemes)

    width = max(len(s) for s in curves)
    print(f"{'snr_db':>7} " + " ".join(f"{s:>{width}}" for s in curves))
    for j, s in enumerate(spec.snr_db):
        print(f"{s:7.1f} " + " ".join(f"{c.points[j].p_hat:>{width}.5f}" for c in curves.values()))
    if args.out:
        write_curves(curves.values(), args.out)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
