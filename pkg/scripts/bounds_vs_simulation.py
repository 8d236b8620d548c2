#!/usr/bin/env python3
"""Closed-form outage bounds next to the simulated bound variables and schedulers.

Prints, per SNR point, the closed-form lower and upper bounds, the Monte
Carlo estimates of the same bound events, and the centralized and
distributed outage, for either the cluster-wise (2,3,4) or group-wise M=3
ER-UA setup.
"""

import argparse

from mimoy import analysis as an
from mimoy.channel import NetworkConfig
from mimoy.harness import ExperimentSpec, run_comparison


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kind", choices=["cs", "gs"], default="cs")
    ap.add_argument("--snr-db", type=float, nargs="+", default=[0, 5, 10, 15, 20, 25])
    ap.add_argument("--trials", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if args.kind == "cs":
        cfg, M = NetworkConfig(cluster_sizes=(2, 3, 4)), (2, 3, 4)
    else:
        cfg, M = NetworkConfig(group_count=3), (3,)
    k = args.kind
    schemes = (f"mc-lb-{k}", f"centralized-{k}", f"distributed-{k}", f"mc-ub-{k}")
    curves = run_comparison(ExperimentSpec(cfg, snr_db=tuple(args.snr_db), trials=args.trials, seed=args.seed),
                            schemes)

    head = ("snr_db", "LB", "mc-LB", "central", "distrib", "mc-UB", "UB", "UB-event")
    print(" ".join(f"{h:>9}" for h in head))
    for j, s in enumerate(args.snr_db):
        snr = 10 ** (s / 10)
        lb = an.evaluate_bound(f"lb-{k}", 1.0, snr, M)
        ub = an.evaluate_bound(f"ub-{k}", 1.0, snr, M)
        ev = an.ub_event_probability_cs(1.0, snr, M) if k == "cs" else an.ub_event_probability_gs(1.0, snr, M[0])
        mc = [curves[n].points[j].p_hat for n in schemes]
        row = [s, lb, mc[0], mc[1], mc[2], mc[3], ub, ev]
        print(f"{row[0]:9.1f} " + " ".join(f"{v:9.5f}" for v in row[1:]))


if __name__ == "__main__":
    main()
