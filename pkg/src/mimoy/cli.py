"""Command-line entry point.

Exit codes: 0 success, 1 selftest failure, 2 invalid flags, 3 configuration
invariant violated, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, harness, protocol, scheduling
from .channel import Mode, NetworkConfig, RssMode, make_rss, sample_channels
from .errors import ConfigError, DomainError

EXIT_SELFTEST = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_IO = 4


class UsageError(Exception):
    pass


def _float_list(text: str) -> list[float]:
    """Parse ``0,5,10`` or a range ``0:30:5`` (inclusive)."""
    try:
        if ":" in text:
            lo, hi, step = (float(v) for v in text.split(":"))
            n = int(round((hi - lo) / step)) + 1
            return [lo + i * step for i in range(n)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number list: {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer list: {text!r}") from None


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# simulate ----------------------------------------------------------------------

def cmd_simulate(args) -> int:
    config = NetworkConfig.from_file(args.config)
    spec = harness.ExperimentSpec(
        config, args.scheme, tuple(args.snr_db), args.rho_th, args.trials, args.seed,
        args.rss_mode, args.rss_seed, args.workers,
    )
    curve = harness.run_sweep(spec)
    text = harness.curves_csv([curve]) if args.format == "csv" else harness.curves_json([curve])
    _emit(text, args.out)
    return 0


# bounds ------------------------------------------------------------------------

_BOUND_SIZES = {"lb-cs": (2, 3), "hs-lb-cs": (2, 3), "ub-cs": (3,), "hs-ub-cs": (3,),
                "lb-gs": (1,), "ub-gs": (1,), "hs-lb-gs": (1,), "hs-ub-gs": (1,)}


def bound_rows(which: str, M: list[int], snr_db: list[float], rho_th: float) -> list[dict]:
    if len(M) not in _BOUND_SIZES[which]:
        raise UsageError(f"{which} takes {' or '.join(map(str, _BOUND_SIZES[which]))} sizes via --m, got {len(M)}")
    gs = which.endswith("gs")
    sizes = (M[0],) * 3 if gs else tuple(M) + (0,) * (3 - len(M))
    if which.startswith("hs-"):
        d = analysis.highsnr_coeffs(which[3:], M[0] if gs else M).exponent
    else:
        d = M[0] if gs else min(M)
    rows = []
    for s in snr_db:
        p = analysis.evaluate_bound(which, rho_th, 10 ** (s / 10), M)
        rows.append({
            "scheme": which, "mode": "er-ua", "n": 1, "m1": sizes[0], "m2": sizes[1], "m3": sizes[2],
            "rho_th": rho_th, "snr_db": s, "trials": 0, "outages": 0, "p_hat": p,
            "ci_low": p, "ci_high": p, "seed": 0, "exponent": d,
        })
    return rows


def _rows_text(rows: list[dict], fmt: str, columns) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def cmd_bounds(args) -> int:
    rows = bound_rows(args.which, args.m, args.snr_db, args.rho_th)
    _emit(_rows_text(rows, args.format, harness.CSV_COLUMNS + ("exponent",)), args.out)
    return 0


# protocol ----------------------------------------------------------------------

def protocol_runs(config: NetworkConfig, trials: int, seed: int, pconfig: protocol.ProtocolConfig) -> list[dict]:
    """Replay the distributed protocols on random instances and tally the ledgers."""
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    rss = make_rss(config)
    group = len(set(config.cluster_sizes)) == 1
    names = ["distributed-cs"] + (["distributed-gs"] if group else [])
    tallies = {n: [protocol.FeedbackLedger(), 0, 0, 0.0] for n in names}
    for t in range(trials):
        ch = sample_channels(config, seed, t)
        if config.mode is Mode.MIN_UA:
            coords = scheduling.minua_coordinates(ch, rss)
            out = protocol.run_distributed_cs_minua(coords, pconfig, config.N)
            ref = scheduling.distributed_cs_minua(coords)
        else:
            ecgs = scheduling.erua_min_ecgs(ch, rss, config)
            out = protocol.run_distributed_cs_erua(ecgs, pconfig)
            ref = scheduling.distributed_cs_erua(ecgs)
        results = [("distributed-cs", out, ref)]
        if group:
            if config.mode is Mode.MIN_UA:
                gc = scheduling.group_view(coords)
                out = protocol.run_distributed_gs(gc, pconfig, config.mode, config, fallback_seed=seed + t)
                ref = scheduling.distributed_gs_minua(gc, config, fallback_seed=seed + t)
            else:
                g = scheduling.group_view(ecgs)
                out = protocol.run_distributed_gs(g, pconfig, config.mode, config)
                ref = scheduling.distributed_gs_erua(g, config)
            results.append(("distributed-gs", out, ref))
        for name, o, r in results:
            tal = tallies[name]
            tal[0] = tal[0] + o.ledger
            tal[1] += int(o.decision.selected == r.selected)
            tal[2] += int(o.collision)
            tal[3] += o.elapsed
    rows = []
    for name, (led, agree, coll, el) in tallies.items():
        row = {"scheme": name, "mode": config.mode.value, "runs": trials, "agree": agree,
               "collisions": coll, "mean_elapsed": el / trials}
        row.update({k: v / trials for k, v in led.to_dict().items()})
        rows.append(row)
    return rows


def cmd_protocol(args) -> int:
    config = NetworkConfig.from_file(args.config)
    pconf = protocol.ProtocolConfig(T=args.clock, guard_time=args.guard_time)
    rows = protocol_runs(config, args.trials, args.seed, pconf)
    for scheme in ("centralized-cs", "distributed-cs"):
        led = protocol.complexity_report(scheme, config)
        rows.append({"scheme": f"nominal:{scheme}", "mode": config.mode.value, "runs": 0, "agree": 0,
                     "collisions": 0, "mean_elapsed": 0.0, **led.to_dict()})
    cols = ("scheme", "mode", "runs", "agree", "collisions", "mean_elapsed") + protocol.LEDGER_FIELDS
    _emit(_rows_text(rows, args.format, cols), args.out)
    return 0


# dmt ------------------------------------------------------------------------------

def cmd_dmt(args) -> int:
    rows = []
    scheme = args.scheme
    M = args.m
    if scheme.endswith("gs") and len(M) != 1:
        raise UsageError("group-wise DMT takes a single --m value")
    if scheme.endswith("cs") and len(M) != 3:
        raise UsageError("cluster-wise DMT takes three --m values")
    for r in args.r:
        row = {"scheme": scheme, "m": ",".join(map(str, M)), "r": r, "d_pred": analysis.dmt_predicted(r, scheme, M)}
        if args.snr_db is not None:
            cfg = NetworkConfig(N=1, mode="er-ua", cluster_sizes=(M[0],) * 3 if scheme.endswith("gs") else tuple(M))
            for s in args.snr_db:
                p = analysis.outage_with_adaptive_rate(scheme, cfg, 10 ** (s / 10), r, args.trials, args.seed)
                rows.append({**row, "snr_db": s, "p_out": p})
        else:
            rows.append({**row, "snr_db": "", "p_out": ""})
    _emit(_rows_text(rows, args.format, ("scheme", "m", "r", "d_pred", "snr_db", "p_out")), args.out)
    return 0


# reproduce ----------------------------------------------------------------------------

def figure_presets(fig: str, trials: int) -> list[dict]:
    """Series definitions for one figure preset.

    Each entry is ``{"name", "kind": "mc"|"bound", ...}``. Cluster sizes for
    the trend figures are preset choices, not read off any plot.
    """
    mc_grid = [float(s) for s in range(0, 31, 5)]
    bound_grid = [float(s) for s in np.arange(0, 40.1, 2.5)]
    out = []

    def mc(name, mode, N, sizes, schemes, grid=mc_grid, group=False):
        out.append({"name": name, "kind": "mc", "mode": mode, "N": N, "cluster_sizes": list(sizes),
                    "group": group, "schemes": schemes, "snr_db": grid, "trials": trials})

    if fig in ("fig6", "fig8"):
        mode = "min-ua" if fig == "fig6" else "er-ua"
        for M in (1, 2, 4):
            schemes = ["centralized-cs", "distributed-cs"] + (["random-cs"] if M == 1 else [])
            mc(f"{mode}-cs-M{M}", mode, 1, (M, M, M), schemes)
    elif fig in ("fig7", "fig9"):
        mode = "min-ua" if fig == "fig7" else "er-ua"
        for M in (1, 2, 4):
            schemes = ["centralized-gs", "distributed-gs"] + (["random-gs"] if M == 1 else [])
            mc(f"{mode}-gs-M{M}", mode, 1, (M, M, M), schemes, group=True)
    elif fig == "fig10":
        for mode in ("min-ua", "er-ua"):
            for M in (1, 2, 4):
                mc(f"{mode}-n2-M{M}", mode, 2, (M, M, M), ["distributed-cs", "distributed-gs"], group=True)
    elif fig == "fig11":
        mc("er-ua-cs-234", "er-ua", 1, (2, 3, 4), ["centralized-cs", "distributed-cs", "mc-lb-cs", "mc-ub-cs"])
        for which in ("lb-cs", "ub-cs", "hs-lb-cs", "hs-ub-cs"):
            M = [2, 3] if which.endswith("lb-cs") else [2, 3, 4]
            out.append({"name": which, "kind": "bound", "which": which, "m": M, "snr_db": bound_grid})
    elif fig == "fig12":
        mc("er-ua-gs-3", "er-ua", 1, (3, 3, 3), ["centralized-gs", "distributed-gs", "mc-lb-gs", "mc-ub-gs"], group=True)
        for which in ("lb-gs", "ub-gs", "hs-lb-gs", "hs-ub-gs"):
            out.append({"name": which, "kind": "bound", "which": which, "m": [3], "snr_db": bound_grid})
    else:
        raise UsageError(f"unknown figure {fig!r}; valid: fig6 ... fig12")
    return out


FIGURES = tuple(f"fig{i}" for i in range(6, 13))


def cmd_reproduce(args) -> int:
    series = figure_presets(args.figure, args.trials)
    outdir = Path(args.out or f"{args.figure}_out")
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = {"figure": args.figure, "seed": args.seed, "rho_th": 1.0,
                "note": "trial counts are scaled for desk hardware", "series": []}
    for s in series:
        if s["kind"] == "mc":
            gs = s["group"]
            cfg = NetworkConfig(N=s["N"], mode=s["mode"], cluster_sizes=tuple(s["cluster_sizes"]),
                                group_count=s["cluster_sizes"][0] if gs else None)
            spec = harness.ExperimentSpec(cfg, s["schemes"][0], tuple(s["snr_db"]), 1.0, s["trials"],
                                          args.seed, workers=args.workers)
            curves = harness.run_comparison(spec, s["schemes"])
            for name, curve in curves.items():
                path = outdir / f"{s['name']}__{name}.csv"
                harness.write_curves([curve], path)
                manifest["series"].append({"name": f"{s['name']}/{name}", "kind": "mc", "file": path.name,
                                           "scheme": name, "config": cfg.to_dict(), "rss_mode": spec.rss_mode,
                                           "rho_th": spec.rho_th, "snr_db": s["snr_db"], "trials": s["trials"],
                                           "seed": args.seed})
        else:
            rows = bound_rows(s["which"], s["m"], s["snr_db"], 1.0)
            path = outdir / f"{s['name']}.csv"
            path.write_text(_rows_text(rows, "csv", harness.CSV_COLUMNS + ("exponent",)))
            manifest["series"].append({"name": s["name"], "kind": "bound", "file": path.name, "scheme": s["which"],
                                       "m": s["m"], "rho_th": 1.0, "snr_db": s["snr_db"]})
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2))
    print(f"wrote {len(manifest['series'])} series to {outdir}")
    return 0


# selftest ---------------------------------------------------------------------------------

def _selftest_checks(seed: int):
    from scipy import integrate, special

    from . import erua, minua
    from .channel import sample_channel_range

    def k1_oracle(x):
        # integrand is below e^-800 past acosh(800/x)
        hi = math.acosh(800.0 / x)
        return integrate.quad(lambda t: math.exp(-x * math.cosh(t)) * math.cosh(t), 0, hi,
                              epsabs=0, epsrel=1e-13, limit=400)[0]

    def bessel():
        for x in (0.05, 0.5, 1.0, 2.5, 5.0, 12.0):
            if abs(analysis.bessel_k1(x) / k1_oracle(x) - 1) > 1e-9:
                return False
        return True

    def dig():
        return all(abs(analysis.digamma(x) - special.digamma(x)) < 1e-10 for x in (0.1, 1.0, 2.5, 10.0, 33.3))

    def lb_quadrature():
        for snr_db in (0, 10, 20):
            s = 10 ** (snr_db / 10)
            bp = analysis.bound_params(1.0, s)
            f = lambda y: 3 * (1 - math.exp(-y)) ** 2 * math.exp(-y) * (1 - math.exp(-(bp.a + bp.b / y))) ** 2
            ref = integrate.quad(f, 0, math.inf, epsabs=1e-13, limit=400)[0]
            if abs(analysis.outage_lb_cs(1.0, s, 2, 3) - ref) > 1e-6:
                return False
        return True

    def ssa():
        cfg = NetworkConfig(N=2, mode="min-ua")
        H = sample_channel_range(cfg, seed, 0, 500)
        beams, _ = minua.ssa_beamformers(tuple(h[:, 0] for h in H))
        for a, b in ((0, 1), (0, 2), (1, 2)):
            r = np.linalg.norm(H[a][:, 0] @ beams[(a, b)] - H[b][:, 0] @ beams[(b, a)], axis=(-2, -1))
            if r.max() > 1e-9:
                return False
        return True

    def rss_alignment():
        cfg = NetworkConfig(N=1, mode="er-ua")
        H = sample_channel_range(cfg, seed, 0, 500)[0][:, 0]
        E = np.eye(3)
        v = erua.rss_beamformer(H, E[:, 1], cfg.P_T, 1)
        from .mathkit import acute_angle
        return float(np.max(acute_angle(np.einsum("bij,bj->bi", H, v), np.broadcast_to(E[:, 1], (500, 3))))) < 1e-10

    def survival():
        cfg = NetworkConfig(N=1, mode="min-ua", group_count=1)
        rss = make_rss(cfg)
        H = sample_channel_range(cfg, seed, 0, 20000)
        coords = [np.asarray(scheduling.angular_coordinates_batch(h, rss)) for h in H]
        frac = scheduling.gs_phase1(np.stack(coords, axis=-2))[1].mean()
        return abs(frac - 2 / 9) < 0.015

    def protocol_equivalence():
        cfg = NetworkConfig(N=1, mode="min-ua", cluster_sizes=(2, 3, 2))
        rss = make_rss(cfg)
        pc = protocol.ProtocolConfig()
        for t in range(50):
            ch = sample_channels(cfg, seed, t)
            co = scheduling.minua_coordinates(ch, rss)
            if protocol.run_distributed_cs_minua(co, pc).decision.selected != scheduling.distributed_cs_minua(co).selected:
                return False
        return True

    return [
        ("bessel_k1", bessel),
        ("digamma", dig),
        ("lower-bound quadrature", lb_quadrature),
        ("ssa alignment residual", ssa),
        ("rss alignment", rss_alignment),
        ("group survival ratio", survival),
        ("protocol equivalence", protocol_equivalence),
    ]


def cmd_selftest(args) -> int:
    if args.inject_fault == "bessel_k1":
        analysis._K1_HOOK["scale"] = 1.0 + 1e-6
    failed = []
    t0 = time.time()
    try:
        for name, check in _selftest_checks(args.seed):
            try:
                ok = bool(check())
            except Exception as exc:  # report and keep going
                ok = False
                name = f"{name} ({type(exc).__name__}: {exc})"
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
            if not ok:
                failed.append(name)
    finally:
        analysis._K1_HOOK["scale"] = 1.0
    print(f"{len(failed)} failure(s) in {time.time() - t0:.1f} s")
    if failed:
        print("failed invariants: " + ", ".join(failed), file=sys.stderr)
        return EXIT_SELFTEST
    return 0


# parser ----------------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mimoy", description="MIMO-Y relay scheduling laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="Monte Carlo outage curve of one scheme")
    s.add_argument("--config", required=True)
    s.add_argument("--scheme", required=True, choices=harness.SCHEMES)
    s.add_argument("--snr-db", type=_float_list, required=True)
    s.add_argument("--trials", type=int, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--rho-th", type=float, default=1.0)
    s.add_argument("--rss-mode", choices=[m.value for m in RssMode], default="identity")
    s.add_argument("--rss-seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--out", default=None)
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bounds", help="closed-form bounds and high-SNR approximations")
    b.add_argument("--rho-th", type=float, default=1.0)
    b.add_argument("--snr-db", type=_float_list, required=True)
    b.add_argument("--m", type=_int_list, required=True)
    b.add_argument("--which", choices=analysis.BOUND_TAGS, required=True)
    b.add_argument("--out", default=None)
    b.add_argument("--format", choices=("csv", "json"), default="csv")
    b.set_defaults(func=cmd_bounds)

    pr = sub.add_parser("protocol", help="replay the timer and feedback protocols")
    pr.add_argument("--config", required=True)
    pr.add_argument("--trials", type=int, default=1000)
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("--clock", type=float, default=1.0, help="timer clock period T in seconds")
    pr.add_argument("--guard-time", type=float, default=0.0)
    pr.add_argument("--out", default=None)
    pr.add_argument("--format", choices=("csv", "json"), default="csv")
    pr.set_defaults(func=cmd_protocol)

    d = sub.add_parser("dmt", help="predicted diversity-multiplexing tradeoff")
    d.add_argument("--scheme", choices=("centralized-cs", "distributed-cs", "centralized-gs", "distributed-gs"),
                   required=True)
    d.add_argument("--m", type=_int_list, required=True)
    d.add_argument("--r", type=_float_list, required=True)
    d.add_argument("--snr-db", type=_float_list, default=None, help="also estimate adaptive-rate outage here")
    d.add_argument("--trials", type=int, default=10000)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", default=None)
    d.add_argument("--format", choices=("csv", "json"), default="csv")
    d.set_defaults(func=cmd_dmt)

    r = sub.add_parser("reproduce", help="run a figure preset")
    r.add_argument("figure", choices=FIGURES)
    r.add_argument("--out", default=None)
    r.add_argument("--trials", type=int, default=100_000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--workers", type=int, default=None)
    r.set_defaults(func=cmd_reproduce)

    t = sub.add_parser("selftest", help="quick oracle and invariant suite")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--inject-fault", default=None, help=argparse.SUPPRESS)
    t.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mimoy: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DomainError) as exc:
        print(f"mimoy: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"mimoy: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ArithmeticError as exc:
        # singular channels or an unstable bound evaluation
        print(f"mimoy: numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
