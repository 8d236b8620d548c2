"""Monte Carlo engine: outage estimation, SNR sweeps and scheme comparisons.

Trials are processed in the fixed blocks of ``channel.TRIAL_BLOCK``. For each
block every SNR-independent quantity (ECG tables, angular coordinates, Min-UA
features, minimum eigenvalues) is computed once. All SNR points and schemes
then reuse it, so comparisons run on common random numbers. Blocks are plain
work items; their integer outage counts are summed, so the result does not
depend on the worker count or on completion order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from statistics import NormalDist
from typing import Callable, Iterable, Sequence

import numpy as np

from . import erua, minua, scheduling
from .channel import (
    TRIAL_BLOCK,
    Mode,
    NetworkConfig,
    RssBasis,
    RssMode,
    direction,
    make_rss,
    sample_channel_block,
)
from .errors import ConfigError, DomainError

SCHEMES = (
    "centralized-cs",
    "distributed-cs",
    "centralized-gs",
    "distributed-gs",
    "random-cs",
    "random-gs",
    "mc-lb-cs",
    "mc-ub-cs",
    "mc-lb-gs",
    "mc-ub-gs",
)
CSV_COLUMNS = (
    "scheme", "mode", "n", "m1", "m2", "m3", "rho_th", "snr_db",
    "trials", "outages", "p_hat", "ci_low", "ci_high", "seed",
)
_MASK64 = (1 << 64) - 1


def default_trials(snr_db: float) -> int:
    return 100_000 if snr_db <= 20 else 1_000_000


def resolve_workers(workers: int | None = None) -> int:
    env = os.environ.get("MIMOY_WORKERS")
    if env:
        try:
            workers = int(env)
        except ValueError:
            raise ConfigError(f"MIMOY_WORKERS must be an integer, got {env!r}") from None
    if workers is None:
        workers = os.cpu_count() or 1
    if workers < 1:
        raise ConfigError("worker count must be >= 1")
    return workers


# results ---------------------------------------------------------------------

def wilson_interval(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for k successes out of n."""
    if n <= 0:
        raise DomainError("interval needs n >= 1")
    z = NormalDist().inv_cdf(0.5 + level / 2)
    p = k / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return min(lo, p), max(hi, p)


@dataclass(frozen=True)
class CurvePoint:
    snr_db: float
    trials: int
    outages: int
    p_hat: float
    ci_low: float
    ci_high: float

    @classmethod
    def from_counts(cls, snr_db: float, trials: int, outages: int) -> "CurvePoint":
        lo, hi = wilson_interval(outages, trials)
        return cls(float(snr_db), int(trials), int(outages), outages / trials, lo, hi)

    @property
    def half_width(self) -> float:
        return max(self.p_hat - self.ci_low, self.ci_high - self.p_hat)


@dataclass
class OutageCurve:
    scheme: str
    config: dict
    points: list[CurvePoint]
    rho_th: float = 1.0
    seed: int = 0
    checksum: int = 0

    def rows(self) -> list[dict]:
        c = self.config
        m = c["cluster_sizes"]
        return [
            {
                "scheme": self.scheme, "mode": c["mode"], "n": c["N"],
                "m1": m[0], "m2": m[1], "m3": m[2], "rho_th": self.rho_th,
                "snr_db": pt.snr_db, "trials": pt.trials, "outages": pt.outages,
                "p_hat": pt.p_hat, "ci_low": pt.ci_low, "ci_high": pt.ci_high,
                "seed": self.seed,
            }
            for pt in self.points
        ]

    @property
    def snr_db(self) -> np.ndarray:
        return np.array([p.snr_db for p in self.points])

    @property
    def p_hat(self) -> np.ndarray:
        return np.array([p.p_hat for p in self.points])


@dataclass(frozen=True)
class ExperimentSpec:
    """One Monte Carlo experiment.

    ``trials`` is a single count, one count per grid point, or None for the
    defaults of ``default_trials``. ``paired=False`` gives each scheme of a
    comparison its own channel stream.
    """

    config: NetworkConfig
    scheme: str | Callable = "distributed-cs"
    snr_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0)
    rho_th: float = 1.0
    trials: int | tuple[int, ...] | None = None
    seed: int = 0
    rss_mode: RssMode | str = RssMode.IDENTITY
    rss_seed: int = 0
    workers: int | None = None
    paired: bool = True

    def __post_init__(self):
        grid = tuple(float(s) for s in np.ravel(self.snr_db))
        if not grid:
            raise DomainError("SNR grid is empty")
        object.__setattr__(self, "snr_db", grid)
        if not self.rho_th > 0:
            raise ConfigError("rho_th must be positive")
        counts = self.trial_counts
        if min(counts) < 1:
            raise ConfigError("trials must be >= 1")
        if isinstance(self.scheme, str) and self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; valid: {', '.join(SCHEMES)}")

    @property
    def trial_counts(self) -> tuple[int, ...]:
        t = self.trials
        if t is None:
            return tuple(default_trials(s) for s in self.snr_db)
        if np.ndim(t) == 0:
            return (int(t),) * len(self.snr_db)
        t = tuple(int(x) for x in t)
        if len(t) != len(self.snr_db):
            raise ConfigError("one trial count per SNR point is required")
        return t

    @property
    def rss(self) -> RssBasis:
        return make_rss(self.config, self.rss_mode, self.rss_seed)


# per-block evaluation ------------------------------------------------------------

def trial_checksum(start: int, stop: int) -> int:
    """Order-independent checksum: sum of splitmix64(t) over trials, mod 2^64."""
    t = np.arange(start, stop, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = t + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return int(np.sum(z, dtype=np.uint64)) & _MASK64


class BlockData:
    """Channels of one trial block plus lazily computed SNR-free features."""

    def __init__(self, config: NetworkConfig, rss: RssBasis, seed: int, block: int, n: int | None = None):
        n = TRIAL_BLOCK if n is None else n
        self.config = config
        self.rss = rss
        self.seed = seed
        self.block = block
        self.n = n
        self.H = tuple(h[:n] for h in sample_channel_block(config, seed, block))
        self._features: dict = {}

    @property
    def identity_rss(self) -> bool:
        return np.array_equal(self.rss.E, np.eye(self.rss.E.shape[0]))

    # ER-UA ---------------------------------------------------------------------
    @cached_property
    def tables(self) -> list[np.ndarray]:
        if self.config.N == 1 and self.identity_rss:
            return [erua.ecg_table_3x3(h) for h in self.H]
        return [erua.ecg_table(h, self.rss.E) for h in self.H]

    @cached_property
    def min_ecgs(self) -> list[np.ndarray]:
        return [erua.user_min_ecg(t, k, self.config.N) for k, t in enumerate(self.tables)]

    @cached_property
    def lams(self) -> list[np.ndarray]:
        return [erua.min_eigenvalues(h) for h in self.H]

    # Min-UA --------------------------------------------------------------------
    @cached_property
    def coords(self) -> list[np.ndarray]:
        return [np.asarray(scheduling.angular_coordinates_batch(h, self.rss)) for h in self.H]

    def minua_features(self, key: str, triples: np.ndarray) -> minua.MinUaFeatures:
        if key not in self._features:
            self._features[key] = minua.triple_features(self.H, triples)
        return self._features[key]

    # selections ----------------------------------------------------------------
    @cached_property
    def all_triples(self) -> np.ndarray:
        return scheduling.enumerate_triples(self.config.cluster_sizes)

    @cached_property
    def diag_triples(self) -> np.ndarray:
        M = scheduling._gs_sizes(self.config)
        return np.repeat(np.arange(M)[:, None], 3, axis=1)

    @cached_property
    def random_cs(self) -> np.ndarray:
        return scheduling.random_cs_batch(self.config, self.seed, self.block)[: self.n]

    @cached_property
    def random_gs(self) -> np.ndarray:
        return scheduling.random_gs_batch(self.config, self.seed, self.block)[: self.n]

    @cached_property
    def fallback(self) -> np.ndarray:
        return scheduling.fallback_groups(self.config, self.seed, self.block)[: self.n]

    @cached_property
    def minua_dist_gs(self) -> np.ndarray:
        gc = np.stack(self.coords, axis=-2)  # (n, M, 3 users, 3 dirs)
        p, _ = scheduling.distributed_gs_minua_batch(gc, self.fallback)
        return p

    @cached_property
    def survivors(self) -> np.ndarray:
        gc = np.stack(self.coords, axis=-2)
        return scheduling.gs_phase1(gc)[1]

    def selection(self, scheme: str, cfg: NetworkConfig) -> np.ndarray:
        """Selected triples ``(n, 3)`` for the non-centralized schemes."""
        if scheme == "random-cs":
            return self.random_cs
        if scheme == "random-gs":
            return np.repeat(self.random_gs[:, None], 3, axis=1)
        if scheme == "distributed-cs":
            if cfg.mode is Mode.MIN_UA:
                return scheduling.distributed_cs_minua_batch(self.coords)
            return scheduling.distributed_cs_erua_batch(self.min_ecgs)
        if scheme == "distributed-gs":
            if cfg.mode is Mode.MIN_UA:
                p = self.minua_dist_gs
            else:
                g = np.stack(self.min_ecgs, axis=-1)  # (n, M, 3)
                p = scheduling.distributed_gs_erua_batch(g, cfg)
            return np.repeat(p[:, None], 3, axis=1)
        raise DomainError(f"no direct selection for {scheme!r}")

    # SNRs ----------------------------------------------------------------------
    def _triple_snrs(self, cfg: NetworkConfig, key: str, triples: np.ndarray) -> np.ndarray:
        """Stream SNRs ``(n, Q, 3, 2, N)`` of candidate triples."""
        if cfg.mode is Mode.MIN_UA:
            return minua.snrs_from_features(self.minua_features(key, triples), cfg)
        sel = [self.tables[k][:, triples[:, k]] for k in range(3)]
        return erua.stream_snrs_from_tables(sel, cfg)

    def _selected_snrs(self, cfg: NetworkConfig, sel: np.ndarray) -> np.ndarray:
        rows = np.arange(self.n)
        tabs = [self.tables[k][rows, sel[:, k]] for k in range(3)]
        return erua.stream_snrs_from_tables(tabs, cfg)

    def stream_snrs(self, scheme: str, cfg: NetworkConfig) -> np.ndarray:
        """Per-stream SNRs ``(n, 3, 2, N)`` of the triple chosen by ``scheme``."""
        rows = np.arange(self.n)
        if scheme in ("centralized-cs", "centralized-gs"):
            key = "all" if scheme == "centralized-cs" else "diag"
            triples = self.all_triples if key == "all" else self.diag_triples
            snr = self._triple_snrs(cfg, key, triples)
            q = np.argmax(np.min(snr, axis=(-3, -2, -1)), axis=1)
            return snr[rows, q]
        if cfg.mode is Mode.MIN_UA and scheme in ("distributed-gs", "random-gs"):
            p = self.minua_dist_gs if scheme == "distributed-gs" else self.random_gs
            snr = minua.snrs_from_features(self.minua_features("diag", self.diag_triples), cfg)
            return snr[rows, p]
        if cfg.mode is Mode.MIN_UA:
            sel = self.selection(scheme, cfg)
            M = cfg.cluster_sizes
            q = sel[:, 0] + M[0] * (sel[:, 1] + M[1] * sel[:, 2])
            if "all" in self._features:
                feat = self._features["all"]
                return minua.snrs_from_features(feat, cfg)[rows, q]
            # only the selected triple of each trial is needed
            Hsel = [self.H[k][rows, sel[:, k]] for k in range(3)]
            key = f"sel:{scheme}"
            if key not in self._features:
                self._features[key] = minua.minua_features(*Hsel)
            return minua.snrs_from_features(self._features[key], cfg)
        return self._selected_snrs(cfg, self.selection(scheme, cfg))

    def metric(self, scheme: str, cfg: NetworkConfig) -> np.ndarray:
        """Per-trial SNR compared against ``rho_th`` (min stream SNR or bound variable)."""
        if scheme.startswith("mc-"):
            return self._bound_metric(scheme, cfg)
        return np.min(self.stream_snrs(scheme, cfg), axis=(-3, -2, -1))

    def _bound_metric(self, scheme: str, cfg: NetworkConfig) -> np.ndarray:
        if cfg.mode is not Mode.ER_UA or cfg.N != 1:
            raise DomainError("bound variables are defined for ER-UA with N = 1")
        snr = cfg.snr_T
        if scheme in ("mc-lb-cs", "mc-lb-gs"):
            # best gains toward the direction shared by the two smallest clusters
            order = sorted(range(3), key=lambda k: (cfg.cluster_sizes[k], k))
            k_tx, k_rx = order[0], order[1]
            m = direction(k_tx, k_rx)
            return erua.rho_ub_cs(self.tables[k_tx][..., m], self.tables[k_rx][..., m], snr)
        if scheme == "mc-ub-cs":
            return erua.rho_lb_cs(self.lams, snr)
        if scheme == "mc-ub-gs":
            return erua.rho_lb_gs(self.lams, snr)
        raise DomainError(f"unknown bound scheme {scheme!r}")


# distributed driver --------------------------------------------------------------------

@dataclass(frozen=True)
class _Task:
    config: NetworkConfig
    rss_E: np.ndarray
    schemes: tuple
    seeds: tuple
    snr_db: tuple
    counts: tuple
    rho_th: float
    blocks: tuple


def _run_blocks(task: _Task):
    """Outage counts ``(len(schemes), len(snr))`` and checksum for some blocks."""
    rss = RssBasis(task.rss_E, task.config.N)
    counts = np.zeros((len(task.schemes), len(task.snr_db)), dtype=np.int64)
    total = max(task.counts)
    checksum = 0
    cfgs = [task.config.with_snr_db(s) for s in task.snr_db]
    for b in task.blocks:
        start = b * TRIAL_BLOCK
        n = min(TRIAL_BLOCK, total - start)
        checksum = (checksum + trial_checksum(start, start + n)) & _MASK64
        cache: dict = {}
        for i, (scheme, seed) in enumerate(zip(task.schemes, task.seeds)):
            if seed not in cache:
                cache[seed] = BlockData(task.config, rss, seed, b, n)
            blk = cache[seed]
            for j, cfg in enumerate(cfgs):
                limit = task.counts[j] - start
                if limit <= 0:
                    continue
                if callable(scheme):
                    vals = np.asarray(scheme(blk, cfg))
                else:
                    vals = blk.metric(scheme, cfg)
                counts[i, j] += int(np.count_nonzero(vals[:limit] <= task.rho_th))
    return counts, checksum


def _scheme_name(s) -> str:
    return s if isinstance(s, str) else getattr(s, "__name__", "custom")


def _scheme_seed(seed: int, scheme, paired: bool) -> int:
    if paired:
        return seed
    name = _scheme_name(scheme)
    return (seed * 1_000_003 + sum(ord(c) * 31**i for i, c in enumerate(name))) & 0xFFFFFFFF


def run_comparison(spec: ExperimentSpec, schemes: Sequence | None = None) -> dict[str, OutageCurve]:
    """Evaluate several schemes on the same trials (when ``spec.paired``)."""
    schemes = tuple(schemes) if schemes is not None else (spec.scheme,)
    for s in schemes:
        if isinstance(s, str) and s not in SCHEMES:
            raise ConfigError(f"unknown scheme {s!r}; valid: {', '.join(SCHEMES)}")
    counts = spec.trial_counts
    total = max(counts)
    n_blocks = -(-total // TRIAL_BLOCK)
    workers = min(resolve_workers(spec.workers), n_blocks)
    seeds = tuple(_scheme_seed(spec.seed, s, spec.paired) for s in schemes)
    E = spec.rss.E

    def task(blocks):
        return _Task(spec.config, E, schemes, seeds, spec.snr_db, counts, spec.rho_th, tuple(blocks))

    if workers == 1:
        results = [_run_blocks(task(range(n_blocks)))]
    else:
        chunks = [list(range(w, n_blocks, workers)) for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_blocks, [task(c) for c in chunks]))
    tot = sum(r[0] for r in results)
    checksum = 0
    for r in results:
        checksum = (checksum + r[1]) & _MASK64
    if checksum != trial_checksum(0, total):
        raise RuntimeError("trial accounting mismatch: a block was dropped or duplicated")
    cdict = spec.config.to_dict()
    out = {}
    for i, s in enumerate(schemes):
        pts = [CurvePoint.from_counts(snr, counts[j], int(tot[i, j])) for j, snr in enumerate(spec.snr_db)]
        out[_scheme_name(s)] = OutageCurve(_scheme_name(s), cdict, pts, spec.rho_th, spec.seed, checksum)
    return out


def run_sweep(spec: ExperimentSpec) -> OutageCurve:
    """One outage estimate per grid point for ``spec.scheme``."""
    return next(iter(run_comparison(spec).values()))


def estimate_outage(spec: ExperimentSpec, snr_point: float) -> CurvePoint:
    """Outage estimate at one SNR (dB) with a Wilson 95% interval."""
    idx = [i for i, s in enumerate(spec.snr_db) if s == float(snr_point)]
    trials = spec.trial_counts[idx[0]] if idx else default_trials(snr_point) if spec.trials is None else (
        spec.trials if np.ndim(spec.trials) == 0 else max(spec.trials))
    sub = ExperimentSpec(spec.config, spec.scheme, (float(snr_point),), spec.rho_th, int(trials), spec.seed,
                         spec.rss_mode, spec.rss_seed, spec.workers, spec.paired)
    return run_sweep(sub).points[0]


# audits and rate helpers -----------------------------------------------------------------

def _iter_blocks(config: NetworkConfig, rss: RssBasis, trials: int, seed: int) -> Iterable[BlockData]:
    for b in range(-(-trials // TRIAL_BLOCK)):
        n = min(TRIAL_BLOCK, trials - b * TRIAL_BLOCK)
        yield BlockData(config, rss, seed, b, n)


def _selected_triples(blk: BlockData, scheme: str, cfg: NetworkConfig) -> np.ndarray:
    if scheme in ("centralized-cs", "centralized-gs"):
        key = "all" if scheme == "centralized-cs" else "diag"
        triples = blk.all_triples if key == "all" else blk.diag_triples
        snr = blk._triple_snrs(cfg, key, triples)
        return triples[np.argmax(np.min(snr, axis=(-3, -2, -1)), axis=1)]
    return blk.selection(scheme, cfg)


def fairness_audit(spec: ExperimentSpec, trials: int | None = None) -> list[np.ndarray]:
    """Per-cluster selection frequencies of each user at the first grid SNR."""
    scheme = spec.scheme
    if not isinstance(scheme, str) or scheme.startswith("mc-"):
        raise DomainError("fairness audit needs a scheduling scheme")
    trials = trials if trials is not None else spec.trial_counts[0]
    cfg = spec.config.with_snr_db(spec.snr_db[0])
    counts = [np.zeros(m, dtype=np.int64) for m in spec.config.cluster_sizes]
    for blk in _iter_blocks(spec.config, spec.rss, trials, spec.seed):
        sel = _selected_triples(blk, scheme, cfg)
        for k in range(3):
            counts[k] += np.bincount(sel[:, k], minlength=spec.config.cluster_sizes[k])
    return [c / trials for c in counts]


def iter_selected_stream_snrs(scheme: str, cfg: NetworkConfig, trials: int, seed: int,
                              rss: RssBasis | None = None) -> Iterable[np.ndarray]:
    """Stream SNRs ``(n, 3, 2, N)`` of the selected triples, block by block."""
    rss = rss if rss is not None else make_rss(cfg)
    for blk in _iter_blocks(cfg, rss, trials, seed):
        yield blk.stream_snrs(scheme, cfg)


# serialization ------------------------------------------------------------------------

def curves_csv(curves: Iterable[OutageCurve]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for c in curves:
        for row in c.rows():
            w.writerow(row)
    return buf.getvalue()


def curves_json(curves: Iterable[OutageCurve]) -> str:
    return json.dumps([row for c in curves for row in c.rows()], indent=2)


def write_curves(curves: Iterable[OutageCurve], path: str | Path, fmt: str = "csv") -> Path:
    curves = list(curves)
    text = curves_csv(curves) if fmt == "csv" else curves_json(curves)
    path = Path(path)
    path.write_text(text)
    return path


def analytic_curve(which: str, config: NetworkConfig, snr_db: Sequence[float], rho_th: float = 1.0) -> OutageCurve:
    """Closed-form bound evaluated on a grid, in the Monte Carlo curve schema.

    ``trials`` and ``outages`` are 0 and the interval collapses to the value.
    """
    from . import analysis

    M = (config.cluster_sizes[0],) if which.endswith("gs") else config.cluster_sizes
    pts = []
    for s in snr_db:
        p = analysis.evaluate_bound(which, rho_th, 10 ** (s / 10), M)
        pts.append(CurvePoint(float(s), 0, 0, p, p, p))
    return OutageCurve(which, config.to_dict(), pts, rho_th, 0, 0)


__all__ = [
    "CSV_COLUMNS",
    "SCHEMES",
    "BlockData",
    "CurvePoint",
    "ExperimentSpec",
    "OutageCurve",
    "analytic_curve",
    "curves_csv",
    "curves_json",
    "estimate_outage",
    "fairness_audit",
    "iter_selected_stream_snrs",
    "run_comparison",
    "run_sweep",
    "trial_checksum",
    "wilson_interval",
    "write_curves",
]
