"""Event-driven simulation of the timer contention and feedback protocols.

Each protocol run replays the message exchange between the relay and the
candidate users, keeps a FeedbackLedger of what was sent and computed, and
returns the resulting ScheduleDecision. With ``guard_time = 0`` and distinct
metrics the decisions coincide with the pure functions in ``scheduling``.
"""

from __future__ import annotations

import csv
import heapq
import io
import json
from dataclasses import dataclass, field, fields

import numpy as np

from . import erua
from .channel import Mode, NetworkConfig
from .errors import ConfigError, DomainError
from .scheduling import ScheduleDecision, _cluster_coords, _coord_array, coordinate_scale

ANALOG_BITS = 32
INDEX_BITS = 2
LEDGER_FIELDS = ("beacons", "responses", "feedback_msgs", "feedback_bits", "relay_metric_ops", "user_metric_ops")


@dataclass(frozen=True)
class ProtocolConfig:
    """Timer clock period, collision guard and per-message latencies (seconds)."""

    T: float = 1.0
    guard_time: float = 0.0
    beacon_latency: float = 0.0
    processing_latency: float = 0.0

    def __post_init__(self):
        if not self.T > 0:
            raise ConfigError("clock period T must be positive")
        if self.guard_time < 0:
            raise ConfigError("guard_time must be nonnegative")
        for name in ("beacon_latency", "processing_latency"):
            v = getattr(self, name)
            if v < 0 or v >= self.T:
                raise ConfigError(f"{name} must lie in [0, T)")


@dataclass
class FeedbackLedger:
    """Message, bit and computation counters of one protocol run.

    ``retries`` counts collisions resolved by lexicographic order; it is kept
    apart from the six serialized counters.
    """

    beacons: int = 0
    responses: int = 0
    feedback_msgs: int = 0
    feedback_bits: int = 0
    relay_metric_ops: int = 0
    user_metric_ops: int = 0
    retries: int = 0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise DomainError(f"ledger counter {f.name} must be nonnegative")

    def add_feedback(self, count: int, bits_each: int) -> None:
        self.feedback_msgs += count
        self.feedback_bits += count * bits_each

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in LEDGER_FIELDS}

    def __add__(self, other: "FeedbackLedger") -> "FeedbackLedger":
        return FeedbackLedger(**{f.name: getattr(self, f.name) + getattr(other, f.name) for f in fields(self)})


@dataclass(frozen=True)
class ProtocolOutcome:
    decision: ScheduleDecision
    elapsed: float
    ledger: FeedbackLedger
    collision: bool = False
    events: tuple = field(default=(), compare=False)


# timer contention -----------------------------------------------------------

def timer_round(delays, pconfig: ProtocolConfig) -> tuple[int, bool]:
    """Run one contention round and return ``(winner, collision)``.

    Every candidate arms a timer; the first expiry wins. A second expiry
    within ``guard_time`` of the first marks a collision, which is resolved in
    favour of the earlier candidate index.
    """
    d = np.asarray(delays, dtype=float).ravel()
    if d.size == 0:
        raise DomainError("timer round needs at least one candidate")
    queue = [(float(t), i) for i, t in enumerate(d)]
    heapq.heapify(queue)
    t0, winner = heapq.heappop(queue)
    collision = bool(queue) and queue[0][0] - t0 < pconfig.guard_time
    return winner, collision


def _round_time(delay: float, pconfig: ProtocolConfig) -> float:
    return pconfig.beacon_latency + delay + pconfig.processing_latency


def minua_delays(values: np.ndarray, N: int, T: float) -> np.ndarray:
    """Timer delays proportional to the coordinate, full scale mapped to T."""
    return np.asarray(values, dtype=float) / coordinate_scale(N) * T


def erua_delays(alpha2: np.ndarray, T: float) -> np.ndarray:
    """Inverse-metric delays ``T / alpha^2``."""
    a = np.asarray(alpha2, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(a > 0, T / a, np.inf)


def run_distributed_cs_minua(coords, pconfig: ProtocolConfig, N: int = 1) -> ProtocolOutcome:
    """Three beacon rounds; the first expiring responder wins the round.

    ``coords`` holds per-cluster coordinates (AngularCoordinate lists or
    ``(M_k, 3)`` arrays). Users of clusters already served stay silent.
    """
    if coords and not isinstance(coords[0], np.ndarray):
        first = coords[0][0]
        N = getattr(first, "N", N)
    cl = _cluster_coords(coords)
    ledger = FeedbackLedger(user_metric_ops=sum(c.shape[0] for c in cl))
    alive = [True, True, True]
    selected = [0, 0, 0]
    elapsed = 0.0
    collision = False
    events = []
    for m in range(3):
        ledger.beacons += 1
        cand = [(k, j) for k in range(3) if alive[k] for j in range(cl[k].shape[0])]
        delays = minua_delays(np.array([cl[k][j, m] for k, j in cand]), N, pconfig.T)
        w, col = timer_round(delays, pconfig)
        if col:
            ledger.retries += 1
            collision = True
        k, j = cand[w]
        ledger.responses += 1
        selected[k] = j
        alive[k] = False
        elapsed += _round_time(float(delays[w]), pconfig)
        events.append(("round", m, k, j, float(delays[w])))
    dec = ScheduleDecision(tuple(selected), "distributed-cs")
    return ProtocolOutcome(dec, elapsed, ledger, collision, tuple(events))


def run_distributed_cs_erua(ecgs, pconfig: ProtocolConfig) -> ProtocolOutcome:
    """One beacon, then an independent timer contention inside every cluster."""
    ecgs = [np.asarray(a, dtype=float).ravel() for a in ecgs]
    ledger = FeedbackLedger(beacons=1, user_metric_ops=sum(a.size for a in ecgs))
    selected = []
    collision = False
    slowest = 0.0
    events = []
    for k, a in enumerate(ecgs):
        delays = erua_delays(a, pconfig.T)
        w, col = timer_round(delays, pconfig)
        if col:
            ledger.retries += 1
            collision = True
        ledger.responses += 1
        selected.append(w)
        slowest = max(slowest, float(delays[w]))
        events.append(("cluster", k, w, float(delays[w])))
    # the contentions run in parallel after the shared beacon
    elapsed = _round_time(slowest, pconfig)
    dec = ScheduleDecision(tuple(selected), "distributed-cs")
    return ProtocolOutcome(dec, elapsed, ledger, collision, tuple(events))


def run_distributed_gs(metrics, pconfig: ProtocolConfig, mode: Mode | str,
                       config: NetworkConfig | None = None, fallback_seed: int = 0) -> ProtocolOutcome:
    """Group-wise feedback protocol.

    Min-UA: ``metrics`` is ``(M, 3, 3)`` (group, user, direction) coordinates.
    Every user first reports its best direction index in two bits; the relay
    keeps groups whose three indices differ and asks their users for the
    analog minimum coordinate, then picks the smallest sum.

    ER-UA: ``metrics`` is ``(M, 3)`` min-ECGs, all fed back as analog values,
    and the relay evaluates the group metric (needs ``config``).
    """
    mode = Mode(mode)
    ledger = FeedbackLedger(beacons=1)
    events = []
    elapsed = pconfig.beacon_latency
    if mode is Mode.MIN_UA:
        gc = np.asarray([[_coord_array(c) for c in grp] for grp in metrics], dtype=float)
        M = gc.shape[0]
        ledger.user_metric_ops = 3 * M
        best = np.argmin(gc, axis=-1)
        ledger.add_feedback(3 * M, INDEX_BITS)
        elapsed += pconfig.processing_latency
        survive = [p for p in range(M) if len(set(best[p].tolist())) == 3]
        events.append(("phase1", tuple(survive)))
        if survive:
            ledger.beacons += 1  # relay announces the surviving groups
            ledger.add_feedback(3 * len(survive), ANALOG_BITS)
            ledger.relay_metric_ops = M
            sums = [float(np.sum(np.min(gc[p], axis=-1))) for p in survive]
            p = survive[int(np.argmin(sums))]
            elapsed += pconfig.beacon_latency + pconfig.processing_latency
        else:
            ledger.relay_metric_ops = M
            p = int(np.random.default_rng(fallback_seed).integers(0, M))
        events.append(("phase2", p))
        dec = ScheduleDecision((p, p, p), "distributed-gs", group=p,
                               trace=np.isin(np.arange(M), survive))
    else:
        if config is None:
            raise DomainError("ER-UA group-wise feedback needs the network config")
        g = np.asarray(metrics, dtype=float)
        M = g.shape[0]
        ledger.user_metric_ops = 3 * M
        ledger.add_feedback(3 * M, ANALOG_BITS)
        ledger.relay_metric_ops = M
        gm = erua._group_metric(g, config)
        p = int(np.argmax(gm))
        elapsed += pconfig.processing_latency
        events.append(("select", p))
        dec = ScheduleDecision((p, p, p), "distributed-gs", group=p, trace=gm)
    return ProtocolOutcome(dec, elapsed, ledger, False, tuple(events))


# accounting -------------------------------------------------------------------

def complexity_report(scheme: str, config: NetworkConfig) -> FeedbackLedger:
    """Nominal counters of a scheduling scheme, without running it.

    Centralized schemes feed back full channel matrices (32 bits per real
    entry); the relay then enumerates every candidate triple (CS) or group (GS).
    Distributed CS needs no relay computation; distributed GS synthesizes one
    metric per group. Distributed users each compute one local metric.
    """
    m1, m2, m3 = config.cluster_sizes
    users = m1 + m2 + m3
    csi_bits = 2 * config.N_R * config.N_T * ANALOG_BITS
    if scheme == "centralized-cs":
        led = FeedbackLedger(relay_metric_ops=m1 * m2 * m3)
        led.add_feedback(users, csi_bits)
    elif scheme == "centralized-gs":
        led = FeedbackLedger(relay_metric_ops=m1)
        led.add_feedback(users, csi_bits)
    elif scheme == "distributed-cs":
        beacons = 3 if config.mode is Mode.MIN_UA else 1
        led = FeedbackLedger(beacons=beacons, responses=3, user_metric_ops=users)
    elif scheme == "distributed-gs":
        if not (m1 == m2 == m3):
            raise DomainError("group-wise schemes need equal cluster sizes")
        led = FeedbackLedger(beacons=1, relay_metric_ops=m1, user_metric_ops=users)
        if config.mode is Mode.MIN_UA:
            led.add_feedback(users, INDEX_BITS)
        else:
            led.add_feedback(users, ANALOG_BITS)
    else:
        raise DomainError(f"unknown scheme {scheme!r}")
    return led


def ledger_csv(rows: list[tuple[str, FeedbackLedger]]) -> str:
    """CSV text with a ``scheme`` column followed by the ledger counters."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("scheme",) + LEDGER_FIELDS)
    for name, led in rows:
        d = led.to_dict()
        w.writerow([name] + [d[k] for k in LEDGER_FIELDS])
    return buf.getvalue()


def ledger_json(rows: list[tuple[str, FeedbackLedger]]) -> str:
    return json.dumps([{"scheme": name, **led.to_dict()} for name, led in rows], indent=2)


__all__ = [
    "FeedbackLedger",
    "ProtocolConfig",
    "ProtocolOutcome",
    "complexity_report",
    "ledger_csv",
    "ledger_json",
    "run_distributed_cs_erua",
    "run_distributed_cs_minua",
    "run_distributed_gs",
    "timer_round",
]
