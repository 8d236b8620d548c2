"""Scheduling criteria: centralized and distributed, cluster-wise and group-wise.

Each criterion has a vectorized core working on metric arrays with a leading
trial axis (used by the Monte Carlo harness) and an instance-level wrapper
returning a ScheduleDecision. Indices are 0-based; ties go to the first
candidate in (cluster, intra-cluster index) order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import erua, minua
from .channel import (
    STREAM_FALLBACK,
    STREAM_SELECT,
    TRIAL_BLOCK,
    ChannelSet,
    Mode,
    NetworkConfig,
    RssBasis,
    block_rng,
    user_directions,
)
from .errors import DegenerateChannelError, DomainError
from .mathkit import DEFAULT_TOL, acute_angle, chordal_distance


@dataclass(frozen=True)
class ScheduleDecision:
    """Selected users ``(j_1, j_2, j_3)`` plus the group index for GS schemes."""

    selected: tuple[int, int, int]
    scheme: str
    group: int | None = None
    trace: np.ndarray = field(default_factory=lambda: np.empty(0), compare=False)

    @property
    def one_based(self) -> tuple[int, int, int]:
        return tuple(j + 1 for j in self.selected)  # type: ignore[return-value]


def enumerate_triples(sizes) -> np.ndarray:
    """All ``(j_1, j_2, j_3)`` with ``j_1`` varying fastest, shape ``(Q, 3)``."""
    m1, m2, m3 = sizes
    j3, j2, j1 = np.meshgrid(np.arange(m3), np.arange(m2), np.arange(m1), indexing="ij")
    return np.stack([j1.ravel(), j2.ravel(), j3.ravel()], axis=1)


def _gs_sizes(config: NetworkConfig) -> int:
    m = config.cluster_sizes
    if not (m[0] == m[1] == m[2]):
        raise DomainError("group-wise scheduling needs equal cluster sizes")
    return m[0]


# angular coordinates ---------------------------------------------------------

@dataclass(frozen=True)
class AngularCoordinate:
    """Per-direction alignment coordinates of one Min-UA user.

    Angles in radians for N = 1, chordal distances for N > 1; smaller means
    better aligned with that RSS block.
    """

    values: np.ndarray
    N: int

    @property
    def scale(self) -> float:
        return coordinate_scale(self.N)


def coordinate_scale(N: int) -> float:
    """Largest possible coordinate: pi/2 for angles, sqrt(N) for chordal distances."""
    return np.pi / 2 if N == 1 else float(np.sqrt(N))


def characteristic_subspace(H, tol: float = DEFAULT_TOL, strict: bool = True) -> np.ndarray:
    """Orthonormal basis of the left null space of ``(..., 3N, 2N)`` channels."""
    H = np.asarray(H, dtype=complex)
    n_r, n_t = H.shape[-2:]
    u, s, _ = np.linalg.svd(H, full_matrices=True)
    if strict and np.any(s[..., -1] <= tol * s[..., 0]):
        raise DegenerateChannelError("rank-deficient channel: characteristic subspace is too large")
    return u[..., :, n_t:]


def angular_coordinates_batch(H, rss: RssBasis) -> np.ndarray:
    """Coordinates ``(..., 3)`` for a stack of Min-UA channels."""
    N = rss.N
    R = characteristic_subspace(H, strict=False)
    if N == 1:
        r = R[..., 0]
        return np.stack([acute_angle(r, np.broadcast_to(rss.E[:, m], r.shape)) for m in range(3)], axis=-1)
    return np.stack(
        [chordal_distance(R, np.broadcast_to(rss.block(m), R.shape)) for m in range(3)], axis=-1
    )


def angular_coordinate(H, rss: RssBasis, N: int) -> AngularCoordinate:
    H = np.asarray(H, dtype=complex)
    if H.shape != (3 * N, 2 * N):
        raise DomainError(f"expected a {3 * N}x{2 * N} channel")
    characteristic_subspace(H, strict=True)
    return AngularCoordinate(np.asarray(angular_coordinates_batch(H, rss)), N)


def _coord_array(c) -> np.ndarray:
    if isinstance(c, AngularCoordinate):
        return np.asarray(c.values, dtype=float)
    return np.asarray(c, dtype=float)


def _cluster_coords(coords) -> list[np.ndarray]:
    """Accept per-cluster lists of AngularCoordinate or ``(M_k, 3)`` arrays."""
    out = []
    for cl in coords:
        if isinstance(cl, np.ndarray) and cl.ndim == 2:
            out.append(cl.astype(float))
        else:
            out.append(np.stack([_coord_array(c) for c in cl]))
    return out


# vectorized cores -----------------------------------------------------------

def distributed_cs_minua_batch(coords) -> np.ndarray:
    """Three sequential rounds; round m takes the best-aligned user with e_m.

    ``coords[k]`` has shape (B, M_k, 3). Returns (B, 3) selected indices.
    """
    flat = np.concatenate(coords, axis=1)  # (B, U, 3)
    B, U, _ = flat.shape
    cluster_of = np.concatenate([np.full(c.shape[1], k) for k, c in enumerate(coords)])
    index_of = np.concatenate([np.arange(c.shape[1]) for c in coords])
    alive = np.ones((B, 3), dtype=bool)
    selected = np.zeros((B, 3), dtype=np.int64)
    rows = np.arange(B)
    for m in range(3):
        vals = np.where(alive[:, cluster_of], flat[:, :, m], np.inf)
        w = np.argmin(vals, axis=1)
        k = cluster_of[w]
        selected[rows, k] = index_of[w]
        alive[rows, k] = False
    return selected


def gs_phase1(group_coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Best-aligned direction per user and the survival mask per group.

    ``group_coords`` has shape (B, M, 3 users, 3 directions).
    """
    best = np.argmin(group_coords, axis=-1)  # (B, M, 3)
    b = np.sort(best, axis=-1)
    survive = (b[..., 0] != b[..., 1]) & (b[..., 1] != b[..., 2])
    return best, survive


def distributed_gs_minua_batch(group_coords: np.ndarray, fallback: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two-phase progressive selection; returns (group index, survivor mask)."""
    _, survive = gs_phase1(group_coords)
    phi_sum = np.sum(np.min(group_coords, axis=-1), axis=-1)  # (B, M)
    phi_sum = np.where(survive, phi_sum, np.inf)
    choice = np.argmin(phi_sum, axis=-1)
    any_alive = np.any(survive, axis=-1)
    return np.where(any_alive, choice, fallback), survive


def distributed_cs_erua_batch(min_ecgs) -> np.ndarray:
    """Per-cluster argmax of min-ECG; ``min_ecgs[k]`` has shape (B, M_k)."""
    return np.stack([np.argmax(a, axis=-1) for a in min_ecgs], axis=-1)


def distributed_gs_erua_batch(group_ecgs: np.ndarray, config: NetworkConfig) -> np.ndarray:
    """Argmax of the group metric; ``group_ecgs`` has shape (B, M, 3)."""
    return np.argmax(erua._group_metric(group_ecgs, config), axis=-1)


def random_cs_batch(config: NetworkConfig, seed: int, block: int) -> np.ndarray:
    rng = block_rng(seed, block, STREAM_SELECT)
    u = rng.random((TRIAL_BLOCK, 3))
    sizes = np.asarray(config.cluster_sizes)
    return np.minimum((u * sizes).astype(np.int64), sizes - 1)


def random_gs_batch(config: NetworkConfig, seed: int, block: int) -> np.ndarray:
    M = _gs_sizes(config)
    rng = block_rng(seed, block, STREAM_SELECT)
    u = rng.random(TRIAL_BLOCK)
    return np.minimum((u * M).astype(np.int64), M - 1)


def fallback_groups(config: NetworkConfig, seed: int, block: int) -> np.ndarray:
    M = _gs_sizes(config)
    rng = block_rng(seed, block, STREAM_FALLBACK)
    return rng.integers(0, M, size=TRIAL_BLOCK)


# instance-level criteria ----------------------------------------------------

def triple_min_snrs(channels: ChannelSet, rss: RssBasis, config: NetworkConfig, triples: np.ndarray) -> np.ndarray:
    """Min-SNR of every listed triple in one trial."""
    Hc = tuple(h[None] for h in channels.H)
    if config.mode is Mode.MIN_UA:
        feat = minua.triple_features(Hc, triples)
        return np.min(minua.snrs_from_features(feat, config), axis=(-3, -2, -1))[0]
    tables = [erua.ecg_table(h, rss.E)[0] for h in Hc]
    sel = [tables[k][triples[:, k]] for k in range(3)]
    return np.min(erua.stream_snrs_from_tables(sel, config), axis=(-3, -2, -1))


def centralized_cs(channels: ChannelSet, rss: RssBasis, config: NetworkConfig) -> ScheduleDecision:
    """Exhaustive argmax of min-SNR over all M1*M2*M3 triples."""
    triples = enumerate_triples(config.cluster_sizes)
    metrics = triple_min_snrs(channels, rss, config, triples)
    q = int(np.argmax(metrics))
    return ScheduleDecision(tuple(int(j) for j in triples[q]), "centralized-cs", trace=metrics)


def centralized_gs(channels: ChannelSet, rss: RssBasis, config: NetworkConfig) -> ScheduleDecision:
    """Argmax of min-SNR over the diagonal groups ``(p, p, p)``."""
    M = _gs_sizes(config)
    triples = np.repeat(np.arange(M)[:, None], 3, axis=1)
    metrics = triple_min_snrs(channels, rss, config, triples)
    p = int(np.argmax(metrics))
    return ScheduleDecision((p, p, p), "centralized-gs", group=p, trace=metrics)


def distributed_cs_minua(coords, config: NetworkConfig | None = None) -> ScheduleDecision:
    """Sequential three-round selection from per-cluster angular coordinates."""
    cl = _cluster_coords(coords)
    sel = distributed_cs_minua_batch([c[None] for c in cl])[0]
    return ScheduleDecision(tuple(int(j) for j in sel), "distributed-cs")


def distributed_gs_minua(group_coords, config: NetworkConfig | None = None, fallback_seed: int = 0) -> ScheduleDecision:
    """Progressive two-phase selection.

    ``group_coords`` is indexable as ``[p][k]`` giving user k's coordinate in
    group p (array of shape (M, 3, 3) works).
    """
    gc = np.asarray([[_coord_array(c) for c in grp] for grp in group_coords], dtype=float)
    M = gc.shape[0]
    fb = int(np.random.default_rng(fallback_seed).integers(0, M))
    p, survive = distributed_gs_minua_batch(gc[None], np.array([fb]))
    p = int(p[0])
    return ScheduleDecision((p, p, p), "distributed-gs", group=p, trace=survive[0])


def distributed_cs_erua(min_ecgs, config: NetworkConfig | None = None) -> ScheduleDecision:
    """Each cluster independently keeps its user with the largest min-ECG."""
    sel = distributed_cs_erua_batch([np.asarray(a, dtype=float)[None] for a in min_ecgs])[0]
    return ScheduleDecision(tuple(int(j) for j in sel), "distributed-cs")


def distributed_gs_erua(group_ecgs, config: NetworkConfig) -> ScheduleDecision:
    """Relay picks the group with the largest group metric; ``group_ecgs`` is (M, 3)."""
    g = np.asarray(group_ecgs, dtype=float)
    metrics = erua._group_metric(g, config)
    p = int(np.argmax(metrics))
    return ScheduleDecision((p, p, p), "distributed-gs", group=p, trace=metrics)


def random_selection(config: NetworkConfig, seed: int, trial: int = 0, group_wise: bool = False) -> ScheduleDecision:
    """Uniform pick per cluster (CS) or of one group (GS), reproducible per seed."""
    block, off = divmod(trial, TRIAL_BLOCK)
    if group_wise:
        p = int(random_gs_batch(config, seed, block)[off])
        return ScheduleDecision((p, p, p), "random-gs", group=p)
    sel = random_cs_batch(config, seed, block)[off]
    return ScheduleDecision(tuple(int(j) for j in sel), "random-cs")


# per-user local metrics -------------------------------------------------------

def minua_coordinates(channels: ChannelSet, rss: RssBasis) -> list[np.ndarray]:
    """Per-cluster ``(M_k, 3)`` coordinate arrays of one trial."""
    return [np.asarray(angular_coordinates_batch(h, rss)) for h in channels.H]


def erua_min_ecgs(channels: ChannelSet, rss: RssBasis, config: NetworkConfig) -> list[np.ndarray]:
    """Per-cluster ``(M_k,)`` min-ECG arrays of one trial."""
    return [erua.user_min_ecg(erua.ecg_table(h, rss.E), k, config.N) for k, h in enumerate(channels.H)]


def group_view(per_cluster: list[np.ndarray]) -> np.ndarray:
    """Stack per-cluster arrays into groups: ``out[..., p, k]`` is user p of cluster k."""
    return np.stack(per_cluster, axis=-1) if per_cluster[0].ndim == 1 else np.stack(per_cluster, axis=-2)


__all__ = [
    "AngularCoordinate",
    "ScheduleDecision",
    "angular_coordinate",
    "centralized_cs",
    "centralized_gs",
    "distributed_cs_erua",
    "distributed_cs_minua",
    "distributed_gs_erua",
    "distributed_gs_minua",
    "enumerate_triples",
    "random_selection",
    "user_directions",
]
