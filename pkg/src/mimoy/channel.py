"""Network configuration, reference signal space and fading realizations.

Randomness is organized in fixed-size trial blocks. Block ``b`` of master seed
``s`` draws from a Philox stream keyed by ``SeedSequence([s, b, stream])``, so
trial ``t`` always comes from the same place no matter how blocks are spread
over workers or in which order they run.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .mathkit import haar_unitary

TRIAL_BLOCK = 2048

# stream tags for the per-block generators
STREAM_CHANNEL = 0
STREAM_SELECT = 1
STREAM_FALLBACK = 2

# pairing map: each unordered cluster pair owns one reference direction
_DIRECTION = {(0, 1): 0, (0, 2): 1, (1, 2): 2}
DIRECTION_NAMES = ("I", "II", "III")


def direction(k: int, l: int) -> int:
    """Reference-direction index shared by clusters ``k`` and ``l`` (0-based)."""
    if k == l:
        raise ValueError("a cluster is not paired with itself")
    return _DIRECTION[(min(k, l), max(k, l))]


def partners(k: int) -> tuple[int, int]:
    """The two clusters that exchange messages with cluster ``k``."""
    return tuple(l for l in range(3) if l != k)  # type: ignore[return-value]


def user_directions(k: int) -> tuple[int, int]:
    """Reference directions carrying cluster ``k``'s traffic."""
    a, b = partners(k)
    return direction(k, a), direction(k, b)


class Mode(str, Enum):
    MIN_UA = "min-ua"
    ER_UA = "er-ua"


class RssMode(str, Enum):
    IDENTITY = "identity"
    HAAR = "haar"


@dataclass(frozen=True)
class NetworkConfig:
    """Antenna counts, cluster sizes, powers and noise levels.

    ``N_T`` and ``N_R`` are derived from ``N`` and ``mode`` when omitted.
    Setting ``group_count`` marks a group-wise setup and forces
    ``cluster_sizes = (M, M, M)``.
    """

    N: int = 1
    mode: Mode = Mode.ER_UA
    cluster_sizes: tuple[int, int, int] | None = None
    group_count: int | None = None
    P_T: float = 10.0
    P_R: float = 10.0
    sigma_R2: float = 1.0
    sigma_S2: float = 1.0
    N_T: int | None = None
    N_R: int | None = None

    def __post_init__(self):
        try:
            mode = Mode(self.mode)
        except ValueError:
            raise ConfigError(f"unknown mode {self.mode!r}; use 'min-ua' or 'er-ua'") from None
        object.__setattr__(self, "mode", mode)
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise ConfigError("N must be a positive integer")
        sizes = self.cluster_sizes
        if self.group_count is not None:
            M = self.group_count
            if M < 1:
                raise ConfigError("group_count must be >= 1")
            if sizes is None:
                sizes = (M, M, M)
            elif tuple(sizes) != (M, M, M):
                raise ConfigError("group-wise setups need cluster_sizes == (M, M, M)")
        if sizes is None:
            sizes = (1, 1, 1)
        sizes = tuple(int(m) for m in sizes)
        if len(sizes) != 3 or min(sizes) < 1:
            raise ConfigError("cluster_sizes must be three integers >= 1")
        object.__setattr__(self, "cluster_sizes", sizes)
        n_r = 3 * self.N
        n_t = 2 * self.N if mode is Mode.MIN_UA else 3 * self.N
        if self.N_R is None:
            object.__setattr__(self, "N_R", n_r)
        if self.N_T is None:
            object.__setattr__(self, "N_T", n_t)
        if self.N_R != n_r:
            raise ConfigError(f"N_R must equal 3N = {n_r}")
        if self.N_T != n_t:
            raise ConfigError(f"N_T must equal {n_t} in {mode.value} mode")
        for name in ("P_T", "P_R", "sigma_R2", "sigma_S2"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ConfigError(f"{name} must be positive and finite")

    # derived quantities -------------------------------------------------
    @property
    def snr_T(self) -> float:
        return self.P_T / self.sigma_R2

    @property
    def snr_R(self) -> float:
        # second-hop SNR; the receiving user's noise sets the scale
        return self.P_R / self.sigma_S2

    @property
    def total_users(self) -> int:
        return sum(self.cluster_sizes)

    @property
    def user_offsets(self) -> tuple[int, int, int]:
        m1, m2, _ = self.cluster_sizes
        return (0, m1, m1 + m2)

    @property
    def is_group_wise(self) -> bool:
        return self.group_count is not None

    def with_snr(self, snr: float) -> "NetworkConfig":
        """Copy with ``P_T / sigma_R2 = P_R / sigma_S2 = snr`` (linear)."""
        return dataclasses.replace(self, P_T=snr * self.sigma_R2, P_R=snr * self.sigma_S2)

    def with_snr_db(self, snr_db: float) -> "NetworkConfig":
        return self.with_snr(10.0 ** (snr_db / 10.0))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["mode"] = self.mode.value
        d["cluster_sizes"] = list(self.cluster_sizes)
        return d

    @classmethod
    def from_file(cls, path: str | Path) -> "NetworkConfig":
        return parse_config(Path(path).read_text())


_INT_KEYS = {"N", "group_count", "N_T", "N_R"}
_FLOAT_KEYS = {"P_T", "P_R", "sigma_R2", "sigma_S2"}


def parse_config(text: str) -> NetworkConfig:
    """Parse the flat ``key = value`` config format.

    Keys are the NetworkConfig field names. ``cluster_sizes`` takes a comma
    separated list, ``mode`` takes ``min-ua`` or ``er-ua``; ``#`` starts a
    comment.
    """
    kwargs: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":"
        if sep not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split(sep, 1))
        try:
            if key in _INT_KEYS:
                kwargs[key] = int(value)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(value)
            elif key == "cluster_sizes":
                kwargs[key] = tuple(int(v) for v in value.strip("()[] ").split(",") if v.strip())
            elif key == "mode":
                kwargs[key] = value.lower()
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from None
    return NetworkConfig(**kwargs)


@dataclass(frozen=True)
class RssBasis:
    """Orthonormal reference signal space ``E`` split into three N-column blocks."""

    E: np.ndarray
    N: int

    def block(self, m: int) -> np.ndarray:
        return self.E[:, m * self.N : (m + 1) * self.N]

    @property
    def blocks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(self.block(m) for m in range(3))  # type: ignore[return-value]


def make_rss(config: NetworkConfig, mode: RssMode | str = RssMode.IDENTITY, seed: int = 0) -> RssBasis:
    mode = RssMode(mode)
    if mode is RssMode.IDENTITY:
        E = np.eye(config.N_R, dtype=complex)
    else:
        E = haar_unitary(config.N_R, seed)
    return RssBasis(E, config.N)


@dataclass(frozen=True)
class ChannelSet:
    """Uplink channels of every candidate user for one trial.

    ``H[k]`` has shape ``(M_k, N_R, N_T)``; indices are 0-based.
    """

    H: tuple[np.ndarray, np.ndarray, np.ndarray]
    seed: int
    trial: int = 0

    def user(self, k: int, j: int) -> np.ndarray:
        return self.H[k][j]


def block_rng(seed: int, block: int, stream: int) -> np.random.Generator:
    """Generator for one (seed, trial block, stream) cell."""
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF, int(block), int(stream)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def _shape_key(config: NetworkConfig) -> tuple:
    return (config.cluster_sizes, config.N_R, config.N_T)


@lru_cache(maxsize=4)
def _cached_block(shape_key: tuple, seed: int, block: int):
    sizes, n_r, n_t = shape_key
    rng = block_rng(seed, block, STREAM_CHANNEL)
    z = rng.standard_normal((TRIAL_BLOCK, sum(sizes), n_r, n_t, 2))
    H = (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)
    H.setflags(write=False)
    return H


def sample_channel_block(config: NetworkConfig, seed: int, block: int) -> tuple[np.ndarray, ...]:
    """All channels of trial block ``block``: per cluster ``(TRIAL_BLOCK, M_k, N_R, N_T)``."""
    H = _cached_block(_shape_key(config), int(seed), int(block))
    off = config.user_offsets
    return tuple(H[:, off[k] : off[k] + config.cluster_sizes[k]] for k in range(3))


def sample_channel_range(config: NetworkConfig, seed: int, start: int, stop: int) -> tuple[np.ndarray, ...]:
    """Channels for trials ``start..stop-1`` stacked on a leading axis."""
    if stop <= start:
        raise ValueError("empty trial range")
    parts = [[], [], []]
    t = start
    while t < stop:
        b, off = divmod(t, TRIAL_BLOCK)
        take = min(stop - t, TRIAL_BLOCK - off)
        blk = sample_channel_block(config, seed, b)
        for k in range(3):
            parts[k].append(blk[k][off : off + take])
        t += take
    return tuple(np.concatenate(p) if len(p) > 1 else p[0] for p in parts)


def sample_channels(config: NetworkConfig, seed: int, trial: int = 0) -> ChannelSet:
    """Channel set of a single trial; identical to row ``trial`` of the batch draws."""
    H = sample_channel_range(config, seed, trial, trial + 1)
    return ChannelSet(tuple(np.array(h[0]) for h in H), int(seed), int(trial))
