"""Min-UA chain: joint signal space alignment, ZF variable-gain relay, stream SNRs.

All array functions broadcast over leading batch axes, so a Monte Carlo block
goes through the same code as a single instance.

Beamformers are keyed ``(tx, rx)`` with 0-based cluster indices: the entry is
the normalized ``N_T x N`` matrix user ``tx`` applies to its message for
``rx``. The receiver reuses its own transmit beamformer toward the same
partner as its receive filter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import NetworkConfig, direction, partners
from .errors import DegenerateChannelError, DomainError, IllConditionedAlignmentError

COND_LIMIT = 1e12


@dataclass(frozen=True)
class SsaPair:
    """Aligned pair: ``H_l @ V_tilde_kl == H_k @ V_tilde_lk == F_m``."""

    V_tilde_kl: np.ndarray
    V_tilde_lk: np.ndarray
    F_m: np.ndarray


def _herm(X: np.ndarray) -> np.ndarray:
    return np.swapaxes(X, -1, -2).conj()


def solve_ssa_pair(H_l, H_k, N: int) -> SsaPair:
    """Jointly align users ``l`` and ``k`` in one N-dimensional relay subspace.

    The null space of ``[H_l, -H_k]`` is split into its top half (user l's
    beamformer for its message to k) and bottom half (user k's beamformer for
    its message to l), then scaled so the stacked pair has unit Frobenius norm.

    When the null space is larger than N (degenerate channels) the vectors with
    the smallest singular values are kept, exact zeros first.
    """
    H_l = np.asarray(H_l, dtype=complex)
    H_k = np.asarray(H_k, dtype=complex)
    if H_l.shape != H_k.shape or H_l.shape[-2:] != (3 * N, 2 * N):
        raise DomainError(f"expected two {3 * N}x{2 * N} channels, got {H_l.shape} and {H_k.shape}")
    A = np.concatenate([H_l, -H_k], axis=-1)
    _, s, vh = np.linalg.svd(A, full_matrices=True)
    # the right singular vectors past row 3N have exactly zero singular value
    basis = _herm(vh[..., -N:, :]) / np.sqrt(N)
    n_t = H_l.shape[-1]
    V_kl = basis[..., :n_t, :]
    V_lk = basis[..., n_t:, :]
    F = H_l @ V_kl
    if F.ndim == 2 and np.linalg.norm(F) <= 1e-12 * max(1.0, np.linalg.norm(A)):
        raise DegenerateChannelError("aligned subspace collapsed to zero")
    return SsaPair(V_kl, V_lk, F)


def ssa_beamformers(H: tuple) -> tuple[dict, list]:
    """Pairwise beamformers and aligned subspaces for a user triple.

    Returns ``(beams, F)`` where ``beams[(tx, rx)]`` is user tx's normalized
    beamformer toward rx and ``F[m]`` the aligned subspace of direction m.
    """
    N = H[0].shape[-1] // 2
    beams: dict = {}
    F: list = [None, None, None]
    for a, b in ((0, 1), (0, 2), (1, 2)):
        pair = solve_ssa_pair(H[a], H[b], N)
        beams[(a, b)] = pair.V_tilde_kl
        beams[(b, a)] = pair.V_tilde_lk
        F[direction(a, b)] = pair.F_m
    return beams, F


@dataclass(frozen=True)
class MinUaFeatures:
    """SNR-independent quantities of a Min-UA link.

    ``relay_noise[..., k, i, n]`` is ``[F_m^H W W^H F_m]_{nn}`` and
    ``user_noise[..., k, i, n]`` is the squared norm of receiver k's filter
    column, for partner ``partners(k)[i]`` on direction ``m``.
    """

    tr_W: np.ndarray
    tr_WW: np.ndarray
    relay_noise: np.ndarray
    user_noise: np.ndarray
    cond: np.ndarray


def _safe_inv(X: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.inv(X)
    except np.linalg.LinAlgError:
        flat = X.reshape((-1,) + X.shape[-2:])
        out = np.empty_like(flat)
        for i, x in enumerate(flat):
            try:
                out[i] = np.linalg.inv(x)
            except np.linalg.LinAlgError:
                out[i] = np.inf
        return out.reshape(X.shape)


def _features_from(beams: dict, Fm: list, N: int) -> MinUaFeatures:
    F = np.concatenate(Fm, axis=-1)
    W = _safe_inv(F @ _herm(F))
    tr_W = np.real(np.trace(W, axis1=-2, axis2=-1))
    tr_WW = np.sum(np.abs(W) ** 2, axis=(-2, -1))
    col = np.sum(np.abs(W @ F) ** 2, axis=-2)  # (..., 3N)
    batch = F.shape[:-2]
    relay_noise = np.empty(batch + (3, 2, N))
    user_noise = np.empty(batch + (3, 2, N))
    for k in range(3):
        for i, l in enumerate(partners(k)):
            m = direction(k, l)
            relay_noise[..., k, i, :] = col[..., m * N : (m + 1) * N]
            user_noise[..., k, i, :] = np.sum(np.abs(beams[(k, l)]) ** 2, axis=-2)
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(F)
    return MinUaFeatures(tr_W, tr_WW, relay_noise, user_noise, cond)


def minua_features(H1, H2, H3) -> MinUaFeatures:
    H = tuple(np.asarray(h, dtype=complex) for h in (H1, H2, H3))
    beams, Fm = ssa_beamformers(H)
    return _features_from(beams, Fm, H[0].shape[-1] // 2)


def triple_features(Hc: tuple, triples: np.ndarray) -> MinUaFeatures:
    """Features of many candidate triples, sharing the pairwise alignments.

    Parameters
    ----------
    Hc : per-cluster channel stacks, ``Hc[k]`` of shape (B, M_k, 3N, 2N)
    triples : int array (Q, 3) of 0-based user indices

    Returns
    -------
    MinUaFeatures with batch shape (B, Q)
    """
    N = Hc[0].shape[-1] // 2
    pair_beams = {}
    pair_F = {}
    for a, b in ((0, 1), (0, 2), (1, 2)):
        Ma, Mb = Hc[a].shape[1], Hc[b].shape[1]
        shape = Hc[a].shape[:1] + (Ma, Mb) + Hc[a].shape[2:]
        Ha = np.broadcast_to(Hc[a][:, :, None], shape)
        Hb = np.broadcast_to(Hc[b][:, None, :], shape)
        pair = solve_ssa_pair(Ha, Hb, N)
        pair_beams[(a, b)] = pair.V_tilde_kl
        pair_beams[(b, a)] = pair.V_tilde_lk
        pair_F[(a, b)] = pair.F_m
    j = [triples[:, k] for k in range(3)]
    beams = {}
    Fm: list = [None, None, None]
    for a, b in ((0, 1), (0, 2), (1, 2)):
        beams[(a, b)] = pair_beams[(a, b)][:, j[a], j[b]]
        beams[(b, a)] = pair_beams[(b, a)][:, j[a], j[b]]
        Fm[direction(a, b)] = pair_F[(a, b)][:, j[a], j[b]]
    return _features_from(beams, Fm, N)


def relay_gain(tr_W, tr_WW, config: NetworkConfig):
    """Variable relay gain ``sqrt(P_R / (P_T tr W + sigma_R^2 tr W W^H))``."""
    return np.sqrt(config.P_R / (config.P_T * tr_W + config.sigma_R2 * tr_WW))


def snrs_from_features(feat: MinUaFeatures, config: NetworkConfig) -> np.ndarray:
    """Stream SNRs of shape ``(..., 3, 2, N)`` from precomputed features."""
    G2 = relay_gain(feat.tr_W, feat.tr_WW, config)[..., None, None, None] ** 2
    with np.errstate(all="ignore"):
        rho = config.P_T * G2 / (G2 * config.sigma_R2 * feat.relay_noise + config.sigma_S2 * feat.user_noise)
    # a singular alignment leaves inf/nan terms; physically the link is dead
    return np.where(np.isfinite(rho), rho, 0.0)


@dataclass(frozen=True)
class MinUaLink:
    """Everything the Min-UA chain produces for one selected triple."""

    F: np.ndarray
    W_tilde: np.ndarray
    G_R: float
    V: dict
    stream_snrs: np.ndarray

    def snr(self, rx: int, tx: int) -> np.ndarray:
        """Per-stream SNRs of link ``tx -> relay -> rx``."""
        return self.stream_snrs[rx, partners(rx).index(tx)]


def build_link(H: tuple, config: NetworkConfig, strict: bool = False) -> MinUaLink:
    """Build the Min-UA link of one user triple ``H = (H_1, H_2, H_3)``.

    With ``strict=True`` a numerically singular aligned space raises
    IllConditionedAlignmentError; otherwise it is kept and its SNRs come out
    at (or near) zero, which counts as an outage.
    """
    H = tuple(np.asarray(h, dtype=complex) for h in H)
    n = 3 * config.N
    for h in H:
        if h.shape != (n, 2 * config.N):
            raise DomainError(f"expected {n}x{2 * config.N} channels, got {h.shape}")
    beams, Fm = ssa_beamformers(H)
    F = np.concatenate(Fm, axis=-1)
    if strict and np.linalg.cond(F) > COND_LIMIT:
        raise IllConditionedAlignmentError("aligned relay subspaces are numerically dependent")
    W = _safe_inv(F @ _herm(F))
    feat = minua_features(*H)
    G = float(relay_gain(feat.tr_W, feat.tr_WW, config))
    V = {key: np.sqrt(config.P_T) * v for key, v in beams.items()}
    return MinUaLink(F, W, G, V, snrs_from_features(feat, config))


def minua_stream_snrs(link: MinUaLink) -> np.ndarray:
    return link.stream_snrs


def minua_min_snr(H: tuple, config: NetworkConfig, strict: bool = False) -> float:
    """Minimum of the 6N stream SNRs of a user triple."""
    return float(np.min(build_link(H, config, strict).stream_snrs))


def minua_min_snr_batch(H1, H2, H3, config: NetworkConfig) -> np.ndarray:
    feat = minua_features(H1, H2, H3)
    return np.min(snrs_from_features(feat, config), axis=(-3, -2, -1))
