"""ER-UA chain: RSS-guided local beamforming, ECGs, fixed-gain relay, stream SNRs.

Array helpers broadcast over leading batch axes. An ECG table holds, for one
user, the gains toward every column of the RSS basis ``E``; column
``m * N + n`` is stream ``n`` of direction ``m``.
"""

from __future__ import annotations

import numpy as np

from .channel import NetworkConfig, RssBasis, direction, partners, user_directions
from .errors import DegenerateChannelError, DomainError

COND_LIMIT = 1e12


def _check_invertible(H: np.ndarray) -> None:
    if H.ndim == 2 and np.linalg.cond(H) > COND_LIMIT:
        raise DegenerateChannelError("channel matrix is numerically singular")


def rss_beamformer(H_k, e, P_T: float, N: int) -> np.ndarray:
    """Beamformer that lands user k's stream exactly on reference direction ``e``.

    ``v = sqrt(P_T / 2N) * normalize(H_k^{-1} e)``.
    """
    H_k = np.asarray(H_k, dtype=complex)
    _check_invertible(H_k)
    x = np.linalg.solve(H_k, np.asarray(e, dtype=complex)[..., None])[..., 0]
    return np.sqrt(P_T / (2 * N)) * x / np.linalg.norm(x, axis=-1, keepdims=True)


def ecg(H_k, e) -> float | np.ndarray:
    """Equivalent channel gain ``||H_k^{-1} e||^{-2}`` via one linear solve."""
    H_k = np.asarray(H_k, dtype=complex)
    _check_invertible(H_k)
    x = np.linalg.solve(H_k, np.asarray(e, dtype=complex)[..., None])[..., 0]
    out = 1.0 / np.sum(np.abs(x) ** 2, axis=-1)
    return float(out) if out.ndim == 0 else out


def ecg_table(H, E) -> np.ndarray:
    """Gains toward every column of ``E`` for a stack of square channels.

    Parameters
    ----------
    H : array, shape (..., 3N, 3N)
    E : array, shape (3N, 3N)

    Returns
    -------
    array, shape (..., 3N)
    """
    H = np.asarray(H, dtype=complex)
    _check_invertible(H)
    X = np.linalg.solve(H, np.broadcast_to(np.asarray(E, dtype=complex), H.shape))
    with np.errstate(divide="ignore"):
        return 1.0 / np.sum(np.abs(X) ** 2, axis=-2)


def ecg_table_3x3(H) -> np.ndarray:
    """Identity-RSS gains of ``(..., 3, 3)`` channels via cofactors.

    Column i of ``H^{-1}`` is the cross product of the other two rows over
    ``det H``, so ``alpha_i^2 = |det H|^2 / ||r_{i+1} x r_{i+2}||^2``. A
    singular channel gives zero gain.
    """
    H = np.asarray(H, dtype=complex)
    r = [H[..., i, :] for i in range(3)]
    cof = [np.cross(r[(i + 1) % 3], r[(i + 2) % 3]) for i in range(3)]
    det2 = np.abs(np.sum(r[0] * cof[0], axis=-1)) ** 2
    den = np.stack([np.sum(np.abs(c) ** 2, axis=-1) for c in cof], axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = det2[..., None] / den
    return np.where(den > 0, out, 0.0)


def user_min_ecg(table, k: int, N: int) -> np.ndarray:
    """Smallest ECG over the 2N streams cluster ``k`` actually uses."""
    table = np.asarray(table)
    cols = [m * N + n for m in user_directions(k) for n in range(N)]
    return np.min(table[..., cols], axis=-1)


def fixed_relay_gain(config: NetworkConfig) -> float:
    """Long-term relay gain ``sqrt(P_R / (3 (P_T + N sigma_R^2)))``."""
    return float(np.sqrt(config.P_R / (3.0 * (config.P_T + config.N * config.sigma_R2))))


def _positive(*xs) -> None:
    for x in xs:
        if np.any(np.asarray(x) <= 0):
            raise DomainError("gains and SNRs must be positive")


def erua_stream_snr(alpha2_tx, alpha2_rx, config: NetworkConfig):
    """End-to-end SNR of one stream given both hops' ECGs.

    ``rho = (1/2N) rho1 rho2 / (rho2 + 3 (SNR_T + N))`` with
    ``rho1 = SNR_T alpha2_tx`` and ``rho2 = SNR_R alpha2_rx``. ``SNR_R`` is
    ``P_R / sigma_S2``, the power ratio seen by the receiving user.
    """
    _positive(alpha2_tx, alpha2_rx)
    r1 = config.snr_T * np.asarray(alpha2_tx, dtype=float)
    r2 = config.snr_R * np.asarray(alpha2_rx, dtype=float)
    out = r1 * r2 / (r2 + 3.0 * (config.snr_T + config.N)) / (2 * config.N)
    return float(out) if out.ndim == 0 else out


def g_metric(x, y, snr):
    """``g(x, y) = x y SNR / (2 y + 6 (1 + 1/SNR))``; x is the sender's gain."""
    _positive(x, y, snr)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = x * y * snr / (2.0 * y + 6.0 * (1.0 + 1.0 / snr))
    return float(out) if out.ndim == 0 else out


def _g(x, y, snr):
    # unchecked variant for the Monte Carlo hot path
    return x * y * snr / (2.0 * y + 6.0 * (1.0 + 1.0 / snr))


def stream_snrs_from_tables(tables, config: NetworkConfig) -> np.ndarray:
    """Stream SNRs ``(..., 3, 2, N)`` of a triple from its three ECG tables.

    Entry ``[k, i, n]`` is the link from ``partners(k)[i]`` to ``k``.
    """
    N = config.N
    batch = np.shape(tables[0])[:-1]
    out = np.empty(batch + (3, 2, N))
    c = 3.0 * (config.snr_T + N)
    for k in range(3):
        for i, l in enumerate(partners(k)):
            m = direction(k, l)
            sl = slice(m * N, (m + 1) * N)
            r1 = config.snr_T * tables[l][..., sl]
            r2 = config.snr_R * tables[k][..., sl]
            out[..., k, i, :] = r1 * r2 / (r2 + c) / (2 * N)
    return out


def erua_min_snr(H: tuple, rss: RssBasis, config: NetworkConfig) -> float:
    """Minimum over the 6N streams of a user triple ``H = (H_1, H_2, H_3)``."""
    tables = [ecg_table(np.asarray(h, dtype=complex), rss.E) for h in H]
    return float(np.min(stream_snrs_from_tables(tables, config)))


def group_metric(alpha2_triple, config: NetworkConfig):
    """Group-level SNR built from the three users' min-ECGs.

    Uses the smallest and middle of the three gains; permutation invariant.
    Broadcasts over leading axes of an ``(..., 3)`` array.
    """
    a = np.asarray(alpha2_triple, dtype=float)
    _positive(a)
    out = _group_metric(a, config)
    return float(out) if out.ndim == 0 else out


def _group_metric(a: np.ndarray, config: NetworkConfig) -> np.ndarray:
    s = np.sort(a, axis=-1)
    lo, mid = s[..., 0], s[..., 1]
    sr, st, N = config.snr_R, config.snr_T, config.N
    return (st * lo * sr * mid) / (sr * mid + 3.0 * (st + N)) / (2 * N)


# bound variables (N = 1, symmetric SNR) ------------------------------------

def min_eigenvalues(H) -> np.ndarray:
    """``lambda_min(H H^H)`` for a stack of square channels."""
    H = np.asarray(H, dtype=complex)
    return np.linalg.eigvalsh(H @ np.swapaxes(H, -1, -2).conj())[..., 0]


def rho_lb_cs(lams, snr: float) -> np.ndarray:
    """``g`` of the smallest and middle of the per-cluster best ``lambda_min``.

    ``lams[k]`` has shape ``(..., M_k)``.
    """
    best = np.stack([np.max(l, axis=-1) for l in lams], axis=-1)
    s = np.sort(best, axis=-1)
    return _g(s[..., 0], s[..., 1], snr)


def rho_ub_cs(alpha_I_1, alpha_I_2, snr: float) -> np.ndarray:
    """``g`` of the best direction-I gains in clusters 1 and 2."""
    return _g(np.max(alpha_I_1, axis=-1), np.max(alpha_I_2, axis=-1), snr)


def rho_lb_gs(lams, snr: float) -> np.ndarray:
    """Best group of ``g(lambda_[3], lambda_[2])`` over the diagonal groups."""
    trip = np.stack(list(lams), axis=-1)  # (..., M, 3)
    s = np.sort(trip, axis=-1)
    return np.max(_g(s[..., 0], s[..., 1], snr), axis=-1)


rho_ub_gs = rho_ub_cs
