import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mimoy import minua
from mimoy.channel import NetworkConfig, sample_channel_range
from mimoy.errors import DomainError, IllConditionedAlignmentError

from conftest import cn
from oracles import minua_noise_oracle


def test_equal_channels_align_exactly():
    H = np.array([[1, 0], [0, 1], [0, 0]], dtype=complex)
    p = minua.solve_ssa_pair(H, H, 1)
    assert np.linalg.norm(H @ p.V_tilde_kl - H @ p.V_tilde_lk) < 1e-14
    assert np.linalg.norm(np.vstack([p.V_tilde_kl, p.V_tilde_lk])) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("N", [1, 2])
def test_random_pair_alignment(rng, N):
    for _ in range(200):
        Hl, Hk = cn(rng, 3 * N, 2 * N), cn(rng, 3 * N, 2 * N)
        p = minua.solve_ssa_pair(Hl, Hk, N)
        assert p.F_m.shape == (3 * N, N)
        assert np.linalg.norm(Hl @ p.V_tilde_kl - Hk @ p.V_tilde_lk) < 1e-10
        stacked = np.vstack([p.V_tilde_kl, p.V_tilde_lk])
        assert abs(np.linalg.norm(stacked) - 1) < 1e-12
        # the stacked columns come from a null space, so they stay orthogonal
        assert np.allclose(stacked.conj().T @ stacked, np.eye(N) / N, atol=1e-12)


def test_pair_shape_checked(rng):
    with pytest.raises(DomainError):
        minua.solve_ssa_pair(cn(rng, 3, 3), cn(rng, 3, 3), 1)


def test_relay_gain_identity_traces():
    c = NetworkConfig(mode="min-ua", P_T=1, P_R=1)
    assert minua.relay_gain(3.0, 3.0, c) == pytest.approx(1 / np.sqrt(6))


def test_stream_snr_synthetic_arithmetic():
    # G^2 = 1/6 with P_T = 2, P_R = 1; unit relay noise term; receive filter
    # column of squared norm 1/2 (the beamformer before the sqrt(P_T) scaling)
    c = NetworkConfig(mode="min-ua", P_T=2, P_R=1)
    shape = (3, 2, 1)
    feat = minua.MinUaFeatures(np.float64(1.5), np.float64(3.0), np.ones(shape), np.full(shape, 0.5), np.float64(1))
    rho = minua.snrs_from_features(feat, c)
    assert np.allclose(rho, 0.5)


def test_beamformer_mean_power(rng):
    c = NetworkConfig(mode="min-ua", cluster_sizes=(1, 1, 1)).with_snr_db(10)
    H = sample_channel_range(c, 2, 0, 10_000)
    beams, _ = minua.ssa_beamformers(tuple(h[:, 0] for h in H))
    p = np.mean(c.P_T * np.sum(np.abs(beams[(0, 1)]) ** 2, axis=(-2, -1)))
    assert p == pytest.approx(c.P_T / 2, rel=0.02)


def test_scaling_channels_keeps_aligned_span(rng):
    Hl, Hk = cn(rng, 3, 2), cn(rng, 3, 2)
    f1 = minua.solve_ssa_pair(Hl, Hk, 1).F_m[:, 0]
    f2 = minua.solve_ssa_pair(3.7 * Hl, 3.7 * Hk, 1).F_m[:, 0]
    assert abs(abs(np.vdot(f1, f2)) / (np.linalg.norm(f1) * np.linalg.norm(f2)) - 1) < 1e-12


@pytest.mark.parametrize("N", [1, 2])
def test_stream_snr_matches_noise_propagation(rng, N):
    c = NetworkConfig(N=N, mode="min-ua", P_T=8.0, P_R=5.0, sigma_R2=1.3, sigma_S2=0.7)
    for trial in range(3):
        H = tuple(cn(rng, 3 * N, 2 * N) for _ in range(3))
        link = minua.build_link(H, c)
        beams, _ = minua.ssa_beamformers(H)
        measured = minua_noise_oracle(H, beams, c, T=100_000, seed=trial)
        assert np.allclose(link.stream_snrs, measured, rtol=0.02)


def test_min_snr_is_min_of_streams(rng, minua_cfg):
    for _ in range(20):
        H = tuple(cn(rng, 3, 2) for _ in range(3))
        link = minua.build_link(H, minua_cfg)
        rho = minua.minua_min_snr(H, minua_cfg)
        assert rho == min(link.stream_snrs.ravel())
        assert np.all(rho <= link.stream_snrs)
        assert link.snr(0, 1).shape == (1,)


def test_batch_matches_single(rng, minua_cfg):
    H = [cn(rng, 16, 3, 2) for _ in range(3)]
    batch = minua.minua_min_snr_batch(*H, minua_cfg)
    single = [minua.minua_min_snr(tuple(h[i] for h in H), minua_cfg) for i in range(16)]
    assert np.allclose(batch, single, rtol=1e-12)


def test_triple_features_match_direct(rng, minua_cfg):
    Hc = tuple(cn(rng, 4, m, 3, 2) for m in (2, 3, 2))
    triples = np.array([[0, 0, 0], [1, 2, 1], [0, 1, 1]])
    f = minua.triple_features(Hc, triples)
    for q, (a, b, d) in enumerate(triples):
        g = minua.minua_features(Hc[0][:, a], Hc[1][:, b], Hc[2][:, d])
        assert np.allclose(f.relay_noise[:, q], g.relay_noise)
        assert np.allclose(f.user_noise[:, q], g.user_noise)


def test_singular_alignment_strict_and_lenient(rng, minua_cfg):
    # users 1 and 2 share a channel, so two aligned directions coincide with
    # the shared column space and F loses rank
    H0 = cn(rng, 3, 2)
    H = (H0, H0, H0)
    with pytest.raises(IllConditionedAlignmentError):
        minua.build_link(H, minua_cfg, strict=True)
    assert minua.minua_min_snr(H, minua_cfg) < 1e-6


def test_F_invertible_across_many_draws():
    c = NetworkConfig(mode="min-ua", cluster_sizes=(1, 1, 1))
    H = sample_channel_range(c, 7, 0, 20_000)
    f = minua.minua_features(*(h[:, 0] for h in H))
    assert np.all(f.cond < minua.COND_LIMIT)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), N=st.sampled_from([1, 2]))
def test_alignment_property(seed, N):
    r = np.random.default_rng(seed)
    H = tuple(cn(r, 3 * N, 2 * N) for _ in range(3))
    beams, F = minua.ssa_beamformers(H)
    for a, b in ((0, 1), (0, 2), (1, 2)):
        assert np.linalg.norm(H[a] @ beams[(a, b)] - H[b] @ beams[(b, a)]) < 1e-9
    assert np.all(minua.build_link(H, NetworkConfig(N=N, mode="min-ua")).stream_snrs >= 0)
