"""Independent oracles shared by the module tests and the acceptance run.

The quadrature oracles integrate order-statistic densities numerically to
check the closed-form outage bounds.

The noise-propagation oracles push explicit symbols and noise through both
hops of the two-way relay chain and measure each stream's SNR from the
samples, without using any closed-form SNR expression.
"""

import math

import numpy as np
from scipy import integrate

from mimoy.analysis import bound_params
from mimoy.channel import direction, partners

PAIRS = ((0, 1), (0, 2), (1, 2))


def _cn(rng, *shape, var=1.0):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(var / 2)


def _propagate(H, tx_beams, relay, rx_filters, config, T, rng):
    """Shared two-hop simulation, returning measured SNRs (3, 2, N).

    tx_beams[(k, l)]  : N_T x N beamformer of user k for its message to l
    relay             : matrix applied by the relay to its received signal
    rx_filters[(k, l)]: N_T x N receive filter of user k for the stream from l

    The chain runs twice: once without noise, where the gain of every desired
    symbol is read off and the leftover interference must vanish, and once
    with noise only, where the post-filter noise power is measured.
    """
    N = config.N
    n_r = H[0].shape[0]

    def run(d, noise):
        s = [sum(tx_beams[(k, l)] @ d[(k, l)] for l in partners(k)) for k in range(3)]
        yR = sum(H[k] @ s[k] for k in range(3))
        if noise:
            yR = yR + _cn(rng, n_r, T, var=config.sigma_R2)
        xR = relay @ yR
        out = {}
        for k in range(3):
            yk = H[k].conj().T @ xR - H[k].conj().T @ relay @ H[k] @ s[k]
            if noise:
                yk = yk + _cn(rng, H[k].shape[1], T, var=config.sigma_S2)
            for l in partners(k):
                out[(k, l)] = rx_filters[(k, l)].conj().T @ yk
        return out

    d = {key: _cn(rng, N, 512) for key in tx_beams}
    quiet = run(d, noise=False)
    zero = {key: np.zeros((N, T), dtype=complex) for key in tx_beams}
    noisy = run(zero, noise=True)
    snr = np.empty((3, 2, N))
    for k in range(3):
        for i, l in enumerate(partners(k)):
            for n in range(N):
                y, x = quiet[(k, l)][n], d[(l, k)][n]
                c = np.vdot(x, y) / np.vdot(x, x)
                leak = np.linalg.norm(y - c * x) / np.linalg.norm(y)
                if leak > 1e-8:
                    raise AssertionError(f"residual interference {leak:.2e} on stream {(k, l, n)}")
                snr[k, i, n] = abs(c) ** 2 / np.mean(np.abs(noisy[(k, l)][n]) ** 2)
    return snr


def minua_noise_oracle(H, beams, config, T=100_000, seed=0):
    """Measured stream SNRs (3, 2, N) of the Min-UA chain.

    ``beams`` are the normalized aligned beamformers under test; the oracle
    rebuilds the ZF relay and its power gain from them.
    """
    rng = np.random.default_rng(seed)
    H = [np.asarray(h, dtype=complex) for h in H]
    tx = {key: np.sqrt(config.P_T) * v for key, v in beams.items()}
    F = [None] * 3
    for a, b in PAIRS:
        F[direction(a, b)] = H[a] @ beams[(a, b)]
    F = np.concatenate(F, axis=1)
    W = np.linalg.inv(F @ F.conj().T)
    G = np.sqrt(config.P_R / (config.P_T * np.trace(W).real + config.sigma_R2 * np.sum(np.abs(W) ** 2)))
    return _propagate(H, tx, G * W, tx, config, T, rng)


def erua_noise_oracle(H, E, config, T=100_000, seed=0):
    """Measured stream SNRs (3, 2, N) of the ER-UA chain with RSS basis ``E``."""
    rng = np.random.default_rng(seed)
    N = config.N
    H = [np.asarray(h, dtype=complex) for h in H]
    tx, rx = {}, {}
    for k in range(3):
        for l in partners(k):
            m = direction(k, l)
            X = np.linalg.solve(H[k], E[:, m * N:(m + 1) * N])
            rx[(k, l)] = X
            tx[(k, l)] = np.sqrt(config.P_T / (2 * N)) * X / np.linalg.norm(X, axis=0)
    G = np.sqrt(config.P_R / (3 * (config.P_T + N * config.sigma_R2)))
    return _propagate(H, tx, G * np.eye(H[0].shape[0]), rx, config, T, rng)


def brute_force_centralized(metric_of_triple, sizes):
    """Second enumeration: nested loops in (j1, j2, j3) lexicographic order, j1 fastest."""
    best, arg = -np.inf, None
    for j3 in range(sizes[2]):
        for j2 in range(sizes[1]):
            for j1 in range(sizes[0]):
                v = metric_of_triple((j1, j2, j3))
                if v > best:
                    best, arg = v, (j1, j2, j3)
    return arg, best


def lb_quadrature(rho, snr, M1, M2):
    """Pr(g(X, Y) <= rho) as a double integral over the joint density of X and Y."""
    p = bound_params(rho, snr)
    fx = lambda x: M1 * math.exp(-x) * (1 - math.exp(-x)) ** (M1 - 1)
    fy = lambda y: M2 * math.exp(-y) * (1 - math.exp(-y)) ** (M2 - 1)
    val, _ = integrate.dblquad(lambda x, y: fx(x) * fy(y), 0, 60, 0, lambda y: p.a + p.b / y,
                               epsabs=1e-12, epsrel=1e-11)
    return val


def ub_region_quadrature(rho, snr, perm):
    """Direct 3-D integrals of the three upper-bound regions for one ordering."""
    p = bound_params(rho, snr)
    m1, m2, m3 = perm
    f = lambda z, m: 3 * m * math.exp(-3 * z) * (1 - math.exp(-3 * z)) ** (m - 1)
    dens = lambda z1, z2, z3: f(z1, m1) * f(z2, m2) * f(z3, m3)
    opts = dict(epsabs=1e-11, epsrel=1e-10)
    i11 = integrate.tplquad(dens, 0, p.mu, 0, lambda z3: z3, 0, lambda z3, z2: z2, **opts)[0]
    i12 = integrate.tplquad(dens, p.mu, np.inf, 0, p.mu, 0, lambda z3, z2: z2, **opts)[0]
    i13 = integrate.tplquad(dens, p.mu, np.inf, p.mu, np.inf, 0, lambda z3, z2: p.a + p.b / z2, **opts)[0]
    return i11, i12, i13
