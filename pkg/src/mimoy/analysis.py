"""Outage bounds, high-SNR approximations and diversity tools (ER-UA, N = 1).

The closed forms are alternating binomial sums whose terms are O(1) while the
result can be many orders of magnitude smaller at high SNR. Every evaluator
therefore builds its terms through a small numeric context. It first runs in
double precision and checks the cancellation ratio ``sum|t| / |sum t|``. If
too many digits would be lost, it reruns in mpmath with enough digits.

All bounds here assume N = 1 and SNR_T = SNR_R = SNR. Gains toward a fixed
RSS direction are Exp(1); ``lambda_min`` of a 3x3 channel Gram matrix is
Exp(3).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import integrate

from .errors import DomainError, NumericInstabilityError

EULER_GAMMA = 0.5772156649015329
# digits we are willing to lose in double precision before switching
_FLOAT_COND_LIMIT = 1e5
_MAX_DPS = 400


# parameters ------------------------------------------------------------------

@dataclass(frozen=True)
class BoundParams:
    rho_th: float
    snr: float
    a: float
    b: float
    mu: float
    M_sigma: int | None = None


def bound_params(rho_th: float, snr: float, M=None) -> BoundParams:
    """``a = 2 rho/SNR``, ``b = 6 rho (SNR+1)/SNR^2`` and the positive root of ``y^2 = a y + b``."""
    if not (rho_th > 0 and snr > 0):
        raise DomainError("rho_th and SNR must be positive")
    a = 2.0 * rho_th / snr
    b = 6.0 * rho_th * (snr + 1.0) / snr**2
    mu = 0.5 * (a + math.sqrt(a * a + 4.0 * b))
    ms = None if M is None else int(sum(M))
    return BoundParams(float(rho_th), float(snr), a, b, mu, ms)


# numeric contexts --------------------------------------------------------------

class _FloatCtx:
    mp = False
    exp = staticmethod(math.exp)
    expm1 = staticmethod(math.expm1)
    log = staticmethod(math.log)
    log1p = staticmethod(math.log1p)
    sqrt = staticmethod(math.sqrt)
    euler = EULER_GAMMA
    eps = 2.0**-52

    @staticmethod
    def num(x):
        return float(x)

    @staticmethod
    def total(terms):
        return math.fsum(terms)

    @staticmethod
    def binom(n, k):
        return float(math.comb(n, k))


class _MpCtx:
    mp = True

    def __init__(self, dps: int):
        self.dps = dps
        self.eps = mpmath.mpf(10) ** (-dps)
        self.euler = +mpmath.euler
        self.exp = mpmath.exp
        self.expm1 = mpmath.expm1
        self.log = mpmath.log
        self.log1p = mpmath.log1p
        self.sqrt = mpmath.sqrt

    @staticmethod
    def num(x):
        return mpmath.mpf(x)

    @staticmethod
    def total(terms):
        return mpmath.fsum(terms)

    @staticmethod
    def binom(n, k):
        return mpmath.mpf(math.comb(n, k))


FLOAT = _FloatCtx()


def _adaptive(build, label: str):
    """Evaluate ``sum(build(ctx))`` to about 1e-8 relative accuracy.

    ``build`` maps a numeric context to a list of terms. The double-precision
    pass is kept when little cancellation happened; otherwise the precision is
    raised until the digits needed fit inside the working precision.
    """
    terms = build(FLOAT)
    val = math.fsum(terms)
    mag = math.fsum(abs(t) for t in terms)
    if not math.isfinite(val):
        raise NumericInstabilityError(f"{label}: non-finite terms", val)
    if mag == 0.0 or abs(val) * _FLOAT_COND_LIMIT >= mag:
        return val
    lost = math.log10(mag / abs(val)) if val != 0.0 else 17.0
    dps = int(lost) + 25
    while dps <= _MAX_DPS:
        with mpmath.workdps(dps):
            terms = build(_MpCtx(dps))
            v = mpmath.fsum(terms)
            m = mpmath.fsum(abs(t) for t in terms)
            if v != 0:
                need = float(mpmath.log10(m / abs(v)))
                if need + 15 <= dps:
                    return float(v)
                dps = int(need) + 25
            else:
                dps *= 2
    raise NumericInstabilityError(f"{label}: cancellation exceeds {_MAX_DPS} digits", float(val))


def _check_probability(p: float, label: str, upper: bool = True) -> float:
    if not math.isfinite(p) or p < -1e-9 or (upper and p > 1 + 1e-9):
        raise NumericInstabilityError(f"{label}: value {p!r} is not a probability", p)
    return p


# special functions ---------------------------------------------------------------

# Bernoulli numbers B_2 .. B_16 for the asymptotic digamma series
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510)


def digamma(x: float) -> float:
    """psi(x) for real x > 0 by upward recurrence and the asymptotic series."""
    x = float(x)
    if not x > 0:
        raise DomainError("digamma is evaluated for x > 0 only")
    acc = 0.0
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    s = 0.0
    p = inv2
    for k, B in enumerate(_BERNOULLI, 1):
        s += B / (2 * k) * p
        p *= inv2
    return acc + math.log(x) - 0.5 / x - s


def _k1_series(x, ctx):
    # K1(x) = 1/x + sum_t (x/2)^{2t+1} / (t! (t+1)!) [ln(x/2) - (psi(t+1)+psi(t+2))/2]
    h = x / 2
    lnh = ctx.log(h)
    h2 = h * h
    term = h  # (x/2)^{2t+1} / (t! (t+1)!)
    psi_a = -ctx.euler  # psi(t+1)
    psi_b = 1 - ctx.euler  # psi(t+2)
    s = ctx.num(0)
    t = 0
    while True:
        inc = term * (lnh - (psi_a + psi_b) / 2)
        s += inc
        t += 1
        if abs(inc) <= ctx.eps * abs(s) and t > 2:
            break
        term = term * h2 / (t * (t + 1))
        psi_a = psi_b
        psi_b = psi_b + ctx.num(1) / (t + 1)
    return 1 / x + s


def _k1_cf(x, ctx):
    # Steed's method on Temme's continued fraction for K_0, then K_1 from the
    # ratio it produces (order mu = 0 of the standard recurrence)
    one = ctx.num(1)
    a1 = ctx.num(0.25)
    b = 2 * (one + x)
    d = one / b
    h = delh = d
    q1 = ctx.num(0)
    q2 = one
    q = c = a1
    a = -a1
    s = one + q * delh
    i = 1
    while i < 100000:
        i += 1
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2
        d = one / (b + a * d)
        delh = (b * d - 1) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels) < ctx.eps * abs(s):
            break
    h = a1 * h
    pi = mpmath.pi if ctx.mp else math.pi
    k0 = ctx.sqrt(pi / (2 * x)) * ctx.exp(-x) / s
    return k0 * (x + ctx.num(0.5) - h) / x


_K1_HOOK = {"scale": 1.0}  # fault-injection knob for the selftest


def _bessel_k1(x, ctx):
    if x < 2:
        v = _k1_series(x, ctx)
    else:
        v = _k1_cf(x, ctx)
    return v * _K1_HOOK["scale"] if _K1_HOOK["scale"] != 1.0 else v


def bessel_k1(x: float) -> float:
    """Modified Bessel function of the second kind, order one, for x > 0.

    Power series below 2, Steed's continued fraction above.
    """
    x = float(x)
    if not x > 0:
        raise DomainError("bessel_k1 needs x > 0")
    return float(_bessel_k1(x, FLOAT))


# lower bound (gains toward a reference direction) -----------------------------

def _lb_terms(ctx, rho_th, snr, M1, M2, scale=1):
    """Terms of ``Pr(g(X, Y) <= rho)`` with X, Y maxima of M1 / M2 Exp(scale) draws.

    ``scale = 1`` is the direction-gain lower bound; ``scale = 3`` is the
    Exp(3) variant used by the relaxed upper bound.
    """
    snr = ctx.num(snr)
    rho = ctx.num(rho_th)
    a = 2 * rho / snr
    b = 6 * rho * (snr + 1) / snr**2
    sa, sb = scale * a, scale * scale * b
    terms = []
    for q in range(M2):
        cq = ctx.binom(M2 - 1, q)
        sign_q = -1 if q % 2 else 1
        terms.append(2 * M2 * sign_q * cq / (2 * (q + 1)))
        for p in range(1, M1 + 1):
            sign = -sign_q if p % 2 else sign_q
            arg = 2 * ctx.sqrt(p * (q + 1) * sb)
            t = cq * ctx.binom(M1, p) * ctx.exp(-p * sa) * ctx.sqrt(p * sb / (q + 1)) * _bessel_k1(arg, ctx)
            terms.append(2 * M2 * sign * t)
    return terms


def _validate_m(*ms):
    for m in ms:
        if int(m) != m or m < 1:
            raise DomainError("cluster sizes must be positive integers")


def outage_lb_cs(rho_th: float, snr: float, M1: int, M2: int) -> float:
    """Outage lower bound of cluster-wise scheduling.

    Probability that ``g(X, Y) <= rho_th`` where X (Y) is the best
    reference-direction gain among M1 (M2) users, each Exp(1).
    """
    _validate_m(M1, M2)
    bound_params(rho_th, snr)
    v = _adaptive(lambda ctx: _lb_terms(ctx, rho_th, snr, M1, M2), "outage_lb_cs")
    return _check_probability(v, "outage_lb_cs")


def outage_lb_gs(rho_th: float, snr: float, M: int) -> float:
    """Group-wise lower bound: the cluster-wise form with ``M1 = M2 = M``."""
    return outage_lb_cs(rho_th, snr, M, M)


# upper bound (minimum eigenvalues, Exp(3)) -------------------------------------

def _inner_float(p: int, q: int, mu: float, b: float) -> float:
    """``int_mu^inf exp(-3((p+1) y + q b / y)) dy`` in double precision."""
    k = 3.0 * (p + 1)
    if q == 0:
        return math.exp(-k * mu) / k
    c = 3.0 * q * b
    hi = mu + 40.0 / k
    val, _ = integrate.quad(lambda y: math.exp(-k * y - c / y), mu, hi, epsabs=1e-14, epsrel=1e-12, limit=200)
    # beyond hi the 1/y term is nearly frozen; the remainder is below e^-40
    tail = math.exp(-k * hi - c / hi) / k
    return val + tail


def _inner_mp(p: int, q: int, mu, b):
    k = 3 * (p + 1)
    if q == 0:
        return mpmath.exp(-k * mu) / k
    c = 3 * q * b
    f = lambda y: mpmath.exp(-k * y - c / y)
    return mpmath.quad(f, [mu, mu + mpmath.mpf(1) / k, mu + mpmath.mpf(10) / k, mpmath.inf])


def _ub_context(ctx, rho_th, snr):
    snr = ctx.num(snr)
    rho = ctx.num(rho_th)
    a = 2 * rho / snr
    b = 6 * rho * (snr + 1) / snr**2
    mu = (a + ctx.sqrt(a * a + 4 * b)) / 2
    e3 = ctx.exp(-3 * mu)
    logU = ctx.log1p(-e3)
    return a, b, mu, logU


def _one_minus_pow(logU, m, ctx):
    # 1 - U^m computed without cancellation
    return -ctx.expm1(m * logU)


def _ub_piece_terms(ctx, rho_th, snr, perm, M_sigma, cache):
    """Term lists of the three pieces for one ordered assignment ``perm``.

    ``perm = (m1, m2, m3)`` gives the cluster sizes behind the smallest,
    middle and largest of the three per-cluster best ``lambda_min`` values.
    """
    m1, m2, m3 = perm
    a, b, mu, logU = _ub_context(ctx, rho_th, snr)
    tail3 = _one_minus_pow(logU, m3, ctx)
    i11 = [ctx.num(m2 * m3) * ctx.exp(M_sigma * logU) / ((m1 + m2) * M_sigma)]
    i12 = [ctx.num(m2) * ctx.exp((m1 + m2) * logU) * tail3 / (m1 + m2)]
    i13 = []
    for p in range(m2):
        for q in range(m1 + 1):
            key = (p, q)
            if key not in cache:
                cache[key] = _inner_mp(p, q, mu, b) if ctx.mp else _inner_float(p, q, mu, b)
            sign = -1 if (p + q) % 2 else 1
            t = ctx.binom(m2 - 1, p) * ctx.binom(m1, q) * ctx.exp(-3 * q * a) * cache[key]
            i13.append(3 * m2 * sign * t * tail3)
    return i11, i12, i13


def outage_ub_cs_pieces(rho_th: float, snr: float, M) -> list[tuple[tuple, float, float, float]]:
    """Per-permutation pieces ``(perm, I11, I12, I13)`` of the cluster-wise upper bound.

    ``I11``: all three variables below mu, ordered. ``I12``: largest above mu,
    middle below. ``I13``: largest and middle above mu, smallest under
    ``a + b / y``, with the ordering between the two larger ones dropped.
    """
    M = tuple(int(m) for m in M)
    _validate_m(*M)
    bound_params(rho_th, snr)
    ms = sum(M)
    out = []
    for perm in itertools.permutations(M):
        pieces = []
        for idx in range(3):
            def build(ctx, idx=idx, perm=perm):
                cache: dict = {}
                return _ub_piece_terms(ctx, rho_th, snr, perm, ms, cache)[idx]
            pieces.append(_adaptive(build, "outage_ub_cs"))
        out.append((perm, *pieces))
    return out


def _ub_cs_all_terms(ctx, rho_th, snr, M):
    ms = sum(M)
    cache: dict = {}
    terms = []
    for perm in itertools.permutations(M):
        for part in _ub_piece_terms(ctx, rho_th, snr, perm, ms, cache):
            terms.extend(part)
    return terms


def outage_ub_cs(rho_th: float, snr: float, M1: int, M2: int, M3: int) -> float:
    """Outage upper bound of cluster-wise scheduling (sum over the six orderings).

    The region enlargement in the third piece makes the value exceed 1 at low
    SNR; such values are returned as they are.
    """
    M = (int(M1), int(M2), int(M3))
    _validate_m(*M)
    bound_params(rho_th, snr)
    v = _adaptive(lambda ctx: _ub_cs_all_terms(ctx, rho_th, snr, M), "outage_ub_cs")
    return _check_probability(v, "outage_ub_cs", upper=False)


def _gs_bracket_terms(ctx, rho_th, snr):
    a, b, mu, logU = _ub_context(ctx, rho_th, snr)
    U = -ctx.expm1(-3 * mu)
    e3 = ctx.exp(-3 * mu)
    J = _inner_mp(0, 1, mu, b) if ctx.mp else _inner_float(0, 1, mu, b)
    return [3 * U**2, -2 * U**3, 6 * e3 * e3, -18 * ctx.exp(-3 * (mu + a)) * J]


def outage_ub_gs(rho_th: float, snr: float, M: int) -> float:
    """Group-wise upper bound: single-group bracket raised to the power M.

    The bracket integrates ``exp(-3 (y + b / y))``; with this sign it equals
    the cluster-wise upper bound at ``M = (1, 1, 1)``.
    """
    _validate_m(M)
    bound_params(rho_th, snr)
    br = _adaptive(lambda ctx: _gs_bracket_terms(ctx, rho_th, snr), "outage_ub_gs")
    _check_probability(br, "outage_ub_gs", upper=False)
    return max(br, 0.0) ** int(M)


# relaxed upper bounds (both larger variables integrated from 0) -----------------

def _relaxed_i13_terms(ctx, rho_th, snr, perm, printed_binomial: bool):
    m1, m2, m3 = perm
    a, b, mu, logU = _ub_context(ctx, rho_th, snr)
    tail3 = _one_minus_pow(logU, m3, ctx)
    terms = []
    for q in range(m2):
        cq = ctx.binom(m2 - 1, q)
        sign_q = -1 if q % 2 else 1
        terms.append(2 * m2 * sign_q * cq / (2 * (q + 1)) * tail3)
        for p in range(1, m1 + 1):
            sign = -sign_q if p % 2 else sign_q
            c1 = ctx.binom(m1, q) if printed_binomial else ctx.binom(m1, p)
            arg = 6 * ctx.sqrt(p * (q + 1) * b)
            t = 3 * cq * c1 * ctx.exp(-3 * p * a) * ctx.sqrt(p * b / (q + 1)) * _bessel_k1(arg, ctx)
            terms.append(2 * m2 * sign * t * tail3)
    return terms


def outage_ub_cs_relaxed(rho_th: float, snr: float, M1: int, M2: int, M3: int,
                         printed_binomial: bool = False) -> float:
    """Looser closed-form upper bound used for the high-SNR expansion.

    The third piece integrates the two larger variables from 0 instead of mu,
    giving a Bessel-function sum. ``printed_binomial=True`` uses
    ``binom(M1, q)`` in the inner sum instead of ``binom(M1, p)``.
    """
    M = (int(M1), int(M2), int(M3))
    _validate_m(*M)
    bound_params(rho_th, snr)
    ms = sum(M)

    def build(ctx):
        terms = []
        for perm in itertools.permutations(M):
            i11, i12, _ = _ub_piece_terms(ctx, rho_th, snr, perm, ms, {(p, q): 0 for p in range(ms) for q in range(ms + 1)})
            terms += i11 + i12 + _relaxed_i13_terms(ctx, rho_th, snr, perm, printed_binomial)
        return terms

    return _adaptive(build, "outage_ub_cs_relaxed")


def outage_ub_gs_relaxed(rho_th: float, snr: float, M: int) -> float:
    """Relaxed single-group bracket, raised to the power M."""
    _validate_m(M)

    def build(ctx):
        a, b, mu, logU = _ub_context(ctx, rho_th, snr)
        U = -ctx.expm1(-3 * mu)
        e3 = ctx.exp(-3 * mu)
        k = _bessel_k1(6 * ctx.sqrt(b), ctx)
        return [3 * U**2, -2 * U**3, 6 * e3, -36 * e3 * ctx.exp(-3 * a) * ctx.sqrt(b) * k]

    return max(_adaptive(build, "outage_ub_gs_relaxed"), 0.0) ** int(M)


# high-SNR approximations -----------------------------------------------------------

@dataclass(frozen=True)
class HighSnrCoeffs:
    """``P ~ gain * a^exponent * ln(1/a)^log_power`` with ``a = 2 rho / SNR``.

    For the group-wise upper bound the log factor is raised to ``M`` as well.
    """

    which: str
    exponent: int
    gain: float
    log_power: int
    branch: str


def _b1(t: int) -> float:
    return 2.0 ** (-2 * t - 1) / (math.factorial(t) * math.factorial(t + 1))


def _b2(t: int) -> float:
    return _b1(t) * (-math.log(2.0) - 0.5 * (digamma(t + 1) + digamma(t + 2)))


def phi_coefficients(N1: int, N2: int, tau: float, p: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """The vectors ``c_p(tau)`` and ``e_{p,q}(tau)`` of length ``min(N1, N2) + 1``."""
    d = min(N1, N2)
    c = np.array([(-tau * p) ** n / math.factorial(n) for n in range(d, -1, -1)])
    e = np.zeros(d + 1)
    for n in range(1, d + 1):
        t = n - 1
        e[n] = (_b1(t) * math.log(2 * tau * math.sqrt(3 * p * (q + 1))) + _b2(t)) * (12 * tau**2 * p * (q + 1)) ** n
    return c, e


def phi_helper(N1: int, N2: int, tau: float) -> float:
    """Power-gain helper: binomial double sum of ``c_p^T e_{p,q} / (q + 1)``."""
    _validate_m(N1, N2)
    if not tau > 0:
        raise DomainError("tau must be positive")
    terms = []
    for q in range(N2):
        for p in range(1, N1 + 1):
            c, e = phi_coefficients(N1, N2, tau, p, q)
            sign = -1 if (q + p) % 2 else 1
            terms.append(sign * math.comb(N2 - 1, q) * math.comb(N1, p) * float(c @ e) / (q + 1))
    return N2 * math.fsum(terms)


def _desc(M) -> tuple[int, ...]:
    return tuple(sorted((int(m) for m in M), reverse=True))


def highsnr_coeffs(which: str, M) -> HighSnrCoeffs:
    """Exponent, gain and branch of a high-SNR approximation.

    ``M`` is the cluster-size triple (or pair for ``lb-cs``) for CS forms and
    the group count for GS forms.
    """
    if which in ("lb-gs", "ub-gs"):
        M = int(np.ravel(M)[0]) if np.ndim(M) else int(M)
        _validate_m(M)
        if which == "lb-gs":
            return HighSnrCoeffs(which, M, float(M * 3**M), 1, "single")
        return HighSnrCoeffs(which, M, float(162**M), M, "single")
    Ms = _desc(M)
    _validate_m(*Ms)
    if which == "lb-cs":
        # the two smallest sizes enter the lower bound
        m3, m2 = Ms[-1], Ms[-2]
        if m2 == m3:
            return HighSnrCoeffs(which, m3, float(m3 * 3**m3), 1, "M[2]=M[3]")
        return HighSnrCoeffs(which, m3, phi_helper(m3, m2, 1.0), 0, "M[2]!=M[3]")
    if which == "ub-cs":
        if len(Ms) != 3:
            raise DomainError("the cluster-wise upper bound needs three sizes")
        m1, m2, m3 = Ms
        if m1 == m2 == m3:
            return HighSnrCoeffs(which, m3, float(6 * m3 * 3 ** (3 * m3)), 1, "all equal")
        if m2 == m3:
            return HighSnrCoeffs(which, m3, float(2 * m3 * 3 ** (3 * m3)), 1, "M[1]>M[2]=M[3]")
        if m1 == m2:
            g = phi_helper(m2, m3, 3.0) + phi_helper(m3, m2, 3.0)
            return HighSnrCoeffs(which, m3, g, 0, "M[1]=M[2]>M[3]")
        g = sum(phi_helper(Ms[l], m3, 3.0) + phi_helper(m3, Ms[l], 3.0) for l in (0, 1))
        return HighSnrCoeffs(which, m3, g, 0, "distinct")
    raise DomainError(f"unknown approximation {which!r}")


def _highsnr(which: str, rho_th: float, snr: float, M) -> float:
    bound_params(rho_th, snr)
    c = highsnr_coeffs(which, M)
    a = 2.0 * rho_th / snr
    L = math.log(snr / (2.0 * rho_th))
    if which == "ub-gs":
        return c.gain * (a * L) ** c.exponent
    return c.gain * a**c.exponent * L**c.log_power


def highsnr_lb_cs(rho_th: float, snr: float, M) -> float:
    return _highsnr("lb-cs", rho_th, snr, M)


def highsnr_ub_cs(rho_th: float, snr: float, M) -> float:
    return _highsnr("ub-cs", rho_th, snr, M)


def highsnr_lb_gs(rho_th: float, snr: float, M: int) -> float:
    return _highsnr("lb-gs", rho_th, snr, M)


def highsnr_ub_gs(rho_th: float, snr: float, M: int) -> float:
    return _highsnr("ub-gs", rho_th, snr, M)


def evaluate_bound(which: str, rho_th: float, snr: float, M) -> float:
    """Dispatch on the tags used in bound sweeps (``lb-cs`` ... ``hs-ub-gs``)."""
    M = tuple(int(m) for m in np.ravel(M))
    if which == "lb-cs":
        if len(M) < 2:
            raise DomainError("lb-cs needs at least two cluster sizes")
        s = sorted(M)
        return outage_lb_cs(rho_th, snr, s[0], s[1])
    if which == "ub-cs":
        if len(M) != 3:
            raise DomainError("ub-cs needs three cluster sizes")
        return outage_ub_cs(rho_th, snr, *M)
    if which in ("lb-gs", "ub-gs", "hs-lb-gs", "hs-ub-gs"):
        if len(M) != 1:
            raise DomainError(f"{which} takes the single group count M")
        m = M[0]
        return {
            "lb-gs": outage_lb_gs, "ub-gs": outage_ub_gs,
            "hs-lb-gs": highsnr_lb_gs, "hs-ub-gs": highsnr_ub_gs,
        }[which](rho_th, snr, m)
    if which == "hs-lb-cs":
        if len(M) < 2:
            raise DomainError("hs-lb-cs needs at least two cluster sizes")
        return highsnr_lb_cs(rho_th, snr, M)
    if which == "hs-ub-cs":
        if len(M) != 3:
            raise DomainError("hs-ub-cs needs three cluster sizes")
        return highsnr_ub_cs(rho_th, snr, M)
    raise DomainError(f"unknown bound {which!r}")


BOUND_TAGS = ("lb-cs", "ub-cs", "lb-gs", "ub-gs", "hs-lb-cs", "hs-ub-cs", "hs-lb-gs", "hs-ub-gs")


# diversity and multiplexing ----------------------------------------------------------

def diversity_slope(curve, window: tuple[float, float] | None = None) -> float:
    """Least-squares slope of ``-log10 P`` against ``log10 SNR``.

    ``curve`` is an OutageCurve or a pair ``(snr_db, p)`` of sequences.
    Only points inside ``window`` (dB, inclusive) with ``P > 0`` are used.
    """
    if hasattr(curve, "points"):
        snr_db = np.array([pt.snr_db for pt in curve.points], dtype=float)
        p = np.array([pt.p_hat for pt in curve.points], dtype=float)
    else:
        snr_db, p = (np.asarray(v, dtype=float) for v in curve)
    keep = p > 0
    if window is not None:
        keep &= (snr_db >= window[0] - 1e-9) & (snr_db <= window[1] + 1e-9)
    if keep.sum() < 3:
        raise DomainError("slope fit needs at least three positive points in the window")
    x = snr_db[keep] / 10.0
    y = -np.log10(p[keep])
    return float(np.polyfit(x, y, 1)[0])


def dmt_predicted(r: float, scheme: str, M) -> float:
    """Diversity at multiplexing gain r: ``d* (1 - r/3)^+`` with d* = min(M) (CS) or M (GS)."""
    if r < 0:
        raise DomainError("multiplexing gain must be nonnegative")
    Ms = [int(m) for m in np.ravel(M)]
    if scheme.endswith("cs"):
        d = min(Ms)
    elif scheme.endswith("gs"):
        d = Ms[0]
    else:
        raise DomainError(f"scheme {scheme!r} is neither cluster-wise nor group-wise")
    return d * max(1.0 - r / 3.0, 0.0)


def outage_with_adaptive_rate(scheme: str, config, snr: float, r: float, trials: int, seed: int) -> float:
    """Monte Carlo ``Pr(R <= r log2(1 + SNR))`` for the sum rate of the selected users.

    ``R = 1/2 sum log2(1 + rho_{k,l})`` over the six links (ER-UA, N = 1).
    """
    from . import harness

    if trials < 1:
        raise DomainError("trials must be positive")
    if config.N != 1 or config.mode.value != "er-ua":
        raise DomainError("adaptive-rate outage is defined for ER-UA with N = 1")
    cfg = config.with_snr(snr)
    target = r * math.log2(1.0 + snr)
    out = 0
    for rho in harness.iter_selected_stream_snrs(scheme, cfg, trials, seed):
        R = 0.5 * np.sum(np.log2(1.0 + rho), axis=(-3, -2, -1))
        out += int(np.count_nonzero(R <= target))
    return out / trials


__all__ = [
    "BOUND_TAGS",
    "BoundParams",
    "HighSnrCoeffs",
    "bessel_k1",
    "bound_params",
    "digamma",
    "diversity_slope",
    "dmt_predicted",
    "evaluate_bound",
    "highsnr_coeffs",
    "highsnr_lb_cs",
    "highsnr_lb_gs",
    "highsnr_ub_cs",
    "highsnr_ub_gs",
    "outage_lb_cs",
    "outage_lb_gs",
    "outage_ub_cs",
    "outage_ub_cs_pieces",
    "outage_ub_cs_relaxed",
    "outage_ub_gs",
    "outage_ub_gs_relaxed",
    "outage_with_adaptive_rate",
    "ub_event_probability_cs",
    "ub_event_probability_gs",
    "phi_coefficients",
    "phi_helper",
]


def ub_event_probability_cs(rho_th: float, snr: float, M) -> float:
    """Exact ``Pr(g(lambda_[3], lambda_[2]) <= rho_th)`` by one-dimensional quadrature.

    Diagnostic companion of ``outage_ub_cs``: it keeps the ordering between
    the two larger variables, so it is never above 1. Each per-cluster
    variable is the best of ``M_k`` Exp(3) draws.
    """
    M = tuple(int(m) for m in M)
    _validate_m(*M)
    bp = bound_params(rho_th, snr)
    F = lambda m, x: (1 - math.exp(-3 * x)) ** m if x > 0 else 0.0
    f = lambda m, x: 3 * m * math.exp(-3 * x) * (1 - math.exp(-3 * x)) ** (m - 1)
    total = 0.0
    for s, mid, big in itertools.permutations(range(3)):
        def integrand(y, s=s, mid=mid, big=big):
            return f(M[mid], y) * (1 - F(M[big], y)) * F(M[s], min(y, bp.a + bp.b / y))
        pts = [bp.mu] if bp.mu < 50 else None
        val, _ = integrate.quad(integrand, 0, 50, points=pts, epsabs=1e-13, limit=400)
        total += val
    return total


def ub_event_probability_gs(rho_th: float, snr: float, M: int) -> float:
    """Exact group-wise counterpart: the single-group probability to the power M."""
    _validate_m(M)
    return ub_event_probability_cs(rho_th, snr, (1, 1, 1)) ** int(M)
