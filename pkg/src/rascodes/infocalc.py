"""Information-theoretic calculators for RaS code ensembles.

All quantities are in bits; ``exp`` in the bound formulas is base 2.  Channel
sums/integrals are written as expectations of functions of the LLR ``L``
under input 0, with ``r = exp(-L) = P(y|1)/P(y|0)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from .bits import WeightProfile
from .channel import LN2, ChannelModel, biawgn_capacity_snr_db, channel_capacity, expect0

GAMMA_TOL = 1e-8


class InfeasibleError(ValueError):
    """No operating point satisfies the requested limit."""


def entropy(theta: float) -> float:
    """Binary entropy in bits, with ``0 log 0 = 0``."""
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"probability {theta} outside [0, 1]")
    if theta in (0.0, 1.0):
        return 0.0
    return -theta * math.log2(theta) - (1 - theta) * math.log2(1 - theta)


def _h_vec(q: np.ndarray) -> np.ndarray:
    q = np.clip(q, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = -q * np.log2(q) - (1 - q) * np.log2(1 - q)
    return np.nan_to_num(t, nan=0.0)


# --------------------------------------------------------------------------
# Partial mutual information


@dataclass(frozen=True)
class PartialMutualInfo:
    p: float
    I0: float
    I1: float
    I: float
    boundary: bool = False


def _log2_mix(a: float, b: float, L: np.ndarray) -> np.ndarray:
    """``log2(a + b * exp(-L))`` for a, b >= 0, safe at L = +inf."""
    with np.errstate(divide="ignore"):
        la = math.log(a) if a > 0 else -math.inf
        lb = math.log(b) if b > 0 else -math.inf
        return np.logaddexp(la, lb - L) / LN2


def _pmi_parts(ch: ChannelModel, p: float) -> tuple[float, float]:
    # I0 = E0[-log2(1 - p + p r)],  I1 = E0[-log2(p + (1 - p) r)]  (by symmetry)
    I0 = expect0(ch, lambda L: -_log2_mix(1 - p, p, L))
    I1 = expect0(ch, lambda L: -_log2_mix(p, 1 - p, L))
    return I0, I1


def _mutual_info_direct(ch: ChannelModel, p: float) -> float:
    """``I(p) = h(p) - H(X|Y)`` via posterior entropies, independent of I0/I1."""

    def cond_entropy_given0(L):
        # posterior P(X=1|y) for y drawn under X=0
        return _h_vec(1.0 / (1.0 + np.exp(np.clip(L + math.log((1 - p) / p), -700, 700))))

    def cond_entropy_given1(L):
        # mirrored output: P(X=1|pi(y)) with L(pi(y)) = -L
        return _h_vec(1.0 / (1.0 + np.exp(np.clip(-L + math.log((1 - p) / p), -700, 700))))

    hxy = (1 - p) * expect0(ch, cond_entropy_given0) + p * expect0(ch, cond_entropy_given1)
    return entropy(p) - hxy


def partial_mutual_info(ch: ChannelModel, p: float) -> PartialMutualInfo:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"input probability {p} outside [0, 1]")
    I0, I1 = _pmi_parts(ch, p)
    if p in (0.0, 1.0):
        # I1(0), I0(1) are divergences and may be infinite; I itself is 0
        return PartialMutualInfo(p, I0, I1, 0.0, boundary=True)
    return PartialMutualInfo(p, I0, I1, _mutual_info_direct(ch, p))


# --------------------------------------------------------------------------
# rho(w)


def rho(profile: WeightProfile | Sequence[int], k: int | None = None) -> float:
    """Success probability of the parity sequence produced by a message of
    the given weight profile over the i.i.d. weight-<=1 column ensemble."""
    if not isinstance(profile, WeightProfile):
        profile = WeightProfile(tuple(profile), k)
    k = profile.k
    prod = 1.0
    for w in profile.weights:
        prod *= 1.0 - 2.0 * w / (k + 1)
    return (1.0 - prod) / 2.0


def rho_bounds(k: int, T: int) -> tuple[float, float, float]:
    """``(lower, upper, rho1)`` for profiles with T non-zero sub-blocks."""
    if k < 1 or T < 1:
        raise ValueError("k and T must be >= 1")
    dev = ((k - 1) / (k + 1)) ** T / 2
    return 0.5 - dev, 0.5 + dev, 1.0 / (k + 1)


# --------------------------------------------------------------------------
# Partial error exponent


def gallager_e0(ch: ChannelModel, p: float, gamma: float) -> float:
    """``E0(p, gamma) = -log2 E0[(1 - p + p r^s)^gamma]`` with ``s = 1/(1+gamma)``."""
    if not 0.0 <= p <= 1.0 or not 0.0 <= gamma <= 1.0:
        raise ValueError("p and gamma must lie in [0, 1]")
    if gamma == 0.0 or p == 0.0:
        return 0.0
    s = 1.0 / (1.0 + gamma)
    # E[(..)^gamma] - 1 accumulated through expm1 keeps precision for small gamma
    dev = expect0(ch, lambda L: np.expm1(gamma * LN2 * _log2_mix(1 - p, p, s * L)), tol=1e-15)
    return -math.log1p(dev) / LN2


@dataclass(frozen=True)
class ExponentResult:
    E: float
    gamma_star: float
    R: float
    p: float


def maximize_over_gamma(f, tol: float = GAMMA_TOL) -> tuple[float, float]:
    """Maximise a continuous ``f`` on [0, 1]; returns ``(value, argmax)``.

    Bounded golden-section/Brent searches on [0, 1/2] and [1/2, 1], compared
    with the points 0, 1/2 and 1.  Ties go to the smaller gamma.
    """
    cands = [(f(g), g) for g in (0.0, 0.5, 1.0)]
    for lo, hi in ((0.0, 0.5), (0.5, 1.0)):
        res = optimize.minimize_scalar(lambda g: -f(g), bounds=(lo, hi), method="bounded",
                                       options={"xatol": tol})
        cands.append((-float(res.fun), float(res.x)))
    return max(cands, key=lambda c: (c[0], -c[1]))


def partial_error_exponent(ch: ChannelModel, p: float, R: float) -> ExponentResult:
    if R < 0:
        raise ValueError("rate must be non-negative")
    val, g = maximize_over_gamma(lambda gm: gallager_e0(ch, p, gm) - gm * R)
    if val <= 0.0:
        return ExponentResult(0.0, 0.0, R, p)
    return ExponentResult(val, g, R, p)


def mixed_exponent(ch: ChannelModel, rho1: float, tau: int, m: int, R3: float) -> float:
    """``max_gamma [ a E0(rho1, g) + (1 - a)(E0(1/2, g) - g R3) ]``, ``a = (tau+1)/(m+1)``."""
    a = (tau + 1) / (m + 1)
    val, _ = maximize_over_gamma(lambda g: a * gallager_e0(ch, rho1, g)
                                 + (1 - a) * (gallager_e0(ch, 0.5, g) - g * R3))
    return max(val, 0.0)


# --------------------------------------------------------------------------
# Bound evaluators


@dataclass
class BoundReport:
    """Additive bound terms.  ``log2_terms`` keeps the exponents so terms that
    underflow in floating point remain comparable; the typicality term is
    symbolic and not included in ``total``."""

    terms: dict[str, float]
    log2_terms: dict[str, float]
    params: dict[str, float]
    symbolic: tuple[str, ...] = ("eps/3",)
    details: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return sum(self.terms.values())

    @property
    def log2_total(self) -> float:
        return float(np.logaddexp2.reduce(list(self.log2_terms.values())))

    @property
    def vacuous(self) -> bool:
        return self.log2_total >= 0.0


def _common(k, n, m, ch2):
    if not (k >= 1 and n > k and m >= 0):
        raise ValueError("need k >= 1, n > k, m >= 0")
    T = math.isqrt(m + 1)
    NK = (n - k) * (m + 1)
    lo_r = math.log2(1 + ((k - 1) / (k + 1)) ** T)
    rho1 = 0.5 - (k - 1) / (2 * (k + 1))
    return T, NK, lo_r, rho1


def theorem1_fer_bound(k: int, n: int, m: int, ch2: ChannelModel, HUgivenV: float,
                       delta: float) -> BoundReport:
    """FER bound of the block RaS ensemble (typicality term left symbolic)."""
    T, NK, lo_r, rho1 = _common(k, n, m, ch2)
    R_T = lo_r + k * (HUgivenV + delta) / (n - k)
    R1 = k * T / NK
    E_half = partial_error_exponent(ch2, 0.5, R_T).E
    E_rho1 = partial_error_exponent(ch2, rho1, R1).E
    log2_t2 = -NK * E_half
    bracket = ((n - k) * E_rho1 - math.log2(m + 1) / (m + 1) - entropy(T / (m + 1))
               - T * math.log2(k + 1) / (m + 1))
    log2_t3 = -(m + 1) * bracket
    logs = {"list_term": log2_t2, "low_weight_term": log2_t3}
    return BoundReport(
        terms={n_: 2.0**v for n_, v in logs.items()},
        log2_terms=logs,
        params=dict(k=k, n=n, m=m, T=T, delta=delta, HUgivenV=HUgivenV, R_T=R_T, R1=R1,
                    rho1=rho1, E_half=E_half, E_rho1=E_rho1),
    )


def conv_first_error_bound(k: int, n: int, m: int, ch2: ChannelModel, HU: float,
                           delta: float) -> BoundReport:
    """First-error-event bound of the Conv-RaS ensemble (typicality term symbolic)."""
    T, NK, lo_r, rho1 = _common(k, n, m, ch2)
    R2 = 2 * T * k / NK
    R3 = k * (HU + delta) / (n - k) + lo_r
    overhead_tau = entropy(min(T / (m + 1), 1.0)) + k * T / (m + 1)
    summands = []
    for tau in range(T - 1, m - T + 1):
        E_tau = mixed_exponent(ch2, rho1, tau, m, R3)
        summands.append(-(m + 1) * ((n - k) * E_tau - overhead_tau))
    log2_sum = float(np.logaddexp2.reduce(summands)) if summands else -math.inf
    E_rho1 = partial_error_exponent(ch2, rho1, R2).E
    bracket = ((n - k) * E_rho1 - math.log2(m + 1) / (m + 1) - entropy(min(2 * T / (m + 1), 1.0))
               - 2 * T * math.log2(k + 1) / (m + 1))
    logs = {"tau_sum_term": log2_sum, "low_weight_term": -(m + 1) * bracket}
    return BoundReport(
        terms={n_: 2.0**v for n_, v in logs.items()},
        log2_terms=logs,
        params=dict(k=k, n=n, m=m, T=T, delta=delta, HU=HU, R2=R2, R3=R3, rho1=rho1,
                    E_rho1=E_rho1),
        details={"log2_summands": summands},
    )


# --------------------------------------------------------------------------
# Limits


@dataclass(frozen=True)
class ShannonLimit:
    snr_db: float
    ebn0_db: float
    target: float  # R * H(theta), bits per channel use


def shannon_limit(R: float, theta: float, grid_db: float | None = None,
                  tol_db: float = 1e-4) -> ShannonLimit:
    """Minimum BI-AWGN SNR (``1/sigma^2``) with ``C(SNR) > R H(theta)``.

    With ``grid_db=None`` the threshold is located by bisection to ``tol_db``
    and the returned SNR is the upper end of the final bracket.  With a grid
    step, the smallest SNR on the grid ``{i * grid_db}`` that satisfies the
    condition is returned instead, which is how figure-level limit values are
    usually tabulated.
    """
    if R <= 0 or not 0.0 < theta <= 0.5:
        raise ValueError("need R > 0 and 0 < theta <= 1/2")
    target = R * entropy(theta)
    if target >= 1.0:
        raise InfeasibleError(f"R*H(theta) = {target:.4f} >= 1 exceeds any BPSK capacity")
    lo, hi = -30.0, 30.0
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if biawgn_capacity_snr_db(mid) > target:
            hi = mid
        else:
            lo = mid
    snr = hi
    if grid_db is not None:
        i = math.floor(lo / grid_db)
        while biawgn_capacity_snr_db(i * grid_db) <= target:
            i += 1
        snr = i * grid_db
    ebn0 = snr - 10 * math.log10(2 * target)
    return ShannonLimit(snr, ebn0, target)


def source_limit(R: float) -> float:
    """Largest ``theta <= 1/2`` with ``H(theta) <= R`` (inverse binary entropy)."""
    if R <= 0:
        raise ValueError("rate must be positive")
    if R > 1.0:
        warnings.warn(f"rate {R} > 1: clamping the source limit to 1/2", stacklevel=2)
    if R >= 1.0:
        return 0.5
    return optimize.brentq(lambda t: entropy(t) - R, 1e-300, 0.5, xtol=1e-15, rtol=1e-15)


def lmtr(theta: float, ch: ChannelModel) -> float:
    """Limit of the minimum transmission ratio ``H(U)/C``."""
    c = channel_capacity(ch)
    if c <= 0:
        raise InfeasibleError("channel has zero capacity")
    return entropy(theta) / c
