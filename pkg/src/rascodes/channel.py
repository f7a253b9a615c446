"""BIOS memoryless channel models.

Every channel here is summarised, for analysis purposes, by the law of its
log-likelihood ratio ``L = ln P(y|0)/P(y|1)`` given that 0 was sent.  Symmetry
makes the law given 1 the mirror image, so any expectation a BIOS quantity
needs is an expectation under ``P(.|0)`` of a function of ``L``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import special

from .bits import as_bits

LLR_CAP = 30.0
LN2 = math.log(2.0)

# tolerance of the adaptive Gauss-Hermite rule used for BI-AWGN expectations
GH_TOL = 1e-12
_GH_ORDERS = (48, 96, 192, 384, 768)


class ChannelError(ValueError):
    """Invalid channel parameter or incompatible observation."""


class Kind(enum.Enum):
    BSC = "bsc"
    BEC = "bec"
    BIAWGN = "biawgn"
    NOISELESS = "noiseless"
    TOTALLY_ERASED = "erased"


@dataclass(frozen=True)
class ChannelModel:
    kind: Kind
    param: float = 0.0

    def __post_init__(self):
        p = float(self.param)
        if self.kind is Kind.BSC and not 0.0 <= p <= 0.5:
            raise ChannelError(f"BSC crossover {p} outside [0, 1/2]")
        if self.kind is Kind.BEC and not 0.0 <= p <= 1.0:
            raise ChannelError(f"BEC erasure probability {p} outside [0, 1]")
        if self.kind is Kind.BIAWGN and not (p > 0 and math.isfinite(p)):
            raise ChannelError(f"BI-AWGN noise std {p} must be positive")
        object.__setattr__(self, "param", p)

    # constructors
    @classmethod
    def bsc(cls, eps: float) -> ChannelModel:
        return cls(Kind.BSC, eps)

    @classmethod
    def bec(cls, eta: float) -> ChannelModel:
        return cls(Kind.BEC, eta)

    @classmethod
    def biawgn(cls, sigma: float) -> ChannelModel:
        return cls(Kind.BIAWGN, sigma)

    @classmethod
    def biawgn_snr_db(cls, snr_db: float) -> ChannelModel:
        """BPSK over AWGN with ``SNR = 1/sigma^2`` given in dB."""
        return cls(Kind.BIAWGN, sigma_from_snr_db(snr_db))

    @classmethod
    def noiseless(cls) -> ChannelModel:
        return cls(Kind.NOISELESS)

    @classmethod
    def totally_erased(cls) -> ChannelModel:
        return cls(Kind.TOTALLY_ERASED)

    @property
    def sigma(self) -> float:
        if self.kind is not Kind.BIAWGN:
            raise ChannelError("sigma is only defined for BI-AWGN")
        return self.param

    @property
    def snr_db(self) -> float:
        return 10 * math.log10(1.0 / self.sigma**2)

    def symmetry_map(self, y: np.ndarray) -> np.ndarray:
        """The involution pi with ``P(y|1) = P(pi(y)|0)``."""
        y = np.asarray(y)
        if self.kind is Kind.BIAWGN:
            return -y
        if self.kind is Kind.TOTALLY_ERASED:
            return y
        return np.where(y == ERASED, ERASED, 1 - y)

    def __str__(self):
        if self.kind in (Kind.NOISELESS, Kind.TOTALLY_ERASED):
            return self.kind.value
        return f"{self.kind.value}({self.param:g})"


def sigma_from_snr_db(snr_db: float) -> float:
    return 10 ** (-snr_db / 20.0)


def snr_db_from_ebn0_db(ebn0_db: float, rate: float, source_entropy: float = 1.0) -> float:
    """``Eb/N0 = SNR / (2 R H)`` with R information symbols per channel use."""
    return ebn0_db + 10 * math.log10(2 * rate * source_entropy)


def ebn0_db_from_snr_db(snr_db: float, rate: float, source_entropy: float = 1.0) -> float:
    return snr_db - 10 * math.log10(2 * rate * source_entropy)


# --------------------------------------------------------------------------
# Transmission and LLRs

ERASED = 2  # observation mark for an erased symbol


@dataclass(frozen=True)
class Observation:
    channel: ChannelModel
    values: np.ndarray

    def __len__(self):
        return self.values.size


def transmit(x, ch: ChannelModel, rng: np.random.Generator) -> Observation:
    bits = as_bits(x)
    n = bits.size
    if ch.kind is Kind.NOISELESS:
        y = bits.copy()
    elif ch.kind is Kind.BSC:
        y = bits ^ (rng.random(n) < ch.param).astype(np.uint8)
    elif ch.kind is Kind.BEC:
        y = np.where(rng.random(n) < ch.param, ERASED, bits).astype(np.uint8)
    elif ch.kind is Kind.BIAWGN:
        y = (1.0 - 2.0 * bits) + ch.param * rng.standard_normal(n)
    else:
        y = np.full(n, ERASED, dtype=np.uint8)
    return Observation(ch, y)


def prior_llr(theta: float, cap: float = LLR_CAP) -> float:
    """``ln((1-theta)/theta)`` for a Bernoulli(theta) source, saturated at cap."""
    if not 0.0 <= theta <= 1.0:
        raise ChannelError(f"source probability {theta} outside [0, 1]")
    if theta == 0.0:
        return cap
    if theta == 1.0:
        return -cap
    return float(np.clip(math.log((1 - theta) / theta), -cap, cap))


def llr(ch: ChannelModel, obs: Observation | np.ndarray, source_prior: float | None = None,
        cap: float = LLR_CAP) -> np.ndarray:
    """Per-symbol ``ln P(y|0)/P(y|1)`` in nats, plus the prior LLR when given."""
    y = obs.values if isinstance(obs, Observation) else np.asarray(obs)
    if ch.kind is Kind.TOTALLY_ERASED:
        if source_prior is None:
            raise ChannelError("a totally erased channel carries no information; supply a source prior")
        out = np.zeros(y.size)
    elif ch.kind is Kind.BIAWGN:
        out = 2.0 * y / ch.param**2
    elif ch.kind is Kind.NOISELESS or (ch.kind is Kind.BSC and ch.param == 0.0):
        out = np.where(y == 0, cap, -cap).astype(float)
    elif ch.kind is Kind.BSC:
        mag = min(math.log((1 - ch.param) / ch.param), cap) if ch.param < 0.5 else 0.0
        out = np.where(y == 0, mag, -mag).astype(float)
    else:  # BEC
        out = np.select([y == ERASED, y == 0], [0.0, cap], -cap).astype(float)
    if source_prior is not None:
        out = out + prior_llr(source_prior, cap)
    return out


# --------------------------------------------------------------------------
# Expectations under P(.|0)


@lru_cache(maxsize=None)
def _gh_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    # probabilists' Hermite rule: nodes/weights for a standard normal
    z, w = special.roots_hermitenorm(n)
    return z, w / math.sqrt(2.0 * math.pi)


def llr_atoms(ch: ChannelModel) -> tuple[np.ndarray, np.ndarray] | None:
    """Discrete law of L given input 0 as ``(values, probs)``; None for BI-AWGN.

    ``+inf`` marks an output that is impossible under input 1.
    """
    inf = math.inf
    if ch.kind is Kind.NOISELESS:
        return np.array([inf]), np.array([1.0])
    if ch.kind is Kind.TOTALLY_ERASED:
        return np.array([0.0]), np.array([1.0])
    if ch.kind is Kind.BSC:
        e = ch.param
        if e == 0.0:
            return np.array([inf]), np.array([1.0])
        a = math.log((1 - e) / e)
        return np.array([a, -a]), np.array([1 - e, e])
    if ch.kind is Kind.BEC:
        return np.array([inf, 0.0]), np.array([1 - ch.param, ch.param])
    return None


def expect0(ch: ChannelModel, f: Callable[[np.ndarray], np.ndarray], tol: float = GH_TOL) -> float:
    """``E[f(L) | X = 0]`` for the channel's LLR ``L``.

    For BI-AWGN, ``L ~ N(2/s^2, 4/s^2)`` and the expectation uses Gauss-Hermite
    rules of doubling order until two successive estimates agree within tol.
    """
    atoms = llr_atoms(ch)
    if atoms is not None:
        vals, probs = atoms
        keep = probs > 0
        return float(np.dot(probs[keep], f(vals[keep])))
    s = ch.param
    mean, std = 2.0 / s**2, 2.0 / s
    prev = None
    for n in _GH_ORDERS:
        z, w = _gh_rule(n)
        est = float(np.dot(w, f(mean + std * z)))
        if prev is not None and abs(est - prev) <= tol:
            return est
        prev = est
    return est


def _log2_1p_exp_neg(L: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, -L) / LN2


def channel_capacity(ch: ChannelModel) -> float:
    """Capacity in bits per use (uniform input)."""
    if ch.kind is Kind.NOISELESS:
        return 1.0
    if ch.kind is Kind.TOTALLY_ERASED:
        return 0.0
    if ch.kind is Kind.BEC:
        return 1.0 - ch.param
    if ch.kind is Kind.BSC:
        e = ch.param
        if e == 0.0:
            return 1.0
        return 1.0 + e * math.log2(e) + (1 - e) * math.log2(1 - e)
    return 1.0 - expect0(ch, _log2_1p_exp_neg)


def biawgn_capacity_snr_db(snr_db: float) -> float:
    return channel_capacity(ChannelModel.biawgn_snr_db(snr_db))
