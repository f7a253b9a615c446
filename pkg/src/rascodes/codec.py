"""Encoders and decoders for block RaS and Conv-RaS codes.

All decoders share one graph convention: a variable node per message bit and a
check node per coded (parity) bit, the check's channel LLR entering as a
half-edge.  LLRs are natural-log ``ln P(0)/P(1)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._bp import check_sweeps, conv_parity
from .bits import BitVector, DimensionError, as_bits
from .channel import LLR_CAP, prior_llr
from .ensemble import BlockRaSGenerator, ConvRaSGenerator

MAP_MAX_K = 20
SCOPES = ("target", "window")


class GuardError(ValueError):
    """Problem too large for the exhaustive oracle."""


@dataclass(frozen=True)
class DecoderConfig:
    """BP knobs.

    ``convergence_scope`` picks which posteriors the sliding-window stopping
    test watches: ``"target"`` only the block about to be committed,
    ``"window"`` every message bit in the window.
    """

    max_iterations: int = 50
    convergence_threshold: float = 1e-3
    window_blocks: int | None = None  # None -> 2(m+1)
    llr_cap: float = LLR_CAP
    convergence_scope: str = "target"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.convergence_threshold > 0:
            raise ValueError("convergence_threshold must be > 0")
        if not self.llr_cap > 0:
            raise ValueError("llr_cap must be > 0")
        if self.convergence_scope not in SCOPES:
            raise ValueError(f"convergence_scope must be one of {SCOPES}")

    def window_for(self, m: int) -> int:
        W = 2 * (m + 1) if self.window_blocks is None else self.window_blocks
        if W < m + 1:
            raise ValueError(f"window_blocks={W} must be >= m+1={m + 1}")
        return W


@dataclass(frozen=True)
class DecodeResult:
    estimate: BitVector
    iterations_used: int
    converged: bool
    posterior_llrs: np.ndarray

    def bits(self) -> np.ndarray:
        return self.estimate.to_array()


def hard_decision(llrs: np.ndarray) -> np.ndarray:
    """Bit 1 iff the LLR is negative; an exact zero decides 0."""
    return (np.asarray(llrs) < 0).astype(np.uint8)


def _llr_vec(x, n: int, what: str) -> np.ndarray:
    a = np.asarray(x, dtype=float).reshape(-1)
    if a.size != n:
        raise DimensionError(f"{what}: expected {n} LLRs, got {a.size}")
    return a


# --------------------------------------------------------------------------
# Encoders


def block_parity(G: BlockRaSGenerator, u) -> np.ndarray:
    bits = as_bits(u)
    if bits.size != G.K:
        raise DimensionError(f"message length {bits.size} != K={G.K}")
    return conv_parity(G.check_neighbors(), bits)


def encode_block(G: BlockRaSGenerator, u) -> BitVector:
    """Systematic codeword ``[u | uG]``."""
    bits = as_bits(u)
    return BitVector(np.concatenate([bits, block_parity(G, bits)]))


def _stack_blocks(blocks: Sequence, k: int) -> np.ndarray:
    arrs = [as_bits(b) for b in blocks]
    for i, a in enumerate(arrs):
        if a.size != k:
            raise DimensionError(f"message block {i} has length {a.size}, expected {k}")
    return np.concatenate(arrs) if arrs else np.zeros(0, dtype=np.uint8)


def _neighbors(gen: ConvRaSGenerator, n_blocks: int) -> np.ndarray:
    key = ("neighbors", n_blocks)
    nb = gen._cache.get(key)
    if nb is None:
        nb = gen.check_neighbors(n_blocks)
        nb.setflags(write=False)
        gen._cache[key] = nb
    return nb


def conv_encode_bits(gen: ConvRaSGenerator, u: np.ndarray) -> np.ndarray:
    """Flat coded stream for a flat message stream (length multiple of k)."""
    n_blocks = u.size // gen.k
    if n_blocks == 0:
        return np.zeros(0, dtype=np.uint8)
    return conv_parity(_neighbors(gen, n_blocks), u)


def encode_conv_stream(gen: ConvRaSGenerator, message_blocks: Sequence) -> list[BitVector]:
    """Coded blocks ``x_t = sum_d u_{t-d} G_{t-d, t}``, one per message block."""
    u = _stack_blocks(message_blocks, gen.k)
    x = conv_encode_bits(gen, u)
    return [BitVector(b) for b in x.reshape(-1, gen.n_k)] if x.size else []


def terminate(gen: ConvRaSGenerator, message_blocks: Sequence) -> list[BitVector]:
    """Encode after appending m all-zero message blocks."""
    tail = [np.zeros(gen.k, dtype=np.uint8)] * gen.m
    return encode_conv_stream(gen, list(message_blocks) + tail)


# --------------------------------------------------------------------------
# Exhaustive MAP oracle


def posterior_score(G: BlockRaSGenerator, theta: float, llr_sys, llr_par, u) -> float:
    """Log posterior of message u up to a constant (nats).

    A bit b with LLR L contributes ``-b L``; the prior contributes
    ``w log(theta/(1-theta))`` for weight w.
    """
    bits = as_bits(u).astype(float)
    x = block_parity(G, as_bits(u)).astype(float)
    ls = _llr_vec(llr_sys, G.K, "systematic")
    lp = _llr_vec(llr_par, G.n_k * (G.m + 1), "parity")
    return float(_prior_term(theta, bits.sum(), G.K) - bits @ ls - x @ lp)


def _prior_term(theta: float, weight, K: int):
    # log-prior up to a constant; impossible weights score -inf
    weight = np.asarray(weight)
    if theta == 0.0:
        return np.where(weight > 0, -np.inf, 0.0)
    if theta == 1.0:
        return np.where(weight < K, -np.inf, 0.0)
    return weight * np.log(theta / (1 - theta))


def _all_scores(G: BlockRaSGenerator, theta: float, ls: np.ndarray, lp: np.ndarray):
    K = G.K
    # messages in lexicographic order, u_0 most significant
    U = np.array(list(itertools.product((0, 1), repeat=K)), dtype=np.uint8)
    nb = G.check_neighbors()
    X = np.zeros((U.shape[0], nb.shape[0]), dtype=np.uint8)
    for d in range(nb.shape[1]):
        col = nb[:, d]
        ok = col >= 0
        X[:, ok] ^= U[:, col[ok]]
    scores = _prior_term(theta, U.sum(axis=1), K) - U @ ls - X @ lp
    return U, scores


def map_decode_exhaustive(G: BlockRaSGenerator, theta: float, llr_sys, llr_par) -> DecodeResult:
    """Blockwise MAP by enumeration of all ``2^K`` messages (K <= 20).

    ``posterior_llrs`` holds the exact bitwise marginal LLRs; the estimate is
    the jointly most probable message, ties to the lexicographically smaller.
    """
    K = G.K
    if K > MAP_MAX_K:
        raise GuardError(f"K={K} exceeds the enumeration guard {MAP_MAX_K}")
    ls = _llr_vec(llr_sys, K, "systematic")
    lp = _llr_vec(llr_par, G.n_k * (G.m + 1), "parity")
    U, scores = _all_scores(G, theta, ls, lp)
    best = int(np.argmax(scores))  # first maximum == lexicographically smallest
    top = scores[best]
    p = np.exp(scores - top)
    marg = np.empty(K)
    with np.errstate(divide="ignore"):
        for i in range(K):
            p1 = p[U[:, i] == 1].sum()
            p0 = p[U[:, i] == 0].sum()
            marg[i] = np.log(p0) - np.log(p1)
    return DecodeResult(BitVector(U[best]), 1, True, marg)


# --------------------------------------------------------------------------
# Block BP


def bp_decode_block(G: BlockRaSGenerator, theta: float, llr_sys, llr_par,
                    cfg: DecoderConfig | None = None) -> DecodeResult:
    """Sum-product over the block RaS graph, serial check schedule."""
    cfg = cfg or DecoderConfig()
    K = G.K
    ls = _llr_vec(llr_sys, K, "systematic")
    lp = _llr_vec(llr_par, G.n_k * (G.m + 1), "parity")
    nb = G.check_neighbors()
    post = ls + prior_llr(theta, cfg.llr_cap)
    c2v = np.zeros(nb.shape)
    it, ok = check_sweeps(nb, lp, c2v, post, 0, nb.shape[0], 0, K,
                          cfg.max_iterations, cfg.convergence_threshold, cfg.llr_cap)
    return DecodeResult(BitVector(hard_decision(post)), int(it), bool(ok), post)


# --------------------------------------------------------------------------
# Conv-RaS decoding


def _stream(llr_stream, n_k: int) -> np.ndarray:
    if isinstance(llr_stream, np.ndarray) and llr_stream.ndim == 1:
        flat = llr_stream.astype(float)
    else:
        flat = np.concatenate([np.asarray(b, dtype=float).reshape(-1) for b in llr_stream]) \
            if len(llr_stream) else np.zeros(0)
    if flat.size % n_k:
        raise DimensionError(f"LLR stream length {flat.size} is not a multiple of n-k={n_k}")
    return flat


def _split(post: np.ndarray, k: int, n_blocks: int, iters, conv) -> list[DecodeResult]:
    out = []
    for b in range(n_blocks):
        blk = post[b * k:(b + 1) * k].copy()
        out.append(DecodeResult(BitVector(hard_decision(blk)), int(iters[b]), bool(conv[b]), blk))
    return out


def _initial_priors(gen, theta, L, n_data, cap, source_llrs):
    k = gen.k
    prior = np.full(L * k, prior_llr(theta, cap))
    if source_llrs is not None:
        prior[: n_data * k] += _llr_vec(source_llrs, n_data * k, "systematic")
    prior[n_data * k:] = cap  # known zero tail
    return prior


def bp_decode_stream(gen: ConvRaSGenerator, theta: float, llr_stream, cfg: DecoderConfig | None = None,
                     terminated: bool = True, source_llrs=None) -> list[DecodeResult]:
    """Whole-stream BP over the unrolled Conv-RaS graph (no windowing)."""
    cfg = cfg or DecoderConfig()
    lp = _stream(llr_stream, gen.n_k)
    L = lp.size // gen.n_k
    n_data = L - gen.m if terminated else L
    if n_data < 0:
        raise DimensionError("terminated stream shorter than its tail")
    nb = _neighbors(gen, L)
    post = _initial_priors(gen, theta, L, n_data, cfg.llr_cap, source_llrs)
    c2v = np.zeros(nb.shape)
    it, ok = check_sweeps(nb, lp, c2v, post, 0, L * gen.n_k, 0, n_data * gen.k,
                          cfg.max_iterations, cfg.convergence_threshold, cfg.llr_cap)
    return _split(post, gen.k, n_data, [it] * n_data, [ok] * n_data)


def bp_decode_sliding_window(gen: ConvRaSGenerator, theta: float, llr_stream,
                             cfg: DecoderConfig | None = None, terminated: bool = True,
                             source_llrs=None) -> list[DecodeResult]:
    """Sliding-window BP over a Conv-RaS coded stream.

    The window spans coded blocks ``[s, s+W)``.  After the stopping test the
    oldest uncommitted message block s is hard-decided and pinned with
    ``+-llr_cap`` priors; messages inside the window carry over to the next
    position.  Once the window reaches the end of the stream, all remaining
    blocks are decoded together.  Each result carries the posteriors of its
    block at the moment it was committed.  With ``terminated`` the last m message
    blocks are the known zero tail; ``source_llrs`` are optional systematic
    observations of the data bits.
    """
    cfg = cfg or DecoderConfig()
    k, n_k, m = gen.k, gen.n_k, gen.m
    W = cfg.window_for(m)
    lp = _stream(llr_stream, n_k)
    L = lp.size // n_k
    n_data = L - m if terminated else L
    if n_data < 0:
        raise DimensionError("terminated stream shorter than its tail")
    nb = _neighbors(gen, L)
    cap = cfg.llr_cap
    prior = _initial_priors(gen, theta, L, n_data, cap, source_llrs)
    post = prior.copy()
    c2v = np.zeros(nb.shape)
    iters = np.zeros(n_data, dtype=np.int64)
    conv = np.zeros(n_data, dtype=bool)
    final = np.zeros(n_data * k)  # posteriors at commit time
    for s in range(n_data):
        last = s + W >= L
        e = min(s + W, L)
        if last or cfg.convergence_scope == "window":
            v_hi = min(e, n_data) * k
        else:
            v_hi = (s + 1) * k
        it, ok = check_sweeps(nb, lp, c2v, post, s * n_k, e * n_k, s * k, v_hi,
                              cfg.max_iterations, cfg.convergence_threshold, cap)
        if last:
            iters[s:] = it
            conv[s:] = ok
            final[s * k:] = post[s * k:n_data * k]
            break
        iters[s], conv[s] = it, ok
        # commit block s as a saturated prior
        sl = slice(s * k, (s + 1) * k)
        final[sl] = post[sl]
        pinned = np.where(post[sl] < 0, -cap, cap)
        post[sl] += pinned - prior[sl]
        prior[sl] = pinned
    return _split(final, k, n_data, iters, conv)


def genie_aided_decode(gen: ConvRaSGenerator, theta: float, llr_stream, true_blocks,
                       target: int, cfg: DecoderConfig | None = None,
                       source_llrs=None) -> DecodeResult:
    """Decode message block ``target`` with every other block revealed.

    ``true_blocks`` lists all message blocks of the stream (tail included for
    a terminated stream).  Each check meets the target block in at most one
    bit, so BP here is exact after a single sweep.
    """
    cfg = cfg or DecoderConfig()
    k, n_k, m = gen.k, gen.n_k, gen.m
    lp = _stream(llr_stream, n_k)
    L = lp.size // n_k
    u = _stack_blocks(true_blocks, k)
    if u.size != L * k:
        raise DimensionError(f"need {L} true message blocks, got {u.size // k}")
    if not 0 <= target < L:
        raise ValueError(f"target block {target} outside [0, {L})")
    cap = cfg.llr_cap
    post = np.where(u == 1, -cap, cap).astype(float)
    sl = slice(target * k, (target + 1) * k)
    post[sl] = prior_llr(theta, cap)
    if source_llrs is not None:
        src = np.asarray(source_llrs, dtype=float).reshape(-1)
        post[sl] += src[sl]
    nb = _neighbors(gen, L)
    c_lo, c_hi = target * n_k, min(target + m + 1, L) * n_k
    c2v = np.zeros(nb.shape)
    it, ok = check_sweeps(nb, lp, c2v, post, c_lo, c_hi, sl.start, sl.stop,
                          cfg.max_iterations, cfg.convergence_threshold, cap)
    blk = post[sl].copy()
    return DecodeResult(BitVector(hard_decision(blk)), int(it), bool(ok), blk)


def first_error_event(estimates: Sequence, truth: Sequence) -> int | None:
    """Index of the first committed block that differs from the truth."""
    for i, (e, t) in enumerate(zip(estimates, truth)):
        a = e.estimate if isinstance(e, DecodeResult) else e
        if not np.array_equal(as_bits(a), as_bits(t)):
            return i
    return None
