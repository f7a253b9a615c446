"""RaS and Conv-RaS generator ensembles.

Every generator block is ``k x n_k`` with column weight at most one, so it is
stored as one row index per column, ``-1`` marking an all-zero column.
Generators are pure functions of their parameters and an integer seed.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bits import DimensionError, as_bits

NONE = -1
MODES = ("iid", "regular", "identity")


class ParameterError(ValueError):
    """Invalid ensemble parameters."""


def _seed_of(rng) -> int:
    if rng is None:
        raise ParameterError("a seed or numpy Generator is required")
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2**63 - 1))
    seed = int(rng)
    if seed < 0:
        raise ParameterError("seed must be non-negative")
    return seed


def _check_positive(**kw):
    for name, val in kw.items():
        if int(val) < 1:
            raise ParameterError(f"{name} must be >= 1, got {val}")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.int64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SparseGenBlock:
    """A ``k x n_k`` block; ``cols[j]`` is the row of the single 1 in column j."""

    k: int
    n_k: int
    cols: np.ndarray

    def __post_init__(self):
        cols = _frozen(self.cols)
        if cols.shape != (self.n_k,):
            raise DimensionError(f"expected {self.n_k} columns, got {cols.shape}")
        if cols.size and (cols.min() < NONE or cols.max() >= self.k):
            raise ParameterError("column entries must lie in [-1, k)")
        object.__setattr__(self, "cols", cols)

    def to_dense(self) -> np.ndarray:
        d = np.zeros((self.k, self.n_k), dtype=np.uint8)
        j = np.flatnonzero(self.cols >= 0)
        d[self.cols[j], j] = 1
        return d

    def apply(self, u) -> np.ndarray:
        """Row-vector product ``u @ block`` over GF(2)."""
        u = as_bits(u)
        if u.size != self.k:
            raise DimensionError(f"sub-block length {u.size} != k={self.k}")
        out = np.zeros(self.n_k, dtype=np.uint8)
        j = self.cols >= 0
        out[j] = u[self.cols[j]]
        return out

    def __eq__(self, other):
        if not isinstance(other, SparseGenBlock):
            return NotImplemented
        return (self.k, self.n_k) == (other.k, other.n_k) and np.array_equal(self.cols, other.cols)

    __hash__ = None


def sample_block(k: int, n_k: int, rng) -> SparseGenBlock:
    """Each column uniform over the ``k + 1`` vectors of weight <= 1."""
    _check_positive(k=k, n_k=n_k)
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(_seed_of(rng))
    return SparseGenBlock(k, n_k, rng.integers(NONE, k, size=n_k))


def make_cpm_block(B: int, shift: int) -> SparseGenBlock:
    """Circulant permutation matrix: column j carries row ``(j + shift) mod B``."""
    _check_positive(B=B)
    if not 0 <= shift < B:
        raise ParameterError(f"shift {shift} outside [0, {B})")
    return SparseGenBlock(B, B, (np.arange(B) + shift) % B)


# --------------------------------------------------------------------------
# Block RaS


@dataclass(frozen=True, eq=False)
class BlockRaSGenerator:
    """Parity part ``G`` of the systematic generator ``[I G]``.

    ``cols[i, j]`` holds the columns of block ``G_{i,j}``.
    """

    k: int
    n_k: int
    m: int
    cols: np.ndarray
    seed: int | None = None
    mode: str = "iid"

    def __post_init__(self):
        cols = _frozen(self.cols)
        if cols.shape != (self.m + 1, self.m + 1, self.n_k):
            raise DimensionError(f"block grid shape {cols.shape} inconsistent with m={self.m}, n_k={self.n_k}")
        if cols.size and (cols.min() < NONE or cols.max() >= self.k):
            raise ParameterError("column entries must lie in [-1, k)")
        object.__setattr__(self, "cols", cols)

    @property
    def K(self) -> int:
        return self.k * (self.m + 1)

    @property
    def N(self) -> int:
        return (self.k + self.n_k) * (self.m + 1)

    def block(self, i: int, j: int) -> SparseGenBlock:
        return SparseGenBlock(self.k, self.n_k, self.cols[i, j])

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence[SparseGenBlock]]) -> BlockRaSGenerator:
        m1 = len(blocks)
        if any(len(row) != m1 for row in blocks):
            raise DimensionError("block grid must be square")
        k, n_k = blocks[0][0].k, blocks[0][0].n_k
        cols = np.array([[b.cols for b in row] for row in blocks])
        return cls(k, n_k, m1 - 1, cols, None, "custom")

    def check_neighbors(self) -> np.ndarray:
        """``(N-K, m+1)`` info-bit indices of each parity bit, ``-1`` if absent."""
        m1, k = self.m + 1, self.k
        # parity bit j*n_k + t, neighbour through row block i
        nb = np.transpose(self.cols, (1, 2, 0)).reshape(m1 * self.n_k, m1)
        offs = (np.arange(m1) * k)[None, :]
        return np.where(nb >= 0, nb + offs, NONE)

    def to_dense(self) -> np.ndarray:
        G = np.zeros((self.K, self.n_k * (self.m + 1)), dtype=np.uint8)
        nb = self.check_neighbors()
        r, d = np.nonzero(nb >= 0)
        G[nb[r, d], r] = 1
        return G

    def __eq__(self, other):
        if not isinstance(other, BlockRaSGenerator):
            return NotImplemented
        return (self.k, self.n_k, self.m) == (other.k, other.n_k, other.m) and np.array_equal(self.cols, other.cols)

    __hash__ = None


def sample_block_ras(k: int, n_k: int, m: int, rng) -> BlockRaSGenerator:
    _check_positive(k=k, n_k=n_k)
    if m < 0:
        raise ParameterError("m must be >= 0")
    seed = _seed_of(rng)
    g = np.random.default_rng(seed)
    cols = g.integers(NONE, k, size=(m + 1, m + 1, n_k))
    return BlockRaSGenerator(k, n_k, m, cols, seed, "iid")


# --------------------------------------------------------------------------
# Conv-RaS


def _regular_row(k: int, n_k: int, m: int, g: np.random.Generator) -> np.ndarray:
    # One stream of concatenated permutations cut into m+1 blocks, so every
    # info bit is repeated floor or ceil of (m+1)*n_k/k times.
    total = (m + 1) * n_k
    perms = [g.permutation(k) for _ in range(-(-total // k))]
    return np.concatenate(perms)[:total].reshape(m + 1, n_k)


def _sample_row(k, n_k, m, mode, g):
    if mode == "iid":
        return g.integers(NONE, k, size=(m + 1, n_k))
    if mode == "regular":
        return _regular_row(k, n_k, m, g)
    if mode == "identity":
        return np.tile(np.arange(k), (m + 1, 1))
    raise ParameterError(f"unknown generator mode {mode!r}")


@dataclass(frozen=True, eq=False)
class ConvRaSGenerator:
    """Banded Conv-RaS generator.

    ``row_cols[d]`` is block ``G_{t,t+d}``; a time-invariant generator reuses
    the same ``m + 1`` blocks on every row, a time-varying one derives row t
    from ``(seed, t)``.
    """

    k: int
    n_k: int
    m: int
    row_cols: np.ndarray
    time_invariant: bool = True
    mode: str = "regular"
    seed: int | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        rc = _frozen(self.row_cols)
        if rc.shape != (self.m + 1, self.n_k):
            raise DimensionError(f"row blocks shape {rc.shape} inconsistent with m={self.m}, n_k={self.n_k}")
        if rc.size and (rc.min() < NONE or rc.max() >= self.k):
            raise ParameterError("column entries must lie in [-1, k)")
        if not self.time_invariant and self.seed is None:
            raise ParameterError("a time-varying generator needs a seed")
        object.__setattr__(self, "row_cols", rc)

    @property
    def rate(self) -> float:
        return self.k / self.n_k

    def row_blocks(self, t: int) -> np.ndarray:
        """Columns of ``G_{t,t}, ..., G_{t,t+m}`` as an ``(m+1, n_k)`` array."""
        if self.time_invariant or t == 0:
            return self.row_cols
        rc = self._cache.get(t)
        if rc is None:
            g = np.random.default_rng([self.seed, t])
            rc = _frozen(_sample_row(self.k, self.n_k, self.m, self.mode, g))
            if len(self._cache) < 4096:
                self._cache[t] = rc
        return rc

    def block(self, t: int, d: int) -> SparseGenBlock:
        return SparseGenBlock(self.k, self.n_k, self.row_blocks(t)[d])

    def check_neighbors(self, n_blocks: int) -> np.ndarray:
        """``(n_blocks*n_k, m+1)`` message-bit indices of each coded bit.

        Column d of coded block t refers to message block ``t - d``; entries
        before the start of the stream or on all-zero columns are ``-1``.
        """
        m1, k, n_k = self.m + 1, self.k, self.n_k
        if self.time_invariant:
            nb = np.broadcast_to(self.row_cols.T, (n_blocks, n_k, m1)).copy()
        else:
            nb = np.empty((n_blocks, n_k, m1), dtype=np.int64)
            for t in range(n_blocks):
                for d in range(m1):
                    nb[t, :, d] = self.row_blocks(t - d)[d] if t >= d else NONE
        t = np.arange(n_blocks)[:, None, None]
        d = np.arange(m1)[None, None, :]
        src = t - d
        out = np.where((nb >= 0) & (src >= 0), nb + src * k, NONE)
        return out.reshape(n_blocks * n_k, m1)

    def __eq__(self, other):
        if not isinstance(other, ConvRaSGenerator):
            return NotImplemented
        return (
            (self.k, self.n_k, self.m, self.time_invariant, self.mode, self.seed)
            == (other.k, other.n_k, other.m, other.time_invariant, other.mode, other.seed)
            and np.array_equal(self.row_cols, other.row_cols)
        )

    __hash__ = None


def sample_conv_ras(k: int, n_k: int, m: int, rng, time_invariant: bool = True,
                    mode: str = "regular") -> ConvRaSGenerator:
    """Sample a Conv-RaS generator.

    ``mode="iid"`` draws every column uniformly from the weight-<=1 vectors;
    ``mode="regular"`` builds blocks from random permutations (repeat and
    interleave); ``mode="identity"`` uses identity blocks (``k == n_k``).
    """
    _check_positive(k=k, n_k=n_k)
    if m < 0:
        raise ParameterError("m must be >= 0")
    if mode not in MODES:
        raise ParameterError(f"unknown generator mode {mode!r}")
    if mode == "identity" and k != n_k:
        raise ParameterError("identity mode needs k == n_k")
    seed = _seed_of(rng)
    row = _sample_row(k, n_k, m, mode, np.random.default_rng([seed, 0]))
    return ConvRaSGenerator(k, n_k, m, row, time_invariant, mode, seed)


# --------------------------------------------------------------------------
# Dual (parity-check) code


@dataclass(frozen=True, eq=False)
class ParityCheckMatrix:
    """``H = G^T`` stored as the info-bit support of each row."""

    n_rows: int
    n_cols: int
    support: np.ndarray  # (n_rows, m+1), -1 padded
    k: int
    n_k: int
    m: int

    def syndrome(self, u) -> np.ndarray:
        u = as_bits(u)
        if u.size != self.n_cols:
            raise DimensionError(f"word length {u.size} != {self.n_cols}")
        ext = np.append(u, 0)  # index -1 reads the padding zero
        return np.bitwise_xor.reduce(ext[self.support], axis=1).astype(np.uint8)

    def to_dense(self) -> np.ndarray:
        H = np.zeros((self.n_rows, self.n_cols), dtype=np.uint8)
        r, d = np.nonzero(self.support >= 0)
        H[r, self.support[r, d]] = 1
        return H

    def transpose(self) -> BlockRaSGenerator:
        """Recover the generator whose transpose this is."""
        m1 = self.m + 1
        cols = np.full((m1, m1, self.n_k), NONE, dtype=np.int64)
        for r in range(self.n_rows):
            j, t = divmod(r, self.n_k)
            for c in self.support[r]:
                if c >= 0:
                    i, row = divmod(int(c), self.k)
                    cols[i, j, t] = row
        return BlockRaSGenerator(self.k, self.n_k, self.m, cols, None, "custom")


def dual_parity_check(G: BlockRaSGenerator) -> ParityCheckMatrix:
    sup = _frozen(G.check_neighbors())
    return ParityCheckMatrix(G.n_k * (G.m + 1), G.K, sup, G.k, G.n_k, G.m)


def is_codeword(u, G: BlockRaSGenerator) -> bool:
    """True iff ``u G = 0``, i.e. u belongs to the dual parity-check code."""
    bits = as_bits(u)
    if bits.size != G.K:
        raise DimensionError(f"word length {bits.size} != K={G.K}")
    return not dual_parity_check(G).syndrome(bits).any()


# --------------------------------------------------------------------------
# Serialization: header "k n_k m mode seed", then one line per block.


def dumps_generator(gen: BlockRaSGenerator | ConvRaSGenerator) -> str:
    out = io.StringIO()
    seed = -1 if gen.seed is None else gen.seed
    if isinstance(gen, BlockRaSGenerator):
        out.write(f"{gen.k} {gen.n_k} {gen.m} block-{gen.mode} {seed}\n")
        rows = gen.cols.reshape(-1, gen.n_k)
    else:
        tag = gen.mode if gen.time_invariant else f"{gen.mode}-tv"
        out.write(f"{gen.k} {gen.n_k} {gen.m} conv-{tag} {seed}\n")
        rows = gen.row_cols
    for r in rows:
        out.write(" ".join(str(int(c)) for c in r) + "\n")
    return out.getvalue()


def loads_generator(text: str) -> BlockRaSGenerator | ConvRaSGenerator:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty generator file")
    head = lines[0].split()
    if len(head) != 5:
        raise ValueError(f"bad header: {lines[0]!r}")
    k, n_k, m = (int(x) for x in head[:3])
    kind, seed = head[3], int(head[4])
    seed = None if seed < 0 else seed
    rows = np.array([[int(x) for x in ln.split()] for ln in lines[1:]], dtype=np.int64)
    family, _, mode = kind.partition("-")
    if family == "block":
        return BlockRaSGenerator(k, n_k, m, rows.reshape(m + 1, m + 1, n_k), seed, mode)
    if family == "conv":
        tv = mode.endswith("-tv")
        mode = mode[:-3] if tv else mode
        return ConvRaSGenerator(k, n_k, m, rows.reshape(m + 1, n_k), not tv, mode, seed)
    raise ValueError(f"unknown generator kind {kind!r}")
