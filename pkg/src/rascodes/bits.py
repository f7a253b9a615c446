"""Packed binary vectors and weight bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

_WORD = 64


class DimensionError(ValueError):
    """Operands have incompatible lengths."""


def _pack(bits: np.ndarray) -> np.ndarray:
    n = bits.size
    nwords = -(-n // _WORD)
    padded = np.zeros(nwords * _WORD, dtype=np.uint8)
    padded[:n] = bits
    # little bit order inside each byte, little-endian bytes inside each word
    return np.packbits(padded, bitorder="little").view("<u8").copy()


class BitVector:
    """Immutable fixed-length vector over GF(2), stored as 64-bit words.

    Only the logical bit sequence is part of the contract; the padding bits of
    the last word are always zero.
    """

    __slots__ = ("_len", "_words")

    def __init__(self, bits: Iterable[int] | np.ndarray = ()):
        arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits)
        if arr.ndim != 1 and arr.size:
            raise DimensionError("BitVector expects a one-dimensional sequence")
        arr = arr.reshape(-1)
        if arr.size and not np.all((arr == 0) | (arr == 1)):
            raise ValueError("bits must be 0 or 1")
        self._len = int(arr.size)
        self._words = _pack(arr.astype(np.uint8))
        self._words.setflags(write=False)

    @classmethod
    def zeros(cls, n: int) -> BitVector:
        return cls(np.zeros(n, dtype=np.uint8))

    @classmethod
    def ones(cls, n: int) -> BitVector:
        return cls(np.ones(n, dtype=np.uint8))

    @classmethod
    def from_string(cls, s: str) -> BitVector:
        s = s.strip()
        if any(c not in "01" for c in s):
            raise ValueError(f"not a bit string: {s!r}")
        return cls(np.frombuffer(s.encode(), dtype=np.uint8) - ord("0"))

    @classmethod
    def _from_words(cls, words: np.ndarray, n: int) -> BitVector:
        obj = cls.__new__(cls)
        obj._len = n
        obj._words = words
        obj._words.setflags(write=False)
        return obj

    def __len__(self) -> int:
        return self._len

    def to_array(self) -> np.ndarray:
        raw = np.unpackbits(self._words.view(np.uint8), bitorder="little")
        return raw[: self._len].copy()

    def __iter__(self) -> Iterator[int]:
        return iter(int(b) for b in self.to_array())

    def __getitem__(self, idx):
        arr = self.to_array()[idx]
        if isinstance(idx, slice):
            return BitVector(arr)
        return int(arr)

    def __xor__(self, other: BitVector) -> BitVector:
        return xor(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self._len == other._len and np.array_equal(self._words, other._words)

    def __hash__(self) -> int:
        return hash((self._len, self._words.tobytes()))

    def __repr__(self) -> str:
        return f"BitVector('{self.to_string()}')"

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self.to_array())

    def weight(self) -> int:
        return int(np.bitwise_count(self._words).sum())


def as_bits(v) -> np.ndarray:
    """Return ``v`` as a flat uint8 array of 0/1 values."""
    if isinstance(v, BitVector):
        return v.to_array()
    arr = np.asarray(v, dtype=np.uint8).reshape(-1)
    if arr.size and arr.max() > 1:
        raise ValueError("bits must be 0 or 1")
    return arr


def xor(a: BitVector, b: BitVector) -> BitVector:
    if len(a) != len(b):
        raise DimensionError(f"length mismatch: {len(a)} vs {len(b)}")
    return BitVector._from_words(np.bitwise_xor(a._words, b._words), len(a))


def hamming_weight(v: BitVector | Sequence[int] | np.ndarray) -> int:
    if isinstance(v, BitVector):
        return v.weight()
    return int(np.count_nonzero(as_bits(v)))


@dataclass(frozen=True)
class WeightProfile:
    """Per-sub-block Hamming weights ``(w_0, ..., w_m)`` of a message."""

    weights: tuple[int, ...]
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        object.__setattr__(self, "weights", tuple(int(w) for w in self.weights))
        for w in self.weights:
            if not 0 <= w <= self.k:
                raise ValueError(f"weight {w} outside [0, {self.k}]")

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def nonzero(self) -> int:
        """Number of non-zero sub-blocks."""
        return sum(1 for w in self.weights if w)


def weight_profile(u: BitVector | Sequence[int] | np.ndarray, k: int) -> WeightProfile:
    bits = as_bits(u)
    if k < 1:
        raise DimensionError("sub-block length must be >= 1")
    if bits.size % k:
        raise DimensionError(f"length {bits.size} is not a multiple of k={k}")
    weights = bits.reshape(-1, k).sum(axis=1) if bits.size else np.zeros(0, dtype=int)
    return WeightProfile(tuple(int(w) for w in weights), k)
