"""Hash families mapping 64-bit keys to table positions in [1, n].

Three families: a memoized fully-random family (strong 64-bit mixer + memo
table, so replays and serialization are exact), simple tabulation (8 byte
tables of 256 random 64-bit entries, XORed), and 5-independent polynomial
hashing over the Mersenne prime 2^61 - 1.

Range reduction is multiply-shift (top bits of value * n) rather than modulo,
so there is no modulo bias; the reduction is considered part of the family.
All evaluation is vectorized numpy uint64; scalar eval routes through the same
code path on a one-element array.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

U64 = np.uint64
_MASK64 = U64(0xFFFFFFFFFFFFFFFF)
_MASK32 = U64(0xFFFFFFFF)
_GOLDEN = U64(0x9E3779B97F4A7C15)
MERSENNE61 = U64((1 << 61) - 1)


class FamilyKind(Enum):
    FULLY_RANDOM = "random"
    SIMPLE_TABULATION = "tabulation"
    POLY5 = "poly5"


def mix64(x):
    """Bijective 64-bit finalizer (splitmix64 style). Works on uint64 arrays;
    the multiplies wrap mod 2^64 by design."""
    with np.errstate(over="ignore"):
        x = np.asarray(x, dtype=np.uint64)
        x = (x ^ (x >> U64(30))) * U64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> U64(27))) * U64(0x94D049BB133111EB)
        return x ^ (x >> U64(31))


def splitmix_stream(seed: int, count: int) -> np.ndarray:
    """First `count` outputs of the splitmix64 generator seeded with `seed`."""
    with np.errstate(over="ignore"):
        states = U64(seed) + (np.arange(1, count + 1, dtype=np.uint64) * _GOLDEN)
    return mix64(states)


def _reduce_range(values: np.ndarray, range_n: int, value_bits: int) -> np.ndarray:
    """Map value_bits-wide uint64 values onto [1, range_n] by multiply-shift.

    Computes floor(v * n / 2^bits) + 1 exactly with 32-bit limbs (n < 2^32).
    """
    n = U64(range_n)
    lo = (values & _MASK32) * n
    hi = (values >> U64(32)) * n
    total_hi = hi + (lo >> U64(32))  # == (v * n) >> 32, exact
    return (total_hi >> U64(value_bits - 32)) + U64(1)


def _mulmod_m61(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(a * b) mod (2^61 - 1) for a, b < 2^61, uint64-safe via 32-bit limbs."""
    p = MERSENNE61
    a1 = a >> U64(32)
    a0 = a & _MASK32
    b1 = b >> U64(32)
    b0 = b & _MASK32
    # a*b = a1*b1*2^64 + (a1*b0 + a0*b1)*2^32 + a0*b0, with 2^61 = 1 (mod p)
    t0 = a0 * b0
    mid = a1 * b0 + a0 * b1          # < 2^62
    top = a1 * b1                    # < 2^58
    acc = (t0 & p) + (t0 >> U64(61))
    acc += (mid >> U64(29)) + ((mid & U64(0x1FFFFFFF)) << U64(32))
    acc += top << U64(3)
    acc = (acc & p) + (acc >> U64(61))
    acc = (acc & p) + (acc >> U64(61))
    return np.where(acc >= p, acc - p, acc)


@dataclass
class HashFamily:
    """A deterministic hash family instance.

    eval() is a pure function of (kind, seed, range_n, key). The fully-random
    family additionally memoizes each key's 64-bit draw so that the memo table
    can be serialized and restored without changing any assigned hash.

    A family instance is single-writer (the memo mutates); use distinct
    instances from distinct workers.
    """

    kind: FamilyKind
    seed: int
    range_n: int
    _tables: np.ndarray | None = field(default=None, repr=False)
    _coeffs: np.ndarray | None = field(default=None, repr=False)
    _prf_key: int = field(default=0, repr=False)
    _memo: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.range_n < 1:
            raise ValueError("range_n must be >= 1")
        if self.range_n >= (1 << 32):
            raise ValueError("range_n must fit in 32 bits")
        if self.kind is FamilyKind.SIMPLE_TABULATION:
            self._tables = splitmix_stream(self.seed, 8 * 256).reshape(8, 256)
        elif self.kind is FamilyKind.POLY5:
            self._coeffs = splitmix_stream(self.seed ^ 0x5DEECE66D, 5) % MERSENNE61
        else:
            self._prf_key = int(mix64(np.uint64(self.seed ^ 0xC2B2AE3D27D4EB4F)))

    def eval_batch(self, keys: np.ndarray) -> np.ndarray:
        """Positions in [1, range_n] for an array of uint64 keys (int64 out)."""
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        if self.kind is FamilyKind.FULLY_RANDOM:
            v = mix64(keys ^ U64(self._prf_key))
            pos = _reduce_range(v, self.range_n, 64)
        elif self.kind is FamilyKind.SIMPLE_TABULATION:
            v = self._tables[0][(keys & U64(0xFF)).astype(np.int64)]
            for b in range(1, 8):
                v = v ^ self._tables[b][((keys >> U64(8 * b)) & U64(0xFF)).astype(np.int64)]
            pos = _reduce_range(v, self.range_n, 64)
        else:
            x = keys % MERSENNE61
            acc = np.full(keys.shape, self._coeffs[4], dtype=np.uint64)
            for c in (self._coeffs[3], self._coeffs[2], self._coeffs[1], self._coeffs[0]):
                acc = _mulmod_m61(acc, x)
                acc += c
                acc = np.where(acc >= MERSENNE61, acc - MERSENNE61, acc)
            pos = _reduce_range(acc, self.range_n, 61)
        return pos.astype(np.int64)

    def eval(self, key: int) -> int:
        """Position in [1, range_n] for one key."""
        key = int(key) & 0xFFFFFFFFFFFFFFFF
        if self.kind is FamilyKind.FULLY_RANDOM:
            got = self._memo.get(key)
            if got is not None:
                return got
        pos = int(self.eval_batch(np.array([key], dtype=np.uint64))[0])
        if self.kind is FamilyKind.FULLY_RANDOM:
            self._memo[key] = pos
        return pos

    # memo round-trip support for the fully-random family
    def dump_memo(self) -> dict:
        return dict(self._memo)

    def load_memo(self, memo: dict) -> None:
        self._memo = {int(k): int(v) for k, v in memo.items()}

    def derive(self, new_range_n: int, seed_xor: int = 0) -> "HashFamily":
        """Fresh family of the same kind (used by resize: seed XOR new n)."""
        return HashFamily(self.kind, self.seed ^ seed_xor, new_range_n)


def make_family(kind: FamilyKind | str, seed: int, range_n: int) -> HashFamily:
    """Build an initialized family; raises ValueError on range_n < 1."""
    if isinstance(kind, str):
        kind = FamilyKind(kind)
    return HashFamily(kind=kind, seed=int(seed), range_n=int(range_n))
