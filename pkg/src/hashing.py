#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Hash families used by the colorers.

- CWHashFamily: h_{a,b}(z) = (a*z + b) mod p, indexed flat as a*p + b.
- KeyedBlockHash: seeded 64-bit mixing (splitmix/murmur finaliser) reduced to a
  range; stands in for the uniformly random block functions of the robust colorer.
- FourIndepHash: degree-3 polynomial over GF(2^w), output truncated to the low
  bits. Exactly 4-wise independent onto a power-of-two range.
"""

from __future__ import annotations
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .utils import ConfigError

# ---------------------------------------------------------------- Carter-Wegman

@dataclass(frozen=True)
class CWHashFamily:
    p: int
    a_min: int = 0

    @property
    def size(self) -> int:
        return (self.p - self.a_min) * self.p

    def member(self, index: int) -> tuple[int, int]:
        """Flat index -> (a, b), a-major order."""
        if not (0 <= index < self.size):
            raise ConfigError(f"hash index {index} outside family of size {self.size}")
        return self.a_min + index // self.p, index % self.p

    def index_of(self, a: int, b: int) -> int:
        return (a - self.a_min) * self.p + b

    def evaluate(self, a: int, b: int, z):
        z = np.asarray(z, dtype=np.int64)
        return (a * z + b) % self.p


# ---------------------------------------------------------------- keyed mixing

_PI = np.uint64(0x3243F6A8885A308D)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def mix64(seed: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Vectorised 64-bit mixer; seed and v broadcast against each other."""
    with np.errstate(over="ignore"):
        seed = np.asarray(seed, dtype=np.uint64) ^ _PI
        u = np.asarray(v, dtype=np.uint64) + seed
        u ^= u >> np.uint64(30)
        u *= _M1
        u ^= u >> np.uint64(27)
        u += seed >> np.uint64(5)
        u *= _M2
        u ^= u >> np.uint64(31)
    return u


class KeyedBlockHash:
    """`count` independent keyed functions V -> [0, range)."""

    def __init__(self, count: int, range_size: int, rng: np.random.Generator):
        if range_size < 1:
            raise ConfigError(f"block hash range must be >= 1, got {range_size}")
        self.count = count
        self.range_size = range_size
        self.keys = rng.integers(0, np.iinfo(np.uint64).max, size=count, dtype=np.uint64, endpoint=True)

    def table(self, n: int) -> np.ndarray:
        """(count, n) array of h_i(x)."""
        xs = np.arange(n, dtype=np.uint64)
        mixed = mix64(self.keys[:, None], xs[None, :])
        return (mixed % np.uint64(self.range_size)).astype(np.int64)

    def seed_bits(self) -> int:
        return 64 * self.count


# ---------------------------------------------------------------- GF(2^w)

# x^w + (low terms); each entry is irreducible over GF(2)
IRREDUCIBLE = {
    1: 0b11, 2: 0x7, 3: 0xB, 4: 0x13, 5: 0x25, 6: 0x43, 7: 0x83, 8: 0x11D,
    9: 0x211, 10: 0x409, 11: 0x805, 12: 0x1009, 13: 0x201B, 14: 0x4021,
    15: 0x8003, 16: 0x1002B, 17: 0x20009, 18: 0x40009, 19: 0x80027,
    20: 0x100009, 21: 0x200005, 22: 0x400003, 23: 0x800021, 24: 0x100001B,
}


def _poly_mod(a: int, m: int) -> int:
    dm = m.bit_length() - 1
    while a and a.bit_length() - 1 >= dm:
        a ^= m << (a.bit_length() - 1 - dm)
    return a


def is_irreducible(poly: int) -> bool:
    """Trial division by every polynomial of degree 1..deg/2."""
    deg = poly.bit_length() - 1
    if deg < 1:
        return False
    for d in range(2, 1 << (deg // 2 + 1)):
        if _poly_mod(poly, d) == 0:
            return False
    return True


def gf_mul(a, b, width: int):
    """Carry-less multiply mod IRREDUCIBLE[width]; works on ints or int64 arrays."""
    poly = IRREDUCIBLE[width]
    top = 1 << width
    a = np.asarray(a, dtype=np.int64).copy()
    b = np.asarray(b, dtype=np.int64)
    res = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
    for bit in range(width):
        res ^= np.where((b >> bit) & 1, a, 0)
        a = a << 1
        a = np.where(a & top, a ^ poly, a)
    return res


@dataclass(frozen=True)
class FourIndepHash:
    width: int
    out_bits: int
    coeffs: tuple[int, int, int, int]   # c0 + c1 x + c2 x^2 + c3 x^3

    def __post_init__(self):
        if self.width not in IRREDUCIBLE:
            raise ConfigError(f"no irreducible polynomial tabulated for width {self.width}")
        if not (0 <= self.out_bits <= self.width):
            raise ConfigError(f"out_bits={self.out_bits} must lie in [0, {self.width}]")

    @classmethod
    def sample(cls, width: int, out_bits: int, rng: np.random.Generator) -> "FourIndepHash":
        c = rng.integers(0, 1 << width, size=4)
        return cls(width, out_bits, tuple(int(v) for v in c))

    def __call__(self, x):
        x = np.asarray(x, dtype=np.int64)
        acc = np.full(x.shape, self.coeffs[3], dtype=np.int64)
        for c in (self.coeffs[2], self.coeffs[1], self.coeffs[0]):
            acc = gf_mul(acc, x, self.width) ^ c
        return acc & ((1 << self.out_bits) - 1)

    @property
    def seed_bits(self) -> int:
        return 4 * self.width


class FourIndepBank:
    """count independent FourIndepHash draws, evaluated together at one point."""

    def __init__(self, width: int, out_bits: int, coeffs: np.ndarray):
        if width not in IRREDUCIBLE:
            raise ConfigError(f"no irreducible polynomial tabulated for width {width}")
        self.width = width
        self.out_bits = out_bits
        self.coeffs = np.asarray(coeffs, dtype=np.int64)

    @classmethod
    def sample(cls, count: int, width: int, out_bits: int, rng: np.random.Generator) -> "FourIndepBank":
        return cls(width, out_bits, rng.integers(0, 1 << width, size=(count, 4)))

    def __len__(self) -> int:
        return len(self.coeffs)

    def member(self, i: int) -> FourIndepHash:
        return FourIndepHash(self.width, self.out_bits, tuple(int(c) for c in self.coeffs[i]))

    def at(self, x: int, start: int = 0) -> np.ndarray:
        """h_i(x) for every i >= start."""
        c = self.coeffs[start:]
        acc = c[:, 3].copy()
        for k in (2, 1, 0):
            acc = gf_mul(acc, x, self.width) ^ c[:, k]
        return acc & ((1 << self.out_bits) - 1)

    def seed_bits(self) -> int:
        return 4 * self.width * len(self.coeffs)


def _poly_table(width: int) -> np.ndarray:
    """values[k, x] for every coefficient tuple k (c0 fastest) and x in GF(2^w)."""
    q = 1 << width
    xs = np.arange(q, dtype=np.int64)
    c = np.indices((q, q, q, q)).reshape(4, -1)[::-1]      # c[0] varies fastest
    acc = np.broadcast_to(c[3][:, None], (c.shape[1], q)).copy()
    for i in (2, 1, 0):
        acc = gf_mul(acc, xs[None, :], width) ^ c[i][:, None]
    return acc


def verify_four_independence(width: int, out_bits: int) -> bool:
    """
    Exhaustive check: for every set of 4 distinct inputs, the joint output over
    all (2^w)^4 coefficient tuples hits every output 4-tuple equally often.
    """
    if width > 5:
        raise ConfigError("exhaustive 4-independence check is limited to width <= 5")
    q = 1 << width
    r = 1 << out_bits
    values = _poly_table(width) & (r - 1)
    expected = q ** 4 // r ** 4
    for xs in combinations(range(q), 4):
        cols = values[:, xs]
        code = ((cols[:, 0] * r + cols[:, 1]) * r + cols[:, 2]) * r + cols[:, 3]
        counts = np.bincount(code, minlength=r ** 4)
        if counts.min() != expected or counts.max() != expected:
            return False
    return True
