"""Share types and the local (non-interactive) operations on them.

Boolean shares XOR to the secret; arithmetic shares add up to it modulo
``n``; multiplicative shares multiply to it modulo ``N^2``. A word share
keeps its bits packed in one integer (bit ``i`` is the ``2^i`` digit).

Constants are folded in by party 0 only, so ``xor_const`` and ``add_const``
take the party index of the share they are applied to.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Union

from .errors import ModulusMismatch, WidthMismatch


@dataclass(frozen=True)
class BitShare:
    value: int

    def __post_init__(self):
        if self.value not in (0, 1):
            raise ValueError("bit share must be 0 or 1")


@dataclass(frozen=True)
class WordShare:
    value: int
    width: int

    def __post_init__(self):
        if self.width <= 0:
            raise WidthMismatch("width must be positive")
        if not 0 <= self.value < (1 << self.width):
            raise WidthMismatch(f"value does not fit in {self.width} bits")

    @property
    def bits(self) -> list[BitShare]:
        return [BitShare((self.value >> i) & 1) for i in range(self.width)]

    @classmethod
    def from_bits(cls, bits: list[BitShare]) -> "WordShare":
        return cls(sum(b.value << i for i, b in enumerate(bits)), len(bits))


@dataclass(frozen=True)
class ArithShare:
    value: int
    modulus: int

    def __post_init__(self):
        if self.modulus < 1:
            raise ModulusMismatch("modulus must be >= 1")
        if not 0 <= self.value < self.modulus:
            raise ModulusMismatch("residue out of range")


@dataclass(frozen=True)
class MultShare:
    value: int
    modulus: int

    def __post_init__(self):
        if not 0 <= self.value < self.modulus:
            raise ModulusMismatch("residue out of range")


Share = Union[BitShare, WordShare, ArithShare, MultShare]


def _mask(width: int) -> int:
    return (1 << width) - 1


def share_boolean(
    secret: int, width: int, rng: random.Random, share0: int | None = None
) -> tuple[WordShare, WordShare]:
    """Split ``secret`` into two XOR shares; ``share0`` forces the first one."""
    if width <= 0 or secret < 0 or secret >> width:
        raise WidthMismatch(f"secret does not fit in {width} bits")
    s0 = rng.getrandbits(width) if share0 is None else share0
    if s0 < 0 or s0 >> width:
        raise WidthMismatch("forced share does not fit")
    return WordShare(s0, width), WordShare(s0 ^ secret, width)


def share_arith(
    secret: int, modulus: int, rng: random.Random
) -> tuple[ArithShare, ArithShare]:
    s0 = rng.randrange(modulus)
    return ArithShare(s0, modulus), ArithShare((secret - s0) % modulus, modulus)


def _same_width(a: WordShare, b: WordShare) -> None:
    if a.width != b.width:
        raise WidthMismatch(f"widths differ: {a.width} vs {b.width}")


def _same_modulus(a, b) -> None:
    if a.modulus != b.modulus:
        raise ModulusMismatch(f"moduli differ: {a.modulus} vs {b.modulus}")


def xor_local(a: WordShare, b: WordShare) -> WordShare:
    _same_width(a, b)
    return WordShare(a.value ^ b.value, a.width)


def xor_const(a: WordShare, c: int, party: int) -> WordShare:
    if c < 0 or c >> a.width:
        raise WidthMismatch("constant wider than share")
    return WordShare(a.value ^ c if party == 0 else a.value, a.width)


def and_const(a: WordShare, c: int) -> WordShare:
    """Bitwise AND with a public constant (each party applies it)."""
    if c < 0 or c >> a.width:
        raise WidthMismatch("constant wider than share")
    return WordShare(a.value & c, a.width)


def add_local(a: ArithShare, b: ArithShare) -> ArithShare:
    _same_modulus(a, b)
    return ArithShare((a.value + b.value) % a.modulus, a.modulus)


def add_const(a: ArithShare, c: int, party: int) -> ArithShare:
    return ArithShare((a.value + c) % a.modulus if party == 0 else a.value, a.modulus)


def mul_const(a: ArithShare, c: int) -> ArithShare:
    return ArithShare((a.value * c) % a.modulus, a.modulus)


def reconstruct(a0: Share, a1: Share) -> int:
    if type(a0) is not type(a1):
        raise WidthMismatch("share kinds differ")
    if isinstance(a0, BitShare):
        return a0.value ^ a1.value
    if isinstance(a0, WordShare):
        _same_width(a0, a1)
        return a0.value ^ a1.value
    _same_modulus(a0, a1)
    if isinstance(a0, ArithShare):
        return (a0.value + a1.value) % a0.modulus
    return (a0.value * a1.value) % a0.modulus


def words(pair: tuple[int, int], width: int) -> tuple[WordShare, WordShare]:
    """Wrap a pair of raw share values (indexed by party)."""
    return WordShare(pair[0], width), WordShare(pair[1], width)


def raw(pair) -> tuple[int, int]:
    return pair[0].value, pair[1].value
