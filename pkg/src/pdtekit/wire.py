"""Byte encodings used on the channel.

Integers travel as fixed-width little-endian strings of ``ceil(bits/8)``
bytes; residues modulo a big modulus use the modulus' byte length, in
big-endian order to match the usual ciphertext convention.
"""

from __future__ import annotations

from typing import Iterable, Sequence


def nbytes(bits: int) -> int:
    return max(0, (bits + 7) // 8)


def enc(x: int, bits: int) -> bytes:
    return x.to_bytes(nbytes(bits), "little")


def dec(data: bytes) -> int:
    return int.from_bytes(data, "little")


def enc_many(xs: Iterable[int], bits: int) -> bytes:
    k = nbytes(bits)
    return b"".join(x.to_bytes(k, "little") for x in xs)


def dec_many(data: bytes, bits: int, count: int) -> list[int]:
    k = nbytes(bits)
    if k == 0:
        return [0] * count
    if len(data) != k * count:
        raise ValueError(f"expected {k * count} bytes, got {len(data)}")
    return [int.from_bytes(data[i * k:(i + 1) * k], "little") for i in range(count)]


def residue_bytes(modulus: int) -> int:
    return max(1, (modulus.bit_length() + 7) // 8)


def enc_residues(xs: Sequence[int], modulus: int) -> bytes:
    k = residue_bytes(modulus)
    return b"".join(int(x).to_bytes(k, "big") for x in xs)


def dec_residues(data: bytes, modulus: int, count: int) -> list[int]:
    k = residue_bytes(modulus)
    if len(data) != k * count:
        raise ValueError(f"expected {k * count} bytes, got {len(data)}")
    return [int.from_bytes(data[i * k:(i + 1) * k], "big") for i in range(count)]


def bitlen(x: int) -> int:
    """Bits needed to index ``x`` values (0 for x <= 1)."""
    return max(0, (x - 1).bit_length())
