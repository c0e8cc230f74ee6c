"""Two-key distributed point function over a domain of size m.

GGM-style tree: every seed expands into two children plus control bits,
with one correction word per level. The last ``e`` index bits are not
expanded further; each leaf seed is converted into ``2^e`` output bits in
one PRG block (``e = min(ceil(log2 m), 7)``), which keeps a key at
``kappa + (ceil(log2 m) - e)(kappa + 2) + 2^e`` bits.

The PRG is the LowMC-style block from :mod:`pdtekit.prf` under a fixed,
public key: block ``i`` of seed ``s`` is ``F(s ^ i) ^ s ^ i``.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import IndexOutOfRange
from .prf import get_instance
from .wire import bitlen

KAPPA = 128
MAX_EARLY = 7
_PRG: list = []


def prg():
    """The fixed-key PRG cipher (built once)."""
    if not _PRG:
        key = int.from_bytes(hashlib.shake_256(b"pdtekit/dpf-prg-key").digest(16), "little")
        _PRG.append(kernels.Cipher(get_instance("lowmc-128"), key))
    return _PRG[0]


def layout(m: int) -> tuple[int, int]:
    """(expanded levels, early-termination bits) for domain size ``m``."""
    k = bitlen(m)
    e = min(k, MAX_EARLY)
    return k - e, e


@dataclass(frozen=True)
class DpfKey:
    party: int
    m: int
    seed: int
    cws: tuple[tuple[int, int, int], ...]
    out_cw: int

    @property
    def levels(self) -> int:
        return layout(self.m)[0]

    @property
    def early(self) -> int:
        return layout(self.m)[1]

    @property
    def bits(self) -> int:
        levels, e = layout(self.m)
        return KAPPA + levels * (KAPPA + 2) + (1 << e)

    def to_bytes(self) -> bytes:
        levels, e = layout(self.m)
        out = [self.seed.to_bytes(16, "little")]
        tbits = 0
        for i, (s, tl, tr) in enumerate(self.cws):
            out.append(s.to_bytes(16, "little"))
            tbits |= (tl << (2 * i)) | (tr << (2 * i + 1))
        out.append(tbits.to_bytes((2 * levels + 7) // 8, "little"))
        out.append(self.out_cw.to_bytes(((1 << e) + 7) // 8, "little"))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes, party: int, m: int) -> "DpfKey":
        levels, e = layout(m)
        pos = 0

        def take(n):
            nonlocal pos
            chunk = data[pos:pos + n]
            if len(chunk) != n:
                raise ValueError("truncated DPF key")
            pos += n
            return int.from_bytes(chunk, "little")

        seed = take(16)
        seeds = [take(16) for _ in range(levels)]
        tbits = take((2 * levels + 7) // 8)
        out_cw = take(((1 << e) + 7) // 8)
        if pos != len(data):
            raise ValueError("trailing bytes after DPF key")
        cws = tuple((s, (tbits >> (2 * i)) & 1, (tbits >> (2 * i + 1)) & 1)
                    for i, s in enumerate(seeds))
        return cls(party, m, seed, cws, out_cw)


def key_bytes(m: int) -> int:
    levels, e = layout(m)
    return 16 + 16 * levels + (2 * levels + 7) // 8 + ((1 << e) + 7) // 8


def dpf_gen(alpha: int, m: int, rng: random.Random, beta: int = 1) -> tuple[DpfKey, DpfKey]:
    if m < 1:
        raise IndexOutOfRange("domain must be non-empty")
    if not 0 <= alpha < m:
        raise IndexOutOfRange(f"alpha={alpha} outside [0, {m})")
    levels, e = layout(m)
    s0 = rng.getrandbits(KAPPA) & ~1
    s1 = rng.getrandbits(KAPPA) & ~1
    cws, out_cw = kernels.dpf_gen(prg(), levels, e, alpha, beta & 1, s0, s1)
    cws = tuple((int(s), int(tl), int(tr)) for s, tl, tr in cws)
    return DpfKey(0, m, s0, cws, out_cw), DpfKey(1, m, s1, cws, out_cw)


def _block(s: int, i: int) -> int:
    x = s ^ i
    return prg().eval(x) ^ x


def dpf_eval(key: DpfKey, x: int) -> int:
    if not 0 <= x < key.m:
        raise IndexOutOfRange(f"x={x} outside [0, {key.m})")
    levels, e = layout(key.m)
    s, t = key.seed, key.party
    for i in range(levels):
        bit = (x >> (e + levels - 1 - i)) & 1
        v = _block(s, bit)
        cw, tlc, trc = key.cws[i]
        s, nt = v & ~1, v & 1
        if t:
            s ^= cw
            nt ^= trc if bit else tlc
        t = nt
    v = _block(s, 2)
    if t:
        v ^= key.out_cw
    return (v >> (x & ((1 << e) - 1))) & 1


def dpf_eval_full(key: DpfKey) -> np.ndarray:
    """This party's share of the length-m output vector (uint8 0/1)."""
    levels, e = layout(key.m)
    return kernels.dpf_expand(prg(), levels, e, key.seed, key.party, list(key.cws),
                              key.out_cw, key.m)
