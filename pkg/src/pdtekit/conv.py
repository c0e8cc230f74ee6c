"""Share conversions: boolean to additive (B2A), additive mod 2^k to boolean
(A2B), and additive to multiplicative sharing over Z_{N^2}.

B2A spends one daBit per bit (a random bit r known in both sharings): the
parties open ``z = x ^ r`` and set ``<x_i> = z_i + (1 - 2 z_i) <r_i>``. One
round, ``width`` bits from each party.

A2B feeds the two additive shares as private inputs into a Kogge-Stone
adder evaluated under GMW: ``ceil(log2(width))`` rounds.
"""

from __future__ import annotations

import random
from functools import lru_cache
from typing import Sequence

import gmpy2

from . import wire
from .channel import Channel, Proto, exchange, run, transfer
from .circuit import Builder, Circuit
from .dealer import DaBitStream, SpecialBmt
from .errors import BmtInvalid, NonInvertibleGamma, NonPowerOfTwoModulus, WidthMismatch
from .gmw import Triples, eval_circuit_proto
from .sharing import ArithShare, MultShare, WordShare


def b2a_proto(ch: Channel, x: Sequence[int], width: int, modulus: int,
              dabits: Sequence[DaBitStream], tag: str = "b2a") -> Proto[tuple[int, int]]:
    """Additive shares mod ``modulus`` of the ``width``-bit XOR-shared ``x``."""
    if width == 0:
        return 0, 0
    mats = [d.take(width) for d in dabits]
    z = [x[p] ^ mats[p][0] for p in (0, 1)]
    got0, got1 = yield from exchange(ch, wire.enc(z[0], width), wire.enc(z[1], width), tag)
    opened = [z[0] ^ wire.dec(got0), z[1] ^ wire.dec(got1)]
    out = []
    for p in (0, 1):
        zz, arith = opened[p], mats[p][1]
        acc = 0
        for i in range(width):
            zi = (zz >> i) & 1
            share = (arith[i] if zi == 0 else -arith[i]) + (zi if p == 0 else 0)
            acc += share << i
        out.append(acc % modulus)
    return out[0], out[1]


def b2a(ch: Channel, x: tuple[WordShare, WordShare], modulus: int,
        dabits: Sequence[DaBitStream]) -> tuple[ArithShare, ArithShare]:
    if x[0].width != x[1].width:
        raise WidthMismatch("share widths differ")
    a0, a1 = run(ch, b2a_proto(ch, (x[0].value, x[1].value), x[0].width, modulus, dabits))
    return ArithShare(a0, modulus), ArithShare(a1, modulus)


@lru_cache(maxsize=None)
def adder_circuit(width: int) -> Circuit:
    """``a + b mod 2^width`` with a parallel-prefix carry network."""
    b = Builder([width, width])
    x, y = list(range(width)), list(range(width, 2 * width))
    if width == 1:
        return b.build([b.xor(x[0], y[0])])
    p = [b.xor(x[i], y[i]) for i in range(width)]
    # only carries out of bits 0..width-2 are needed
    n = width - 1
    g = [b.and_(x[i], y[i]) for i in range(n)]
    pp = list(p[:n])
    s = 1
    while s < n:
        ng, npp = list(g), list(pp)
        for i in range(s, n):
            ng[i] = b.xor(g[i], b.and_(pp[i], g[i - s]))
            if i >= 2 * s:  # propagate terms are only needed while further levels read them
                npp[i] = b.and_(pp[i], pp[i - s])
        g, pp = ng, npp
        s *= 2
    outs = [p[0]] + [b.xor(p[i], g[i - 1]) for i in range(1, width)]
    return b.build(outs)


def a2b_proto(ch: Channel, x: Sequence[int], width: int, triples: Triples) -> Proto[tuple[int, int]]:
    """XOR shares of ``x0 + x1 mod 2^width``."""
    c = adder_circuit(width)
    bits0 = [(x[0] >> i) & 1 for i in range(width)]
    bits1 = [(x[1] >> i) & 1 for i in range(width)]
    ins = [bits0 + [0] * width, [0] * width + bits1]
    o0, o1 = yield from eval_circuit_proto(ch, c, ins, triples)
    return (sum(b << i for i, b in enumerate(o0)), sum(b << i for i, b in enumerate(o1)))


def a2b(ch: Channel, x: tuple[ArithShare, ArithShare], triples: Triples) -> tuple[WordShare, WordShare]:
    m = x[0].modulus
    if m != x[1].modulus:
        raise WidthMismatch("share moduli differ")
    if m < 2 or m & (m - 1):
        raise NonPowerOfTwoModulus(f"A2B needs a power-of-two modulus, got {m}")
    width = m.bit_length() - 1
    o0, o1 = run(ch, a2b_proto(ch, (x[0].value, x[1].value), width, triples))
    return WordShare(o0, width), WordShare(o1, width)


def sample_gamma(n: int, rng: random.Random) -> int:
    """Uniform unit of Z_{N^2}: any residue coprime to N."""
    nsq = n * n
    while True:
        g = rng.randrange(1, nsq)
        if gmpy2.gcd(g, n) == 1:
            return g


def check_special_bmt(s: SpecialBmt, r: SpecialBmt) -> None:
    """Dealer-side sanity check (both halves in hand)."""
    if s.modulus != r.modulus or (s.clear * r.clear - s.c - r.c) % s.modulus:
        raise BmtInvalid("special triple does not satisfy a*b = c")


def add_to_mult_proto(ch: Channel, x: Sequence[int], bmt: Sequence[SpecialBmt], n: int,
                      rng: random.Random, gamma: int | None = None) -> Proto[tuple[int, int]]:
    """Turn additive shares of x mod N^2 into multiplicative ones (S = party 0).

    Round 1: S sends ``e = gamma^-1 - a``, R sends ``f = <x>_r - b``.
    Round 2: S sends ``<x>_s gamma^-1 + a f + <c>_s``.
    Result: S holds gamma, R holds ``x gamma^-1``.
    """
    nsq = n * n
    s, r = bmt
    if s.modulus != nsq or r.modulus != nsq:
        raise BmtInvalid("special triple is not over N^2")
    if gamma is None:
        gamma = sample_gamma(n, rng)
    elif gmpy2.gcd(gamma, n) != 1:
        raise NonInvertibleGamma("gamma must be a unit of Z_{N^2}")
    ginv = int(gmpy2.invert(gamma, nsq))
    e = (ginv - s.clear) % nsq
    f = (x[1] - r.clear) % nsq
    got_s, got_r = yield from exchange(ch, wire.enc_residues([e], nsq),
                                       wire.enc_residues([f], nsq), "a2m")
    f_at_s = wire.dec_residues(got_s, nsq, 1)[0]
    e_at_r = wire.dec_residues(got_r, nsq, 1)[0]
    cross_s = (s.clear * f_at_s + s.c) % nsq
    cross_r = (e_at_r * f + r.clear * e_at_r + r.c) % nsq
    u = (x[0] * ginv + cross_s) % nsq
    got = yield from transfer(ch, 0, wire.enc_residues([u], nsq), "a2m")
    mult_r = (wire.dec_residues(got, nsq, 1)[0] + cross_r) % nsq
    return gamma, mult_r


def add_to_mult(ch: Channel, x: tuple[ArithShare, ArithShare], bmt: Sequence[SpecialBmt], n: int,
                rng: random.Random, gamma: int | None = None) -> tuple[MultShare, MultShare]:
    nsq = n * n
    if x[0].modulus != nsq or x[1].modulus != nsq:
        raise WidthMismatch("additive shares must be mod N^2")
    g, v = run(ch, add_to_mult_proto(ch, (x[0].value, x[1].value), bmt, n, rng, gamma))
    return MultShare(g, nsq), MultShare(v, nsq)
