"""Two-party GMW over XOR shares: free XOR/INV, Beaver-triple AND gates.

Protocols are lockstep generators (see :mod:`pdtekit.channel`) that carry
both parties' state: every value named ``*0``/``*1`` or indexed by party
belongs to that party alone, and the only way information crosses is a
channel message. All AND gates of one schedule layer share one flush, so
online rounds equal AND-depth.

Wire values are lane-packed integers: with ``lanes = L`` every wire holds L
independent evaluations (SIMD), bit ``j`` for lane ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from . import wire
from .channel import Channel, Proto, exchange, run
from .circuit import Builder, Circuit, parse_circuit  # noqa: F401  (re-export)
from .errors import TriplesExhausted, WidthMismatch
from .sharing import BitShare, WordShare


@dataclass(frozen=True)
class BooleanTriple:
    a: BitShare
    b: BitShare
    c: BitShare


class TripleStream:
    """One party's supply of boolean triples, stored as packed bit strings."""

    def __init__(self, a: bytes, b: bytes, c: bytes, count: int):
        if not len(a) == len(b) == len(c) == wire.nbytes(count):
            raise WidthMismatch("triple stream buffers disagree with count")
        self._a = int.from_bytes(a, "little")
        self._b = int.from_bytes(b, "little")
        self._c = int.from_bytes(c, "little")
        self.count = count
        self.used = 0

    @property
    def remaining(self) -> int:
        return self.count - self.used

    def take(self, n: int) -> tuple[int, int, int]:
        """Next ``n`` triples as three n-bit integers (bit i = triple i)."""
        if n > self.remaining:
            raise TriplesExhausted(f"need {n} boolean triples, {self.remaining} left")
        pos, mask = self.used, (1 << n) - 1
        self.used += n
        return (self._a >> pos) & mask, (self._b >> pos) & mask, (self._c >> pos) & mask

    def take_one(self) -> BooleanTriple:
        a, b, c = self.take(1)
        return BooleanTriple(BitShare(a), BitShare(b), BitShare(c))

    def to_bytes(self) -> tuple[bytes, bytes, bytes]:
        k = wire.nbytes(self.count)
        return (self._a.to_bytes(k, "little"), self._b.to_bytes(k, "little"),
                self._c.to_bytes(k, "little"))


Triples = Sequence[TripleStream]  # indexed by party


def and_packed(ch: Channel, x: Sequence[int], y: Sequence[int], n: int, triples: Triples,
               tag: str = "and") -> Proto[tuple[int, int]]:
    """``n`` parallel ANDs of packed shares in one round.

    ``x[p]``, ``y[p]`` are party p's n-bit shares; returns the z shares.
    """
    if n == 0:
        return 0, 0
    msgs, mats = [], []
    for p in (0, 1):
        a, b, c = triples[p].take(n)
        e, f = x[p] ^ a, y[p] ^ b
        mats.append((a, b, c))
        msgs.append(wire.enc(e | (f << n), 2 * n))
    got0, got1 = yield from exchange(ch, msgs[0], msgs[1], tag)
    mask = (1 << n) - 1
    out = []
    for p, got in ((0, got0), (1, got1)):
        a, b, c = mats[p]
        peer = wire.dec(got)
        mine = (x[p] ^ a) | ((y[p] ^ b) << n)
        both = mine ^ peer
        e, f = both & mask, both >> n
        z = c ^ (e & b) ^ (f & a)
        if p == 0:
            z ^= e & f
        out.append(z)
    return out[0], out[1]


def _pack(vals: Sequence[int], lanes: int) -> int:
    if lanes % 8 == 0:
        k = lanes // 8
        return int.from_bytes(b"".join(v.to_bytes(k, "little") for v in vals), "little")
    out = 0
    for v in reversed(vals):
        out = (out << lanes) | v
    return out


def _unpack(x: int, lanes: int, count: int) -> list[int]:
    if lanes % 8 == 0:
        k = lanes // 8
        data = x.to_bytes(k * count, "little")
        return [int.from_bytes(data[i * k:(i + 1) * k], "little") for i in range(count)]
    mask = (1 << lanes) - 1
    return [(x >> (i * lanes)) & mask for i in range(count)]


def eval_circuit_proto(ch: Channel, c: Circuit, inputs: Sequence[Sequence[int]],
                       triples: Triples, lanes: int = 1) -> Proto[tuple[list[int], list[int]]]:
    """Shared evaluation. ``inputs[p]`` lists party p's share per input wire."""
    for p in (0, 1):
        if len(inputs[p]) != c.n_inputs:
            raise WidthMismatch(f"circuit takes {c.n_inputs} input wires, got {len(inputs[p])}")
    ones = (1 << lanes) - 1
    w = [[0] * c.n_wires, [0] * c.n_wires]
    for p in (0, 1):
        w[p][: c.n_inputs] = list(inputs[p])
    fns = (c.free_fns(0), c.free_fns(1))
    for i, (kind, gates) in enumerate(c.schedule):
        if kind == "free":
            fns[0][i](w[0], ones)
            fns[1][i](w[1], ones)
            continue
        k = len(gates)
        xs = [_pack([w[p][g.a] for g in gates], lanes) for p in (0, 1)]
        ys = [_pack([w[p][g.b] for g in gates], lanes) for p in (0, 1)]
        z = yield from and_packed(ch, xs, ys, k * lanes, triples, "gmw")
        for p in (0, 1):
            for g, v in zip(gates, _unpack(z[p], lanes, k)):
                w[p][g.out] = v
    return [w[0][o] for o in c.outputs], [w[1][o] for o in c.outputs]


def to_wires(words: Sequence[int], width: int) -> list[int]:
    """Transpose per-lane words into per-wire lane-packed values."""
    out = []
    for i in range(width):
        v = 0
        for j, x in enumerate(words):
            v |= ((x >> i) & 1) << j
        out.append(v)
    return out


def from_wires(wires: Sequence[int], lanes: int) -> list[int]:
    """Inverse of :func:`to_wires`."""
    out = []
    for j in range(lanes):
        v = 0
        for i, x in enumerate(wires):
            v |= ((x >> j) & 1) << i
        out.append(v)
    return out


def eval_circuit(ch: Channel, c: Circuit, in_a: tuple[WordShare, WordShare],
                 in_b: tuple[WordShare, WordShare], triples: Triples
                 ) -> tuple[WordShare, WordShare]:
    """Evaluate a two-group circuit on shared inputs; outputs as word shares."""
    if len(c.inputs) != 2 or in_a[0].width != c.inputs[0] or in_b[0].width != c.inputs[1]:
        raise WidthMismatch("input widths do not match the circuit's input groups")
    ins = [to_wires([in_a[p].value], c.inputs[0]) + to_wires([in_b[p].value], c.inputs[1])
           for p in (0, 1)]
    o0, o1 = run(ch, eval_circuit_proto(ch, c, ins, triples))
    n = len(c.outputs)
    return WordShare(from_wires(o0, 1)[0], n), WordShare(from_wires(o1, 1)[0], n)


# -- gadget circuits -------------------------------------------------------

@lru_cache(maxsize=None)
def less_than_circuit(width: int) -> Circuit:
    """Unsigned ``x < t`` with inputs (x, t); AND-depth 1 + ceil(log2 width)."""
    b = Builder([width, width])
    x, t = list(range(width)), list(range(width, 2 * width))
    # per bit, least significant first: (lt_i, eq_i)
    nodes = []
    for i in range(width):
        d = b.xor(x[i], t[i])
        nodes.append((b.and_(d, t[i]), b.inv(d)))
    while len(nodes) > 1:
        nxt = []
        for k in range(0, len(nodes) - 1, 2):
            (lt_lo, eq_lo), (lt_hi, eq_hi) = nodes[k], nodes[k + 1]
            nxt.append((b.xor(lt_hi, b.and_(eq_hi, lt_lo)), b.and_(eq_hi, eq_lo)))
        if len(nodes) % 2:
            nxt.append(nodes[-1])
        nodes = nxt
    return b.build([nodes[0][0]])


@lru_cache(maxsize=None)
def mux_circuit(width: int) -> Circuit:
    """Inputs (b, l, r): output ``r ^ b & (l ^ r)``; ``width`` ANDs, depth 1."""
    bld = Builder([1, width, width])
    l, r = list(range(1, 1 + width)), list(range(1 + width, 1 + 2 * width))
    outs = [bld.xor(r[i], bld.and_(0, bld.xor(l[i], r[i]))) for i in range(width)]
    return bld.build(outs)


def _word_inputs(parts: Sequence[tuple[int, int]]) -> list[list[int]]:
    """parts: (value-per-party pair, width); bits become single-lane wires."""
    ins: list[list[int]] = [[], []]
    for pair, width in parts:
        for p in (0, 1):
            ins[p] += [(pair[p] >> i) & 1 for i in range(width)]
    return ins


def less_than_proto(ch: Channel, x: Sequence[int], t: Sequence[int], width: int,
                    triples: Triples) -> Proto[tuple[int, int]]:
    c = less_than_circuit(width)
    o0, o1 = yield from eval_circuit_proto(ch, c, _word_inputs([(x, width), (t, width)]), triples)
    return o0[0], o1[0]


def mux_proto(ch: Channel, bit: Sequence[int], l: Sequence[int], r: Sequence[int], width: int,
              triples: Triples) -> Proto[tuple[int, int]]:
    """Word-level MUX in one round: ``r ^ b & (l ^ r)`` with packed triples."""
    ones = (1 << width) - 1
    xs = [ones if bit[p] else 0 for p in (0, 1)]
    ys = [l[p] ^ r[p] for p in (0, 1)]
    z0, z1 = yield from and_packed(ch, xs, ys, width, triples, "mux")
    return r[0] ^ z0, r[1] ^ z1


def secure_less_than(ch: Channel, x: tuple[WordShare, WordShare], t: tuple[WordShare, WordShare],
                     triples: Triples) -> tuple[BitShare, BitShare]:
    if x[0].width != t[0].width:
        raise WidthMismatch("comparison operands differ in width")
    w = x[0].width
    b0, b1 = run(ch, less_than_proto(ch, (x[0].value, x[1].value), (t[0].value, t[1].value), w, triples))
    return BitShare(b0), BitShare(b1)


def mux_select(ch: Channel, b: tuple[BitShare, BitShare], l: tuple[WordShare, WordShare],
               r: tuple[WordShare, WordShare], triples: Triples) -> tuple[WordShare, WordShare]:
    if l[0].width != r[0].width:
        raise WidthMismatch("mux operands differ in width")
    w = l[0].width
    z = run(ch, mux_proto(ch, (b[0].value, b[1].value), (l[0].value, l[1].value),
                          (r[0].value, r[1].value), w, triples))
    return WordShare(z[0], w), WordShare(z[1], w)


# -- shared PRF ------------------------------------------------------------

def shared_prf_proto(ch: Channel, c: Circuit, key: int, key_holder: int,
                     idx: Sequence[Sequence[int]], triples: Triples) -> Proto[tuple[list[int], list[int]]]:
    """F(key, idx_j) for every lane j, with the key as the holder's private input.

    ``idx[p]`` lists party p's shares of the lane inputs. Returns per-lane
    output words for each party.
    """
    kbits, dbits = c.inputs
    lanes = len(idx[0])
    if lanes != len(idx[1]) or lanes == 0:
        raise WidthMismatch("both parties must supply the same number of lanes")
    ones = (1 << lanes) - 1
    key_w = [ones if (key >> i) & 1 else 0 for i in range(kbits)]
    ins = []
    for p in (0, 1):
        kw = key_w if p == key_holder else [0] * kbits
        ins.append(kw + to_wires(idx[p], dbits))
    o0, o1 = yield from eval_circuit_proto(ch, c, ins, triples, lanes)
    return from_wires(o0, lanes), from_wires(o1, lanes)


def shared_prf_eval(ch: Channel, key: int, key_holder: int, idx: Sequence[tuple[WordShare, WordShare]],
                    c: Circuit, triples: Triples) -> list[tuple[WordShare, WordShare]]:
    """Shares of F(key, idx_j) for a batch of shared inputs (one schedule)."""
    width = c.inputs[1]
    if any(s.width != width for pair in idx for s in pair):
        raise WidthMismatch(f"PRF circuit expects {width}-bit inputs")
    o0, o1 = run(ch, shared_prf_proto(ch, c, key, key_holder,
                                      ([s[0].value for s in idx], [s[1].value for s in idx]),
                                      triples))
    n = len(c.outputs)
    return [(WordShare(a, n), WordShare(b, n)) for a, b in zip(o0, o1)]
