"""LowMC-style keyed PRF, as a fast plaintext evaluator and as a circuit.

Structure (per round ``i = 1..r``)::

    state = embed(x) ^ K_0
    state = Sbox(state)          # s parallel 3-bit S-boxes on the low 3s bits
    state = L_i . state ^ RC_i ^ K_i

with ``K_i = KM_i . key``. All matrices and constants come from SHAKE-256 of
a seed string, so they are reproducible but only interoperable with this
package. Inputs wider than the block are folded by XOR of block-sized
chunks; narrower ones are zero-extended.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

from .circuit import Builder, Circuit, bits_of, parse_circuit, plain_eval
from .errors import ConfigError, IndexWidthOverflow, WidthMismatch
from .sharing import WordShare, xor_const
from .wire import bitlen


class _Expander:
    """Deterministic bit stream: SHAKE-256(seed || counter) blocks."""

    def __init__(self, seed: str):
        self.seed = seed.encode()
        self.ctr = 0
        self.buf = 0
        self.avail = 0

    def bits(self, k: int) -> int:
        while self.avail < k:
            block = hashlib.shake_256(self.seed + self.ctr.to_bytes(8, "little")).digest(64)
            self.ctr += 1
            self.buf |= int.from_bytes(block, "little") << self.avail
            self.avail += 512
        out = self.buf & ((1 << k) - 1)
        self.buf >>= k
        self.avail -= k
        return out


def gf2_rank(rows: Sequence[int]) -> int:
    basis: dict[int, int] = {}
    for r in rows:
        while r:
            top = r.bit_length() - 1
            if top not in basis:
                basis[top] = r
                break
            r ^= basis[top]
    return len(basis)


def _matrix(ex: _Expander, n_out: int, n_in: int) -> list[int]:
    """Random full-rank ``n_out x n_in`` matrix, rows as ints over input bits."""
    want = min(n_out, n_in)
    while True:
        rows = [ex.bits(n_in) for _ in range(n_out)]
        if gf2_rank(rows) == want:
            return rows


class _FastLinear:
    """Matrix-vector product over GF(2) with 8-bit lookup tables."""

    def __init__(self, rows: Sequence[int], n_in: int):
        cols = [0] * n_in
        for j, r in enumerate(rows):
            while r:
                low = r & -r
                cols[low.bit_length() - 1] |= 1 << j
                r ^= low
        self.tables = []
        for c in range(0, n_in, 8):
            chunk = cols[c:c + 8]
            t = [0] * (1 << len(chunk))
            for v in range(1, len(t)):
                low = v & -v
                t[v] = t[v ^ low] ^ chunk[low.bit_length() - 1]
            self.tables.append(t)

    def __call__(self, x: int) -> int:
        out = 0
        for t in self.tables:
            out ^= t[x & 0xFF]
            x >>= 8
        return out


@dataclass(frozen=True)
class PrfParams:
    name: str
    block: int     # l_b, output width
    key_bits: int  # kappa
    sboxes: int
    rounds: int
    seed: str

    def __post_init__(self):
        if 3 * self.sboxes > self.block or self.rounds < 1:
            raise ConfigError(f"invalid PRF parameters for {self.name}")


@dataclass
class PrfInstance:
    params: PrfParams
    key_mats: list[list[int]] = field(init=False, repr=False)
    lin_mats: list[list[int]] = field(init=False, repr=False)
    consts: list[int] = field(init=False, repr=False)
    _circuits: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        p = self.params
        ex = _Expander(p.seed)
        self.lin_mats = [_matrix(ex, p.block, p.block) for _ in range(p.rounds)]
        self.consts = [ex.bits(p.block) for _ in range(p.rounds)]
        self.key_mats = [_matrix(ex, p.block, p.key_bits) for _ in range(p.rounds + 1)]
        self._lin = [_FastLinear(m, p.block) for m in self.lin_mats]
        self._keyl = [_FastLinear(m, p.key_bits) for m in self.key_mats]
        mask = 0
        for k in range(p.sboxes):
            mask |= 1 << (3 * k)
        self._sa = mask
        self._sbox_region = (1 << (3 * p.sboxes)) - 1

    @property
    def name(self) -> str:
        return self.params.name

    @property
    def block(self) -> int:
        return self.params.block

    @property
    def key_bits(self) -> int:
        return self.params.key_bits

    @property
    def rounds(self) -> int:
        return self.params.rounds

    def fold(self, x: int, width: int) -> int:
        b = self.params.block
        if width <= b:
            return x
        out, mask = 0, (1 << b) - 1
        while x:
            out ^= x & mask
            x >>= b
        return out

    def round_keys(self, key: int) -> list[int]:
        return [kl(key) for kl in self._keyl]

    def _sbox(self, s: int) -> int:
        m = self._sa
        a, b, c = s & m, (s >> 1) & m, (s >> 2) & m
        na = a ^ (b & c)
        nb = a ^ b ^ (a & c)
        nc = a ^ b ^ c ^ (a & b)
        return (s & ~self._sbox_region) | na | (nb << 1) | (nc << 2)

    def eval_with_round_keys(self, rk: Sequence[int], x: int, width: int) -> int:
        s = self.fold(x, width) ^ rk[0]
        for i in range(self.params.rounds):
            s = self._lin[i](self._sbox(s)) ^ self.consts[i] ^ rk[i + 1]
        return s

    def circuit(self, in_width: int) -> Circuit:
        """Circuit with input groups (key bits, data bits) and ``block`` outputs."""
        if in_width not in self._circuits:
            self._circuits[in_width] = _build_circuit(self, in_width)
        return self._circuits[in_width]

    @property
    def and_count(self) -> int:
        return 3 * self.params.sboxes * self.params.rounds

    @property
    def and_depth(self) -> int:
        """r_F: AND layers (hence GMW rounds) of one shared evaluation."""
        return self.params.rounds


def prf_eval(inst: PrfInstance, key: int, x: int, width: int) -> int:
    if key < 0 or key >> inst.key_bits:
        raise WidthMismatch(f"key must fit in {inst.key_bits} bits")
    if width <= 0 or x < 0 or x >> width:
        raise WidthMismatch(f"input must fit in {width} bits")
    return inst.eval_with_round_keys(inst.round_keys(key), x, width)


def _build_circuit(inst: PrfInstance, width: int) -> Circuit:
    p = inst.params
    b = Builder([p.key_bits, width])
    key = list(range(p.key_bits))
    data = list(range(p.key_bits, p.key_bits + width))

    def keyed(mat: list[int]) -> list[list[int]]:
        # per output bit, the key wires it depends on
        return [[key[i] for i in range(p.key_bits) if (row >> i) & 1] for row in mat]

    # embed data
    chunks = [data[c:c + p.block] for c in range(0, width, p.block)]
    k0 = keyed(inst.key_mats[0])
    state = []
    for j in range(p.block):
        terms = [ch[j] for ch in chunks if j < len(ch)] + k0[j]
        state.append(b.xor_many(terms))
    for r in range(p.rounds):
        nxt = list(state)
        for k in range(p.sboxes):
            a, bb, c = state[3 * k], state[3 * k + 1], state[3 * k + 2]
            bc, ac, ab = b.and_(bb, c), b.and_(a, c), b.and_(a, bb)
            nxt[3 * k] = b.xor(a, bc)
            axb = b.xor(a, bb)
            nxt[3 * k + 1] = b.xor(axb, ac)
            nxt[3 * k + 2] = b.xor(b.xor(axb, c), ab)
        kr = keyed(inst.key_mats[r + 1])
        out = []
        for j, row in enumerate(inst.lin_mats[r]):
            terms = [nxt[i] for i in range(p.block) if (row >> i) & 1] + kr[j]
            w = b.xor_many(terms)
            if (inst.consts[r] >> j) & 1:
                w = b.inv(w)
            out.append(w)
        state = out
    return b.build(state)


def circuit_eval(inst: PrfInstance, key: int, x: int, width: int) -> int:
    """Evaluate the circuit form in the clear (cross-check for prf_eval)."""
    c = inst.circuit(width)
    outs = plain_eval(c, bits_of(key, inst.key_bits) + bits_of(x, width))
    return sum(o << i for i, o in enumerate(outs))


PARAMS = {
    "lowmc-128": PrfParams("lowmc-128", 128, 128, 10, 20, "pdtekit/lowmc-128/v1"),
    "toy16": PrfParams("toy16", 16, 16, 3, 4, "pdtekit/toy16/v1"),
    "toy8": PrfParams("toy8", 8, 8, 2, 3, "pdtekit/toy8/v1"),
}
_INSTANCES: dict[str, PrfInstance] = {}


def get_instance(name: str) -> PrfInstance:
    if name not in PARAMS:
        raise ConfigError(f"unknown PRF instance {name!r}; choose from {sorted(PARAMS)}")
    if name not in _INSTANCES:
        _INSTANCES[name] = PrfInstance(PARAMS[name])
    return _INSTANCES[name]


def load_circuit_file(path: str) -> Circuit:
    with open(path, "rb") as fh:
        return parse_circuit(fh.read())


def block_bits(n_blocks: int) -> int:
    return bitlen(n_blocks)


def check_index_width(m: int, n_blocks: int, width: int) -> None:
    need = bitlen(m) + block_bits(n_blocks)
    if need > width:
        raise IndexWidthOverflow(
            f"index needs {bitlen(m)} + {block_bits(n_blocks)} bits, only {width} available")


def index_concat(i: WordShare, j: int, n_blocks: int, party: int, m: int | None = None) -> WordShare:
    """Local shift-and-insert: the result reconstructs to ``i * 2^ceil(log2 B) + j``.

    ``m`` is the array length the index ranges over; when given, the width
    constraint ``ceil(log2 m) + ceil(log2 B) <= width`` is enforced.
    """
    if not 0 <= j < max(1, n_blocks):
        raise WidthMismatch("block id out of range")
    sh = block_bits(n_blocks)
    if m is not None:
        check_index_width(m, n_blocks, i.width)
    v = (i.value << sh) & ((1 << i.width) - 1)
    return xor_const(WordShare(v, i.width), j, party)
