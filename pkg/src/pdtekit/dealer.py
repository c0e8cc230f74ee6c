"""Correlated randomness: a trusted dealer plus two interactive triple protocols.

The dealer hands each party a :class:`CorrelationStore` holding exactly the
budget an evaluation will consume:

* boolean Beaver triples (GMW AND gates),
* daBits modulo n: one random bit shared both as XOR and additively mod n
  (boolean-to-arithmetic conversion in one round),
* weight-1 bit vectors (WBV): a shared vector with a single 1 at a random
  index ``rdx``, plus shares of ``rdx`` itself; either explicit or as a pair
  of DPF keys,
* random 1-of-k OT pads (sender: k pads; receiver: random choice and its pad),
* "special" multiplication triples mod N^2 where the sender holds ``a`` and
  the receiver ``b`` in the clear, and ``c = a*b`` is shared.

Everything is reproducible from the dealer seed. Stores serialize to a
:class:`CorrelationFile` (32-byte header + sections) whose size is what the
transcript books as dealt bytes.
"""

from __future__ import annotations

import random
import struct
import zlib
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import gmpy2
import numpy as np

from . import dpf, wire
from .channel import Channel, Proto, transfer
from .errors import (
    CorrelationExhausted,
    CorrelationFileError,
    MaskOverflow,
    OtExhausted,
)
from .gmw import TripleStream
from .paillier import PaillierKeypair, decrypt_raw, encrypt_raw, random_unit

# -- boolean triples -------------------------------------------------------


def gen_boolean_triples(count: int, rng: random.Random) -> tuple[TripleStream, TripleStream]:
    a0, b0, c0, a1, b1 = (rng.getrandbits(count) if count else 0 for _ in range(5))
    c1 = ((a0 ^ a1) & (b0 ^ b1)) ^ c0
    k = wire.nbytes(count)

    def enc(x):
        return x.to_bytes(k, "little")

    return (TripleStream(enc(a0), enc(b0), enc(c0), count),
            TripleStream(enc(a1), enc(b1), enc(c1), count))


# -- daBits ----------------------------------------------------------------


class DaBitStream:
    """One party's daBits for one modulus: XOR shares packed, additive shares listed."""

    def __init__(self, modulus: int, bits: int, arith: Sequence[int]):
        self.modulus = modulus
        self.bits = bits
        self.arith = list(arith)
        self.count = len(self.arith)
        self.used = 0

    @property
    def remaining(self) -> int:
        return self.count - self.used

    def take(self, k: int) -> tuple[int, list[int]]:
        if k > self.remaining:
            raise CorrelationExhausted(
                f"need {k} daBits mod {self.modulus}, {self.remaining} left")
        pos = self.used
        self.used += k
        return (self.bits >> pos) & ((1 << k) - 1), self.arith[pos:pos + k]


def gen_dabits(modulus: int, count: int, rng: random.Random) -> tuple[DaBitStream, DaBitStream]:
    x0, x1 = rng.getrandbits(count) if count else 0, rng.getrandbits(count) if count else 0
    r = x0 ^ x1
    a0 = [rng.randrange(modulus) for _ in range(count)]
    a1 = [(((r >> i) & 1) - a0[i]) % modulus for i in range(count)]
    return DaBitStream(modulus, x0, a0), DaBitStream(modulus, x1, a1)


# -- weight-1 bit vectors --------------------------------------------------


@dataclass
class WbvShare:
    """One party's share of a weight-1 vector of length ``length``.

    ``rdx_xor`` is a boolean share over ``sigma`` bits, ``rdx_arith`` an
    additive share mod ``length``. The vector is either stored (``vec``) or
    held as a DPF key and expanded on demand.
    """

    party: int
    length: int
    rdx_xor: int
    rdx_arith: int
    vec: np.ndarray | None = None
    key: dpf.DpfKey | None = None

    @property
    def sigma(self) -> int:
        return wire.bitlen(self.length)

    def vector(self) -> np.ndarray:
        if self.vec is None:
            assert self.key is not None
            self.vec = dpf.dpf_eval_full(self.key)
        return self.vec


def gen_wbv(m: int, rng: random.Random, mode: str = "direct") -> tuple[WbvShare, WbvShare]:
    if m < 1:
        raise ValueError("WBV length must be positive")
    sigma = wire.bitlen(m)
    rdx = rng.randrange(m)
    x0 = rng.getrandbits(sigma) if sigma else 0
    a0 = rng.randrange(m)
    args = [(0, x0, a0), (1, x0 ^ rdx, (rdx - a0) % m)]
    if mode == "direct":
        s0 = np.frombuffer(rng.getrandbits(8 * m).to_bytes(m, "little"), dtype=np.uint8) & 1
        s1 = s0.copy()
        s1[rdx] ^= 1
        vecs = (s0, s1)
        return tuple(WbvShare(p, m, x, a, vec=v) for (p, x, a), v in zip(args, vecs))  # type: ignore[return-value]
    if mode == "dpf":
        keys = dpf.dpf_gen(rdx, m, rng)
        return tuple(WbvShare(p, m, x, a, key=k) for (p, x, a), k in zip(args, keys))  # type: ignore[return-value]
    raise ValueError(f"unknown WBV mode {mode!r}")


# -- 1-of-k OT ------------------------------------------------------------


@dataclass
class OtSender:
    k: int
    width: int
    pads: np.ndarray  # (k, words) uint64


@dataclass
class OtReceiver:
    k: int
    width: int
    choice: int
    pad: np.ndarray  # (words,) uint64


def words64(width: int) -> int:
    return max(1, (width + 63) // 64)


def _random_words(rng: random.Random, rows: int, width: int) -> np.ndarray:
    w = words64(width)
    raw = rng.getrandbits(64 * w * rows) if rows else 0
    arr = np.frombuffer(raw.to_bytes(8 * w * rows, "little"), dtype=np.uint64).reshape(rows, w).copy()
    top = width - 64 * (w - 1)
    if top < 64:
        arr[:, -1] &= np.uint64((1 << top) - 1)
    return arr


def gen_precomputed_ot(k: int, width: int, rng: random.Random) -> tuple[OtSender, OtReceiver]:
    if k < 1:
        raise ValueError("need at least one message")
    pads = _random_words(rng, k, width)
    c = rng.randrange(k)
    return OtSender(k, width, pads), OtReceiver(k, width, c, pads[c].copy())


def int_to_words(x: int, w: int) -> np.ndarray:
    return np.frombuffer(x.to_bytes(8 * w, "little"), dtype=np.uint64).copy()


def words_to_int(a: np.ndarray) -> int:
    return int.from_bytes(np.ascontiguousarray(a, dtype=np.uint64).tobytes(), "little")


def ot_transfer(ch: Channel, sender: int, msgs: Sequence[int], choice: int, s: OtSender,
                r: OtReceiver, tag: str = "ot") -> Proto[int]:
    """Chosen-message 1-of-k OT from one precomputed correlation (2 rounds)."""
    k, width = s.k, s.width
    corr = (r.choice - choice) % k
    got = yield from transfer(ch, 1 - sender, wire.enc(corr, wire.bitlen(k) or 1), tag)
    corr_s = wire.dec(got)
    w = words64(width)
    blocks = []
    for j in range(k):
        pad = words_to_int(s.pads[(j + corr_s) % k])
        blocks.append(msgs[j] ^ pad)
    got = yield from transfer(ch, sender, wire.enc_many(blocks, width), tag)
    ys = wire.dec_many(got, width, k)
    return ys[choice] ^ words_to_int(r.pad[:w])


# -- special multiplication triples mod N^2 -------------------------------


@dataclass(frozen=True)
class SpecialBmt:
    """``clear`` is a (sender) or b (receiver); ``c`` is this party's share of a*b."""

    party: int
    modulus: int
    clear: int
    c: int


def gen_special_bmt(modulus: int, rng: random.Random) -> tuple[SpecialBmt, SpecialBmt]:
    a, b = rng.randrange(modulus), rng.randrange(modulus)
    c0 = rng.randrange(modulus)
    return SpecialBmt(0, modulus, a, c0), SpecialBmt(1, modulus, b, (a * b - c0) % modulus)


@dataclass(frozen=True)
class ModularTriple:
    a: int
    b: int
    c: int
    modulus: int


def gen_modular_triples(count: int, modulus: int, rng: random.Random
                        ) -> tuple[list[ModularTriple], list[ModularTriple]]:
    t0, t1 = [], []
    for _ in range(count):
        a, b = rng.randrange(modulus), rng.randrange(modulus)
        a0, b0, c0 = (rng.randrange(modulus) for _ in range(3))
        t0.append(ModularTriple(a0, b0, c0, modulus))
        t1.append(ModularTriple((a - a0) % modulus, (b - b0) % modulus,
                                (a * b - c0) % modulus, modulus))
    return t0, t1


# -- interactive modular triples -------------------------------------------


def gen_bmt_ahe(ch: Channel, a: int, b: int, n: int, sk: PaillierKeypair, rng0: random.Random,
                rng1: random.Random, lam: int = 40) -> Proto[tuple[int, int]]:
    """Triple share of ``a*b mod n`` (P0 holds a and the key, P1 holds b).

    P0 sends Enc(a); P1 answers ``Enc(a)^b * Enc(r + rho*n)``; P0 decrypts
    mod n and P1 keeps ``-r``. Two rounds.
    """
    pk = sk.pk
    if (n - 1) * (n - 1) + (n - 1) + ((1 << lam) - 1) * n >= pk.n:
        raise MaskOverflow(f"n={n} with lambda={lam} does not fit a {pk.bits}-bit key")
    if not (0 <= a < n and 0 <= b < n):
        raise ValueError("operands must lie in [0, n)")
    x = encrypt_raw(pk, a, random_unit(pk.n, rng0))
    got = yield from transfer(ch, 0, wire.enc_residues([x], pk.nsq), "bmt-ahe")
    (x1,) = wire.dec_residues(got, pk.nsq, 1)
    r = rng1.randrange(n)
    rho = rng1.getrandbits(lam)
    mask = encrypt_raw(pk, r + rho * n, random_unit(pk.n, rng1))
    xp = int(gmpy2.powmod(x1, b, pk.nsq)) * mask % pk.nsq
    got = yield from transfer(ch, 1, wire.enc_residues([xp], pk.nsq), "bmt-ahe")
    (xp0,) = wire.dec_residues(got, pk.nsq, 1)
    return decrypt_raw(sk, xp0) % n, (-r) % n


def gen_bmt_ot(ch: Channel, a: int, b: int, n: int, ots: Sequence[tuple[OtSender, OtReceiver]],
               rng1: random.Random) -> Proto[tuple[int, int]]:
    """Triple share of ``a*b mod n`` from ``bitlen(n)`` 1-of-2 OTs.

    P1 (holding b) sends ``(r_i, r_i + 2^i b)``; P0 chooses with bit ``a_i``.
    All OTs run side by side: two rounds in total.
    """
    ell = max(1, wire.bitlen(n))
    if len(ots) < ell:
        raise OtExhausted(f"need {ell} OT correlations, got {len(ots)}")
    width = ell
    rs = [rng1.randrange(n) for _ in range(ell)]
    corrs = []
    for i in range(ell):
        s, r = ots[i]
        corrs.append((r.choice - ((a >> i) & 1)) % 2)
    got = yield from transfer(ch, 0, wire.enc(sum(c << i for i, c in enumerate(corrs)), ell), "bmt-ot")
    corr = wire.dec(got)
    blocks = []
    for i in range(ell):
        s, _ = ots[i]
        ci = (corr >> i) & 1
        m0, m1 = rs[i], (rs[i] + (b << i)) % n
        for j, mj in enumerate((m0, m1)):
            blocks.append(mj ^ (words_to_int(s.pads[(j + ci) % 2]) & ((1 << width) - 1)))
    got = yield from transfer(ch, 1, wire.enc_many(blocks, width), "bmt-ot")
    ys = wire.dec_many(got, width, 2 * ell)
    c0 = 0
    for i in range(ell):
        _, r = ots[i]
        ai = (a >> i) & 1
        c0 += ys[2 * i + ai] ^ (words_to_int(r.pad) & ((1 << width) - 1))
    return c0 % n, (-sum(rs)) % n


# -- budgets and stores ----------------------------------------------------


@dataclass
class Budget:
    """Exact correlation needs of one run, by kind."""

    triples: int = 0
    dabits: dict[int, int] = field(default_factory=dict)
    wbv: dict[str, list[int]] = field(default_factory=dict)        # label -> lengths
    ot: dict[str, list[tuple[int, int]]] = field(default_factory=dict)  # label -> (k, width)
    special: dict[int, int] = field(default_factory=dict)        # modulus -> count

    def add_dabits(self, modulus: int, k: int) -> None:
        self.dabits[modulus] = self.dabits.get(modulus, 0) + k

    def add_wbv(self, label: str, length: int) -> None:
        self.wbv.setdefault(label, []).append(length)

    def add_ot(self, label: str, k: int, width: int) -> None:
        self.ot.setdefault(label, []).append((k, width))

    def add_special(self, modulus: int, k: int = 1) -> None:
        self.special[modulus] = self.special.get(modulus, 0) + k

    def merge(self, other: "Budget") -> "Budget":
        out = Budget(self.triples + other.triples, dict(self.dabits),
                     {k: list(v) for k, v in self.wbv.items()},
                     {k: list(v) for k, v in self.ot.items()}, dict(self.special))
        for m, k in other.dabits.items():
            out.add_dabits(m, k)
        for lab, ls in other.wbv.items():
            out.wbv.setdefault(lab, []).extend(ls)
        for lab, ls in other.ot.items():
            out.ot.setdefault(lab, []).extend(ls)
        for m, k in other.special.items():
            out.add_special(m, k)
        return out

    def scaled(self, times: int) -> "Budget":
        out = Budget()
        for _ in range(times):
            out = out.merge(self)
        return out


class CorrelationStore:
    """One party's correlations with single-consumer cursors."""

    def __init__(self, party: int, triples: TripleStream | None = None):
        self.party = party
        self.triples = triples or TripleStream(b"", b"", b"", 0)
        self.dabits: dict[int, DaBitStream] = {}
        self.wbv: dict[str, deque[WbvShare]] = {}
        self.ot: dict[str, deque] = {}
        self.special: dict[int, deque[SpecialBmt]] = {}
        self.fingerprint = 0

    def take_dabits(self, modulus: int, k: int) -> tuple[int, list[int]]:
        s = self.dabits.get(modulus)
        if s is None:
            if k == 0:
                return 0, []
            raise CorrelationExhausted(f"no daBits provisioned mod {modulus}")
        return s.take(k)

    def take_wbv(self, label: str) -> WbvShare:
        q = self.wbv.get(label)
        if not q:
            raise CorrelationExhausted(f"no weight-1 vector left for {label!r}")
        return q.popleft()

    def take_ot(self, label: str):
        q = self.ot.get(label)
        if not q:
            raise OtExhausted(f"no OT correlation left for {label!r}")
        return q.popleft()

    def take_special(self, modulus: int) -> SpecialBmt:
        q = self.special.get(modulus)
        if not q:
            raise CorrelationExhausted(f"no special triple left mod {modulus}")
        return q.popleft()

    def remaining(self) -> Budget:
        b = Budget(self.triples.remaining)
        for m, s in self.dabits.items():
            if s.remaining:
                b.dabits[m] = s.remaining
        for lab, q in self.wbv.items():
            if q:
                b.wbv[lab] = [w.length for w in q]
        for lab, q in self.ot.items():
            if q:
                b.ot[lab] = [(o.k, o.width) for o in q]
        for m, q in self.special.items():
            if q:
                b.special[m] = len(q)
        return b

    def exhausted(self) -> bool:
        r = self.remaining()
        return not (r.triples or r.dabits or r.wbv or r.ot or r.special)


def provision(budget: Budget, rng: random.Random, wbv_mode: str = "direct",
              ot_sender: dict[str, int] | None = None) -> tuple[CorrelationStore, CorrelationStore]:
    """Deal both parties' stores. ``ot_sender`` maps OT labels to the sending
    party (default 0)."""
    ot_sender = ot_sender or {}
    t0, t1 = gen_boolean_triples(budget.triples, rng)
    s0, s1 = CorrelationStore(0, t0), CorrelationStore(1, t1)
    for m, k in sorted(budget.dabits.items()):
        s0.dabits[m], s1.dabits[m] = gen_dabits(m, k, rng)
    for lab, lengths in budget.wbv.items():
        q0, q1 = deque(), deque()
        for length in lengths:
            a, b = gen_wbv(length, rng, wbv_mode)
            q0.append(a)
            q1.append(b)
        s0.wbv[lab], s1.wbv[lab] = q0, q1
    for lab, specs in budget.ot.items():
        q0, q1 = deque(), deque()
        for k, width in specs:
            a, b = gen_precomputed_ot(k, width, rng)
            q0.append(a)
            q1.append(b)
        if ot_sender.get(lab, 0) == 0:
            s0.ot[lab], s1.ot[lab] = q0, q1
        else:
            s0.ot[lab], s1.ot[lab] = q1, q0
    for m, k in budget.special.items():
        q0, q1 = deque(), deque()
        for _ in range(k):
            a, b = gen_special_bmt(m, rng)
            q0.append(a)
            q1.append(b)
        s0.special[m], s1.special[m] = q0, q1
    return s0, s1


# -- correlation files -----------------------------------------------------

MAGIC = b"PDTC"
VERSION = 1
HEADER = struct.Struct("<4sHHBBHQII4x")  # 32 bytes
assert HEADER.size == 32
SEC_TRIPLES, SEC_DABITS, SEC_WBV, SEC_OT_S, SEC_OT_R, SEC_SPECIAL = range(1, 7)


def _big(x: int) -> bytes:
    b = x.to_bytes(max(1, (x.bit_length() + 7) // 8), "little")
    return struct.pack("<I", len(b)) + b


class _Reader:
    def __init__(self, data: bytes):
        self.data, self.pos = data, 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CorrelationFileError("truncated correlation file")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u(self, fmt: str) -> int:
        s = struct.Struct("<" + fmt)
        return s.unpack(self.take(s.size))[0]

    def big(self) -> int:
        return int.from_bytes(self.take(self.u("I")), "little")


def _label(lab: str) -> bytes:
    b = lab.encode()
    return struct.pack("<H", len(b)) + b


def store_to_bytes(store: CorrelationStore, fingerprint: int = 0) -> bytes:
    """Serialize the unconsumed correlations of a store."""
    secs = []
    t = store.triples
    a, b, c = t.to_bytes()
    secs.append((SEC_TRIPLES, struct.pack("<QQ", t.count, t.used) + a + b + c))
    for m, s in store.dabits.items():
        rb = wire.residue_bytes(m)
        body = _big(m) + struct.pack("<QQ", s.count, s.used)
        body += s.bits.to_bytes(wire.nbytes(s.count), "little")
        body += b"".join(x.to_bytes(rb, "little") for x in s.arith)
        secs.append((SEC_DABITS, body))
    for lab, q in store.wbv.items():
        for w in q:
            sig = wire.bitlen(w.length)
            body = _label(lab) + struct.pack("<IB", w.length, 1 if w.key else 0)
            body += w.rdx_xor.to_bytes(wire.nbytes(sig), "little")
            body += w.rdx_arith.to_bytes(wire.nbytes(sig) or 1, "little")
            if w.key is not None:
                body += w.key.to_bytes()
            else:
                body += np.packbits(w.vector(), bitorder="little").tobytes()
            secs.append((SEC_WBV, body))
    for lab, q in store.ot.items():
        for o in q:
            if isinstance(o, OtSender):
                body = _label(lab) + struct.pack("<II", o.k, o.width)
                body += b"".join(words_to_int(row).to_bytes(wire.nbytes(o.width), "little")
                                 for row in o.pads)
                secs.append((SEC_OT_S, body))
            else:
                body = _label(lab) + struct.pack("<III", o.k, o.width, o.choice)
                body += words_to_int(o.pad).to_bytes(wire.nbytes(o.width), "little")
                secs.append((SEC_OT_R, body))
    for m, q in store.special.items():
        rb = wire.residue_bytes(m)
        for s in q:
            secs.append((SEC_SPECIAL, _big(m) + s.clear.to_bytes(rb, "little") + s.c.to_bytes(rb, "little")))
    body = b"".join(struct.pack("<BI", kind, len(p)) + p for kind, p in secs)
    head = HEADER.pack(MAGIC, VERSION, 1, store.party, 0, len(secs) & 0xFFFF,
                       fingerprint & (2**64 - 1), len(body), zlib.crc32(body))
    return head + body


def store_from_bytes(data: bytes) -> CorrelationStore:
    if len(data) < HEADER.size:
        raise CorrelationFileError("file shorter than its header")
    magic, ver, kind, party, _, nsec, fp, blen, crc = HEADER.unpack(data[:HEADER.size])
    if magic != MAGIC:
        raise CorrelationFileError("not a correlation file (bad magic)")
    if ver != VERSION:
        raise CorrelationFileError(f"unsupported correlation file version {ver}")
    body = data[HEADER.size:]
    if len(body) != blen:
        raise CorrelationFileError(f"header announces {blen} body bytes, found {len(body)}")
    if zlib.crc32(body) != crc:
        raise CorrelationFileError("checksum mismatch")
    store = CorrelationStore(party)
    store.fingerprint = fp
    rd = _Reader(body)
    count = 0
    while rd.pos < len(body):
        sk, slen = rd.u("B"), rd.u("I")
        sec = _Reader(rd.take(slen))
        count += 1
        if sk == SEC_TRIPLES:
            n, used = sec.u("Q"), sec.u("Q")
            k = wire.nbytes(n)
            store.triples = TripleStream(sec.take(k), sec.take(k), sec.take(k), n)
            store.triples.used = used
        elif sk == SEC_DABITS:
            m = sec.big()
            n, used = sec.u("Q"), sec.u("Q")
            bits = int.from_bytes(sec.take(wire.nbytes(n)), "little")
            rb = wire.residue_bytes(m)
            arith = [int.from_bytes(sec.take(rb), "little") for _ in range(n)]
            s = DaBitStream(m, bits, arith)
            s.used = used
            store.dabits[m] = s
        elif sk == SEC_WBV:
            lab = sec.take(sec.u("H")).decode()
            length, has_key = sec.u("I"), sec.u("B")
            sig = wire.bitlen(length)
            rx = int.from_bytes(sec.take(wire.nbytes(sig)), "little")
            ra = int.from_bytes(sec.take(wire.nbytes(sig) or 1), "little")
            rest = sec.take(slen - sec.pos)
            if has_key:
                w = WbvShare(party, length, rx, ra, key=dpf.DpfKey.from_bytes(rest, party, length))
            else:
                vec = np.unpackbits(np.frombuffer(rest, dtype=np.uint8), bitorder="little")[:length]
                w = WbvShare(party, length, rx, ra, vec=vec.astype(np.uint8))
            store.wbv.setdefault(lab, deque()).append(w)
        elif sk in (SEC_OT_S, SEC_OT_R):
            lab = sec.take(sec.u("H")).decode()
            k, width = sec.u("I"), sec.u("I")
            wb, w64 = wire.nbytes(width), words64(width)
            if sk == SEC_OT_S:
                rows = [int_to_words(int.from_bytes(sec.take(wb), "little"), w64) for _ in range(k)]
                o = OtSender(k, width, np.stack(rows) if rows else np.zeros((0, w64), np.uint64))
            else:
                c = sec.u("I")
                o = OtReceiver(k, width, c, int_to_words(int.from_bytes(sec.take(wb), "little"), w64))
            store.ot.setdefault(lab, deque()).append(o)
        elif sk == SEC_SPECIAL:
            m = sec.big()
            rb = wire.residue_bytes(m)
            clear = int.from_bytes(sec.take(rb), "little")
            c = int.from_bytes(sec.take(rb), "little")
            store.special.setdefault(m, deque()).append(SpecialBmt(party, m, clear, c))
        else:
            raise CorrelationFileError(f"unknown section type {sk}")
    if count != nsec:
        raise CorrelationFileError(f"header announces {nsec} sections, found {count}")
    return store


def dealt_bytes(store: CorrelationStore) -> int:
    return len(store_to_bytes(store))


def fingerprint(seed: int | str) -> int:
    """64-bit tag binding a correlation file to the run it was dealt for."""
    return zlib.crc32(str(seed).encode()) | (zlib.adler32(str(seed).encode()) << 32)

