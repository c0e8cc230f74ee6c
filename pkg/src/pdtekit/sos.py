"""Shared oblivious selection: from a shared index, shares of M[idx].

Party 0 (S) owns the array M; party 1 (R) holds nothing but shares. Three
backends sit behind :func:`setup_proto` / :func:`select_proto`:

``ot``   S rotates and masks the whole array and R picks its entry with a
         precomputed 1-of-m OT. No setup traffic, Theta(m) online bytes.
``prf``  At setup R receives ``C[i] = M[i] ^ F(sk, i||j)`` block by block.
         A select opens ``delta`` against a weight-1 vector, scans C locally
         and removes the PRF mask with a shared (SIMD) PRF evaluation.
``he``   At setup R receives Paillier encryptions of M. A select scans the
         ciphertexts the same way, converts the shared ciphertext to a
         multiplicative sharing, lets S decrypt a re-masked value and
         finishes with an A2B.

Index semantics: the caller guarantees ``idx < m``; anything else wraps to
``idx mod m`` in arithmetic mode (or selects a padding row in xor mode).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels, wire
from .channel import Channel, Proto, exchange, parallel, transfer
from .conv import a2b_proto, adder_circuit, add_to_mult_proto, b2a_proto
from .dealer import Budget, CorrelationStore, words64, words_to_int
from .errors import ConfigInvalid, IndexWidthOverflow
from .gmw import shared_prf_proto
from .paillier import PaillierKeypair, PublicKey, decrypt_crt, encrypt_raw, keygen, random_unit
from .prf import block_bits, get_instance

BACKENDS = ("ot", "prf", "he")


@dataclass(frozen=True)
class SosConfig:
    backend: str
    m: int
    width: int                 # l_v, element bits
    index_width: int = 64      # bits of the shared index words
    delta_mode: str = "arith"  # arith | xor
    prf: str = "toy16"
    key_bits: int = 512        # Paillier |N|
    lam: int = 40
    label: str = "sos"

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ConfigInvalid(f"unknown SOS backend {self.backend!r}")
        if self.m < 1 or self.width < 1:
            raise ConfigInvalid("array length and element width must be positive")
        if self.delta_mode not in ("arith", "xor"):
            raise ConfigInvalid(f"unknown delta mode {self.delta_mode!r}")
        if wire.bitlen(self.m) > self.index_width:
            raise ConfigInvalid(f"index width {self.index_width} cannot address {self.m} elements")
        if self.backend == "prf":
            inst = get_instance(self.prf)
            blocks = -(-self.width // inst.block)
            if wire.bitlen(self.length) + block_bits(blocks) > self.index_width:
                raise IndexWidthOverflow(
                    f"PRF inputs need {wire.bitlen(self.length)} + {block_bits(blocks)} bits, "
                    f"index width is {self.index_width}")
        if self.backend == "he" and self.chunk_width < 1:
            raise ConfigInvalid(f"|N|={self.key_bits} leaves no room for lambda={self.lam}")

    @property
    def sigma(self) -> int:
        return wire.bitlen(self.m)

    @property
    def length(self) -> int:
        """Weight-1 vector length: m, or the next power of two in xor mode."""
        if self.backend != "ot" and self.delta_mode == "xor":
            return 1 << self.sigma
        return self.m

    @property
    def blocks(self) -> int:
        return -(-self.width // get_instance(self.prf).block)

    # HE chunking: each ciphertext carries chunk_width plaintext bits so that
    # chunk + beta + rho * 2^chunk stays below N.
    @property
    def chunk_width(self) -> int:
        return self.key_bits - self.lam - 2

    @property
    def chunks(self) -> list[int]:
        cw, out, left = self.chunk_width, [], self.width
        while left > 0:
            out.append(min(cw, left))
            left -= cw
        return out

    @property
    def ct_bits(self) -> int:
        return 2 * self.key_bits


@dataclass
class SosSender:
    cfg: SosConfig
    data: np.ndarray                      # (m, W) uint64 clear array
    sk: int = 0                           # prf key
    masked: np.ndarray | None = None      # prf: C
    keypair: PaillierKeypair | None = None
    cts: np.ndarray | None = None         # he: concatenated ciphertext chunks
    scanned: int = 0
    selects: int = 0
    rng: random.Random = field(default_factory=random.Random)


@dataclass
class SosReceiver:
    cfg: SosConfig
    masked: np.ndarray | None = None
    pk: PublicKey | None = None
    cts: np.ndarray | None = None
    scanned: int = 0
    rng: random.Random = field(default_factory=random.Random)


# -- array helpers ---------------------------------------------------------

def to_matrix(values: Sequence[int], width: int, rows: int | None = None) -> np.ndarray:
    w = words64(width)
    rows = len(values) if rows is None else rows
    buf = b"".join(int(v).to_bytes(8 * w, "little") for v in values)
    buf += bytes(8 * w * (rows - len(values)))
    return np.frombuffer(buf, dtype=np.uint64).reshape(rows, w).copy()


def matrix_rows_bytes(mat: np.ndarray, width: int) -> bytes:
    k = wire.nbytes(width)
    return np.ascontiguousarray(mat).view(np.uint8).reshape(mat.shape[0], -1)[:, :k].tobytes()


def bytes_to_matrix(data: bytes, width: int, rows: int) -> np.ndarray:
    k, w = wire.nbytes(width), words64(width)
    raw = np.frombuffer(data, dtype=np.uint8).reshape(rows, k)
    out = np.zeros((rows, 8 * w), dtype=np.uint8)
    out[:, :k] = raw
    return out.view(np.uint64).reshape(rows, w)


def _fold(xs: np.ndarray, width: int, block: int) -> np.ndarray:
    if width <= block or block >= 64:
        return xs
    out = np.zeros_like(xs)
    mask = np.uint64((1 << block) - 1)
    for off in range(0, width, block):
        out ^= (xs >> np.uint64(off)) & mask
    return out


def prf_masks(cfg: SosConfig, sk: int) -> np.ndarray:
    """``F(sk, i||j)`` concatenated over blocks j, for every row i (l_v bits)."""
    inst = get_instance(cfg.prf)
    cipher = kernels.Cipher(inst, sk)
    lb, nb = inst.block, cfg.blocks
    sh = block_bits(nb)
    rows = cfg.length
    idx = (np.arange(rows, dtype=np.uint64)[:, None] << np.uint64(sh)) | np.arange(nb, dtype=np.uint64)[None, :]
    flat = _fold(idx.reshape(-1), cfg.index_width, lb)
    out = cipher.eval_u64(flat).reshape(rows, nb, 2)
    wfull = words64(nb * lb) + 1
    acc = np.zeros((rows, wfull), dtype=np.uint64)
    for j in range(nb):
        off = j * lb
        wi, sh_ = off // 64, off % 64
        lo, hi = out[:, j, 0], out[:, j, 1]
        if lb <= 64:
            acc[:, wi] |= lo << np.uint64(sh_)
        else:  # 128-bit blocks are word aligned
            acc[:, wi] |= lo
            acc[:, wi + 1] |= hi
    w = words64(cfg.width)
    acc = acc[:, :w].copy()
    top = cfg.width - 64 * (w - 1)
    if top < 64:
        acc[:, -1] &= np.uint64((1 << top) - 1)
    return acc


# -- setup -----------------------------------------------------------------

def setup_proto(ch: Channel, cfg: SosConfig, values: Sequence[int], rng_s: random.Random,
                rng_r: random.Random, keypair: PaillierKeypair | None = None
                ) -> Proto[tuple[SosSender, SosReceiver]]:
    if len(values) != cfg.m:
        raise ConfigInvalid(f"array has {len(values)} elements, config says m={cfg.m}")
    if any(v < 0 or v >> cfg.width for v in values):
        raise ConfigInvalid(f"array elements must fit in {cfg.width} bits")
    data = to_matrix(values, cfg.width, cfg.length)
    s = SosSender(cfg, data, rng=rng_s)
    r = SosReceiver(cfg, rng=rng_r)
    with ch.in_phase("setup"):
        if cfg.backend == "prf":
            inst = get_instance(cfg.prf)
            s.sk = rng_s.getrandbits(inst.key_bits)
            s.masked = data ^ prf_masks(cfg, s.sk)
            got = yield from transfer(ch, 0, matrix_rows_bytes(s.masked, cfg.width), "sos-setup")
            r.masked = bytes_to_matrix(got, cfg.width, cfg.length)
        elif cfg.backend == "he":
            kp = keypair or keygen(cfg.key_bits, rng_s)
            if kp.pk.bits != cfg.key_bits:
                raise ConfigInvalid("Paillier key size disagrees with the config")
            s.keypair = kp
            pk = kp.pk
            chunks = cfg.chunks
            cts = []
            for i in range(cfg.length):
                v = values[i] if i < cfg.m else 0
                row, off = 0, 0
                for k, cw in enumerate(chunks):
                    part = (v >> off) & ((1 << cw) - 1)
                    row |= encrypt_raw(pk, part, random_unit(pk.n, rng_s)) << (k * cfg.ct_bits)
                    off += cw
                cts.append(row)
            total = cfg.ct_bits * len(chunks)
            s.cts = to_matrix(cts, total)
            msg = wire.enc(pk.n, cfg.key_bits) + matrix_rows_bytes(s.cts, total)
            got = yield from transfer(ch, 0, msg, "sos-setup")
            nb = wire.nbytes(cfg.key_bits)
            r.pk = PublicKey(wire.dec(got[:nb]))
            r.cts = bytes_to_matrix(got[nb:], total, cfg.length)
    return s, r


# -- budgets ---------------------------------------------------------------

def select_budget(cfg: SosConfig, n: int | None = None) -> Budget:
    """Correlations consumed by one select. The HE backend needs the modulus N."""
    b = Budget()
    if cfg.backend == "ot":
        b.add_dabits(cfg.m, cfg.sigma)
        b.add_ot(cfg.label, cfg.m, cfg.width)
        return b
    b.add_wbv(cfg.label, cfg.length)
    if cfg.delta_mode == "arith":
        b.add_dabits(cfg.m, cfg.sigma)
    if cfg.backend == "prf":
        c = get_instance(cfg.prf).circuit(cfg.index_width)
        b.triples += c.and_count * cfg.blocks
    else:
        if n is None:
            raise ConfigInvalid("HE budget needs the Paillier modulus")
        nsq = n * n
        for cw in cfg.chunks:
            b.triples += adder_circuit(cw).and_count
            b.add_dabits(nsq, cfg.ct_bits)
            b.add_special(nsq)
    return b


# -- select ----------------------------------------------------------------

def _open_delta(ch: Channel, cfg: SosConfig, idx: Sequence[int], wbv, stores) -> Proto[int]:
    """Reveal delta (rdx - idx mod m, or rdx ^ idx); both parties learn it."""
    sigma = cfg.sigma
    low = [v & ((1 << sigma) - 1) for v in idx]
    if cfg.delta_mode == "xor":
        d = [wbv[p].rdx_xor ^ low[p] for p in (0, 1)]
        got0, _ = yield from exchange(ch, wire.enc(d[0], sigma), wire.enc(d[1], sigma), "delta")
        return d[0] ^ wire.dec(got0)
    m = cfg.m
    a = yield from b2a_proto(ch, low, sigma, m, [stores[0].dabits.get(m), stores[1].dabits.get(m)]
                             if sigma else [None, None])
    d = [(wbv[p].rdx_arith - a[p]) % m for p in (0, 1)]
    got0, _ = yield from exchange(ch, wire.enc(d[0], sigma), wire.enc(d[1], sigma), "delta")
    return (d[0] + wire.dec(got0)) % m


def _scan(cfg: SosConfig, vec: np.ndarray, delta: int, data: np.ndarray) -> np.ndarray:
    return kernels.xor_scan(np.ascontiguousarray(vec, dtype=np.uint8), int(delta),
                            cfg.delta_mode == "xor", data)


def _ot_select(ch: Channel, s: SosSender, r: SosReceiver, idx: Sequence[int],
               stores: Sequence[CorrelationStore]) -> Proto[tuple[int, int]]:
    cfg = s.cfg
    m, sigma = cfg.m, cfg.sigma
    low = [v & ((1 << sigma) - 1) for v in idx]
    if sigma:
        a = yield from b2a_proto(ch, low, sigma, m, [stores[0].dabits.get(m), stores[1].dabits.get(m)])
    else:
        a = (0, 0)
    ots, otr = stores[0].take_ot(cfg.label), stores[1].take_ot(cfg.label)
    corr = (a[1] - otr.choice) % m
    got = yield from transfer(ch, 1, wire.enc(corr, sigma), "ot-sos")
    corr_s = wire.dec(got)
    mask = s.rng.getrandbits(cfg.width)
    w = words64(cfg.width)
    rmask = np.frombuffer(mask.to_bytes(8 * w, "little"), dtype=np.uint64)
    e = np.roll(s.data, -a[0], axis=0) ^ rmask
    y = np.roll(e, -corr_s, axis=0) ^ ots.pads[:, :w]
    s.scanned += m
    got = yield from transfer(ch, 0, matrix_rows_bytes(y, cfg.width), "ot-sos")
    row = bytes_to_matrix(got, cfg.width, m)[otr.choice] ^ otr.pad[:w]
    return mask, words_to_int(row)


def _prf_select(ch: Channel, s: SosSender, r: SosReceiver, idx: Sequence[int],
                stores: Sequence[CorrelationStore]) -> Proto[tuple[int, int]]:
    cfg = s.cfg
    inst = get_instance(cfg.prf)
    wbv = [stores[0].take_wbv(cfg.label), stores[1].take_wbv(cfg.label)]
    nb, sh, lw = cfg.blocks, block_bits(cfg.blocks), cfg.index_width
    full = (1 << lw) - 1
    lanes = [[((idx[p] << sh) & full) ^ (j if p == 0 else 0) for j in range(nb)] for p in (0, 1)]
    circ = inst.circuit(lw)
    triples = (stores[0].triples, stores[1].triples)
    delta, (f0, f1) = yield from parallel(
        _open_delta(ch, cfg, idx, wbv, stores),
        shared_prf_proto(ch, circ, s.sk, 0, lanes, triples),
    )
    e0 = words_to_int(_scan(cfg, wbv[0].vector(), delta, s.masked))
    e1 = words_to_int(_scan(cfg, wbv[1].vector(), delta, r.masked))
    s.scanned += cfg.length
    r.scanned += cfg.length
    mask = (1 << cfg.width) - 1
    cat0 = sum(v << (j * inst.block) for j, v in enumerate(f0)) & mask
    cat1 = sum(v << (j * inst.block) for j, v in enumerate(f1)) & mask
    return e0 ^ cat0, e1 ^ cat1


def _he_chunk(ch: Channel, s: SosSender, r: SosReceiver, ct: Sequence[int], cw: int,
              stores: Sequence[CorrelationStore]) -> Proto[tuple[int, int]]:
    cfg = s.cfg
    kp = s.keypair
    n = kp.n
    nsq = n * n
    bits = cfg.ct_bits
    x = yield from b2a_proto(ch, ct, bits, nsq, [stores[0].dabits[nsq], stores[1].dabits[nsq]], "he-b2a")
    bmt = (stores[0].take_special(nsq), stores[1].take_special(nsq))
    gamma, mult_r = yield from add_to_mult_proto(ch, x, bmt, n, s.rng)
    # R re-masks: x_beta = mult_r * Enc(beta + rho * 2^cw)
    beta = r.rng.getrandbits(cw)
    rho = r.rng.getrandbits(cfg.lam)
    pk = r.pk
    xb = mult_r * encrypt_raw(pk, beta + (rho << cw), random_unit(pk.n, r.rng)) % nsq
    got = yield from transfer(ch, 1, wire.enc_residues([xb], nsq), "he-xb")
    xb_s = wire.dec_residues(got, nsq, 1)[0]
    plain = decrypt_crt(kp, gamma * xb_s % nsq)
    m2 = 1 << cw
    out = yield from a2b_proto(ch, (plain % m2, (-beta) % m2), cw, (stores[0].triples, stores[1].triples))
    return out


def _he_select(ch: Channel, s: SosSender, r: SosReceiver, idx: Sequence[int],
               stores: Sequence[CorrelationStore]) -> Proto[tuple[int, int]]:
    cfg = s.cfg
    wbv = [stores[0].take_wbv(cfg.label), stores[1].take_wbv(cfg.label)]
    delta = yield from _open_delta(ch, cfg, idx, wbv, stores)
    e0 = words_to_int(_scan(cfg, wbv[0].vector(), delta, s.cts))
    e1 = words_to_int(_scan(cfg, wbv[1].vector(), delta, r.cts))
    s.scanned += cfg.length
    r.scanned += cfg.length
    cmask = (1 << cfg.ct_bits) - 1
    subs = []
    for k, cw in enumerate(cfg.chunks):
        sh = k * cfg.ct_bits
        subs.append(_he_chunk(ch, s, r, ((e0 >> sh) & cmask, (e1 >> sh) & cmask), cw, stores))
    parts = yield from parallel(*subs)
    o0 = o1 = 0
    off = 0
    for (a, b), cw in zip(parts, cfg.chunks):
        o0 |= a << off
        o1 |= b << off
        off += cw
    return o0, o1


def select_proto(ch: Channel, s: SosSender, r: SosReceiver, idx: Sequence[int],
                 stores: Sequence[CorrelationStore]) -> Proto[tuple[int, int]]:
    """XOR shares of ``M[idx]`` from XOR shares ``idx`` (index_width bits)."""
    s.selects += 1
    backend = s.cfg.backend
    if backend == "ot":
        return (yield from _ot_select(ch, s, r, idx, stores))
    if backend == "prf":
        return (yield from _prf_select(ch, s, r, idx, stores))
    return (yield from _he_select(ch, s, r, idx, stores))
