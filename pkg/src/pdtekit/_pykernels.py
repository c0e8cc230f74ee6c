"""Pure-Python/numpy versions of the compiled kernels (same results, slower)."""

from __future__ import annotations

import numpy as np

IMPLEMENTATION = "python"
_M64 = (1 << 64) - 1


class Cipher:
    """Keyed block evaluation for one PRF instance and one key."""

    def __init__(self, inst, key: int):
        self.inst = inst
        self.block = inst.block
        self.rk = inst.round_keys(key)

    def eval(self, x: int) -> int:
        return self.inst.eval_with_round_keys(self.rk, x, self.block)

    def eval_many(self, xs):
        f, rk, b = self.inst.eval_with_round_keys, self.rk, self.block
        return [f(rk, x, b) for x in xs]

    def eval_u64(self, xs: np.ndarray) -> np.ndarray:
        vals = self.eval_many(int(x) for x in xs)
        out = np.empty((len(vals), 2), dtype=np.uint64)
        out[:, 0] = [v & _M64 for v in vals]
        out[:, 1] = [v >> 64 for v in vals]
        return out


def _prg_block(prg: Cipher, s: int, i: int) -> int:
    x = s ^ i
    return prg.eval(x) ^ x


def _expand(prg: Cipher, s: int):
    left, right = _prg_block(prg, s, 0), _prg_block(prg, s, 1)
    return left & ~1, left & 1, right & ~1, right & 1


def _convert(prg: Cipher, s: int, e: int) -> int:
    v = _prg_block(prg, s, 2)
    return v if e >= 7 else v & ((1 << (1 << e)) - 1)


def dpf_gen(prg: Cipher, levels: int, e: int, alpha: int, beta: int, s0: int, s1: int):
    t0, t1 = 0, 1
    cws = []
    for i in range(levels):
        a = (alpha >> (e + levels - 1 - i)) & 1
        sl0, tl0, sr0, tr0 = _expand(prg, s0)
        sl1, tl1, sr1, tr1 = _expand(prg, s1)
        cw = (sl0 ^ sl1) if a else (sr0 ^ sr1)
        tl = tl0 ^ tl1 ^ a ^ 1
        tr = tr0 ^ tr1 ^ a
        cws.append((cw, tl, tr))
        if a:
            k0, k1, kt0, kt1, tk = sr0, sr1, tr0, tr1, tr
        else:
            k0, k1, kt0, kt1, tk = sl0, sl1, tl0, tl1, tl
        s0 = k0 ^ (cw if t0 else 0)
        s1 = k1 ^ (cw if t1 else 0)
        t0, t1 = kt0 ^ (t0 & tk), kt1 ^ (t1 & tk)
    unit = (1 << (alpha & ((1 << e) - 1))) if beta else 0
    return cws, _convert(prg, s0, e) ^ _convert(prg, s1, e) ^ unit


def dpf_expand(prg: Cipher, levels: int, e: int, seed: int, t: int, cws, out_cw: int, m: int):
    nodes = [(seed, t)]
    for i in range(levels):
        cw, tlc, trc = cws[i]
        nxt = []
        for s, tt in nodes:
            sl, tl, sr, tr = _expand(prg, s)
            if tt:
                sl, sr, tl, tr = sl ^ cw, sr ^ cw, tl ^ tlc, tr ^ trc
            nxt.append((sl, tl))
            nxt.append((sr, tr))
        nodes = nxt
    per = 1 << e
    out = np.zeros(m, dtype=np.uint8)
    for j, (s, tt) in enumerate(nodes):
        base = j * per
        if base >= m:
            break
        v = _convert(prg, s, e) ^ (out_cw if tt else 0)
        lim = min(per, m - base)
        out[base:base + lim] = [(v >> b) & 1 for b in range(lim)]
    return out


def xor_scan(sv: np.ndarray, delta: int, xor_mode: bool, data: np.ndarray) -> np.ndarray:
    m = sv.shape[0]
    if data.shape[0] != m:
        raise ValueError("share vector and data differ in length")
    idx = np.arange(m)
    src = (idx ^ delta) if xor_mode else (idx + delta) % m
    ok = src < m
    sel = idx[ok][sv[src[ok]].astype(bool)]
    if sel.size == 0:
        return np.zeros(data.shape[1], dtype=np.uint64)
    return np.bitwise_xor.reduce(data[sel], axis=0)
