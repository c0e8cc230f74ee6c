# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled kernels; see _kernels.h. Mirrors pdtekit._pykernels."""

from libc.stdint cimport uint8_t, uint64_t, int64_t
from libc.stdlib cimport malloc, free

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef extern from "_kernels.h":
    ctypedef struct u128:
        pass
    ctypedef struct lowmc_t:
        int rounds
        int ntab
        u128 *tab
        u128 *rk
        u128 amask
        u128 region
        u128 bmask
    u128 mk128(uint64_t lo, uint64_t hi)
    uint64_t lo64(u128 x)
    uint64_t hi64(u128 x)
    u128 lowmc_enc(const lowmc_t *c, u128 x) nogil
    void dpf_gen_c(const lowmc_t *c, int levels, int e, uint64_t alpha, int beta,
                   u128 s0, u128 s1, u128 *scw, uint8_t *tlcw, uint8_t *trcw,
                   u128 *out_cw) nogil
    int dpf_full_c(const lowmc_t *c, int levels, int e, u128 seed, int t,
                   const u128 *scw, const uint8_t *tlcw, const uint8_t *trcw,
                   u128 out_cw, uint8_t *out, int64_t m) nogil
    void xor_scan_c(const uint8_t *sv, int64_t m, int64_t delta, int xor_mode,
                    const uint64_t *data, int64_t w, uint64_t *out) nogil

IMPLEMENTATION = "cython"

cdef object M64 = (1 << 64) - 1


cdef inline u128 to128(object x):
    return mk128(<uint64_t>(x & M64), <uint64_t>((x >> 64) & M64))


cdef inline object from128(u128 x):
    return (<object>hi64(x) << 64) | <object>lo64(x)


cdef class Cipher:
    """Keyed block evaluation for one PRF instance and one key."""

    cdef lowmc_t c
    cdef readonly int block

    def __cinit__(self, *args, **kwargs):
        self.c.tab = NULL
        self.c.rk = NULL

    def __init__(self, inst, key):
        cdef int r, k, v
        p = inst.params
        if p.block > 128:
            raise ValueError("compiled kernel supports blocks up to 128 bits")
        self.block = p.block
        self.c.rounds = p.rounds
        self.c.ntab = (p.block + 7) // 8
        self.c.tab = <u128 *> malloc(sizeof(u128) * p.rounds * self.c.ntab * 256)
        self.c.rk = <u128 *> malloc(sizeof(u128) * (p.rounds + 1))
        if self.c.tab == NULL or self.c.rk == NULL:
            raise MemoryError()
        for r in range(p.rounds):
            tables = inst._lin[r].tables
            for k in range(self.c.ntab):
                t = tables[k]
                for v in range(256):
                    self.c.tab[(r * self.c.ntab + k) * 256 + v] = to128(t[v] if v < len(t) else 0)
        rks = inst.round_keys(key)
        self.c.rk[0] = to128(rks[0])
        for r in range(p.rounds):
            self.c.rk[r + 1] = to128(rks[r + 1] ^ inst.consts[r])
        self.c.amask = to128(inst._sa)
        self.c.region = to128(inst._sbox_region)
        self.c.bmask = to128((1 << p.block) - 1)

    def __dealloc__(self):
        free(self.c.tab)
        free(self.c.rk)

    def eval(self, x):
        return from128(lowmc_enc(&self.c, to128(x)))

    def eval_many(self, xs):
        return [from128(lowmc_enc(&self.c, to128(x))) for x in xs]

    def eval_u64(self, cnp.ndarray[cnp.uint64_t, ndim=1] xs):
        """Batch evaluation of inputs below 2^64; returns (n, 2) uint64 (lo, hi)."""
        cdef Py_ssize_t i, n = xs.shape[0]
        cdef cnp.ndarray[cnp.uint64_t, ndim=2] out = np.empty((n, 2), dtype=np.uint64)
        cdef u128 v
        for i in range(n):
            v = lowmc_enc(&self.c, mk128(xs[i], 0))
            out[i, 0] = lo64(v)
            out[i, 1] = hi64(v)
        return out


def dpf_gen(Cipher prg, int levels, int e, alpha, int beta, s0, s1):
    cdef u128 *scw = <u128 *> malloc(sizeof(u128) * (levels + 1))
    cdef uint8_t *tl = <uint8_t *> malloc(levels + 1)
    cdef uint8_t *tr = <uint8_t *> malloc(levels + 1)
    cdef u128 out_cw
    cdef int i
    try:
        dpf_gen_c(&prg.c, levels, e, <uint64_t>alpha, beta, to128(s0), to128(s1),
                  scw, tl, tr, &out_cw)
        cws = [(from128(scw[i]), tl[i], tr[i]) for i in range(levels)]
        return cws, from128(out_cw)
    finally:
        free(scw)
        free(tl)
        free(tr)


def dpf_expand(Cipher prg, int levels, int e, seed, int t, cws, out_cw, int64_t m):
    cdef u128 *scw = <u128 *> malloc(sizeof(u128) * (levels + 1))
    cdef uint8_t *tl = <uint8_t *> malloc(levels + 1)
    cdef uint8_t *tr = <uint8_t *> malloc(levels + 1)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] out = np.zeros(m, dtype=np.uint8)
    cdef int i, rc
    try:
        for i in range(levels):
            scw[i] = to128(cws[i][0])
            tl[i] = cws[i][1]
            tr[i] = cws[i][2]
        rc = dpf_full_c(&prg.c, levels, e, to128(seed), t, scw, tl, tr, to128(out_cw),
                        <uint8_t *> out.data, m)
        if rc != 0:
            raise MemoryError()
        return out
    finally:
        free(scw)
        free(tl)
        free(tr)


def xor_scan(cnp.ndarray[cnp.uint8_t, ndim=1] sv, int64_t delta, bint xor_mode,
             cnp.ndarray[cnp.uint64_t, ndim=2] data):
    cdef int64_t m = sv.shape[0], w = data.shape[1]
    if data.shape[0] != m:
        raise ValueError("share vector and data differ in length")
    sv = np.ascontiguousarray(sv)
    data = np.ascontiguousarray(data)
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] out = np.empty(w, dtype=np.uint64)
    xor_scan_c(<uint8_t *> sv.data, m, delta, xor_mode, <uint64_t *> data.data, w,
               <uint64_t *> out.data)
    return out
