/* Hot loops behind pdtekit._ckernels: LowMC-style block evaluation with
 * 8-bit lookup tables, the fixed-key DPF tree (gen and full expansion) and
 * the weight-1 vector XOR scan. 128-bit state lives in unsigned __int128. */
#ifndef PDTEKIT_KERNELS_H
#define PDTEKIT_KERNELS_H

#include <stdint.h>
#include <stdlib.h>
#include <string.h>

typedef unsigned __int128 u128;

typedef struct {
    int rounds;
    int ntab;
    u128 *tab;   /* rounds * ntab * 256 entries */
    u128 *rk;    /* rounds + 1 whitening keys, round constants folded in */
    u128 amask;  /* bit 3k set for every S-box k */
    u128 region; /* low 3s bits */
    u128 bmask;  /* block mask */
} lowmc_t;

static inline u128 mk128(uint64_t lo, uint64_t hi) { return ((u128)hi << 64) | lo; }
static inline uint64_t lo64(u128 x) { return (uint64_t)x; }
static inline uint64_t hi64(u128 x) { return (uint64_t)(x >> 64); }

static inline u128 lowmc_enc(const lowmc_t *c, u128 x)
{
    u128 s = x ^ c->rk[0];
    const u128 am = c->amask;
    for (int r = 0; r < c->rounds; r++) {
        u128 a = s & am, b = (s >> 1) & am, cc = (s >> 2) & am;
        u128 na = a ^ (b & cc);
        u128 nb = a ^ b ^ (a & cc);
        u128 nc = a ^ b ^ cc ^ (a & b);
        s = (s & ~c->region) | na | (nb << 1) | (nc << 2);
        const u128 *t = c->tab + (size_t)r * c->ntab * 256;
        u128 o = 0;
        for (int k = 0; k < c->ntab; k++) {
            o ^= t[(size_t)k * 256 + ((unsigned)(s >> (8 * k)) & 0xFF)];
        }
        s = o ^ c->rk[r + 1];
    }
    return s & c->bmask;
}

/* Fixed-key PRG block i: F(s ^ i) ^ s ^ i. */
static inline u128 prg_block(const lowmc_t *c, u128 s, unsigned i)
{
    u128 x = s ^ (u128)i;
    return lowmc_enc(c, x) ^ x;
}

static inline void prg_expand(const lowmc_t *c, u128 s, u128 *sl, int *tl, u128 *sr, int *tr)
{
    u128 l = prg_block(c, s, 0), r = prg_block(c, s, 1);
    *tl = (int)(l & 1);
    *tr = (int)(r & 1);
    *sl = l & ~(u128)1;
    *sr = r & ~(u128)1;
}

static inline u128 convert_leaf(const lowmc_t *c, u128 s, int e)
{
    u128 v = prg_block(c, s, 2);
    if (e >= 7) return v;
    return v & ((((u128)1) << (1u << e)) - 1);
}

static void dpf_gen_c(const lowmc_t *c, int levels, int e, uint64_t alpha, int beta,
                      u128 s0, u128 s1, u128 *scw, uint8_t *tlcw, uint8_t *trcw,
                      u128 *out_cw)
{
    int t0 = 0, t1 = 1;
    for (int i = 0; i < levels; i++) {
        int a = (int)((alpha >> (e + levels - 1 - i)) & 1);
        u128 sl0, sr0, sl1, sr1;
        int tl0, tr0, tl1, tr1;
        prg_expand(c, s0, &sl0, &tl0, &sr0, &tr0);
        prg_expand(c, s1, &sl1, &tl1, &sr1, &tr1);
        u128 cw = a ? (sl0 ^ sl1) : (sr0 ^ sr1);
        int tl = tl0 ^ tl1 ^ a ^ 1;
        int tr = tr0 ^ tr1 ^ a;
        scw[i] = cw;
        tlcw[i] = (uint8_t)tl;
        trcw[i] = (uint8_t)tr;
        u128 k0 = a ? sr0 : sl0, k1 = a ? sr1 : sl1;
        int kt0 = a ? tr0 : tl0, kt1 = a ? tr1 : tl1, tk = a ? tr : tl;
        s0 = k0 ^ (t0 ? cw : 0);
        s1 = k1 ^ (t1 ? cw : 0);
        t0 = kt0 ^ (t0 & tk);
        t1 = kt1 ^ (t1 & tk);
    }
    u128 unit = beta ? ((u128)1) << (alpha & ((1u << e) - 1)) : 0;
    *out_cw = convert_leaf(c, s0, e) ^ convert_leaf(c, s1, e) ^ unit;
}

/* Expand one key over the whole domain; out receives m bytes in {0,1}. */
static int dpf_full_c(const lowmc_t *c, int levels, int e, u128 seed, int t,
                      const u128 *scw, const uint8_t *tlcw, const uint8_t *trcw,
                      u128 out_cw, uint8_t *out, int64_t m)
{
    size_t width = (size_t)1 << levels;
    u128 *s = (u128 *)malloc(width * sizeof(u128));
    uint8_t *ts = (uint8_t *)malloc(width);
    if (!s || !ts) { free(s); free(ts); return -1; }
    s[0] = seed;
    ts[0] = (uint8_t)t;
    size_t n = 1;
    for (int i = 0; i < levels; i++) {
        /* expand in place from the back so parents are read before overwrite */
        for (size_t j = n; j-- > 0;) {
            u128 sl, sr;
            int tl, tr;
            prg_expand(c, s[j], &sl, &tl, &sr, &tr);
            if (ts[j]) {
                sl ^= scw[i];
                sr ^= scw[i];
                tl ^= tlcw[i];
                tr ^= trcw[i];
            }
            s[2 * j] = sl;
            s[2 * j + 1] = sr;
            ts[2 * j] = (uint8_t)tl;
            ts[2 * j + 1] = (uint8_t)tr;
        }
        n *= 2;
    }
    int64_t per = (int64_t)1 << e;
    for (size_t j = 0; j < n; j++) {
        int64_t base = (int64_t)j * per;
        if (base >= m) break;
        u128 v = convert_leaf(c, s[j], e);
        if (ts[j]) v ^= out_cw;
        int64_t lim = m - base < per ? m - base : per;
        for (int64_t b = 0; b < lim; b++) out[base + b] = (uint8_t)((v >> b) & 1);
    }
    free(s);
    free(ts);
    return 0;
}

/* XOR of data rows selected by the rotated (or XOR-permuted) share vector. */
static void xor_scan_c(const uint8_t *sv, int64_t m, int64_t delta, int xor_mode,
                       const uint64_t *data, int64_t w, uint64_t *out)
{
    memset(out, 0, (size_t)w * sizeof(uint64_t));
    for (int64_t i = 0; i < m; i++) {
        int64_t src = xor_mode ? (i ^ delta) : (i + delta) % m;
        if (src >= m || !sv[src]) continue;
        const uint64_t *row = data + i * w;
        for (int64_t k = 0; k < w; k++) out[k] ^= row[k];
    }
}

#endif
