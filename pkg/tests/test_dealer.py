import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdtekit import dpf
from pdtekit.channel import Channel, run
from pdtekit.dealer import (
    HEADER, Budget, fingerprint, gen_bmt_ahe, gen_bmt_ot, gen_boolean_triples, gen_dabits,
    gen_modular_triples, gen_precomputed_ot, gen_wbv, ot_transfer, provision, store_from_bytes,
    store_to_bytes, words_to_int,
)
from pdtekit.errors import CorrelationExhausted, CorrelationFileError, MaskOverflow, OtExhausted
from pdtekit.paillier import keygen


@given(st.integers(0, 500), st.integers(0, 2**32))
def test_boolean_triples(count, seed):
    t0, t1 = gen_boolean_triples(count, random.Random(seed))
    a0, b0, c0 = t0.take(count)
    a1, b1, c1 = t1.take(count)
    assert (a0 ^ a1) & (b0 ^ b1) == c0 ^ c1


def test_dabits_agree():
    d0, d1 = gen_dabits(97, 64, random.Random(1))
    x0, a0 = d0.take(64)
    x1, a1 = d1.take(64)
    for i in range(64):
        assert ((x0 ^ x1) >> i) & 1 == (a0[i] + a1[i]) % 97
    with pytest.raises(CorrelationExhausted):
        d0.take(1)


@pytest.mark.parametrize("mode", ["direct", "dpf"])
@pytest.mark.parametrize("m", [1, 2, 7, 64, 300])
def test_wbv_has_weight_one(mode, m):
    rng = random.Random(m)
    for _ in range(5):
        w0, w1 = gen_wbv(m, rng, mode)
        v = w0.vector() ^ w1.vector()
        assert v.shape == (m,)
        assert int(v.sum()) == 1
        rdx = int(np.argmax(v))
        assert w0.rdx_xor ^ w1.rdx_xor == rdx
        assert (w0.rdx_arith + w1.rdx_arith) % m == rdx


def test_wbv_dpf_key_is_small():
    w0, _ = gen_wbv(1 << 16, random.Random(2), "dpf")
    assert len(w0.key.to_bytes()) < 8 * 1024


def test_modular_triples():
    t0, t1 = gen_modular_triples(10, 1000003, random.Random(3))
    for x, y in zip(t0, t1):
        m = x.modulus
        assert (x.a + y.a) * (x.b + y.b) % m == (x.c + y.c) % m


@pytest.mark.parametrize("k", [2, 8])
def test_ot_transfer(k):
    rng = random.Random(k)
    for sender in (0, 1):
        for choice in range(k):
            msgs = [rng.getrandbits(100) for _ in range(k)]
            s, r = gen_precomputed_ot(k, 100, rng)
            ch = Channel()
            got = run(ch, ot_transfer(ch, sender, msgs, choice, s, r))
            assert got == msgs[choice]
            assert ch.transcript.rounds_in("online") == 2


def test_ot_correlation_shape():
    s, r = gen_precomputed_ot(4, 70, random.Random(4))
    assert s.pads.shape == (4, 2)
    assert words_to_int(s.pads[r.choice]) == words_to_int(r.pad)
    assert words_to_int(s.pads[0]) < 2**70


@pytest.fixture(scope="module")
def key():
    return keygen(256, random.Random(5))


def test_bmt_ahe(key):
    n = 2**32
    rng0, rng1 = random.Random(6), random.Random(7)
    for _ in range(5):
        a, b = rng0.randrange(n), rng1.randrange(n)
        ch = Channel()
        c0, c1 = run(ch, gen_bmt_ahe(ch, a, b, n, key, rng0, rng1))
        assert (c0 + c1) % n == a * b % n
        assert ch.transcript.rounds_in("online") == 2


def test_bmt_ahe_mask_overflow(key):
    # (n-1)^2 alone exceeds a 256-bit modulus
    ch = Channel()
    with pytest.raises(MaskOverflow):
        run(ch, gen_bmt_ahe(ch, 1, 1, 2**130, key, random.Random(), random.Random()))


def test_bmt_ot():
    n = 2**20 + 7
    rng = random.Random(8)
    for _ in range(5):
        a, b = rng.randrange(n), rng.randrange(n)
        ots = [gen_precomputed_ot(2, 21, rng) for _ in range(21)]
        ch = Channel()
        c0, c1 = run(ch, gen_bmt_ot(ch, a, b, n, ots, rng))
        assert (c0 + c1) % n == a * b % n
        assert ch.transcript.rounds_in("online") == 2
    with pytest.raises(OtExhausted):
        run(Channel(), gen_bmt_ot(Channel(), 1, 1, n, ots[:3], rng))


def _budget():
    b = Budget(triples=100)
    b.add_dabits(257, 30)
    b.add_dabits(2**64, 5)
    b.add_wbv("tree", 40)
    b.add_wbv("tree", 3)
    b.add_wbv("feature", 9)
    b.add_ot("feature", 9, 16)
    b.add_special(10007**2, 3)
    return b


@pytest.mark.parametrize("mode", ["direct", "dpf"])
def test_store_roundtrip(mode):
    s0, s1 = provision(_budget(), random.Random(9), mode, ot_sender={"feature": 1})
    assert s0.remaining().merge(Budget()).triples == 100
    s0.triples.take(10)
    for s in (s0, s1):
        back = store_from_bytes(store_to_bytes(s, fingerprint("run-1")))
        assert back.party == s.party
        assert back.fingerprint == fingerprint("run-1")
        assert back.triples.remaining == s.triples.remaining
        assert back.triples.take(back.triples.remaining) == s.triples.take(s.triples.remaining)
        assert back.remaining().dabits == s.remaining().dabits
        assert back.remaining().wbv == s.remaining().wbv
        assert back.remaining().ot == s.remaining().ot
        for lab in s.wbv:
            for a, b in zip(back.wbv[lab], s.wbv[lab]):
                assert np.array_equal(a.vector(), b.vector())
                assert (a.rdx_xor, a.rdx_arith) == (b.rdx_xor, b.rdx_arith)
    # party 1 sends the feature OT: it holds the k pads
    assert s1.ot["feature"][0].pads.shape[0] == 9


def test_store_exhaustion():
    s0, _ = provision(_budget(), random.Random(10))
    assert not s0.exhausted()
    s0.triples.take(100)
    s0.take_dabits(257, 30)
    s0.take_dabits(2**64, 5)
    s0.take_wbv("tree"), s0.take_wbv("tree"), s0.take_wbv("feature")
    s0.take_ot("feature")
    for _ in range(3):
        s0.take_special(10007**2)
    assert s0.exhausted()
    with pytest.raises(CorrelationExhausted):
        s0.take_wbv("tree")
    with pytest.raises(OtExhausted):
        s0.take_ot("feature")
    with pytest.raises(CorrelationExhausted):
        s0.take_special(10007**2)
    with pytest.raises(CorrelationExhausted):
        s0.take_dabits(99, 1)


def test_budget_scaled():
    b = _budget().scaled(3)
    assert b.triples == 300 and b.dabits[257] == 90 and len(b.wbv["tree"]) == 6


def test_corr_file_errors():
    s0, _ = provision(_budget(), random.Random(11))
    data = store_to_bytes(s0)
    with pytest.raises(CorrelationFileError):
        store_from_bytes(data[:10])
    with pytest.raises(CorrelationFileError):
        store_from_bytes(b"XXXX" + data[4:])
    with pytest.raises(CorrelationFileError):
        store_from_bytes(data[:-1])
    flipped = bytearray(data)
    flipped[HEADER.size + 20] ^= 1
    with pytest.raises(CorrelationFileError):
        store_from_bytes(bytes(flipped))
    bad_ver = bytearray(data)
    bad_ver[4] = 9
    with pytest.raises(CorrelationFileError):
        store_from_bytes(bytes(bad_ver))


def test_fingerprint_distinguishes_runs():
    assert fingerprint(1) != fingerprint(2)
    assert fingerprint("a") == fingerprint("a")


def test_dpf_layout_used_by_wbv():
    w0, w1 = gen_wbv(1000, random.Random(12), "dpf")
    assert w0.key.m == 1000 and dpf.layout(1000) == (3, 7)
