import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdtekit.channel import Channel
from pdtekit.circuit import bits_of, from_bits, plain_eval
from pdtekit.conv import (
    a2b, adder_circuit, add_to_mult, b2a, check_special_bmt, sample_gamma,
)
from pdtekit.dealer import gen_boolean_triples, gen_dabits, gen_special_bmt
from pdtekit.errors import BmtInvalid, NonInvertibleGamma, NonPowerOfTwoModulus
from pdtekit.paillier import keygen
from pdtekit.sharing import ArithShare, WordShare, reconstruct, share_arith, share_boolean


def test_b2a_reduces_into_modulus():
    rng = random.Random(0)
    d = gen_dabits(10, 4, rng)
    ch = Channel()
    out = b2a(ch, share_boolean(13, 4, rng), 10, d)
    assert reconstruct(*out) == 3
    assert ch.transcript.rounds_in("online") == 1


@given(st.integers(1, 80), st.integers(2, 2**90), st.data())
def test_b2a_property(width, modulus, data):
    x = data.draw(st.integers(0, 2**width - 1))
    rng = random.Random(data.draw(st.integers(0, 2**32)))
    ch = Channel()
    out = b2a(ch, share_boolean(x, width, rng), modulus, gen_dabits(modulus, width, rng))
    assert reconstruct(*out) == x % modulus
    # one round, width bits plus a frame from each side
    assert ch.transcript.sent(0) == ch.transcript.sent(1) == (width + 7) // 8 + 4


def test_a2b_example():
    ch = Channel()
    c = adder_circuit(8)
    out = a2b(ch, (ArithShare(200, 256), ArithShare(100, 256)),
              gen_boolean_triples(c.and_count, random.Random(1)))
    assert reconstruct(*out) == 44


@given(st.integers(1, 64), st.data())
def test_adder_circuit_plain(width, data):
    a = data.draw(st.integers(0, 2**width - 1))
    b = data.draw(st.integers(0, 2**width - 1))
    c = adder_circuit(width)
    out = plain_eval(c, bits_of(a, width) + bits_of(b, width))
    assert from_bits(out) == (a + b) % 2**width


@pytest.mark.parametrize("width", [2, 3, 8, 16, 33, 64])
def test_a2b_rounds_are_logarithmic(width):
    rng = random.Random(width)
    x = rng.getrandbits(width)
    m = 1 << width
    c = adder_circuit(width)
    ch = Channel()
    out = a2b(ch, share_arith(x, m, rng), gen_boolean_triples(c.and_count, rng))
    assert reconstruct(*out) == x
    assert ch.transcript.rounds_in("online") == math.ceil(math.log2(width))


def test_a2b_rejects_odd_modulus():
    with pytest.raises(NonPowerOfTwoModulus):
        a2b(Channel(), (ArithShare(1, 10), ArithShare(2, 10)), gen_boolean_triples(10, random.Random()))


@pytest.fixture(scope="module")
def small_key():
    # 16-bit primes
    return keygen(32, random.Random(3))


def test_special_bmt_cross_terms(small_key):
    nsq = small_key.pk.nsq
    rng = random.Random(4)
    for _ in range(20):
        s, r = gen_special_bmt(nsq, rng)
        assert (s.clear * r.clear - s.c - r.c) % nsq == 0
        check_special_bmt(s, r)
    bad = type(s)(s.party, s.modulus, s.clear, (s.c + 1) % nsq)
    with pytest.raises(BmtInvalid):
        check_special_bmt(bad, r)


def test_add_to_mult_gamma_one(small_key):
    n = small_key.n
    nsq = n * n
    rng = random.Random(5)
    x = rng.randrange(nsq)
    ch = Channel()
    s, r = add_to_mult(ch, share_arith(x, nsq, rng), gen_special_bmt(nsq, rng), n, rng, gamma=1)
    # gamma = 1 leaves x itself with the receiver
    assert s.value == 1 and r.value == x
    assert ch.transcript.rounds_in("online") == 2


@given(st.data())
def test_add_to_mult_property(small_key, data):
    n = small_key.n
    nsq = n * n
    x = data.draw(st.integers(0, nsq - 1))
    rng = random.Random(data.draw(st.integers(0, 2**32)))
    s, r = add_to_mult(Channel(), share_arith(x, nsq, rng), gen_special_bmt(nsq, rng), n, rng)
    assert math.gcd(s.value, n) == 1
    assert reconstruct(s, r) == x


def test_gamma_must_be_unit(small_key):
    n = small_key.n
    nsq = n * n
    rng = random.Random(6)
    with pytest.raises(NonInvertibleGamma):
        add_to_mult(Channel(), share_arith(1, nsq, rng), gen_special_bmt(nsq, rng), n, rng,
                    gamma=small_key.p)
    g = sample_gamma(n, rng)
    assert 0 < g < nsq and math.gcd(g, n) == 1


def test_bmt_modulus_checked(small_key):
    rng = random.Random(7)
    n = small_key.n
    with pytest.raises(BmtInvalid):
        add_to_mult(Channel(), share_arith(1, n * n, rng), gen_special_bmt(n, rng), n, rng)


def test_word_share_inputs_unchanged():
    # conversions must not mutate their inputs
    x = (WordShare(5, 4), WordShare(9, 4))
    b2a(Channel(), x, 7, gen_dabits(7, 4, random.Random(8)))
    assert x == (WordShare(5, 4), WordShare(9, 4))
