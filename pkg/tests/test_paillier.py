import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdtekit.errors import KeyMismatch, PlaintextOutOfRange
from pdtekit.paillier import (
    PaillierKeypair, ciphertext_bytes, decrypt, decrypt_crt, encrypt, hom_add, hom_scale,
    keygen,
)


@pytest.fixture(scope="module")
def key512():
    return keygen(512, random.Random(99))


def textbook_decrypt(p, q, c):
    # independent oracle: lambda = lcm(p-1, q-1), mu = L(g^lambda)^-1 with g = N+1
    n = p * q
    lam = math.lcm(p - 1, q - 1)
    L = lambda u: (u - 1) // n  # noqa: E731
    mu = pow(L(pow(n + 1, lam, n * n)), -1, n)
    return L(pow(c, lam, n * n)) * mu % n


def test_toy_key_values():
    k = PaillierKeypair.from_primes(5, 7)
    assert k.pk.nsq == 1225
    assert k.phi == 24
    assert k.phi_inv == 19
    assert 24 * 19 % 35 == 1


def test_toy_homomorphism():
    k = PaillierKeypair.from_primes(5, 7)
    rng = random.Random(1)
    c2 = encrypt(k.pk, 2, rng)
    c3 = encrypt(k.pk, 3, rng)
    assert c2.value * c3.value % 1225 == hom_add(c2, c3).value
    assert decrypt(k, hom_add(c2, c3)) == 5


def test_zero_with_unit_randomness():
    k = PaillierKeypair.from_primes(5, 7)
    assert encrypt(k.pk, 0, random.Random(0), r=1).value == 1


def test_toy_exhaustive():
    k = PaillierKeypair.from_primes(5, 7)
    rng = random.Random(3)
    for x in range(35):
        c = encrypt(k.pk, x, rng)
        assert decrypt(k, c) == decrypt_crt(k, c) == textbook_decrypt(5, 7, c.value) == x


@given(st.data())
def test_properties(key512, data):
    n = key512.n
    x = data.draw(st.integers(0, n - 1))
    y = data.draw(st.integers(0, n - 1))
    a = data.draw(st.integers(0, n - 1))
    rng = random.Random(data.draw(st.integers(0, 2**32)))
    cx, cy = encrypt(key512.pk, x, rng), encrypt(key512.pk, y, rng)
    assert decrypt(key512, cx) == x
    assert decrypt_crt(key512, cx) == x
    assert textbook_decrypt(key512.p, key512.q, cx.value) == x
    assert decrypt(key512, hom_add(cx, cy)) == (x + y) % n
    assert decrypt_crt(key512, hom_scale(cx, a)) == x * a % n


def test_randomized(key512):
    rng = random.Random(5)
    assert encrypt(key512.pk, 7, rng).value != encrypt(key512.pk, 7, rng).value


def test_keygen_shape(key512):
    assert key512.n.bit_length() == 512
    assert math.gcd(key512.n, key512.phi) == 1
    assert ciphertext_bytes(key512.pk) == 128


def test_errors(key512):
    other = keygen(256, random.Random(1))
    with pytest.raises(PlaintextOutOfRange):
        encrypt(key512.pk, key512.n, random.Random(0))
    with pytest.raises(PlaintextOutOfRange):
        encrypt(key512.pk, -1, random.Random(0))
    c = encrypt(other.pk, 1, random.Random(0))
    with pytest.raises(KeyMismatch):
        decrypt(key512, c)
    with pytest.raises(KeyMismatch):
        hom_add(c, encrypt(key512.pk, 1, random.Random(0)))
    with pytest.raises(ValueError):
        PaillierKeypair.from_primes(5, 5)
    with pytest.raises(ValueError):
        PaillierKeypair.from_primes(5, 9)
