import random
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdtekit.errors import ModulusMismatch, WidthMismatch
from pdtekit.sharing import (
    ArithShare, BitShare, MultShare, WordShare, add_const, add_local, and_const, mul_const,
    reconstruct, share_arith, share_boolean, xor_const, xor_local,
)


def test_boolean_reconstruct_example():
    assert reconstruct(WordShare(0xAB, 8), WordShare(0x55, 8)) == 0xFE
    assert reconstruct(WordShare(0x3C, 8), WordShare(0xC3, 8)) == 0xFF


def test_arith_reconstruct_wraps():
    assert reconstruct(ArithShare(20, 35), ArithShare(20, 35)) == 5
    assert reconstruct(ArithShare(200, 256), ArithShare(100, 256)) == 44


def test_mult_reconstruct():
    assert reconstruct(MultShare(3, 1225), MultShare(5, 1225)) == 15


def test_exhaustive_four_bit_xor():
    rng = random.Random(0)
    for x in range(16):
        for y in range(16):
            a = share_boolean(x, 4, rng)
            b = share_boolean(y, 4, rng)
            z = xor_local(a[0], b[0]), xor_local(a[1], b[1])
            assert reconstruct(*z) == x ^ y


@given(st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1), st.integers(0, 2**32))
def test_boolean_local_ops(x, c, seed):
    rng = random.Random(seed)
    s0, s1 = share_boolean(x, 64, rng)
    assert reconstruct(s0, s1) == x
    assert reconstruct(xor_const(s0, c, 0), xor_const(s1, c, 1)) == x ^ c
    assert reconstruct(and_const(s0, c), and_const(s1, c)) == x & c


@given(st.integers(2, 2**70), st.data())
def test_arith_local_ops(n, data):
    x = data.draw(st.integers(0, n - 1))
    y = data.draw(st.integers(0, n - 1))
    c = data.draw(st.integers(-(2**80), 2**80))
    rng = random.Random(data.draw(st.integers(0, 2**32)))
    a = share_arith(x, n, rng)
    b = share_arith(y, n, rng)
    assert reconstruct(*a) == x
    assert reconstruct(add_local(a[0], b[0]), add_local(a[1], b[1])) == (x + y) % n
    assert reconstruct(add_const(a[0], c, 0), add_const(a[1], c, 1)) == (x + c) % n
    assert reconstruct(mul_const(a[0], c), mul_const(a[1], c)) == x * c % n


def test_single_share_is_uniform():
    # each 4-bit value should appear about 4000/16 = 250 times as P0's share
    rng = random.Random(7)
    counts = Counter(share_boolean(0b1010, 4, rng)[0].value for _ in range(4000))
    chi2 = sum((counts[v] - 250) ** 2 / 250 for v in range(16))
    # 15 degrees of freedom, p = 0.001 threshold
    assert chi2 < 37.7


def test_forced_share():
    s0, s1 = share_boolean(9, 4, random.Random(0), share0=3)
    assert (s0.value, s1.value) == (3, 10)


def test_validation():
    with pytest.raises(ValueError):
        BitShare(2)
    with pytest.raises(WidthMismatch):
        WordShare(16, 4)
    with pytest.raises(WidthMismatch):
        xor_local(WordShare(1, 4), WordShare(1, 5))
    with pytest.raises(WidthMismatch):
        share_boolean(16, 4, random.Random(0))
    with pytest.raises(ModulusMismatch):
        add_local(ArithShare(1, 5), ArithShare(1, 7))
    with pytest.raises(ModulusMismatch):
        ArithShare(5, 5)
    with pytest.raises(WidthMismatch):
        reconstruct(WordShare(1, 4), ArithShare(1, 5))


def test_word_bits_roundtrip():
    w = WordShare(0b1011, 4)
    assert [b.value for b in w.bits] == [1, 1, 0, 1]
    assert WordShare.from_bits(w.bits) == w
