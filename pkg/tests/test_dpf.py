import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdtekit.dpf import (
    KAPPA, DpfKey, dpf_eval, dpf_eval_full, dpf_gen, key_bytes, layout,
)
from pdtekit.errors import IndexOutOfRange


def point(alpha, m):
    v = np.zeros(m, dtype=np.uint8)
    v[alpha] = 1
    return v


def test_two_element_domain():
    k0, k1 = dpf_gen(1, 2, random.Random(0))
    out = dpf_eval_full(k0) ^ dpf_eval_full(k1)
    assert tuple(out) == (0, 1)


def test_domain_256_every_alpha():
    rng = random.Random(1)
    for alpha in range(256):
        k0, k1 = dpf_gen(alpha, 256, rng)
        assert np.array_equal(dpf_eval_full(k0) ^ dpf_eval_full(k1), point(alpha, 256))


@given(st.integers(1, 5000), st.data())
def test_full_domain_property(m, data):
    alpha = data.draw(st.integers(0, m - 1))
    k0, k1 = dpf_gen(alpha, m, random.Random(data.draw(st.integers(0, 2**32))))
    assert np.array_equal(dpf_eval_full(k0) ^ dpf_eval_full(k1), point(alpha, m))


def test_pointwise_matches_full():
    m = 700
    k0, k1 = dpf_gen(123, m, random.Random(2))
    f0 = dpf_eval_full(k0)
    xs = random.Random(3).sample(range(m), 60) + [0, 122, 123, 124, m - 1]
    for x in xs:
        assert dpf_eval(k0, x) == f0[x]
        assert dpf_eval(k0, x) ^ dpf_eval(k1, x) == int(x == 123)


def test_beta_zero_gives_zero_vector():
    k0, k1 = dpf_gen(5, 64, random.Random(4), beta=0)
    assert not (dpf_eval_full(k0) ^ dpf_eval_full(k1)).any()


@pytest.mark.parametrize("m", [1, 2, 100, 128, 129, 1 << 16, 1 << 20])
def test_key_size(m):
    levels, e = layout(m)
    k0, _ = dpf_gen(m - 1, m, random.Random(5)) if m <= 1 << 16 else (None, None)
    bits = KAPPA + levels * (KAPPA + 2) + (1 << e)
    assert key_bytes(m) * 8 >= bits
    assert key_bytes(m) <= bits // 8 + 3
    if k0 is not None:
        assert len(k0.to_bytes()) == key_bytes(m)
        assert k0.bits == bits


def test_key_under_8kib_at_2_16():
    assert key_bytes(1 << 16) < 8192


def test_key_serialization_roundtrip():
    m = 3000
    k0, k1 = dpf_gen(2999, m, random.Random(6))
    for k in (k0, k1):
        back = DpfKey.from_bytes(k.to_bytes(), k.party, m)
        assert back == k
    with pytest.raises(ValueError):
        DpfKey.from_bytes(k0.to_bytes()[:-1], 0, m)
    with pytest.raises(ValueError):
        DpfKey.from_bytes(k0.to_bytes() + b"\0", 0, m)


def test_range_errors():
    with pytest.raises(IndexOutOfRange):
        dpf_gen(4, 4, random.Random())
    with pytest.raises(IndexOutOfRange):
        dpf_gen(0, 0, random.Random())
    k0, _ = dpf_gen(0, 4, random.Random())
    with pytest.raises(IndexOutOfRange):
        dpf_eval(k0, 4)


def test_single_key_output_is_balanced():
    # a lone key's expansion should look like random bits
    k0, _ = dpf_gen(17, 1 << 14, random.Random(7))
    ones = int(dpf_eval_full(k0).sum())
    assert abs(ones - (1 << 13)) < 4 * 64  # 4 standard deviations
