import hashlib
import os
import random
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdtekit import _pykernels as py
from pdtekit import kernels
from pdtekit.dpf import dpf_eval_full, dpf_gen, layout
from pdtekit.prf import get_instance

IMPLS = [py] + ([kernels.compiled] if kernels.compiled is not None else [])


def test_compiled_extension_is_available():
    # the editable install builds it; the fallback still covers every path
    assert kernels.compiled is not None
    assert kernels.IMPLEMENTATION == "cython"


@pytest.mark.parametrize("name", ["toy8", "toy16", "lowmc-128"])
def test_cipher_agrees(name):
    inst = get_instance(name)
    rng = random.Random(1)
    key = rng.getrandbits(inst.key_bits)
    xs = [rng.getrandbits(inst.block) for _ in range(50)]
    want = [inst.eval_with_round_keys(inst.round_keys(key), x, inst.block) for x in xs]
    for impl in IMPLS:
        c = impl.Cipher(inst, key)
        assert [c.eval(x) for x in xs] == want
        assert list(c.eval_many(xs)) == want
        if inst.block <= 64:
            arr = c.eval_u64(np.array(xs, dtype=np.uint64))
            assert [int(a) | (int(b) << 64) for a, b in arr] == want


@pytest.mark.parametrize("m", [1, 5, 128, 1000, 1 << 12])
def test_dpf_kernels_agree(m):
    rng = random.Random(m)
    levels, e = layout(m)
    alpha = rng.randrange(m)
    s0, s1 = rng.getrandbits(128) & ~1, rng.getrandbits(128) & ~1
    results = []
    for impl in IMPLS:
        c = impl.Cipher(get_instance("lowmc-128"), _prg_key())
        cws, out_cw = impl.dpf_gen(c, levels, e, alpha, 1, s0, s1)
        cws = [(int(a), int(b), int(d)) for a, b, d in cws]
        v0 = impl.dpf_expand(c, levels, e, s0, 0, cws, int(out_cw), m)
        v1 = impl.dpf_expand(c, levels, e, s1, 1, cws, int(out_cw), m)
        assert np.flatnonzero(v0 ^ v1).tolist() == [alpha]
        results.append((cws, int(out_cw), v0.tolist()))
    assert all(r == results[0] for r in results)
    # and the dispatching module agrees with both
    k0, k1 = dpf_gen(alpha, m, random.Random(0))
    assert np.flatnonzero(dpf_eval_full(k0) ^ dpf_eval_full(k1)).tolist() == [alpha]


def _prg_key():
    return int.from_bytes(hashlib.shake_256(b"pdtekit/dpf-prg-key").digest(16), "little")


def _scan_oracle(sv, delta, xor_mode, data):
    m = len(sv)
    acc = np.zeros(data.shape[1], dtype=np.uint64)
    for i in range(m):
        src = (i ^ delta) if xor_mode else (i + delta) % m
        if src < m and sv[src]:
            acc ^= data[i]
    return acc


@given(st.integers(1, 300), st.integers(1, 3), st.booleans(), st.data())
def test_xor_scan_agrees(m, words, xor_mode, data):
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32)))
    sv = rng.integers(0, 2, m, dtype=np.uint8)
    mat = rng.integers(0, 2**63, (m, words), dtype=np.uint64)
    delta = data.draw(st.integers(0, m - 1))
    want = _scan_oracle(sv, delta, xor_mode, mat)
    for impl in IMPLS:
        assert np.array_equal(impl.xor_scan(sv, delta, xor_mode, mat), want)


def test_pure_fallback_end_to_end():
    code = (
        "import random\n"
        "from pdtekit import kernels\n"
        "from pdtekit.channel import Channel\n"
        "from pdtekit.pdte import PdteConfig, deal, pdte_eval, pdte_setup\n"
        "from pdtekit.tree import preset\n"
        "assert kernels.IMPLEMENTATION == 'python'\n"
        "t = preset('wine', random.Random(1)); x = [9] * t.n\n"
        "ch = Channel(); s = pdte_setup(ch, PdteConfig(wbv_mode='dpf'), t, x)\n"
        "print(pdte_eval(ch, s, deal(ch, s, random.Random(2))) == t.evaluate(x))\n"
    )
    env = dict(os.environ, PDTEKIT_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "True"
