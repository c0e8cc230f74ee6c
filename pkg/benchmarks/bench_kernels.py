"""Compiled vs pure-Python kernels: LowMC batch, DPF full expansion, xor scan.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--csv out.csv]

Both implementations are checked for identical outputs before timing.
"""

from __future__ import annotations

import argparse
import csv
import sys
import timeit

import numpy as np

from pdtekit import kernels
from pdtekit.dpf import KAPPA, layout
from pdtekit.prf import get_instance


def cases(impl, n_blocks: int, dpf_m: int, scan_rows: int):
    inst = get_instance("lowmc-128")
    key = 0x0123456789ABCDEF0011223344556677
    cipher = impl.Cipher(inst, key)
    xs = np.arange(n_blocks, dtype=np.uint64)

    prg = impl.Cipher(inst, 0x5A5A5A5A)
    levels, e = layout(dpf_m)
    s0, s1 = (1 << (KAPPA - 1)) | 2, (1 << (KAPPA - 2)) | 4
    alpha = dpf_m // 3
    cws, out_cw = impl.dpf_gen(prg, levels, e, alpha, 1, s0, s1)

    rng = np.random.default_rng(1)
    data = rng.integers(0, 2**63, size=(scan_rows, 2), dtype=np.uint64)
    sv = rng.integers(0, 2, size=scan_rows, dtype=np.uint8)
    return {
        f"lowmc128 x{n_blocks}": lambda: cipher.eval_u64(xs),
        f"dpf gen m={dpf_m}": lambda: impl.dpf_gen(prg, levels, e, alpha, 1, s0, s1),
        f"dpf expand m={dpf_m}": lambda: impl.dpf_expand(prg, levels, e, s0, 0, cws, out_cw, dpf_m),
        f"xor scan rows={scan_rows}": lambda: impl.xor_scan(sv, 17, False, data),
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--blocks", type=int, default=2000)
    ap.add_argument("--dpf-m", type=int, default=1 << 14)
    ap.add_argument("--scan-rows", type=int, default=1 << 16)
    ap.add_argument("--csv")
    args = ap.parse_args(argv)
    if kernels.compiled is None:
        print("compiled kernels are not built; only the fallback can run", file=sys.stderr)
        return 1
    impls = {"cython": kernels.compiled, "python": kernels.python}
    built = {k: cases(v, args.blocks, args.dpf_m, args.scan_rows) for k, v in impls.items()}
    rows = []
    for name in built["cython"]:
        a, b = built["cython"][name](), built["python"][name]()
        same = (np.array_equal(a, b) if isinstance(a, np.ndarray) else a == b)
        if not same:
            print(f"{name}: implementations disagree", file=sys.stderr)
            return 1
        t = {k: min(timeit.repeat(built[k][name], number=1, repeat=args.repeat)) for k in impls}
        rows.append({"kernel": name, "cython_s": f"{t['cython']:.5f}", "python_s": f"{t['python']:.5f}",
                     "speedup": f"{t['python'] / t['cython']:.1f}"})
    w = csv.DictWriter(open(args.csv, "w") if args.csv else sys.stdout,
                       fieldnames=["kernel", "cython_s", "python_s", "speedup"], lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
