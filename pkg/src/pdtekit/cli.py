"""pdtekit command line: generate trees, deal correlations, run evaluations.

Both parties run in this process over the in-process channel. Exit codes:
0 success, 2 configuration or input error, 3 protocol error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import random
import sys
import time
from pathlib import Path
from typing import Sequence

from .channel import NETWORKS, Channel, NetworkModel, modeled_time
from .dealer import fingerprint, store_from_bytes, store_to_bytes
from .errors import ConfigError, KeyMismatch, ProtocolError, SpecInvalid
from .pdte import OPTIMIZATIONS, PdteConfig, deal, pdte_eval, pdte_setup
from .sos import BACKENDS
from .tree import (PRESETS, DecisionTree, complete, encode, encode_clustered, encode_layered,
                   load_features, pad_complete, plaintext_eval, preset, scalability, sparse)

BENCH_COLUMNS = ["preset", "backend", "optimization", "ell", "n", "m", "d", "trial",
                 "setup_bytes", "online_bytes", "offline_bytes", "rounds",
                 "tree_selects", "tree_scanned"]


# -- helpers ----------------------------------------------------------------


def _nets(specs: Sequence[str] | None) -> dict[str, NetworkModel]:
    if not specs:
        return dict(NETWORKS)
    out = {}
    for s in specs:
        out[s] = NETWORKS[s.upper()] if s.upper() in NETWORKS else NetworkModel.parse(s)
    return out


def _config(args) -> PdteConfig:
    return PdteConfig(ell=args.ell, backend=args.backend, feature_backend=args.feature_backend,
                      opt=args.opt, d_prime=args.dprime, prf=args.prf, key_bits=args.key_bits,
                      delta_mode=args.delta_mode, wbv_mode=args.wbv)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise SpecInvalid(f"cannot read {path}: {exc.strerror}") from None


def _load_tree(path: str) -> DecisionTree:
    return DecisionTree.loads(_read(path))


def _prepare(tree: DecisionTree, cfg: PdteConfig) -> DecisionTree:
    return pad_complete(tree) if cfg.opt == "layered" and not tree.is_complete() else tree


def _run_tag(tree: DecisionTree, cfg: PdteConfig, seed: int) -> int:
    digest = hashlib.sha256(tree.dumps().encode()).hexdigest()[:16]
    return fingerprint(f"{seed}|{cfg}|{digest}")


def synth_tree(kind: str, args, rng: random.Random) -> tuple[str, DecisionTree]:
    if kind in PRESETS or kind.lower() in PRESETS:
        return kind.lower(), preset(kind, rng)
    if kind == "complete":
        return f"complete-d{args.depth}", complete(args.depth, args.n, rng)
    if kind == "sparse":
        if args.nodes is None:
            raise SpecInvalid("sparse trees need --nodes")
        return f"sparse-d{args.depth}-m{args.nodes}", sparse(args.depth, args.nodes, args.n, rng)
    if kind == "scalability":
        return f"scal-d{args.depth}", scalability(args.depth, args.n, rng)
    raise SpecInvalid(f"unknown tree source {kind!r}")


# -- commands ---------------------------------------------------------------


def cmd_gen_tree(args) -> int:
    rng = random.Random(args.seed)
    _, tree = synth_tree(args.kind, args, rng)
    text = tree.dumps() + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_gen_features(args) -> int:
    tree = _load_tree(args.tree)
    rng = random.Random(args.seed)
    hi = 1 << min(args.ell, 16)
    xs = [rng.randrange(hi) for _ in range(tree.n)]
    text = json.dumps({"x": xs}) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_encode(args) -> int:
    tree = _load_tree(args.tree)
    rng = random.Random(args.seed)
    if args.opt == "layered":
        at = encode_layered(pad_complete(tree), args.ell, rng)
        body = {"layout": "layered", "layers": [at.packed_layer(i) for i in range(len(at.layers))]}
    elif args.opt.startswith("cluster"):
        at = encode_clustered(tree, args.ell, int(args.opt[7:]), rng)
        body = {"layout": "clustered", "q": at.q, "clusters": at.packed_clusters()}
    else:
        at = encode(tree, args.ell, rng)
        body = {"layout": "flat", "records": at.packed()}
    body.update({"n": at.n, "ell": at.ell, "d": at.d, "m": at.m})
    text = json.dumps(body) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_deal(args) -> int:
    cfg = _config(args)
    tree = _prepare(_load_tree(args.tree), cfg)
    ch = Channel()
    sess = pdte_setup(ch, cfg, tree, [0] * tree.n, args.seed)
    stores = deal(ch, sess, random.Random(f"{args.seed}/dealer"), args.evals)
    out = Path(args.deal_dir)
    out.mkdir(parents=True, exist_ok=True)
    tag = _run_tag(tree, cfg, args.seed)
    for p in (0, 1):
        (out / f"p{p}.corr").write_bytes(store_to_bytes(stores[p], tag))
    print(f"dealt {args.evals} evaluation(s): p0 {ch.transcript.dealt.get(0, 0)} bytes, "
          f"p1 {ch.transcript.dealt.get(1, 0)} bytes -> {out}")
    return 0


def cmd_eval(args) -> int:
    cfg = _config(args)
    tree = _prepare(_load_tree(args.tree), cfg)
    x = load_features(_read(args.features), tree.n)
    if args.plaintext:
        at = encode(tree, cfg.ell, random.Random(args.seed))
        print(plaintext_eval(at, x, tree.d if cfg.d_prime is None else cfg.d_prime))
        return 0
    ch = Channel()
    t0 = time.perf_counter()
    sess = pdte_setup(ch, cfg, tree, x, args.seed)
    if args.deal_dir:
        tag = _run_tag(tree, cfg, args.seed)
        stores = []
        for p in (0, 1):
            st = store_from_bytes((Path(args.deal_dir) / f"p{p}.corr").read_bytes())
            if st.fingerprint != tag or st.party != p:
                raise KeyMismatch(f"p{p}.corr was dealt for a different tree, config or seed")
            ch.transcript.add_dealt(p, len(store_to_bytes(st)))
            stores.append(st)
    else:
        stores = deal(ch, sess, random.Random(f"{args.seed}/dealer"))
    label = pdte_eval(ch, sess, stores)
    wall = time.perf_counter() - t0
    print(label)
    t = ch.transcript
    if args.csv:
        Path(args.csv).write_text(t.to_csv())
    for name, nm in _nets(args.net).items():
        print(f"# {name}: online {modeled_time(t, nm):.2f} ms, setup {modeled_time(t, nm, 'setup'):.2f} ms",
              file=sys.stderr)
    print(f"# wall {wall:.3f} s (not a benchmark metric)", file=sys.stderr)
    return 0


def bench_rows(sources: Sequence[str], backends: Sequence[str], opts: Sequence[str], args
               ) -> list[dict]:
    nets = _nets(args.net)
    rows = []
    for src in sources:
        for backend in backends:
            for opt in opts:
                for trial in range(args.trials):
                    # fixed tree, fresh features per trial: byte counts must not move
                    name, tree = synth_tree(src, args, random.Random(args.seed))
                    rng = random.Random(f"{args.seed}/x{trial}")
                    cfg = PdteConfig(ell=args.ell, backend=backend, feature_backend=args.feature_backend,
                                     opt=opt, d_prime=args.dprime, prf=args.prf,
                                     key_bits=args.key_bits, delta_mode=args.delta_mode,
                                     wbv_mode=args.wbv)
                    tree = _prepare(tree, cfg)
                    x = [rng.randrange(1 << min(args.ell, 16)) for _ in range(tree.n)]
                    ch = Channel()
                    sess = pdte_setup(ch, cfg, tree, x, args.seed)
                    stores = deal(ch, sess, random.Random(f"{args.seed}/dealer"))
                    mark = ch.transcript.snapshot()
                    label = pdte_eval(ch, sess, stores)
                    if label != tree.evaluate(x):
                        raise ProtocolError(f"{name}/{backend}/{opt}: label mismatch")
                    on = ch.transcript.since(mark)
                    t = ch.transcript
                    row = {
                        "preset": name, "backend": backend, "optimization": opt, "ell": args.ell,
                        "n": tree.n, "m": tree.m, "d": tree.d, "trial": trial,
                        "setup_bytes": t.sent(phase="setup"), "online_bytes": on.sent(phase="online"),
                        "offline_bytes": sum(t.dealt.values()), "rounds": on.rounds_in("online"),
                        "tree_selects": sess.tree_selects, "tree_scanned": sess.tree_scanned,
                    }
                    for nname, nm in nets.items():
                        row[f"{nname}_ms"] = round(modeled_time(on, nm), 3)
                    rows.append(row)
    return rows


def cmd_bench(args) -> int:
    sources = args.source or ["wine"]
    backends = args.backends.split(",") if args.backends else ["ot", "prf", "he"]
    opts = args.opts.split(",") if args.opts else ["none"]
    for b in backends:
        if b not in BACKENDS:
            raise SpecInvalid(f"unknown backend {b!r}")
    for o in opts:
        if o not in OPTIMIZATIONS:
            raise SpecInvalid(f"unknown optimization {o!r}")
    if args.trials < 1:
        raise SpecInvalid("trials must be at least 1")
    rows = bench_rows(sources, backends, opts, args)
    cols = BENCH_COLUMNS + [f"{n}_ms" for n in _nets(args.net)]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if args.output:
        Path(args.output).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


# -- parser -----------------------------------------------------------------


def _proto_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=BACKENDS, default="prf", help="tree SOS backend")
    p.add_argument("--feature-backend", choices=BACKENDS, default="ot")
    p.add_argument("--opt", choices=OPTIMIZATIONS, default="none")
    p.add_argument("--ell", type=int, default=16, help="bit width of node fields and features")
    p.add_argument("--dprime", type=int, default=None, help="public iteration count (>= depth)")
    p.add_argument("--prf", default="toy16", help="PRF instance: lowmc-128, toy16, toy8")
    p.add_argument("--key-bits", type=int, default=512, help="Paillier modulus size")
    p.add_argument("--delta-mode", choices=("arith", "xor"), default="arith")
    p.add_argument("--wbv", choices=("direct", "dpf"), default="direct")
    p.add_argument("--net", action="append", help="LAN, MAN, WAN or rtt_ms:bandwidth (repeatable)")
    p.add_argument("--seed", type=int, default=0)


def _shape_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--nodes", type=int, default=None)
    p.add_argument("-n", "--n", type=int, default=8, help="feature dimension for synthetic shapes")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pdtekit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen-tree", help="write a synthetic tree as JSON")
    g.add_argument("kind", help=f"preset ({', '.join(PRESETS)}), complete, sparse or scalability")
    _shape_flags(g)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output")
    g.set_defaults(fn=cmd_gen_tree)

    f = sub.add_parser("gen-features", help="write a random feature vector for a tree")
    f.add_argument("tree")
    f.add_argument("--ell", type=int, default=16)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("-o", "--output")
    f.set_defaults(fn=cmd_gen_features)

    e = sub.add_parser("encode", help="print the packed array encoding of a tree")
    e.add_argument("tree")
    e.add_argument("--ell", type=int, default=16)
    e.add_argument("--opt", choices=OPTIMIZATIONS, default="none")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("-o", "--output")
    e.set_defaults(fn=cmd_encode)

    d = sub.add_parser("deal", help="precompute correlation files for a run")
    d.add_argument("tree")
    _proto_flags(d)
    d.add_argument("--deal-dir", required=True)
    d.add_argument("--evals", type=int, default=1)
    d.set_defaults(fn=cmd_deal)

    v = sub.add_parser("eval", help="run one private evaluation and print the label")
    v.add_argument("tree")
    v.add_argument("features")
    _proto_flags(v)
    v.add_argument("--deal-dir", help="load correlations dealt by `pdtekit deal`")
    v.add_argument("--plaintext", action="store_true", help="oracle mode: evaluate in the clear")
    v.add_argument("--csv", help="write the transcript (party,phase,bytes,rounds) here")
    v.set_defaults(fn=cmd_eval)

    b = sub.add_parser("bench", help="CSV of bytes, rounds and modeled latency")
    b.add_argument("--source", action="append",
                   help="preset name, complete, sparse or scalability (repeatable)")
    _shape_flags(b)
    _proto_flags(b)
    b.add_argument("--backends", help="comma list, default ot,prf,he")
    b.add_argument("--opts", help="comma list of optimizations, default none")
    b.add_argument("--trials", type=int, default=1)
    b.add_argument("-o", "--output")
    b.set_defaults(fn=cmd_bench)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"pdtekit: error: {exc}", file=sys.stderr)
        return 2
    except ProtocolError as exc:
        print(f"pdtekit: protocol error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"pdtekit: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
