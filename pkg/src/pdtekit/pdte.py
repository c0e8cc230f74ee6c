"""Two-party private decision tree evaluation.

P0 holds the tree, P1 the feature vector; P1 learns the label. Each
iteration: select ``X[v]`` with the feature SOS (P1 owns X), compare with
``t``, multiplex ``l``/``r`` into the next index, select the next node with
the tree SOS (P0 owns A_T) and take its label as the running result. After
``d_prime`` iterations P0 sends its share of the result to P1.

Layouts:
  none      flat DFS array, one tree select per iteration
  clusterQ  clusters of 2^q - 1 nodes, q comparisons per tree select
  layered   complete tree, iteration i selects from depth i only
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

from . import sos, wire
from .channel import Channel, Proto, SwappedChannel, run, transfer
from .dealer import Budget, CorrelationStore, dealt_bytes, provision
from .errors import ConfigInvalid, LayoutMismatch, TreeNotComplete
from .gmw import less_than_circuit, less_than_proto, mux_proto
from .paillier import PaillierKeypair, keygen
from .sos import SosConfig, SosReceiver, SosSender, select_budget, select_proto
from .tree import (DecisionTree, EncodedTree, NodeRecord, encode, encode_clustered,
                   encode_layered)

OPTIMIZATIONS = ("none", "cluster2", "cluster3", "layered")
FEATURE_LABEL = "feature"


@dataclass(frozen=True)
class PdteConfig:
    ell: int = 16
    backend: str = "prf"            # tree SOS
    feature_backend: str = "ot"
    opt: str = "none"
    d_prime: int | None = None      # default: the tree depth
    prf: str = "toy16"
    key_bits: int = 512
    lam: int = 40
    delta_mode: str = "arith"
    wbv_mode: str = "direct"

    def __post_init__(self):
        if self.opt not in OPTIMIZATIONS and not self.opt.startswith("cluster"):
            raise ConfigInvalid(f"unknown optimization {self.opt!r}")
        if self.q < 1:  # also rejects malformed clusterQ names
            raise ConfigInvalid(f"bad cluster spec {self.opt!r}")
        if self.ell < 2:
            raise ConfigInvalid("ell must be at least 2")
        if self.d_prime is not None and self.d_prime < 0:
            raise ConfigInvalid("d_prime must be non-negative")

    @property
    def q(self) -> int:
        if self.opt.startswith("cluster"):
            try:
                return int(self.opt[len("cluster"):])
            except ValueError:
                raise ConfigInvalid(f"bad cluster spec {self.opt!r}") from None
        return 1

    def sos(self, backend: str, m: int, width: int, label: str) -> SosConfig:
        return SosConfig(backend, m, width, index_width=self.ell, delta_mode=self.delta_mode,
                         prf=self.prf, key_bits=self.key_bits, lam=self.lam, label=label)


@dataclass
class PdteSession:
    """Both parties' state, held side by side for the lockstep driver.

    ``tree_sos`` pairs are (P0 sender, P1 receiver); ``feature_sos`` is
    (P1 sender, P0 receiver).
    """

    cfg: PdteConfig
    n: int
    m: int
    d: int
    d_prime: int
    layout: str
    q: int
    tree_sos: list[tuple[SosSender, SosReceiver]]
    feature_sos: tuple[SosSender, SosReceiver]
    root: int                       # P0's packed root record or cluster (flat/cluster)
    root_width: int
    evaluations: int = 0
    tree_label: list[str] = field(default_factory=list)

    @property
    def ell(self) -> int:
        return self.cfg.ell

    @property
    def tree_selects(self) -> int:
        return sum(s.selects for s, _ in self.tree_sos)

    @property
    def tree_scanned(self) -> int:
        return sum(s.scanned for s, _ in self.tree_sos)

    def iterations(self) -> int:
        """Tree-select invocations in one evaluation."""
        if self.layout == "clustered":
            return -(-self.d_prime // self.q)
        if self.layout == "layered":
            return self.d_prime + 1
        return self.d_prime


def _encode(cfg: PdteConfig, tree: DecisionTree, rng: random.Random) -> EncodedTree:
    if cfg.opt == "layered":
        if not tree.is_complete():
            raise TreeNotComplete("layered evaluation needs a complete tree (pad it first)")
        return encode_layered(tree, cfg.ell, rng)
    if cfg.q > 1 or cfg.opt != "none":
        return encode_clustered(tree, cfg.ell, cfg.q, rng)
    return encode(tree, cfg.ell, rng)


def pdte_setup_proto(ch: Channel, cfg: PdteConfig, tree: DecisionTree, x: Sequence[int],
                     rng0: random.Random, rng1: random.Random,
                     keypair: PaillierKeypair | None = None) -> Proto[PdteSession]:
    if len(x) != tree.n:
        raise ConfigInvalid(f"feature vector has {len(x)} entries, tree expects {tree.n}")
    if any(v < 0 or v >> cfg.ell for v in x):
        raise ConfigInvalid(f"features must fit in {cfg.ell} bits")
    if wire.bitlen(tree.n) > cfg.ell:
        raise ConfigInvalid(f"{tree.n} features cannot be indexed with {cfg.ell} bits")
    d_prime = tree.d if cfg.d_prime is None else cfg.d_prime
    if d_prime < tree.d:
        raise ConfigInvalid(f"d_prime={d_prime} is below the tree depth {tree.d}")
    at = _encode(cfg, tree, rng0)
    rw = 5 * cfg.ell
    jobs = []
    labels = []
    if at.layout == "layered":
        for i in range(len(at.layers)):
            lab = f"tree/L{i}"
            labels.append(lab)
            jobs.append((cfg.sos(cfg.backend, 1 << i, rw, lab), at.packed_layer(i)))
        root, root_width = 0, rw
    elif at.layout == "clustered":
        width = ((1 << at.q) - 1) * rw
        packed = at.packed_clusters()
        labels.append("tree")
        jobs.append((cfg.sos(cfg.backend, len(packed), width, "tree"), packed))
        root, root_width = packed[0], width
    else:
        packed = at.packed()
        labels.append("tree")
        jobs.append((cfg.sos(cfg.backend, len(packed), rw, "tree"), packed))
        root, root_width = packed[0], rw
    if cfg.backend == "he" and keypair is None:
        keypair = keygen(cfg.key_bits, rng0)  # one key for every layer
    pairs = []
    for sc, values in jobs:
        pairs.append((yield from sos.setup_proto(ch, sc, values, rng0, rng1, keypair)))
    fcfg = cfg.sos(cfg.feature_backend, tree.n, cfg.ell, FEATURE_LABEL)
    feat = yield from sos.setup_proto(SwappedChannel(ch), fcfg, list(x), rng1, rng0, None)
    return PdteSession(cfg, tree.n, at.m, tree.d, d_prime, at.layout, at.q, pairs, feat,
                       root, root_width, tree_label=labels)


def pdte_setup(ch: Channel, cfg: PdteConfig, tree: DecisionTree, x: Sequence[int], seed: int = 0,
               keypair: PaillierKeypair | None = None) -> PdteSession:
    rng0, rng1 = random.Random(f"{seed}/p0"), random.Random(f"{seed}/p1")
    return run(ch, pdte_setup_proto(ch, cfg, tree, x, rng0, rng1, keypair))


# -- budgets ----------------------------------------------------------------


def _feature_budget(sess: PdteSession) -> Budget:
    s, _ = sess.feature_sos
    return select_budget(s.cfg, s.keypair.n if s.keypair else None)


def _tree_budget(sess: PdteSession, k: int) -> Budget:
    s, _ = sess.tree_sos[k]
    return select_budget(s.cfg, s.keypair.n if s.keypair else None)


def step_triples(ell: int) -> int:
    """Comparison plus index mux for one node."""
    return less_than_circuit(ell).and_count + ell


def evaluation_budget(sess: PdteSession) -> Budget:
    """Exact correlations one evaluation consumes."""
    ell = sess.ell
    b = Budget()
    if sess.layout == "clustered":
        q = sess.q
        per = Budget()
        for _ in range(q):
            per = per.merge(_feature_budget(sess))
            per.triples += less_than_circuit(ell).and_count
        # subtree muxes shrink level by level; the last one picks the cluster id
        per.triples += sum(((1 << (q - k)) - 1) * 5 * ell for k in range(1, q)) + ell
        per = per.merge(_tree_budget(sess, 0))
        b = per.scaled(sess.iterations())
    elif sess.layout == "layered":
        b = _tree_budget(sess, 0)
        last = len(sess.tree_sos) - 1
        for i in range(1, sess.d_prime + 1):
            step = _feature_budget(sess)
            step.triples += step_triples(ell)
            b = b.merge(step).merge(_tree_budget(sess, min(i, last)))
    else:
        per = _feature_budget(sess)
        per.triples += step_triples(ell)
        per = per.merge(_tree_budget(sess, 0))
        b = per.scaled(sess.d_prime)
    return b


def deal(ch: Channel, sess: PdteSession, rng: random.Random, evaluations: int = 1
         ) -> tuple[CorrelationStore, CorrelationStore]:
    """Trusted-dealer offline phase; dealt bytes are booked on the transcript."""
    budget = evaluation_budget(sess).scaled(evaluations)
    stores = provision(budget, rng, sess.cfg.wbv_mode, {FEATURE_LABEL: 1})
    for p in (0, 1):
        ch.transcript.add_dealt(p, dealt_bytes(stores[p]))
    return stores


# -- evaluation -------------------------------------------------------------


def _fields(word: int, ell: int) -> NodeRecord:
    return NodeRecord.unpack(word, ell)


def _feature_select(ch: Channel, sess: PdteSession, v: Sequence[int], stores
                    ) -> Proto[tuple[int, int]]:
    s, r = sess.feature_sos
    a1, a0 = yield from select_proto(SwappedChannel(ch), s, r, (v[1], v[0]), (stores[1], stores[0]))
    return a0, a1


def _step(ch: Channel, sess: PdteSession, node: Sequence[NodeRecord], stores) -> Proto[tuple[int, int]]:
    """Compare at the shared node; return shares of the branch bit (1 = left)."""
    ell = sess.ell
    triples = (stores[0].triples, stores[1].triples)
    xv = yield from _feature_select(ch, sess, (node[0].v, node[1].v), stores)
    b = yield from less_than_proto(ch, xv, (node[0].t, node[1].t), ell, triples)
    return b


def _next_index(ch: Channel, sess: PdteSession, node: Sequence[NodeRecord], stores
                ) -> Proto[tuple[int, int]]:
    triples = (stores[0].triples, stores[1].triples)
    b = yield from _step(ch, sess, node, stores)
    idx = yield from mux_proto(ch, b, (node[0].l, node[1].l), (node[0].r, node[1].r), sess.ell, triples)
    return idx


def _select_tree(ch: Channel, sess: PdteSession, k: int, idx: Sequence[int], stores
                 ) -> Proto[tuple[int, int]]:
    s, r = sess.tree_sos[k]
    return (yield from select_proto(ch, s, r, idx, stores))


def _heap_half(size: int, right: bool) -> list[int]:
    """Heap positions of the left/right child subtree inside a heap of ``size``."""
    out, level = [], 1
    while (1 << (level + 1)) - 1 <= size:
        start = (1 << level) - 1
        half = 1 << (level - 1)
        base = start + (half if right else 0)
        out += range(base, base + half)
        level += 1
    return out


def _flat_proto(ch: Channel, sess: PdteSession, stores) -> Proto[tuple[int, int]]:
    ell = sess.ell
    rec = (sess.root, 0)
    for _ in range(sess.d_prime):
        node = (_fields(rec[0], ell), _fields(rec[1], ell))
        idx = yield from _next_index(ch, sess, node, stores)
        rec = yield from _select_tree(ch, sess, 0, idx, stores)
    mask = (1 << ell) - 1
    return rec[0] & mask, rec[1] & mask


def _layered_proto(ch: Channel, sess: PdteSession, stores) -> Proto[tuple[int, int]]:
    ell = sess.ell
    # the root comes from the one-element top layer, so every layer is scanned once
    rec = yield from _select_tree(ch, sess, 0, (0, 0), stores)
    last = len(sess.tree_sos) - 1
    for i in range(1, sess.d_prime + 1):
        node = (_fields(rec[0], ell), _fields(rec[1], ell))
        idx = yield from _next_index(ch, sess, node, stores)
        rec = yield from _select_tree(ch, sess, min(i, last), idx, stores)
    mask = (1 << ell) - 1
    return rec[0] & mask, rec[1] & mask


def _clustered_proto(ch: Channel, sess: PdteSession, stores) -> Proto[tuple[int, int]]:
    ell, q = sess.ell, sess.q
    rw = 5 * ell
    size = (1 << q) - 1
    triples = (stores[0].triples, stores[1].triples)
    cl = (sess.root, 0)
    for _ in range(sess.iterations()):
        # heap-ordered subtree shares, shrinking one level per comparison
        sub = [[(cl[p] >> (k * rw)) & ((1 << rw) - 1) for k in range(size)] for p in (0, 1)]
        while True:
            node = (_fields(sub[0][0], ell), _fields(sub[1][0], ell))
            if len(sub[0]) == 1:
                idx = yield from _next_index(ch, sess, node, stores)
                break
            b = yield from _step(ch, sess, node, stores)
            lpos, rpos = _heap_half(len(sub[0]), False), _heap_half(len(sub[0]), True)
            width = len(lpos) * rw
            lw = [sum(sub[p][j] << (k * rw) for k, j in enumerate(lpos)) for p in (0, 1)]
            rws = [sum(sub[p][j] << (k * rw) for k, j in enumerate(rpos)) for p in (0, 1)]
            chosen = yield from mux_proto(ch, b, lw, rws, width, triples)
            sub = [[(chosen[p] >> (k * rw)) & ((1 << rw) - 1) for k in range(len(lpos))] for p in (0, 1)]
        cl = yield from _select_tree(ch, sess, 0, idx, stores)
    mask = (1 << ell) - 1
    return cl[0] & mask, cl[1] & mask


def pdte_eval_proto(ch: Channel, sess: PdteSession, stores: Sequence[CorrelationStore]
                    ) -> Proto[int]:
    """Run one evaluation; returns the label as reconstructed by P1."""
    if sess.layout == "clustered":
        rst = yield from _clustered_proto(ch, sess, stores)
    elif sess.layout == "layered":
        rst = yield from _layered_proto(ch, sess, stores)
    else:
        rst = yield from _flat_proto(ch, sess, stores)
    got = yield from transfer(ch, 0, wire.enc(rst[0], sess.ell), "result")
    sess.evaluations += 1
    return wire.dec(got) ^ rst[1]


def pdte_eval(ch: Channel, sess: PdteSession, stores: Sequence[CorrelationStore]) -> int:
    return run(ch, pdte_eval_proto(ch, sess, stores))


def pdte_eval_clustered(ch: Channel, sess: PdteSession, q: int,
                        stores: Sequence[CorrelationStore]) -> int:
    if sess.layout != "clustered" or sess.q != q:
        raise LayoutMismatch(f"session layout is {sess.layout} (q={sess.q}), asked for cluster q={q}")
    return pdte_eval(ch, sess, stores)


def pdte_eval_layered(ch: Channel, sess: PdteSession, stores: Sequence[CorrelationStore]) -> int:
    if sess.layout != "layered":
        raise LayoutMismatch(f"session layout is {sess.layout}, not layered")
    return pdte_eval(ch, sess, stores)
