"""Decision trees, their array encoding and the plaintext evaluation oracle.

Encoding: nodes in DFS preorder (left subtree first), root at index 0. Each
record packs ``t | l | r | v | c`` into ``5 * ell`` bits. Leaves point to
themselves (``l = r = own index``) so extra iterations are absorbed; their
threshold is random filler and their feature id a random valid feature.
Internal nodes carry a random label as filler.

Evaluation step: ``b = X[v] < t``; ``b = 1`` goes left; ``idx = r ^ b*(l ^ r)``.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Sequence

from .errors import InvalidTree, SpecInvalid, TreeNotComplete, UnsupportedQ


@dataclass(frozen=True)
class Node:
    """Internal node when ``leaf`` is False (t, v, l, r used), else a leaf (c)."""

    leaf: bool
    t: int = 0
    v: int = 0
    l: int = -1
    r: int = -1
    c: int = 0

    @classmethod
    def internal(cls, t: int, v: int, l: int, r: int) -> "Node":
        return cls(False, t, v, l, r)

    @classmethod
    def make_leaf(cls, c: int) -> "Node":
        return cls(True, c=c)


@dataclass
class DecisionTree:
    n: int
    nodes: list[Node]
    root: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.n < 1:
            raise InvalidTree("feature dimension must be positive")
        if not self.nodes or not 0 <= self.root < len(self.nodes):
            raise InvalidTree("tree has no root")
        seen = set()
        stack = [self.root]
        while stack:
            i = stack.pop()
            if i in seen:
                raise InvalidTree(f"node {i} reached twice (cycle or shared child)")
            seen.add(i)
            nd = self.nodes[i]
            if nd.leaf:
                if nd.c < 0:
                    raise InvalidTree(f"leaf {i} has a negative label")
                continue
            for ch in (nd.l, nd.r):
                if not 0 <= ch < len(self.nodes):
                    raise InvalidTree(f"node {i} has a missing child {ch}")
                stack.append(ch)
            if not 0 <= nd.v < self.n:
                raise InvalidTree(f"node {i} tests feature {nd.v}, dimension is {self.n}")
            if nd.t < 0:
                raise InvalidTree(f"node {i} has a negative threshold")
        if len(seen) != len(self.nodes):
            raise InvalidTree(f"{len(self.nodes) - len(seen)} nodes unreachable from the root")

    @property
    def m(self) -> int:
        return len(self.nodes)

    @property
    def d(self) -> int:
        return self._depth(self.root)

    def _depth(self, i: int) -> int:
        best, stack = 0, [(i, 0)]
        while stack:
            j, k = stack.pop()
            nd = self.nodes[j]
            if nd.leaf:
                best = max(best, k)
            else:
                stack += [(nd.l, k + 1), (nd.r, k + 1)]
        return best

    def is_complete(self) -> bool:
        d = self.d
        stack = [(self.root, 0)]
        while stack:
            j, k = stack.pop()
            nd = self.nodes[j]
            if nd.leaf:
                if k != d:
                    return False
            else:
                stack += [(nd.l, k + 1), (nd.r, k + 1)]
        return True

    def evaluate(self, x: Sequence[int]) -> int:
        """Recursive-walk oracle, independent of the array encoding."""
        nd = self.nodes[self.root]
        while not nd.leaf:
            nd = self.nodes[nd.l if x[nd.v] < nd.t else nd.r]
        return nd.c

    def max_value(self) -> int:
        return max(max(nd.t, nd.c) for nd in self.nodes)

    # -- JSON -----------------------------------------------------------------

    def to_json(self) -> dict:
        nodes = []
        for nd in self.nodes:
            nodes.append({"c": nd.c} if nd.leaf else {"t": nd.t, "v": nd.v, "l": nd.l, "r": nd.r})
        out = {"n": self.n, "nodes": nodes}
        if self.root:
            out["root"] = self.root
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "DecisionTree":
        try:
            n = int(obj["n"])
            nodes = []
            for k, rec in enumerate(obj["nodes"]):
                if "c" in rec and not ({"t", "v", "l", "r"} & rec.keys()):
                    nodes.append(Node.make_leaf(int(rec["c"])))
                elif {"t", "v", "l", "r"} <= rec.keys():
                    nodes.append(Node.internal(int(rec["t"]), int(rec["v"]), int(rec["l"]), int(rec["r"])))
                else:
                    raise InvalidTree(f"node {k}: need either c or all of t, v, l, r")
            return cls(n, nodes, int(obj.get("root", 0)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidTree):
                raise
            raise InvalidTree(f"malformed tree JSON: {exc}") from None

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "DecisionTree":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidTree(f"line {exc.lineno}: {exc.msg}") from None
        return cls.from_json(obj)


# -- array encoding ---------------------------------------------------------


@dataclass(frozen=True)
class NodeRecord:
    t: int
    l: int
    r: int
    v: int
    c: int

    def pack(self, ell: int) -> int:
        mask = (1 << ell) - 1
        for f in (self.t, self.l, self.r, self.v, self.c):
            if f < 0 or f > mask:
                raise InvalidTree(f"field value {f} does not fit in {ell} bits")
        return (self.t << 4 * ell) | (self.l << 3 * ell) | (self.r << 2 * ell) | (self.v << ell) | self.c

    @classmethod
    def unpack(cls, word: int, ell: int) -> "NodeRecord":
        mask = (1 << ell) - 1
        return cls((word >> 4 * ell) & mask, (word >> 3 * ell) & mask, (word >> 2 * ell) & mask,
                   (word >> ell) & mask, word & mask)


@dataclass
class EncodedTree:
    """Array A_T. ``layout`` is flat, layered or clustered.

    layered: ``layers[i]`` holds the 2^i records of depth i, child indices
    point into layer i+1 (the last layer self-loops within itself).
    clustered: ``clusters[k]`` holds 2^q - 1 records in heap order; child
    indices of the bottom row are cluster ids.
    """

    n: int
    ell: int
    d: int
    records: list[NodeRecord]
    layout: str = "flat"
    q: int = 1
    layers: list[list[NodeRecord]] = field(default_factory=list)
    clusters: list[list[NodeRecord]] = field(default_factory=list)

    @property
    def m(self) -> int:
        return len(self.records)

    @property
    def record_width(self) -> int:
        return 5 * self.ell

    def packed(self) -> list[int]:
        return [r.pack(self.ell) for r in self.records]

    def packed_layer(self, i: int) -> list[int]:
        return [r.pack(self.ell) for r in self.layers[i]]

    def packed_clusters(self) -> list[int]:
        w = self.record_width
        out = []
        for cl in self.clusters:
            word = 0
            for k, rec in enumerate(cl):
                word |= rec.pack(self.ell) << (k * w)
            out.append(word)
        return out


def _check_ell(tree: DecisionTree, ell: int, count: int) -> None:
    lim = 1 << ell
    if count > lim or tree.n > lim or tree.max_value() >= lim:
        raise InvalidTree(f"tree does not fit {ell}-bit fields")


def _leaf_record(nd: Node, self_idx: int, n: int, ell: int, rng: random.Random) -> NodeRecord:
    return NodeRecord(rng.getrandbits(ell), self_idx, self_idx, rng.randrange(n), nd.c)


def dfs_order(tree: DecisionTree) -> list[int]:
    order, stack = [], [tree.root]
    while stack:
        i = stack.pop()
        order.append(i)
        nd = tree.nodes[i]
        if not nd.leaf:
            stack += [nd.r, nd.l]
    return order


def encode(tree: DecisionTree, ell: int, rng: random.Random) -> EncodedTree:
    order = dfs_order(tree)
    _check_ell(tree, ell, len(order))
    pos = {node: k for k, node in enumerate(order)}
    recs = []
    for k, i in enumerate(order):
        nd = tree.nodes[i]
        if nd.leaf:
            recs.append(_leaf_record(nd, k, tree.n, ell, rng))
        else:
            recs.append(NodeRecord(nd.t, pos[nd.l], pos[nd.r], nd.v, rng.getrandbits(ell)))
    return EncodedTree(tree.n, ell, tree.d, recs)


def plaintext_eval(at: EncodedTree, x: Sequence[int], d_prime: int) -> int:
    """Iterate the array walk ``d_prime`` times from the root; return the label."""
    if len(x) != at.n:
        raise InvalidTree(f"feature vector has {len(x)} entries, tree expects {at.n}")
    idx = 0
    rst = at.records[0].c
    for _ in range(d_prime):
        rec = at.records[idx]
        b = 1 if x[rec.v] < rec.t else 0
        idx = rec.r ^ (b * (rec.l ^ rec.r))
        rst = at.records[idx].c
    return rst


# -- padding to a complete tree ---------------------------------------------


def pad_complete(tree: DecisionTree, rng: random.Random | None = None) -> DecisionTree:
    """Grow every shallow leaf into a dummy subtree whose leaves copy its label."""
    rng = rng or random.Random(0)
    d = tree.d
    nodes: list[Node] = []

    def build(i: int, depth: int) -> int:
        nd = tree.nodes[i]
        me = len(nodes)
        nodes.append(nd)
        if nd.leaf:
            if depth < d:
                # dummy split: the threshold and feature are arbitrary
                t, v = rng.getrandbits(8), rng.randrange(tree.n)
                l = build_dummy(nd, depth + 1)
                r = build_dummy(nd, depth + 1)
                nodes[me] = Node.internal(t, v, l, r)
            return me
        l = build(nd.l, depth + 1)
        r = build(nd.r, depth + 1)
        nodes[me] = Node.internal(nd.t, nd.v, l, r)
        return me

    def build_dummy(leaf: Node, depth: int) -> int:
        me = len(nodes)
        nodes.append(leaf)
        if depth < d:
            t, v = rng.getrandbits(8), rng.randrange(tree.n)
            l = build_dummy(leaf, depth + 1)
            r = build_dummy(leaf, depth + 1)
            nodes[me] = Node.internal(t, v, l, r)
        return me

    build(tree.root, 0)
    return DecisionTree(tree.n, nodes, 0)


def encode_layered(tree: DecisionTree, ell: int, rng: random.Random) -> EncodedTree:
    if not tree.is_complete():
        raise TreeNotComplete("layered layout needs a complete tree (see pad_complete)")
    at = encode(tree, ell, rng)
    d = tree.d
    layers: list[list[int]] = [[tree.root]]
    for _ in range(d):
        nxt = []
        for i in layers[-1]:
            nd = tree.nodes[i]
            nxt += [nd.l, nd.r]
        layers.append(nxt)
    out = []
    for depth, row in enumerate(layers):
        recs = []
        for k, i in enumerate(row):
            nd = tree.nodes[i]
            if nd.leaf:
                recs.append(_leaf_record(nd, k, tree.n, ell, rng))
            else:
                recs.append(NodeRecord(nd.t, 2 * k, 2 * k + 1, nd.v, rng.getrandbits(ell)))
        out.append(recs)
    at.layout = "layered"
    at.layers = out
    return at


# -- clusters ---------------------------------------------------------------


def encode_clustered(tree: DecisionTree, ell: int, q: int, rng: random.Random) -> EncodedTree:
    """Pack each node with its descendants in the next q-1 layers.

    Cluster 0 is rooted at the tree root; a leaf met inside a cluster fills
    the slots below it with copies of itself and points to a leaf-rooted
    cluster made only of its copies, which loops to itself.
    """
    if q not in (1, 2, 3):
        raise UnsupportedQ(f"cluster size q={q} not supported (1, 2 or 3)")
    at = encode(tree, ell, rng)
    size = (1 << q) - 1
    # cluster roots: nodes at depths divisible by q, plus every leaf; ids in DFS order
    ids: dict[int, int] = {}
    stack = [(tree.root, 0)]
    while stack:
        i, dep = stack.pop()
        nd = tree.nodes[i]
        if dep % q == 0 or nd.leaf:
            ids[i] = len(ids)
        if not nd.leaf:
            stack += [(nd.r, dep + 1), (nd.l, dep + 1)]
    clusters: list[list[NodeRecord]] = []
    for root, cid in ids.items():
        slots = [root] + [0] * (size - 1)
        recs: list[NodeRecord] = []
        for pos in range(size):
            i = slots[pos]
            nd = tree.nodes[i]
            bottom = 2 * pos + 1 >= size
            if nd.leaf:
                if not bottom:
                    slots[2 * pos + 1] = slots[2 * pos + 2] = i
                # bottom copies continue in the leaf's own (self-looping) cluster
                tgt = ids[i] if bottom else 0
                recs.append(_leaf_record(nd, tgt, tree.n, ell, rng))
            elif not bottom:
                slots[2 * pos + 1], slots[2 * pos + 2] = nd.l, nd.r
                recs.append(NodeRecord(nd.t, 0, 0, nd.v, rng.getrandbits(ell)))
            else:
                recs.append(NodeRecord(nd.t, ids[nd.l], ids[nd.r], nd.v, rng.getrandbits(ell)))
        clusters.append(recs)
    if len(clusters) > 1 << ell:
        raise InvalidTree(f"{len(clusters)} clusters do not fit {ell}-bit indices")
    at.layout = "clustered"
    at.q = q
    at.clusters = clusters
    return at


def clustered_eval(at: EncodedTree, x: Sequence[int], d_prime: int) -> int:
    """Plaintext walk over the clustered layout (same schedule as the protocol)."""
    q = at.q
    cl = at.clusters[0]
    for _ in range(-(-d_prime // q)):
        pos = 0
        while True:
            rec = cl[pos]
            b = x[rec.v] < rec.t
            if 2 * pos + 1 >= len(cl):
                cl = at.clusters[rec.l if b else rec.r]
                break
            pos = 2 * pos + 1 if b else 2 * pos + 2
    return cl[0].c


def layered_eval(at: EncodedTree, x: Sequence[int], d_prime: int) -> int:
    idx, layer = 0, 0
    rst = at.layers[0][0].c
    for _ in range(d_prime):
        rec = at.layers[layer][idx]
        b = x[rec.v] < rec.t
        idx = rec.l if b else rec.r
        layer = min(layer + 1, len(at.layers) - 1)
        rst = at.layers[layer][idx].c
    return rst


# -- generators -------------------------------------------------------------

PRESETS: dict[str, tuple[int, int, int]] = {
    "wine": (7, 5, 23),
    "linnerud": (3, 6, 39),
    "breast": (12, 7, 43),
    "digits": (47, 15, 337),
    "spambase": (57, 17, 171),
    "diabetes": (10, 28, 787),
    "boston": (13, 30, 851),
    "mnist": (784, 20, 4179),
}


def preset_shape(name: str) -> tuple[int, int, int]:
    key = name.lower()
    if key not in PRESETS:
        raise SpecInvalid(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[key]


def _assemble(n: int, shape: list, rng: random.Random, tmax: int, labels: int) -> DecisionTree:
    """Shape is nested tuples ``(left, right)`` with ``None`` for leaves."""
    nodes: list[Node] = []

    def go(s) -> int:
        me = len(nodes)
        nodes.append(Node.make_leaf(0))
        if s is None:
            nodes[me] = Node.make_leaf(rng.randrange(labels))
            return me
        l, r = go(s[0]), go(s[1])
        nodes[me] = Node.internal(rng.randrange(tmax), rng.randrange(n), l, r)
        return me

    go(shape)
    return DecisionTree(n, nodes)


def complete(d: int, n: int, rng: random.Random, tmax: int = 256, labels: int = 16) -> DecisionTree:
    if d < 0 or n < 1:
        raise SpecInvalid("depth must be >= 0 and n >= 1")

    def shape(k):
        return None if k == 0 else (shape(k - 1), shape(k - 1))

    return _assemble(n, shape(d), rng, tmax, labels)


def sparse(d: int, m: int, n: int, rng: random.Random, tmax: int = 256, labels: int = 16) -> DecisionTree:
    """Random full binary tree with exactly m nodes and depth exactly d.

    Needs m odd and ``2d + 1 <= m <= 2^(d+1) - 1``.
    """
    if m % 2 == 0 or m < 2 * d + 1 or m > (1 << (d + 1)) - 1 or n < 1:
        raise SpecInvalid(f"no full binary tree with d={d}, m={m}")
    internal = (m - 1) // 2
    # start from a spine of length d, then split random shallow leaves
    spine: list = [None]
    root = spine
    for _ in range(d):
        child: list = [None]
        spine[0] = [child, [None]]
        spine = child
    # mutable representation: cell = [payload]; payload None (leaf) or [lcell, rcell]
    leaves: list[tuple[list, int]] = []

    def collect(cell, depth):
        if cell[0] is None:
            leaves.append((cell, depth))
        else:
            collect(cell[0][0], depth + 1)
            collect(cell[0][1], depth + 1)

    collect(root, 0)
    shallow = [lf for lf in leaves if lf[1] < d]
    for _ in range(internal - d):
        k = rng.randrange(len(shallow))
        shallow[k], shallow[-1] = shallow[-1], shallow[k]
        cell, dep = shallow.pop()
        a, b = [None], [None]
        cell[0] = [a, b]
        if dep + 1 < d:
            shallow += [(a, dep + 1), (b, dep + 1)]

    def freeze(cell):
        return None if cell[0] is None else (freeze(cell[0][0]), freeze(cell[0][1]))

    return _assemble(n, freeze(root), rng, tmax, labels)


def preset(name: str, rng: random.Random, tmax: int = 256, labels: int = 16) -> DecisionTree:
    """Synthetic tree with the (n, d, m) shape of a named dataset."""
    n, d, m = preset_shape(name)
    return sparse(d, m, n, rng, tmax, labels)


def scalability(d: int, n: int, rng: random.Random) -> DecisionTree:
    """Deep synthetic tree with m = 25 d (odd-rounded)."""
    m = 25 * d
    if m % 2 == 0:
        m += 1
    return sparse(d, min(m, (1 << (d + 1)) - 1), n, rng)


def load_features(text: str, n: int | None = None) -> list[int]:
    """Feature vector from JSON (list or {"x": [...]}) or one CSV line."""
    text = text.strip()
    try:
        obj = json.loads(text)
        xs = obj["x"] if isinstance(obj, dict) else obj
        vals = [int(v) for v in xs]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError):
        try:
            vals = [int(v) for v in text.replace("\n", ",").split(",") if v.strip()]
        except ValueError as exc:
            raise InvalidTree(f"bad feature vector: {exc}") from None
    if any(v < 0 for v in vals):
        raise InvalidTree("features must be non-negative integers")
    if n is not None and len(vals) != n:
        raise InvalidTree(f"feature vector has {len(vals)} entries, expected {n}")
    return vals
