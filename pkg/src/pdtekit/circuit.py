"""Boolean circuits: Bristol-fashion text format, plaintext evaluation, and
the AND-layer schedule used for round-optimal shared evaluation.

File layout (whitespace separated, ``#`` starts a comment)::

    <gates> <wires>
    <number of input groups> <bits in group 1> <bits in group 2> ...
    <number of output groups> <bits in group 1> ...
    <fan-in> <fan-out> <input wires...> <output wire> <OP>
    ...

Input groups occupy the first wires, outputs the last ones. Supported
operations: ``XOR``, ``AND``, ``INV``, ``EQW`` (wire copy) and ``EQ``
(constant assignment, where the single "input" is the literal 0 or 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import ParseError, TopologyError

XOR, AND, INV, EQW, EQ = range(5)
OP_NAMES = {"XOR": XOR, "AND": AND, "INV": INV, "EQW": EQW, "EQ": EQ}
OP_TEXT = {v: k for k, v in OP_NAMES.items()}
FAN_IN = {XOR: 2, AND: 2, INV: 1, EQW: 1, EQ: 1}


@dataclass(frozen=True)
class Gate:
    op: int
    a: int
    b: int
    out: int


@dataclass
class Circuit:
    n_wires: int
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    gates: list[Gate]
    and_count: int = field(init=False)
    and_depth: int = field(init=False)
    schedule: list[tuple[str, list[Gate]]] = field(init=False, repr=False)

    def __post_init__(self):
        self._validate()
        self._build_schedule()

    @property
    def n_inputs(self) -> int:
        return sum(self.inputs)

    @property
    def input_wires(self) -> list[range]:
        out, start = [], 0
        for size in self.inputs:
            out.append(range(start, start + size))
            start += size
        return out

    def _validate(self) -> None:
        defined = [False] * self.n_wires
        for w in range(self.n_inputs):
            if w >= self.n_wires:
                raise TopologyError("more input bits than wires")
            defined[w] = True
        for i, g in enumerate(self.gates):
            srcs = [g.a] if FAN_IN[g.op] == 1 else [g.a, g.b]
            if g.op == EQ:
                srcs = []
            for w in srcs:
                if not 0 <= w < self.n_wires:
                    raise TopologyError(f"gate {i}: wire {w} out of range (n_wires={self.n_wires})")
                if not defined[w]:
                    raise TopologyError(f"gate {i}: wire {w} used before it is assigned")
            if not 0 <= g.out < self.n_wires:
                raise TopologyError(f"gate {i}: output wire {g.out} out of range")
            if defined[g.out]:
                raise TopologyError(f"gate {i}: wire {g.out} assigned twice")
            defined[g.out] = True
        for w in self.outputs:
            if not 0 <= w < self.n_wires or not defined[w]:
                raise TopologyError(f"output wire {w} never assigned")

    def _build_schedule(self) -> None:
        depth = [0] * self.n_wires
        level_of = []
        n_and = 0
        for g in self.gates:
            if g.op == EQ:
                d = 0
            elif FAN_IN[g.op] == 1:
                d = depth[g.a]
            else:
                d = max(depth[g.a], depth[g.b])
            if g.op == AND:
                d += 1
                n_and += 1
            depth[g.out] = d
            level_of.append(d)
        top = max(level_of, default=0)
        ands: list[list[Gate]] = [[] for _ in range(top + 1)]
        free: list[list[Gate]] = [[] for _ in range(top + 1)]
        for g, d in zip(self.gates, level_of):
            (ands if g.op == AND else free)[d].append(g)
        sched = []
        for d in range(top + 1):
            if ands[d]:
                sched.append(("and", ands[d]))
            if free[d]:
                sched.append(("free", free[d]))
        self.and_count = n_and
        self.and_depth = sum(1 for kind, _ in sched if kind == "and")
        self.schedule = sched
        self._compiled: dict[int, list] = {}

    def free_fns(self, party: int = 0) -> list:
        """Compiled free segments, aligned with ``schedule`` (None for AND layers)."""
        if party not in self._compiled:
            self._compiled[party] = [
                compile_free(gates, party) if kind == "free" else None
                for kind, gates in self.schedule
            ]
        return self._compiled[party]


def parse_circuit(text: str | bytes) -> Circuit:
    if isinstance(text, bytes):
        text = text.decode("ascii", errors="replace")
    lines = []
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].split()
        if body:
            lines.append((no, body))
    if len(lines) < 3:
        raise ParseError(lines[-1][0] if lines else 1, "missing header lines")

    def ints(no, toks, what):
        try:
            return [int(t) for t in toks]
        except ValueError:
            raise ParseError(no, f"non-integer in {what}") from None

    no, head = lines[0]
    if len(head) != 2:
        raise ParseError(no, "header must be '<gates> <wires>'")
    n_gates, n_wires = ints(no, head, "header")
    no, ins = lines[1]
    ins = ints(no, ins, "input line")
    if ins[0] != len(ins) - 1:
        raise ParseError(no, "input group count does not match the sizes given")
    no, outs = lines[2]
    outs = ints(no, outs, "output line")
    if outs[0] != len(outs) - 1:
        raise ParseError(no, "output group count does not match the sizes given")
    gates = []
    for no, toks in lines[3:]:
        op = OP_NAMES.get(toks[-1])
        if op is None:
            raise ParseError(no, f"unknown operation {toks[-1]!r}")
        nums = ints(no, toks[:-1], "gate")
        if len(nums) < 2:
            raise ParseError(no, "gate needs fan-in and fan-out")
        fin, fout = nums[0], nums[1]
        if fout != 1 or fin != FAN_IN[op] or len(nums) != 2 + fin + fout:
            raise ParseError(no, f"malformed {toks[-1]} gate")
        a = nums[2]
        b = nums[3] if fin == 2 else -1
        out = nums[2 + fin]
        if op == EQ and a not in (0, 1):
            raise ParseError(no, "EQ constant must be 0 or 1")
        gates.append(Gate(op, a, b, out))
    if len(gates) != n_gates:
        raise ParseError(lines[-1][0], f"header announces {n_gates} gates, found {len(gates)}")
    n_out = sum(outs[1:])
    if n_out > n_wires:
        raise TopologyError("more output bits than wires")
    outputs = tuple(range(n_wires - n_out, n_wires))
    return Circuit(n_wires, tuple(ins[1:]), outputs, gates)


def format_circuit(c: Circuit, output_groups: Sequence[int] | None = None) -> str:
    """Write ``c`` in the text format, renumbering so outputs are the last wires."""
    n_in = c.n_inputs
    outs = list(c.outputs)
    if len(set(outs)) != len(outs) or any(w < n_in for w in outs):
        # route through copies so every output wire is distinct and gate-driven
        extra, gates, nw = [], list(c.gates), c.n_wires
        for w in outs:
            gates.append(Gate(EQW, w, -1, nw))
            extra.append(nw)
            nw += 1
        c = Circuit(nw, c.inputs, tuple(extra), gates)
        outs = extra
    out_set = {w: i for i, w in enumerate(outs)}
    mapping = {w: w for w in range(n_in)}
    nxt = n_in
    for g in c.gates:
        if g.out not in out_set:
            mapping[g.out] = nxt
            nxt += 1
    base = c.n_wires - len(outs)
    nxt = max(nxt, base)
    for w, i in out_set.items():
        mapping[w] = nxt + i
    total = nxt + len(outs)
    groups = list(output_groups) if output_groups else [len(outs)]
    lines = [f"{len(c.gates)} {total}",
             " ".join(map(str, [len(c.inputs), *c.inputs])),
             " ".join(map(str, [len(groups), *groups])),
             ""]
    for g in c.gates:
        name = OP_TEXT[g.op]
        if g.op == EQ:
            lines.append(f"1 1 {g.a} {mapping[g.out]} EQ")
        elif FAN_IN[g.op] == 1:
            lines.append(f"1 1 {mapping[g.a]} {mapping[g.out]} {name}")
        else:
            lines.append(f"2 1 {mapping[g.a]} {mapping[g.b]} {mapping[g.out]} {name}")
    return "\n".join(lines) + "\n"


def compile_free(gates: Sequence[Gate], party: int = 0):
    """Straight-line Python for a run of non-AND gates.

    Returns ``f(w, ones)`` that updates the wire list in place. Party 1's
    variant drops constants, so INV becomes a copy and EQ yields 0; the two
    variants applied to XOR shares reconstruct the plaintext result.
    """
    lines = ["def _seg(w, ones):"]
    for g in gates:
        op = g.op
        if op == XOR:
            lines.append(f" w[{g.out}] = w[{g.a}] ^ w[{g.b}]")
        elif op == INV:
            lines.append(f" w[{g.out}] = w[{g.a}] ^ ones" if party == 0 else f" w[{g.out}] = w[{g.a}]")
        elif op == EQW:
            lines.append(f" w[{g.out}] = w[{g.a}]")
        elif op == EQ:
            lines.append(f" w[{g.out}] = {'ones' if g.a and party == 0 else '0'}")
        else:
            raise TopologyError("AND gate in a free segment")
    if len(lines) == 1:
        lines.append(" pass")
    ns: dict = {}
    exec(compile("\n".join(lines), "<circuit segment>", "exec"), ns)
    return ns["_seg"]


def eval_free(gates: Sequence[Gate], w: list, ones: int, party: int = 0) -> None:
    """Evaluate non-AND gates in place (interpreted; see compile_free)."""
    compile_free(gates, party)(w, ones)


def plain_eval(c: Circuit, inputs: Sequence[int], lanes: int = 1) -> list[int]:
    """Evaluate in the clear. ``inputs`` holds one lane-packed value per input
    wire; the result holds one per output wire."""
    if len(inputs) != c.n_inputs:
        raise TopologyError(f"expected {c.n_inputs} input wires, got {len(inputs)}")
    ones = (1 << lanes) - 1
    w = [0] * c.n_wires
    w[: c.n_inputs] = list(inputs)
    for (kind, gates), fn in zip(c.schedule, c.free_fns(0)):
        if kind == "and":
            for g in gates:
                w[g.out] = w[g.a] & w[g.b]
        else:
            fn(w, ones)
    return [w[o] for o in c.outputs]


def bits_of(x: int, width: int) -> list[int]:
    return [(x >> i) & 1 for i in range(width)]


def from_bits(bits: Sequence[int]) -> int:
    return sum((b & 1) << i for i, b in enumerate(bits))


class Builder:
    """Incremental circuit construction with free-XOR helpers."""

    def __init__(self, inputs: Sequence[int]):
        self.inputs = tuple(inputs)
        self.n = sum(inputs)
        self.gates: list[Gate] = []
        self._zero: int | None = None

    def wire(self) -> int:
        self.n += 1
        return self.n - 1

    def xor(self, a: int, b: int) -> int:
        o = self.wire()
        self.gates.append(Gate(XOR, a, b, o))
        return o

    def and_(self, a: int, b: int) -> int:
        o = self.wire()
        self.gates.append(Gate(AND, a, b, o))
        return o

    def inv(self, a: int) -> int:
        o = self.wire()
        self.gates.append(Gate(INV, a, -1, o))
        return o

    def const(self, bit: int) -> int:
        o = self.wire()
        self.gates.append(Gate(EQ, bit & 1, -1, o))
        return o

    def xor_many(self, ws: Sequence[int]) -> int:
        """Balanced XOR tree; an empty list yields a constant-0 wire."""
        ws = list(ws)
        if not ws:
            if self._zero is None:
                self._zero = self.const(0)
            return self._zero
        while len(ws) > 1:
            nxt = [self.xor(ws[i], ws[i + 1]) for i in range(0, len(ws) - 1, 2)]
            if len(ws) % 2:
                nxt.append(ws[-1])
            ws = nxt
        return ws[0]

    def build(self, outputs: Sequence[int]) -> Circuit:
        return Circuit(self.n, self.inputs, tuple(outputs), self.gates)
