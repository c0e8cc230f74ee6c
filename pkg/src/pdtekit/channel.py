"""In-process duplex transport between the two parties, with metering.

Protocols in this package are written in lockstep: one Python generator
carries both parties' computations, and every ``yield`` marks a flush
barrier. Messages sent before a flush only become receivable after it, so a
protocol cannot read a reply in the same round it was requested, and the
round meter counts exactly the number of communication steps that carried
traffic.

Framing: each message costs its payload plus a 4-byte length prefix.

Phases:

``offline``  interactive preprocessing (e.g. triple generation protocols)
``setup``    one-time, input-independent transfers (masked arrays, keys)
``online``   per-query evaluation traffic

Correlations handed out by a trusted dealer never cross this channel; they
are booked separately with :meth:`Transcript.add_dealt`.
"""

from __future__ import annotations

import csv
import io
import re
from collections import deque
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Generator, Iterator, TypeVar

from .errors import ChannelClosed, ConfigError, DeliveryError

T = TypeVar("T")
Proto = Generator[None, None, T]

FRAME_BYTES = 4
PHASES = ("offline", "setup", "online")
PARTIES = (0, 1)


@dataclass
class FlushEvent:
    phase: str
    bytes: tuple[int, int]


@dataclass
class Transcript:
    bytes_sent: dict[tuple[int, str], int] = field(default_factory=dict)
    rounds: dict[str, int] = field(default_factory=dict)
    flushes: list[FlushEvent] = field(default_factory=list)
    dealt: dict[int, int] = field(default_factory=dict)

    def sent(self, party: int | None = None, phase: str | None = None) -> int:
        return sum(
            b
            for (p, ph), b in self.bytes_sent.items()
            if (party is None or p == party) and (phase is None or ph == phase)
        )

    def rounds_in(self, phase: str) -> int:
        return self.rounds.get(phase, 0)

    def add_dealt(self, party: int, nbytes: int) -> None:
        self.dealt[party] = self.dealt.get(party, 0) + nbytes

    def snapshot(self) -> "Transcript":
        return Transcript(
            dict(self.bytes_sent), dict(self.rounds), list(self.flushes), dict(self.dealt)
        )

    def since(self, mark: "Transcript") -> "Transcript":
        """Counters accumulated after ``mark`` was taken."""
        keys = set(self.bytes_sent) | set(mark.bytes_sent)
        b = {k: self.bytes_sent.get(k, 0) - mark.bytes_sent.get(k, 0) for k in keys}
        r = {ph: self.rounds.get(ph, 0) - mark.rounds.get(ph, 0) for ph in PHASES}
        d = {p: self.dealt.get(p, 0) - mark.dealt.get(p, 0) for p in PARTIES}
        return Transcript(
            {k: v for k, v in b.items() if v},
            {k: v for k, v in r.items() if v},
            self.flushes[len(mark.flushes):],
            {k: v for k, v in d.items() if v},
        )

    def rows(self) -> list[tuple[int, str, int, int]]:
        out = []
        for party in PARTIES:
            for phase in PHASES:
                out.append((party, phase, self.bytes_sent.get((party, phase), 0),
                            self.rounds.get(phase, 0)))
            out.append((party, "dealer", self.dealt.get(party, 0), 0))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["party", "phase", "bytes", "rounds"])
        for row in self.rows():
            w.writerow(row)
        return buf.getvalue()


@dataclass(frozen=True)
class NetworkModel:
    rtt_ms: float
    bandwidth_bps: float

    def __post_init__(self):
        if self.rtt_ms < 0:
            raise ConfigError("rtt must be non-negative")
        if self.bandwidth_bps <= 0:
            raise ConfigError("bandwidth must be positive")

    @classmethod
    def parse(cls, text: str) -> "NetworkModel":
        """Parse ``rtt:bandwidth``, e.g. ``80:40M`` or ``0.1ms:1Gbps``."""
        m = re.fullmatch(
            r"\s*([0-9.eE+-]+)\s*(?:ms)?\s*:\s*([0-9.eE+-]+)\s*([kKmMgG]?)(?:bps|b/s)?\s*",
            text,
        )
        if not m:
            raise ConfigError(f"bad network spec {text!r}, expected rtt_ms:bandwidth")
        scale = {"": 1, "k": 1e3, "m": 1e6, "g": 1e9}[m.group(3).lower()]
        try:
            return cls(float(m.group(1)), float(m.group(2)) * scale)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


LAN = NetworkModel(0.1, 1e9)
MAN = NetworkModel(6.0, 100e6)
WAN = NetworkModel(80.0, 40e6)
NETWORKS = {"LAN": LAN, "MAN": MAN, "WAN": WAN}


def modeled_time(t: Transcript, nm: NetworkModel, phase: str = "online") -> float:
    """Latency estimate in milliseconds: rounds * rtt + bits / bandwidth."""
    bits = 8 * t.sent(phase=phase)
    return t.rounds_in(phase) * nm.rtt_ms + 1000.0 * bits / nm.bandwidth_bps


@dataclass
class _Msg:
    payload: bytes
    tag: str | None


class Channel:
    def __init__(self):
        self.transcript = Transcript()
        self.phase = "online"
        # indexed by receiving party
        self._pending: list[deque[_Msg]] = [deque(), deque()]
        self._delivered: list[deque[_Msg]] = [deque(), deque()]
        self._step_bytes = [0, 0]
        self._step_traffic = False
        self._closed = [False, False]
        self.endpoints = (Endpoint(self, 0), Endpoint(self, 1))

    def __getitem__(self, party: int) -> "Endpoint":
        return self.endpoints[party]

    @contextmanager
    def in_phase(self, phase: str) -> Iterator[None]:
        if phase not in PHASES:
            raise ConfigError(f"unknown phase {phase!r}")
        prev, self.phase = self.phase, phase
        try:
            yield
        finally:
            self.phase = prev

    def _send(self, party: int, payload: bytes, tag: str | None) -> None:
        if self._closed[party] or self._closed[1 - party]:
            raise ChannelClosed(f"party {1 - party} has terminated")
        n = len(payload) + FRAME_BYTES
        key = (party, self.phase)
        self.transcript.bytes_sent[key] = self.transcript.bytes_sent.get(key, 0) + n
        self._step_bytes[party] += n
        self._step_traffic = True
        self._pending[1 - party].append(_Msg(bytes(payload), tag))

    def _recv(self, party: int, tag: str | None) -> bytes:
        q = self._delivered[party]
        if not q:
            raise DeliveryError(f"party {party}: nothing delivered (missing flush?)")
        msg = q.popleft()
        if tag is not None and msg.tag is not None and tag != msg.tag:
            raise DeliveryError(f"party {party}: expected {tag!r}, got {msg.tag!r}")
        return msg.payload

    def flush(self) -> None:
        for p in PARTIES:
            self._delivered[p].extend(self._pending[p])
            self._pending[p].clear()
        if self._step_traffic:
            t = self.transcript
            t.rounds[self.phase] = t.rounds.get(self.phase, 0) + 1
            t.flushes.append(FlushEvent(self.phase, tuple(self._step_bytes)))
        self._step_bytes = [0, 0]
        self._step_traffic = False

    def close(self, party: int) -> None:
        self._closed[party] = True

    def idle(self) -> bool:
        return not any(self._pending) and not any(self._delivered)


class Endpoint:
    def __init__(self, channel: Channel, party: int):
        self.channel = channel
        self.party = party

    @property
    def phase(self) -> str:
        return self.channel.phase

    @property
    def counters(self) -> Transcript:
        return self.channel.transcript

    def send(self, msg: bytes, tag: str | None = None) -> None:
        self.channel._send(self.party, msg, tag)

    def recv(self, tag: str | None = None) -> bytes:
        return self.channel._recv(self.party, tag)

    def close(self) -> None:
        self.channel.close(self.party)


def flush_round(ep: Endpoint) -> None:
    ep.channel.flush()


def run(ch: Channel, proto: Proto[T]) -> T:
    """Drive a lockstep protocol, flushing the channel at every barrier."""
    while True:
        try:
            next(proto)
        except StopIteration as stop:
            return stop.value
        ch.flush()


def parallel(*protos: Proto) -> Proto[tuple]:
    """Run sub-protocols side by side so that they share flush barriers.

    Each sub-protocol must receive, at its next step, exactly what it sent in
    the previous one; the channel's per-direction FIFO then stays aligned.
    """
    results: list = [None] * len(protos)
    active = list(range(len(protos)))
    while active:
        still = []
        for i in active:
            try:
                next(protos[i])
                still.append(i)
            except StopIteration as stop:
                results[i] = stop.value
        active = still
        if active:
            yield
    return tuple(results)


def exchange(ch: Channel, m0: bytes, m1: bytes, tag: str | None = None) -> Proto[tuple[bytes, bytes]]:
    """Both parties send one message in the same round.

    Returns ``(what P0 received, what P1 received)``.
    """
    ch[0].send(m0, tag)
    ch[1].send(m1, tag)
    yield
    return ch[0].recv(tag), ch[1].recv(tag)


def transfer(ch: Channel, sender: int, msg: bytes, tag: str | None = None) -> Proto[bytes]:
    """One-way message; returns what the peer received."""
    ch[sender].send(msg, tag)
    yield
    return ch[1 - sender].recv(tag)


class SwappedChannel:
    """View of a channel with the party labels exchanged.

    Lets a two-party sub-protocol written with a fixed role for party 0 run
    with party 1 in that role; bytes are still booked to the real sender.
    """

    def __init__(self, inner: Channel):
        self.inner = inner

    def __getitem__(self, party: int) -> Endpoint:
        return self.inner.endpoints[1 - party]

    @property
    def transcript(self) -> Transcript:
        return self.inner.transcript

    def in_phase(self, phase: str):
        return self.inner.in_phase(phase)

    def flush(self) -> None:
        self.inner.flush()
