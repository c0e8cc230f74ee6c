import pytest

from pdtekit.channel import (
    FRAME_BYTES, LAN, WAN, Channel, NetworkModel, SwappedChannel, exchange, modeled_time,
    parallel, run, transfer,
)
from pdtekit.errors import ChannelClosed, ConfigError, DeliveryError


def test_framing_adds_four_bytes():
    ch = Channel()
    ch[0].send(b"x" * 16)
    ch.flush()
    assert ch.transcript.sent(0, "online") == 16 + FRAME_BYTES == 20
    assert ch[1].recv() == b"x" * 16


def test_empty_payload_still_costs_frame():
    ch = Channel()
    ch[1].send(b"")
    ch.flush()
    assert ch.transcript.sent(1) == 4
    assert ch.transcript.rounds_in("online") == 1


def test_two_sends_one_flush_is_one_round():
    ch = Channel()
    ch[0].send(b"a")
    ch[0].send(b"b")
    ch[1].send(b"c")
    ch.flush()
    assert ch.transcript.rounds_in("online") == 1
    assert [ch[1].recv(), ch[1].recv()] == [b"a", b"b"]


def test_empty_flush_is_not_a_round():
    ch = Channel()
    ch.flush()
    ch.flush()
    assert ch.transcript.rounds_in("online") == 0


def test_recv_before_flush_fails():
    ch = Channel()
    ch[0].send(b"a")
    with pytest.raises(DeliveryError):
        ch[1].recv()


def test_tag_mismatch():
    ch = Channel()
    ch[0].send(b"a", "one")
    ch.flush()
    with pytest.raises(DeliveryError):
        ch[1].recv("two")


def test_ping_pong_rounds():
    def proto(ch):
        msg = b"ping"
        for i in range(5):
            msg = yield from transfer(ch, i % 2, msg)
        return msg

    ch = Channel()
    assert run(ch, proto(ch)) == b"ping"
    assert ch.transcript.rounds_in("online") == 5
    assert ch.transcript.sent() == 5 * 8


def test_parallel_shares_barriers():
    ch = Channel()

    def three(ch, tag):
        for _ in range(3):
            yield from exchange(ch, b"0", b"1", tag)
        return tag

    assert run(ch, parallel(three(ch, "a"), three(ch, "b"))) == ("a", "b")
    assert ch.transcript.rounds_in("online") == 3


def test_phases_are_metered_separately():
    ch = Channel()
    with ch.in_phase("setup"):
        run(ch, transfer(ch, 0, b"abc"))
    run(ch, transfer(ch, 1, b"z"))
    t = ch.transcript
    assert t.sent(0, "setup") == 7 and t.sent(1, "online") == 5
    assert t.rounds_in("setup") == 1 and t.rounds_in("online") == 1
    with pytest.raises(ConfigError):
        with ch.in_phase("bogus"):
            pass


def test_closed_channel():
    ch = Channel()
    ch[1].close()
    with pytest.raises(ChannelClosed):
        ch[0].send(b"x")


def test_modeled_time():
    ch = Channel()
    assert modeled_time(ch.transcript, WAN) == 0
    for _ in range(10):
        run(ch, transfer(ch, 0, b""))
    # 10 rounds of 4-byte frames
    assert modeled_time(ch.transcript, WAN) == pytest.approx(10 * 80 + 320 / 40e6 * 1000)
    nm = NetworkModel(0.0, 8e3)
    ch2 = Channel()
    run(ch2, transfer(ch2, 0, b"\0" * 996))
    # 1000 bytes = 8000 bits over 8 kbit/s
    assert modeled_time(ch2.transcript, nm) == pytest.approx(1000.0)
    assert modeled_time(ch2.transcript, NetworkModel(12.0, 8e3)) == pytest.approx(1012.0)
    assert modeled_time(ch2.transcript, LAN) < 1


def test_network_parse():
    assert NetworkModel.parse("80:40M") == WAN
    assert NetworkModel.parse("0.1ms:1Gbps") == LAN
    for bad in ("80", "x:y", "-1:5", "5:0"):
        with pytest.raises(ConfigError):
            NetworkModel.parse(bad)


def test_csv_rows():
    ch = Channel()
    run(ch, transfer(ch, 0, b"abcd"))
    ch.transcript.add_dealt(1, 100)
    lines = ch.transcript.to_csv().splitlines()
    assert lines[0] == "party,phase,bytes,rounds"
    assert "0,online,8,1" in lines
    assert "1,dealer,100,0" in lines
    assert len(lines) == 1 + 2 * 4


def test_snapshot_since():
    ch = Channel()
    run(ch, transfer(ch, 0, b"a"))
    mark = ch.transcript.snapshot()
    run(ch, transfer(ch, 1, b"bb"))
    d = ch.transcript.since(mark)
    assert d.sent(0) == 0 and d.sent(1) == 6 and d.rounds_in("online") == 1


def test_swapped_channel_books_real_sender():
    ch = Channel()
    sw = SwappedChannel(ch)
    out = run(ch, transfer(sw, 0, b"hey"))
    assert out == b"hey"
    assert ch.transcript.sent(1) == 7 and ch.transcript.sent(0) == 0
