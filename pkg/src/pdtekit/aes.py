"""AES-128 encryption as a boolean circuit (32 ANDs per S-box, 6400 in total).

The S-box is a Boyar-Peralta style straight-line program: a linear top layer,
a GF(2^4) inversion core and a linear bottom layer. Input groups are
(key, plaintext), 128 bits each; byte ``i`` occupies bits ``8i..8i+7``, least
significant bit first. The output is the ciphertext in the same layout.
"""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path

from .circuit import Builder, Circuit, format_circuit

# (out, a, op, b); op "+" is XOR, "x" AND, "#" XNOR. U0 is the byte's MSB.
_SBOX = """
T1 U0 + U3|T2 U0 + U5|T3 U0 + U6|T4 U3 + U5|T5 U4 + U6|T6 T1 + T5|T7 U1 + U2
T8 U7 + T6|T9 U7 + T7|T10 T6 + T7|T11 U1 + U5|T12 U2 + U5|T13 T3 + T4
T14 T6 + T11|T15 T5 + T11|T16 T5 + T12|T17 T9 + T16|T18 U3 + U7|T19 T7 + T18
T20 T1 + T19|T21 U6 + U7|T22 T7 + T21|T23 T2 + T22|T24 T2 + T10|T25 T20 + T17
T26 T3 + T16|T27 T1 + T12
M1 T13 x T6|M2 T23 x T8|M3 T14 + M1|M4 T19 x U7|M5 M4 + M1|M6 T3 x T16
M7 T22 x T9|M8 T26 + M6|M9 T20 x T17|M10 M9 + M6|M11 T1 x T15|M12 T4 x T27
M13 M12 + M11|M14 T2 x T10|M15 M14 + M11|M16 M3 + M2|M17 M5 + T24|M18 M8 + M7
M19 M10 + M15|M20 M16 + M13|M21 M17 + M15|M22 M18 + M13|M23 M19 + T25
M24 M22 + M23|M25 M22 x M20|M26 M21 + M25|M27 M20 + M21|M28 M23 + M25
M29 M28 x M27|M30 M26 x M24|M37 M21 + M29|M39 M23 + M30
A1 M21 + M25|A2 A1 + M29|A3 A2 x M21|A4 M20 + M29|M38 A3 + A4
B1 M22 + M23|B2 B1 + M29|B3 M20 + M21|B4 B3 + M25|B5 B4 + M29|B6 B2 x B5
B7 B1 + M25|M40 B6 + B7
M41 M38 + M40|M42 M37 + M39|M43 M37 + M38|M44 M39 + M40|M45 M42 + M41
M46 M44 x T6|M47 M40 x T8|M48 M39 x U7|M49 M43 x T16|M50 M38 x T9
M51 M37 x T17|M52 M42 x T15|M53 M45 x T27|M54 M41 x T10|M55 M44 x T13
M56 M40 x T23|M57 M39 x T19|M58 M43 x T3|M59 M38 x T22|M60 M37 x T20
M61 M42 x T1|M62 M45 x T4|M63 M41 x T2
L0 M61 + M62|L1 M50 + M56|L2 M46 + M48|L3 M47 + M55|L4 M54 + M58|L5 M49 + M61
L6 M62 + L5|L7 M46 + L3|L8 M51 + M59|L9 M52 + M53|L10 M53 + L4|L11 M60 + L2
L12 M48 + M51|L13 M50 + L0|L14 M52 + M61|L15 M55 + L1|L16 M56 + L0|L17 M57 + L1
L18 M58 + L8|L19 M63 + L4|L20 L0 + L1|L21 L1 + L7|L22 L3 + L12|L23 L18 + L2
L24 L15 + L9|L25 L6 + L10|L26 L7 + L9|L27 L8 + L10|L28 L11 + L14|L29 L11 + L17
S0 L6 + L24|S1 L16 # L26|S2 L19 # L28|S3 L6 + L21|S4 L20 + L22|S5 L25 + L29
S6 L13 # L27|S7 L6 # L23
"""
SBOX_PROGRAM = [tuple(s.split()) for s in _SBOX.replace("\n", "|").split("|") if s.strip()]
RCON = (0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1B, 0x36)


def sbox_gates(b: Builder, byte: list[int]) -> list[int]:
    """``byte`` and the result are LSB-first wire lists."""
    env = {f"U{i}": byte[7 - i] for i in range(8)}
    for out, x, op, y in SBOX_PROGRAM:
        if op == "+":
            env[out] = b.xor(env[x], env[y])
        elif op == "x":
            env[out] = b.and_(env[x], env[y])
        else:
            env[out] = b.inv(b.xor(env[x], env[y]))
    return [env[f"S{7 - i}"] for i in range(8)]


def _xtime(b: Builder, a: list[int]) -> list[int]:
    hi = a[7]
    return [hi, b.xor(a[0], hi), a[1], b.xor(a[2], hi), b.xor(a[3], hi), a[4], a[5], a[6]]


def _xor_bytes(b: Builder, *bs: list[int]) -> list[int]:
    return [b.xor_many([x[i] for x in bs]) for i in range(8)]


def _add_const(b: Builder, a: list[int], c: int) -> list[int]:
    return [b.inv(a[i]) if (c >> i) & 1 else a[i] for i in range(8)]


@lru_cache(maxsize=None)
def aes128_circuit() -> Circuit:
    b = Builder([128, 128])
    key = [list(range(8 * i, 8 * i + 8)) for i in range(16)]
    pt = [list(range(128 + 8 * i, 128 + 8 * i + 8)) for i in range(16)]
    words = [key[4 * i:4 * i + 4] for i in range(4)]
    for i in range(4, 44):
        tmp = words[i - 1]
        if i % 4 == 0:
            rot = tmp[1:] + tmp[:1]
            tmp = [sbox_gates(b, x) for x in rot]
            tmp[0] = _add_const(b, tmp[0], RCON[i // 4 - 1])
        words.append([_xor_bytes(b, words[i - 4][k], tmp[k]) for k in range(4)])
    rk = [[byte for w in words[4 * r:4 * r + 4] for byte in w] for r in range(11)]
    state = [_xor_bytes(b, pt[i], rk[0][i]) for i in range(16)]
    for rnd in range(1, 11):
        state = [sbox_gates(b, x) for x in state]
        state = [state[(r + 4 * ((c + r) % 4))] for c in range(4) for r in range(4)]
        if rnd < 10:
            mixed = []
            for c in range(4):
                col = state[4 * c:4 * c + 4]
                dbl = [_xtime(b, x) for x in col]
                for r in range(4):
                    a1, a2, a3 = col[(r + 1) % 4], col[(r + 2) % 4], col[(r + 3) % 4]
                    # 2*a0 + 3*a1 + a2 + a3
                    mixed.append(_xor_bytes(b, dbl[r], dbl[(r + 1) % 4], a1, a2, a3))
            state = mixed
        state = [_xor_bytes(b, state[i], rk[rnd][i]) for i in range(16)]
    return b.build([w for byte in state for w in byte])


def write_aes128(path: str | Path) -> None:
    Path(path).write_text(format_circuit(aes128_circuit()))


CIRCUIT_DIR = Path(__file__).with_name("circuits")
AES128_FILE = CIRCUIT_DIR / "aes128.txt"
