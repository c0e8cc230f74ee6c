"""Paillier additively homomorphic encryption.

Encryption is ``(1+N)^x * r^N mod N^2``; decryption uses Euler's totient::

    x = ((c^phi mod N^2) - 1) / N * phi^-1 mod N

An optional CRT path (:func:`decrypt_crt`) gives the same result faster and is
tested against the direct formula.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import gmpy2

from .errors import KeyMismatch, PlaintextOutOfRange


@dataclass(frozen=True)
class PublicKey:
    n: int
    nsq: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "nsq", self.n * self.n)

    @property
    def bits(self) -> int:
        return self.n.bit_length()


@dataclass(frozen=True)
class PaillierKeypair:
    pk: PublicKey
    p: int
    q: int
    phi: int
    phi_inv: int

    @property
    def n(self) -> int:
        return self.pk.n

    @classmethod
    def from_primes(cls, p: int, q: int) -> "PaillierKeypair":
        """Build a keypair from given primes (test keys such as p=5, q=7)."""
        if p == q or not (gmpy2.is_prime(p) and gmpy2.is_prime(q)):
            raise ValueError("p and q must be distinct primes")
        n = p * q
        phi = (p - 1) * (q - 1)
        if gmpy2.gcd(n, phi) != 1:
            raise ValueError("gcd(N, phi(N)) != 1")
        return cls(PublicKey(n), p, q, phi, int(gmpy2.invert(phi, n)))


@dataclass(frozen=True)
class Ciphertext:
    value: int
    pk: PublicKey


def _random_prime(bits: int, rng: random.Random) -> int:
    while True:
        cand = rng.getrandbits(bits) | (1 << (bits - 1)) | (1 << (bits - 2)) | 1
        p = int(gmpy2.next_prime(cand - 2))
        if p.bit_length() == bits:
            return p


def keygen(bitlen: int = 2048, rng: random.Random | None = None) -> PaillierKeypair:
    if bitlen < 16:
        raise ValueError("modulus must have at least 16 bits")
    rng = rng or random.SystemRandom()
    half = bitlen // 2
    while True:
        p = _random_prime(half, rng)
        q = _random_prime(bitlen - half, rng)
        if p == q or (p * q).bit_length() != bitlen:
            continue
        try:
            return PaillierKeypair.from_primes(p, q)
        except ValueError:
            continue


def random_unit(n: int, rng: random.Random) -> int:
    """Uniform element of Z*_n by rejection."""
    while True:
        r = rng.randrange(1, n)
        if gmpy2.gcd(r, n) == 1:
            return r


def encrypt_raw(pk: PublicKey, x: int, r: int) -> int:
    # (1+N)^x = 1 + xN mod N^2
    return int((1 + x * pk.n) * gmpy2.powmod(r, pk.n, pk.nsq) % pk.nsq)


def encrypt(pk: PublicKey, x: int, rng: random.Random, r: int | None = None) -> Ciphertext:
    if not 0 <= x < pk.n:
        raise PlaintextOutOfRange(f"plaintext must lie in [0, {pk.n})")
    if r is None:
        r = random_unit(pk.n, rng)
    return Ciphertext(encrypt_raw(pk, x, r), pk)


def decrypt_raw(sk: PaillierKeypair, c: int) -> int:
    n, nsq = sk.pk.n, sk.pk.nsq
    u = int(gmpy2.powmod(c, sk.phi, nsq))
    return (u - 1) // n * sk.phi_inv % n


def decrypt(sk: PaillierKeypair, c: Ciphertext | int) -> int:
    if isinstance(c, Ciphertext):
        if c.pk != sk.pk:
            raise KeyMismatch("ciphertext under a different key")
        c = c.value
    return decrypt_raw(sk, c)


def decrypt_crt(sk: PaillierKeypair, c: Ciphertext | int) -> int:
    """Decryption via the Chinese remainder theorem on p^2 and q^2."""
    if isinstance(c, Ciphertext):
        if c.pk != sk.pk:
            raise KeyMismatch("ciphertext under a different key")
        c = c.value
    p, q, n = sk.p, sk.q, sk.pk.n
    out = []
    for pr in (p, q):
        prsq = pr * pr
        u = int(gmpy2.powmod(c % prsq, pr - 1, prsq))
        # L_p(u) / L_p(g^(p-1)) with g = 1+N: L_p((1+N)^(p-1)) = (p-1) * N / p mod p
        lp = (u - 1) // pr
        h = int(gmpy2.invert(((pr - 1) * (n // pr)) % pr, pr))
        out.append(lp * h % pr)
    mp, mq = out
    # combine
    return int((mp + p * ((mq - mp) * gmpy2.invert(p, q) % q)) % n)


def hom_add(c1: Ciphertext, c2: Ciphertext) -> Ciphertext:
    if c1.pk != c2.pk:
        raise KeyMismatch("ciphertexts under different keys")
    return Ciphertext(c1.value * c2.value % c1.pk.nsq, c1.pk)


def hom_scale(c: Ciphertext, a: int) -> Ciphertext:
    return Ciphertext(int(gmpy2.powmod(c.value, a % c.pk.n, c.pk.nsq)), c.pk)


def ciphertext_bytes(pk: PublicKey) -> int:
    return (pk.nsq.bit_length() + 7) // 8
