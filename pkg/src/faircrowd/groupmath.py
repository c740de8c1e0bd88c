"""Type-III pairing group arithmetic on BLS12-381 (backed by mcl via pymcl).

Group elements are the raw ``pymcl`` objects. Exponents are plain Python
integers reduced modulo :data:`ORDER` at the point of use, so callers can do
exponent algebra with ordinary ``int`` arithmetic. All helpers use
multiplicative notation for every group, matching how the scheme is written:
``mul(x, y)``, ``exp(x, k)``, ``inv(x)``.
"""
from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence, Union

import pymcl

G1 = pymcl.G1
G2 = pymcl.G2
GT = pymcl.GT
Element = Union[pymcl.G1, pymcl.G2, pymcl.GT]

ORDER: int = pymcl.r
SECURITY_BITS = 256

G1_BYTES = 48
G2_BYTES = 96
GT_BYTES = 576
SCALAR_BYTES = 32


class GroupError(Exception):
    pass


class DegenerateOperand(GroupError):
    """Inversion of a zero scalar or of a group identity."""


class MalformedEncoding(GroupError, ValueError):
    pass


class NotInRange(GroupError):
    """No discrete logarithm inside the requested interval."""


def fr(k: int) -> pymcl.Fr:
    return pymcl.Fr(str(k % ORDER))


# -- randomness ---------------------------------------------------------------


class Rng:
    """Randomness handle.

    Unseeded instances draw from the OS CSPRNG. Seeded instances run a
    SHA-256 counter-mode generator so whole simulations replay exactly.
    """

    def __init__(self, seed: int | bytes | str | None = None):
        if seed is None:
            self._key = None
        else:
            if isinstance(seed, int):
                seed = seed.to_bytes((seed.bit_length() + 8) // 8, "big", signed=True)
            elif isinstance(seed, str):
                seed = seed.encode()
            self._key = hashlib.sha256(b"FairCrowd/rng/" + seed).digest()
        self._counter = 0

    @property
    def seeded(self) -> bool:
        return self._key is not None

    def bytes(self, n: int) -> bytes:
        if self._key is None:
            return secrets.token_bytes(n)
        out = bytearray()
        while len(out) < n:
            out += hashlib.sha256(self._key + self._counter.to_bytes(8, "big")).digest()
            self._counter += 1
        return bytes(out[:n])

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection sampling."""
        if n <= 0:
            raise ValueError("upper bound must be positive")
        nbits = n.bit_length()
        nbytes = (nbits + 7) // 8
        mask = (1 << nbits) - 1
        while True:
            k = int.from_bytes(self.bytes(nbytes), "big") & mask
            if k < n:
                return k

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi]."""
        return lo + self.below(hi - lo + 1)

    def fork(self, label: str) -> "Rng":
        """Independent child stream; deterministic iff the parent is seeded."""
        if self._key is None:
            return Rng()
        return Rng(self.bytes(32) + label.encode())


def random_scalar(rng: Rng) -> int:
    return rng.below(ORDER)


def random_nonzero_scalar(rng: Rng) -> int:
    while True:
        k = rng.below(ORDER)
        if k:
            return k


def scalar_inv(k: int) -> int:
    k %= ORDER
    if k == 0:
        raise DegenerateOperand("zero scalar has no inverse")
    return pow(k, -1, ORDER)


# -- group operations -----------------------------------------------------------


def g1_generator() -> pymcl.G1:
    return pymcl.g1


def g2_generator() -> pymcl.G2:
    return pymcl.g2


_GT_ONE = pymcl.pairing(pymcl.G1(), pymcl.g2)


def identity(kind: type) -> Element:
    return _GT_ONE if kind is GT else kind()


def is_identity(x: Element) -> bool:
    return x.isOne() if isinstance(x, GT) else x.isZero()


def mul(x: Element, y: Element) -> Element:
    return x * y if isinstance(x, GT) else x + y


def exp(x: Element, k: int) -> Element:
    return x ** fr(k) if isinstance(x, GT) else x * fr(k)


def inv(x: Element) -> Element:
    if is_identity(x):
        raise DegenerateOperand("identity element has no nontrivial inverse")
    return ~x if isinstance(x, GT) else -x


def div(x: Element, y: Element) -> Element:
    return x / y if isinstance(x, GT) else x - y


def product(items: Iterable[Element]) -> Element:
    return reduce(mul, items)


def multi_exp(bases: Sequence[Element], exps: Sequence[int]) -> Element:
    if len(bases) != len(exps) or not bases:
        raise ValueError("multi_exp needs equal-length, non-empty inputs")
    return product(exp(b, k) for b, k in zip(bases, exps))


def pairing(a: pymcl.G1, b: pymcl.G2) -> pymcl.GT:
    return pymcl.pairing(a, b)


# -- hashing ----------------------------------------------------------------------


def hash_to_g1(data: bytes, dst: bytes = b"FairCrowd/H/") -> pymcl.G1:
    ctr = 0
    while True:
        p = pymcl.G1.hash(dst + ctr.to_bytes(4, "big") + data)
        if not p.isZero():
            return p
        ctr += 1


def hash_to_g2(data: bytes, dst: bytes = b"FairCrowd/H2/") -> pymcl.G2:
    ctr = 0
    while True:
        p = pymcl.G2.hash(dst + ctr.to_bytes(4, "big") + data)
        if not p.isZero():
            return p
        ctr += 1


def hash_to_scalar(data: bytes, dst: bytes = b"FairCrowd/H1/") -> int:
    # 512 bits reduced mod a 255-bit order: bias is ~2^-257
    wide = hashlib.sha256(dst + b"\x00" + data).digest() + hashlib.sha256(dst + b"\x01" + data).digest()
    return int.from_bytes(wide, "big") % ORDER


# -- encodings ----------------------------------------------------------------------

_SIZES = {G1: G1_BYTES, G2: G2_BYTES, GT: GT_BYTES}


def encode_element(x: Element) -> bytes:
    return bytes(x.serialize())


def decode_element(data: bytes, kind: type) -> Element:
    size = _SIZES[kind]
    if len(data) != size:
        raise MalformedEncoding(f"{kind.__name__} encoding must be {size} bytes, got {len(data)}")
    try:
        x = kind.deserialize(bytes(data))
    except (ValueError, RuntimeError) as exc:
        raise MalformedEncoding(f"invalid {kind.__name__} encoding") from exc
    if bytes(x.serialize()) != bytes(data):
        raise MalformedEncoding(f"non-canonical {kind.__name__} encoding")
    return x


def encode_scalar(k: int) -> bytes:
    if not 0 <= k < ORDER:
        raise ValueError("scalar out of range")
    return k.to_bytes(SCALAR_BYTES, "big")


def decode_scalar(data: bytes) -> int:
    if len(data) != SCALAR_BYTES:
        raise MalformedEncoding(f"scalar encoding must be {SCALAR_BYTES} bytes, got {len(data)}")
    k = int.from_bytes(data, "big")
    if k >= ORDER:
        raise MalformedEncoding("scalar not reduced")
    return k


# -- parameters -------------------------------------------------------------------


@dataclass(frozen=True)
class PairingContext:
    p: int
    g: pymcl.G1
    h: pymcl.G2
    gs: tuple  # g_1..g_l in G1
    hs: tuple  # h_1..h_l in G2

    @property
    def l(self) -> int:
        return len(self.gs)


def pairing_context(l: int) -> PairingContext:
    """Deterministic context: per-dimension generators are hashed from fixed labels."""
    if l < 1:
        raise ValueError("dimension must be at least 1")
    gs = tuple(hash_to_g1(f"FairCrowd/g/{j}".encode(), dst=b"FairCrowd/gen/") for j in range(1, l + 1))
    hs = tuple(hash_to_g2(f"FairCrowd/h/{j}".encode(), dst=b"FairCrowd/gen/") for j in range(1, l + 1))
    return PairingContext(p=ORDER, g=pymcl.g1, h=pymcl.g2, gs=gs, hs=hs)
