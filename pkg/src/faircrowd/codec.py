"""Canonical binary encodings.

Every encoding is ``b"FC" | version | type tag`` followed by the type's fields
in a fixed order. Group elements and scalars are fixed width, lists carry a
16-bit count and byte strings a 32-bit length. There is no self-describing
container: a decoder must be told what type to expect.

Modules register their own record types with :func:`register`; this module
registers the group elements and the scheme's artefacts itself.
"""
from __future__ import annotations

import struct
from typing import Any, Callable

from . import groupmath as gm
from .groupmath import G1, G2, GT, MalformedEncoding
from .pvas import (AggregateBundle, CipherBundle, CustomerKeyPair, HomSig, KeyPair, ResignKey,
                   ServerKeyPair, UserKeyPair)
from .sigma import ConsistencyProof, commitment_count, response_count

MAGIC = b"FC"
VERSION = 1
HEADER_BYTES = 4


class CodecError(Exception):
    pass


class VersionMismatch(CodecError):
    pass


class SecretFieldPresent(CodecError):
    pass


__all__ = ["MalformedEncoding", "VersionMismatch", "SecretFieldPresent", "encode", "decode",
           "register", "Writer", "Reader", "manifest"]


class Writer:
    def __init__(self):
        self._parts: list[bytes] = []

    def raw(self, b: bytes) -> "Writer":
        self._parts.append(bytes(b))
        return self

    def u8(self, x: int) -> "Writer":
        return self.raw(struct.pack(">B", x))

    def u16(self, x: int) -> "Writer":
        return self.raw(struct.pack(">H", x))

    def u32(self, x: int) -> "Writer":
        return self.raw(struct.pack(">I", x))

    def u64(self, x: int) -> "Writer":
        if x < 0:
            raise CodecError("negative integer in unsigned field")
        return self.raw(struct.pack(">Q", x))

    def blob(self, b: bytes) -> "Writer":
        return self.u32(len(b)).raw(b)

    def text(self, s: str) -> "Writer":
        return self.blob(s.encode())

    def elem(self, x) -> "Writer":
        return self.raw(gm.encode_element(x))

    def elems(self, xs) -> "Writer":
        self.u16(len(xs))
        for x in xs:
            self.elem(x)
        return self

    def scalar(self, k: int) -> "Writer":
        return self.raw(gm.encode_scalar(k))

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    def __init__(self, data: bytes):
        self._data = memoryview(bytes(data))
        self._pos = 0

    def raw(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise MalformedEncoding("truncated buffer")
        out = bytes(self._data[self._pos:self._pos + n])
        self._pos += n
        return out

    def u8(self) -> int:
        return self.raw(1)[0]

    def u16(self) -> int:
        return struct.unpack(">H", self.raw(2))[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.raw(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.raw(8))[0]

    def blob(self) -> bytes:
        return self.raw(self.u32())

    def text(self) -> str:
        try:
            return self.blob().decode()
        except UnicodeDecodeError as exc:
            raise MalformedEncoding("invalid utf-8") from exc

    def elem(self, kind: type):
        return gm.decode_element(self.raw(gm._SIZES[kind]), kind)

    def elems(self, kind: type) -> tuple:
        return tuple(self.elem(kind) for _ in range(self.u16()))

    def scalar(self) -> int:
        return gm.decode_scalar(self.raw(gm.SCALAR_BYTES))

    def done(self) -> None:
        if self._pos != len(self._data):
            raise MalformedEncoding(f"{len(self._data) - self._pos} trailing bytes")


_BY_TYPE: dict[type, tuple[int, Callable]] = {}
_BY_TAG: dict[int, tuple[type, Callable]] = {}


def register(cls: type, tag: int, enc: Callable[[Writer, Any], None], dec: Callable[[Reader], Any]) -> None:
    if tag in _BY_TAG and _BY_TAG[tag][0] is not cls:
        raise CodecError(f"tag {tag:#x} already registered")
    _BY_TYPE[cls] = (tag, enc)
    _BY_TAG[tag] = (cls, dec)


def write_value(w: Writer, value: Any) -> None:
    """Nested encoding without the header."""
    _, enc = _lookup(type(value))
    enc(w, value)


def read_value(r: Reader, cls: type) -> Any:
    tag, _ = _lookup(cls)
    return _BY_TAG[tag][1](r)


def _lookup(cls: type):
    for klass in cls.__mro__:
        if klass in _BY_TYPE:
            return _BY_TYPE[klass]
    raise CodecError(f"no encoding registered for {cls.__name__}")


def encode(value: Any) -> bytes:
    tag, enc = _lookup(type(value))
    w = Writer().raw(MAGIC).u8(VERSION).u8(tag)
    enc(w, value)
    return w.getvalue()


def decode(data: bytes, expected: type) -> Any:
    tag, _ = _lookup(expected)
    if len(data) < HEADER_BYTES or data[:2] != MAGIC:
        raise MalformedEncoding("missing header")
    if data[2] != VERSION:
        raise VersionMismatch(f"format version {data[2]} != {VERSION}")
    if data[3] != tag:
        raise MalformedEncoding(f"type tag {data[3]:#x} is not {expected.__name__}")
    r = Reader(data[HEADER_BYTES:])
    value = _BY_TAG[tag][1](r)
    r.done()
    return value


# -- scheme artefacts -----------------------------------------------------------


def _enc_cipher(w: Writer, cb: CipherBundle) -> None:
    if cb.r is not None:
        raise SecretFieldPresent("CipherBundle still carries its encryption randomness")
    if len(cb.c) != len(cb.d):
        raise CodecError("c and d lengths differ")
    w.elems(cb.c).elems(cb.d)


def _dec_cipher(r: Reader) -> CipherBundle:
    c, d = r.elems(G2), r.elems(G2)
    if len(c) != len(d) or not c:
        raise MalformedEncoding("ciphertext dimensions disagree")
    return CipherBundle(c, d)


def _enc_homsig(w: Writer, hs: HomSig) -> None:
    if hs.tau is not None:
        raise SecretFieldPresent("HomSig still carries tau")
    w.elem(hs.sigma).elem(hs.e).elem(hs.W)


def _enc_agg(w: Writer, agg: AggregateBundle) -> None:
    w.elems(agg.c).elems(agg.d).elem(agg.sigma).elem(agg.e)


def _dec_agg(r: Reader) -> AggregateBundle:
    c, d = r.elems(G2), r.elems(G2)
    if len(c) != len(d) or not c:
        raise MalformedEncoding("aggregate dimensions disagree")
    return AggregateBundle(c, d, r.elem(GT), r.elem(G2))


def _enc_proof(w: Writer, pf: ConsistencyProof) -> None:
    l = (len(pf.responses) - 2) // 2
    if len(pf.commitments) != commitment_count(l) or len(pf.responses) != response_count(l):
        raise CodecError("proof shape inconsistent")
    w.u16(l)
    for t in pf.commitments:
        w.elem(t)
    w.scalar(pf.challenge)
    for s in pf.responses:
        w.scalar(s)


def _dec_proof(r: Reader) -> ConsistencyProof:
    l = r.u16()
    if l == 0:
        raise MalformedEncoding("proof dimension 0")
    kinds = [G2] * (2 * l) + [G1, G2, G2, G2]
    commitments = tuple(r.elem(k) for k in kinds)
    c = r.scalar()
    responses = tuple(r.scalar() for _ in range(response_count(l)))
    return ConsistencyProof(commitments, c, responses)


def _refuse_secret(w: Writer, kp: KeyPair) -> None:
    raise SecretFieldPresent(f"{type(kp).__name__} holds a secret key; encode .public instead")


def _refuse_secret_decode(r: Reader) -> None:
    raise SecretFieldPresent("key pairs have no public encoding")


register(G1, 0x01, lambda w, x: w.elem(x), lambda r: r.elem(G1))
register(G2, 0x02, lambda w, x: w.elem(x), lambda r: r.elem(G2))
register(GT, 0x03, lambda w, x: w.elem(x), lambda r: r.elem(GT))
register(CipherBundle, 0x10, _enc_cipher, _dec_cipher)
register(HomSig, 0x11, _enc_homsig, lambda r: HomSig(r.elem(G1), r.elem(G2), r.elem(G1)))
register(ResignKey, 0x12, lambda w, x: w.elem(x.rk), lambda r: ResignKey(r.elem(G2)))
register(AggregateBundle, 0x13, _enc_agg, _dec_agg)
register(ConsistencyProof, 0x14, _enc_proof, _dec_proof)
for _cls, _tag in ((KeyPair, 0x18), (CustomerKeyPair, 0x19), (UserKeyPair, 0x1A), (ServerKeyPair, 0x1B)):
    register(_cls, _tag, _refuse_secret, _refuse_secret_decode)


def manifest(l: int) -> dict[str, int]:
    """Encoded byte length of each fixed-shape type at dimension ``l`` (headers included)."""
    H, E1, E2, ET, S = HEADER_BYTES, gm.G1_BYTES, gm.G2_BYTES, gm.GT_BYTES, gm.SCALAR_BYTES
    return {
        "version": VERSION,
        "G1": H + E1,
        "G2": H + E2,
        "GT": H + ET,
        "Scalar": S,
        "CipherBundle": H + 2 * (2 + l * E2),
        "HomSig": H + 2 * E1 + E2,
        "ResignKey": H + E2,
        "AggregateBundle": H + 2 * (2 + l * E2) + ET + E2,
        "ConsistencyProof": H + 2 + 2 * l * E2 + E1 + 3 * E2 + S + response_count(l) * S,
    }
