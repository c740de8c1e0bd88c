"""Non-interactive consistency proof for one user's report.

The proof shows that the ciphertext, the signature commitment ``W`` and the
re-sign key were all built from the same secrets. Relations, for j = 1..l::

    R1  c_j = h_j^m_j * A^r_j
    R2  d_j = h^r_j
    R3  W   = H(N||A)^tau * prod_j g_j^m_j
    R4  e   = h^tau
    R5  rk  = A^w
    R6  h   = U^w              (w = 1/u)

They are AND-composed under one Fiat-Shamir challenge. ``verify_pk`` also
checks ``e(sigma, h) == e(W, U)``, which pins ``sigma = W^u``.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

from . import groupmath as gm
from .groupmath import G1, G2, Rng
from .pvas import CipherBundle, HomSig, PublicParams, ResignKey, UserKeyPair, task_base

DOMAIN_TAG = b"FairCrowd/PK/v1"


class WitnessMismatch(Exception):
    pass


@dataclass(frozen=True)
class PkStatement:
    params: PublicParams
    N: bytes
    A: G2
    U: G2
    c: tuple
    d: tuple
    W: G1
    e: G2
    sigma: G1
    rk: G2

    @property
    def l(self) -> int:
        return len(self.c)


@dataclass(frozen=True)
class PkWitness:
    m: tuple
    r: tuple
    tau: int
    w: int


@dataclass(frozen=True)
class ConsistencyProof:
    commitments: tuple  # l (R1, G2), l (R2, G2), R3 (G1), R4, R5, R6 (G2)
    challenge: int
    responses: tuple  # m_1..m_l, r_1..r_l, tau, w


def commitment_count(l: int) -> int:
    return 2 * l + 4


def response_count(l: int) -> int:
    return 2 * l + 2


def statement_for(params: PublicParams, N: bytes, A: G2, U: G2, cb: CipherBundle, hs: HomSig,
                  rk: ResignKey) -> PkStatement:
    return PkStatement(params, bytes(N), A, U, tuple(cb.c), tuple(cb.d), hs.W, hs.e, hs.sigma, rk.rk)


def witness_for(user: UserKeyPair, data: Sequence[int], cb: CipherBundle, hs: HomSig) -> PkWitness:
    if cb.r is None or hs.tau is None:
        raise WitnessMismatch("bundle has been stripped of its witness")
    return PkWitness(tuple(data), tuple(cb.r), hs.tau, gm.scalar_inv(user.secret))


def _relations(st: PkStatement):
    """Yield ``(bases, public value, witness indices)`` for each relation, in commitment order."""
    l = st.l
    p = st.params
    hN = task_base(st.N, st.A)
    for j in range(l):
        yield (p.hs[j], st.A), st.c[j], (j, l + j)
    for j in range(l):
        yield (p.h,), st.d[j], (l + j,)
    yield (hN,) + tuple(p.gs[:l]), st.W, (2 * l,) + tuple(range(l))
    yield (p.h,), st.e, (2 * l,)
    yield (st.A,), st.rk, (2 * l + 1,)
    yield (st.U,), p.h, (2 * l + 1,)


def _well_formed(st: PkStatement) -> bool:
    l = st.l
    return (1 <= l == st.params.l and len(st.d) == l
            and all(isinstance(x, G2) for x in st.c + st.d + (st.A, st.U, st.e, st.rk))
            and isinstance(st.W, G1) and isinstance(st.sigma, G1))


def _flatten(vec: PkWitness) -> list[int]:
    return [x % gm.ORDER for x in (*vec.m, *vec.r, vec.tau, vec.w)]


def _lp(data: bytes) -> bytes:
    return struct.pack(">I", len(data)) + data


def challenge(st: PkStatement, commitments: Sequence) -> int:
    parts = [DOMAIN_TAG, struct.pack(">H", st.l), bytes(st.N)]
    parts += [gm.encode_element(x) for x in (st.A, st.U, *st.c, *st.d, st.W, st.e, st.sigma, st.rk)]
    parts += [gm.encode_element(t) for t in commitments]
    return gm.hash_to_scalar(b"".join(_lp(x) for x in parts))


def _eval(bases, idx, values) -> object:
    return gm.multi_exp(bases, [values[i] for i in idx])


def prove(st: PkStatement, wit: PkWitness, rng: Rng) -> ConsistencyProof:
    if not _well_formed(st) or len(wit.m) != st.l or len(wit.r) != st.l:
        raise WitnessMismatch("statement and witness dimensions disagree")
    x = _flatten(wit)
    rels = list(_relations(st))
    for k, (bases, value, idx) in enumerate(rels):
        if _eval(bases, idx, x) != value:
            raise WitnessMismatch(f"relation {k} does not hold for the witness")
    rho = [gm.random_scalar(rng) for _ in x]
    commitments = tuple(_eval(bases, idx, rho) for bases, _, idx in rels)
    c = challenge(st, commitments)
    responses = tuple((rk + c * xk) % gm.ORDER for rk, xk in zip(rho, x))
    return ConsistencyProof(commitments, c, responses)


def check_equations(st: PkStatement, commitments: Sequence, c: int, responses: Sequence[int]) -> bool:
    """Interactive-verifier check: base^s == T * X^c for every relation."""
    rels = list(_relations(st))
    if len(commitments) != len(rels) or len(responses) != response_count(st.l):
        return False
    for (bases, value, idx), t in zip(rels, commitments):
        if type(t) is not type(value):
            return False
        if _eval(bases, idx, responses) != gm.mul(t, gm.exp(value, c)):
            return False
    return True


def pairing_check(st: PkStatement) -> bool:
    return gm.pairing(st.sigma, st.params.h) == gm.pairing(st.W, st.U)


def verify_pk(st: PkStatement, proof: ConsistencyProof) -> bool:
    if not _well_formed(st):
        return False
    if gm.is_identity(st.U) or gm.is_identity(st.A):
        return False
    if len(proof.commitments) != commitment_count(st.l) or len(proof.responses) != response_count(st.l):
        return False
    if not all(0 <= s < gm.ORDER for s in proof.responses) or not 0 <= proof.challenge < gm.ORDER:
        return False
    if challenge(st, proof.commitments) != proof.challenge:
        return False
    if not check_equations(st, proof.commitments, proof.challenge, proof.responses):
        return False
    return pairing_check(st)


def simulate(st: PkStatement, c: int, rng: Rng) -> ConsistencyProof:
    """Honest-verifier simulator: pick responses, then solve for commitments.

    The transcript passes :func:`check_equations` for the programmed challenge
    without any witness.
    """
    responses = tuple(gm.random_scalar(rng) for _ in range(response_count(st.l)))
    commitments = tuple(
        gm.div(_eval(bases, idx, responses), gm.exp(value, c))
        for bases, value, idx in _relations(st)
    )
    return ConsistencyProof(commitments, c, responses)
