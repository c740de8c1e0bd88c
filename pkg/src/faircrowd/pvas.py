"""Private and verifiable aggregate statistics.

Users encrypt data vectors under the customer's key with exponential ElGamal
in G2 and sign them with a homomorphic signature in G1. The server combines
both under a public linear function and re-signs the aggregate through the
users' re-sign keys. Only the customer can decrypt the weighted sums and check
them against the aggregate signature.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from . import groupmath as gm
from .dlog import dlog_bounded, dlog_table
from .groupmath import G1, G2, GT, NotInRange, PairingContext, Rng


class PvasError(Exception):
    pass


class UnsupportedParameter(PvasError):
    pass


class DataOutOfBounds(PvasError):
    pass


class DimensionMismatch(PvasError):
    pass


class EmptyInput(PvasError):
    pass


class DecryptionFailed(NotInRange):
    def __init__(self, dimension: int, bound: int):
        super().__init__(f"dimension {dimension}: no plaintext in [0, {bound}]")
        self.dimension = dimension
        self.bound = bound


DEFAULT_VALUE_BOUND = 2 ** 20
DEFAULT_AGGREGATE_BOUND = 2 ** 32


@dataclass(frozen=True)
class PublicParams:
    ctx: PairingContext
    security: int = gm.SECURITY_BITS
    value_bound: int = DEFAULT_VALUE_BOUND  # each m_ij < value_bound
    aggregate_bound: int = DEFAULT_AGGREGATE_BOUND  # each weighted sum < aggregate_bound

    @property
    def l(self) -> int:
        return self.ctx.l

    @property
    def h(self) -> G2:
        return self.ctx.h

    @property
    def hs(self) -> tuple:
        return self.ctx.hs

    @property
    def gs(self) -> tuple:
        return self.ctx.gs


def par_gen(security: int = 256, l: int = 1, *, value_bound: int = DEFAULT_VALUE_BOUND,
            aggregate_bound: int = DEFAULT_AGGREGATE_BOUND) -> PublicParams:
    if security != gm.SECURITY_BITS:
        raise UnsupportedParameter(f"only {gm.SECURITY_BITS}-bit parameters are supported, got {security}")
    if l < 1:
        raise UnsupportedParameter("dimension must be at least 1")
    if value_bound < 1 or aggregate_bound < 1:
        raise UnsupportedParameter("plaintext bounds must be positive")
    return PublicParams(gm.pairing_context(l), security, value_bound, aggregate_bound)


# -- keys -----------------------------------------------------------------------


@dataclass(frozen=True)
class KeyPair:
    secret: int
    public: G2


class CustomerKeyPair(KeyPair):
    pass


class UserKeyPair(KeyPair):
    pass


class ServerKeyPair(KeyPair):
    pass


def _keygen(cls, params: PublicParams, rng: Rng):
    x = gm.random_nonzero_scalar(rng)
    return cls(x, gm.exp(params.h, x))


def keygen_customer(params: PublicParams, rng: Rng) -> CustomerKeyPair:
    return _keygen(CustomerKeyPair, params, rng)


def keygen_user(params: PublicParams, rng: Rng) -> UserKeyPair:
    return _keygen(UserKeyPair, params, rng)


def keygen_server(params: PublicParams, rng: Rng) -> ServerKeyPair:
    return _keygen(ServerKeyPair, params, rng)


# -- per-user artefacts -------------------------------------------------------------


@dataclass(frozen=True)
class CipherBundle:
    c: tuple  # c_ij = h_j^m_ij * A^r_ij
    d: tuple  # d_ij = h^r_ij
    r: tuple | None = None  # user-local witness, never transmitted

    def public(self) -> "CipherBundle":
        return replace(self, r=None)

    @property
    def l(self) -> int:
        return len(self.c)


@dataclass(frozen=True)
class HomSig:
    sigma: G1  # W^u
    e: G2  # h^tau
    W: G1  # H(N||A)^tau * prod g_j^m_ij
    tau: int | None = None  # user-local witness

    def public(self) -> "HomSig":
        return replace(self, tau=None)


@dataclass(frozen=True)
class ResignKey:
    rk: G2  # A^(1/u)


@dataclass(frozen=True)
class AggregateBundle:
    c: tuple
    d: tuple
    sigma: GT
    e: G2

    @property
    def l(self) -> int:
        return len(self.c)


def task_base(N: bytes, A: G2) -> G1:
    """H(N || A); the key is fixed-width so the concatenation is unambiguous."""
    return gm.hash_to_g1(bytes(N) + gm.encode_element(A))


def check_data(params: PublicParams, data: Sequence[int]) -> tuple:
    if len(data) != params.l:
        raise DimensionMismatch(f"expected {params.l} values, got {len(data)}")
    for j, m in enumerate(data):
        if not isinstance(m, int) or not 0 <= m < params.value_bound:
            raise DataOutOfBounds(f"value {m!r} at dimension {j} outside [0, {params.value_bound})")
    return tuple(data)


def sig_enc(params: PublicParams, user: UserKeyPair, A: G2, N: bytes, data: Sequence[int],
            rng: Rng) -> tuple[CipherBundle, HomSig, ResignKey]:
    """Encrypt, sign and derive the re-sign key for one user's data vector.

    The returned bundle and signature keep their witnesses (``r``, ``tau``);
    call ``.public()`` before handing them to anyone else.
    """
    m = check_data(params, data)
    if gm.is_identity(A):
        raise PvasError("customer public key is the identity")
    h = params.h
    r = tuple(gm.random_scalar(rng) for _ in m)
    c = tuple(gm.mul(gm.exp(hj, mj), gm.exp(A, rj)) for hj, mj, rj in zip(params.hs, m, r))
    d = tuple(gm.exp(h, rj) for rj in r)

    tau = gm.random_scalar(rng)
    W = gm.exp(task_base(N, A), tau)
    for gj, mj in zip(params.gs, m):
        if mj:
            W = gm.mul(W, gm.exp(gj, mj))
    sigma = gm.exp(W, user.secret)
    e = gm.exp(h, tau)
    rk = gm.exp(A, gm.scalar_inv(user.secret))
    return CipherBundle(c, d, r), HomSig(sigma, e, W, tau), ResignKey(rk)


# -- server side --------------------------------------------------------------------


def aggregate(params: PublicParams, server: ServerKeyPair,
              inputs: Sequence[tuple[CipherBundle, HomSig, ResignKey]],
              weights: Sequence[int]) -> AggregateBundle:
    if not inputs:
        raise EmptyInput("nothing to aggregate")
    if len(inputs) != len(weights):
        raise DimensionMismatch(f"{len(inputs)} inputs but {len(weights)} weights")
    l = params.l
    for cb, hs, _ in inputs:
        if cb.r is not None or hs.tau is not None:
            raise PvasError("aggregate takes transmitted bundles only (witness fields present)")
        if len(cb.c) != l or len(cb.d) != l:
            raise DimensionMismatch(f"bundle dimension {len(cb.c)} != {l}")

    ws = [w % gm.ORDER for w in weights]
    c = tuple(gm.multi_exp([cb.c[j] for cb, _, _ in inputs], ws) for j in range(l))
    d = tuple(gm.multi_exp([cb.d[j] for cb, _, _ in inputs], ws) for j in range(l))
    v = server.secret
    # e(sigma_i, rk_i)^(v w_i) == e(sigma_i^(v w_i), rk_i); the G1 exponent is cheaper
    sigma = gm.product(gm.pairing(gm.exp(hs.sigma, v * w), rk.rk) for (_, hs, rk), w in zip(inputs, ws))
    e = gm.multi_exp([hs.e for _, hs, _ in inputs], [v * w for w in ws])
    return AggregateBundle(c, d, sigma, e)


def weighted_bound(params: PublicParams, weights: Sequence[int]) -> int:
    """Largest weighted sum reachable with in-bound data, capped at the configured bound."""
    return min(params.aggregate_bound - 1, (params.value_bound - 1) * sum(weights))


# -- customer side ------------------------------------------------------------------


DLOG_METHODS = {"kangaroo": dlog_bounded, "table": dlog_table}


def decrypt(params: PublicParams, customer: CustomerKeyPair, agg: AggregateBundle,
            bound: int | None = None, method: str = "kangaroo") -> list[int]:
    """Recover each weighted sum in [0, bound].

    ``method="table"`` needs an O(bound) table per dimension (built on first
    use, then cached) and makes the cost independent of the plaintext.
    """
    solve = DLOG_METHODS[method]
    if agg.l != params.l:
        raise DimensionMismatch(f"aggregate dimension {agg.l} != {params.l}")
    if bound is None:
        bound = params.aggregate_bound - 1
    neg_a = -customer.secret
    out = []
    for j, (cj, dj, hj) in enumerate(zip(agg.c, agg.d, params.hs)):
        target = gm.mul(cj, gm.exp(dj, neg_a))
        try:
            out.append(solve(hj, target, bound))
        except NotInRange as exc:
            raise DecryptionFailed(j, bound) from exc
    return out


def verify(params: PublicParams, customer: CustomerKeyPair, server_public: G2, N: bytes,
           agg: AggregateBundle, result: Sequence[int]) -> bool:
    """Designated-verifier check of the aggregate signature against claimed sums."""
    if len(result) != params.l or agg.l != params.l:
        return False
    a = customer.secret
    # e(H, e)^a * e(prod g_j^m_j, Lambda)^a with the exponent moved into G1
    lhs_h = gm.exp(task_base(N, customer.public), a)
    msg = gm.multi_exp(list(params.gs), [a * m for m in result])
    expected = gm.mul(gm.pairing(lhs_h, agg.e), gm.pairing(msg, server_public))
    return agg.sigma == expected
