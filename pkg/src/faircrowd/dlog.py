"""Bounded discrete logarithms in G2.

``dlog_bounded`` is Pollard's lambda (kangaroo) method with one tame and one
wild kangaroo sharing a distinguished-point trap table. ``dlog_bsgs`` is a
deterministic baby-step giant-step used as an independent oracle in tests.
``dlog_table`` trades a one-off precomputation for lookups whose cost does not
depend on where the logarithm falls in the interval.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from math import isqrt

from .groupmath import G2, NotInRange, exp, identity, is_identity

# walks below this bound are cheaper as a linear scan
_LINEAR_CUTOFF = 32
BUDGET_FACTOR = 20


@dataclass
class KangarooStats:
    steps: int
    jump_count: int
    mean_jump: float
    dp_bits: int


def _ceil_sqrt(n: int) -> int:
    r = isqrt(n)
    return r if r * r == n else r + 1


def _selector(encoded: bytes) -> int:
    # middle bytes of the x coordinate, away from any flag bits
    return int.from_bytes(encoded[16:24], "little")


def _walk_salt(target: G2, bound: int) -> int:
    # per-instance walk function; fixed walks correlate step counts across targets
    digest = hashlib.sha256(b"FairCrowd/kangaroo/" + bytes(target.serialize()) + bound.to_bytes(16, "big")).digest()
    return int.from_bytes(digest[:8], "little")


def jump_set(mean: float) -> list[int]:
    """Geometric jump sizes rescaled so their average is close to ``mean``."""
    k = 1
    while (2 ** k - 1) / k < mean:
        k += 1
    scale = mean * k / (2 ** k - 1)
    return [max(1, round(scale * (1 << i))) for i in range(k)]


def kangaroo(base: G2, target: G2, bound: int) -> tuple[int, KangarooStats]:
    """Return ``(x, stats)`` with ``base**x == target`` and ``0 <= x <= bound``.

    Raises :class:`NotInRange` when the walk exceeds ``20 * sqrt(bound)`` total
    steps or when a collision yields a logarithm outside the interval.
    """
    if bound < 0:
        raise ValueError("bound must be non-negative")
    if is_identity(base):
        raise ValueError("base must not be the identity")

    if bound < _LINEAR_CUTOFF:
        cur = identity(G2)
        for x in range(bound + 1):
            if cur == target:
                return x, KangarooStats(steps=x + 1, jump_count=1, mean_jump=1.0, dp_bits=0)
            cur = cur + base
        raise NotInRange(f"no logarithm in [0, {bound}]")

    root = _ceil_sqrt(bound)
    jumps = jump_set(root / 2)
    k = len(jumps)
    jump_pts = [exp(base, s) for s in jumps]
    dp_bits = max(0, (root // 32).bit_length() - 1)
    dp_mask = (1 << dp_bits) - 1
    budget = BUDGET_FACTOR * root

    salt = _walk_salt(target, bound)
    mid = bound // 2
    tame = exp(base, mid)
    dt = mid
    wild = target
    dw = 0
    traps: dict[bytes, tuple[bool, int]] = {}
    steps = 0
    found = None

    while steps < budget:
        s = tame.serialize()
        sel = _selector(s) ^ salt
        if sel & dp_mask == 0:
            hit = traps.get(s)
            if hit is not None and not hit[0]:
                found = dt - hit[1]
                break
            traps[s] = (True, dt)
        i = (sel >> dp_bits) % k
        tame = tame + jump_pts[i]
        dt += jumps[i]

        s = wild.serialize()
        sel = _selector(s) ^ salt
        if sel & dp_mask == 0:
            hit = traps.get(s)
            if hit is not None and hit[0]:
                found = hit[1] - dw
                steps += 1
                break
            traps[s] = (False, dw)
        i = (sel >> dp_bits) % k
        wild = wild + jump_pts[i]
        dw += jumps[i]
        steps += 2

    stats = KangarooStats(steps=steps, jump_count=k, mean_jump=sum(jumps) / k, dp_bits=dp_bits)
    if found is None:
        raise NotInRange(f"step budget {budget} exhausted for bound {bound}")
    if not 0 <= found <= bound or exp(base, found) != target:
        raise NotInRange(f"logarithm outside [0, {bound}]")
    return found, stats


def dlog_bounded(base: G2, target: G2, bound: int) -> int:
    return kangaroo(base, target, bound)[0]


@lru_cache(maxsize=16)
def _baby_steps(base_bytes: bytes, m: int) -> dict:
    base = G2.deserialize(base_bytes)
    table = {}
    cur = identity(G2)
    for j in range(m):
        table.setdefault(bytes(cur.serialize()), j)
        cur = cur + base
    return table


def dlog_bsgs(base: G2, target: G2, bound: int) -> int:
    """Baby-step giant-step over [0, bound] with a ceil(sqrt(bound + 1)) table."""
    if bound < 0:
        raise ValueError("bound must be non-negative")
    if is_identity(base):
        raise ValueError("base must not be the identity")
    m = _ceil_sqrt(bound + 1)
    table = _baby_steps(bytes(base.serialize()), m)
    giant = -(exp(base, m))
    gamma = target
    for i in range(m + 1):
        j = table.get(bytes(gamma.serialize()))
        if j is not None:
            x = i * m + j
            if x <= bound:
                return x
            break
        gamma = gamma + giant
    raise NotInRange(f"no logarithm in [0, {bound}]")


@lru_cache(maxsize=4)
def _full_table(base_bytes: bytes, bound: int) -> dict:
    base = G2.deserialize(base_bytes)
    table = {}
    cur = identity(G2)
    for x in range(bound + 1):
        table.setdefault(_selector(bytes(cur.serialize())), []).append(x)
        cur = cur + base
    return table


def dlog_table(base: G2, target: G2, bound: int) -> int:
    """Lookup in a precomputed table of base^0..base^bound.

    The table costs O(bound) once per (base, bound); each lookup then takes the
    same time whatever the logarithm is. Keys are truncated, so hits are
    confirmed by exponentiation.
    """
    if bound < 0:
        raise ValueError("bound must be non-negative")
    table = _full_table(bytes(base.serialize()), bound)
    for x in table.get(_selector(bytes(target.serialize())), ()):
        if exp(base, x) == target:
            return x
    raise NotInRange(f"no logarithm in [0, {bound}]")


def precompute_table(base: G2, bound: int) -> None:
    _full_table(bytes(base.serialize()), bound)
