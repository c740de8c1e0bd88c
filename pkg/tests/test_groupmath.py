import pytest

from faircrowd import groupmath as gm
from faircrowd.groupmath import G1, G2, GT, Rng


def test_bilinearity(rng):
    g, h = gm.g1_generator(), gm.g2_generator()
    base = gm.pairing(g, h)
    for _ in range(5):
        s, t = gm.random_scalar(rng), gm.random_scalar(rng)
        assert gm.pairing(gm.exp(g, s), gm.exp(h, t)) == gm.exp(base, s * t % gm.ORDER)


def test_non_degenerate():
    assert not gm.is_identity(gm.pairing(gm.g1_generator(), gm.g2_generator()))


def test_exponent_composition(rng):
    x = gm.hash_to_g2(b"x")
    s, t = gm.random_scalar(rng), gm.random_scalar(rng)
    assert gm.exp(gm.exp(x, s), t) == gm.exp(x, s * t % gm.ORDER)


def test_large_and_negative_exponents_reduce():
    x = gm.hash_to_g1(b"x")
    assert gm.exp(x, gm.ORDER + 5) == gm.exp(x, 5)
    assert gm.exp(x, -1) == gm.inv(x)


@pytest.mark.parametrize("kind", [G1, G2, GT])
def test_identity_behaviour(kind):
    one = gm.identity(kind)
    assert gm.is_identity(one)
    with pytest.raises(gm.DegenerateOperand):
        gm.inv(one)


def test_scalar_inverse(rng):
    k = gm.random_nonzero_scalar(rng)
    assert k * gm.scalar_inv(k) % gm.ORDER == 1
    with pytest.raises(gm.DegenerateOperand):
        gm.scalar_inv(0)


@pytest.mark.parametrize("kind,make", [
    (G1, lambda i: gm.hash_to_g1(bytes([i]))),
    (G2, lambda i: gm.hash_to_g2(bytes([i]))),
    (GT, lambda i: gm.pairing(gm.hash_to_g1(bytes([i])), gm.g2_generator())),
])
def test_encoding_round_trip(kind, make):
    for i in range(20):
        x = make(i)
        data = gm.encode_element(x)
        assert len(data) == gm._SIZES[kind]
        assert gm.decode_element(data, kind) == x


def test_decode_rejects_bad_input():
    good = gm.encode_element(gm.hash_to_g2(b"a"))
    with pytest.raises(gm.MalformedEncoding):
        gm.decode_element(good[:-1], G2)
    with pytest.raises(gm.MalformedEncoding):
        gm.decode_element(b"\xff" * 96, G2)
    with pytest.raises(gm.MalformedEncoding):
        gm.decode_scalar(gm.ORDER.to_bytes(32, "big"))


def test_hashes_are_deterministic_and_domain_separated():
    assert gm.hash_to_g1(b"m") == gm.hash_to_g1(b"m")
    assert gm.hash_to_g1(b"m") != gm.hash_to_g1(b"m", dst=b"other")
    assert gm.hash_to_scalar(b"m") == gm.hash_to_scalar(b"m") < gm.ORDER


def test_rng_determinism_and_forks():
    a, b = Rng(7), Rng(7)
    assert a.bytes(40) == b.bytes(40)
    assert Rng(7).fork("x").below(10 ** 30) == Rng(7).fork("x").below(10 ** 30)
    assert Rng(7).fork("x").bytes(16) != Rng(7).fork("y").bytes(16)
    assert Rng("seed").seeded and not Rng().seeded
    r = Rng(3)
    assert all(5 <= r.randint(5, 9) <= 9 for _ in range(200))


def test_pairing_context_generators_distinct():
    ctx = gm.pairing_context(4)
    assert ctx.l == 4
    assert len({gm.encode_element(x) for x in ctx.gs + ctx.hs}) == 8
    assert gm.pairing_context(4) == ctx
