"""Property-based checks over randomly generated inputs."""
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from faircrowd import codec, contract as ct, pvas
from faircrowd import groupmath as gm
from faircrowd.groupmath import Rng

PARAMS = pvas.par_gen(256, 2, value_bound=2 ** 16)
SETTINGS = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@SETTINGS
@given(st.lists(st.tuples(st.integers(0, 2 ** 16 - 1), st.integers(0, 2 ** 16 - 1)), min_size=1, max_size=6),
       st.data(), st.integers(0, 2 ** 32))
def test_decrypt_equals_weighted_sum(data, draw, seed):
    weights = draw.draw(st.lists(st.integers(0, 255), min_size=len(data), max_size=len(data)))
    rng = Rng(seed)
    customer = pvas.keygen_customer(PARAMS, rng)
    server = pvas.keygen_server(PARAMS, rng)
    sent = []
    for m in data:
        u = pvas.keygen_user(PARAMS, rng)
        cb, hs, rk = pvas.sig_enc(PARAMS, u, customer.public, b"N", list(m), rng)
        sent.append((cb.public(), hs.public(), rk))
    agg = pvas.aggregate(PARAMS, server, sent, weights)
    got = pvas.decrypt(PARAMS, customer, agg, pvas.weighted_bound(PARAMS, weights))
    assert got == [sum(w * m[j] for m, w in zip(data, weights)) for j in range(2)]
    assert pvas.verify(PARAMS, customer, server.public, b"N", agg, got)


@SETTINGS
@given(st.integers(1, 2 ** 40), st.integers(1, 10 ** 6), st.lists(st.text(max_size=6), min_size=1, max_size=9))
def test_equal_split_is_exact(total_seed, total, names):
    ids = sorted(set(names))
    split = ct.equal_split(total, ids)
    assert sum(split.values()) == total
    assert max(split.values()) - min(split.values()) <= 1
    assert [split[u] for u in ids] == sorted(split.values(), reverse=True)


@SETTINGS
@given(st.binary(max_size=200))
def test_decoders_never_crash_on_garbage(blob):
    from faircrowd import chain as ch
    from faircrowd import sigma
    for kind in (pvas.CipherBundle, pvas.HomSig, pvas.AggregateBundle, sigma.ConsistencyProof,
                 ch.Transaction, ct.Ledger):
        try:
            codec.decode(blob, kind)
        except (codec.CodecError, gm.MalformedEncoding):
            pass


@SETTINGS
@given(st.integers(0, gm.ORDER - 1))
def test_scalar_encoding_round_trip(k):
    assert gm.decode_scalar(gm.encode_scalar(k)) == k
