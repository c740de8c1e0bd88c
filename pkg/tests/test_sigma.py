import pytest

from faircrowd import groupmath as gm
from faircrowd import pvas, sigma
from faircrowd.groupmath import Rng


@pytest.fixture
def honest(params3, rng):
    customer = pvas.keygen_customer(params3, rng)
    user = pvas.keygen_user(params3, rng)
    data = [3, 1, 4]
    N = b"task-sigma"
    cb, hs, rk = pvas.sig_enc(params3, user, customer.public, N, data, rng)
    st = sigma.statement_for(params3, N, customer.public, user.public, cb, hs, rk)
    wit = sigma.witness_for(user, data, cb, hs)
    return st, wit, sigma.prove(st, wit, rng)


def test_completeness(honest):
    st, _, proof = honest
    assert sigma.verify_pk(st, proof)
    assert len(proof.commitments) == sigma.commitment_count(3)
    assert len(proof.responses) == sigma.response_count(3)


def test_proof_field_mutations_rejected(honest):
    st, _, proof = honest
    for k in range(len(proof.responses)):
        rs = list(proof.responses)
        rs[k] = (rs[k] + 1) % gm.ORDER
        assert not sigma.verify_pk(st, sigma.ConsistencyProof(proof.commitments, proof.challenge, tuple(rs)))
    for k in range(len(proof.commitments)):
        cs = list(proof.commitments)
        cs[k] = gm.mul(cs[k], cs[k])
        assert not sigma.verify_pk(st, sigma.ConsistencyProof(tuple(cs), proof.challenge, proof.responses))
    bumped = sigma.ConsistencyProof(proof.commitments, (proof.challenge + 1) % gm.ORDER, proof.responses)
    assert not sigma.verify_pk(st, bumped)


@pytest.mark.parametrize("field", ["c", "d", "W", "e", "sigma", "rk", "U", "A", "N"])
def test_statement_mutations_rejected(honest, field):
    from dataclasses import replace
    st, _, proof = honest
    junk2 = gm.hash_to_g2(b"junk")
    junk1 = gm.hash_to_g1(b"junk")
    value = {"c": st.c[:1] + (junk2,) + st.c[2:], "d": (junk2,) + st.d[1:], "W": junk1, "e": junk2,
             "sigma": junk1, "rk": junk2, "U": junk2, "A": junk2, "N": b"other"}[field]
    mutated = replace(st, **{field: value})
    assert sigma.challenge(mutated, proof.commitments) != proof.challenge
    assert not sigma.verify_pk(mutated, proof)


def test_wrong_witness_refused(honest, rng):
    from dataclasses import replace
    st, wit, _ = honest
    with pytest.raises(sigma.WitnessMismatch):
        sigma.prove(st, replace(wit, m=(wit.m[0] + 1,) + wit.m[1:]), rng)
    with pytest.raises(sigma.WitnessMismatch):
        sigma.prove(st, replace(wit, w=(wit.w + 1) % gm.ORDER), rng)


def test_sigma_must_match_W(params1, rng):
    # a user who signs a different W than it proves is caught by the pairing check
    customer = pvas.keygen_customer(params1, rng)
    user = pvas.keygen_user(params1, rng)
    cb, hs, rk = pvas.sig_enc(params1, user, customer.public, b"N", [5], rng)
    _, other, _ = pvas.sig_enc(params1, user, customer.public, b"N", [6], rng)
    forged = pvas.HomSig(other.sigma, hs.e, hs.W, hs.tau)
    st = sigma.statement_for(params1, b"N", customer.public, user.public, cb, forged, rk)
    proof = sigma.prove(st, sigma.witness_for(user, [5], cb, forged), rng)
    assert sigma.check_equations(st, proof.commitments, proof.challenge, proof.responses)
    assert not sigma.verify_pk(st, proof)


def test_proof_bound_to_task(params1, rng):
    from dataclasses import replace
    customer = pvas.keygen_customer(params1, rng)
    user = pvas.keygen_user(params1, rng)
    cb, hs, rk = pvas.sig_enc(params1, user, customer.public, b"N1", [5], rng)
    st = sigma.statement_for(params1, b"N1", customer.public, user.public, cb, hs, rk)
    proof = sigma.prove(st, sigma.witness_for(user, [5], cb, hs), rng)
    assert not sigma.verify_pk(replace(st, N=b"N2"), proof)


def test_simulator_transcripts_verify(honest):
    st, _, _ = honest
    rng = Rng(99)
    for _ in range(5):
        c = gm.random_scalar(rng)
        sim = sigma.simulate(st, c, rng)
        assert sigma.check_equations(st, sim.commitments, c, sim.responses)
