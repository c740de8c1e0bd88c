import pytest

from faircrowd import contract as ct
from faircrowd import groupmath as gm
from fuzzing import run_sequence

A = gm.hash_to_g2(b"A")
K = {u: gm.hash_to_g2(u.encode()) for u in ("u1", "u2", "u3", "u4", "mallory")}
SIG = gm.hash_to_g1(b"s")
T = (2, 4, 6, 8)


def fresh(cust=100, users=("u1", "u2", "u3"), user_funds=20, n_min=1):
    return ct.Contract(ct.Ledger({"C": cust, **{u: user_funds for u in users}}), n_min)


def setup_claimed(users=("u1", "u2", "u3"), deposit=6, reward=100):
    c = fresh(users=users)
    c.create("C", b"N", b"t", A, reward, T, 1)
    for u in users:
        c.accept(u, b"N", deposit, K[u], 2)
    c.claim(b"N", 4)
    return c


def upload(c, u, now=5, ok=True, key=None):
    c.upload(u, b"N", SIG, A, A, ok, now, public_key=key or K[u])


def test_create_examples():
    c = fresh(cust=5)
    with pytest.raises(ct.InsufficientFunds):
        c.create("C", b"N", b"t", A, 10, T, 1)
    c = fresh()
    c.create("C", b"N", b"t", A, 10, T, 2)  # now == T1 is allowed
    assert c.state_of(b"N") is ct.TaskState.CREATED and c.tasks[b"N"].accept == 0
    with pytest.raises(ct.WrongState):
        c.create("C", b"N", b"t", A, 10, T, 2)
    with pytest.raises(ct.TooLate):
        c.create("C", b"M", b"t", A, 10, T, 3)
    with pytest.raises(ct.InvalidSchedule):
        c.create("C", b"M", b"t", A, 10, (2, 2, 3, 4), 1)


def test_accept_examples():
    c = fresh()
    c.create("C", b"N", b"t", A, 10, T, 1)
    with pytest.raises(ct.NonpositiveDeposit):
        c.accept("u1", b"N", 0, K["u1"], 2)
    with pytest.raises(ct.OutOfWindow):
        c.accept("u1", b"N", 5, K["u1"], 5)
    c.accept("u1", b"N", 5, K["u1"], 2)
    assert c.tasks[b"N"].accept == 1
    with pytest.raises(ct.AlreadyAccepted):
        c.accept("u1", b"N", 5, K["u1"], 3)
    with pytest.raises(ct.InsufficientFunds):
        c.accept("u2", b"N", 50, K["u2"], 3)


def test_claim_examples():
    c = fresh(n_min=2)
    c.create("C", b"N", b"t", A, 10, T, 1)
    c.accept("u1", b"N", 5, K["u1"], 2)
    with pytest.raises(ct.Unfulfillable):
        c.claim(b"N", 4)
    c.accept("u2", b"N", 5, K["u2"], 3)
    with pytest.raises(ct.OutOfWindow):
        c.claim(b"N", 3)
    c.claim(b"N", 4)
    assert c.state_of(b"N") is ct.TaskState.CLAIMED


def test_upload_examples():
    c = setup_claimed()
    with pytest.raises(ct.NotAccepted):
        c.upload("mallory", b"N", SIG, A, A, True, 5, public_key=K["mallory"])
    with pytest.raises(ct.NotAccepted):
        upload(c, "u1", key=K["mallory"])
    with pytest.raises(ct.InvalidProof):
        upload(c, "u1", ok=False)
    before = c.ledger["u1"]
    upload(c, "u1")
    assert c.ledger["u1"] == before + 6
    with pytest.raises(ct.AlreadyUploaded):
        upload(c, "u1")
    with pytest.raises(ct.OutOfWindow):
        upload(c, "u2", now=7)


def test_reward_equal_split_four():
    users = ("u1", "u2", "u3", "u4")
    c = setup_claimed(users)
    for u in users:
        upload(c, u)
    before = c.ledger.snapshot()
    c.reward(b"N", 6)
    assert all(c.ledger[u] - before[u] == 25 for u in users)
    assert c.state_of(b"N") is ct.TaskState.FINISHED
    assert c.escrow_balance(b"N") == 0


def test_reward_remainder_and_mismatch():
    c = setup_claimed()
    for u in ("u1", "u2", "u3"):
        upload(c, u)
    assert ct.equal_split(100, ["u3", "u1", "u2"]) == {"u1": 34, "u2": 33, "u3": 33}
    with pytest.raises(ct.SharesMismatch):
        c.reward(b"N", 6, {"u1": 33, "u2": 33, "u3": 33})
    with pytest.raises(ct.OutOfWindow):
        c.reward(b"N", 5)
    c.reward(b"N", 6, {"u1": 34, "u2": 33, "u3": 33})


def test_penalty_redistributes_forfeit():
    c = setup_claimed(deposit=6)
    upload(c, "u1")
    upload(c, "u2")
    before = c.ledger.snapshot()
    c.penalty(b"N", 6)
    assert c.ledger["u1"] - before["u1"] == 3 and c.ledger["u2"] - before["u2"] == 3
    assert c.state_of(b"N") is ct.TaskState.ABORTED
    with pytest.raises(ct.TooEarly):
        c.timer(b"N", 8)
    c.timer(b"N", 9)
    assert c.ledger["C"] == 100  # reward came back, net zero
    assert c.escrow_balance(b"N") == 0


def test_penalty_remainder():
    assert ct.equal_split(7, ["b", "a"]) == {"a": 4, "b": 3}


def test_penalty_with_no_reporters_pays_customer_at_timer():
    c = setup_claimed(deposit=6)
    c.penalty(b"N", 6)
    c.timer(b"N", 9)
    assert c.ledger["C"] == 100 + 18
    assert all(c.ledger[u] == 14 for u in ("u1", "u2", "u3"))


def test_timer_on_finished_is_wrong_state():
    c = setup_claimed(users=("u1",))
    upload(c, "u1")
    c.reward(b"N", 6)
    with pytest.raises(ct.WrongState):
        c.timer(b"N", 9)


def test_unfulfillable_refund_path():
    c = fresh(n_min=2)
    c.create("C", b"N", b"t", A, 50, T, 1)
    c.accept("u1", b"N", 5, K["u1"], 2)
    fired = c.tick(4)
    assert fired == [("claim", b"N", "Unfulfillable")]
    c.tick(6)
    assert c.state_of(b"N") is ct.TaskState.ABORTED and c.ledger["u1"] == 20
    c.tick(9)
    assert c.state_of(b"N") is ct.TaskState.CLOSED and c.ledger["C"] == 100


def test_customer_cannot_cancel():
    c = setup_claimed()
    for op in (lambda: c.timer(b"N", 5), lambda: c.refund_unfulfilled(b"N", 6)):
        with pytest.raises(ct.WrongState):
            op()


def test_codec_round_trip():
    c = setup_claimed()
    upload(c, "u1")
    data = ct.codec.encode(c)
    back = ct.codec.decode(data, ct.Contract)
    assert ct.codec.encode(back) == data


@pytest.mark.parametrize("seed", range(100))
def test_fuzzed_sequences_hold_invariants(seed):
    run_sequence(seed)


def test_fuzzer_reaches_every_edge(monkeypatch):
    edges = set()
    orig = ct.Contract._move

    def spy(self, rec, op, actor, now, new, transfers=()):
        edges.add((rec.state, new))
        return orig(self, rec, op, actor, now, new, transfers)

    monkeypatch.setattr(ct.Contract, "_move", spy)
    for seed in range(300):
        run_sequence(seed)
    assert edges == set(ct.ALLOWED_TRANSITIONS)
