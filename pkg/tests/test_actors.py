from dataclasses import replace
from decimal import Decimal
from fractions import Fraction

import pytest

from faircrowd import actors, pvas
from faircrowd.actors import DataSource, Deviation, Scenario


@pytest.fixture(scope="module")
def params2():
    return pvas.par_gen(256, 2, value_bound=2 ** 16)


def run(sc, params=None):
    return actors.run_scenario(sc, params)[0]


def test_honest_run(params2):
    r = run(Scenario(n=5, l=2, data=DataSource(max=500)), params2)
    assert r.passed and r.path == "reward" and r.verify is True
    assert r.result == r.expected


def test_single_user_zero_value():
    r = run(Scenario(n=1, l=1, data=DataSource("values", values=((0,),))))
    assert r.result == [0] and r.verify is True and r.passed


def test_weights_applied():
    sc = Scenario(n=3, l=1, weights=(1, 2, 3), data=DataSource("values", values=((10,), (20,), (30,))))
    r = run(sc)
    assert r.result == [140]
    assert r.average == [str(Fraction(140, 6))]


def test_free_rider_penalty_balances():
    sc = Scenario(n=3, l=1, deposit=10, reward=90, deviations=(Deviation("user", "skip_upload", 1),))
    r = run(sc)
    assert r.path == "penalty" and r.passed
    inv = {v: k for k, v in r.names.items()}
    delta = {name: r.ledger_after[inv[name]] - r.ledger_before[inv[name]] for name in r.names.values()}
    assert delta["user-1"] == -10
    assert delta["user-0"] == 5 and delta["user-2"] == 5
    assert delta["customer"] == 0
    assert r.reporters == 2 and r.result == r.expected


def test_sybil_rejected():
    r = run(Scenario(n=3, deviations=(Deviation("user", "sybil_upload", 0),)))
    assert ("REPORT", "sybil-of-user-0", "NotAccepted") in [(k, w, why) for _, k, w, why in r.rejections]
    assert r.passed


def test_bad_proof_rejected_then_honest_accepted():
    r = run(Scenario(n=2, deviations=(Deviation("user", "bad_proof", 0),)))
    assert r.path == "reward" and r.passed
    assert [why for *_, why in r.rejections] == ["InvalidProof"]


def test_underfunded_customer():
    r = run(Scenario(n=2, reward=100, customer_funds=5))
    assert r.final_state == "INIT"
    assert ("CREATE", "customer", "InsufficientFunds") in [(k, w, why) for _, k, w, why in r.rejections]
    assert not r.passed


def test_unfulfillable_refund():
    r = run(Scenario(n=2, n_min=3))
    assert r.path == "refund" and r.final_state == "CLOSED"
    assert r.checks["conservation"].ok and r.checks["escrow_empty"].ok
    nonzero = lambda d: {k: v for k, v in d.items() if v}  # noqa: E731
    assert nonzero(r.ledger_after) == nonzero(r.ledger_before)


def test_schedule_validation():
    with pytest.raises(actors.ScenarioError):
        Scenario(schedule=(2, 2, 3, 4)).validate()
    with pytest.raises(actors.ScenarioError):
        Scenario(deviations=(Deviation("user", "teleport", 0),)).validate()
    with pytest.raises(actors.ScenarioError):
        Scenario(n=2, deviations=(Deviation("user", "skip_upload", 5),)).validate()


def test_same_seed_same_keys():
    a = actors.run_service_initialization(Scenario(n=3, seed=4))
    b = actors.run_service_initialization(Scenario(n=3, seed=4))
    assert [u.keys for u in a.users] == [u.keys for u in b.users]
    assert len({u.keys.public.serialize() for u in a.users}) == 3


def test_report_deterministic_except_timings():
    sc = Scenario(n=3, seed=9, deviations=(Deviation("user", "double_report", 1),))
    assert run(sc).canonical() == run(sc).canonical()


def test_server_sees_only_public_parts():
    _, world = actors.run_scenario(Scenario(n=3))
    assert world.server.seen
    for cb, hs, _ in world.server.seen:
        assert cb.r is None and hs.tau is None


def test_attack_suite_all_pass():
    results = actors.run_attack_suite(seed=1)
    assert set(results) == {"honest", "payment-escaping", "payment-reduction", "free-riding",
                            "double-reporting", "sybil", "server-tamper"}
    for name, (ok, report, outcome) in results.items():
        assert ok, (name, {k: c for k, c in report.checks.items() if not c.ok}, outcome)


def test_pm25_scenario_mean():
    sc = actors.load_scenario("builtin:pm25.yaml")
    r = run(sc)
    assert r.passed and r.verify is True
    mean = actors.csv_mean(sc, "pm25")
    assert Fraction(r.result[0], 40) == Fraction(mean * 10)
    assert Decimal(r.result[0]) / 40 == mean * 10


def test_yaml_diagnostics(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text("name: x\nn: 3\nbogus: 1\n")
    with pytest.raises(actors.ScenarioError, match=r"s\.yaml:3: bogus: unknown field"):
        actors.load_scenario(p)
    p.write_text("n: 3\nschedule: [5, 4, 3, 2]\n")
    with pytest.raises(actors.ScenarioError, match=r":2: schedule"):
        actors.load_scenario(p)
    p.write_text("n: three\n")
    with pytest.raises(actors.ScenarioError, match=r":1: n: expected an integer"):
        actors.load_scenario(p)
    p.write_text("n: [\n")
    with pytest.raises(actors.ScenarioError):
        actors.load_scenario(p)


def test_yaml_relative_csv(tmp_path):
    (tmp_path / "d.csv").write_text("v\n1.5\n2.5\n")
    p = tmp_path / "s.yaml"
    p.write_text("n: 2\ndata: {source: csv, path: d.csv, column: v, scale: 10}\n")
    sc = actors.load_scenario(p)
    r = run(sc)
    assert r.result == [40]
    assert replace(sc, n=2) == sc
