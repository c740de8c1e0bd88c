import json

import pytest

from faircrowd import cli


def test_keygen(tmp_path, capsys):
    out = tmp_path / "k.json"
    assert cli.main(["keygen", "--role", "user", "--count", "3", "--seed", "2", "--out", str(out)]) == 0
    keys = json.loads(out.read_text())["keys"]
    assert len({k["identity"] for k in keys}) == 3 and "secret" not in keys[0]
    assert cli.main(["keygen", "--seed", "2", "--with-secret", "--out", str(out)]) == 0
    assert len(json.loads(out.read_text())["keys"][0]["secret"]) == 64


def test_simulate_default_and_replay(tmp_path, capsys):
    log, out = tmp_path / "chain.log", tmp_path / "r.json"
    assert cli.main(["simulate", "--log", str(log), "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["passed"] and report["scenario"]["n"] == 40
    capsys.readouterr()
    assert cli.main(["replay", str(log), "--out", str(tmp_path / "d.json")]) == 0
    digest = json.loads((tmp_path / "d.json").read_text())["digest"]
    assert cli.main(["replay", str(log), "--expect", digest]) == 0
    assert cli.main(["replay", str(log), "--expect", "0" * 64]) == 1


def test_simulate_overrides_and_free_rider(tmp_path, capsys):
    sc = tmp_path / "s.yaml"
    sc.write_text("n: 3\ndeviations:\n  - {actor: user, index: 2, action: skip_upload}\n")
    assert cli.main(["simulate", "--scenario", str(sc), "--seed", "5"]) == 0
    text = capsys.readouterr().out
    assert "path penalty" in text and "RESULT PASS" in text
    assert cli.main(["simulate", "--scenario", str(sc), "--n", "5", "--l", "2"]) == 0


def test_simulate_bad_scenario(tmp_path, capsys):
    sc = tmp_path / "s.yaml"
    sc.write_text("n: 3\nwat: 1\n")
    assert cli.main(["simulate", "--scenario", str(sc)]) == 2
    assert "wat: unknown field" in capsys.readouterr().err


def test_attack_suite(capsys):
    assert cli.main(["attack-suite", "--seed", "3"]) == 0
    text = capsys.readouterr().out
    assert text.count("PASS ") == 7 and "SUITE PASS" in text


def test_ingest(tmp_path, capsys):
    p = tmp_path / "r.csv"
    p.write_text("pm25\n12.5\n3\n")
    assert cli.main(["ingest", str(p)]) == 0
    assert "125 30" in capsys.readouterr().out
    p.write_text("pm25\n-2\n")
    assert cli.main(["ingest", str(p)]) == 2
    assert "BoundsExceeded" in capsys.readouterr().err
    p.write_text("pm25\nfoo\n")
    assert cli.main(["ingest", str(p)]) == 2
    assert "NonNumericCell" in capsys.readouterr().err


def test_bench_small(tmp_path, capsys):
    out = tmp_path / "b.json"
    rc = cli.main(["bench", "--ns", "2,4,8", "--reps", "2", "--out", str(out)])
    data = json.loads(out.read_text())
    assert rc in (0, 1)
    assert len(data["server_s"]) == 3 and data["reference_ms"]["user upload"] == 198
    assert cli.main(["bench", "--ns", "8,4"]) == 2


def test_replay_garbage(tmp_path, capsys):
    p = tmp_path / "bad.log"
    p.write_text("genesis zz\n")
    assert cli.main(["replay", str(p)]) == 1


def test_help_lists_subcommands(capsys):
    with pytest.raises(SystemExit):
        cli.main(["--help"])
    text = capsys.readouterr().out
    for cmd in ("keygen", "simulate", "attack-suite", "bench", "ingest", "replay"):
        assert cmd in text
