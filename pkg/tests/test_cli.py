import json
from importlib import resources

import pytest
from click.testing import CliRunner

from securezone.cli import cli

DEMO = str(resources.files("securezone") / "data" / "demo_scenario.json")
T = 1_700_000_000


@pytest.fixture
def run(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    runner = CliRunner()

    def invoke(*args):
        return runner.invoke(cli, [str(a) for a in args], catch_exceptions=False)
    return invoke


@pytest.fixture
def ceremony(run):
    assert run("ca", "init", "--seed", 42, "--attr", "officer", "--attr", "rangemaster").exit_code == 0
    assert run("sza", "register", "--ca", "ca.json", "--id", 1, "--policy", "officer or rangemaster",
               "--seed", 1, "--out", "sza.json", "--cert-out", "sza.crt").exit_code == 0
    assert run("firearm", "register", "--attr", "officer", "--expires", 2_000_000_000,
               "--firearm-id", 5, "--user-id", 9, "--seed", 2, "--out", "f.tpd").exit_code == 0
    assert run("zone", "broadcast", "--sza", "sza.json", "--at", T, "--seed", 3, "--out", "m.bin").exit_code == 0
    return run


def test_ca_init_deterministic(run, tmp_path):
    run("ca", "init", "--seed", 42, "--out", "a.json")
    run("ca", "init", "--seed", 42, "--out", "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_ca_init_prints_fingerprint(run):
    result = run("ca", "init", "--seed", 1)
    assert result.stdout.startswith("wrote ca.json fingerprint=")


def test_inspect_bundle_round_trip(ceremony):
    out = json.loads(ceremony("inspect", "f.tpd").stdout)
    assert out["type"] == "bundle"
    assert (out["firearm_id"], out["user_id"], out["et"], out["attributes"]) == (5, 9, 2_000_000_000, ["officer"])


def test_inspect_other_files(ceremony):
    assert json.loads(ceremony("inspect", "sza.crt").stdout)["sza_id"] == 1
    assert json.loads(ceremony("inspect", "m.bin").stdout)["policy"] == "1 of (officer, rangemaster)"
    assert json.loads(ceremony("inspect", "ca.json").stdout)["registered_szas"] == [1]
    assert json.loads(ceremony("inspect", "sza.json").stdout)["type"] == "sza"


def test_unknown_attribute_exit_3(ceremony):
    result = ceremony("firearm", "register", "--attr", "pirate", "--expires", 2_000_000_000)
    assert result.exit_code == 3
    err = json.loads(result.stderr.strip().splitlines()[-1])
    assert err["error"] == "UnknownAttribute" and "pirate" in err["message"]
    assert result.stdout == ""


def test_duplicate_sza_exit_3(ceremony):
    result = ceremony("sza", "register", "--ca", "ca.json", "--id", 1, "--policy", "officer", "--out", "x.json")
    assert result.exit_code == 3 and "DuplicateSzaId" in result.stderr


def test_usage_error_exit_2(run):
    assert run("firearm", "assess").exit_code == 2
    assert run("bogus").exit_code == 2


def test_broadcast_assess_authorized(ceremony):
    result = ceremony("firearm", "assess", "--bundle", "f.tpd", "--message", "m.bin", "--at", T)
    assert result.exit_code == 0
    assert result.stdout.split()[0] == "AUTHORIZED"
    assert len(result.stdout.splitlines()) == 1


def test_replay_an_hour_later(ceremony):
    result = ceremony("firearm", "assess", "--bundle", "f.tpd", "--message", "m.bin", "--at", T + 3600)
    assert result.exit_code == 1 and result.stdout.split()[0] == "TOKEN_MISMATCH"


def test_zero_byte_message(ceremony, tmp_path):
    (tmp_path / "empty.bin").write_bytes(b"")
    result = ceremony("firearm", "assess", "--bundle", "f.tpd", "--message", "empty.bin", "--at", T)
    assert result.exit_code == 1 and result.stdout.split()[0] == "MALFORMED"


def test_expired_bundle(ceremony):
    ceremony("firearm", "register", "--attr", "officer", "--expires", T - 1, "--out", "old.tpd")
    result = ceremony("firearm", "assess", "--bundle", "old.tpd", "--message", "m.bin", "--at", T)
    assert result.stdout.split()[0] == "KEY_EXPIRED"


def test_tamper_then_assess(ceremony, tmp_path):
    size = len((tmp_path / "m.bin").read_bytes())
    for n in [7, 0, 4, 30, size // 2, size - 1]:
        assert ceremony("tamper", "m.bin", "--byte", n, "--out", "t.bin").exit_code == 0
        result = ceremony("firearm", "assess", "--bundle", "f.tpd", "--message", "t.bin", "--at", T)
        assert result.exit_code == 1 and not result.stdout.startswith("AUTHORIZED")


def test_tamper_in_place_and_bounds(ceremony, tmp_path):
    before = (tmp_path / "m.bin").read_bytes()
    ceremony("tamper", "m.bin", "--byte", 7, "--xor", 1)
    after = (tmp_path / "m.bin").read_bytes()
    assert after[7] == before[7] ^ 1 and after[:7] == before[:7] and after[8:] == before[8:]
    assert ceremony("tamper", "m.bin", "--byte", 10**6).exit_code == 2


def test_simulate_matches_golden(run, tmp_path):
    from conftest import FIXTURES
    result = run("simulate", "--scenario", DEMO, "--out", "log.jsonl", "--json")
    assert result.exit_code == 0
    golden = json.loads((FIXTURES / "demo_summary.golden.json").read_text())
    assert json.loads(result.stdout) == golden
    lines = (tmp_path / "log.jsonl").read_text().splitlines()
    assert json.loads(lines[0])["szsim"] == 1
    assert json.loads(lines[-1])["summary"] == golden


def test_simulate_twice_identical(run, tmp_path):
    run("simulate", "--scenario", DEMO, "--out", "a.jsonl")
    run("simulate", "--scenario", DEMO, "--out", "b.jsonl")
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_simulate_bad_scenario(run, tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    result = run("simulate", "--scenario", "bad.json", "--out", "x.jsonl")
    assert result.exit_code == 3 and "ScenarioInvalid" in result.stderr


def test_help_lists_every_command(run):
    out = run("--help").stdout
    for cmd in ("ca", "sza", "firearm", "zone", "inspect", "simulate", "tamper"):
        assert cmd in out
    assert "assess" in run("firearm", "--help").stdout
    assert "--at" in run("zone", "broadcast", "--help").stdout
