"""
Command line: exit codes, stdout summaries and output files.
"""

import argparse
import dataclasses
import json

import pytest
import yaml

from src.Constants import *
from src.protocol.Ledger import Ledger, read_jsonl, write_jsonl
from src.scripts.UniqueIdSim import main
from src.utils.Parsers import parse_arguments, parse_sweep

SCENARIO = {
    SEED: 5,
    EPOCHS: 4,
    CITIES: [{CITY_ID: "default", GENESIS_VERIFIERS: 10, ARRIVAL_RATE: 5}],
    PROTOCOL: {VERIFIER_TRUST_THRESHOLD: 2, SPONSOR_QUOTA: 1_000_000},
    BIOMETRIC: {TAU: 0.8},
}


def _config(tmp_path, name: str = "scenario.yaml", **overrides) -> str:
    path = tmp_path / name
    path.write_text(yaml.safe_dump({**SCENARIO, **overrides}))
    return str(path)


def _summary(capsys) -> dict:
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


@pytest.fixture
def ledger_path(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "-c", _config(tmp_path), "--out", str(out)]) == EXIT_OK
    capsys.readouterr()
    return out / LEDGER_FILE


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "-c", _config(tmp_path), "--out", str(out), "--epochs", "2"]) == EXIT_OK
    summary = _summary(capsys)
    report = json.loads((out / REPORT_FILE).read_text())
    assert summary['state_hash'] == report['state_hash']
    assert report['epochs'] == 2
    assert summary['verified'] == report['final']['verified']


def test_verify_accepts_an_intact_ledger(ledger_path, capsys):
    assert main(["verify", "--ledger", str(ledger_path)]) == EXIT_OK
    summary = _summary(capsys)
    report = json.loads((ledger_path.parent / REPORT_FILE).read_text())
    assert summary == {'ok': True, 'height': report['height'], 'state_hash': report['state_hash']}


def test_verify_reports_the_first_tampered_height(ledger_path, capsys):
    events, _ = read_jsonl(str(ledger_path))
    events[4] = dataclasses.replace(events[4], epoch=events[4].epoch + 1)
    write_jsonl(events, str(ledger_path))
    assert main(["verify", "--ledger", str(ledger_path)]) == EXIT_FAILURE
    assert _summary(capsys) == {'ok': False, 'height': 5}


def test_verify_reports_a_truncated_line(ledger_path, capsys):
    raw = ledger_path.read_bytes()
    ledger_path.write_bytes(raw[:-10])
    height = raw.count(b"\n")
    assert main(["verify", "--ledger", str(ledger_path)]) == EXIT_FAILURE
    assert _summary(capsys) == {'ok': False, 'height': height}


def test_verify_replays_the_chain(tmp_path, capsys):
    ledger = Ledger()
    ledger.append(CERTIFICATE_ISSUED, {'user': "aa" * 32, 'verifier': "bb" * 32}, 0)
    path = tmp_path / LEDGER_FILE
    write_jsonl(ledger.events, str(path))
    assert main(["verify", "--ledger", str(path)]) == EXIT_FAILURE
    assert _summary(capsys) == {'ok': False, 'height': 1}


def test_usage_errors(tmp_path, capsys):
    assert main(["verify", "--ledger", str(tmp_path / "missing.jsonl")]) == EXIT_USAGE
    assert main(["run", "-c", str(tmp_path / "missing.yaml")]) == EXIT_USAGE
    assert main(["run", "-c", _config(tmp_path, cities=[{GENESIS_VERIFIERS: 3}])]) == EXIT_USAGE
    assert main(["attack", "-c", _config(tmp_path)]) == EXIT_USAGE
    bad = tmp_path / "list.yaml"
    bad.write_text("- 1\n- 2\n")
    assert main(["run", "-c", str(bad)]) == EXIT_USAGE
    assert capsys.readouterr().out == ""


def test_attack_sweep_writes_frontier(tmp_path, capsys):
    config = _config(tmp_path, "attack.yaml", adversary={
        STRATEGY: "FakeIdentityFactory",
        CORRUPT_COUNT: 5,
        ATTEMPTS: 500,
        GRIND: False,
    }, cities=[{CITY_ID: "default", GENESIS_VERIFIERS: 10, ARRIVAL_RATE: 0}])
    out = tmp_path / "attack"
    assert main(["attack", "-c", config, "--sweep", "3..4", "--trials", "20", "--out", str(out)]) == EXIT_OK
    summary = _summary(capsys)
    assert [p['k'] for p in summary['frontier']] == [3, 4]
    assert (out / FRONTIER_FILE).read_text().splitlines()[0] == "k,success_prob,expected_cost"
    for k in (3, 4):
        report = json.loads((out / f"attack-k{k}.json").read_text())
        assert report['collusion_size'] == k
        assert report['attempts'] == 20


def test_calibrate_writes_a_fixture(tmp_path, capsys):
    out = tmp_path / "calibration"
    assert main(["calibrate", "--pairs", "2000", "--seed", "3", "--out", str(out)]) == EXIT_OK
    summary = _summary(capsys)
    fixture = json.loads((out / CALIBRATION_FILE).read_text())
    assert fixture == summary
    assert fixture['n_pairs'] == 2000
    assert fixture['seed'] == 3
    assert fixture['tau'] > 0.0


def test_parse_sweep():
    assert parse_sweep("3..10") == (3, 10)
    assert parse_sweep("4..4") == (4, 4)
    for value in ("10..3", "x..3", "3", "-1..2"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_sweep(value)


def test_parser_rejects_bad_arguments():
    with pytest.raises(SystemExit) as e:
        parse_arguments(["attack", "-c", "x.yaml", "--sweep", "5..3"])
    assert e.value.code == EXIT_USAGE
    with pytest.raises(SystemExit):
        parse_arguments([])
    with pytest.raises(SystemExit):
        parse_arguments(["verify"])
    arguments = parse_arguments(["run", "-c", "x.yaml", "--seed", "9"])
    assert (arguments.command, arguments.config, arguments.seed, arguments.epochs) == ("run", "x.yaml", 9, None)
    assert arguments.out == DEFAULT_OUTPUT_FOLDER
