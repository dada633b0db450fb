"""
Whole-scenario runs: determinism, liveness under honest load, invitation
bounds, governance through the epoch loop and the files a run writes.
"""

import json
import time
from collections import Counter
from pathlib import Path

import pytest

from src.Constants import *
from src.protocol.Ledger import read_jsonl
from src.protocol.Replay import replay
from src.simulation.Scenario import run_scenario
from src.simulation.Simulator import Simulator
from src.utils.Parsers import load_scenario
from tests.support import TEST_POLICY, make_scenario

CONFIG_DIR = Path(__file__).parents[1] / "data" / "uniqueid_config"


def _honest_load(seed: int = 11, epochs: int = 10):
    """100 genesis identities and 100 invited newcomers arriving over four epochs."""
    return make_scenario(verifiers=10, threshold=10, seed=seed, epochs=epochs, arrivals=25.0, max_arrivals=100)


def test_same_seed_same_ledger():
    first = Simulator(_honest_load(epochs=6), TEST_POLICY).run()
    second = Simulator(_honest_load(epochs=6), TEST_POLICY).run()
    assert first.state_hash == second.state_hash
    assert [e.hash for e in first.ledger.events] == [e.hash for e in second.ledger.events]
    assert [m.to_dict() for m in first.metrics] == [m.to_dict() for m in second.metrics]


def test_seed_changes_the_run():
    first = Simulator(_honest_load(seed=1, epochs=3), TEST_POLICY).run()
    second = Simulator(_honest_load(seed=2, epochs=3), TEST_POLICY).run()
    assert first.state_hash != second.state_hash


def test_zero_epochs_is_genesis_only():
    result = Simulator(_honest_load(epochs=0), TEST_POLICY).run()
    assert result.metrics == []
    assert len(result.engine.state.registry.verified) == 100
    assert result.engine.state.epoch == 0


def test_honest_newcomers_get_verified():
    result = Simulator(_honest_load(), TEST_POLICY).run()
    last = result.metrics[-1]
    assert last.claims_total == 100
    assert last.verified >= 199
    assert last.turned_away == 0
    assert [m.epoch for m in result.metrics] == list(range(1, 11))


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(100))
def test_honest_newcomers_get_verified_for_every_seed(seed):
    result = Simulator(_honest_load(seed=seed), TEST_POLICY).run()
    assert result.metrics[-1].verified >= 199


@pytest.mark.slow
def test_desk_scale_run_finishes_within_a_minute():
    scenario = make_scenario(verifiers=10, threshold=10, epochs=100, arrivals=100.0, max_arrivals=10_000,
                             verify_replay=False)
    started = time.perf_counter()
    result = Simulator(scenario, TEST_POLICY).run()
    assert time.perf_counter() - started < 60.0
    assert len(result.metrics) == 100


def test_invitations_bound_growth():
    scenario = load_scenario(str(CONFIG_DIR / "invitation_only.yaml"), epochs=8)
    sim = Simulator(scenario, TEST_POLICY)
    result = sim.run()
    params = scenario.protocol
    invited = Counter()
    ever_verified = set()
    for event in result.ledger.events:
        if event.kind == IDENTITY_CLAIMED:
            gate = event.payload['gate']
            assert gate['kind'] == GATE_INVITATION
            invited[gate['inviter']] += 1
        elif event.kind in (IDENTITY_VERIFIED, GENESIS_IDENTITY_REGISTERED):
            ever_verified.add(event.payload['pk'])
    assert invited
    assert max(invited.values()) <= params.invitations_per_user
    assert set(invited) <= ever_verified
    claims = result.engine.state.registry.claims_total
    assert claims == sum(invited.values())
    assert claims <= params.invitations_per_user * len(ever_verified)


def test_scheduled_proposal_takes_effect():
    scenario = make_scenario(verifiers=10, threshold=5, epochs=5, protocol={
        COMMUNITY_SIZE: [5, 10],
        LAYER2_SIZE: [2, 3],
        LAYER3_SIZE: [1, 2],
    }, behaviour={
        GOVERNANCE_PARTICIPATION: 1.0,
        PROPOSAL_APPROVAL_RATE: 1.0,
        PROPOSALS: [{PROPOSAL_EPOCH: 2, PROPOSAL_PARAMETER: CERTS_REQUIRED, PROPOSAL_VALUE: 4,
                     PROPOSAL_IMPORTANCE: ROUTINE}],
    })
    result = Simulator(scenario, TEST_POLICY).run()
    assert [m.certs_required for m in result.metrics] == [3, 3, 3, 3, 4]
    assert result.metrics[0].communities == 5
    assert result.metrics[0].representatives == 5
    assert result.metrics[-1].proposals_passed == 1
    assert result.engine.params.certs_required == 4


def test_run_scenario_writes_replayable_files(tmp_path):
    run = run_scenario(_honest_load(epochs=4), str(tmp_path))
    for name in (LEDGER_FILE, METRICS_FILE, REPORT_FILE, REGISTRY_FILE):
        assert (tmp_path / name).is_file()
    events, malformed = read_jsonl(str(tmp_path / LEDGER_FILE))
    assert malformed is None
    assert len(events) == run.report['height']
    assert replay(events).state_hash() == run.report['state_hash']
    report = json.loads((tmp_path / REPORT_FILE).read_text())
    assert report['state_hash'] == run.result.state_hash
    assert report['attack'] is None
    assert report['match_policy'][TAU] == TEST_POLICY.tau
    lines = (tmp_path / METRICS_FILE).read_text().splitlines()
    assert len(lines) == 1 + 4
    assert lines[0].split(DELIMITER)[:2] == ['epoch', 'height']
    registry = json.loads((tmp_path / REGISTRY_FILE).read_text())
    assert len(registry['verifiers']) == 10
