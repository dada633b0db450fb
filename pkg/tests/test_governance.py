"""
Three-layer governance: deterministic partitions, plurality elections,
representative retention and parameter proposals through every layer.
"""

import itertools
import json
from pathlib import Path

import numpy as np
import pytest

from src.Constants import *
from src.models.Community import Community, ProposalStatus, Vote
from src.protocol import Governance
from src.protocol.Replay import replay
from src.utils.Errors import (GovernanceError, LayersEmpty, NotPassed, NotWhitelisted, NoVotesCast, RejectedEvent,
                              TooFewVerified)
from tests.support import genesis_simulator

GOLDEN_DIR = Path(__file__).parent / "golden"

# 10 verifiers with 4 supporters each: 50 verified identities
SMALL_GOVERNMENT = {
    COMMUNITY_SIZE: [5, 10],
    LAYER2_SIZE: [2, 3],
    LAYER3_SIZE: [1, 2],
}


def _members(prefix: str, n: int):
    return [f"{prefix}{i:03d}" for i in range(n)]


def _small_government():
    return genesis_simulator(verifiers=10, threshold=5, protocol=SMALL_GOVERNMENT)


def _seat_everyone(sim, epoch: int):
    """Form all three layers; every group votes unanimously for its first member."""
    engine = sim.engine
    Governance.form_communities(engine, epoch)
    for layer in Governance.LAYERS:
        if layer > 1:
            Governance.form_layer(engine, layer, epoch)
        for group in sim.state.governance.layer_groups(layer):
            Governance.cast_ballots(engine, group.community_id, {pk: group.members[0] for pk in group.members}, epoch)
            Governance.elect_representative(engine, group.community_id, epoch)


# ===================================================================
# Partitions
# ===================================================================

def test_single_block_golden():
    golden = json.loads((GOLDEN_DIR / "partition_sizes.json").read_text())
    for case in golden["cases"]:
        groups = Governance.partition([_members("p", case["n"])], (golden["min_size"], golden["max_size"]))
        assert [len(g) for g in groups] == case["sizes"]


def test_small_cities_are_pooled():
    blocks = [_members("a", 120), _members("b", 30), _members("c", 25)]
    groups = Governance.partition(blocks, (50, 100))
    assert [len(g) for g in groups] == [60, 60, 55]
    assert groups[2] == blocks[1] + blocks[2]


def test_small_pool_joins_the_last_group():
    blocks = [_members("a", 120), _members("b", 30)]
    groups = Governance.partition(blocks, (50, 100))
    assert [len(g) for g in groups] == [60, 90]
    assert groups[1][-30:] == blocks[1]


def test_too_few_members():
    with pytest.raises(TooFewVerified):
        Governance.partition([_members("a", 30)], (50, 100))
    with pytest.raises(TooFewVerified):
        Governance.partition([], (50, 100))
    assert Governance.partition([_members("a", 30)], (50, 100), allow_undersized=True) == [_members("a", 30)]


def test_partition_is_order_preserving():
    blocks = [_members("a", 250)]
    groups = Governance.partition(blocks, (50, 100))
    assert list(itertools.chain.from_iterable(groups)) == blocks[0]


def test_layer_bounds_are_respected():
    assert [len(g) for g in Governance.partition([_members("r", 41)], (30, 40), allow_undersized=True)] == [41]
    for n in range(31, 40):
        assert [len(g) for g in Governance.partition([_members("r", n)], (20, 30), allow_undersized=True)] == [n]
    for n in range(30, 200):
        sizes = [len(g) for g in Governance.partition([_members("r", n)], (30, 40))]
        assert min(sizes) >= 30
        assert max(sizes[:-1], default=30) <= 40


# ===================================================================
# Elections
# ===================================================================

def test_plurality_ties_go_to_lowest_key():
    group = Community(community_id=1, members=["a", "b", "c", "d"],
                      ballots={"a": "b", "b": "a", "c": "c", "d": "d"})
    assert Governance.plurality_winner(group) == ("a", 1)
    group.ballots["c"] = "d"
    assert Governance.plurality_winner(group) == ("d", 2)
    with pytest.raises(NoVotesCast):
        Governance.plurality_winner(Community(community_id=2, members=["a"]))


def test_retention_threshold():
    assert Governance.retained_support_required(10, 8000) == 8
    assert Governance.retained_support_required(7, 8000) == 6
    group = Community(community_id=1, members=["a"], representative="a", election_support=10)
    assert Governance.check_representative_validity(group, 8000, current_support=8)
    assert not Governance.check_representative_validity(group, 8000, current_support=7)
    assert not Governance.check_representative_validity(Community(community_id=2, members=["a"]), 8000)


def test_layers_are_formed_over_representatives():
    sim = _small_government()
    _seat_everyone(sim, 1)
    governance = sim.state.governance
    assert [len(g.members) for g in governance.layer_groups(1)] == [10] * 5
    assert [len(g.members) for g in governance.layer_groups(2)] == [3, 2]
    assert [len(g.members) for g in governance.layer_groups(3)] == [2]
    assert sorted(pk for g in governance.layer_groups(2) for pk in g.members) == \
        governance.layer_representatives(1)
    assert len(governance.layer_representatives(3)) == 1
    assert governance.term == 1


def test_layer_needs_representatives_below():
    sim = _small_government()
    Governance.form_communities(sim.engine, 1)
    with pytest.raises(LayersEmpty):
        Governance.form_layer(sim.engine, 2, 1)
    with pytest.raises(GovernanceError):
        Governance.form_layer(sim.engine, 1, 1)


def test_ballots_stay_inside_the_group():
    sim = _small_government()
    first, second = Governance.form_communities(sim.engine, 1)[:2]
    height = sim.engine.ledger.height
    with pytest.raises(RejectedEvent):
        Governance.cast_ballots(sim.engine, first.community_id, {second.members[0]: first.members[0]}, 1)
    assert sim.engine.ledger.height == height
    assert first.ballots == {}


def test_representative_losing_support_is_invalidated():
    sim = _small_government()
    _seat_everyone(sim, 1)
    group = sim.state.governance.layer_groups(1)[0]
    rep, rival = group.members[0], group.members[1]
    assert group.election_support == 10
    for voter in group.members[2:4]:
        Governance.change_ballot(sim.engine, group.community_id, voter, rival, 2)
    assert not Governance.invalidate_representative(sim.engine, group.community_id, 2)
    assert group.representative == rep
    Governance.change_ballot(sim.engine, group.community_id, group.members[4], rival, 2)
    assert Governance.invalidate_representative(sim.engine, group.community_id, 2)
    assert group.representative is None
    assert Governance.elect_representative(sim.engine, group.community_id, 3) == rep
    assert group.election_support == 7


# ===================================================================
# Proposals
# ===================================================================

def test_tally_golden():
    golden = json.loads((GOLDEN_DIR / "tally_fixtures.json").read_text())
    for case in golden["cases"]:
        counts = [tuple(c) for c in case["counts"]]
        assert Governance.tally_counts(counts, golden["thresholds_bps"]).value == case["status"]


def test_more_approvals_never_fail_a_passed_tally():
    thresholds = (5100, 6000, 6600)
    for approvals in itertools.product(range(6), repeat=3):
        counts = [(a, 5 - a, 0) for a in approvals]
        if Governance.tally_counts(counts, thresholds) != ProposalStatus.PASSED:
            continue
        for layer in range(3):
            if approvals[layer] < 5:
                better = list(counts)
                better[layer] = (approvals[layer] + 1, 4 - approvals[layer], 0)
                assert Governance.tally_counts(better, thresholds) == ProposalStatus.PASSED


def test_lower_thresholds_keep_a_passed_tally_passed():
    rng = np.random.default_rng(23)
    passes = 0
    for _ in range(1000):
        counts = [tuple(int(c) for c in rng.integers(0, 50, size=3)) for _ in range(3)]
        counts = [(a + 1, r, s) for a, r, s in counts]
        thresholds = tuple(int(t) for t in rng.integers(1, 10_001, size=3))
        lowered = tuple(int(rng.integers(1, t + 1)) for t in thresholds)
        if Governance.tally_counts(counts, thresholds) == ProposalStatus.PASSED:
            passes += 1
            assert Governance.tally_counts(counts, lowered) == ProposalStatus.PASSED
        if Governance.tally_counts(counts, lowered) == ProposalStatus.FAILED:
            assert Governance.tally_counts(counts, thresholds) == ProposalStatus.FAILED
    assert passes > 0


def test_empty_layer_cannot_be_counted():
    with pytest.raises(LayersEmpty):
        Governance.tally_counts([(1, 0, 0), (0, 0, 0), (1, 0, 0)], (5000, 5000, 5000))
    with pytest.raises(GovernanceError):
        Governance.tally_counts([(1, 0, 0)], (5000, 5000, 5000))


def test_passed_proposal_applies_at_the_next_epoch():
    sim = _small_government()
    _seat_everyone(sim, 1)
    governance = sim.state.governance
    proposer = governance.layer_representatives(3)[0]
    proposal = Governance.open_proposal(sim.engine, proposer, CERTS_REQUIRED, 4, CRITICAL, 1)
    assert proposal.close_epoch == 3
    assert proposal.thresholds == (6800, 8500, 9500)
    for layer in Governance.LAYERS:
        votes = {pk: Vote.APPROVE for pk in governance.layer_representatives(layer)}
        Governance.cast_proposal_votes(sim.engine, proposal.proposal_id, layer, votes, 2)
    with pytest.raises(GovernanceError):
        Governance.tally(sim.engine, proposal.proposal_id, 2)
    assert Governance.tally(sim.engine, proposal.proposal_id, 3) == ProposalStatus.PASSED
    assert proposal.layer_counts == [[5, 0, 0], [2, 0, 0], [1, 0, 0]]
    assert Governance.apply_pending_changes(sim.engine, 3) == []
    assert sim.engine.params.certs_required == 3
    assert Governance.apply_pending_changes(sim.engine, 4) == [proposal.proposal_id]
    assert sim.engine.params.certs_required == 4
    assert proposal.status == ProposalStatus.APPLIED
    with pytest.raises(NotPassed):
        Governance.apply_parameter_change(sim.engine, proposal.proposal_id, 5)
    assert replay(sim.engine.ledger.events).state_hash() == sim.state.state_hash()


def test_non_voters_count_against():
    sim = _small_government()
    _seat_everyone(sim, 1)
    governance = sim.state.governance
    proposer = governance.layer_representatives(3)[0]
    proposal = Governance.open_proposal(sim.engine, proposer, RECHECK_QUOTA, 5, ROUTINE, 1)
    # layer 1 approves 4 of 5, layer 2 stays home
    approving = governance.layer_representatives(1)[:4]
    Governance.cast_proposal_votes(sim.engine, proposal.proposal_id, 1, {pk: Vote.APPROVE for pk in approving}, 1)
    Governance.cast_proposal_votes(sim.engine, proposal.proposal_id, 3, {proposer: Vote.APPROVE}, 1)
    assert Governance.tally(sim.engine, proposal.proposal_id, 3) == ProposalStatus.FAILED
    assert proposal.layer_counts == [[4, 0, 1], [0, 0, 2], [1, 0, 0]]
    with pytest.raises(NotPassed):
        Governance.apply_parameter_change(sim.engine, proposal.proposal_id, 4)
    assert sim.engine.params.recheck_quota == 2


def test_proposal_rules():
    sim = _small_government()
    _seat_everyone(sim, 1)
    governance = sim.state.governance
    proposer = governance.layer_representatives(3)[0]
    outsider = next(pk for pk in sorted(sim.state.registry.verified) if pk not in governance.layer_representatives(3))
    with pytest.raises(NotWhitelisted):
        Governance.open_proposal(sim.engine, proposer, MAX_REASSIGNMENTS, 5, CRITICAL, 1)
    with pytest.raises(GovernanceError):
        Governance.open_proposal(sim.engine, proposer, CERTS_REQUIRED, 4, "urgent", 1)
    with pytest.raises(GovernanceError):
        Governance.open_proposal(sim.engine, outsider, CERTS_REQUIRED, 4, CRITICAL, 1)
    proposal = Governance.open_proposal(sim.engine, proposer, CERTS_REQUIRED, 4, CRITICAL, 1)
    with pytest.raises(RejectedEvent):
        Governance.cast_proposal_votes(sim.engine, proposal.proposal_id, 3, {outsider: Vote.APPROVE}, 1)
    with pytest.raises(RejectedEvent):
        Governance.cast_proposal_votes(sim.engine, proposal.proposal_id, 3, {proposer: Vote.APPROVE}, 3)
